use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, fmt_f64, parse_f64, read_text};
use crate::error::{DwdtError, Result};
use crate::geom::{Vec2, WeightedPointSet};

/// Reads `x y [w]` rows; a missing weight is zero.
pub fn read_points(path: &Path) -> Result<WeightedPointSet> {
    parse_points(&read_text(path)?, &path.display().to_string())
}

pub fn parse_points(text: &str, path: &str) -> Result<WeightedPointSet> {
    let (mut pos, mut w) = (Vec::new(), Vec::new());
    for (ln, l) in content_lines(text) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if !(2..=3).contains(&toks.len()) {
            return Err(DwdtError::parse(path, ln, format!("expected `x y [w]`, found {} values", toks.len())));
        }
        pos.push(Vec2::new(parse_f64(toks[0], path, ln)?, parse_f64(toks[1], path, ln)?));
        w.push(match toks.get(2) {
            Some(t) => parse_f64(t, path, ln)?,
            None => 0.0,
        });
    }
    WeightedPointSet::new(pos, w)
}

pub fn write_points(ps: &WeightedPointSet, path: &Path) -> Result<()> {
    let mut s = String::from("# x y w\n");
    for (p, w) in ps.positions.iter().zip(&ps.weights) {
        writeln!(s, "{} {} {}", fmt_f64(p.x), fmt_f64(p.y), fmt_f64(*w)).unwrap();
    }
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_optional_weights() {
        let ps = parse_points("0 0\n1 0 0.25 # heavy\n\n0 1\n", "p").unwrap();
        assert_eq!(ps.len(), 3);
        assert_eq!(ps.weights, vec![0.0, 0.25, 0.0]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(matches!(parse_points("0 0\n1\n", "p"), Err(DwdtError::Parse { line: 2, .. })));
        assert!(matches!(parse_points("0 nan\n", "p"), Err(DwdtError::Parse { line: 1, .. })));
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("p.txt");
        let ps = WeightedPointSet::new(vec![Vec2::new(0.1, 0.7), Vec2::new(1.0 / 3.0, 2.0)], vec![0.0, 0.3]).unwrap();
        write_points(&ps, &f).unwrap();
        assert_eq!(read_points(&f).unwrap(), ps);
    }
}
