use std::fmt::Write as _;
use std::path::Path;

use super::{content_lines, fmt_f64, parse_f64, read_text};
use crate::error::{DwdtError, Result};
use crate::geom::Vec3;

/// Per-vertex fields read from a table. Directions are unit length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FieldTable {
    pub area: Option<Vec<f64>>,
    pub direction: Option<Vec<Vec3>>,
    pub curvatures: Option<Vec<(f64, f64)>>,
}

impl FieldTable {
    pub fn len(&self) -> usize {
        self.area
            .as_ref()
            .map(Vec::len)
            .or(self.direction.as_ref().map(Vec::len))
            .or(self.curvatures.as_ref().map(Vec::len))
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

const COLUMNS: [&str; 6] = ["A", "Cx", "Cy", "Cz", "k1", "k2"];

/// Tolerance on `|C|` before a renormalization warning.
const UNIT_TOLERANCE: f64 = 1e-3;

/// Reads a whitespace-separated table whose header is `index` followed by any
/// subset of `A Cx Cy Cz k1 k2`. `C` needs all three components and `k1`
/// needs `k2`. Row indices must cover `0..n` once each, and `n` must equal
/// `expected` when given.
pub fn read_fields(path: &Path, expected: Option<usize>) -> Result<FieldTable> {
    parse_fields(&read_text(path)?, &path.display().to_string(), expected)
}

pub(crate) fn parse_fields(text: &str, path: &str, expected: Option<usize>) -> Result<FieldTable> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| DwdtError::parse(path, 0, "empty field table"))?;
    let names: Vec<&str> = header.split_whitespace().collect();
    if names.first() != Some(&"index") {
        return Err(DwdtError::parse(path, hl, "header must start with `index`"));
    }
    let mut col = [None; 6];
    for (i, name) in names.iter().enumerate().skip(1) {
        let c = COLUMNS
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| DwdtError::parse(path, hl, format!("unknown column `{name}`")))?;
        if col[c].replace(i).is_some() {
            return Err(DwdtError::parse(path, hl, format!("duplicate column `{name}`")));
        }
    }
    let has_c = col[1..4].iter().filter(|c| c.is_some()).count();
    if has_c != 0 && has_c != 3 {
        return Err(DwdtError::parse(path, hl, "direction needs all of Cx, Cy, Cz"));
    }
    if col[4].is_some() != col[5].is_some() {
        return Err(DwdtError::parse(path, hl, "curvature magnitudes need both k1 and k2"));
    }
    if names.len() == 1 {
        return Err(DwdtError::parse(path, hl, "no field columns"));
    }

    let mut rows: Vec<Option<(usize, Vec<f64>)>> = Vec::new();
    for (ln, l) in lines {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != names.len() {
            return Err(DwdtError::parse(
                path,
                ln,
                format!("expected {} columns, found {}", names.len(), toks.len()),
            ));
        }
        let idx: usize = toks[0]
            .parse()
            .map_err(|_| DwdtError::parse(path, ln, format!("bad vertex index `{}`", toks[0])))?;
        let vals = toks[1..].iter().map(|t| parse_f64(t, path, ln)).collect::<Result<Vec<_>>>()?;
        if idx >= rows.len() {
            rows.resize(idx + 1, None);
        }
        if rows[idx].is_some() {
            return Err(DwdtError::parse(path, ln, format!("vertex {idx} listed twice")));
        }
        rows[idx] = Some((ln, vals));
    }
    if let Some(missing) = rows.iter().position(Option::is_none) {
        return Err(DwdtError::parse(path, 0, format!("no row for vertex {missing}")));
    }
    if let Some(n) = expected {
        if rows.len() != n {
            return Err(DwdtError::parse(path, 0, format!("{} rows for {n} vertices", rows.len())));
        }
    }
    let rows: Vec<(usize, Vec<f64>)> = rows.into_iter().flatten().collect();
    let get = |r: &[f64], c: usize| r[col[c].unwrap() - 1];

    let mut out = FieldTable::default();
    if col[0].is_some() {
        out.area = Some(rows.iter().map(|(_, r)| get(r, 0)).collect());
    }
    if has_c == 3 {
        let mut dirs = Vec::with_capacity(rows.len());
        let mut renormalized = 0;
        for (ln, r) in &rows {
            let c = Vec3::new(get(r, 1), get(r, 2), get(r, 3));
            let len = c.norm();
            if len < 1e-12 {
                return Err(DwdtError::parse(path, *ln, "zero direction vector"));
            }
            if (len - 1.0).abs() > UNIT_TOLERANCE {
                renormalized += 1;
            }
            dirs.push(c / len);
        }
        if renormalized > 0 {
            log::warn!("{path}: renormalized {renormalized} direction vectors that were not unit length");
        }
        out.direction = Some(dirs);
    }
    if col[4].is_some() {
        out.curvatures = Some(rows.iter().map(|(_, r)| (get(r, 4), get(r, 5))).collect());
    }
    Ok(out)
}

pub fn write_fields(table: &FieldTable, path: &Path) -> Result<()> {
    std::fs::write(path, format_fields(table)?)?;
    Ok(())
}

pub(crate) fn format_fields(table: &FieldTable) -> Result<String> {
    let n = table.len();
    let consistent = [
        table.area.as_ref().map(Vec::len),
        table.direction.as_ref().map(Vec::len),
        table.curvatures.as_ref().map(Vec::len),
    ]
    .iter()
    .flatten()
    .all(|&m| m == n);
    if !consistent {
        return Err(DwdtError::InvalidInput("field columns differ in length".into()));
    }
    let mut s = String::from("index");
    if table.area.is_some() {
        s.push_str(" A");
    }
    if table.direction.is_some() {
        s.push_str(" Cx Cy Cz");
    }
    if table.curvatures.is_some() {
        s.push_str(" k1 k2");
    }
    s.push('\n');
    for i in 0..n {
        write!(s, "{i}").unwrap();
        if let Some(a) = &table.area {
            write!(s, " {}", fmt_f64(a[i])).unwrap();
        }
        if let Some(d) = &table.direction {
            write!(s, " {} {} {}", fmt_f64(d[i].x), fmt_f64(d[i].y), fmt_f64(d[i].z)).unwrap();
        }
        if let Some(k) = &table.curvatures {
            write!(s, " {} {}", fmt_f64(k[i].0), fmt_f64(k[i].1)).unwrap();
        }
        s.push('\n');
    }
    Ok(s)
}
