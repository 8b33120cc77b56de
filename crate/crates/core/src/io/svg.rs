use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::fmt_f64;
use crate::error::Result;
use crate::geom::{bounding_box, Vec2, WeightedPointSet};
use crate::mesh::Mesh2;
use crate::soft::SoftTriangulation;

/// Candidates at or below this score are not drawn.
pub const DRAW_THRESHOLD: f64 = 0.001;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SvgStyle {
    /// Per-face (mesh) or per-candidate (soft) values mapped to fill colors.
    pub face_values: Option<Vec<f64>>,
    pub show_points: bool,
}

/// Light gray at 0 to dark blue at 1.
fn ramp(t: f64) -> String {
    let t = if t.is_finite() { t.clamp(0.0, 1.0) } else { 0.0 };
    let mix = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
    format!("rgb({},{},{})", mix(225.0, 20.0), mix(225.0, 40.0), mix(225.0, 160.0))
}

struct Canvas {
    out: String,
    stroke: f64,
}

impl Canvas {
    fn new(points: &[Vec2]) -> Self {
        let (lo, hi) = if points.is_empty() {
            (Vec2::zeros(), Vec2::new(1.0, 1.0))
        } else {
            bounding_box(points)
        };
        let diag = (hi - lo).norm().max(1e-12);
        let m = 0.02 * diag;
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        writeln!(
            out,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\">",
            fmt_f64(lo.x - m),
            fmt_f64(-hi.y - m),
            fmt_f64(hi.x - lo.x + 2.0 * m),
            fmt_f64(hi.y - lo.y + 2.0 * m)
        )
        .unwrap();
        // flip y so the domain appears with y pointing up
        out.push_str("<g transform=\"scale(1,-1)\">\n");
        Self {
            out,
            stroke: 0.002 * diag,
        }
    }

    fn triangle(&mut self, p: [Vec2; 3], fill: &str, opacity: f64) {
        let pts: Vec<String> = p.iter().map(|v| format!("{},{}", fmt_f64(v.x), fmt_f64(v.y))).collect();
        writeln!(
            self.out,
            "<polygon points=\"{}\" fill=\"{fill}\" fill-opacity=\"{}\" stroke=\"none\"/>",
            pts.join(" "),
            fmt_f64(opacity)
        )
        .unwrap();
    }

    fn edge(&mut self, a: Vec2, b: Vec2, color: &str) {
        writeln!(
            self.out,
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{color}\" stroke-width=\"{}\"/>",
            fmt_f64(a.x),
            fmt_f64(a.y),
            fmt_f64(b.x),
            fmt_f64(b.y),
            fmt_f64(self.stroke)
        )
        .unwrap();
    }

    fn point(&mut self, p: Vec2) {
        writeln!(
            self.out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"black\"/>",
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(2.0 * self.stroke)
        )
        .unwrap();
    }

    fn finish(mut self) -> String {
        self.out.push_str("</g>\n</svg>\n");
        self.out
    }
}

fn normalized(values: &[f64]) -> Vec<f64> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|v| if hi > lo { (v - lo) / (hi - lo) } else { 0.5 })
        .collect()
}

/// Candidates scoring above [`DRAW_THRESHOLD`] drawn with opacity equal to
/// their score; each edge is colored by the largest score of the drawn
/// candidates containing it.
pub fn render_soft_svg(soft: &SoftTriangulation, ps: &WeightedPointSet, style: &SvgStyle) -> String {
    let mut c = Canvas::new(&ps.positions);
    let colors = style.face_values.as_deref().map(normalized);
    let mut edges: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (i, (tri, &s)) in soft.candidates.iter().zip(&soft.scores).enumerate() {
        if s <= DRAW_THRESHOLD {
            continue;
        }
        let [a, b, d] = tri.indices;
        let fill = colors.as_ref().map(|v| ramp(v[i])).unwrap_or_else(|| ramp(0.3));
        c.triangle([a, b, d].map(|v| ps.positions[v]), &fill, s);
        for (x, y) in [(a, b), (b, d), (a, d)] {
            let e = edges.entry((x.min(y), x.max(y))).or_insert(0.0);
            *e = e.max(s);
        }
    }
    for ((a, b), s) in edges {
        c.edge(ps.positions[a], ps.positions[b], &ramp(s));
    }
    if style.show_points {
        for &p in &ps.positions {
            c.point(p);
        }
    }
    c.finish()
}

pub fn render_mesh_svg(mesh: &Mesh2, style: &SvgStyle) -> String {
    let used: Vec<Vec2> = mesh
        .vertices
        .iter()
        .zip(&mesh.used)
        .filter(|(_, &u)| u)
        .map(|(v, _)| *v)
        .collect();
    let mut c = Canvas::new(&used);
    let colors = style.face_values.as_deref().map(normalized);
    for (i, f) in mesh.faces.iter().enumerate() {
        let fill = colors.as_ref().map(|v| ramp(v[i])).unwrap_or_else(|| ramp(0.3));
        c.triangle(f.map(|v| mesh.vertices[v]), &fill, 1.0);
    }
    for &(a, b) in mesh.edge_face_counts().keys() {
        c.edge(mesh.vertices[a], mesh.vertices[b], "black");
    }
    if style.show_points {
        for p in used {
            c.point(p);
        }
    }
    c.finish()
}

pub fn write_svg(document: &str, path: &Path) -> Result<()> {
    std::fs::write(path, document)?;
    Ok(())
}
