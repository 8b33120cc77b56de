//! Plain-text readers and writers: OBJ patches, field tables, point lists,
//! run configurations, SVG renderings and key-value reports.
//!
//! Floats are written with 17 significant digits so every value round-trips.

mod config;
mod fields;
mod obj;
mod points;
mod report;
mod svg;

pub use config::{RunConfig, SurfaceKind, Task, CONFIG_KEYS};
pub use fields::{read_fields, write_fields, FieldTable};
pub use obj::{parse_obj_patch, read_obj_patch, write_obj, write_obj_to};
pub use points::{parse_points, read_points, write_points};
pub use report::{write_run_log_csv, Report};
pub use svg::{render_mesh_svg, render_soft_svg, write_svg, SvgStyle};

use std::fs;
use std::path::Path;

use crate::error::Result;

/// Lossless float formatting.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

/// Meaningful lines with their 1-based numbers; comments (`#`) and blank
/// lines are skipped.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub(crate) fn parse_f64(tok: &str, path: &str, line: usize) -> Result<f64> {
    let x: f64 = tok
        .parse()
        .map_err(|_| crate::DwdtError::parse(path, line, format!("expected a number, found `{tok}`")))?;
    if !x.is_finite() {
        return Err(crate::DwdtError::parse(path, line, format!("non-finite value `{tok}`")));
    }
    Ok(x)
}
