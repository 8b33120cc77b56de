use std::fmt;
use std::io::Write;
use std::path::Path;

use super::fmt_f64;
use crate::error::Result;
use crate::optimizer::RunLog;

/// Ordered `key = value` report.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: impl Into<String>, value: impl fmt::Display) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn number(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.entries.push((key.into(), fmt_f64(value)));
        self
    }

    /// A missing value is written as `undefined`.
    pub fn optional(&mut self, key: impl Into<String>, value: Option<f64>) -> &mut Self {
        let v = value.map(fmt_f64).unwrap_or_else(|| "undefined".into());
        self.entries.push((key.into(), v));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_string())?;
        Ok(())
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

/// One CSV row per iteration; absent terms are empty cells.
pub fn write_run_log_csv(log: &RunLog, w: &mut impl Write) -> Result<()> {
    writeln!(
        w,
        "iteration,total,size,boundary,angle,curvature,candidates,branch_switches,faces,manifold_violations"
    )?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in &log.records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.iteration,
            fmt_f64(r.total),
            opt(r.size),
            opt(r.boundary),
            opt(r.angle),
            opt(r.curvature),
            r.candidates,
            r.branch_switches,
            r.faces,
            r.manifold_violations
        )?;
    }
    Ok(())
}
