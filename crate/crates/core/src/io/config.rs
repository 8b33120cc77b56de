use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{content_lines, read_text, Report};
use crate::error::{DwdtError, Result};
use crate::losses::{LossConfig, LossWeights, DEFAULT_EPSILON};
use crate::optimizer::{AdamConfig, ALIGN_TASK_ITERATIONS, DEFAULT_LEARNING_RATE, SIZE_TASK_ITERATIONS};
use crate::soft::{DEFAULT_ALPHA, DEFAULT_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Size,
    Align,
    Blend,
    Custom,
}

impl Task {
    pub fn default_weights(self) -> LossWeights {
        match self {
            Task::Size | Task::Blend => LossWeights::SIZE_TASK,
            Task::Align => LossWeights::CURVATURE_TASK,
            Task::Custom => LossWeights {
                size: 0.0,
                boundary: 0.0,
                angle: 0.0,
                curvature: 0.0,
            },
        }
    }

    pub fn default_iterations(self) -> usize {
        match self {
            Task::Align => ALIGN_TASK_ITERATIONS,
            _ => SIZE_TASK_ITERATIONS,
        }
    }
}

impl FromStr for Task {
    type Err = DwdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "size" => Ok(Task::Size),
            "align" => Ok(Task::Align),
            "blend" => Ok(Task::Blend),
            "custom" => Ok(Task::Custom),
            _ => Err(DwdtError::Config(format!("unknown task `{s}` (size, align, blend, custom)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Size => "size",
            Task::Align => "align",
            Task::Blend => "blend",
            Task::Custom => "custom",
        })
    }
}

/// Where the 2D domain comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    /// The unit square, lifted to the plane.
    Square,
    Catenoid,
    /// A UV-parameterized OBJ patch given by `input`.
    Patch,
}

impl FromStr for SurfaceKind {
    type Err = DwdtError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(SurfaceKind::Square),
            "catenoid" => Ok(SurfaceKind::Catenoid),
            "patch" => Ok(SurfaceKind::Patch),
            _ => Err(DwdtError::Config(format!("unknown surface `{s}` (square, catenoid, patch)"))),
        }
    }
}

impl fmt::Display for SurfaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SurfaceKind::Square => "square",
            SurfaceKind::Catenoid => "catenoid",
            SurfaceKind::Patch => "patch",
        })
    }
}

/// Every recognized configuration key.
pub const CONFIG_KEYS: [&str; 23] = [
    "task",
    "surface",
    "input",
    "fields",
    "output",
    "vertices",
    "size_weight",
    "boundary_weight",
    "angle_weight",
    "curvature_weight",
    "t",
    "alpha",
    "k",
    "epsilon",
    "lr",
    "iterations",
    "seed",
    "snapshot_every",
    "threshold",
    "target_area",
    "field_angle",
    "field_gradient_x",
    "field_gradient_y",
];

/// Settings of one run. Weights and iterations left unset follow the task.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub surface: SurfaceKind,
    pub input: Option<PathBuf>,
    pub fields: Option<PathBuf>,
    pub output: PathBuf,
    /// Vertex count of a random initialization.
    pub vertices: usize,
    pub size_weight: Option<f64>,
    pub boundary_weight: Option<f64>,
    pub angle_weight: Option<f64>,
    pub curvature_weight: Option<f64>,
    /// Blend parameter of the blend task.
    pub t: f64,
    pub alpha: f64,
    pub k: usize,
    pub epsilon: f64,
    pub lr: f64,
    pub iterations: Option<usize>,
    pub seed: u64,
    pub snapshot_every: usize,
    pub threshold: f64,
    /// Constant target area; by default the domain area over the face count
    /// of the initial triangulation.
    pub target_area: Option<f64>,
    /// Angle field on the square: `t = field_angle + g . v`.
    pub field_angle: f64,
    pub field_gradient_x: f64,
    pub field_gradient_y: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: Task::Size,
            surface: SurfaceKind::Square,
            input: None,
            fields: None,
            output: PathBuf::from("out"),
            vertices: 200,
            size_weight: None,
            boundary_weight: None,
            angle_weight: None,
            curvature_weight: None,
            t: 0.5,
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
            epsilon: DEFAULT_EPSILON,
            lr: DEFAULT_LEARNING_RATE,
            iterations: None,
            seed: 0,
            snapshot_every: 100,
            threshold: 0.5,
            target_area: None,
            field_angle: 0.3,
            field_gradient_x: 1.5,
            field_gradient_y: 0.8,
        }
    }
}

fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| DwdtError::Config(format!("`{key}` expects a number, got `{value}`")))
}

fn real(key: &str, value: &str) -> Result<f64> {
    let x: f64 = num(key, value)?;
    if !x.is_finite() {
        return Err(DwdtError::Config(format!("`{key}` must be finite")));
    }
    Ok(x)
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "task" => self.task = value.parse()?,
            "surface" => self.surface = value.parse()?,
            "input" => self.input = Some(PathBuf::from(value)),
            "fields" => self.fields = Some(PathBuf::from(value)),
            "output" => self.output = PathBuf::from(value),
            "vertices" => self.vertices = num(key, value)?,
            "size_weight" => self.size_weight = Some(real(key, value)?),
            "boundary_weight" => self.boundary_weight = Some(real(key, value)?),
            "angle_weight" => self.angle_weight = Some(real(key, value)?),
            "curvature_weight" => self.curvature_weight = Some(real(key, value)?),
            "t" => self.t = real(key, value)?,
            "alpha" => self.alpha = real(key, value)?,
            "k" => self.k = num(key, value)?,
            "epsilon" => self.epsilon = real(key, value)?,
            "lr" => self.lr = real(key, value)?,
            "iterations" => self.iterations = Some(num(key, value)?),
            "seed" => self.seed = num(key, value)?,
            "snapshot_every" => self.snapshot_every = num(key, value)?,
            "threshold" => self.threshold = real(key, value)?,
            "target_area" => self.target_area = Some(real(key, value)?),
            "field_angle" => self.field_angle = real(key, value)?,
            "field_gradient_x" => self.field_gradient_x = real(key, value)?,
            "field_gradient_y" => self.field_gradient_y = real(key, value)?,
            _ => return Err(DwdtError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<()> {
        for (ln, l) in content_lines(text) {
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| DwdtError::parse(path, ln, "expected `key = value`"))?;
            self.set(k.trim(), v).map_err(|e| DwdtError::parse(path, ln, e.to_string()))?;
        }
        Ok(())
    }

    pub fn parse(text: &str, path: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text, path)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn weights(&self) -> LossWeights {
        let d = self.task.default_weights();
        LossWeights {
            size: self.size_weight.unwrap_or(d.size),
            boundary: self.boundary_weight.unwrap_or(d.boundary),
            angle: self.angle_weight.unwrap_or(d.angle),
            curvature: self.curvature_weight.unwrap_or(d.curvature),
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            weights: self.weights(),
            epsilon: self.epsilon,
            blend: (self.task == Task::Blend).then_some(self.t),
            curvature_cutoff: crate::losses::DEFAULT_CURVATURE_CUTOFF,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations.unwrap_or_else(|| self.task.default_iterations())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig {
            learning_rate: self.lr,
            ..AdamConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DwdtError::Config(m));
        if !(self.alpha > 0.0) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.k < 3 {
            return bad(format!("k must be at least 3, got {}", self.k));
        }
        if !(self.lr > 0.0) {
            return bad(format!("lr must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.threshold) || self.threshold == 0.0 {
            return bad(format!("threshold must lie in (0, 1), got {}", self.threshold));
        }
        if self.vertices < 3 && self.input.is_none() {
            return bad(format!("need at least 3 vertices, got {}", self.vertices));
        }
        if let Some(a) = self.target_area {
            if !(a > 0.0) {
                return bad(format!("target_area must be positive, got {a}"));
            }
        }
        if self.surface == SurfaceKind::Patch && self.input.is_none() {
            return bad("surface `patch` needs an input OBJ".into());
        }
        self.loss_config().validate()
    }

    /// All resolved settings, in the config file format.
    pub fn report(&self) -> Report {
        let mut r = Report::new();
        let w = self.weights();
        r.text("task", self.task)
            .text("surface", self.surface)
            .text("vertices", self.vertices)
            .number("size_weight", w.size)
            .number("boundary_weight", w.boundary)
            .number("angle_weight", w.angle)
            .number("curvature_weight", w.curvature)
            .number("t", self.t)
            .number("alpha", self.alpha)
            .text("k", self.k)
            .number("epsilon", self.epsilon)
            .number("lr", self.lr)
            .text("iterations", self.iterations())
            .text("seed", self.seed)
            .text("snapshot_every", self.snapshot_every)
            .number("threshold", self.threshold)
            .number("field_angle", self.field_angle)
            .number("field_gradient_x", self.field_gradient_x)
            .number("field_gradient_y", self.field_gradient_y);
        if let Some(a) = self.target_area {
            r.number("target_area", a);
        }
        if let Some(p) = &self.input {
            r.text("input", p.display());
        }
        if let Some(p) = &self.fields {
            r.text("fields", p.display());
        }
        r.text("output", self.output.display());
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_task() {
        let c = RunConfig::parse("task = align\n", "c").unwrap();
        assert_eq!(c.weights(), LossWeights::CURVATURE_TASK);
        assert_eq!(c.iterations(), 1000);
        let c = RunConfig::parse("task = size # default weights\n", "c").unwrap();
        assert_eq!(c.weights(), LossWeights::SIZE_TASK);
        assert_eq!(c.iterations(), 1500);
        assert_eq!((c.alpha, c.k, c.epsilon, c.lr), (1000.0, 80, 0.01, 1e-4));
        let c = RunConfig::parse("task = blend\nt = 0.25\n", "c").unwrap();
        assert_eq!(c.loss_config().blend, Some(0.25));
    }

    #[test]
    fn overrides_and_validation() {
        let c = RunConfig::parse("boundary_weight = 10\niterations = 0\nk=12", "c").unwrap();
        assert_eq!(c.weights().boundary, 10.0);
        assert_eq!(c.iterations(), 0);
        assert_eq!(c.k, 12);
        for bad in ["alpha = 0", "k = 2", "lr = -1", "iterations = -3", "t = 2\ntask = blend", "task = custom"] {
            assert!(RunConfig::parse(bad, "c").is_err(), "{bad}");
        }
        assert!(matches!(RunConfig::parse("\n\nfoo = 1", "c"), Err(DwdtError::Parse { line: 3, .. })));
        assert!(matches!(RunConfig::parse("alpha 3", "c"), Err(DwdtError::Parse { line: 1, .. })));
    }

    #[test]
    fn report_round_trips() {
        let c = RunConfig::parse("task = blend\nt = 0.75\nseed = 9\ntarget_area = 0.003\nlr = 3e-4", "c").unwrap();
        let text = c.report().to_string();
        let d = RunConfig::parse(&text, "r").unwrap();
        assert_eq!(d.weights(), c.weights());
        assert_eq!(d.report(), c.report());
    }
}
