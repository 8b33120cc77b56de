use thiserror::Error;

use crate::geom::Vec2;

pub type Result<T, E = DwdtError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DwdtError {
    #[error("degenerate pair: vertices {0} and {1} coincide")]
    DegeneratePair(usize, usize),

    #[error("degenerate triangle: determinant {det:e} below tolerance")]
    DegenerateTriangle { det: f64 },

    #[error("ambiguous configuration: tuple {tuple:?} is power-cocircular within tolerance (margin {margin:e})")]
    AmbiguousConfiguration { tuple: [usize; 4], margin: f64 },

    #[error("numeric failure in {0}")]
    NumericFailure(String),

    #[error("point ({}, {}) outside domain; nearest boundary point ({}, {})", .point.x, .point.y, .nearest.x, .nearest.y)]
    OutsideDomain { point: Vec2, nearest: Vec2 },

    #[error("invalid patch: {0}")]
    InvalidPatch(String),

    #[error("empty triangulation: total inclusion score {0:e} is too small")]
    EmptyTriangulation(f64),

    #[error("undefined normalization: {0} has zero spread")]
    UndefinedNormalization(&'static str),

    #[error("vertices outside boundary: {0:?}")]
    VerticesOutsideBoundary(Vec<usize>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl DwdtError {
    pub fn parse(path: impl Into<String>, line: usize, msg: impl Into<String>) -> Self {
        DwdtError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    pub fn numeric(primitive: impl Into<String>) -> Self {
        DwdtError::NumericFailure(primitive.into())
    }
}
