//! Differentiable weighted Delaunay triangulation.
//!
//! Vertex positions and weights define a soft triangulation whose inclusion
//! scores are differentiable; losses on the triangulation, optionally lifted
//! onto a surface through a parameterization, are minimized with Adam.

pub mod error;
pub mod experiments;
pub mod geom;
pub mod losses;
pub mod gradient;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod objective;
pub mod optimizer;
pub mod oracle;
pub mod soft;
pub mod surface;

pub use error::{DwdtError, Result};
pub use geom::{Vec2, Vec3, WeightedPointSet};
