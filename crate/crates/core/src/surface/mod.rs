//! Maps between the 2D parameter domain and a 3D surface, plus the scalar and
//! direction fields sampled on it.

mod analytic;
mod cut;
mod polygon;
mod uv_patch;

pub use analytic::{AnalyticSurface, CatenoidCurvatureArea, CatenoidMeridians, PlanarDomain};
pub use cut::{clip_to_boundary, cut_to_boundary};
pub use polygon::{BoundaryPoint, Polygon};
pub use uv_patch::UvPatchMesh;

use nalgebra::Matrix3x2;

use crate::error::Result;
use crate::geom::{Vec2, Vec3};

/// Derivative of a lift: columns are the partials along the two domain axes.
pub type Jacobian = Matrix3x2<f64>;

/// Piecewise differentiable lift from a 2D domain onto a 3D surface.
pub trait Parameterization: Send + Sync {
    fn lift(&self, v: &Vec2) -> Result<Vec3>;

    fn lift_jacobian(&self, v: &Vec2) -> Result<Jacobian>;

    fn lift_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)> {
        Ok((self.lift(v)?, self.lift_jacobian(v)?))
    }

    /// Inverse map, where one is available.
    fn forward(&self, _p: &Vec3) -> Option<Vec2> {
        None
    }

    /// Domain boundary; the outer loop is counter-clockwise.
    fn boundary(&self) -> &Polygon;

    /// Diagonal of the domain's bounding box.
    fn domain_diagonal(&self) -> f64 {
        self.boundary().diagonal()
    }
}

/// Scalar field over the domain (e.g. target triangle area).
pub trait ScalarField: Send + Sync {
    /// Value and gradient with respect to the 2D location.
    fn sample_with_gradient(&self, v: &Vec2) -> Result<(f64, Vec2)>;

    fn sample(&self, v: &Vec2) -> Result<f64> {
        Ok(self.sample_with_gradient(v)?.0)
    }
}

/// Unit 3D direction field over the domain (e.g. a principal curvature direction).
pub trait DirectionField: Send + Sync {
    /// Unit vector and its Jacobian with respect to the 2D location.
    fn sample_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)>;

    fn sample(&self, v: &Vec2) -> Result<Vec3> {
        Ok(self.sample_with_jacobian(v)?.0)
    }

    /// Signed principal curvature magnitudes `(k1, k2)` used to weight the
    /// alignment metric. `None` when the field carries no magnitudes.
    fn principal_curvatures(&self, _v: &Vec2) -> Result<Option<(f64, f64)>> {
        Ok(None)
    }
}

/// Field with the same value everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl ScalarField for ConstantField {
    fn sample_with_gradient(&self, _v: &Vec2) -> Result<(f64, Vec2)> {
        Ok((self.0, Vec2::zeros()))
    }
}

/// In-plane direction `(cos t, sin t, 0)` with the angle `t` affine in the
/// location: `t = t0 + g . v`. Curvature magnitudes are fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleField {
    pub t0: f64,
    pub g: Vec2,
    pub k1: f64,
    pub k2: f64,
}

impl AngleField {
    pub fn constant(t0: f64) -> Self {
        Self {
            t0,
            g: Vec2::zeros(),
            k1: 1.0,
            k2: 0.0,
        }
    }
}

impl DirectionField for AngleField {
    fn sample_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)> {
        let t = self.t0 + self.g.dot(v);
        let (s, c) = t.sin_cos();
        let dt = Vec3::new(-s, c, 0.0);
        Ok((Vec3::new(c, s, 0.0), dt * self.g.transpose()))
    }

    fn principal_curvatures(&self, _v: &Vec2) -> Result<Option<(f64, f64)>> {
        Ok(Some((self.k1, self.k2)))
    }
}

#[cfg(test)]
pub(crate) mod test_util {
    use super::*;

    /// Central-difference Jacobian of a vector function of the 2D location.
    pub fn fd_jacobian(f: impl Fn(&Vec2) -> Vec3, v: &Vec2, h: f64) -> Jacobian {
        let mut j = Jacobian::zeros();
        for axis in 0..2 {
            let mut e = Vec2::zeros();
            e[axis] = h;
            let col = (f(&(v + e)) - f(&(v - e))) / (2.0 * h);
            j.set_column(axis, &col);
        }
        j
    }
}
