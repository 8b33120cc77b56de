use std::f64::consts::PI;

use super::{DirectionField, Jacobian, Parameterization, Polygon, ScalarField};
use crate::error::Result;
use crate::geom::{Vec2, Vec3};

/// The plane itself: `(x, y) -> (x, y, 0)`, bounded by a polygon.
///
/// The lift is defined everywhere, so vertices that stray outside the
/// boundary still lift; only the boundary loss reacts to them.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarDomain {
    pub boundary: Polygon,
}

impl PlanarDomain {
    pub fn new(boundary: Polygon) -> Self {
        Self { boundary }
    }

    pub fn unit_square() -> Self {
        Self::new(Polygon::rectangle(Vec2::zeros(), Vec2::new(1.0, 1.0)).expect("unit square"))
    }
}

impl Parameterization for PlanarDomain {
    fn lift(&self, v: &Vec2) -> Result<Vec3> {
        Ok(Vec3::new(v.x, v.y, 0.0))
    }

    fn lift_jacobian(&self, _v: &Vec2) -> Result<Jacobian> {
        Ok(Jacobian::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0))
    }

    fn forward(&self, p: &Vec3) -> Option<Vec2> {
        Some(Vec2::new(p.x, p.y))
    }

    fn boundary(&self) -> &Polygon {
        &self.boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalyticKind {
    /// `(cosh v cos u, cosh v sin u, v)` on `[0, 2 pi] x [-1, 1]`.
    Catenoid,
}

/// Closed-form surface over a rectangular parameter domain.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticSurface {
    pub kind: AnalyticKind,
    boundary: Polygon,
}

impl AnalyticSurface {
    pub fn catenoid() -> Self {
        Self {
            kind: AnalyticKind::Catenoid,
            boundary: Polygon::rectangle(Vec2::new(0.0, -1.0), Vec2::new(2.0 * PI, 1.0))
                .expect("catenoid domain"),
        }
    }

    /// Exact surface area of the domain's image.
    pub fn surface_area(&self) -> f64 {
        match self.kind {
            // integral of cosh^2 v over [-1, 1], times 2 pi
            AnalyticKind::Catenoid => 2.0 * PI * (1.0 + 2f64.sinh() / 2.0),
        }
    }
}

impl Parameterization for AnalyticSurface {
    fn lift(&self, p: &Vec2) -> Result<Vec3> {
        let (u, v) = (p.x, p.y);
        match self.kind {
            AnalyticKind::Catenoid => Ok(Vec3::new(v.cosh() * u.cos(), v.cosh() * u.sin(), v)),
        }
    }

    fn lift_jacobian(&self, p: &Vec2) -> Result<Jacobian> {
        let (u, v) = (p.x, p.y);
        match self.kind {
            AnalyticKind::Catenoid => {
                let (su, cu) = u.sin_cos();
                let (ch, sh) = (v.cosh(), v.sinh());
                Ok(Jacobian::new(-ch * su, sh * cu, ch * cu, sh * su, 0.0, 1.0))
            }
        }
    }

    fn forward(&self, p: &Vec3) -> Option<Vec2> {
        match self.kind {
            AnalyticKind::Catenoid => {
                let u = p.y.atan2(p.x).rem_euclid(2.0 * PI);
                Some(Vec2::new(u, p.z))
            }
        }
    }

    fn boundary(&self) -> &Polygon {
        &self.boundary
    }
}

/// Target area proportional to the reciprocal mean absolute curvature of the
/// catenoid, `scale * cosh^2 v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatenoidCurvatureArea {
    pub scale: f64,
}

impl ScalarField for CatenoidCurvatureArea {
    fn sample_with_gradient(&self, p: &Vec2) -> Result<(f64, Vec2)> {
        let (ch, sh) = (p.y.cosh(), p.y.sinh());
        Ok((self.scale * ch * ch, Vec2::new(0.0, 2.0 * self.scale * ch * sh)))
    }
}

/// Unit tangent of the catenoid meridians (a principal direction), with the
/// principal curvatures `-+ 1 / cosh^2 v`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CatenoidMeridians;

impl DirectionField for CatenoidMeridians {
    fn sample_with_jacobian(&self, p: &Vec2) -> Result<(Vec3, Jacobian)> {
        let (su, cu) = p.x.sin_cos();
        let (th, sech) = (p.y.tanh(), 1.0 / p.y.cosh());
        let t = Vec3::new(th * cu, th * su, sech);
        let j = Jacobian::new(
            -th * su,
            sech * sech * cu,
            th * cu,
            sech * sech * su,
            0.0,
            -sech * th,
        );
        Ok((t, j))
    }

    fn principal_curvatures(&self, p: &Vec2) -> Result<Option<(f64, f64)>> {
        let k = 1.0 / p.y.cosh().powi(2);
        Ok(Some((-k, k)))
    }
}
