//! The full differentiable pipeline: weighted points to soft triangulation,
//! lifted onto the surface, scored by the weighted losses.

use crate::error::Result;
use crate::geom::{Vec2, Vec3, WeightedPointSet};
use crate::gradient::{GradientBundle, Objective};
use crate::losses::{total_loss, LossAdjoint, LossBreakdown, LossConfig, LossInputs};
use crate::soft::{inclusion_scores, SoftTriangulation, DEFAULT_ALPHA, DEFAULT_K};
use crate::surface::{DirectionField, Jacobian, Parameterization, ScalarField};

/// Surface, fields and loss settings of one optimization problem.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub surface: &'a dyn Parameterization,
    pub area: Option<&'a dyn ScalarField>,
    pub direction: Option<&'a dyn DirectionField>,
    pub loss: LossConfig,
    pub alpha: f64,
    pub k: usize,
}

/// Everything computed by one pass of the pipeline.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub loss: LossBreakdown,
    pub soft: SoftTriangulation,
    pub lifted: Vec<Vec3>,
    pub gradient: Option<GradientBundle>,
}

impl<'a> Pipeline<'a> {
    pub fn new(surface: &'a dyn Parameterization, loss: LossConfig) -> Self {
        Self {
            surface,
            area: None,
            direction: None,
            loss,
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
        }
    }

    pub fn with_area(mut self, area: &'a dyn ScalarField) -> Self {
        self.area = Some(area);
        self
    }

    pub fn with_direction(mut self, direction: &'a dyn DirectionField) -> Self {
        self.direction = Some(direction);
        self
    }

    pub fn evaluate(&self, ps: &WeightedPointSet, with_gradient: bool) -> Result<Evaluation> {
        let soft = inclusion_scores(ps, self.alpha, self.k)?;
        self.evaluate_soft(ps, soft, with_gradient)
    }

    /// Like [`Pipeline::evaluate`] on an already scored triangulation of `ps`.
    pub fn evaluate_soft(&self, ps: &WeightedPointSet, soft: SoftTriangulation, with_gradient: bool) -> Result<Evaluation> {
        let n = ps.len();
        let mut lifted = Vec::with_capacity(n);
        let mut jacobians: Vec<Jacobian> = Vec::with_capacity(n);
        for v in &ps.positions {
            let (p, j) = self.surface.lift_with_jacobian(v)?;
            lifted.push(p);
            jacobians.push(j);
        }
        let area: Option<Vec<(f64, Vec2)>> = self
            .area
            .map(|f| ps.positions.iter().map(|v| f.sample_with_gradient(v)).collect())
            .transpose()?;
        let direction: Option<Vec<(Vec3, Jacobian)>> = self
            .direction
            .map(|f| ps.positions.iter().map(|v| f.sample_with_jacobian(v)).collect())
            .transpose()?;
        let area_values: Option<Vec<f64>> = area.as_ref().map(|a| a.iter().map(|x| x.0).collect());
        let direction_values: Option<Vec<Vec3>> = direction.as_ref().map(|d| d.iter().map(|x| x.0).collect());
        let inputs = LossInputs {
            soft: &soft,
            positions: &ps.positions,
            lifted: &lifted,
            area: area_values.as_deref(),
            direction: direction_values.as_deref(),
            boundary: Some(self.surface.boundary()),
        };
        let mut adjoint = with_gradient.then(|| LossAdjoint::zeros(soft.len(), n));
        let loss = total_loss(&self.loss, &inputs, adjoint.as_mut())?;

        let gradient = adjoint.map(|adj| {
            let mut g = GradientBundle::zeros(n);
            g.value = loss.total;
            for j in 0..n {
                let mut d = adj.d_positions[j] + jacobians[j].transpose() * adj.d_lifted[j];
                if let Some(a) = &area {
                    d += a[j].1 * adj.d_area[j];
                }
                if let Some(c) = &direction {
                    d += c[j].1.transpose() * adj.d_direction[j];
                }
                g.d_positions[j] = d;
            }
            soft.backprop(ps, &adj.d_scores, &mut g);
            g
        });
        Ok(Evaluation {
            loss,
            soft,
            lifted,
            gradient,
        })
    }
}

impl Objective for Pipeline<'_> {
    fn value(&self, ps: &WeightedPointSet) -> Result<f64> {
        Ok(self.evaluate(ps, false)?.loss.total)
    }

    fn gradient(&self, ps: &WeightedPointSet) -> Result<GradientBundle> {
        Ok(self.evaluate(ps, true)?.gradient.expect("requested"))
    }

    fn difference(&self, a: &WeightedPointSet, b: &WeightedPointSet) -> Result<f64> {
        Ok(self.evaluate(a, false)?.loss.difference(&self.evaluate(b, false)?.loss))
    }
}
