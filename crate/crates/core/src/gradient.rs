//! Differentiation support.
//!
//! Two routes produce [`GradientBundle`]s: the hand-derived adjoint pipeline
//! used by the optimizer (see `objective`), and the scalar reverse-mode
//! [`Tape`] here, which evaluates arbitrary expressions built from tape
//! operations. Both are checked against central finite differences with
//! [`finite_difference_check`].

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{DwdtError, Result};
use crate::geom::{Vec2, WeightedPointSet};

/// Loss value plus its partials with respect to every coordinate and weight.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientBundle {
    pub value: f64,
    pub d_positions: Vec<Vec2>,
    pub d_weights: Vec<f64>,
}

impl GradientBundle {
    pub fn zeros(n: usize) -> Self {
        Self {
            value: 0.0,
            d_positions: vec![Vec2::zeros(); n],
            d_weights: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.d_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_weights.is_empty()
    }

    /// Parameters in optimizer order: x0, y0, x1, y1, ..., then w0, w1, ...
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.len());
        for p in &self.d_positions {
            out.push(p.x);
            out.push(p.y);
        }
        out.extend_from_slice(&self.d_weights);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.d_positions.iter().all(|p| p.x.is_finite() && p.y.is_finite())
            && self.d_weights.iter().all(|w| w.is_finite())
    }

    /// `self += scale * other`, value included.
    pub fn accumulate(&mut self, other: &GradientBundle, scale: f64) {
        self.value += scale * other.value;
        for (a, b) in self.d_positions.iter_mut().zip(&other.d_positions) {
            *a += b * scale;
        }
        for (a, b) in self.d_weights.iter_mut().zip(&other.d_weights) {
            *a += b * scale;
        }
    }
}

/// Flattens a point set in the same order as [`GradientBundle::flat`].
pub fn flatten_params(ps: &WeightedPointSet) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * ps.len());
    for p in &ps.positions {
        out.push(p.x);
        out.push(p.y);
    }
    out.extend_from_slice(&ps.weights);
    out
}

/// Inverse of [`flatten_params`].
pub fn unflatten_params(flat: &[f64]) -> WeightedPointSet {
    let n = flat.len() / 3;
    WeightedPointSet {
        positions: (0..n).map(|i| Vec2::new(flat[2 * i], flat[2 * i + 1])).collect(),
        weights: flat[2 * n..].to_vec(),
    }
}

/// A differentiable scalar function of a weighted point set.
pub trait Objective {
    fn value(&self, ps: &WeightedPointSet) -> Result<f64>;
    fn gradient(&self, ps: &WeightedPointSet) -> Result<GradientBundle>;

    /// `value(a) - value(b)`. Objectives that can form the difference more
    /// precisely than by subtracting two rounded values override this.
    fn difference(&self, a: &WeightedPointSet, b: &WeightedPointSet) -> Result<f64> {
        Ok(self.value(a)? - self.value(b)?)
    }
}

/// Result of comparing an analytic gradient with central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Flat parameter index of the worst entry.
    pub worst_param: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Relative error with an absolute floor: `|a - b| / max(|a|, |b|, floor)`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub const FD_ABS_FLOOR: f64 = 1e-8;

/// Central differences over every coordinate and weight of `ps`.
pub fn finite_difference_check<O: Objective + ?Sized>(
    objective: &O,
    ps: &WeightedPointSet,
    h: f64,
) -> Result<FdReport> {
    if h <= 0.0 {
        return Err(DwdtError::InvalidInput("finite-difference step must be positive".into()));
    }
    let analytic = objective.gradient(ps)?.flat();
    let base = flatten_params(ps);
    let mut report = FdReport {
        max_rel_error: 0.0,
        worst_param: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for (i, &a) in analytic.iter().enumerate() {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[i] += h;
        minus[i] -= h;
        let numeric = objective.difference(&unflatten_params(&plus), &unflatten_params(&minus))? / (2.0 * h);
        let err = relative_error(a, numeric, FD_ABS_FLOOR);
        if err > report.max_rel_error || i == 0 {
            report = FdReport {
                max_rel_error: err.max(report.max_rel_error),
                worst_param: i,
                analytic: a,
                numeric,
            };
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
struct Node {
    value: f64,
    edges_start: u32,
    edges_end: u32,
    op: &'static str,
}

/// Scalar reverse-mode tape.
///
/// Every operation appends a node carrying its local partials; [`Tape::gradient`]
/// sweeps the nodes backwards once. Selections (`min`, `max`, `abs`) record the
/// branch taken at evaluation time.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    edges: RefCell<Vec<(u32, f64)>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    idx: u32,
    val: f64,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var#{}({})", self.idx, self.val)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.borrow().is_empty()
    }

    pub fn var(&self, value: f64) -> Var<'_> {
        self.push(value, &[], "input")
    }

    pub fn constant(&self, value: f64) -> Var<'_> {
        self.push(value, &[], "constant")
    }

    /// Records a fused primitive with explicit local partials.
    pub fn custom<'t>(&'t self, value: f64, partials: &[(Var<'t>, f64)], op: &'static str) -> Var<'t> {
        let edges: Vec<(u32, f64)> = partials.iter().map(|(v, d)| (v.idx, *d)).collect();
        self.push(value, &edges, op)
    }

    fn push(&self, value: f64, parents: &[(u32, f64)], op: &'static str) -> Var<'_> {
        let mut edges = self.edges.borrow_mut();
        let start = edges.len() as u32;
        edges.extend_from_slice(parents);
        let end = edges.len() as u32;
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(Node {
            value,
            edges_start: start,
            edges_end: end,
            op,
        });
        Var {
            tape: self,
            idx,
            val: value,
        }
    }

    /// First node whose value is not finite, by operation name.
    pub fn first_non_finite(&self) -> Option<&'static str> {
        self.nodes
            .borrow()
            .iter()
            .find(|n| !n.value.is_finite())
            .map(|n| n.op)
    }

    /// Adjoints of every node with respect to `output`.
    pub fn gradient(&self, output: Var<'_>) -> Vec<f64> {
        let nodes = self.nodes.borrow();
        let edges = self.edges.borrow();
        let mut adj = vec![0.0; nodes.len()];
        adj[output.idx as usize] = 1.0;
        for i in (0..=output.idx as usize).rev() {
            let a = adj[i];
            if a == 0.0 {
                continue;
            }
            let n = nodes[i];
            for &(p, d) in &edges[n.edges_start as usize..n.edges_end as usize] {
                adj[p as usize] += a * d;
            }
        }
        adj
    }

    /// Log-sum-exp of `xs`, shifted by the maximum for stability.
    pub fn logsumexp<'t>(&'t self, xs: &[Var<'t>]) -> Var<'t> {
        let m = xs.iter().map(|x| x.val).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = xs.iter().map(|x| (x.val - m).exp()).sum();
        let value = m + sum.ln();
        let partials: Vec<(Var<'t>, f64)> = xs.iter().map(|x| (*x, (x.val - value).exp())).collect();
        self.custom(value, &partials, "logsumexp")
    }

    pub fn sum<'t>(&'t self, xs: &[Var<'t>]) -> Var<'t> {
        let value = xs.iter().map(|x| x.val).sum();
        let partials: Vec<(Var<'t>, f64)> = xs.iter().map(|x| (*x, 1.0)).collect();
        self.custom(value, &partials, "sum")
    }
}

impl<'t> Var<'t> {
    pub fn value(&self) -> f64 {
        self.val
    }

    pub fn index(&self) -> usize {
        self.idx as usize
    }

    fn unary(self, value: f64, d: f64, op: &'static str) -> Var<'t> {
        self.tape.push(value, &[(self.idx, d)], op)
    }

    fn binary(self, other: Var<'t>, value: f64, da: f64, db: f64, op: &'static str) -> Var<'t> {
        self.tape.push(value, &[(self.idx, da), (other.idx, db)], op)
    }

    pub fn sqrt(self) -> Var<'t> {
        let s = self.val.sqrt();
        self.unary(s, 0.5 / s, "sqrt")
    }

    pub fn exp(self) -> Var<'t> {
        let e = self.val.exp();
        self.unary(e, e, "exp")
    }

    pub fn ln(self) -> Var<'t> {
        self.unary(self.val.ln(), 1.0 / self.val, "ln")
    }

    pub fn powi(self, n: i32) -> Var<'t> {
        self.unary(self.val.powi(n), n as f64 * self.val.powi(n - 1), "powi")
    }

    pub fn sin(self) -> Var<'t> {
        self.unary(self.val.sin(), self.val.cos(), "sin")
    }

    pub fn cos(self) -> Var<'t> {
        self.unary(self.val.cos(), -self.val.sin(), "cos")
    }

    pub fn sinh(self) -> Var<'t> {
        self.unary(self.val.sinh(), self.val.cosh(), "sinh")
    }

    pub fn cosh(self) -> Var<'t> {
        self.unary(self.val.cosh(), self.val.sinh(), "cosh")
    }

    pub fn acos(self) -> Var<'t> {
        let d = -1.0 / (1.0 - self.val * self.val).sqrt();
        self.unary(self.val.acos(), d, "acos")
    }

    pub fn sigmoid(self) -> Var<'t> {
        let s = sigmoid(self.val);
        self.unary(s, s * (1.0 - s), "sigmoid")
    }

    /// Absolute value; derivative `+1` at zero.
    pub fn abs(self) -> Var<'t> {
        let d = if self.val >= 0.0 { 1.0 } else { -1.0 };
        self.unary(self.val.abs(), d, "abs")
    }

    /// Hard minimum; ties pick `self`.
    pub fn min(self, other: Var<'t>) -> Var<'t> {
        if self.val <= other.val {
            self.binary(other, self.val, 1.0, 0.0, "min")
        } else {
            self.binary(other, other.val, 0.0, 1.0, "min")
        }
    }

    pub fn max(self, other: Var<'t>) -> Var<'t> {
        if self.val >= other.val {
            self.binary(other, self.val, 1.0, 0.0, "max")
        } else {
            self.binary(other, other.val, 0.0, 1.0, "max")
        }
    }

    pub fn min_f(self, c: f64) -> Var<'t> {
        if self.val <= c {
            self.unary(self.val, 1.0, "min")
        } else {
            self.unary(c, 0.0, "min")
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl<'t> Add for Var<'t> {
    type Output = Var<'t>;
    fn add(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, self.val + o.val, 1.0, 1.0, "add")
    }
}

impl<'t> Sub for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, self.val - o.val, 1.0, -1.0, "sub")
    }
}

impl<'t> Mul for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, o: Var<'t>) -> Var<'t> {
        self.binary(o, self.val * o.val, o.val, self.val, "mul")
    }
}

impl<'t> Div for Var<'t> {
    type Output = Var<'t>;
    fn div(self, o: Var<'t>) -> Var<'t> {
        let q = self.val / o.val;
        self.binary(o, q, 1.0 / o.val, -q / o.val, "div")
    }
}

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        self.unary(-self.val, -1.0, "neg")
    }
}

impl<'t> Add<f64> for Var<'t> {
    type Output = Var<'t>;
    fn add(self, c: f64) -> Var<'t> {
        self.unary(self.val + c, 1.0, "add")
    }
}

impl<'t> Sub<f64> for Var<'t> {
    type Output = Var<'t>;
    fn sub(self, c: f64) -> Var<'t> {
        self.unary(self.val - c, 1.0, "sub")
    }
}

impl<'t> Mul<f64> for Var<'t> {
    type Output = Var<'t>;
    fn mul(self, c: f64) -> Var<'t> {
        self.unary(self.val * c, c, "mul")
    }
}

impl<'t> Div<f64> for Var<'t> {
    type Output = Var<'t>;
    fn div(self, c: f64) -> Var<'t> {
        self.unary(self.val / c, 1.0 / c, "div")
    }
}

impl<'t> Sub<Var<'t>> for f64 {
    type Output = Var<'t>;
    fn sub(self, v: Var<'t>) -> Var<'t> {
        v.unary(self - v.val, -1.0, "sub")
    }
}

/// Tape inputs for a weighted point set.
pub struct TapeParams<'t> {
    pub positions: Vec<[Var<'t>; 2]>,
    pub weights: Vec<Var<'t>>,
}

/// Records `expr` over fresh inputs for every coordinate and weight of `ps`
/// and returns its value with all partials.
pub fn evaluate_with_gradient<F>(ps: &WeightedPointSet, expr: F) -> Result<GradientBundle>
where
    F: for<'t> FnOnce(&'t Tape, &TapeParams<'t>) -> Result<Var<'t>>,
{
    let tape = Tape::new();
    let params = TapeParams {
        positions: ps
            .positions
            .iter()
            .map(|p| [tape.var(p.x), tape.var(p.y)])
            .collect(),
        weights: ps.weights.iter().map(|&w| tape.var(w)).collect(),
    };
    let out = expr(&tape, &params)?;
    if let Some(op) = tape.first_non_finite() {
        return Err(DwdtError::numeric(op));
    }
    let adj = tape.gradient(out);
    Ok(GradientBundle {
        value: out.value(),
        d_positions: params
            .positions
            .iter()
            .map(|[x, y]| Vec2::new(adj[x.index()], adj[y.index()]))
            .collect(),
        d_weights: params.weights.iter().map(|w| adj[w.index()]).collect(),
    })
}

/// Tape versions of the planar primitives.
pub mod ops {
    use super::{Tape, Var};

    pub type VarVec2<'t> = [Var<'t>; 2];

    pub fn dot<'t>(a: VarVec2<'t>, b: VarVec2<'t>) -> Var<'t> {
        a[0] * b[0] + a[1] * b[1]
    }

    pub fn sub<'t>(a: VarVec2<'t>, b: VarVec2<'t>) -> VarVec2<'t> {
        [a[0] - b[0], a[1] - b[1]]
    }

    /// `|x - v|^2 - w^2`
    pub fn power<'t>(x: VarVec2<'t>, v: VarVec2<'t>, w: Var<'t>) -> Var<'t> {
        let d = sub(x, v);
        dot(d, d) - w * w
    }

    /// Signed distance from `x` to the power bisector of `(vj, wj)` and `(vk, wk)`,
    /// positive on the `vj` side.
    pub fn bisector_distance<'t>(
        x: VarVec2<'t>,
        vj: VarVec2<'t>,
        wj: Var<'t>,
        vk: VarVec2<'t>,
        wk: Var<'t>,
    ) -> Var<'t> {
        let e = sub(vk, vj);
        let len = dot(e, e).sqrt();
        (power(x, vk, wk) - power(x, vj, wj)) / (len * 2.0)
    }

    /// Weighted circumcenter by Cramer's rule on the two bisector equations.
    pub fn weighted_circumcenter<'t>(
        tape: &'t Tape,
        v: [VarVec2<'t>; 3],
        w: [Var<'t>; 3],
    ) -> VarVec2<'t> {
        let _ = tape;
        let a = sub(v[1], v[0]);
        let b = sub(v[2], v[0]);
        let ra = (dot(a, a) + w[0] * w[0] - w[1] * w[1]) * 0.5;
        let rb = (dot(b, b) + w[0] * w[0] - w[2] * w[2]) * 0.5;
        let det = a[0] * b[1] - a[1] * b[0];
        [
            v[0][0] + (ra * b[1] - rb * a[1]) / det,
            v[0][1] + (a[0] * rb - b[0] * ra) / det,
        ]
    }

    pub fn norm3<'t>(a: [Var<'t>; 3]) -> Var<'t> {
        (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
    }

    pub fn sub3<'t>(a: [Var<'t>; 3], b: [Var<'t>; 3]) -> [Var<'t>; 3] {
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn dot3<'t>(a: [Var<'t>; 3], b: [Var<'t>; 3]) -> Var<'t> {
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }

    pub fn cross3<'t>(a: [Var<'t>; 3], b: [Var<'t>; 3]) -> [Var<'t>; 3] {
        [
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{power_bisector, weighted_circumcenter};
    use approx::assert_relative_eq;

    type ExprFn = for<'t> fn(&'t Tape, &TapeParams<'t>) -> Result<Var<'t>>;

    struct Expr(ExprFn);

    impl Objective for Expr {
        fn value(&self, ps: &WeightedPointSet) -> Result<f64> {
            Ok(evaluate_with_gradient(ps, self.0)?.value)
        }
        fn gradient(&self, ps: &WeightedPointSet) -> Result<GradientBundle> {
            evaluate_with_gradient(ps, self.0)
        }
    }

    fn sample() -> WeightedPointSet {
        WeightedPointSet::new(
            vec![
                Vec2::new(0.1, 0.2),
                Vec2::new(0.8, 0.3),
                Vec2::new(0.4, 0.9),
                Vec2::new(0.6, 0.6),
            ],
            vec![0.05, 0.1, 0.2, 0.3],
        )
        .unwrap()
    }

    #[test]
    fn squared_weight_has_single_nonzero_partial() {
        let ps = sample();
        let g = evaluate_with_gradient(&ps, |_, p| Ok(p.weights[3] * p.weights[3])).unwrap();
        assert_relative_eq!(g.value, 0.09, epsilon = 1e-15);
        assert_relative_eq!(g.d_weights[3], 0.6, epsilon = 1e-15);
        assert!(g.d_weights[..3].iter().all(|&d| d == 0.0));
        assert!(g.d_positions.iter().all(|d| d.norm() == 0.0));
    }

    #[test]
    fn bisector_distance_matches_finite_differences() {
        let ps = sample();
        let c = Vec2::new(0.45, 0.35);
        fn bisector<'t>(t: &'t Tape, p: &TapeParams<'t>) -> Result<Var<'t>> {
            let x = [t.constant(0.45), t.constant(0.35)];
            Ok(ops::bisector_distance(
                x,
                p.positions[0],
                p.weights[0],
                p.positions[1],
                p.weights[1],
            ))
        }
        let expr = Expr(bisector);
        let g = expr.gradient(&ps).unwrap();
        let b = power_bisector(&ps.positions[0], ps.weights[0], &ps.positions[1], ps.weights[1]).unwrap();
        assert_relative_eq!(g.value, b.signed_distance(&c), epsilon = 1e-14);
        let r = finite_difference_check(&expr, &ps, 1e-6).unwrap();
        assert!(r.max_rel_error < 1e-4, "{r:?}");
    }

    #[test]
    fn circumcenter_on_tape_matches_closed_form() {
        let ps = sample();
        let g = evaluate_with_gradient(&ps, |t, p| {
            let c = ops::weighted_circumcenter(
                t,
                [p.positions[0], p.positions[1], p.positions[2]],
                [p.weights[0], p.weights[1], p.weights[2]],
            );
            Ok(c[0] + c[1] * 2.0)
        })
        .unwrap();
        let v = &ps.positions;
        let w = &ps.weights;
        let c = weighted_circumcenter(&v[0], w[0], &v[1], w[1], &v[2], w[2]).unwrap();
        assert_relative_eq!(g.value, c.x + 2.0 * c.y, epsilon = 1e-13);
    }

    #[test]
    fn linear_and_quadratic_fd_errors() {
        let ps = sample();
        fn lin<'t>(_: &'t Tape, p: &TapeParams<'t>) -> Result<Var<'t>> {
            Ok(p.positions[0][0] * 3.0 - p.positions[2][1] + p.weights[1] * 0.5)
        }
        fn quad<'t>(_: &'t Tape, p: &TapeParams<'t>) -> Result<Var<'t>> {
            let x = p.positions[1][0];
            let w = p.weights[2];
            Ok(x * x * 4.0 + w * x + w * w)
        }
        assert!(finite_difference_check(&Expr(lin), &ps, 1e-6).unwrap().max_rel_error < 1e-10);
        assert!(finite_difference_check(&Expr(quad), &ps, 1e-6).unwrap().max_rel_error < 1e-6);
    }

    #[test]
    fn logsumexp_and_selections() {
        let t = Tape::new();
        let xs = [t.var(0.5), t.var(-1.0), t.var(2.0)];
        let l = t.logsumexp(&xs);
        let expected = (0.5f64.exp() + (-1.0f64).exp() + 2.0f64.exp()).ln();
        assert_relative_eq!(l.value(), expected, epsilon = 1e-14);
        let adj = t.gradient(l);
        let total: f64 = xs.iter().map(|x| adj[x.index()]).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-14);

        let t = Tape::new();
        let (a, b) = (t.var(1.0), t.var(3.0));
        let m = a.min(b);
        let adj = t.gradient(m);
        assert_eq!((adj[a.index()], adj[b.index()]), (1.0, 0.0));
    }

    #[test]
    fn non_finite_intermediate_is_named() {
        let ps = sample();
        let err = evaluate_with_gradient(&ps, |t, p| Ok((p.weights[0] - p.weights[0]).ln() + t.constant(1.0)))
            .unwrap_err();
        assert!(matches!(err, DwdtError::NumericFailure(ref op) if op == "ln"));
    }

    #[test]
    fn tape_gradients_are_deterministic() {
        let ps = sample();
        fn dist<'t>(_: &'t Tape, p: &TapeParams<'t>) -> Result<Var<'t>> {
            let d = ops::sub(p.positions[0], p.positions[3]);
            Ok(ops::dot(d, d).sqrt() * p.weights[1])
        }
        let a = evaluate_with_gradient(&ps, dist).unwrap();
        let b = evaluate_with_gradient(&ps, dist).unwrap();
        assert_eq!(a, b);
    }
}
