//! Mesh-quality objectives on a soft triangulation and their adjoints.
//!
//! Every term can be evaluated alone or with its reverse-mode adjoint, which
//! accumulates derivatives with respect to the corner scores, the 2D and
//! lifted 3D vertex positions and the sampled fields.

use crate::error::{DwdtError, Result};
use crate::geom::{CompensatedSum, Vec2, Vec3};
use crate::soft::SoftTriangulation;
use crate::surface::Polygon;

/// Weight of each loss term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub size: f64,
    pub boundary: f64,
    pub angle: f64,
    pub curvature: f64,
}

impl LossWeights {
    pub const SIZE_TASK: LossWeights = LossWeights {
        size: 1e7,
        boundary: 500.0,
        angle: 0.5,
        curvature: 0.0,
    };
    pub const CURVATURE_TASK: LossWeights = LossWeights {
        size: 0.0,
        boundary: 500.0,
        angle: 0.0,
        curvature: 1.0,
    };
}

pub const DEFAULT_EPSILON: f64 = 0.01;

/// Triangles scoring below this are not part of a vertex neighbourhood in the
/// curvature loss.
pub const DEFAULT_CURVATURE_CUTOFF: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub weights: LossWeights,
    /// Repulsion margin of the boundary loss, in domain units.
    pub epsilon: f64,
    /// Blend `t`: the angle weight is scaled by `t` and the size weight by `1 - t`.
    pub blend: Option<f64>,
    /// Triangles scoring below this are left out of the curvature
    /// loss neighbourhoods (0 keeps every candidate). The loss jumps when a
    /// score crosses it.
    pub curvature_cutoff: f64,
}

impl LossConfig {
    pub fn new(weights: LossWeights) -> Self {
        Self {
            weights,
            epsilon: DEFAULT_EPSILON,
            blend: None,
            curvature_cutoff: DEFAULT_CURVATURE_CUTOFF,
        }
    }

    pub fn size_task() -> Self {
        Self::new(LossWeights::SIZE_TASK)
    }

    pub fn curvature_task() -> Self {
        Self::new(LossWeights::CURVATURE_TASK)
    }

    /// `t * angle * L_a + (1 - t) * size * L_s + boundary * L_b`.
    pub fn blended(t: f64, size: f64, angle: f64, boundary: f64) -> Self {
        Self {
            blend: Some(t),
            ..Self::new(LossWeights {
                size,
                boundary,
                angle,
                curvature: 0.0,
            })
        }
    }

    /// Weights after applying the blend.
    pub fn effective_weights(&self) -> LossWeights {
        let mut w = self.weights;
        if let Some(t) = self.blend {
            w.size *= 1.0 - t;
            w.angle *= t;
        }
        w
    }

    pub fn validate(&self) -> Result<()> {
        let w = self.weights;
        for (name, x) in [
            ("size", w.size),
            ("boundary", w.boundary),
            ("angle", w.angle),
            ("curvature", w.curvature),
        ] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(DwdtError::Config(format!("{name} weight must be a non-negative number, got {x}")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(DwdtError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if let Some(t) = self.blend {
            if !(0.0..=1.0).contains(&t) {
                return Err(DwdtError::Config(format!("blend t must lie in [0, 1], got {t}")));
            }
        }
        if !(0.0..1.0).contains(&self.curvature_cutoff) {
            return Err(DwdtError::Config(format!(
                "curvature cutoff must lie in [0, 1), got {}",
                self.curvature_cutoff
            )));
        }
        let e = self.effective_weights();
        if e.size + e.boundary + e.angle + e.curvature <= 0.0 {
            return Err(DwdtError::Config("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a loss can read.
#[derive(Clone, Copy)]
pub struct LossInputs<'a> {
    pub soft: &'a SoftTriangulation,
    /// 2D vertex positions.
    pub positions: &'a [Vec2],
    /// Lifted 3D vertex positions.
    pub lifted: &'a [Vec3],
    /// Target area sampled at each vertex.
    pub area: Option<&'a [f64]>,
    /// Unit direction sampled at each vertex.
    pub direction: Option<&'a [Vec3]>,
    pub boundary: Option<&'a Polygon>,
}

/// Derivatives of a loss with respect to its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossAdjoint {
    pub d_scores: Vec<[f64; 3]>,
    pub d_positions: Vec<Vec2>,
    pub d_lifted: Vec<Vec3>,
    pub d_area: Vec<f64>,
    pub d_direction: Vec<Vec3>,
}

impl LossAdjoint {
    pub fn zeros(num_candidates: usize, num_vertices: usize) -> Self {
        Self {
            d_scores: vec![[0.0; 3]; num_candidates],
            d_positions: vec![Vec2::zeros(); num_vertices],
            d_lifted: vec![Vec3::zeros(); num_vertices],
            d_area: vec![0.0; num_vertices],
            d_direction: vec![Vec3::zeros(); num_vertices],
        }
    }
}

/// Accumulation target for one term: the adjoint and the term's weight.
type Sink<'s> = Option<(&'s mut LossAdjoint, f64)>;

fn total_score(soft: &SoftTriangulation) -> Result<(f64, CompensatedSum)> {
    let mut sum = CompensatedSum::default();
    for i in 0..soft.len() {
        for c in 0..3 {
            soft.add_scaled(&mut sum, i, c, 1.0);
        }
    }
    let s = sum.value();
    if !(s >= 1e-12) {
        return Err(DwdtError::EmptyTriangulation(s));
    }
    Ok((s, sum))
}

/// A term value kept as its numerator and denominator sums, so that the
/// difference between two nearby evaluations can be formed without the
/// rounding of either value.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TermRatio {
    pub num: CompensatedSum,
    pub den: CompensatedSum,
    /// Sums whose logarithms are added to the numerator.
    pub log_sums: Vec<CompensatedSum>,
}

impl TermRatio {
    pub fn new(num: CompensatedSum, den: CompensatedSum) -> Self {
        Self {
            num,
            den,
            log_sums: Vec::new(),
        }
    }

    fn numerator(&self) -> f64 {
        self.num.value() + self.log_sums.iter().map(|s| s.value().ln()).sum::<CompensatedSum>().value()
    }

    pub fn value(&self) -> f64 {
        self.numerator() / self.den.value()
    }

    /// `self.value() - other.value()`, computed from the parts in double-word
    /// arithmetic.
    pub fn difference(&self, other: &TermRatio) -> f64 {
        if self.log_sums.is_empty() && other.log_sums.is_empty() {
            let (p1, l1) = dd_mul(self.num.parts(), other.den.parts());
            let (p2, l2) = dd_mul(other.num.parts(), self.den.parts());
            return ((p1 - p2) + (l1 - l2)) / (self.den.value() * other.den.value());
        }
        if self.log_sums.len() != other.log_sums.len() {
            return self.value() - other.value();
        }
        // log differences as ln1p of the relative change of each sum
        let mut d_num = CompensatedSum::default();
        d_num += parts_difference(self.num, other.num);
        for (a, b) in self.log_sums.iter().zip(&other.log_sums) {
            d_num += (parts_difference(*a, *b) / b.value()).ln_1p();
        }
        let d_den = parts_difference(self.den, other.den);
        (d_num.value() * other.den.value() - other.numerator() * d_den) / (self.den.value() * other.den.value())
    }
}

fn parts_difference(a: CompensatedSum, b: CompensatedSum) -> f64 {
    let ((ah, al), (bh, bl)) = (a.parts(), b.parts());
    (ah - bh) + (al - bl)
}

fn dd_mul(x: (f64, f64), y: (f64, f64)) -> (f64, f64) {
    let p = x.0 * y.0;
    let e = x.0.mul_add(y.0, -p);
    (p, e + x.0 * y.1 + x.1 * y.0)
}

/// `1/S sum_{i,j} s_{i|j} (area_i - A(v_j))^2` over candidate corners.
pub fn triangle_size_loss(soft: &SoftTriangulation, lifted: &[Vec3], area: &[f64]) -> Result<f64> {
    Ok(size_term(soft, lifted, area, None)?.value())
}

fn size_term(soft: &SoftTriangulation, lifted: &[Vec3], area: &[f64], mut sink: Sink) -> Result<TermRatio> {
    let (total, den) = total_score(soft)?;
    let mut acc = CompensatedSum::default();
    let mut areas = Vec::with_capacity(soft.len());
    for (i, tri) in soft.candidates.iter().enumerate() {
        let [j, k, l] = tri.indices;
        let a = 0.5 * (lifted[k] - lifted[j]).cross(&(lifted[l] - lifted[j])).norm();
        areas.push(a);
        for c in 0..3 {
            let r = a - area[tri.indices[c]];
            soft.add_scaled(&mut acc, i, c, r * r);
        }
    }
    let value = acc.value() / total;
    if let Some((adj, w)) = sink.as_mut() {
        let w = *w;
        for (i, (tri, s)) in soft.candidates.iter().zip(&soft.corner_scores).enumerate() {
            let a = areas[i];
            let mut d_a = 0.0;
            for c in 0..3 {
                let j = tri.indices[c];
                let r = a - area[j];
                adj.d_scores[i][c] += w * (r * r - value) / total;
                d_a += 2.0 * s[c] * r / total;
                adj.d_area[j] -= w * 2.0 * s[c] * r / total;
            }
            if d_a != 0.0 {
                let g = area_gradient(&lifted[tri.indices[0]], &lifted[tri.indices[1]], &lifted[tri.indices[2]]);
                for c in 0..3 {
                    adj.d_lifted[tri.indices[c]] += g[c] * (w * d_a);
                }
            }
        }
    }
    Ok(TermRatio::new(acc, den))
}

/// Gradient of `0.5 |(p1 - p0) x (p2 - p0)|` with respect to each corner
/// (zero for a degenerate triangle).
fn area_gradient(p0: &Vec3, p1: &Vec3, p2: &Vec3) -> [Vec3; 3] {
    let n = (p1 - p0).cross(&(p2 - p0));
    let len = n.norm();
    if len == 0.0 {
        return [Vec3::zeros(); 3];
    }
    let u = n / len;
    [
        u.cross(&(p2 - p1)) * 0.5,
        u.cross(&(p0 - p2)) * 0.5,
        u.cross(&(p1 - p0)) * 0.5,
    ]
}

/// `1/|V| sum_j exp(eps - min(eps, (v_j - b_j) . n_j))`.
pub fn boundary_repulsion_loss(positions: &[Vec2], boundary: &Polygon, epsilon: f64) -> f64 {
    boundary_term(positions, boundary, epsilon, None).value()
}

fn boundary_term(positions: &[Vec2], boundary: &Polygon, epsilon: f64, mut sink: Sink) -> TermRatio {
    let n = positions.len() as f64;
    let mut acc = CompensatedSum::default();
    for (j, p) in positions.iter().enumerate() {
        let b = boundary.closest_point(p);
        let d = b.signed_distance;
        let e = (epsilon - d.min(epsilon)).exp();
        acc += e;
        if d < epsilon {
            if let Some((adj, w)) = sink.as_mut() {
                adj.d_positions[j] -= b.normal * (*w * e / n);
            }
        }
    }
    let mut den = CompensatedSum::default();
    den += n;
    TermRatio::new(acc, den)
}

/// `1/S sum_{i,j} s_{i|j} |cos(angle_j) - 1/2|` with angles of the lifted triangles.
pub fn angle_loss(soft: &SoftTriangulation, lifted: &[Vec3]) -> Result<f64> {
    Ok(angle_term(soft, lifted, None)?.value())
}

fn corner_cosine(p: &Vec3, a: &Vec3, b: &Vec3) -> Result<(f64, Vec3, Vec3)> {
    let (e1, e2) = (a - p, b - p);
    let (l1, l2) = (e1.norm(), e2.norm());
    if l1 == 0.0 || l2 == 0.0 {
        return Err(DwdtError::numeric("corner angle with a zero-length edge"));
    }
    let cos = e1.dot(&e2) / (l1 * l2);
    // d cos / d e1, d cos / d e2
    let g1 = e2 / (l1 * l2) - e1 * (cos / (l1 * l1));
    let g2 = e1 / (l1 * l2) - e2 * (cos / (l2 * l2));
    Ok((cos, g1, g2))
}

fn angle_term(soft: &SoftTriangulation, lifted: &[Vec3], mut sink: Sink) -> Result<TermRatio> {
    let (total, den) = total_score(soft)?;
    let mut acc = CompensatedSum::default();
    let mut devs = Vec::with_capacity(soft.len());
    for (i, tri) in soft.candidates.iter().enumerate() {
        let mut dev = [0.0; 3];
        for c in 0..3 {
            let p = &lifted[tri.indices[c]];
            let a = &lifted[tri.indices[(c + 1) % 3]];
            let b = &lifted[tri.indices[(c + 2) % 3]];
            let (cos, _, _) = corner_cosine(p, a, b)?;
            dev[c] = cos - 0.5;
            soft.add_scaled(&mut acc, i, c, dev[c].abs());
        }
        devs.push(dev);
    }
    let value = acc.value() / total;
    if let Some((adj, w)) = sink.as_mut() {
        let w = *w;
        for (i, (tri, s)) in soft.candidates.iter().zip(&soft.corner_scores).enumerate() {
            for c in 0..3 {
                let dev = devs[i][c];
                adj.d_scores[i][c] += w * (dev.abs() - value) / total;
                // d|x|/dx taken as +1 at 0
                let g = w * s[c] * if dev < 0.0 { -1.0 } else { 1.0 } / total;
                if g == 0.0 {
                    continue;
                }
                let (jp, ja, jb) = (tri.indices[c], tri.indices[(c + 1) % 3], tri.indices[(c + 2) % 3]);
                let (_, g1, g2) = corner_cosine(&lifted[jp], &lifted[ja], &lifted[jb])?;
                adj.d_lifted[ja] += g1 * g;
                adj.d_lifted[jb] += g2 * g;
                adj.d_lifted[jp] -= (g1 + g2) * g;
            }
        }
    }
    Ok(TermRatio::new(acc, den))
}

/// Value of the curvature alignment loss and the vertices left out of it.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureLoss {
    pub value: f64,
    /// Vertices with no adjacent candidate at or above the cutoff; skipped.
    pub isolated: Vec<usize>,
}

/// `-1/S sum_j [LSE{ C_j . h s_{i|j} } + LSE{ -C_j . h s_{i|j} }]` where each
/// candidate `i` containing `j` contributes its two edges at `j`, with
/// `h = (v'_j - v'_m) / |v'_j - v'_m|`.
pub fn curvature_alignment_loss(
    soft: &SoftTriangulation,
    lifted: &[Vec3],
    direction: &[Vec3],
    cutoff: f64,
) -> Result<CurvatureLoss> {
    Ok(curvature_term(soft, lifted, direction, cutoff, None)?.0)
}

/// One LSE entry: vertex, candidate, corner, other endpoint.
struct EdgeEntry {
    candidate: u32,
    corner: u8,
    other: u32,
    h: Vec3,
    len: f64,
}

fn curvature_term(
    soft: &SoftTriangulation,
    lifted: &[Vec3],
    direction: &[Vec3],
    cutoff: f64,
    mut sink: Sink,
) -> Result<(CurvatureLoss, TermRatio)> {
    let n = lifted.len();
    let (total, den) = total_score(soft)?;
    // CSR lists of the edges around each vertex
    let mut counts = vec![0usize; n + 1];
    for (tri, &s) in soft.candidates.iter().zip(&soft.scores) {
        if s >= cutoff {
            for &j in &tri.indices {
                counts[j + 1] += 2;
            }
        }
    }
    for j in 0..n {
        counts[j + 1] += counts[j];
    }
    let mut fill = counts.clone();
    let mut entries: Vec<Option<EdgeEntry>> = (0..counts[n]).map(|_| None).collect();
    for (i, (tri, &s)) in soft.candidates.iter().zip(&soft.scores).enumerate() {
        if s < cutoff {
            continue;
        }
        for c in 0..3 {
            let j = tri.indices[c];
            for m in [tri.indices[(c + 1) % 3], tri.indices[(c + 2) % 3]] {
                let d = lifted[j] - lifted[m];
                let len = d.norm();
                if len == 0.0 {
                    return Err(DwdtError::numeric("curvature loss edge of zero length"));
                }
                entries[fill[j]] = Some(EdgeEntry {
                    candidate: i as u32,
                    corner: c as u8,
                    other: m as u32,
                    h: d / len,
                    len,
                });
                fill[j] += 1;
            }
        }
    }

    let mut isolated = Vec::new();
    let mut log_sums = Vec::with_capacity(2 * n);
    let mut xs: Vec<f64> = Vec::new();
    for j in 0..n {
        let list = &entries[counts[j]..counts[j + 1]];
        if list.is_empty() {
            isolated.push(j);
            continue;
        }
        let cj = direction[j];
        xs.clear();
        let (mut sum_p, mut sum_m) = (CompensatedSum::default(), CompensatedSum::default());
        for e in list {
            let e = e.as_ref().expect("filled");
            let (i, c) = (e.candidate as usize, e.corner as usize);
            let ch = cj.dot(&e.h);
            let s = soft.corner_scores[i][c];
            xs.push(ch * s);
            // exp(ch s) split into a part that only moves with ch and a small
            // part carrying the score, so nearby evaluations differ precisely
            if s >= 0.5 {
                let q = soft.corner_complements[i][c];
                let (ep, em) = (ch.exp(), (-ch).exp());
                sum_p += ep;
                sum_p += ep * (-ch * q).exp_m1();
                sum_m += em;
                sum_m += em * (ch * q).exp_m1();
            } else {
                sum_p += 1.0;
                sum_p += (ch * s).exp_m1();
                sum_m += 1.0;
                sum_m += (-ch * s).exp_m1();
            }
        }
        let (lse_p, lse_m) = (sum_p.value().ln(), sum_m.value().ln());
        log_sums.push(sum_p);
        log_sums.push(sum_m);
        if let Some((adj, w)) = sink.as_mut() {
            let w = *w;
            for (e, &x) in list.iter().zip(&xs) {
                let e = e.as_ref().expect("filled");
                let (i, c) = (e.candidate as usize, e.corner as usize);
                let s = soft.corner_scores[i][c];
                let pp = (x - lse_p).exp();
                let pm = (-x - lse_m).exp();
                let g = -w * (pp - pm) / total;
                let ch = cj.dot(&e.h);
                adj.d_scores[i][c] += g * ch;
                adj.d_direction[j] += e.h * (g * s);
                let d_h = cj * (g * s);
                let d_d = (d_h - e.h * e.h.dot(&d_h)) / e.len;
                adj.d_lifted[j] += d_d;
                adj.d_lifted[e.other as usize] -= d_d;
            }
        }
    }
    let ratio = TermRatio {
        num: CompensatedSum::default(),
        den,
        log_sums,
    };
    let value = -ratio.value();
    if let Some((adj, w)) = sink.as_mut() {
        // normalization by the total score
        let g = -*w * value / total;
        for d in adj.d_scores.iter_mut() {
            for x in d.iter_mut() {
                *x += g;
            }
        }
    }
    if !isolated.is_empty() {
        log::debug!("curvature loss skipped {} isolated vertices", isolated.len());
    }
    // the sign goes to the weight of the term
    Ok((CurvatureLoss { value, isolated }, ratio))
}

/// Numerically stable `ln sum exp(x)`.
pub fn logsumexp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.map(|x| (x - m).exp()).sum::<CompensatedSum>().value().ln()
}

/// Individual term values (unweighted) and the weighted total.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub size: Option<f64>,
    pub boundary: Option<f64>,
    pub angle: Option<f64>,
    pub curvature: Option<f64>,
    pub isolated_vertices: usize,
    /// Signed weight and parts of every term in `total`.
    pub parts: Vec<(f64, TermRatio)>,
}

impl LossBreakdown {
    /// `self.total - other.total` from the term parts; both breakdowns must
    /// come from the same configuration.
    pub fn difference(&self, other: &LossBreakdown) -> f64 {
        debug_assert_eq!(self.parts.len(), other.parts.len());
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|((w, a), (_, b))| w * a.difference(b))
            .sum()
    }
}

/// Weighted sum of the enabled terms. Terms with zero effective weight are
/// skipped, except that blended runs always report both blended terms.
/// When `adjoint` is given, the weighted derivatives are accumulated into it.
pub fn total_loss(cfg: &LossConfig, inputs: &LossInputs, mut adjoint: Option<&mut LossAdjoint>) -> Result<LossBreakdown> {
    cfg.validate()?;
    let w = cfg.effective_weights();
    let mut out = LossBreakdown::default();
    let blended = cfg.blend.is_some();
    let add = |out: &mut LossBreakdown, weight: f64, r: TermRatio| {
        if weight != 0.0 {
            out.total += weight * r.value();
            out.parts.push((weight, r));
        }
    };
    if w.size > 0.0 || (blended && cfg.weights.size > 0.0) {
        let area = inputs
            .area
            .ok_or_else(|| DwdtError::Config("size loss needs a target area field".into()))?;
        let sink = if w.size > 0.0 { adjoint.as_deref_mut().map(|a| (a, w.size)) } else { None };
        let r = size_term(inputs.soft, inputs.lifted, area, sink)?;
        out.size = Some(r.value());
        add(&mut out, w.size, r);
    }
    if w.boundary > 0.0 {
        let boundary = inputs
            .boundary
            .ok_or_else(|| DwdtError::Config("boundary loss needs a boundary polygon".into()))?;
        let r = boundary_term(inputs.positions, boundary, cfg.epsilon, adjoint.as_deref_mut().map(|a| (a, w.boundary)));
        out.boundary = Some(r.value());
        add(&mut out, w.boundary, r);
    }
    if w.angle > 0.0 || (blended && cfg.weights.angle > 0.0) {
        let sink = if w.angle > 0.0 { adjoint.as_deref_mut().map(|a| (a, w.angle)) } else { None };
        let r = angle_term(inputs.soft, inputs.lifted, sink)?;
        out.angle = Some(r.value());
        add(&mut out, w.angle, r);
    }
    if w.curvature > 0.0 {
        let direction = inputs
            .direction
            .ok_or_else(|| DwdtError::Config("curvature loss needs a direction field".into()))?;
        let (c, r) = curvature_term(
            inputs.soft,
            inputs.lifted,
            direction,
            cfg.curvature_cutoff,
            adjoint.as_deref_mut().map(|a| (a, w.curvature)),
        )?;
        out.curvature = Some(c.value);
        out.isolated_vertices = c.isolated.len();
        add(&mut out, -w.curvature, r);
    }
    if !out.total.is_finite() {
        return Err(DwdtError::numeric("total loss"));
    }
    Ok(out)
}
