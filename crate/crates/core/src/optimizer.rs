//! Adam over vertex positions and weights, with per-iteration candidate
//! refresh, run logging and a simulated-annealing baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DwdtError, Result};
use crate::geom::{Vec2, WeightedPointSet};
use crate::gradient::{flatten_params, unflatten_params, GradientBundle};
use crate::mesh::{manifold_check, Mesh2, Mesh3};
use crate::objective::Pipeline;
use crate::soft::{extract_discrete, CandidateTriangle, SoftTriangulation};
use crate::surface::{clip_to_boundary, cut_to_boundary, Parameterization, Polygon, UvPatchMesh};

pub const DEFAULT_LEARNING_RATE: f64 = 1e-4;
pub const SIZE_TASK_ITERATIONS: usize = 1500;
pub const ALIGN_TASK_ITERATIONS: usize = 1000;
/// Initial weights are drawn from `[0, WEIGHT_INIT_FRACTION * domain diagonal]`.
pub const WEIGHT_INIT_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Adam moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            step: 0,
        }
    }

    /// One bias-corrected Adam update of `params` in place.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(DwdtError::InvalidInput(format!(
                "optimizer holds {} parameters, got {} and {} gradients",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            return Err(DwdtError::numeric(format!("gradient entry {i}")));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step += 1;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

/// Applies one Adam update to all `3n` parameters of `ps`.
pub fn step(state: &mut OptimizerState, ps: &WeightedPointSet, grad: &GradientBundle) -> Result<WeightedPointSet> {
    let mut params = flatten_params(ps);
    state.update(&mut params, &grad.flat())?;
    let next = unflatten_params(&params);
    WeightedPointSet::new(next.positions, next.weights)
}

/// Uniformly random positions inside `boundary` with weights in
/// `[0, 0.05 * diagonal]`, reproducible from `seed`.
pub fn init_uniform(boundary: &Polygon, n: usize, seed: u64) -> Result<WeightedPointSet> {
    let (lo, hi) = boundary.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(n);
    let mut tries = 0usize;
    while positions.len() < n {
        tries += 1;
        if tries > 1000 * (n + 10) {
            return Err(DwdtError::InvalidInput("boundary encloses no sampleable area".into()));
        }
        let p = Vec2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if boundary.contains(&p) {
            positions.push(p);
        }
    }
    let weights = random_weights(&mut rng, n, boundary.diagonal());
    WeightedPointSet::new(positions, weights)
}

/// Patch vertices at their UVs with random weights.
pub fn init_from_patch(patch: &UvPatchMesh, seed: u64) -> Result<WeightedPointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = random_weights(&mut rng, patch.uvs.len(), patch.domain_diagonal());
    WeightedPointSet::new(patch.uvs.clone(), weights)
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize, diagonal: f64) -> Vec<f64> {
    let hi = WEIGHT_INIT_FRACTION * diagonal;
    (0..n).map(|_| rng.gen::<f64>() * hi).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeConfig {
    pub adam: AdamConfig,
    pub iterations: usize,
    /// Keep a snapshot every this many iterations (0 keeps none besides the
    /// first and last).
    pub snapshot_every: usize,
    pub threshold: f64,
}

impl OptimizeConfig {
    pub fn new(iterations: usize) -> Self {
        Self {
            adam: AdamConfig::default(),
            iterations,
            snapshot_every: 0,
            threshold: 0.5,
        }
    }
}

/// Per-iteration record. Iteration `i` describes the parameters before the
/// `i`-th update; the last record is the final state.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub total: f64,
    pub size: Option<f64>,
    pub boundary: Option<f64>,
    pub angle: Option<f64>,
    pub curvature: Option<f64>,
    pub candidates: usize,
    /// Corners of candidates shared with the previous iteration whose
    /// minimizing bisector changed.
    pub branch_switches: usize,
    pub faces: usize,
    pub manifold_violations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub points: WeightedPointSet,
    pub mesh: Mesh2,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLog {
    pub records: Vec<IterationRecord>,
    pub snapshots: Vec<Snapshot>,
    /// Reason the run stopped early; the result holds the last good state.
    pub aborted: Option<String>,
    /// Simulated annealing only.
    pub accepted_moves: usize,
}

impl RunLog {
    pub fn total_manifold_violations(&self) -> usize {
        self.records.iter().map(|r| r.manifold_violations).sum()
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub points: WeightedPointSet,
    /// Extraction conforming to the domain boundary.
    pub mesh2: Mesh2,
    pub mesh3: Mesh3,
    pub log: RunLog,
    /// Used vertices that ended outside the boundary and were clipped away.
    pub outside_vertices: Vec<usize>,
}

/// Counts corners whose frozen argmin differs between two scorings.
pub fn count_branch_switches(prev: &SoftTriangulation, next: &SoftTriangulation) -> usize {
    let (mut a, mut b, mut count) = (0, 0, 0);
    while a < prev.candidates.len() && b < next.candidates.len() {
        match prev.candidates[a].cmp(&next.candidates[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                count += (0..3)
                    .filter(|&c| prev.corner_argmin[a][c] != next.corner_argmin[b][c])
                    .count();
                a += 1;
                b += 1;
            }
        }
    }
    count
}

fn record(iteration: usize, ev: &crate::objective::Evaluation, mesh: &Mesh2, switches: usize) -> IterationRecord {
    IterationRecord {
        iteration,
        total: ev.loss.total,
        size: ev.loss.size,
        boundary: ev.loss.boundary,
        angle: ev.loss.angle,
        curvature: ev.loss.curvature,
        candidates: ev.soft.len(),
        branch_switches: switches,
        faces: mesh.faces.len(),
        manifold_violations: manifold_check(mesh).violation_count(),
    }
}

/// Runs Adam from `init`, then extracts, conforms to the boundary and lifts.
pub fn optimize(pipeline: &Pipeline, init: &WeightedPointSet, cfg: &OptimizeConfig) -> Result<RunResult> {
    pipeline.loss.validate()?;
    let mut log = RunLog::default();
    let mut state = OptimizerState::new(3 * init.len(), cfg.adam);
    let mut ps = init.clone();
    let mut prev: Option<SoftTriangulation> = None;
    for it in 0..=cfg.iterations {
        let last = it == cfg.iterations;
        let ev = match pipeline.evaluate(&ps, !last) {
            Ok(ev) => ev,
            Err(e) if it > 0 && is_numeric(&e) => {
                log.aborted = Some(format!("iteration {it}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let mesh = extract_discrete(&ev.soft, &ps, cfg.threshold);
        let switches = prev.as_ref().map_or(0, |p| count_branch_switches(p, &ev.soft));
        log.records.push(record(it, &ev, &mesh, switches));
        if it == 0 || last || (cfg.snapshot_every > 0 && it % cfg.snapshot_every == 0) {
            log.snapshots.push(Snapshot {
                iteration: it,
                points: ps.clone(),
                mesh,
            });
        }
        if last {
            break;
        }
        let grad = ev.gradient.as_ref().expect("requested");
        match step(&mut state, &ps, grad) {
            Ok(next) => ps = next,
            Err(e) if is_numeric(&e) => {
                log.aborted = Some(format!("iteration {it}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
        prev = Some(ev.soft);
    }
    if let Some(msg) = &log.aborted {
        log::warn!("optimization aborted at {msg}");
    }
    finish(pipeline, ps, cfg.threshold, log)
}

fn is_numeric(e: &DwdtError) -> bool {
    matches!(
        e,
        DwdtError::NumericFailure(_) | DwdtError::DegeneratePair(..) | DwdtError::EmptyTriangulation(_)
    )
}

/// Extraction, boundary conformance and lift of a final point set.
pub fn finish(pipeline: &Pipeline, ps: WeightedPointSet, threshold: f64, log: RunLog) -> Result<RunResult> {
    let soft = crate::soft::inclusion_scores(&ps, pipeline.alpha, pipeline.k)?;
    let mesh = extract_discrete(&soft, &ps, threshold);
    let boundary = pipeline.surface.boundary();
    let (mesh2, outside_vertices) = match cut_to_boundary(&mesh, boundary) {
        Ok(m) => (m, Vec::new()),
        Err(DwdtError::VerticesOutsideBoundary(out)) => {
            log::warn!("{} vertices ended outside the boundary; clipping", out.len());
            (clip_to_boundary(&mesh, boundary)?, out)
        }
        Err(e) => return Err(e),
    };
    let mesh3 = lift_mesh(pipeline.surface, &mesh2)?;
    Ok(RunResult {
        points: ps,
        mesh2,
        mesh3,
        log,
        outside_vertices,
    })
}

/// Lifts every vertex; unused vertices that cannot be lifted are first moved
/// to the closest boundary point.
pub fn lift_mesh(surface: &dyn Parameterization, mesh: &Mesh2) -> Result<Mesh3> {
    let vertices = mesh
        .vertices
        .iter()
        .zip(&mesh.used)
        .map(|(v, &used)| match surface.lift(v) {
            Ok(p) => Ok(p),
            Err(e) if used => Err(e),
            Err(_) => surface.lift(&surface.boundary().closest_point(v).point),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Mesh3 {
        vertices,
        faces: mesh.faces.clone(),
        used: mesh.used.clone(),
    })
}

/// Hard-membership view of a mesh: every face is a candidate with all corner
/// scores 1, so the losses become their discrete versions.
pub fn hard_membership(mesh: &Mesh2, template: &SoftTriangulation) -> SoftTriangulation {
    let mut candidates: Vec<CandidateTriangle> = mesh
        .faces
        .iter()
        .map(|f| CandidateTriangle::new(f[0], f[1], f[2]))
        .collect();
    candidates.sort_unstable();
    let m = candidates.len();
    SoftTriangulation {
        alpha: template.alpha,
        neighbors: template.neighbors.clone(),
        candidates,
        degenerate_dropped: 0,
        circumcenters: vec![Vec2::zeros(); m],
        corner_distances: vec![[f64::INFINITY; 3]; m],
        corner_argmin: vec![[None; 3]; m],
        corner_scores: vec![[1.0; 3]; m],
        corner_complements: vec![[0.0; 3]; m],
        scores: vec![1.0; m],
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnealingConfig {
    pub iterations: usize,
    /// Starting temperature; `None` picks one accepting about half of the
    /// initial worsening moves.
    pub temperature: Option<f64>,
    pub cooling: f64,
    /// Standard deviation of position proposals, relative to the mean
    /// vertex spacing `sqrt(area / n)`.
    pub position_step: f64,
    /// Standard deviation of weight proposals, relative to the domain diagonal.
    pub weight_step: f64,
    pub seed: u64,
    pub threshold: f64,
}

impl AnnealingConfig {
    pub fn new(iterations: usize, seed: u64) -> Self {
        Self {
            iterations,
            temperature: None,
            cooling: 0.999,
            position_step: 0.25,
            weight_step: 0.01,
            seed,
            threshold: 0.5,
        }
    }
}

/// Discrete loss of the weighted triangulation of `ps`.
pub fn discrete_loss(pipeline: &Pipeline, ps: &WeightedPointSet, threshold: f64) -> Result<(f64, Mesh2)> {
    let soft = crate::soft::inclusion_scores(ps, pipeline.alpha, pipeline.k)?;
    let mesh = extract_discrete(&soft, ps, threshold);
    let hard = hard_membership(&mesh, &soft);
    let ev = pipeline.evaluate_soft(ps, hard, false)?;
    Ok((ev.loss.total, mesh))
}

/// Metropolis search over single-vertex perturbations with geometric cooling,
/// minimizing the discrete loss. One proposal per iteration.
pub fn simulated_annealing_baseline(
    pipeline: &Pipeline,
    init: &WeightedPointSet,
    cfg: &AnnealingConfig,
) -> Result<RunResult> {
    pipeline.loss.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let boundary = pipeline.surface.boundary();
    let spacing = (boundary.area() / init.len().max(1) as f64).sqrt();
    let pos_noise = Normal::new(0.0, cfg.position_step * spacing).map_err(|e| DwdtError::Config(e.to_string()))?;
    let w_noise =
        Normal::new(0.0, cfg.weight_step * boundary.diagonal()).map_err(|e| DwdtError::Config(e.to_string()))?;
    let propose = |rng: &mut ChaCha8Rng, ps: &WeightedPointSet| -> Option<WeightedPointSet> {
        let mut next = ps.clone();
        let j = rng.gen_range(0..ps.len());
        if rng.gen_bool(0.5) {
            next.positions[j] += Vec2::new(pos_noise.sample(rng), pos_noise.sample(rng));
        } else {
            next.weights[j] += w_noise.sample(rng);
        }
        WeightedPointSet::new(next.positions, next.weights).ok()
    };

    let (mut current, mut mesh) = discrete_loss(pipeline, init, cfg.threshold)?;
    let mut ps = init.clone();
    let temperature0 = match cfg.temperature {
        Some(t) => t,
        None => {
            // probe moves from the start; exp(-mean worsening / T0) = 1/2
            let mut probe = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed);
            let mut worse = Vec::new();
            for _ in 0..32 {
                if let Some(q) = propose(&mut probe, &ps) {
                    if let Ok((l, _)) = discrete_loss(pipeline, &q, cfg.threshold) {
                        if l > current {
                            worse.push(l - current);
                        }
                    }
                }
            }
            if worse.is_empty() {
                0.0
            } else {
                worse.iter().sum::<f64>() / worse.len() as f64 / std::f64::consts::LN_2
            }
        }
    };
    let mut log = RunLog::default();
    let push = |log: &mut RunLog, it: usize, loss: f64, mesh: &Mesh2| {
        log.records.push(IterationRecord {
            iteration: it,
            total: loss,
            size: None,
            boundary: None,
            angle: None,
            curvature: None,
            candidates: mesh.faces.len(),
            branch_switches: 0,
            faces: mesh.faces.len(),
            manifold_violations: manifold_check(mesh).violation_count(),
        });
    };
    push(&mut log, 0, current, &mesh);
    log.snapshots.push(Snapshot {
        iteration: 0,
        points: ps.clone(),
        mesh: mesh.clone(),
    });
    let mut temperature = temperature0;
    for it in 1..=cfg.iterations {
        if let Some(q) = propose(&mut rng, &ps) {
            if let Ok((l, m)) = discrete_loss(pipeline, &q, cfg.threshold) {
                let delta = l - current;
                let accept = delta < 0.0 || (temperature > 0.0 && rng.gen::<f64>() < (-delta / temperature).exp());
                if accept {
                    ps = q;
                    current = l;
                    mesh = m;
                    log.accepted_moves += 1;
                }
            }
        }
        temperature *= cfg.cooling;
        push(&mut log, it, current, &mesh);
    }
    log.snapshots.push(Snapshot {
        iteration: cfg.iterations,
        points: ps.clone(),
        mesh,
    });
    finish(pipeline, ps, cfg.threshold, log)
}
