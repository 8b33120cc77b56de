use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwdt::experiments::{problem_from_config, uniform_target_area, Demo, Problem, SQUARE_FIELD};
use dwdt::geom::{Vec2, WeightedPointSet};
use dwdt::gradient::finite_difference_check;
use dwdt::io::{
    read_fields, read_obj_patch, read_points, render_mesh_svg, render_soft_svg, write_obj, write_points,
    write_run_log_csv, write_svg, Report, RunConfig, SvgStyle,
};
use dwdt::losses::{LossConfig, LossWeights};
use dwdt::mesh::{triangle_area_3d, Mesh2, Mesh3};
use dwdt::metrics::{metrics_report, DirectionSample, MetricSet, MetricsReport};
use dwdt::objective::Pipeline;
use dwdt::optimizer::{
    lift_mesh, optimize, simulated_annealing_baseline, AdamConfig, AnnealingConfig, OptimizeConfig, RunResult,
    DEFAULT_LEARNING_RATE,
};
use dwdt::oracle::brute_force_wdt;
use dwdt::soft::{extract_discrete, inclusion_scores, DEFAULT_ALPHA, DEFAULT_K};
use dwdt::surface::{ConstantField, PlanarDomain};
use dwdt::{DwdtError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Failure;

#[derive(Debug, Parser)]
#[command(name = "dwdt", version, about = "Differentiable weighted Delaunay triangulation")]
pub struct Cli {
    /// Worker threads [default: all cores]
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Log progress messages
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Soft and discrete triangulation of a point file
    Triangulate(TriangulateArgs),
    /// Optimize vertex positions and weights for a task
    Optimize(OptimizeArgs),
    /// Brute-force weighted Delaunay triangulation of a point file
    Oracle(OracleArgs),
    /// Finite-difference check of the loss gradients on random configurations
    Gradcheck(GradcheckArgs),
    /// Quality metrics of an OBJ mesh
    Metrics(MetricsArgs),
    /// Render a point file (soft triangulation) or an OBJ mesh (UV layout) as SVG
    Export(ExportArgs),
    /// Run a canned experiment
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct SoftArgs {
    /// Sigmoid sharpness of the inclusion scores
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Nearest neighbours per vertex for candidate triangles (clamped to n - 1)
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    /// Score above which a candidate belongs to the discrete triangulation
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct TriangulateArgs {
    /// Point file: one `x y [w]` row per vertex
    pub input: PathBuf,
    #[command(flatten)]
    pub soft: SoftArgs,
    /// Output directory for soft.svg, mesh.obj and report.txt
    #[arg(long, default_value = "out")]
    pub output: PathBuf,
    /// Compare the extraction with the brute-force triangulation (exit 3 on mismatch)
    #[arg(long)]
    pub compare_oracle: bool,
}

/// Run settings. Every flag mirrors a config-file key; flags override the file.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file of `key = value` lines
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Task: size, align, blend or custom [default: size]
    #[arg(long)]
    pub task: Option<String>,
    /// Domain: square, catenoid or patch [default: square]
    #[arg(long)]
    pub surface: Option<String>,
    /// Initial points (square, catenoid) or the UV-mapped OBJ (patch)
    #[arg(long)]
    pub input: Option<String>,
    /// Per-vertex field table of a patch (columns A, Cx Cy Cz, k1 k2)
    #[arg(long)]
    pub fields: Option<String>,
    /// Output directory [default: out]
    #[arg(long)]
    pub output: Option<String>,
    /// Vertices of a random initialization [default: 200]
    #[arg(long)]
    pub vertices: Option<String>,
    /// Weight of the triangle size loss [default: 1e7 for size and blend]
    #[arg(long)]
    pub size_weight: Option<String>,
    /// Weight of the boundary repulsion loss [default: 500]
    #[arg(long)]
    pub boundary_weight: Option<String>,
    /// Weight of the equilateral angle loss [default: 0.5 for size and blend]
    #[arg(long)]
    pub angle_weight: Option<String>,
    /// Weight of the curvature alignment loss [default: 1 for align]
    #[arg(long)]
    pub curvature_weight: Option<String>,
    /// Blend parameter: t * angle loss + (1 - t) * size loss [default: 0.5]
    #[arg(long)]
    pub t: Option<String>,
    /// Sigmoid sharpness of the inclusion scores [default: 1000]
    #[arg(long)]
    pub alpha: Option<String>,
    /// Nearest neighbours per vertex for candidate triangles [default: 80]
    #[arg(long)]
    pub k: Option<String>,
    /// Boundary repulsion margin in domain units [default: 0.01]
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Adam learning rate [default: 1e-4]
    #[arg(long)]
    pub lr: Option<String>,
    /// Optimization steps [default: 1500 for size and blend, 1000 for align]
    #[arg(long, visible_alias = "iters")]
    pub iterations: Option<String>,
    /// Seed of the random initialization [default: 0]
    #[arg(long)]
    pub seed: Option<String>,
    /// Snapshot cadence in iterations, 0 for first and last only [default: 100]
    #[arg(long)]
    pub snapshot_every: Option<String>,
    /// Score threshold of the discrete extraction [default: 0.5]
    #[arg(long)]
    pub threshold: Option<String>,
    /// Constant target triangle area [default: domain area / expected face count]
    #[arg(long)]
    pub target_area: Option<String>,
    /// Square direction field angle at the origin, radians [default: 0.3]
    #[arg(long)]
    pub field_angle: Option<String>,
    /// Square direction field angle gradient, x component [default: 1.5]
    #[arg(long)]
    pub field_gradient_x: Option<String>,
    /// Square direction field angle gradient, y component [default: 0.8]
    #[arg(long)]
    pub field_gradient_y: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> [(&'static str, Option<&String>); 23] {
        [
            ("task", self.task.as_ref()),
            ("surface", self.surface.as_ref()),
            ("input", self.input.as_ref()),
            ("fields", self.fields.as_ref()),
            ("output", self.output.as_ref()),
            ("vertices", self.vertices.as_ref()),
            ("size_weight", self.size_weight.as_ref()),
            ("boundary_weight", self.boundary_weight.as_ref()),
            ("angle_weight", self.angle_weight.as_ref()),
            ("curvature_weight", self.curvature_weight.as_ref()),
            ("t", self.t.as_ref()),
            ("alpha", self.alpha.as_ref()),
            ("k", self.k.as_ref()),
            ("epsilon", self.epsilon.as_ref()),
            ("lr", self.lr.as_ref()),
            ("iterations", self.iterations.as_ref()),
            ("seed", self.seed.as_ref()),
            ("snapshot_every", self.snapshot_every.as_ref()),
            ("threshold", self.threshold.as_ref()),
            ("target_area", self.target_area.as_ref()),
            ("field_angle", self.field_angle.as_ref()),
            ("field_gradient_x", self.field_gradient_x.as_ref()),
            ("field_gradient_y", self.field_gradient_y.as_ref()),
        ]
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)?;
            cfg.apply_text(&text, &path.display().to_string())?;
        }
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                cfg.set(key, v).map_err(|e| DwdtError::Config(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    /// Simulated annealing on the discrete loss, one proposal per Adam step
    Sa,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Also run a gradient-free baseline with the same number of loss evaluations
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Point file: one `x y [w]` row per vertex
    pub input: PathBuf,
    /// Write the triangulation to this OBJ file
    #[arg(long)]
    pub obj: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossTerm {
    All,
    Size,
    Boundary,
    Angle,
    Curvature,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// First seed of the random configurations
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Vertices per configuration
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    /// Configurations checked per loss
    #[arg(long, default_value_t = 10)]
    pub configs: usize,
    /// Loss to check
    #[arg(long, value_enum, default_value_t = LossTerm::All)]
    pub loss: LossTerm,
    /// Central-difference step
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    /// Largest accepted relative error (absolute floor 1e-8)
    #[arg(long, default_value_t = 1e-4)]
    pub tolerance: f64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// OBJ mesh with UV coordinates
    pub mesh: PathBuf,
    /// Per-vertex field table (A for size, Cx Cy Cz with k1 k2 for alignment)
    #[arg(long)]
    pub fields: Option<PathBuf>,
    /// Also write the report to this file
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Point file to render as a soft triangulation
    #[arg(long, conflicts_with = "mesh", required_unless_present = "mesh")]
    pub points: Option<PathBuf>,
    /// OBJ mesh to render in its UV layout, faces shaded by 3D area
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// SVG output file
    #[arg(long)]
    pub svg: PathBuf,
    /// Also write the discrete extraction of a point file to this OBJ
    #[arg(long, requires = "points")]
    pub obj: Option<PathBuf>,
    #[command(flatten)]
    pub soft: SoftArgs,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    /// catenoid-equal, catenoid-curvature, square-align or square-size
    pub name: Demo,
    /// Vertices of the random initialization
    #[arg(long, default_value_t = 200)]
    pub vertices: usize,
    /// Seed of the random initialization
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Optimization steps [default: 1500 for size demos, 1000 for square-align]
    #[arg(long, visible_alias = "iters")]
    pub iterations: Option<usize>,
    /// Adam learning rate
    #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
    pub lr: f64,
    /// Snapshot cadence in iterations
    #[arg(long, default_value_t = 100)]
    pub snapshot_every: usize,
    /// Output directory
    #[arg(long, default_value = "out")]
    pub output: PathBuf,
    /// Also run a gradient-free baseline with the same number of loss evaluations
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
}

pub fn run(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Triangulate(a) => triangulate(&a),
        Command::Optimize(a) => {
            let cfg = a.run.resolve()?;
            let problem = problem_from_config(&cfg)?;
            let settings = RunSettings {
                iterations: problem.iterations,
                adam: cfg.adam(),
                snapshot_every: cfg.snapshot_every,
                threshold: cfg.threshold,
                seed: cfg.seed,
                baseline: a.baseline,
            };
            run_problem(&problem, &settings, &cfg.output, cfg.report())?;
            Ok(())
        }
        Command::Oracle(a) => oracle(&a),
        Command::Gradcheck(a) => gradcheck(&a),
        Command::Metrics(a) => metrics(&a),
        Command::Export(a) => export(&a),
        Command::Demo(a) => {
            let mut problem = a.name.problem(a.vertices, a.seed)?;
            if let Some(it) = a.iterations {
                problem.iterations = it;
            }
            let settings = RunSettings {
                iterations: problem.iterations,
                adam: AdamConfig {
                    learning_rate: a.lr,
                    ..AdamConfig::default()
                },
                snapshot_every: a.snapshot_every,
                threshold: 0.5,
                seed: a.seed,
                baseline: a.baseline,
            };
            let mut header = Report::new();
            header
                .text("demo", a.name)
                .text("vertices", a.vertices)
                .text("seed", a.seed)
                .text("iterations", problem.iterations)
                .number("lr", a.lr);
            run_problem(&problem, &settings, &a.output, header)?;
            Ok(())
        }
    }
}

fn triangulate(a: &TriangulateArgs) -> std::result::Result<(), Failure> {
    let ps = read_points(&a.input)?;
    let k = a.soft.k.min(ps.len().saturating_sub(1));
    let soft = inclusion_scores(&ps, a.soft.alpha, k)?;
    let mesh = extract_discrete(&soft, &ps, a.soft.threshold);
    fs::create_dir_all(&a.output)?;
    write_svg(
        &render_soft_svg(&soft, &ps, &SvgStyle {
            show_points: true,
            ..SvgStyle::default()
        }),
        &a.output.join("soft.svg"),
    )?;
    write_obj(&mesh.to_3d(), Some(&mesh.vertices), &a.output.join("mesh.obj"))?;

    let mut r = Report::new();
    r.text("input", a.input.display())
        .text("vertices", ps.len())
        .number("alpha", a.soft.alpha)
        .text("k", a.soft.k)
        .text("effective_k", soft.neighbors.k())
        .number("threshold", a.soft.threshold)
        .text("candidates", soft.len())
        .text("degenerate_dropped", soft.degenerate_dropped)
        .text("faces", mesh.faces.len())
        .text("unused_vertices", ps.len() - mesh.num_used());
    let mut matched = true;
    if a.compare_oracle {
        let oracle = brute_force_wdt(&ps)?;
        let (got, want) = (mesh.canonical_face_set(), oracle.canonical_face_set());
        matched = got == want;
        r.text("oracle_faces", want.len())
            .text("missing_faces", want.difference(&got).count())
            .text("extra_faces", got.difference(&want).count())
            .text("oracle", if matched { "MATCH" } else { "MISMATCH" });
    }
    r.write(&a.output.join("report.txt"))?;
    print!("{r}");
    if a.compare_oracle {
        println!("{}", if matched { "MATCH" } else { "MISMATCH" });
    }
    if matched {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn oracle(a: &OracleArgs) -> std::result::Result<(), Failure> {
    let ps = read_points(&a.input)?;
    let mesh = brute_force_wdt(&ps)?;
    if let Some(path) = &a.obj {
        write_obj(&mesh.to_3d(), Some(&mesh.vertices), path)?;
    }
    let redundant: Vec<String> = (0..ps.len()).filter(|&i| !mesh.used[i]).map(|i| i.to_string()).collect();
    let mut r = Report::new();
    r.text("vertices", ps.len())
        .text("faces", mesh.faces.len())
        .text("redundant_vertices", if redundant.is_empty() { "none".into() } else { redundant.join(" ") });
    print!("{r}");
    for f in &mesh.faces {
        println!("face {} {} {}", f[0], f[1], f[2]);
    }
    Ok(())
}

fn gradcheck(a: &GradcheckArgs) -> std::result::Result<(), Failure> {
    if a.n < 4 {
        return Err(DwdtError::Config(format!("--n must be at least 4, got {}", a.n)).into());
    }
    let domain = PlanarDomain::unit_square();
    let one = |size, boundary, angle, curvature| LossWeights {
        size,
        boundary,
        angle,
        curvature,
    };
    let terms = [
        (LossTerm::Size, "size", one(1.0, 0.0, 0.0, 0.0)),
        (LossTerm::Boundary, "boundary", one(0.0, 1.0, 0.0, 0.0)),
        (LossTerm::Angle, "angle", one(0.0, 0.0, 1.0, 0.0)),
        (LossTerm::Curvature, "curvature", one(0.0, 0.0, 0.0, 1.0)),
    ];
    let mut all_pass = true;
    for (term, name, weights) in terms {
        if a.loss != LossTerm::All && a.loss != term {
            continue;
        }
        let mut cfg = LossConfig::new(weights);
        // wide enough that the barrier is active at a few random vertices
        cfg.epsilon = 0.05;
        let (mut checked, mut passed, mut worst) = (0, 0, 0.0f64);
        let mut seed = a.seed;
        while checked < a.configs && seed < a.seed + 1000 * a.configs as u64 {
            let ps = random_points(seed, a.n)?;
            seed += 1;
            let area = ConstantField(uniform_target_area(1.0, &ps)?);
            let pipe = Pipeline::new(&domain, cfg).with_area(&area).with_direction(&SQUARE_FIELD);
            let ev = pipe.evaluate(&ps, false)?;
            let (score_gap, min_gap) = ev.soft.transition_margins(&ps);
            let near_cutoff = weights.curvature > 0.0 && ev.soft.score_distance(cfg.curvature_cutoff) <= 1e-5;
            if score_gap <= 0.05 || min_gap <= 1e-4 || near_cutoff {
                continue;
            }
            let r = finite_difference_check(&pipe, &ps, a.h)?;
            checked += 1;
            if r.max_rel_error < a.tolerance {
                passed += 1;
            } else {
                println!(
                    "{name}: seed {} failed, parameter {} analytic {:e} numeric {:e}",
                    seed - 1,
                    r.worst_param,
                    r.analytic,
                    r.numeric
                );
            }
            worst = worst.max(r.max_rel_error);
        }
        let ok = checked == a.configs && passed == checked;
        all_pass &= ok;
        println!(
            "{name}: {passed}/{checked} configurations within {:e}, max rel. error {worst:.3e} {}",
            a.tolerance,
            if ok { "PASS" } else { "FAIL" }
        );
    }
    if all_pass {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn random_points(seed: u64, n: usize) -> Result<WeightedPointSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..n).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
    let weights = (0..n).map(|_| rng.gen::<f64>() * 0.05).collect();
    WeightedPointSet::new(positions, weights)
}

fn metrics(a: &MetricsArgs) -> std::result::Result<(), Failure> {
    let patch = read_obj_patch(&a.mesh)?;
    let mesh = Mesh3::new(patch.positions.clone(), patch.faces.clone());
    let table = a.fields.as_ref().map(|p| read_fields(p, Some(mesh.vertices.len()))).transpose()?;
    let area = table.as_ref().and_then(|t| t.area.clone());
    let dirs: Option<Vec<DirectionSample>> = table.as_ref().and_then(|t| {
        let (d, k) = (t.direction.as_ref()?, t.curvatures.as_ref()?);
        Some(
            d.iter()
                .zip(k)
                .map(|(&direction, &(k1, k2))| DirectionSample { direction, k1, k2 })
                .collect(),
        )
    });
    let m = metrics_report(&mesh, area.as_deref(), dirs.as_deref())?;
    let mut r = Report::new();
    r.text("mesh", a.mesh.display());
    metric_entries(&mut r, "", &m);
    print!("{r}");
    if let Some(p) = &a.output {
        r.write(p)?;
    }
    Ok(())
}

fn export(a: &ExportArgs) -> std::result::Result<(), Failure> {
    if let Some(p) = &a.points {
        let ps = read_points(p)?;
        let k = a.soft.k.min(ps.len().saturating_sub(1));
        let soft = inclusion_scores(&ps, a.soft.alpha, k)?;
        let style = SvgStyle {
            show_points: true,
            ..SvgStyle::default()
        };
        write_svg(&render_soft_svg(&soft, &ps, &style), &a.svg)?;
        if let Some(obj) = &a.obj {
            let mesh = extract_discrete(&soft, &ps, a.soft.threshold);
            write_obj(&mesh.to_3d(), Some(&mesh.vertices), obj)?;
        }
    } else if let Some(m) = &a.mesh {
        let patch = read_obj_patch(m)?;
        let mesh = Mesh2::new(patch.uvs.clone(), patch.faces.clone());
        let areas = patch
            .faces
            .iter()
            .map(|f| triangle_area_3d(&patch.positions[f[0]], &patch.positions[f[1]], &patch.positions[f[2]]))
            .collect();
        let style = SvgStyle {
            face_values: Some(areas),
            show_points: false,
        };
        write_svg(&render_mesh_svg(&mesh, &style), &a.svg)?;
    }
    Ok(())
}

struct RunSettings {
    iterations: usize,
    adam: AdamConfig,
    snapshot_every: usize,
    threshold: f64,
    seed: u64,
    baseline: Option<Baseline>,
}

fn metric_entries(r: &mut Report, prefix: &str, m: &MetricsReport) {
    for (part, set) in [("", &m.all), ("interior.", &m.interior)] {
        let set: &MetricSet = set;
        r.text(format!("{prefix}{part}vertices"), set.vertices)
            .text(format!("{prefix}{part}faces"), set.faces)
            .optional(format!("{prefix}{part}size_rmse"), set.size_rmse)
            .optional(format!("{prefix}{part}relative_size_rmse"), set.relative_size_rmse)
            .optional(format!("{prefix}{part}alignment_rmse"), set.alignment_rmse)
            .optional(format!("{prefix}{part}alignment_mean"), set.alignment_mean)
            .optional(format!("{prefix}{part}angle_mean"), set.angle_mean)
            .optional(format!("{prefix}{part}angle_std"), set.angle_std)
            .optional(format!("{prefix}{part}area_cv"), set.area_cv);
    }
}

fn lifted(problem: &Problem, mesh: &Mesh2) -> Result<Mesh3> {
    lift_mesh(problem.surface.as_ref(), mesh)
}

fn write_mesh(problem: &Problem, mesh: &Mesh2, stem: &Path) -> Result<Mesh3> {
    let m3 = lifted(problem, mesh)?;
    write_obj(&m3, Some(&mesh.vertices), &stem.with_extension("obj"))?;
    write_svg(&render_mesh_svg(mesh, &SvgStyle::default()), &stem.with_extension("svg"))?;
    Ok(m3)
}

/// Metrics of the first and last extracted snapshots (before the boundary
/// cut) and of the final cut mesh.
fn run_metrics(problem: &Problem, r: &RunResult, out: &mut Report, prefix: &str) -> Result<()> {
    let first = &r.log.snapshots[0].mesh;
    let last = &r.log.snapshots.last().expect("first snapshot always kept").mesh;
    metric_entries(out, &format!("{prefix}initial."), &problem.metrics(first, &lifted(problem, first)?)?);
    metric_entries(out, &format!("{prefix}final."), &problem.metrics(last, &lifted(problem, last)?)?);
    metric_entries(out, &format!("{prefix}final_cut."), &problem.metrics(&r.mesh2, &r.mesh3)?);
    out.text(format!("{prefix}outside_vertices"), r.outside_vertices.len())
        .text(format!("{prefix}manifold_violations"), r.log.total_manifold_violations())
        .text(format!("{prefix}aborted"), r.log.aborted.as_deref().unwrap_or("no"));
    Ok(())
}

fn run_problem(problem: &Problem, s: &RunSettings, dir: &Path, header: Report) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))?;
    header.write(&dir.join("config.txt"))?;
    let pipeline = problem.pipeline();
    let cfg = OptimizeConfig {
        adam: s.adam,
        iterations: s.iterations,
        snapshot_every: s.snapshot_every,
        threshold: s.threshold,
    };
    log::info!("optimizing {} vertices for {} iterations", problem.init.len(), s.iterations);
    let result = optimize(&pipeline, &problem.init, &cfg)?;

    write_points(&problem.init, &dir.join("initial_points.txt"))?;
    write_points(&result.points, &dir.join("final_points.txt"))?;
    for snap in &result.log.snapshots {
        write_mesh(problem, &snap.mesh, &dir.join(format!("snapshots/iter_{:05}", snap.iteration)))?;
    }
    write_mesh(problem, &result.log.snapshots[0].mesh, &dir.join("initial"))?;
    write_obj(&result.mesh3, Some(&result.mesh2.vertices), &dir.join("final.obj"))?;
    write_svg(&render_mesh_svg(&result.mesh2, &SvgStyle::default()), &dir.join("final.svg"))?;
    let mut csv = Vec::new();
    write_run_log_csv(&result.log, &mut csv)?;
    fs::write(dir.join("log.csv"), csv)?;

    let mut report = Report::new();
    run_metrics(problem, &result, &mut report, "")?;

    if s.baseline == Some(Baseline::Sa) {
        let mut a = AnnealingConfig::new(s.iterations, s.seed);
        a.threshold = s.threshold;
        log::info!("running the annealing baseline for {} proposals", s.iterations);
        let sa = simulated_annealing_baseline(&pipeline, &problem.init, &a)?;
        write_obj(&sa.mesh3, Some(&sa.mesh2.vertices), &dir.join("sa_final.obj"))?;
        let mut csv = Vec::new();
        write_run_log_csv(&sa.log, &mut csv)?;
        fs::write(dir.join("sa_log.csv"), csv)?;
        run_metrics(problem, &sa, &mut report, "sa.")?;
        report.text("sa.accepted_moves", sa.log.accepted_moves);
        print_comparison(&report);
    }
    report.write(&dir.join("metrics.txt"))?;
    print!("{header}{report}");
    Ok(())
}

fn print_comparison(r: &Report) {
    println!("{:<22} {:>14} {:>14} {:>14}", "metric", "initial", "adam", "sa");
    for key in ["size_rmse", "relative_size_rmse", "alignment_mean", "angle_std", "area_cv"] {
        let get = |k: String| r.get(&k).and_then(|v| v.parse::<f64>().ok());
        let (i, a, s) = (
            get(format!("initial.{key}")),
            get(format!("final.{key}")),
            get(format!("sa.final.{key}")),
        );
        if i.is_none() {
            continue;
        }
        let cell = |x: Option<f64>| x.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into());
        println!("{key:<22} {:>14} {:>14} {:>14}", cell(i), cell(a), cell(s));
    }
}
