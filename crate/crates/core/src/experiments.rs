//! Canned optimization problems on the unit square and the catenoid.

use std::fmt;
use std::str::FromStr;

use crate::error::{DwdtError, Result};
use crate::geom::{Vec2, WeightedPointSet};
use crate::io::{read_fields, read_obj_patch, read_points, RunConfig, SurfaceKind, Task};
use crate::losses::LossConfig;
use crate::mesh::{triangle_area_3d, Mesh2, Mesh3};
use crate::metrics::{metrics_report, sample_area, sample_directions, MetricsReport};
use crate::objective::Pipeline;
use crate::optimizer::{init_from_patch, init_uniform, ALIGN_TASK_ITERATIONS, SIZE_TASK_ITERATIONS};
use crate::soft::{DEFAULT_ALPHA, DEFAULT_K};
use crate::surface::{
    AnalyticSurface, AngleField, CatenoidCurvatureArea, CatenoidMeridians, ConstantField, DirectionField,
    Parameterization, PlanarDomain, ScalarField,
};

/// Angle field of the square alignment problem.
pub const SQUARE_FIELD: AngleField = AngleField {
    t0: 0.3,
    g: Vec2::new(1.5, 0.8),
    k1: 1.0,
    k2: 0.0,
};

/// One optimization problem: surface, fields, loss and initialization.
pub struct Problem {
    pub surface: Box<dyn Parameterization>,
    pub area: Option<Box<dyn ScalarField>>,
    pub direction: Option<Box<dyn DirectionField>>,
    pub loss: LossConfig,
    pub init: WeightedPointSet,
    pub iterations: usize,
    pub alpha: f64,
    pub k: usize,
}

impl Problem {
    pub fn new(surface: Box<dyn Parameterization>, loss: LossConfig, init: WeightedPointSet, iterations: usize) -> Self {
        Self {
            surface,
            area: None,
            direction: None,
            loss,
            init,
            iterations,
            alpha: DEFAULT_ALPHA,
            k: DEFAULT_K,
        }
    }

    pub fn pipeline(&self) -> Pipeline<'_> {
        let mut p = Pipeline::new(self.surface.as_ref(), self.loss);
        p.area = self.area.as_deref();
        p.direction = self.direction.as_deref();
        p.alpha = self.alpha;
        p.k = self.k;
        p
    }

    /// Metrics of a mesh over this problem's domain, with the fields sampled
    /// at the 2D vertices.
    pub fn metrics(&self, mesh2: &Mesh2, mesh3: &Mesh3) -> Result<MetricsReport> {
        let area = self.area.as_deref().map(|f| sample_area(mesh2, f)).transpose()?;
        // directions without curvature magnitudes have no alignment metric
        let dirs = match self.direction.as_deref().map(|f| sample_directions(mesh2, f)) {
            Some(Ok(d)) => Some(d),
            Some(Err(DwdtError::Config(_))) | None => None,
            Some(Err(e)) => return Err(e),
        };
        metrics_report(mesh3, area.as_deref(), dirs.as_deref())
    }
}

/// Number of convex hull vertices (collinear points on hull edges excluded).
pub fn convex_hull_size(points: &[Vec2]) -> usize {
    let mut p: Vec<Vec2> = points.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p.len();
    }
    let cross = |o: &Vec2, a: &Vec2, b: &Vec2| (a - o).perp(&(b - o));
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 { Box::new(p.iter()) } else { Box::new(p.iter().rev()) };
        for q in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], q) <= 0.0 {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull.len()
}

/// Triangle count of a triangulation of `points` using every point:
/// `2n - 2 - h` with `h` hull vertices.
pub fn expected_triangle_count(points: &[Vec2]) -> usize {
    (2 * points.len()).saturating_sub(2 + convex_hull_size(points))
}

/// Uniform target area: `total` split evenly over the expected triangle
/// count of the initial positions.
pub fn uniform_target_area(total: f64, init: &WeightedPointSet) -> Result<f64> {
    let faces = expected_triangle_count(&init.positions);
    if faces == 0 {
        return Err(DwdtError::InvalidInput("too few points for a triangle".into()));
    }
    Ok(total / faces as f64)
}

pub fn square_size(n: usize, seed: u64) -> Result<Problem> {
    let domain = PlanarDomain::unit_square();
    let init = init_uniform(&domain.boundary, n, seed)?;
    let target = uniform_target_area(domain.boundary.area(), &init)?;
    let mut p = Problem::new(Box::new(domain), LossConfig::size_task(), init, SIZE_TASK_ITERATIONS);
    p.area = Some(Box::new(ConstantField(target)));
    Ok(p)
}

pub fn square_align(n: usize, seed: u64) -> Result<Problem> {
    let domain = PlanarDomain::unit_square();
    let init = init_uniform(&domain.boundary, n, seed)?;
    let mut p = Problem::new(Box::new(domain), LossConfig::curvature_task(), init, ALIGN_TASK_ITERATIONS);
    p.direction = Some(Box::new(SQUARE_FIELD));
    Ok(p)
}

pub fn catenoid_equal(n: usize, seed: u64) -> Result<Problem> {
    let cat = AnalyticSurface::catenoid();
    let init = init_uniform(cat.boundary(), n, seed)?;
    let target = uniform_target_area(cat.surface_area(), &init)?;
    let mut p = Problem::new(Box::new(cat), LossConfig::size_task(), init, SIZE_TASK_ITERATIONS);
    p.area = Some(Box::new(ConstantField(target)));
    p.direction = Some(Box::new(CatenoidMeridians));
    Ok(p)
}

/// Target area proportional to `cosh^2 v`, the inverse of the absolute
/// principal curvature, scaled so the targets add up to the surface area.
pub fn catenoid_curvature(n: usize, seed: u64) -> Result<Problem> {
    let cat = AnalyticSurface::catenoid();
    let init = init_uniform(cat.boundary(), n, seed)?;
    let per_face = uniform_target_area(cat.surface_area(), &init)?;
    // area-weighted mean of cosh^2 over v in [-1, 1]
    let s2 = 2f64.sinh();
    let mean_cosh2 = (0.75 + 0.5 * s2 + 4f64.sinh() / 16.0) / (1.0 + 0.5 * s2);
    let mut p = Problem::new(Box::new(cat), LossConfig::size_task(), init, SIZE_TASK_ITERATIONS);
    p.area = Some(Box::new(CatenoidCurvatureArea {
        scale: per_face / mean_cosh2,
    }));
    p.direction = Some(Box::new(CatenoidMeridians));
    Ok(p)
}

/// Builds the problem a run configuration describes.
///
/// On the square and the catenoid, `input` (if any) is a point file used as
/// the initialization; otherwise `vertices` points are drawn uniformly. On a
/// patch, `input` is the OBJ, its UVs are normalized and its vertices are the
/// initialization; per-vertex fields come from `fields`.
pub fn problem_from_config(cfg: &RunConfig) -> Result<Problem> {
    cfg.validate()?;
    let task_needs_area = matches!(cfg.task, Task::Size | Task::Blend) || cfg.weights().size > 0.0;
    let task_needs_direction = cfg.weights().curvature > 0.0;
    let mut p = match cfg.surface {
        SurfaceKind::Square | SurfaceKind::Catenoid => {
            let surface: Box<dyn Parameterization> = match cfg.surface {
                SurfaceKind::Square => Box::new(PlanarDomain::unit_square()),
                _ => Box::new(AnalyticSurface::catenoid()),
            };
            let init = match &cfg.input {
                Some(path) => read_points(path)?,
                None => init_uniform(surface.boundary(), cfg.vertices, cfg.seed)?,
            };
            let total = match cfg.surface {
                SurfaceKind::Square => surface.boundary().area(),
                _ => AnalyticSurface::catenoid().surface_area(),
            };
            let target = match cfg.target_area {
                Some(a) => a,
                None => uniform_target_area(total, &init)?,
            };
            let direction: Box<dyn DirectionField> = match cfg.surface {
                SurfaceKind::Square => Box::new(AngleField {
                    t0: cfg.field_angle,
                    g: Vec2::new(cfg.field_gradient_x, cfg.field_gradient_y),
                    k1: 1.0,
                    k2: 0.0,
                }),
                _ => Box::new(CatenoidMeridians),
            };
            let mut p = Problem::new(surface, cfg.loss_config(), init, cfg.iterations());
            p.area = Some(Box::new(ConstantField(target)));
            p.direction = Some(direction);
            p
        }
        SurfaceKind::Patch => {
            let path = cfg.input.as_ref().expect("validated");
            let mut patch = read_obj_patch(path)?;
            if let Some(fp) = &cfg.fields {
                let table = read_fields(fp, Some(patch.positions.len()))?;
                if let Some(a) = table.area {
                    patch = patch.with_area(a)?;
                }
                if let Some(d) = table.direction {
                    patch = patch.with_direction(d)?;
                }
                if let Some(k) = table.curvatures {
                    patch = patch.with_curvatures(k)?;
                }
            }
            patch.normalize_uv();
            let init = init_from_patch(&patch, cfg.seed)?;
            let mut p = Problem::new(Box::new(patch.clone()), cfg.loss_config(), init, cfg.iterations());
            p.area = match (cfg.target_area, patch.area.is_some()) {
                (Some(a), _) => Some(Box::new(ConstantField(a))),
                (None, true) => Some(Box::new(patch.clone())),
                (None, false) if task_needs_area => {
                    let area: f64 = patch
                        .faces
                        .iter()
                        .map(|f| triangle_area_3d(&patch.positions[f[0]], &patch.positions[f[1]], &patch.positions[f[2]]))
                        .sum();
                    Some(Box::new(ConstantField(uniform_target_area(area, &p.init)?)))
                }
                (None, false) => None,
            };
            if patch.direction.is_some() {
                p.direction = Some(Box::new(patch));
            } else if task_needs_direction {
                return Err(DwdtError::Config("the alignment loss needs a direction field (Cx Cy Cz)".into()));
            }
            p
        }
    };
    p.alpha = cfg.alpha;
    p.k = cfg.k;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Demo {
    CatenoidEqual,
    CatenoidCurvature,
    SquareAlign,
    SquareSize,
}

impl Demo {
    pub const ALL: [Demo; 4] = [Demo::CatenoidEqual, Demo::CatenoidCurvature, Demo::SquareAlign, Demo::SquareSize];

    pub fn problem(self, n: usize, seed: u64) -> Result<Problem> {
        match self {
            Demo::CatenoidEqual => catenoid_equal(n, seed),
            Demo::CatenoidCurvature => catenoid_curvature(n, seed),
            Demo::SquareAlign => square_align(n, seed),
            Demo::SquareSize => square_size(n, seed),
        }
    }
}

impl FromStr for Demo {
    type Err = DwdtError;

    fn from_str(s: &str) -> Result<Self> {
        Demo::ALL
            .into_iter()
            .find(|d| d.to_string() == s)
            .ok_or_else(|| {
                DwdtError::Config(format!(
                    "unknown demo `{s}` (catenoid-equal, catenoid-curvature, square-align, square-size)"
                ))
            })
    }
}

impl fmt::Display for Demo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Demo::CatenoidEqual => "catenoid-equal",
            Demo::CatenoidCurvature => "catenoid-curvature",
            Demo::SquareAlign => "square-align",
            Demo::SquareSize => "square-size",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hull_and_triangle_count() {
        let mut pts = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(0.4, 0.6),
        ];
        assert_eq!(convex_hull_size(&pts), 4);
        // a square with one interior point: 4 triangles
        pts.remove(4);
        assert_eq!(expected_triangle_count(&pts), 4);
        // matches the unweighted Delaunay triangulation of random points
        let init = crate::optimizer::init_uniform(&PlanarDomain::unit_square().boundary, 60, 3).unwrap();
        let ps = WeightedPointSet::unweighted(init.positions.clone()).unwrap();
        let soft = crate::soft::inclusion_scores(&ps, DEFAULT_ALPHA, DEFAULT_K).unwrap();
        let mesh = crate::soft::extract_discrete(&soft, &ps, 0.5);
        assert_eq!(mesh.faces.len(), expected_triangle_count(&ps.positions));
    }

    #[test]
    fn config_builds_the_demo_problems() {
        let cfg = RunConfig::parse("task = size\nvertices = 50\nseed = 3", "c").unwrap();
        let p = problem_from_config(&cfg).unwrap();
        let q = square_size(50, 3).unwrap();
        assert_eq!(p.init, q.init);
        let x = Vec2::new(0.3, 0.4);
        assert_eq!(p.area.unwrap().sample(&x).unwrap(), q.area.unwrap().sample(&x).unwrap());
        assert_eq!(p.loss, q.loss);

        let cfg = RunConfig::parse("task = align\nsurface = catenoid\nvertices = 40", "c").unwrap();
        let p = problem_from_config(&cfg).unwrap();
        assert_eq!(p.iterations, 1000);
        assert_eq!(p.init, init_uniform(AnalyticSurface::catenoid().boundary(), 40, 0).unwrap());
    }

    #[test]
    fn patch_without_direction_rejects_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let obj = dir.path().join("quad.obj");
        std::fs::write(&obj, "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nf 1/1 2/2 3/3\nf 1/1 3/3 4/4\n")
            .unwrap();
        let text = format!("surface = patch\ninput = {}\n", obj.display());
        let p = problem_from_config(&RunConfig::parse(&text, "c").unwrap()).unwrap();
        assert_eq!(p.init.len(), 4);
        assert!(p.area.is_some() && p.direction.is_none());
        let align = format!("{text}task = align\n");
        assert!(matches!(
            problem_from_config(&RunConfig::parse(&align, "c").unwrap()),
            Err(DwdtError::Config(_))
        ));
    }

    #[test]
    fn names_round_trip() {
        for d in Demo::ALL {
            assert_eq!(d.to_string().parse::<Demo>().unwrap(), d);
        }
        assert!("square".parse::<Demo>().is_err());
    }

    #[test]
    fn curvature_targets_sum_to_the_surface_area() {
        // midpoint rule over the parameter domain
        let p = catenoid_curvature(100, 1).unwrap();
        let faces = expected_triangle_count(&p.init.positions) as f64;
        let area = p.area.as_ref().unwrap();
        let (nu, nv) = (200, 200);
        let (du, dv) = (2.0 * std::f64::consts::PI / nu as f64, 2.0 / nv as f64);
        let mut weighted = 0.0;
        for i in 0..nu {
            for j in 0..nv {
                let v = -1.0 + (j as f64 + 0.5) * dv;
                let x = Vec2::new((i as f64 + 0.5) * du, v);
                weighted += area.sample(&x).unwrap() * v.cosh().powi(2) * du * dv;
            }
        }
        let total = AnalyticSurface::catenoid().surface_area();
        // mean target over the surface equals the uniform per-face share
        assert!((weighted / total - total / faces).abs() < 1e-4 * total / faces);
    }

    #[test]
    fn problems_build() {
        for d in Demo::ALL {
            let p = d.problem(30, 2).unwrap();
            assert_eq!(p.init.len(), 30);
            let ev = p.pipeline().evaluate(&p.init, true).unwrap();
            assert!(ev.loss.total.is_finite());
        }
    }
}
