//! Quality measures of discrete output meshes.

use crate::error::{DwdtError, Result};
use crate::geom::{Vec2, Vec3};
use crate::mesh::{triangle_area_3d, Mesh2, Mesh3};
use crate::surface::{DirectionField, ScalarField};

/// Mean and population standard deviation.
fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Average area of the faces around each vertex; `None` for unused vertices.
pub fn vertex_sizes(mesh: &Mesh3) -> Vec<Option<f64>> {
    let mut sum = vec![0.0; mesh.vertices.len()];
    let mut count = vec![0usize; mesh.vertices.len()];
    for f in &mesh.faces {
        let a = triangle_area_3d(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]);
        for &v in f {
            sum[v] += a;
            count[v] += 1;
        }
    }
    sum.iter()
        .zip(&count)
        .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
        .collect()
}

fn paired_sizes(mesh: &Mesh3, target: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if target.len() != mesh.vertices.len() {
        return Err(DwdtError::InvalidInput(format!(
            "{} target values for {} vertices",
            target.len(),
            mesh.vertices.len()
        )));
    }
    let (mut a, mut t) = (Vec::new(), Vec::new());
    for (j, s) in vertex_sizes(mesh).into_iter().enumerate() {
        if let Some(s) = s {
            a.push(s);
            t.push(target[j]);
        }
    }
    if a.is_empty() {
        return Err(DwdtError::InvalidInput("mesh has no faces".into()));
    }
    Ok((a, t))
}

fn rmse(a: &[f64], b: &[f64]) -> f64 {
    (a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
}

/// RMSE between the z-scored per-vertex achieved sizes and the z-scored
/// targets, over used vertices.
pub fn size_rmse(mesh: &Mesh3, target: &[f64]) -> Result<f64> {
    let (a, t) = paired_sizes(mesh, target)?;
    let z = |xs: &[f64], what: &'static str| -> Result<Vec<f64>> {
        let (m, s) = mean_std(xs);
        if !(s > 1e-12 * m.abs().max(f64::MIN_POSITIVE)) {
            return Err(DwdtError::UndefinedNormalization(what));
        }
        Ok(xs.iter().map(|x| (x - m) / s).collect())
    };
    Ok(rmse(&z(&a, "achieved sizes")?, &z(&t, "target sizes")?))
}

/// RMSE between achieved and target sizes, each divided by its mean. Unlike
/// [`size_rmse`] it is defined for a constant target.
pub fn relative_size_rmse(mesh: &Mesh3, target: &[f64]) -> Result<f64> {
    let (a, t) = paired_sizes(mesh, target)?;
    let (ma, _) = mean_std(&a);
    let (mt, _) = mean_std(&t);
    if !(ma > 0.0 && mt > 0.0) {
        return Err(DwdtError::UndefinedNormalization("mean size"));
    }
    let a: Vec<f64> = a.iter().map(|x| x / ma).collect();
    let t: Vec<f64> = t.iter().map(|x| x / mt).collect();
    Ok(rmse(&a, &t))
}

/// Standard deviation of the face areas over their mean.
pub fn area_coefficient_of_variation(mesh: &Mesh3) -> Result<f64> {
    if mesh.faces.is_empty() {
        return Err(DwdtError::InvalidInput("mesh has no faces".into()));
    }
    let areas: Vec<f64> = mesh
        .faces
        .iter()
        .map(|f| triangle_area_3d(&mesh.vertices[f[0]], &mesh.vertices[f[1]], &mesh.vertices[f[2]]))
        .collect();
    let (m, s) = mean_std(&areas);
    Ok(s / m)
}

/// Mean and standard deviation of all corner angles, in degrees.
pub fn angle_stats(mesh: &Mesh3) -> Result<(f64, f64)> {
    if mesh.faces.is_empty() {
        return Err(DwdtError::InvalidInput("mesh has no faces".into()));
    }
    let mut angles = Vec::with_capacity(3 * mesh.faces.len());
    for f in &mesh.faces {
        for c in 0..3 {
            let p = mesh.vertices[f[c]];
            let a = mesh.vertices[f[(c + 1) % 3]] - p;
            let b = mesh.vertices[f[(c + 2) % 3]] - p;
            angles.push(a.angle(&b).to_degrees());
        }
    }
    Ok(mean_std(&angles))
}

/// Per-vertex prescribed direction with its principal curvatures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionSample {
    pub direction: Vec3,
    pub k1: f64,
    pub k2: f64,
}

/// Weighted alignment errors in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentError {
    pub rmse: f64,
    pub mean: f64,
    pub vertices: usize,
}

/// `|k1 - k2| / (0.5 (|k1| + |k2|))`, or `None` at (near) zero curvature.
pub fn alignment_weight(k1: f64, k2: f64) -> Option<f64> {
    let s = k1.abs() + k2.abs();
    (s >= 1e-12).then(|| (k1 - k2).abs() / (0.5 * s))
}

/// Angles between `+C` and `-C` and their best-aligned edges at every used
/// vertex, weighted by [`alignment_weight`]. Vertices with zero weight are
/// skipped.
pub fn curvature_alignment_error(mesh: &Mesh3, samples: &[DirectionSample]) -> Result<AlignmentError> {
    if samples.len() != mesh.vertices.len() {
        return Err(DwdtError::InvalidInput(format!(
            "{} direction samples for {} vertices",
            samples.len(),
            mesh.vertices.len()
        )));
    }
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); mesh.vertices.len()];
    for f in &mesh.faces {
        for c in 0..3 {
            for d in [f[(c + 1) % 3], f[(c + 2) % 3]] {
                if !neighbours[f[c]].contains(&d) {
                    neighbours[f[c]].push(d);
                }
            }
        }
    }
    let (mut sq, mut abs, mut wsum, mut count) = (0.0, 0.0, 0.0, 0);
    for (j, nb) in neighbours.iter().enumerate() {
        if nb.is_empty() {
            continue;
        }
        let s = samples[j];
        let Some(w) = alignment_weight(s.k1, s.k2) else {
            continue;
        };
        if w == 0.0 {
            continue;
        }
        let c = s.direction.normalize();
        let best = |sign: f64| {
            nb.iter()
                .map(|&m| (sign * c.dot(&(mesh.vertices[m] - mesh.vertices[j]).normalize())).clamp(-1.0, 1.0))
                .fold(-1.0, f64::max)
                .acos()
                .to_degrees()
        };
        let (tp, tm) = (best(1.0), best(-1.0));
        sq += w * (tp * tp + tm * tm) / 2.0;
        abs += w * (tp + tm) / 2.0;
        wsum += w;
        count += 1;
    }
    if count == 0 {
        return Err(DwdtError::InvalidInput("no vertex with nonzero alignment weight".into()));
    }
    Ok(AlignmentError {
        rmse: (sq / wsum).sqrt(),
        mean: abs / wsum,
        vertices: count,
    })
}

/// The mesh without faces touching a boundary vertex.
pub fn interior_mesh<P: Clone>(mesh: &crate::mesh::DiscreteMesh<P>) -> crate::mesh::DiscreteMesh<P> {
    let boundary = mesh.boundary_vertices();
    let faces = mesh
        .faces
        .iter()
        .filter(|f| f.iter().all(|&v| !boundary[v]))
        .copied()
        .collect();
    crate::mesh::DiscreteMesh::new(mesh.vertices.clone(), faces)
}

/// Metrics on one set of faces. A `None` entry is either not requested or
/// undefined on this mesh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricSet {
    pub vertices: usize,
    pub faces: usize,
    pub size_rmse: Option<f64>,
    pub relative_size_rmse: Option<f64>,
    pub alignment_rmse: Option<f64>,
    pub alignment_mean: Option<f64>,
    pub angle_mean: Option<f64>,
    pub angle_std: Option<f64>,
    pub area_cv: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricsReport {
    pub all: MetricSet,
    /// Faces adjacent to the boundary removed.
    pub interior: MetricSet,
}

fn metric_set(mesh: &Mesh3, area: Option<&[f64]>, direction: Option<&[DirectionSample]>) -> Result<MetricSet> {
    let mut m = MetricSet {
        vertices: mesh.num_used(),
        faces: mesh.faces.len(),
        ..MetricSet::default()
    };
    if mesh.faces.is_empty() {
        return Ok(m);
    }
    // undefined normalizations are reported as missing values
    let defined = |r: Result<f64>| match r {
        Ok(x) => Ok(Some(x)),
        Err(DwdtError::UndefinedNormalization(_)) => Ok(None),
        Err(e) => Err(e),
    };
    if let Some(a) = area {
        m.size_rmse = defined(size_rmse(mesh, a))?;
        m.relative_size_rmse = defined(relative_size_rmse(mesh, a))?;
    }
    if let Some(d) = direction {
        match curvature_alignment_error(mesh, d) {
            Ok(e) => {
                m.alignment_rmse = Some(e.rmse);
                m.alignment_mean = Some(e.mean);
            }
            Err(DwdtError::InvalidInput(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let (mean, std) = angle_stats(mesh)?;
    m.angle_mean = Some(mean);
    m.angle_std = Some(std);
    m.area_cv = Some(area_coefficient_of_variation(mesh)?);
    Ok(m)
}

/// All metrics with and without the faces at the boundary. Field values are
/// per mesh vertex.
pub fn metrics_report(mesh: &Mesh3, area: Option<&[f64]>, direction: Option<&[DirectionSample]>) -> Result<MetricsReport> {
    Ok(MetricsReport {
        all: metric_set(mesh, area, direction)?,
        interior: metric_set(&interior_mesh(mesh), area, direction)?,
    })
}

/// Samples the target area at every vertex of a 2D mesh.
pub fn sample_area(mesh: &Mesh2, field: &dyn ScalarField) -> Result<Vec<f64>> {
    mesh.vertices.iter().map(|v| field.sample(v)).collect()
}

/// Samples directions and curvature magnitudes at every vertex of a 2D mesh.
/// Fails with a configuration error when the field has no magnitudes.
pub fn sample_directions(mesh: &Mesh2, field: &dyn DirectionField) -> Result<Vec<DirectionSample>> {
    mesh.vertices
        .iter()
        .map(|v: &Vec2| {
            let direction = field.sample(v)?;
            let (k1, k2) = field
                .principal_curvatures(v)?
                .ok_or_else(|| DwdtError::Config("alignment metric needs principal curvature magnitudes".into()))?;
            Ok(DirectionSample { direction, k1, k2 })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::WeightedPointSet;
    use crate::soft::{extract_discrete, inclusion_scores};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_mesh(seed: u64, n: usize) -> Mesh3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
        let ps = WeightedPointSet::unweighted(pts).unwrap();
        let soft = inclusion_scores(&ps, 1000.0, 80).unwrap();
        extract_discrete(&soft, &ps, 0.5).map_vertices(|p| Vec3::new(p.x, p.y, 0.2 * (p.x * 4.0).sin()))
    }

    fn equilateral_pair() -> Mesh3 {
        let h = 3f64.sqrt() / 2.0;
        Mesh3::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.5, h, 0.0),
                Vec3::new(1.5, h, 0.0),
            ],
            vec![[0, 1, 2], [1, 3, 2]],
        )
    }

    #[test]
    fn proportional_sizes_have_zero_error() {
        let mesh = random_mesh(1, 30);
        let sizes: Vec<f64> = vertex_sizes(&mesh).into_iter().map(|s| s.unwrap_or(0.0) * 3.7).collect();
        assert!(size_rmse(&mesh, &sizes).unwrap() < 1e-12);
        assert!(relative_size_rmse(&mesh, &sizes).unwrap() < 1e-12);
    }

    #[test]
    fn two_vertex_toy() {
        // z-scores (+1, -1) against (-1, +1): every difference is 2
        let a = [3.0, 1.0];
        let t = [0.0, 4.0];
        let z = |xs: &[f64]| {
            let (m, s) = mean_std(xs);
            xs.iter().map(|x| (x - m) / s).collect::<Vec<_>>()
        };
        assert_eq!(z(&a), vec![1.0, -1.0]);
        assert_relative_eq!(rmse(&z(&a), &z(&t)), 2.0);
    }

    #[test]
    fn constant_sizes_are_undefined() {
        let mesh = equilateral_pair();
        assert!(matches!(
            size_rmse(&mesh, &[1.0, 2.0, 3.0, 4.0]),
            Err(DwdtError::UndefinedNormalization(_))
        ));
        assert_relative_eq!(relative_size_rmse(&mesh, &[0.5; 4]).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn size_metrics_match_literal() {
        let mesh = random_mesh(4, 40);
        let target: Vec<f64> = mesh.vertices.iter().map(|p| 0.01 + 0.02 * p.x * p.y).collect();
        // literal: per vertex, scan every face
        let (mut a, mut t) = (Vec::new(), Vec::new());
        for (j, _) in mesh.vertices.iter().enumerate() {
            let adj: Vec<f64> = mesh
                .faces
                .iter()
                .filter(|f| f.contains(&j))
                .map(|f| {
                    let [p, q, r] = f.map(|i| mesh.vertices[i]);
                    0.5 * (q - p).cross(&(r - p)).norm()
                })
                .collect();
            if !adj.is_empty() {
                a.push(adj.iter().sum::<f64>() / adj.len() as f64);
                t.push(target[j]);
            }
        }
        let n = a.len() as f64;
        let norm = |xs: &Vec<f64>| {
            let m = xs.iter().sum::<f64>() / n;
            let s = (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt();
            xs.iter().map(|x| (x - m) / s).collect::<Vec<f64>>()
        };
        let (za, zt) = (norm(&a), norm(&t));
        let lit = (za.iter().zip(&zt).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n).sqrt();
        assert_relative_eq!(size_rmse(&mesh, &target).unwrap(), lit, max_relative = 1e-10);
    }

    #[test]
    fn size_rmse_is_scale_invariant() {
        let mesh = random_mesh(6, 35);
        let target: Vec<f64> = mesh.vertices.iter().map(|p| 0.01 + p.x).collect();
        let big = mesh.map_vertices(|p| p * 3.0);
        let t2: Vec<f64> = target.iter().map(|x| x * 5.0).collect();
        assert_relative_eq!(
            size_rmse(&mesh, &target).unwrap(),
            size_rmse(&big, &t2).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn angle_examples() {
        let (m, s) = angle_stats(&equilateral_pair()).unwrap();
        assert_relative_eq!(m, 60.0, epsilon = 1e-12);
        assert!(s < 1e-6);
        let right = Mesh3::new(
            vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
        );
        let (m, s) = angle_stats(&right).unwrap();
        assert_relative_eq!(m, 60.0, epsilon = 1e-12);
        let expected = ((30f64.powi(2) + 2.0 * 15f64.powi(2)) / 3.0).sqrt();
        assert_relative_eq!(s, expected, epsilon = 1e-12);
        for seed in 0..5 {
            let (m, _) = angle_stats(&random_mesh(seed, 50)).unwrap();
            assert!((m - 60.0).abs() < 1e-9);
        }
    }

    #[test]
    fn alignment_examples() {
        // a vertex with edges along +x and -x, field along x
        let mesh = Mesh3::new(
            vec![
                Vec3::zeros(),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        let along = DirectionSample {
            direction: Vec3::new(1.0, 0.0, 0.0),
            k1: 1.0,
            k2: -1.0,
        };
        let umbilic = DirectionSample { k1: 0.5, k2: 0.5, ..along };
        let flat = DirectionSample { k1: 0.0, k2: 0.0, ..along };
        let e = curvature_alignment_error(&mesh, &[along, umbilic, umbilic, flat]).unwrap();
        assert_eq!(e.vertices, 1);
        assert!(e.rmse < 1e-6 && e.mean < 1e-6);
        assert_eq!(alignment_weight(0.5, 0.5), Some(0.0));
        assert_eq!(alignment_weight(0.0, 0.0), None);
        assert_eq!(alignment_weight(1.0, -1.0), Some(2.0));
    }

    #[test]
    fn alignment_matches_literal() {
        let mesh = random_mesh(8, 40);
        let samples: Vec<DirectionSample> = mesh
            .vertices
            .iter()
            .map(|p| DirectionSample {
                direction: Vec3::new((3.0 * p.y).cos(), (3.0 * p.y).sin(), 0.0),
                k1: 1.0 + p.x,
                k2: -0.3 * p.y,
            })
            .collect();
        let (mut num, mut num_abs, mut den) = (0.0, 0.0, 0.0);
        for j in 0..mesh.vertices.len() {
            let mut edges = Vec::new();
            for f in mesh.faces.iter().filter(|f| f.contains(&j)) {
                for &m in f.iter().filter(|&&m| m != j) {
                    edges.push((mesh.vertices[m] - mesh.vertices[j]).normalize());
                }
            }
            if edges.is_empty() {
                continue;
            }
            let s = samples[j];
            let w = (s.k1 - s.k2).abs() / (0.5 * (s.k1.abs() + s.k2.abs()));
            let best = |c: Vec3| {
                edges
                    .iter()
                    .map(|e| c.angle(e).to_degrees())
                    .fold(f64::INFINITY, f64::min)
            };
            let (a, b) = (best(s.direction), best(-s.direction));
            num += w * (a * a + b * b) / 2.0;
            num_abs += w * (a + b) / 2.0;
            den += w;
        }
        let e = curvature_alignment_error(&mesh, &samples).unwrap();
        assert_relative_eq!(e.rmse, (num / den).sqrt(), max_relative = 1e-10);
        assert_relative_eq!(e.mean, num_abs / den, max_relative = 1e-10);
    }

    #[test]
    fn report_with_and_without_boundary() {
        let mesh = random_mesh(3, 60);
        let target = vec![0.01; mesh.vertices.len()];
        let r = metrics_report(&mesh, Some(&target), None).unwrap();
        assert!(r.all.size_rmse.is_none());
        assert!(r.all.relative_size_rmse.is_some());
        assert!(r.interior.faces < r.all.faces);
        assert!(r.interior.faces > 0);
        let boundary = mesh.boundary_vertices();
        let interior = interior_mesh(&mesh);
        assert!(interior.faces.iter().flatten().all(|&v| !boundary[v]));
        assert!((r.all.angle_mean.unwrap() - 60.0).abs() < 1e-9);
    }
}
