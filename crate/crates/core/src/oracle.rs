//! Brute-force weighted Delaunay triangulation by the empty power-circle test.
//!
//! A triple belongs to the regular triangulation iff no other vertex has a
//! smaller power distance to its weighted circumcenter. `O(n^4)`; meant for
//! verification on small inputs.

use crate::error::{DwdtError, Result};
use crate::geom::{is_degenerate_triangle, orient2d, weighted_circumcenter, WeightedPointSet};
use crate::mesh::Mesh2;

/// Relative margin (times `scale^2`) below which a power test is ambiguous.
pub const AMBIGUITY_TOLERANCE: f64 = 1e-9;

/// Outcome of the power test for one triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerTest {
    /// `min_m pow(c, m) - pow(c, j)` over all vertices `m` outside the triple;
    /// `+inf` when there is no other vertex.
    pub margin: f64,
    /// Vertex attaining the minimum.
    pub witness: Option<usize>,
}

/// Power test margin of triangle `tri`. Positive means the triangle is in the WDT.
pub fn power_test(ps: &WeightedPointSet, tri: [usize; 3]) -> Result<PowerTest> {
    let [j, k, l] = tri;
    let (v, w) = (&ps.positions, &ps.weights);
    let c = weighted_circumcenter(&v[j], w[j], &v[k], w[k], &v[l], w[l])?;
    let pj = ps.power(j, &c);
    let mut best = PowerTest {
        margin: f64::INFINITY,
        witness: None,
    };
    for m in 0..ps.len() {
        if m == j || m == k || m == l {
            continue;
        }
        let margin = ps.power(m, &c) - pj;
        if margin < best.margin {
            best = PowerTest {
                margin,
                witness: Some(m),
            };
        }
    }
    Ok(best)
}

/// Every triple passing the strict power test, as CCW faces in canonical order.
pub fn brute_force_wdt(ps: &WeightedPointSet) -> Result<Mesh2> {
    let n = ps.len();
    if n < 3 {
        return Err(DwdtError::InvalidInput(format!(
            "triangulation needs at least 3 vertices, got {n}"
        )));
    }
    let scale = ps.scale();
    let tol = AMBIGUITY_TOLERANCE * scale * scale;
    let (v, w) = (&ps.positions, &ps.weights);
    let mut faces = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            for l in k + 1..n {
                if is_degenerate_triangle(&v[j], &v[k], &v[l]) {
                    continue;
                }
                let c = weighted_circumcenter(&v[j], w[j], &v[k], w[k], &v[l], w[l])?;
                let pj = ps.power(j, &c);
                let mut inside = true;
                let mut closest: Option<(f64, usize)> = None;
                for m in 0..n {
                    if m == j || m == k || m == l {
                        continue;
                    }
                    let margin = ps.power(m, &c) - pj;
                    if margin < -tol {
                        inside = false;
                        break;
                    }
                    if closest.map_or(true, |(b, _)| margin < b) {
                        closest = Some((margin, m));
                    }
                }
                if !inside {
                    continue;
                }
                if let Some((margin, m)) = closest {
                    if margin <= tol {
                        return Err(DwdtError::AmbiguousConfiguration {
                            tuple: [j, k, l, m],
                            margin,
                        });
                    }
                }
                faces.push(ccw_face([j, k, l], ps));
            }
        }
    }
    Ok(Mesh2::new(ps.positions.clone(), faces))
}

/// Orients a sorted triple counter-clockwise.
pub(crate) fn ccw_face(tri: [usize; 3], ps: &WeightedPointSet) -> [usize; 3] {
    let [j, k, l] = tri;
    if orient2d(&ps.positions[j], &ps.positions[k], &ps.positions[l]) < 0.0 {
        [j, l, k]
    } else {
        [j, k, l]
    }
}

/// True iff vertex `j` appears in no face of the brute-force WDT.
pub fn vertex_is_redundant(ps: &WeightedPointSet, j: usize) -> Result<bool> {
    if j >= ps.len() {
        return Err(DwdtError::InvalidInput(format!(
            "vertex index {j} out of range for {} vertices",
            ps.len()
        )));
    }
    let mesh = brute_force_wdt(ps)?;
    Ok(!mesh.used[j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::mesh::manifold_check;

    fn square_with_center(center_sq_weight: f64) -> WeightedPointSet {
        // corner 2 nudged so the four corners are not power-cocircular
        let positions = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.05),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
        ];
        let weights = vec![1.0, 1.0, 1.0, 1.0, center_sq_weight.sqrt()];
        WeightedPointSet::new(positions, weights).unwrap()
    }

    #[test]
    fn three_points_make_one_triangle() {
        let ps = WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 0.0),
        ])
        .unwrap();
        let m = brute_force_wdt(&ps).unwrap();
        assert_eq!(m.faces, vec![[0, 2, 1]]);
        for j in 0..3 {
            assert!(!vertex_is_redundant(&ps, j).unwrap());
        }
    }

    #[test]
    fn unit_square_with_center_fans() {
        let ps = WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 0.5),
        ])
        .unwrap();
        let m = brute_force_wdt(&ps).unwrap();
        assert_eq!(m.faces.len(), 4);
        assert!(m.faces.iter().all(|f| f.contains(&4)));
        assert!(manifold_check(&m).is_empty());
    }

    #[test]
    fn cocircular_square_is_ambiguous() {
        let ps = WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!(matches!(
            brute_force_wdt(&ps),
            Err(DwdtError::AmbiguousConfiguration { .. })
        ));
    }

    #[test]
    fn low_center_weight_makes_center_redundant() {
        let heavy = square_with_center(1.0);
        let m = brute_force_wdt(&heavy).unwrap();
        assert_eq!(m.faces.len(), 4);
        assert!(!vertex_is_redundant(&heavy, 4).unwrap());

        let light = square_with_center(0.0);
        let m = brute_force_wdt(&light).unwrap();
        assert_eq!(m.faces.len(), 2);
        assert!(!m.used[4]);
        assert!(vertex_is_redundant(&light, 4).unwrap());
    }

    #[test]
    fn power_test_sign_matches_membership() {
        let ps = square_with_center(1.0);
        let t = power_test(&ps, [0, 1, 4]).unwrap();
        assert!(t.margin > 0.0);
        let t = power_test(&ps, [0, 1, 2]).unwrap();
        assert!(t.margin < 0.0);
        assert_eq!(t.witness, Some(4));
    }
}
