use dwdt::geom::{knn, power_bisector, power_distance, weighted_circumcenter};
use dwdt::metrics::{angle_stats, size_rmse};
use dwdt::oracle::brute_force_wdt;
use dwdt::soft::{extract_discrete, inclusion_scores};
use dwdt::{DwdtError, Vec2, Vec3, WeightedPointSet};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Vec2> {
    (0.0..1.0f64, 0.0..1.0f64).prop_map(|(x, y)| Vec2::new(x, y))
}

fn point_set(n: std::ops::Range<usize>, max_weight: f64) -> impl Strategy<Value = WeightedPointSet> {
    prop::collection::vec((point(), 0.0..max_weight), n).prop_filter_map("coincident points", |v| {
        let (p, w): (Vec<_>, Vec<_>) = v.into_iter().unzip();
        WeightedPointSet::new(p, w).ok()
    })
}

fn well_shaped(a: &Vec2, b: &Vec2, c: &Vec2) -> bool {
    let det = (b - a).perp(&(c - a));
    let scale = (b - a).norm().max((c - a).norm()).max((c - b).norm());
    det.abs() > 1e-3 * scale * scale
}

/// Oracle result, or `None` for inputs too close to a degenerate configuration.
fn oracle(ps: &WeightedPointSet) -> Option<dwdt::mesh::Mesh2> {
    match brute_force_wdt(ps) {
        Ok(m) => Some(m),
        Err(DwdtError::AmbiguousConfiguration { .. }) | Err(DwdtError::DegenerateTriangle { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bisector_is_antisymmetric(a in point(), b in point(), wa in 0.0..0.5f64, wb in 0.0..0.5f64) {
        prop_assume!((a - b).norm() > 1e-6);
        let ab = power_bisector(&a, wa, &b, wb).unwrap();
        let ba = power_bisector(&b, wb, &a, wa).unwrap();
        prop_assert!((ab.normal + ba.normal).norm() < 1e-12);
        prop_assert!((ab.offset + ba.offset).abs() < 1e-12);
    }

    #[test]
    fn bisector_and_circumcenter_follow_translation_and_weight_shift(
        v in [point(), point(), point()],
        w in [0.0..0.3f64, 0.0..0.3f64, 0.0..0.3f64],
        t in point(),
        c in 0.0..0.5f64,
    ) {
        prop_assume!(well_shaped(&v[0], &v[1], &v[2]));
        let shifted: Vec<f64> = w.iter().map(|w| (w * w + c).sqrt()).collect();
        let b = power_bisector(&v[0], w[0], &v[1], w[1]).unwrap();
        let bt = power_bisector(&(v[0] + t), w[0], &(v[1] + t), w[1]).unwrap();
        let bs = power_bisector(&v[0], shifted[0], &v[1], shifted[1]).unwrap();
        let probe = Vec2::new(0.3, 0.7);
        prop_assert!((b.signed_distance(&probe) - bt.signed_distance(&(probe + t))).abs() < 1e-12);
        prop_assert!((b.signed_distance(&probe) - bs.signed_distance(&probe)).abs() < 1e-12);

        let cc = weighted_circumcenter(&v[0], w[0], &v[1], w[1], &v[2], w[2]).unwrap();
        let ct = weighted_circumcenter(&(v[0] + t), w[0], &(v[1] + t), w[1], &(v[2] + t), w[2]).unwrap();
        let cs = weighted_circumcenter(&v[0], shifted[0], &v[1], shifted[1], &v[2], shifted[2]).unwrap();
        let tol = 1e-9 * (1.0 + cc.norm());
        prop_assert!((ct - (cc + t)).norm() < tol);
        prop_assert!((cs - cc).norm() < tol);
    }

    #[test]
    fn circumcenter_has_equal_powers(
        v in [point(), point(), point()],
        w in [0.0..0.3f64, 0.0..0.3f64, 0.0..0.3f64],
    ) {
        prop_assume!(well_shaped(&v[0], &v[1], &v[2]));
        let c = weighted_circumcenter(&v[0], w[0], &v[1], w[1], &v[2], w[2]).unwrap();
        let p: Vec<f64> = (0..3).map(|i| power_distance(&c, &v[i], w[i])).collect();
        let scale = p.iter().map(|x| x.abs()).fold(1.0, f64::max);
        prop_assert!((p[0] - p[1]).abs() <= 1e-9 * scale);
        prop_assert!((p[0] - p[2]).abs() <= 1e-9 * scale);
    }

    #[test]
    fn knn_equals_all_pairs(points in prop::collection::vec(point(), 2..300), k in 1usize..20) {
        let table = knn(&points, k);
        for (i, p) in points.iter().enumerate() {
            let mut d: Vec<f64> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (q - p).norm_squared())
                .collect();
            d.sort_by(f64::total_cmp);
            let got = table.neighbors(i);
            prop_assert_eq!(got.len(), k.min(points.len() - 1));
            prop_assert!(got.iter().all(|&j| j as usize != i));
            for (r, &j) in got.iter().enumerate() {
                // Ties may be ordered either way; the distances must agree.
                prop_assert_eq!((points[j as usize] - p).norm_squared(), d[r]);
            }
        }
    }

    #[test]
    fn oracle_output_is_a_triangulated_disk(ps in point_set(4..40, 0.3)) {
        let Some(mesh) = oracle(&ps) else { return Ok(()) };
        let faces = mesh.faces.len() as i64;
        let edges = mesh.edge_face_counts().len() as i64;
        let used = mesh.num_used() as i64;
        prop_assert_eq!(faces - edges + used, 1);
    }

    #[test]
    fn oracle_ignores_a_common_weight_shift(ps in point_set(4..30, 0.3), c in 0.0..0.5f64) {
        let Some(mesh) = oracle(&ps) else { return Ok(()) };
        let Some(shifted) = oracle(&ps.shift_squared_weights(c).unwrap()) else { return Ok(()) };
        prop_assert_eq!(mesh.canonical_face_set(), shifted.canonical_face_set());
    }

    #[test]
    fn scores_move_away_from_half_as_alpha_grows(ps in point_set(4..30, 0.3), a in 1.0..1e3f64, f in 1.0..10.0f64) {
        let lo = inclusion_scores(&ps, a, ps.len() - 1).unwrap();
        let hi = inclusion_scores(&ps, a * f, ps.len() - 1).unwrap();
        prop_assert_eq!(lo.candidates.len(), hi.candidates.len());
        for (x, y) in lo.corner_scores.iter().zip(&hi.corner_scores) {
            for c in 0..3 {
                prop_assert!((y[c] - 0.5).abs() >= (x[c] - 0.5).abs() - 1e-15);
                prop_assert!((y[c] - 0.5) * (x[c] - 0.5) >= 0.0);
            }
        }
    }

    #[test]
    fn scores_ignore_a_common_weight_shift(ps in point_set(4..30, 0.3), c in 0.0..0.5f64) {
        let a = inclusion_scores(&ps, 1000.0, 80).unwrap();
        let b = inclusion_scores(&ps.shift_squared_weights(c).unwrap(), 1000.0, 80).unwrap();
        prop_assert_eq!(a.scores.len(), b.scores.len());
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() <= 1e-12, "{} vs {}", x, y);
        }
    }

    #[test]
    fn full_candidate_extraction_matches_oracle(ps in point_set(4..30, 0.3), alpha in 1.0..1e4f64) {
        let Some(mesh) = oracle(&ps) else { return Ok(()) };
        let soft = inclusion_scores(&ps, alpha, ps.len() - 1).unwrap();
        let (_, margin) = soft.transition_margins(&ps);
        prop_assume!(margin > 1e-9);
        let extracted = extract_discrete(&soft, &ps, 0.5);
        prop_assert_eq!(extracted.canonical_face_set(), mesh.canonical_face_set());
    }

    #[test]
    fn triangle_angles_average_sixty_degrees(ps in point_set(4..40, 0.3)) {
        let Some(mesh) = oracle(&ps) else { return Ok(()) };
        let lifted = mesh.map_vertices(|v| Vec3::new(v.x, v.y, 0.5 * v.x * v.y));
        let (mean, _) = angle_stats(&lifted).unwrap();
        prop_assert!((mean - 60.0).abs() < 1e-9);
    }

    #[test]
    fn size_rmse_ignores_uniform_rescaling(ps in point_set(4..40, 0.3), s in 0.1..10.0f64) {
        let Some(mesh) = oracle(&ps) else { return Ok(()) };
        let m3 = mesh.to_3d();
        let target: Vec<f64> = (0..m3.vertices.len()).map(|i| 0.01 + 0.001 * (i % 7) as f64).collect();
        let scaled = m3.map_vertices(|v| v * s);
        let scaled_target: Vec<f64> = target.iter().map(|t| t * s * s).collect();
        let Ok(a) = size_rmse(&m3, &target) else { return Ok(()) };
        let b = size_rmse(&scaled, &scaled_target).unwrap();
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }
}
