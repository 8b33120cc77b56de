//! Soft weighted Delaunay triangulation.
//!
//! Each candidate triangle gets one inclusion score per corner: the sigmoid of
//! `alpha` times the signed distance from its weighted circumcenter to the
//! corner's reduced power cell (the cell computed without the two other
//! corners). The cell is an intersection of half-planes, so the signed
//! distance is taken as the minimum over its bisectors; the argmin is frozen
//! when differentiating.

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{DwdtError, Result};
use crate::geom::{
    bisector_distance_grad, circumcenter_unchecked, circumcenter_vjp, is_degenerate_triangle, CompensatedSum, knn,
    orient2d, weighted_circumcenter, NeighborTable, Vec2, WeightedPointSet,
};
use crate::gradient::{sigmoid, GradientBundle};
use crate::mesh::{manifold_check, Mesh2};
use crate::oracle::{ccw_face, power_test, AMBIGUITY_TOLERANCE};

pub const DEFAULT_ALPHA: f64 = 1000.0;
pub const DEFAULT_K: usize = 80;
/// Distance reported for a reduced cell with no competing vertex.
pub const EMPTY_CELL_DISTANCE: f64 = 1e6;
/// Scores this close to the threshold count as ties (rounding in the distance
/// evaluation makes exact 0.5 unreliable).
pub const TIE_BAND: f64 = 1e-12;

/// A triple of mutually k-nearest vertices, `j < k < l`.
///
/// The exclusion list of a corner is its neighbour list without the other two
/// corners; it is not stored but read from the [`NeighborTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CandidateTriangle {
    pub indices: [usize; 3],
}

impl CandidateTriangle {
    pub fn new(j: usize, k: usize, l: usize) -> Self {
        let mut indices = [j, k, l];
        indices.sort_unstable();
        Self { indices }
    }

    /// Vertices competing with corner `corner` (0, 1 or 2) for the circumcenter.
    pub fn exclusion_list<'a>(
        &self,
        corner: usize,
        nt: &'a NeighborTable,
    ) -> impl Iterator<Item = usize> + 'a {
        let j = self.indices[corner];
        let others = [self.indices[(corner + 1) % 3], self.indices[(corner + 2) % 3]];
        nt.neighbors(j)
            .iter()
            .map(|&m| m as usize)
            .filter(move |m| !others.contains(m))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateSet {
    pub triangles: Vec<CandidateTriangle>,
    /// Collinear triples skipped during enumeration.
    pub degenerate_dropped: usize,
}

/// Every triple whose vertices are pairwise in each other's neighbour lists,
/// sorted by index, with collinear triples dropped and counted.
pub fn enumerate_candidates(ps: &WeightedPointSet, nt: &NeighborTable) -> CandidateSet {
    let n = ps.len();
    let words = n.div_ceil(64);
    let mut adjacency = vec![0u64; n * words];
    for i in 0..nt.len() {
        for &m in nt.neighbors(i) {
            adjacency[i * words + m as usize / 64] |= 1 << (m % 64);
        }
    }
    let has = |a: usize, b: usize| adjacency[a * words + b / 64] & (1 << (b % 64)) != 0;
    let mutual = |a: usize, b: usize| has(a, b) && has(b, a);

    let mut triangles = Vec::new();
    let mut degenerate_dropped = 0;
    let mut forward: Vec<usize> = Vec::new();
    for j in 0..nt.len() {
        forward.clear();
        forward.extend(
            nt.neighbors(j)
                .iter()
                .map(|&m| m as usize)
                .filter(|&m| m > j && has(m, j)),
        );
        forward.sort_unstable();
        for a in 0..forward.len() {
            let k = forward[a];
            for &l in &forward[a + 1..] {
                if !mutual(k, l) {
                    continue;
                }
                let v = &ps.positions;
                if is_degenerate_triangle(&v[j], &v[k], &v[l]) {
                    degenerate_dropped += 1;
                } else {
                    triangles.push(CandidateTriangle { indices: [j, k, l] });
                }
            }
        }
    }
    CandidateSet {
        triangles,
        degenerate_dropped,
    }
}

/// Signed distance from the weighted circumcenter of `tri` to the boundary of
/// the reduced cell at `corner` (0, 1 or 2); positive inside.
pub fn reduced_cell_signed_distance(
    ps: &WeightedPointSet,
    nt: &NeighborTable,
    tri: &CandidateTriangle,
    corner: usize,
) -> Result<f64> {
    if corner > 2 {
        return Err(DwdtError::InvalidInput(format!("corner {corner} is not 0, 1 or 2")));
    }
    let [j, k, l] = tri.indices;
    let v = &ps.positions;
    let w = &ps.weights;
    let c = crate::geom::weighted_circumcenter(&v[j], w[j], &v[k], w[k], &v[l], w[l])?;
    let corner_vertex = tri.indices[corner];
    let (d, _) = corner_distance(ps, &c, corner_vertex, tri.exclusion_list(corner, nt));
    Ok(d)
}

#[inline]
fn corner_distance(
    ps: &WeightedPointSet,
    c: &Vec2,
    j: usize,
    competitors: impl Iterator<Item = usize>,
) -> (f64, Option<u32>) {
    let vj = ps.positions[j];
    let pj = ps.power(j, c);
    let mut best = EMPTY_CELL_DISTANCE;
    let mut arg = None;
    for m in competitors {
        let vm = ps.positions[m];
        let e = vm - vj;
        let d = (ps.power(m, c) - pj) / (2.0 * e.norm());
        if arg.is_none() || d < best {
            best = d;
            arg = Some(m as u32);
        }
    }
    (best, arg)
}

/// Candidate triangles with per-corner and per-triangle inclusion scores.
#[derive(Debug, Clone)]
pub struct SoftTriangulation {
    pub alpha: f64,
    pub neighbors: NeighborTable,
    pub candidates: Vec<CandidateTriangle>,
    pub degenerate_dropped: usize,
    pub circumcenters: Vec<Vec2>,
    pub corner_distances: Vec<[f64; 3]>,
    /// Competitor attaining each corner's minimum; `None` for an empty exclusion list.
    pub corner_argmin: Vec<[Option<u32>; 3]>,
    pub corner_scores: Vec<[f64; 3]>,
    /// `1 - s` per corner, accurate for scores close to 1.
    pub corner_complements: Vec<[f64; 3]>,
    pub scores: Vec<f64>,
}

/// Scores every mutual-kNN candidate of `ps` (`k` clamped to `n - 1`).
pub fn inclusion_scores(ps: &WeightedPointSet, alpha: f64, k: usize) -> Result<SoftTriangulation> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DwdtError::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    if ps.len() < 3 {
        return Err(DwdtError::InvalidInput(format!(
            "triangulation needs at least 3 vertices, got {}",
            ps.len()
        )));
    }
    if k == 0 {
        return Err(DwdtError::InvalidInput("k must be at least 1".into()));
    }
    let nt = knn(&ps.positions, k);
    let cands = enumerate_candidates(ps, &nt);
    Ok(score_candidates(ps, nt, cands, alpha))
}

/// Bisectors between every vertex and each of its neighbours, in the form
/// `d(c) = off - u . (c - v_j)` with `u` the unit vector from `v_j` to `v_m`.
/// Each vertex's entries are sorted by `off`, which bounds `d` from below
/// by `off - |c - v_j|` and lets the minimum search stop early.
struct BisectorTable {
    k: usize,
    entries: Vec<Bisector>,
}

#[derive(Clone, Copy)]
struct Bisector {
    off: f64,
    ux: f64,
    uy: f64,
    slot: u32,
    neighbor: u32,
}

impl BisectorTable {
    fn new(ps: &WeightedPointSet, nt: &NeighborTable) -> Self {
        let k = nt.k();
        let mut entries = Vec::with_capacity(nt.len() * k);
        for j in 0..nt.len() {
            let (vj, wj) = (ps.positions[j], ps.weights[j]);
            let start = entries.len();
            for (slot, &m) in nt.neighbors(j).iter().enumerate() {
                let (vm, wm) = (ps.positions[m as usize], ps.weights[m as usize]);
                let e = vm - vj;
                let len = e.norm();
                entries.push(Bisector {
                    off: (len * len + wj * wj - wm * wm) / (2.0 * len),
                    ux: e.x / len,
                    uy: e.y / len,
                    slot: slot as u32,
                    neighbor: m,
                });
            }
            entries[start..].sort_unstable_by(|p, q| p.off.total_cmp(&q.off).then(p.slot.cmp(&q.slot)));
        }
        Self { k, entries }
    }

    /// Minimum bisector distance of `y = c - v_j` over `j`'s neighbours other
    /// than `skip`. Returns the distance and the neighbour in the earliest
    /// slot attaining it.
    #[inline]
    fn corner_min(&self, j: usize, y: Vec2, skip: [u32; 2]) -> (f64, Option<u32>) {
        let list = &self.entries[j * self.k..(j + 1) * self.k];
        // |u . y| <= |y| up to rounding of the unit vectors
        let reach = y.norm() * (1.0 + 1e-12);
        let mut best = f64::INFINITY;
        let mut slot = u32::MAX;
        let mut arg = 0;
        for e in list {
            if e.off - reach > best {
                break;
            }
            if e.neighbor == skip[0] || e.neighbor == skip[1] {
                continue;
            }
            let d = e.off - (e.ux * y.x + e.uy * y.y);
            if d < best || (d == best && e.slot < slot) {
                best = d;
                slot = e.slot;
                arg = e.neighbor;
            }
        }
        if slot == u32::MAX {
            return (EMPTY_CELL_DISTANCE, None);
        }
        (best, Some(arg))
    }
}

/// Scores a fixed candidate set.
pub fn score_candidates(
    ps: &WeightedPointSet,
    nt: NeighborTable,
    cands: CandidateSet,
    alpha: f64,
) -> SoftTriangulation {
    let table = BisectorTable::new(ps, &nt);
    let per: Vec<(Vec2, [f64; 3], [Option<u32>; 3])> = cands
        .triangles
        .par_iter()
        .with_min_len(256)
        .map(|tri| {
            let [j, kk, l] = tri.indices;
            let v = &ps.positions;
            let w = &ps.weights;
            let det = orient2d(&v[j], &v[kk], &v[l]);
            let c = circumcenter_unchecked(&v[j], w[j], &v[kk], w[kk], &v[l], w[l], det);
            let mut dist = [0.0; 3];
            let mut arg = [None; 3];
            for corner in 0..3 {
                let me = tri.indices[corner];
                let o1 = tri.indices[(corner + 1) % 3];
                let o2 = tri.indices[(corner + 2) % 3];
                let (d, m) = table.corner_min(me, c - v[me], [o1 as u32, o2 as u32]);
                dist[corner] = d;
                arg[corner] = m;
            }
            (c, dist, arg)
        })
        .collect();

    let mut circumcenters = Vec::with_capacity(per.len());
    let mut corner_distances = Vec::with_capacity(per.len());
    let mut corner_argmin = Vec::with_capacity(per.len());
    let mut corner_scores = Vec::with_capacity(per.len());
    let mut corner_complements = Vec::with_capacity(per.len());
    let mut scores = Vec::with_capacity(per.len());
    for (c, d, a) in per {
        let s = d.map(|d| sigmoid(alpha * d));
        circumcenters.push(c);
        corner_distances.push(d);
        corner_argmin.push(a);
        corner_scores.push(s);
        corner_complements.push(d.map(|d| sigmoid(-alpha * d)));
        scores.push((s[0] + s[1] + s[2]) / 3.0);
    }
    SoftTriangulation {
        alpha,
        neighbors: nt,
        candidates: cands.triangles,
        degenerate_dropped: cands.degenerate_dropped,
        circumcenters,
        corner_distances,
        corner_argmin,
        corner_scores,
        corner_complements,
        scores,
    }
}

impl SoftTriangulation {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Sum of all corner scores.
    pub fn total_corner_score(&self) -> f64 {
        self.corner_scores.iter().flatten().copied().sum::<CompensatedSum>().value()
    }

    /// Distance of the closest corner score to 0.5, and the smallest gap
    /// between the two nearest bisectors of any unsaturated corner
    /// (`s (1 - s) > 1e-9`; saturated corners carry no derivative). Derivatives
    /// are only smooth while both are away from zero.
    pub fn transition_margins(&self, ps: &WeightedPointSet) -> (f64, f64) {
        let mut score_gap = f64::INFINITY;
        let mut min_gap = f64::INFINITY;
        for (i, tri) in self.candidates.iter().enumerate() {
            let c = self.circumcenters[i];
            for corner in 0..3 {
                let s = self.corner_scores[i][corner];
                score_gap = score_gap.min((s - 0.5).abs());
                if s * (1.0 - s) <= 1e-9 {
                    continue;
                }
                let j = tri.indices[corner];
                let (mut best, mut second) = (f64::INFINITY, f64::INFINITY);
                for m in tri.exclusion_list(corner, &self.neighbors) {
                    let d = (ps.power(m, &c) - ps.power(j, &c)) / (2.0 * (ps.positions[m] - ps.positions[j]).norm());
                    if d < best {
                        second = best;
                        best = d;
                    } else if d < second {
                        second = d;
                    }
                }
                if second.is_finite() {
                    min_gap = min_gap.min(second - best);
                }
            }
        }
        (score_gap, min_gap)
    }

    /// Adds `a s_{i|c}` to `acc`. Scores near 1 enter as `a - a (1 - s)`, so
    /// the small changes of nearly saturated scores are not rounded away.
    #[inline]
    pub fn add_scaled(&self, acc: &mut CompensatedSum, i: usize, c: usize, a: f64) {
        let s = self.corner_scores[i][c];
        if s >= 0.5 {
            *acc += a;
            *acc += -a * self.corner_complements[i][c];
        } else {
            *acc += a * s;
        }
    }

    /// Distance of the closest triangle score to `level`.
    pub fn score_distance(&self, level: f64) -> f64 {
        self.scores.iter().map(|s| (s - level).abs()).fold(f64::INFINITY, f64::min)
    }

    /// Pulls `dL/ds_{i|j}` back to the positions and weights, accumulating into `grad`.
    pub fn backprop(&self, ps: &WeightedPointSet, d_corner_scores: &[[f64; 3]], grad: &mut GradientBundle) {
        let v = &ps.positions;
        let w = &ps.weights;
        for (i, tri) in self.candidates.iter().enumerate() {
            let g = d_corner_scores[i];
            if g == [0.0; 3] {
                continue;
            }
            let c = self.circumcenters[i];
            let mut g_c = Vec2::zeros();
            for corner in 0..3 {
                let s = self.corner_scores[i][corner];
                let g_d = g[corner] * self.alpha * s * (1.0 - s);
                let Some(m) = self.corner_argmin[i][corner] else {
                    continue;
                };
                if g_d == 0.0 {
                    continue;
                }
                let j = tri.indices[corner];
                let m = m as usize;
                let (_, dg) = bisector_distance_grad(&c, &v[j], w[j], &v[m], w[m]);
                g_c += dg.d_c * g_d;
                grad.d_positions[j] += dg.d_vj * g_d;
                grad.d_weights[j] += dg.d_wj * g_d;
                grad.d_positions[m] += dg.d_vm * g_d;
                grad.d_weights[m] += dg.d_wm * g_d;
            }
            if g_c != Vec2::zeros() {
                let [j, k, l] = tri.indices;
                let (dv, dw) = circumcenter_vjp([&v[j], &v[k], &v[l]], [w[j], w[k], w[l]], &c, &g_c);
                for (r, &idx) in tri.indices.iter().enumerate() {
                    grad.d_positions[idx] += dv[r];
                    grad.d_weights[idx] += dw[r];
                }
            }
        }
    }
}

/// Hard triangulation from the candidates with `s_i > threshold`, CCW faces.
///
/// A score within [`TIE_BAND`] of the threshold is resolved by the discrete power test.
/// With pruned neighbour lists, faces kept only because some corner could not
/// see a vertex inside their power circle are replaced by the exact
/// triangulation around them.
pub fn extract_discrete(soft: &SoftTriangulation, ps: &WeightedPointSet, threshold: f64) -> Mesh2 {
    let faces: Vec<[usize; 3]> = soft
        .candidates
        .iter()
        .zip(&soft.scores)
        .filter(|(tri, &s)| {
            if (s - threshold).abs() <= TIE_BAND {
                power_test(ps, tri.indices).map(|t| t.margin > 0.0).unwrap_or(false)
            } else {
                s > threshold
            }
        })
        .map(|(tri, _)| ccw_face(tri.indices, ps))
        .collect();
    let faces = if soft.neighbors.k() + 1 < ps.len() {
        repair_pruned(faces, &soft.neighbors, ps)
    } else {
        faces
    };
    Mesh2::new(ps.positions.clone(), faces)
}

/// Vertices strictly inside the power circle of `tri`, and the smallest margin.
fn power_circle_violations(ps: &WeightedPointSet, tri: [usize; 3], tol: f64) -> Option<(Vec<usize>, f64)> {
    let [j, k, l] = tri;
    let (v, w) = (&ps.positions, &ps.weights);
    let c = weighted_circumcenter(&v[j], w[j], &v[k], w[k], &v[l], w[l]).ok()?;
    let pj = ps.power(j, &c);
    let mut inside = Vec::new();
    let mut min_margin = f64::INFINITY;
    for m in (0..ps.len()).filter(|m| !tri.contains(m)) {
        let margin = ps.power(m, &c) - pj;
        min_margin = min_margin.min(margin);
        if margin < -tol {
            inside.push(m);
        }
    }
    Some((inside, min_margin))
}

fn repair_pruned(faces: Vec<[usize; 3]>, nt: &NeighborTable, ps: &WeightedPointSet) -> Vec<[usize; 3]> {
    let scale = ps.scale();
    let tol = AMBIGUITY_TOLERANCE * scale * scale;
    let mut region = BTreeSet::new();
    let mut keep = Vec::with_capacity(faces.len());
    for f in faces {
        match power_circle_violations(ps, f, tol) {
            Some((inside, _)) if inside.iter().any(|&m| f.iter().any(|&j| !nt.contains(j, m))) => {
                region.extend(f);
                region.extend(inside);
            }
            _ => keep.push(f),
        }
    }
    // candidates missing from the pruned enumeration show up as pinched
    // vertices; those neighbourhoods are triangulated exactly as well
    for rings in 1..=3 {
        let report = manifold_check(&Mesh2::new(ps.positions.clone(), keep.clone()));
        region.extend(report.non_manifold_vertices.iter().copied());
        for &(a, b) in report.non_manifold_edges.iter().chain(&report.orientation_conflicts) {
            region.extend([a, b]);
        }
        if region.is_empty() {
            break;
        }
        for _ in 0..rings {
            let seeds = region.clone();
            for f in &keep {
                if f.iter().any(|v| seeds.contains(v)) {
                    region.extend(f);
                }
            }
            for &j in &seeds {
                region.extend(nt.neighbors(j).iter().take(8).map(|&m| m as usize));
            }
        }
        let verts: Vec<usize> = std::mem::take(&mut region).into_iter().collect();
        let added = triangulate_exactly(&verts, &mut keep, ps, tol);
        log::debug!("added {added} exact faces around {} vertices hidden from pruned neighbour lists", verts.len());
    }
    keep
}

/// Adds every regular-triangulation face spanned by `verts` that is not in `faces`.
fn triangulate_exactly(verts: &[usize], faces: &mut Vec<[usize; 3]>, ps: &WeightedPointSet, tol: f64) -> usize {
    let present: BTreeSet<[usize; 3]> = faces.iter().map(|f| sorted_triple(*f)).collect();
    let (v, before) = (&ps.positions, faces.len());
    for (a, &j) in verts.iter().enumerate() {
        for (b, &k) in verts.iter().enumerate().skip(a + 1) {
            for &l in &verts[b + 1..] {
                if is_degenerate_triangle(&v[j], &v[k], &v[l]) || present.contains(&[j, k, l]) {
                    continue;
                }
                if let Some((inside, margin)) = power_circle_violations(ps, [j, k, l], tol) {
                    if inside.is_empty() && margin > tol {
                        faces.push(ccw_face([j, k, l], ps));
                    }
                }
            }
        }
    }
    faces.len() - before
}

fn sorted_triple(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::manifold_check;
    use crate::oracle::brute_force_wdt;
    use approx::assert_relative_eq;

    fn square(top_left: Vec2) -> WeightedPointSet {
        WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            top_left,
        ])
        .unwrap()
    }

    #[test]
    fn four_points_give_all_triples() {
        let ps = square(Vec2::new(0.0, 1.0));
        let nt = knn(&ps.positions, 3);
        let c = enumerate_candidates(&ps, &nt);
        assert_eq!(c.triangles.len(), 4);
        assert_eq!(c.degenerate_dropped, 0);
        assert!(c.triangles.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn collinear_triple_is_dropped() {
        let ps = WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(1.0, 1.0),
        ])
        .unwrap();
        let nt = knn(&ps.positions, 3);
        let c = enumerate_candidates(&ps, &nt);
        assert_eq!(c.triangles.len(), 3);
        assert_eq!(c.degenerate_dropped, 1);
        assert!(!c.triangles.contains(&CandidateTriangle::new(0, 1, 2)));
    }

    #[test]
    fn lone_triangle_saturates() {
        let ps = WeightedPointSet::unweighted(vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.5, 3f64.sqrt() / 2.0),
        ])
        .unwrap();
        let nt = knn(&ps.positions, 80);
        let tri = CandidateTriangle::new(0, 1, 2);
        assert_eq!(
            reduced_cell_signed_distance(&ps, &nt, &tri, 0).unwrap(),
            EMPTY_CELL_DISTANCE
        );
        for alpha in [1.0, 1000.0] {
            let soft = inclusion_scores(&ps, alpha, 80).unwrap();
            assert_eq!(soft.corner_scores, vec![[1.0; 3]]);
            let m = extract_discrete(&soft, &ps, 0.5);
            assert_eq!(m.faces, vec![[0, 1, 2]]);
        }
    }

    #[test]
    fn cocircular_square_sits_on_the_boundary() {
        let ps = square(Vec2::new(0.0, 1.0));
        let nt = knn(&ps.positions, 3);
        let tri = CandidateTriangle::new(0, 1, 2);
        for corner in 0..3 {
            let d = reduced_cell_signed_distance(&ps, &nt, &tri, corner).unwrap();
            assert!(d.abs() < 1e-15, "corner {corner}: {d}");
        }
        let soft = inclusion_scores(&ps, 1000.0, 3).unwrap();
        for s in &soft.corner_scores {
            for &x in s {
                assert_relative_eq!(x, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn pulled_vertex_makes_distance_positive() {
        let ps = square(Vec2::new(0.0, 1.2));
        let nt = knn(&ps.positions, 3);
        let tri = CandidateTriangle::new(0, 1, 2);
        let d = reduced_cell_signed_distance(&ps, &nt, &tri, 0).unwrap();
        assert!(d > 0.0);
    }

    #[test]
    fn corner_scores_average_to_triangle_score() {
        let ps = square(Vec2::new(0.1, 1.1));
        let soft = inclusion_scores(&ps, 50.0, 3).unwrap();
        for (s, cs) in soft.scores.iter().zip(&soft.corner_scores) {
            assert_eq!(*s, (cs[0] + cs[1] + cs[2]) / 3.0);
        }
    }

    #[test]
    fn extraction_matches_oracle_on_square_with_center() {
        let mut positions = square(Vec2::new(0.0, 1.0)).positions;
        positions[2] = Vec2::new(1.0, 1.05);
        positions.push(Vec2::new(0.5, 0.5));
        for (center_w2, faces) in [(1.0, 4usize), (0.0, 2)] {
            let ps = WeightedPointSet::new(positions.clone(), vec![1.0, 1.0, 1.0, 1.0, f64::sqrt(center_w2)])
                .unwrap();
            let soft = inclusion_scores(&ps, DEFAULT_ALPHA, DEFAULT_K).unwrap();
            let m = extract_discrete(&soft, &ps, 0.5);
            let oracle = brute_force_wdt(&ps).unwrap();
            assert_eq!(m.canonical_face_set(), oracle.canonical_face_set());
            assert_eq!(m.faces.len(), faces);
            assert_eq!(m.used, oracle.used);
            assert!(manifold_check(&m).is_empty());
        }
    }

    #[test]
    fn exact_half_scores_fall_back_to_power_test() {
        // cocircular square: both diagonals score exactly 0.5 and the power
        // test margin is zero, so neither is kept
        let ps = square(Vec2::new(0.0, 1.0));
        let soft = inclusion_scores(&ps, 1000.0, 3).unwrap();
        let m = extract_discrete(&soft, &ps, 0.5);
        assert!(manifold_check(&m).is_empty());
    }

    #[test]
    fn invalid_arguments() {
        let ps = square(Vec2::new(0.0, 1.0));
        assert!(inclusion_scores(&ps, 0.0, 3).is_err());
        assert!(inclusion_scores(&ps, 1.0, 0).is_err());
        let nt = knn(&ps.positions, 3);
        assert!(reduced_cell_signed_distance(&ps, &nt, &CandidateTriangle::new(0, 1, 2), 3).is_err());
    }

    #[test]
    fn pruned_extraction_stays_inside_the_regular_triangulation() {
        use rand::{Rng, SeedableRng};
        let (mut bad, mut nonmanifold) = (0, 0);
        for seed in 0..40 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let n = 60;
            let positions = (0..n).map(|_| Vec2::new(rng.gen(), rng.gen())).collect();
            let weights = (0..n).map(|_| rng.gen::<f64>() * 0.15).collect();
            let ps = WeightedPointSet::new(positions, weights).unwrap();
            let exact = brute_force_wdt(&ps).unwrap().canonical_face_set();
            let soft = inclusion_scores(&ps, DEFAULT_ALPHA, 8).unwrap();
            let mesh = extract_discrete(&soft, &ps, 0.5);
            bad += mesh.canonical_face_set().difference(&exact).count();
            nonmanifold += usize::from(!manifold_check(&mesh).is_empty());
        }
        assert_eq!(bad, 0);
        assert_eq!(nonmanifold, 0);
    }
}
