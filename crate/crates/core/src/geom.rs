//! Planar primitives for power diagrams: power bisectors, weighted
//! circumcenters, signed distances and exact k-nearest-neighbour tables.
//!
//! Weights are stored unsquared; every power distance uses `w * w`.

use nalgebra::{Vector2, Vector3};

use crate::error::{DwdtError, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;

/// Relative determinant tolerance below which a triple counts as collinear.
pub const DEGENERACY_TOLERANCE: f64 = 1e-10;

/// Vertex positions and per-vertex weights: the optimization variables.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointSet {
    pub positions: Vec<Vec2>,
    pub weights: Vec<f64>,
}

impl WeightedPointSet {
    pub fn new(positions: Vec<Vec2>, weights: Vec<f64>) -> Result<Self> {
        if positions.len() != weights.len() {
            return Err(DwdtError::InvalidInput(format!(
                "{} positions but {} weights",
                positions.len(),
                weights.len()
            )));
        }
        if let Some(i) = positions
            .iter()
            .position(|p| !p.x.is_finite() || !p.y.is_finite())
        {
            return Err(DwdtError::InvalidInput(format!("position {i} is not finite")));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(DwdtError::InvalidInput(format!("weight {i} is not finite")));
        }
        let ps = Self { positions, weights };
        if let Some((i, j)) = ps.find_coincident() {
            return Err(DwdtError::DegeneratePair(i, j));
        }
        Ok(ps)
    }

    /// Point set with all weights zero (classical Delaunay setting).
    pub fn unweighted(positions: Vec<Vec2>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Power distance of `x` to vertex `i`.
    #[inline]
    pub fn power(&self, i: usize, x: &Vec2) -> f64 {
        power_distance(x, &self.positions[i], self.weights[i])
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        bounding_box(&self.positions)
    }

    /// Diagonal of the axis-aligned bounding box; the coordinate scale used by tolerances.
    pub fn scale(&self) -> f64 {
        let (lo, hi) = self.bounding_box();
        (hi - lo).norm()
    }

    /// Applies `w_i^2 -> w_i^2 + c` to every weight. Fails when a squared weight would go negative.
    pub fn shift_squared_weights(&self, c: f64) -> Result<Self> {
        let weights = self
            .weights
            .iter()
            .map(|w| {
                let sq = w * w + c;
                if sq < 0.0 {
                    Err(DwdtError::InvalidInput(
                        "squared weight shift makes a weight imaginary".into(),
                    ))
                } else {
                    Ok(sq.sqrt())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            positions: self.positions.clone(),
            weights,
        })
    }

    fn find_coincident(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (self.positions[a], self.positions[b]);
            pa.x.total_cmp(&pb.x).then(pa.y.total_cmp(&pb.y))
        });
        order.windows(2).find_map(|w| {
            (self.positions[w[0]] == self.positions[w[1]]).then(|| (w[0].min(w[1]), w[0].max(w[1])))
        })
    }
}

/// Neumaier compensated sum. Loss values add up thousands of terms; without
/// compensation their rounding swamps finite differences of small partials.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }

    /// Leading sum and accumulated correction.
    pub fn parts(&self) -> (f64, f64) {
        (self.sum, self.carry)
    }
}

impl std::ops::AddAssign<f64> for CompensatedSum {
    fn add_assign(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }
}

impl std::iter::Sum<f64> for CompensatedSum {
    fn sum<I: Iterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::default();
        for x in iter {
            acc += x;
        }
        acc
    }
}

#[inline]
pub fn power_distance(x: &Vec2, v: &Vec2, w: f64) -> f64 {
    (x - v).norm_squared() - w * w
}

pub fn bounding_box(points: &[Vec2]) -> (Vec2, Vec2) {
    let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    (lo, hi)
}

/// Line of equal power distance between two weighted points.
///
/// `normal` is a unit vector pointing into the half-plane closer (in power
/// distance) to the first point, so `normal . x + offset` is the signed
/// distance from `x` to the line, positive on that side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisector {
    pub normal: Vec2,
    pub offset: f64,
}

impl Bisector {
    #[inline]
    pub fn signed_distance(&self, x: &Vec2) -> f64 {
        self.normal.dot(x) + self.offset
    }

    /// The same line with the opposite orientation.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

pub fn power_bisector(vj: &Vec2, wj: f64, vk: &Vec2, wk: f64) -> Result<Bisector> {
    let e = vk - vj;
    let len = e.norm();
    if len == 0.0 {
        return Err(DwdtError::DegeneratePair(0, 1));
    }
    // 2 (vk - vj) . x = |vk|^2 - |vj|^2 + wj^2 - wk^2
    let rhs = vk.norm_squared() - vj.norm_squared() + wj * wj - wk * wk;
    Ok(Bisector {
        normal: -e / len,
        offset: rhs / (2.0 * len),
    })
}

pub fn signed_bisector_distance(x: &Vec2, b: &Bisector) -> f64 {
    b.signed_distance(x)
}

/// Determinant of the edge matrix `[vk - vj, vl - vj]` (twice the signed area).
#[inline]
pub fn orient2d(vj: &Vec2, vk: &Vec2, vl: &Vec2) -> f64 {
    let a = vk - vj;
    let b = vl - vj;
    a.x * b.y - a.y * b.x
}

/// True when the triple is collinear relative to its own bounding-box diagonal.
pub fn is_degenerate_triangle(vj: &Vec2, vk: &Vec2, vl: &Vec2) -> bool {
    let det = orient2d(vj, vk, vl);
    let (lo, hi) = bounding_box(&[*vj, *vk, *vl]);
    let diag2 = (hi - lo).norm_squared();
    det.abs() <= DEGENERACY_TOLERANCE * diag2
}

/// Point of equal power distance to three weighted vertices (the radical center).
pub fn weighted_circumcenter(
    vj: &Vec2,
    wj: f64,
    vk: &Vec2,
    wk: f64,
    vl: &Vec2,
    wl: f64,
) -> Result<Vec2> {
    let det = orient2d(vj, vk, vl);
    if is_degenerate_triangle(vj, vk, vl) {
        return Err(DwdtError::DegenerateTriangle { det });
    }
    Ok(circumcenter_unchecked(vj, wj, vk, wk, vl, wl, det))
}

#[inline]
pub(crate) fn circumcenter_unchecked(
    vj: &Vec2,
    wj: f64,
    vk: &Vec2,
    wk: f64,
    vl: &Vec2,
    wl: f64,
    det: f64,
) -> Vec2 {
    // Solved relative to vj for conditioning:
    // 2 a . y = |a|^2 + wj^2 - wk^2, 2 b . y = |b|^2 + wj^2 - wl^2, c = vj + y
    let a = vk - vj;
    let b = vl - vj;
    let ra = 0.5 * (a.norm_squared() + wj * wj - wk * wk);
    let rb = 0.5 * (b.norm_squared() + wj * wj - wl * wl);
    let inv = 1.0 / det;
    vj + Vec2::new((ra * b.y - rb * a.y) * inv, (a.x * rb - b.x * ra) * inv)
}

/// Vector-Jacobian product of the weighted circumcenter: given `g = dL/dc`,
/// returns `dL/d(vj, vk, vl)` and `dL/d(wj, wk, wl)` (unsquared weights).
pub(crate) fn circumcenter_vjp(
    v: [&Vec2; 3],
    w: [f64; 3],
    c: &Vec2,
    g: &Vec2,
) -> ([Vec2; 3], [f64; 3]) {
    let [vj, vk, vl] = v;
    // M = 2 [ (vk - vj)^T ; (vl - vj)^T ], lambda = M^{-T} g
    let a = vk - vj;
    let b = vl - vj;
    let det = 2.0 * (a.x * b.y - a.y * b.x);
    // M^T = 2 [a b]; solve 2 (a * l1 + b * l2) = g
    let l1 = (g.x * b.y - g.y * b.x) / det;
    let l2 = (a.x * g.y - a.y * g.x) / det;
    let dvk = 2.0 * l1 * (vk - c);
    let dvl = 2.0 * l2 * (vl - c);
    let dvj = 2.0 * (l1 + l2) * (c - vj);
    let dwj = 2.0 * (l1 + l2) * w[0];
    let dwk = -2.0 * l1 * w[1];
    let dwl = -2.0 * l2 * w[2];
    ([dvj, dvk, dvl], [dwj, dwk, dwl])
}

/// Local partial derivatives of the signed distance from `c` to the power
/// bisector between corner `j` and competitor `m`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BisectorDistanceGrad {
    pub d_c: Vec2,
    pub d_vj: Vec2,
    pub d_wj: f64,
    pub d_vm: Vec2,
    pub d_wm: f64,
}

/// `d = (pow_m(c) - pow_j(c)) / (2 |vm - vj|)` together with its partials.
pub(crate) fn bisector_distance_grad(
    c: &Vec2,
    vj: &Vec2,
    wj: f64,
    vm: &Vec2,
    wm: f64,
) -> (f64, BisectorDistanceGrad) {
    let e = vm - vj;
    let len2 = e.norm_squared();
    let len = len2.sqrt();
    let d = (power_distance(c, vm, wm) - power_distance(c, vj, wj)) / (2.0 * len);
    let grad = BisectorDistanceGrad {
        d_c: -e / len,
        d_vj: (c - vj) / len + e * (d / len2),
        d_wj: wj / len,
        d_vm: -(c - vm) / len - e * (d / len2),
        d_wm: -wm / len,
    };
    (d, grad)
}

/// Per-vertex k nearest neighbours by unweighted Euclidean distance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborTable {
    k: usize,
    neighbors: Vec<u32>,
}

impl NeighborTable {
    /// Effective list length, `min(k, n - 1)`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        if self.k == 0 {
            0
        } else {
            self.neighbors.len() / self.k
        }
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).contains(&(j as u32))
    }
}

/// Exact k-nearest-neighbour table, grid accelerated. Ties broken by lower index.
pub fn knn(points: &[Vec2], k: usize) -> NeighborTable {
    let n = points.len();
    let k = k.min(n.saturating_sub(1));
    if k == 0 {
        return NeighborTable {
            k: 0,
            neighbors: Vec::new(),
        };
    }
    let grid = PointGrid::new(points, k);
    let mut neighbors = Vec::with_capacity(n * k);
    let mut scratch: Vec<(f64, u32)> = Vec::new();
    for i in 0..n {
        grid.nearest(points, i, k, &mut scratch);
        neighbors.extend(scratch.iter().map(|&(_, j)| j));
    }
    NeighborTable { k, neighbors }
}

struct PointGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl PointGrid {
    fn new(points: &[Vec2], k: usize) -> Self {
        let n = points.len();
        let (lo, hi) = bounding_box(points);
        let ext = hi - lo;
        // aim for roughly k/4 points per cell so a query touches a few rings
        let per_cell = (k as f64 / 4.0).max(1.0);
        let area = ext.x * ext.y;
        let mut cell = if area > 0.0 {
            (area * per_cell / n as f64).sqrt()
        } else {
            ext.x.max(ext.y) * per_cell / n as f64
        };
        const MAX_CELLS: f64 = 4096.0;
        cell = cell.max(ext.x / MAX_CELLS).max(ext.y / MAX_CELLS);
        if !(cell.is_finite() && cell > 0.0) {
            cell = 1.0;
        }
        let nx = ((ext.x / cell).floor() as usize + 1).clamp(1, 1 << 12);
        let ny = ((ext.y / cell).floor() as usize + 1).clamp(1, 1 << 12);
        let cell_of = |p: &Vec2| -> usize {
            let cx = (((p.x - lo.x) / cell) as usize).min(nx - 1);
            let cy = (((p.y - lo.y) / cell) as usize).min(ny - 1);
            cy * nx + cx
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for p in points {
            counts[cell_of(p) + 1] += 1;
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; n];
        for (i, p) in points.iter().enumerate() {
            let c = cell_of(p);
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        Self {
            origin: lo,
            cell,
            nx,
            ny,
            starts: counts,
            items,
        }
    }

    fn nearest(&self, points: &[Vec2], i: usize, k: usize, out: &mut Vec<(f64, u32)>) {
        out.clear();
        let q = points[i];
        let cx = (((q.x - self.origin.x) / self.cell) as isize).clamp(0, self.nx as isize - 1);
        let cy = (((q.y - self.origin.y) / self.cell) as isize).clamp(0, self.ny as isize - 1);
        let max_ring = self.nx.max(self.ny) as isize;
        let by_dist = |a: &(f64, u32), b: &(f64, u32)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        for r in 0..=max_ring {
            for gy in (cy - r)..=(cy + r) {
                if gy < 0 || gy >= self.ny as isize {
                    continue;
                }
                let on_edge_row = gy == cy - r || gy == cy + r;
                let mut gx = cx - r;
                while gx <= cx + r {
                    if gx >= 0 && gx < self.nx as isize {
                        let c = gy as usize * self.nx + gx as usize;
                        let (s, e) = (self.starts[c] as usize, self.starts[c + 1] as usize);
                        for &j in &self.items[s..e] {
                            if j as usize != i {
                                out.push(((points[j as usize] - q).norm_squared(), j));
                            }
                        }
                    }
                    // interior rows only visit the two ring columns
                    gx += if on_edge_row || r == 0 { 1 } else { 2 * r };
                }
            }
            if out.len() >= k {
                out.select_nth_unstable_by(k - 1, by_dist);
                out.truncate(k);
                // unseen points lie at least r cells away
                let reach = r as f64 * self.cell;
                let kth = out.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max);
                if kth < reach * reach {
                    break;
                }
            }
        }
        out.sort_unstable_by(by_dist);
        out.truncate(k);
    }
}
