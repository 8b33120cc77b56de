use nalgebra::Matrix2;

use super::{DirectionField, Jacobian, Parameterization, Polygon, ScalarField};
use crate::error::{DwdtError, Result};
use crate::geom::{bounding_box, orient2d, Vec2, Vec3};
use crate::mesh::{manifold_check, DiscreteMesh};

/// Barycentric slack for assigning a query to a face.
const LOCATE_TOLERANCE: f64 = 1e-9;

/// Triangle mesh patch with per-vertex UV coordinates: a piecewise-linear
/// parameterization. Optional per-vertex fields are interpolated barycentrically.
#[derive(Debug, Clone)]
pub struct UvPatchMesh {
    pub positions: Vec<Vec3>,
    pub uvs: Vec<Vec2>,
    pub faces: Vec<[usize; 3]>,
    /// Target area per vertex.
    pub area: Option<Vec<f64>>,
    /// Unit direction per vertex.
    pub direction: Option<Vec<Vec3>>,
    /// Signed principal curvature magnitudes per vertex.
    pub curvatures: Option<Vec<(f64, f64)>>,
    /// Factor applied to the UVs by [`UvPatchMesh::normalize_uv`] (1 if never applied).
    pub uv_scale: f64,
    /// Distance outside the UV domain within which a query is still lifted by
    /// extending the nearest face affinely.
    pub extension_tolerance: f64,
    boundary: Polygon,
    grid: FaceGrid,
    /// Per face: UV edge-matrix inverse.
    inv_edges: Vec<Matrix2<f64>>,
}

impl UvPatchMesh {
    pub fn new(positions: Vec<Vec3>, uvs: Vec<Vec2>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let n = positions.len();
        if uvs.len() != n {
            return Err(DwdtError::InvalidPatch(format!(
                "{n} vertices but {} UV coordinates",
                uvs.len()
            )));
        }
        if faces.is_empty() {
            return Err(DwdtError::InvalidPatch("patch has no faces".into()));
        }
        if let Some(i) = positions.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(DwdtError::InvalidPatch(format!("vertex {i} is not finite")));
        }
        if let Some(i) = uvs.iter().position(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(DwdtError::InvalidPatch(format!("UV {i} is not finite")));
        }
        if let Some(fi) = faces.iter().position(|f| f.iter().any(|&v| v >= n)) {
            return Err(DwdtError::InvalidPatch(format!("face {fi} has an out-of-range index")));
        }
        let report = manifold_check(&DiscreteMesh::new(uvs.clone(), faces.clone()));
        if !report.is_empty() {
            return Err(DwdtError::InvalidPatch(format!(
                "patch is not a manifold: {report:?}"
            )));
        }
        let mut sign = 0.0;
        let mut scale = 0.0f64;
        for f in &faces {
            let (lo, hi) = bounding_box(&[uvs[f[0]], uvs[f[1]], uvs[f[2]]]);
            scale = scale.max((hi - lo).norm());
        }
        for (fi, f) in faces.iter().enumerate() {
            let det = orient2d(&uvs[f[0]], &uvs[f[1]], &uvs[f[2]]);
            if det.abs() <= 1e-14 * scale * scale {
                return Err(DwdtError::InvalidPatch(format!("UV face {fi} is degenerate")));
            }
            if sign == 0.0 {
                sign = det.signum();
            } else if det.signum() != sign {
                return Err(DwdtError::InvalidPatch(format!("UV face {fi} is inverted")));
            }
        }
        let boundary = boundary_loops(&uvs, &faces)?;
        let mut mesh = Self {
            positions,
            uvs,
            faces,
            area: None,
            direction: None,
            curvatures: None,
            uv_scale: 1.0,
            extension_tolerance: 0.0,
            boundary,
            grid: FaceGrid::default(),
            inv_edges: Vec::new(),
        };
        mesh.rebuild();
        mesh.extension_tolerance = 0.5 * mesh.mean_uv_edge_length();
        Ok(mesh)
    }

    fn rebuild(&mut self) {
        self.inv_edges = self
            .faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.uvs[f[0]], self.uvs[f[1]], self.uvs[f[2]]);
                Matrix2::from_columns(&[b - a, c - a])
                    .try_inverse()
                    .expect("non-degenerate UV face")
            })
            .collect();
        self.grid = FaceGrid::new(&self.uvs, &self.faces);
    }

    pub fn with_area(mut self, area: Vec<f64>) -> Result<Self> {
        if area.len() != self.positions.len() {
            return Err(DwdtError::InvalidInput(format!(
                "area field has {} values for {} vertices",
                area.len(),
                self.positions.len()
            )));
        }
        if let Some(i) = area.iter().position(|a| !a.is_finite()) {
            return Err(DwdtError::InvalidInput(format!("area value {i} is not finite")));
        }
        self.area = Some(area);
        Ok(self)
    }

    /// Sets the direction field; vectors must be unit length within 1e-6.
    pub fn with_direction(mut self, direction: Vec<Vec3>) -> Result<Self> {
        if direction.len() != self.positions.len() {
            return Err(DwdtError::InvalidInput(format!(
                "direction field has {} values for {} vertices",
                direction.len(),
                self.positions.len()
            )));
        }
        if let Some(i) = direction.iter().position(|c| (c.norm() - 1.0).abs() > 1e-6) {
            return Err(DwdtError::InvalidInput(format!(
                "direction {i} is not unit length"
            )));
        }
        self.direction = Some(direction);
        Ok(self)
    }

    pub fn with_curvatures(mut self, curvatures: Vec<(f64, f64)>) -> Result<Self> {
        if curvatures.len() != self.positions.len() {
            return Err(DwdtError::InvalidInput(format!(
                "curvature field has {} values for {} vertices",
                curvatures.len(),
                self.positions.len()
            )));
        }
        self.curvatures = Some(curvatures);
        Ok(self)
    }

    pub fn mean_uv_edge_length(&self) -> f64 {
        self.mean_edge_length(|i| Vec3::new(self.uvs[i].x, self.uvs[i].y, 0.0))
    }

    pub fn mean_3d_edge_length(&self) -> f64 {
        self.mean_edge_length(|i| self.positions[i])
    }

    fn mean_edge_length(&self, p: impl Fn(usize) -> Vec3) -> f64 {
        let edges = DiscreteMesh::new(self.uvs.clone(), self.faces.clone()).edge_face_counts();
        edges.keys().map(|&(a, b)| (p(a) - p(b)).norm()).sum::<f64>() / edges.len() as f64
    }

    /// Scales the UVs about the origin so the mean UV edge length equals the
    /// mean 3D edge length. Returns the factor (also stored in `uv_scale`).
    pub fn normalize_uv(&mut self) -> f64 {
        let f = self.mean_3d_edge_length() / self.mean_uv_edge_length();
        for uv in &mut self.uvs {
            *uv *= f;
        }
        self.uv_scale *= f;
        self.extension_tolerance *= f;
        self.boundary = boundary_loops(&self.uvs, &self.faces).expect("boundary unchanged by scaling");
        self.rebuild();
        f
    }

    /// Face containing `v` and its barycentric coordinates. Queries within the
    /// tolerance of several faces go to the lowest face index; queries outside
    /// the domain (within `extension_tolerance`) use the nearest face.
    pub fn locate(&self, v: &Vec2) -> Result<(usize, [f64; 3])> {
        for &fi in self.grid.faces_near(v) {
            let b = self.barycentric(fi as usize, v);
            if b.iter().all(|&x| x >= -LOCATE_TOLERANCE) {
                return Ok((fi as usize, b));
            }
        }
        let bp = self.boundary.closest_point(v);
        let outside = (v - bp.point).norm();
        if self.boundary.contains(v) || outside <= self.extension_tolerance {
            // nearest face by distance to the query
            let fi = (0..self.faces.len())
                .min_by(|&a, &b| {
                    self.face_distance(a, v)
                        .total_cmp(&self.face_distance(b, v))
                        .then(a.cmp(&b))
                })
                .expect("patch has faces");
            return Ok((fi, self.barycentric(fi, v)));
        }
        Err(DwdtError::OutsideDomain {
            point: *v,
            nearest: bp.point,
        })
    }

    fn barycentric(&self, fi: usize, v: &Vec2) -> [f64; 3] {
        let y = self.inv_edges[fi] * (v - self.uvs[self.faces[fi][0]]);
        [1.0 - y.x - y.y, y.x, y.y]
    }

    fn face_distance(&self, fi: usize, v: &Vec2) -> f64 {
        let f = self.faces[fi];
        let b = self.barycentric(fi, v);
        if b.iter().all(|&x| x >= 0.0) {
            return 0.0;
        }
        (0..3)
            .map(|e| {
                let (a, c) = (self.uvs[f[e]], self.uvs[f[(e + 1) % 3]]);
                let d = c - a;
                let t = ((v - a).dot(&d) / d.norm_squared()).clamp(0.0, 1.0);
                (v - (a + d * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Gradients of the three barycentric coordinates of face `fi`.
    fn barycentric_gradients(&self, fi: usize) -> [Vec2; 3] {
        let inv = &self.inv_edges[fi];
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        [-(g1 + g2), g1, g2]
    }

    /// Barycentric interpolation of the area field.
    pub fn sample_area(&self, v: &Vec2) -> Result<f64> {
        Ok(self.area_with_gradient(v)?.0)
    }

    fn area_with_gradient(&self, v: &Vec2) -> Result<(f64, Vec2)> {
        let area = self
            .area
            .as_ref()
            .ok_or_else(|| DwdtError::InvalidInput("patch has no area field".into()))?;
        let (fi, b) = self.locate(v)?;
        let f = self.faces[fi];
        let g = self.barycentric_gradients(fi);
        let value = (0..3).map(|r| b[r] * area[f[r]]).sum();
        let grad = (0..3).map(|r| g[r] * area[f[r]]).sum();
        Ok((value, grad))
    }

    /// Barycentric interpolation of the direction field, renormalized to unit length.
    pub fn sample_direction(&self, v: &Vec2) -> Result<Vec3> {
        Ok(self.direction_with_jacobian(v)?.0)
    }

    fn direction_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)> {
        let dir = self
            .direction
            .as_ref()
            .ok_or_else(|| DwdtError::InvalidInput("patch has no direction field".into()))?;
        let (fi, b) = self.locate(v)?;
        let f = self.faces[fi];
        let g = self.barycentric_gradients(fi);
        let u: Vec3 = (0..3).map(|r| dir[f[r]] * b[r]).sum();
        let du: Jacobian = (0..3).map(|r| dir[f[r]] * g[r].transpose()).sum();
        let len = u.norm();
        if len < 1e-12 {
            return Err(DwdtError::numeric("direction interpolation cancels"));
        }
        let c = u / len;
        let proj = nalgebra::Matrix3::identity() - c * c.transpose();
        Ok((c, proj * du / len))
    }
}

impl Parameterization for UvPatchMesh {
    fn lift(&self, v: &Vec2) -> Result<Vec3> {
        let (fi, b) = self.locate(v)?;
        let f = self.faces[fi];
        Ok((0..3).map(|r| self.positions[f[r]] * b[r]).sum())
    }

    fn lift_jacobian(&self, v: &Vec2) -> Result<Jacobian> {
        let (fi, _) = self.locate(v)?;
        Ok(self.face_jacobian(fi))
    }

    fn lift_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)> {
        let (fi, b) = self.locate(v)?;
        let f = self.faces[fi];
        let p = (0..3).map(|r| self.positions[f[r]] * b[r]).sum();
        Ok((p, self.face_jacobian(fi)))
    }

    fn forward(&self, p: &Vec3) -> Option<Vec2> {
        // project onto the nearest face in 3D and carry the barycentrics over
        let mut best: Option<(f64, Vec2)> = None;
        for f in &self.faces {
            let (a, b, c) = (self.positions[f[0]], self.positions[f[1]], self.positions[f[2]]);
            let (bary, q) = closest_on_triangle(p, &a, &b, &c);
            let d = (p - q).norm_squared();
            if best.map_or(true, |(bd, _)| d < bd) {
                let uv = self.uvs[f[0]] * bary[0] + self.uvs[f[1]] * bary[1] + self.uvs[f[2]] * bary[2];
                best = Some((d, uv));
            }
        }
        best.map(|(_, uv)| uv)
    }

    fn boundary(&self) -> &Polygon {
        &self.boundary
    }
}

impl UvPatchMesh {
    /// `(3D edge matrix) * (UV edge matrix)^-1` for face `fi`.
    pub fn face_jacobian(&self, fi: usize) -> Jacobian {
        let f = self.faces[fi];
        let p0 = self.positions[f[0]];
        let e3 = Jacobian::from_columns(&[self.positions[f[1]] - p0, self.positions[f[2]] - p0]);
        e3 * self.inv_edges[fi]
    }
}

impl ScalarField for UvPatchMesh {
    fn sample_with_gradient(&self, v: &Vec2) -> Result<(f64, Vec2)> {
        self.area_with_gradient(v)
    }
}

impl DirectionField for UvPatchMesh {
    fn sample_with_jacobian(&self, v: &Vec2) -> Result<(Vec3, Jacobian)> {
        self.direction_with_jacobian(v)
    }

    fn principal_curvatures(&self, v: &Vec2) -> Result<Option<(f64, f64)>> {
        let Some(k) = &self.curvatures else {
            return Ok(None);
        };
        let (fi, b) = self.locate(v)?;
        let f = self.faces[fi];
        let k1 = (0..3).map(|r| b[r] * k[f[r]].0).sum();
        let k2 = (0..3).map(|r| b[r] * k[f[r]].1).sum();
        Ok(Some((k1, k2)))
    }
}

/// Closest point on a 3D triangle and its barycentric coordinates.
fn closest_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> ([f64; 3], Vec3) {
    let (ab, ac) = (b - a, c - a);
    let n = ab.cross(&ac);
    let n2 = n.norm_squared();
    if n2 > 0.0 {
        let q = p - n * ((p - a).dot(&n) / n2);
        let wb = (q - a).cross(&ac).dot(&n) / n2;
        let wc = ab.cross(&(q - a)).dot(&n) / n2;
        let bary = [1.0 - wb - wc, wb, wc];
        if bary.iter().all(|&x| x >= 0.0) {
            return (bary, q);
        }
    }
    let corners = [*a, *b, *c];
    let mut best = ([1.0, 0.0, 0.0], *a, f64::INFINITY);
    for e in 0..3 {
        let (s, t) = (corners[e], corners[(e + 1) % 3]);
        let d = t - s;
        let u = if d.norm_squared() > 0.0 {
            ((p - s).dot(&d) / d.norm_squared()).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let q = s + d * u;
        let dist = (p - q).norm_squared();
        if dist < best.2 {
            let mut bary = [0.0; 3];
            bary[e] = 1.0 - u;
            bary[(e + 1) % 3] = u;
            best = (bary, q, dist);
        }
    }
    (best.0, best.1)
}

/// Boundary edges chained into closed loops.
fn boundary_loops(uvs: &[Vec2], faces: &[[usize; 3]]) -> Result<Polygon> {
    let mesh = DiscreteMesh::new(uvs.to_vec(), faces.to_vec());
    let counts = mesh.edge_face_counts();
    let mut next: std::collections::BTreeMap<usize, usize> = std::collections::BTreeMap::new();
    for f in faces {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            if counts[&(a.min(b), a.max(b))] == 1 && next.insert(a, b).is_some() {
                return Err(DwdtError::InvalidPatch(format!(
                    "boundary is not manifold at vertex {a}"
                )));
            }
        }
    }
    let mut loops = Vec::new();
    while let Some((&start, _)) = next.iter().next() {
        let mut l = vec![uvs[start]];
        let mut cur = next.remove(&start).expect("present");
        while cur != start {
            l.push(uvs[cur]);
            cur = next.remove(&cur).ok_or_else(|| {
                DwdtError::InvalidPatch(format!("boundary loop is not closed at vertex {cur}"))
            })?;
        }
        loops.push(l);
    }
    if loops.is_empty() {
        return Err(DwdtError::InvalidPatch("patch has no boundary".into()));
    }
    Polygon::new(loops)
}

/// Uniform grid of face buckets over the UV bounding box.
#[derive(Debug, Clone, Default)]
struct FaceGrid {
    origin: Vec2,
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
}

impl FaceGrid {
    fn new(uvs: &[Vec2], faces: &[[usize; 3]]) -> Self {
        let (lo, hi) = bounding_box(uvs);
        let ext = hi - lo;
        let cell = ((ext.x * ext.y).max(1e-300) / faces.len() as f64).sqrt().max(ext.x.max(ext.y) / 1024.0);
        let nx = ((ext.x / cell) as usize + 1).min(1024);
        let ny = ((ext.y / cell) as usize + 1).min(1024);
        let range = |f: &[usize; 3]| {
            let (a, b) = bounding_box(&[uvs[f[0]], uvs[f[1]], uvs[f[2]]]);
            let c0 = |p: f64, o: f64, n: usize| (((p - o) / cell).floor().max(0.0) as usize).min(n - 1);
            (
                c0(a.x - 1e-9 * cell, lo.x, nx),
                c0(b.x + 1e-9 * cell, lo.x, nx),
                c0(a.y - 1e-9 * cell, lo.y, ny),
                c0(b.y + 1e-9 * cell, lo.y, ny),
            )
        };
        let mut counts = vec![0u32; nx * ny + 1];
        for f in faces {
            let (x0, x1, y0, y1) = range(f);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    counts[y * nx + x + 1] += 1;
                }
            }
        }
        for c in 1..counts.len() {
            counts[c] += counts[c - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; *counts.last().unwrap() as usize];
        for (fi, f) in faces.iter().enumerate() {
            let (x0, x1, y0, y1) = range(f);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let c = y * nx + x;
                    items[fill[c] as usize] = fi as u32;
                    fill[c] += 1;
                }
            }
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

    /// Faces whose bounding box overlaps the cell of `v`, in index order.
    fn faces_near(&self, v: &Vec2) -> &[u32] {
        let fx = (v.x - self.origin.x) / self.cell;
        let fy = (v.y - self.origin.y) / self.cell;
        if !(fx >= 0.0 && fy >= 0.0 && (fx as usize) < self.nx && (fy as usize) < self.ny) {
            return &[];
        }
        let c = fy as usize * self.nx + fx as usize;
        &self.items[self.starts[c] as usize..self.starts[c + 1] as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::fd_jacobian;
    use super::*;
    use approx::assert_relative_eq;

    /// `m x m` grid over the unit square, lifted onto a paraboloid.
    pub(crate) fn grid_patch(m: usize) -> UvPatchMesh {
        let mut uvs = Vec::new();
        let mut pos = Vec::new();
        for j in 0..=m {
            for i in 0..=m {
                let uv = Vec2::new(i as f64 / m as f64, j as f64 / m as f64);
                uvs.push(uv);
                pos.push(Vec3::new(uv.x, uv.y, 0.3 * (uv.x * uv.x + uv.y * uv.y)));
            }
        }
        let id = |i: usize, j: usize| j * (m + 1) + i;
        let mut faces = Vec::new();
        for j in 0..m {
            for i in 0..m {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        UvPatchMesh::new(pos, uvs, faces).unwrap()
    }

    fn flat_quad() -> UvPatchMesh {
        let uvs = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
        ];
        let pos = uvs.iter().map(|p| Vec3::new(p.x, p.y, 0.0)).collect();
        UvPatchMesh::new(pos, uvs, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    #[test]
    fn flat_patch_lifts_identically() {
        let q = flat_quad();
        for p in [Vec2::new(0.3, 0.2), Vec2::new(0.9, 0.95), Vec2::new(1.0, 1.0)] {
            assert_relative_eq!(q.lift(&p).unwrap(), Vec3::new(p.x, p.y, 0.0), epsilon = 1e-15);
            assert_relative_eq!(
                q.lift_jacobian(&p).unwrap(),
                Jacobian::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn vertices_lift_exactly() {
        let g = grid_patch(4);
        for (uv, p) in g.uvs.iter().zip(&g.positions) {
            assert_eq!(g.lift(uv).unwrap(), *p);
        }
    }

    #[test]
    fn diagonal_queries_go_to_the_lower_face() {
        let q = flat_quad();
        assert_eq!(q.locate(&Vec2::new(0.5, 0.5)).unwrap().0, 0);
        assert_eq!(q.locate(&Vec2::new(0.5, 0.5 + 1e-12)).unwrap().0, 0);
        assert_eq!(q.locate(&Vec2::new(0.2, 0.6)).unwrap().0, 1);
    }

    #[test]
    fn jacobian_is_edge_ratio_and_matches_differences() {
        let g = grid_patch(5);
        for (fi, f) in g.faces.iter().enumerate() {
            let c = (g.uvs[f[0]] + g.uvs[f[1]] + g.uvs[f[2]]) / 3.0;
            assert_eq!(g.locate(&c).unwrap().0, fi);
            let fd = fd_jacobian(|x| g.lift(x).unwrap(), &c, 1e-7);
            let j = g.lift_jacobian(&c).unwrap();
            assert!((j - fd).norm() < 1e-6 * j.norm());
            assert_relative_eq!(g.forward(&g.lift(&c).unwrap()).unwrap(), c, epsilon = 1e-9);
        }
    }

    #[test]
    fn fields_interpolate() {
        let q = flat_quad().with_area(vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let bary = Vec2::new(2.0 / 3.0, 1.0 / 3.0);
        assert_relative_eq!(q.sample_area(&bary).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        let q = flat_quad().with_area(vec![2.0; 4]).unwrap();
        assert_relative_eq!(q.sample_area(&Vec2::new(0.1, 0.7)).unwrap(), 2.0);

        let c = Vec3::new(1.0, 0.0, 0.0);
        let q = flat_quad().with_direction(vec![c, -c, c, Vec3::new(0.0, 1.0, 0.0)]).unwrap();
        for p in [Vec2::new(0.3, 0.1), Vec2::new(0.2, 0.7), Vec2::new(0.9, 0.3)] {
            let (d, j) = q.sample_with_jacobian(&p).unwrap();
            assert_relative_eq!(d.norm(), 1.0, epsilon = 1e-14);
            let fd = fd_jacobian(|x| q.sample_direction(x).unwrap(), &p, 1e-7);
            assert!((j - fd).norm() < 1e-5, "{p:?}");
        }
        assert!(q.clone().with_direction(vec![Vec3::zeros(); 4]).is_err());
    }

    #[test]
    fn outside_queries() {
        let q = flat_quad();
        assert!(q.extension_tolerance > 0.0);
        let near = Vec2::new(1.0 + 0.1 * q.extension_tolerance, 0.5);
        assert_relative_eq!(q.lift(&near).unwrap(), Vec3::new(near.x, 0.5, 0.0), epsilon = 1e-14);
        match q.lift(&Vec2::new(3.0, 0.5)) {
            Err(DwdtError::OutsideDomain { nearest, .. }) => {
                assert_relative_eq!(nearest, Vec2::new(1.0, 0.5))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn boundary_of_grid_is_its_square() {
        let g = grid_patch(3);
        let b = g.boundary();
        assert_eq!(b.loops().len(), 1);
        assert_eq!(b.loops()[0].len(), 12);
        assert_relative_eq!(b.area(), 1.0, epsilon = 1e-14);
        let q = b.closest_point(&Vec2::new(0.4, 0.05));
        assert_relative_eq!(q.normal, Vec2::new(0.0, 1.0));
    }

    #[test]
    fn normalize_matches_mean_edge_lengths() {
        let mut g = grid_patch(4);
        for uv in &mut g.uvs {
            *uv *= 3.0;
        }
        let mut g = UvPatchMesh::new(g.positions.clone(), g.uvs.clone(), g.faces.clone()).unwrap();
        let f = g.normalize_uv();
        assert_relative_eq!(g.mean_uv_edge_length(), g.mean_3d_edge_length(), epsilon = 1e-12);
        assert_relative_eq!(g.uv_scale, f);
        assert!(f < 1.0);
        let p = g.uvs[7];
        assert_eq!(g.lift(&p).unwrap(), g.positions[7]);
    }

    #[test]
    fn rejects_bad_patches() {
        let q = flat_quad();
        let mut faces = q.faces.clone();
        faces[1] = [0, 3, 2];
        assert!(matches!(
            UvPatchMesh::new(q.positions.clone(), q.uvs.clone(), faces),
            Err(DwdtError::InvalidPatch(_))
        ));
        let mut uvs = q.uvs.clone();
        uvs[2] = Vec2::new(0.5, 0.0);
        assert!(UvPatchMesh::new(q.positions.clone(), uvs, vec![[0, 1, 2]]).is_err());
    }
}
