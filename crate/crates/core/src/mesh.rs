//! Discrete triangle meshes and manifold validation.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::geom::{orient2d, Vec2, Vec3};

/// Hard triangulation over a vertex list. Faces index into `vertices`;
/// `used` marks vertices referenced by at least one face.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMesh<P = Vec2> {
    pub vertices: Vec<P>,
    pub faces: Vec<[usize; 3]>,
    pub used: Vec<bool>,
}

pub type Mesh2 = DiscreteMesh<Vec2>;
pub type Mesh3 = DiscreteMesh<Vec3>;

impl<P: Clone> DiscreteMesh<P> {
    /// Builds a mesh and derives the used-vertex mask from the faces.
    pub fn new(vertices: Vec<P>, faces: Vec<[usize; 3]>) -> Self {
        let mut used = vec![false; vertices.len()];
        for f in &faces {
            for &v in f {
                if v < used.len() {
                    used[v] = true;
                }
            }
        }
        Self {
            vertices,
            faces,
            used,
        }
    }

    pub fn empty() -> Self {
        Self {
            vertices: Vec::new(),
            faces: Vec::new(),
            used: Vec::new(),
        }
    }

    pub fn num_used(&self) -> usize {
        self.used.iter().filter(|&&u| u).count()
    }

    /// Maps vertices through `f`, keeping connectivity.
    pub fn map_vertices<Q>(&self, f: impl FnMut(&P) -> Q) -> DiscreteMesh<Q> {
        DiscreteMesh {
            vertices: self.vertices.iter().map(f).collect(),
            faces: self.faces.clone(),
            used: self.used.clone(),
        }
    }

    /// Drops unused vertices. Returns the compacted mesh and, per old vertex, its new index.
    pub fn compact(&self) -> (Self, Vec<Option<usize>>) {
        let mut remap = vec![None; self.vertices.len()];
        let mut vertices = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if self.used[i] {
                remap[i] = Some(vertices.len());
                vertices.push(v.clone());
            }
        }
        let faces = self
            .faces
            .iter()
            .map(|f| f.map(|v| remap[v].expect("face references unused vertex")))
            .collect();
        (Self::new(vertices, faces), remap)
    }

    /// Undirected edges with their incident face count, sorted.
    pub fn edge_face_counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut counts = BTreeMap::new();
        for f in &self.faces {
            for e in 0..3 {
                let (a, b) = (f[e], f[(e + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Vertices incident to an edge with exactly one face.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.vertices.len()];
        for ((a, b), c) in self.edge_face_counts() {
            if c == 1 {
                on[a] = true;
                on[b] = true;
            }
        }
        on
    }

    /// Faces sorted by canonical (sorted-index) key; orientation is kept.
    pub fn canonical_face_set(&self) -> BTreeSet<[usize; 3]> {
        self.faces
            .iter()
            .map(|f| {
                let mut s = *f;
                s.sort_unstable();
                s
            })
            .collect()
    }
}

impl DiscreteMesh<Vec2> {
    pub fn area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| 0.5 * orient2d(&self.vertices[f[0]], &self.vertices[f[1]], &self.vertices[f[2]]))
            .sum()
    }

    pub fn to_3d(&self) -> Mesh3 {
        self.map_vertices(|p| Vec3::new(p.x, p.y, 0.0))
    }
}

pub fn triangle_area_3d(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Problems found by [`manifold_check`]. An empty report means the mesh is a
/// consistently oriented manifold with boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ManifoldReport {
    pub out_of_range_faces: Vec<usize>,
    pub degenerate_faces: Vec<usize>,
    pub duplicate_faces: Vec<usize>,
    pub non_manifold_edges: Vec<(usize, usize)>,
    pub orientation_conflicts: Vec<(usize, usize)>,
    pub non_manifold_vertices: Vec<usize>,
    pub isolated_used_vertices: Vec<usize>,
}

impl ManifoldReport {
    pub fn is_empty(&self) -> bool {
        self.out_of_range_faces.is_empty()
            && self.degenerate_faces.is_empty()
            && self.duplicate_faces.is_empty()
            && self.non_manifold_edges.is_empty()
            && self.orientation_conflicts.is_empty()
            && self.non_manifold_vertices.is_empty()
            && self.isolated_used_vertices.is_empty()
    }

    pub fn violation_count(&self) -> usize {
        self.out_of_range_faces.len()
            + self.degenerate_faces.len()
            + self.duplicate_faces.len()
            + self.non_manifold_edges.len()
            + self.orientation_conflicts.len()
            + self.non_manifold_vertices.len()
            + self.isolated_used_vertices.len()
    }
}

pub fn manifold_check<P: Clone>(mesh: &DiscreteMesh<P>) -> ManifoldReport {
    let mut report = ManifoldReport::default();
    let n = mesh.vertices.len();
    let mut seen = BTreeSet::new();
    let mut valid = Vec::with_capacity(mesh.faces.len());
    for (fi, f) in mesh.faces.iter().enumerate() {
        if f.iter().any(|&v| v >= n) {
            report.out_of_range_faces.push(fi);
            continue;
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            report.degenerate_faces.push(fi);
            continue;
        }
        let mut key = *f;
        key.sort_unstable();
        if !seen.insert(key) {
            report.duplicate_faces.push(fi);
            continue;
        }
        valid.push(*f);
    }

    let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    let mut link: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for f in &valid {
        for e in 0..3 {
            let (a, b) = (f[e], f[(e + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            *directed.entry((a, b)).or_insert(0) += 1;
            // opposite vertex sees (a, b) as a link edge
            link[f[(e + 2) % 3]].push((a, b));
        }
    }
    report.non_manifold_edges = undirected
        .iter()
        .filter(|(_, &c)| c > 2)
        .map(|(&e, _)| e)
        .collect();
    let mut conflicts: Vec<(usize, usize)> = directed
        .iter()
        .filter(|(_, &c)| c > 1)
        .map(|(&(a, b), _)| (a.min(b), a.max(b)))
        .collect();
    conflicts.sort_unstable();
    conflicts.dedup();
    report.orientation_conflicts = conflicts;

    let mut touched = vec![false; n];
    for f in &valid {
        for &v in f {
            touched[v] = true;
        }
    }
    for v in 0..n {
        if mesh.used.get(v).copied().unwrap_or(false) && !touched[v] {
            report.isolated_used_vertices.push(v);
        }
        if link[v].len() > 1 && link_components(&link[v]) > 1 {
            report.non_manifold_vertices.push(v);
        }
    }
    report
}

/// Connected components of a vertex link (undirected).
fn link_components(edges: &[(usize, usize)]) -> usize {
    let mut ids: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    ids.sort_unstable();
    ids.dedup();
    let index = |x: usize| ids.binary_search(&x).unwrap();
    let mut parent: Vec<usize> = (0..ids.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, index(a)), find(&mut parent, index(b)));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..ids.len()).filter(|&i| find(&mut parent, i) == i).count()
}
