use std::collections::{BTreeSet, HashMap};

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use super::Polygon;
use crate::error::{DwdtError, Result};
use crate::geom::{orient2d, Vec2};
use crate::mesh::Mesh2;

/// Makes `mesh` conform to `boundary`: every boundary segment becomes a mesh
/// edge, faces outside are dropped and gaps between the mesh and the boundary
/// are filled. Vertices keep their indices; new vertices are appended.
///
/// Fails with [`DwdtError::VerticesOutsideBoundary`] when a used vertex lies
/// outside the boundary.
pub fn cut_to_boundary(mesh: &Mesh2, boundary: &Polygon) -> Result<Mesh2> {
    let outside: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&i| mesh.used[i] && !boundary.contains(&mesh.vertices[i]) && !on_boundary(boundary, &mesh.vertices[i]))
        .collect();
    if !outside.is_empty() {
        return Err(DwdtError::VerticesOutsideBoundary(outside));
    }
    clip_to_boundary(mesh, boundary)
}

fn on_boundary(boundary: &Polygon, p: &Vec2) -> bool {
    boundary.closest_point(p).signed_distance.abs() <= 1e-12 * boundary.diagonal()
}

/// Like [`cut_to_boundary`] but also clips faces straddling the boundary.
///
/// Faces untouched by the boundary are kept verbatim and first, in their
/// original order; new faces follow in canonical order, counter-clockwise.
pub fn clip_to_boundary(mesh: &Mesh2, boundary: &Polygon) -> Result<Mesh2> {
    let mut cdt: ConstrainedDelaunayTriangulation<Point2<f64>> = ConstrainedDelaunayTriangulation::new();
    let mut vertices = mesh.vertices.clone();
    let mut index_of: HashMap<FixedVertexHandle, usize> = HashMap::new();
    let mut insert = |cdt: &mut ConstrainedDelaunayTriangulation<Point2<f64>>,
                      vertices: &mut Vec<Vec2>,
                      p: Vec2,
                      idx: Option<usize>|
     -> Result<FixedVertexHandle> {
        let h = cdt
            .insert(Point2::new(p.x, p.y))
            .map_err(|e| DwdtError::numeric(format!("boundary cut: {e:?}")))?;
        if let std::collections::hash_map::Entry::Vacant(slot) = index_of.entry(h) {
            let i = idx.unwrap_or_else(|| {
                vertices.push(p);
                vertices.len() - 1
            });
            slot.insert(i);
        }
        Ok(h)
    };

    let mut handles: Vec<Option<FixedVertexHandle>> = vec![None; mesh.vertices.len()];
    for (i, p) in mesh.vertices.iter().enumerate() {
        if mesh.used[i] {
            handles[i] = Some(insert(&mut cdt, &mut vertices, *p, Some(i))?);
        }
    }
    let mut loop_handles = Vec::new();
    for l in boundary.loops() {
        let mut hs = Vec::with_capacity(l.len());
        for p in l {
            hs.push(insert(&mut cdt, &mut vertices, *p, None)?);
        }
        loop_handles.push(hs);
    }

    let edges: BTreeSet<(usize, usize)> = mesh
        .faces
        .iter()
        .flat_map(|f| (0..3).map(move |e| (f[e].min(f[(e + 1) % 3]), f[e].max(f[(e + 1) % 3]))))
        .collect();
    for hs in &loop_handles {
        for i in 0..hs.len() {
            let (a, b) = (hs[i], hs[(i + 1) % hs.len()]);
            if a != b {
                cdt.add_constraint_and_split(a, b, |p| p);
            }
        }
    }
    for &(a, b) in &edges {
        let (ha, hb) = (handles[a].expect("used"), handles[b].expect("used"));
        if ha != hb {
            cdt.add_constraint_and_split(ha, hb, |p| p);
        }
    }

    // split points created by the constraints
    let handle_list: Vec<FixedVertexHandle> = cdt.fixed_vertices().collect();
    for h in handle_list {
        if !index_of.contains_key(&h) {
            let p = cdt.vertex(h).position();
            vertices.push(Vec2::new(p.x, p.y));
            index_of.insert(h, vertices.len() - 1);
        }
    }

    let original: HashMap<[usize; 3], usize> = mesh
        .faces
        .iter()
        .enumerate()
        .map(|(fi, f)| {
            let mut s = *f;
            s.sort_unstable();
            (s, fi)
        })
        .collect();
    let mut kept = vec![false; mesh.faces.len()];
    let mut fresh: Vec<[usize; 3]> = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices().map(|v| index_of[&v.fix()]);
        let ps = vs.map(|i| vertices[i]);
        let centroid = (ps[0] + ps[1] + ps[2]) / 3.0;
        if !boundary.contains(&centroid) {
            continue;
        }
        let mut key = vs;
        key.sort_unstable();
        match original.get(&key) {
            Some(&fi) => kept[fi] = true,
            None => fresh.push(key),
        }
    }
    fresh.sort_unstable();
    let mut faces: Vec<[usize; 3]> = mesh
        .faces
        .iter()
        .zip(&kept)
        .filter(|(_, &k)| k)
        .map(|(f, _)| *f)
        .collect();
    for key in fresh {
        let [a, b, c] = key;
        if orient2d(&vertices[a], &vertices[b], &vertices[c]) < 0.0 {
            faces.push([a, c, b]);
        } else {
            faces.push([a, b, c]);
        }
    }
    Ok(Mesh2::new(vertices, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::manifold_check;
    use approx::assert_relative_eq;

    fn unit() -> Polygon {
        Polygon::rectangle(Vec2::zeros(), Vec2::new(1.0, 1.0)).unwrap()
    }

    fn boundary_segments_are_edges(m: &Mesh2, poly: &Polygon) -> bool {
        // every boundary segment is covered by collinear mesh boundary edges
        let counts = m.edge_face_counts();
        poly.segments().iter().all(|&(a, b)| {
            let d = b - a;
            let len: f64 = counts
                .iter()
                .filter(|(_, &c)| c == 1)
                .map(|(&(i, j), _)| (m.vertices[i], m.vertices[j]))
                .filter(|(p, q)| {
                    let on = |x: &Vec2| (orient2d(&a, &b, x)).abs() <= 1e-12 * d.norm_squared()
                        && (x - a).dot(&d) >= -1e-12
                        && (x - b).dot(&d) <= 1e-12;
                    on(p) && on(q)
                })
                .map(|(p, q)| (q - p).norm())
                .sum();
            (len - d.norm()).abs() < 1e-12
        })
    }

    #[test]
    fn conforming_mesh_is_unchanged() {
        let m = Mesh2::new(
            vec![
                Vec2::new(0.0, 0.0),
                Vec2::new(1.0, 0.0),
                Vec2::new(1.0, 1.0),
                Vec2::new(0.0, 1.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        );
        let out = cut_to_boundary(&m, &unit()).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn empty_mesh_gives_the_polygon() {
        let out = cut_to_boundary(&Mesh2::empty(), &unit()).unwrap();
        assert_eq!(out.faces.len(), 2);
        assert_relative_eq!(out.area(), 1.0);
        assert!(manifold_check(&out).is_empty());
    }

    #[test]
    fn straddling_triangle_is_clipped() {
        let m = Mesh2::new(
            vec![Vec2::new(0.2, 0.2), Vec2::new(0.8, 0.2), Vec2::new(0.5, -0.4)],
            vec![[0, 2, 1]],
        );
        let poly = unit();
        assert!(matches!(
            cut_to_boundary(&m, &poly),
            Err(DwdtError::VerticesOutsideBoundary(ref v)) if v == &vec![2]
        ));
        let out = clip_to_boundary(&m, &poly).unwrap();
        assert!(manifold_check(&out).is_empty());
        assert_relative_eq!(out.area(), 1.0, epsilon = 1e-12);
        assert!(boundary_segments_are_edges(&out, &poly));
        // inside part of the triangle: trapezoid between y = 0 and y = 0.2
        let inside: f64 = out
            .faces
            .iter()
            .filter(|f| {
                let c = (out.vertices[f[0]] + out.vertices[f[1]] + out.vertices[f[2]]) / 3.0;
                let tri = [Vec2::new(0.2, 0.2), Vec2::new(0.5, -0.4), Vec2::new(0.8, 0.2)];
                (0..3).all(|e| orient2d(&tri[e], &tri[(e + 1) % 3], &c) >= 0.0)
            })
            .map(|f| 0.5 * orient2d(&out.vertices[f[0]], &out.vertices[f[1]], &out.vertices[f[2]]))
            .sum();
        // full triangle area 0.18, the part below y = 0 is similar with ratio 2/3
        assert_relative_eq!(inside, 0.18 * (1.0 - 4.0 / 9.0), epsilon = 1e-12);
    }

    #[test]
    fn interior_mesh_is_kept_and_gap_filled() {
        let m = Mesh2::new(
            vec![Vec2::new(0.3, 0.3), Vec2::new(0.7, 0.3), Vec2::new(0.5, 0.7), Vec2::new(0.9, 0.9)],
            vec![[0, 1, 2]],
        );
        let out = cut_to_boundary(&m, &unit()).unwrap();
        assert_eq!(out.faces[0], [0, 1, 2]);
        assert_eq!(&out.vertices[..4], &m.vertices[..]);
        assert!(!out.used[3]);
        assert!(manifold_check(&out).is_empty());
        assert_relative_eq!(out.area(), 1.0, epsilon = 1e-12);
        assert!(boundary_segments_are_edges(&out, &unit()));
    }
}
