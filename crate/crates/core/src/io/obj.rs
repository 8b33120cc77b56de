use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{content_lines, fmt_f64, parse_f64, read_text};
use crate::error::{DwdtError, Result};
use crate::geom::{bounding_box, orient2d, Vec2, Vec3};
use crate::mesh::{manifold_check, DiscreteMesh, Mesh3};
use crate::surface::UvPatchMesh;

/// Keywords that carry nothing the patch needs.
const IGNORED: [&str; 7] = ["vn", "o", "g", "s", "usemtl", "mtllib", "vp"];

pub fn read_obj_patch(path: &Path) -> Result<UvPatchMesh> {
    parse_obj_patch(&read_text(path)?, &path.display().to_string())
}

/// Resolves a 1-based or negative (relative) OBJ index.
fn resolve(tok: &str, count: usize, what: &str, path: &str, line: usize) -> Result<usize> {
    let i: i64 = tok
        .parse()
        .map_err(|_| DwdtError::parse(path, line, format!("bad {what} index `{tok}`")))?;
    let r = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || r < 0 || r >= count as i64 {
        return Err(DwdtError::parse(path, line, format!("{what} index {i} out of range (have {count})")));
    }
    Ok(r as usize)
}

/// Parses `v`, `vt` and triangular `f v/vt` records. Every vertex must be
/// paired with a single UV coordinate.
pub fn parse_obj_patch(text: &str, path: &str) -> Result<UvPatchMesh> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut texcoords: Vec<Vec2> = Vec::new();
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let mut face_lines: Vec<usize> = Vec::new();
    let mut pairing: Vec<Option<(usize, usize)>> = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut toks = l.split_whitespace();
        let key = toks.next().unwrap_or("");
        let rest: Vec<&str> = toks.collect();
        match key {
            "v" => {
                if !(rest.len() == 3 || rest.len() == 4) {
                    return Err(DwdtError::parse(path, ln, "vertex needs 3 coordinates"));
                }
                let c: Vec<f64> = rest[..3].iter().map(|t| parse_f64(t, path, ln)).collect::<Result<_>>()?;
                positions.push(Vec3::new(c[0], c[1], c[2]));
                pairing.push(None);
            }
            "vt" => {
                if !(2..=3).contains(&rest.len()) {
                    return Err(DwdtError::parse(path, ln, "texture coordinate needs 2 values"));
                }
                texcoords.push(Vec2::new(parse_f64(rest[0], path, ln)?, parse_f64(rest[1], path, ln)?));
            }
            "f" => {
                if rest.len() != 3 {
                    return Err(DwdtError::parse(
                        path,
                        ln,
                        format!("only triangles are supported, face has {} corners", rest.len()),
                    ));
                }
                let mut face = [0; 3];
                for (c, tok) in rest.iter().enumerate() {
                    let mut parts = tok.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), "vertex", path, ln)?;
                    let vt = match parts.next() {
                        Some(t) if !t.is_empty() => resolve(t, texcoords.len(), "texture", path, ln)?,
                        _ => return Err(DwdtError::parse(path, ln, format!("corner `{tok}` has no UV index"))),
                    };
                    match pairing[v] {
                        None => pairing[v] = Some((vt, ln)),
                        Some((prev, prev_line)) if prev != vt => {
                            return Err(DwdtError::parse(
                                path,
                                ln,
                                format!(
                                    "vertex {} paired with UV {} here but with UV {} on line {prev_line}",
                                    v + 1,
                                    vt + 1,
                                    prev + 1
                                ),
                            ))
                        }
                        _ => {}
                    }
                    face[c] = v;
                }
                faces.push(face);
                face_lines.push(ln);
            }
            k if IGNORED.contains(&k) => {}
            k => return Err(DwdtError::parse(path, ln, format!("unsupported record `{k}`"))),
        }
    }
    if faces.is_empty() {
        return Err(DwdtError::parse(path, 0, "no faces"));
    }
    // unreferenced vertices are dropped
    let mut remap = vec![usize::MAX; positions.len()];
    let (mut pos, mut uvs) = (Vec::new(), Vec::new());
    for (v, p) in pairing.iter().enumerate() {
        if let Some((vt, _)) = p {
            remap[v] = pos.len();
            pos.push(positions[v]);
            uvs.push(texcoords[*vt]);
        }
    }
    let faces: Vec<[usize; 3]> = faces.iter().map(|f| f.map(|v| remap[v])).collect();

    let mut scale = 0.0f64;
    for f in &faces {
        let (lo, hi) = bounding_box(&[uvs[f[0]], uvs[f[1]], uvs[f[2]]]);
        scale = scale.max((hi - lo).norm());
    }
    let mut sign = 0.0;
    for (fi, f) in faces.iter().enumerate() {
        let det = orient2d(&uvs[f[0]], &uvs[f[1]], &uvs[f[2]]);
        if det.abs() <= 1e-14 * scale * scale {
            return Err(DwdtError::parse(path, face_lines[fi], "degenerate UV face"));
        }
        if sign == 0.0 {
            sign = det.signum();
        } else if det.signum() != sign {
            return Err(DwdtError::parse(path, face_lines[fi], "UV face is inverted relative to the first face"));
        }
    }
    let report = manifold_check(&DiscreteMesh::new(uvs.clone(), faces.clone()));
    if !report.is_empty() {
        let bad_face = report
            .out_of_range_faces
            .iter()
            .chain(&report.degenerate_faces)
            .chain(&report.duplicate_faces)
            .next()
            .copied()
            .or_else(|| {
                let (a, b) = report
                    .non_manifold_edges
                    .first()
                    .or(report.orientation_conflicts.first())
                    .copied()?;
                faces.iter().position(|f| f.contains(&a) && f.contains(&b))
            })
            .or_else(|| {
                let v = *report.non_manifold_vertices.first()?;
                faces.iter().position(|f| f.contains(&v))
            });
        let line = bad_face.map(|fi| face_lines[fi]).unwrap_or(0);
        return Err(DwdtError::parse(path, line, format!("patch is not a manifold: {report:?}")));
    }
    UvPatchMesh::new(pos, uvs, faces)
}

/// Writes used vertices in index order (plus `vt` records when `uvs` is
/// given) and the faces. Unused vertices are dropped.
pub fn write_obj_to(w: &mut impl Write, mesh: &Mesh3, uvs: Option<&[Vec2]>) -> Result<()> {
    let (compact, map) = mesh.compact();
    writeln!(w, "# {} vertices, {} faces", compact.vertices.len(), compact.faces.len())?;
    for v in &compact.vertices {
        writeln!(w, "v {} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z))?;
    }
    if let Some(uvs) = uvs {
        for (old, new) in map.iter().enumerate() {
            if new.is_some() {
                writeln!(w, "vt {} {}", fmt_f64(uvs[old].x), fmt_f64(uvs[old].y))?;
            }
        }
    }
    for f in &compact.faces {
        let [a, b, c] = f.map(|i| i + 1);
        if uvs.is_some() {
            writeln!(w, "f {a}/{a} {b}/{b} {c}/{c}")?;
        } else {
            writeln!(w, "f {a} {b} {c}")?;
        }
    }
    Ok(())
}

pub fn write_obj(mesh: &Mesh3, uvs: Option<&[Vec2]>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_obj_to(&mut w, mesh, uvs)?;
    w.flush()?;
    Ok(())
}
