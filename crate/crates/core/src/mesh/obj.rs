//! Wavefront OBJ reading and writing (positions, normals, UVs, triangles).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point2;

use super::{MeshError, TriMesh, Vec3};

type Corner = (usize, Option<usize>, Option<usize>);

fn parse_floats<const N: usize>(parts: &[&str], line: usize) -> Result<[f64; N], MeshError> {
    if parts.len() < N {
        return Err(MeshError::Parse {
            line,
            message: format!("expected {N} numbers"),
        });
    }
    let mut out = [0.0; N];
    for (o, s) in out.iter_mut().zip(parts) {
        *o = s.parse().map_err(|_| MeshError::Parse {
            line,
            message: format!("invalid number {s:?}"),
        })?;
    }
    Ok(out)
}

fn resolve_index(s: &str, count: usize, line: usize, what: &str) -> Result<usize, MeshError> {
    let i: i64 = s.parse().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid {what} index {s:?}"),
    })?;
    let idx = if i < 0 { count as i64 + i } else { i - 1 };
    if idx < 0 || idx as usize >= count {
        return Err(MeshError::Parse {
            line,
            message: format!("{what} index {i} out of range (have {count})"),
        });
    }
    Ok(idx as usize)
}

pub fn parse_obj(text: &str) -> Result<TriMesh, MeshError> {
    let mut positions = Vec::new();
    let mut tex = Vec::new();
    let mut norms = Vec::new();
    let mut faces: Vec<[Corner; 3]> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut parts = content.split_whitespace();
        let Some(tag) = parts.next() else { continue };
        let rest: Vec<&str> = parts.collect();
        match tag {
            "v" => {
                let [x, y, z] = parse_floats::<3>(&rest, line)?;
                positions.push(Vec3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = parse_floats::<2>(&rest, line)?;
                tex.push(Point2::new(u, v));
            }
            "vn" => {
                let [x, y, z] = parse_floats::<3>(&rest, line)?;
                norms.push(Vec3::new(x, y, z));
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: "face needs at least 3 corners".into(),
                    });
                }
                let mut corners = Vec::with_capacity(rest.len());
                for c in &rest {
                    let mut it = c.split('/');
                    let v = resolve_index(it.next().unwrap_or(""), positions.len(), line, "vertex")?;
                    let vt = match it.next() {
                        Some("") | None => None,
                        Some(s) => Some(resolve_index(s, tex.len(), line, "texcoord")?),
                    };
                    let vn = match it.next() {
                        Some("") | None => None,
                        Some(s) => Some(resolve_index(s, norms.len(), line, "normal")?),
                    };
                    corners.push((v, vt, vn));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }

    let all_uv = !faces.is_empty() && faces.iter().flatten().all(|c| c.1.is_some());
    let all_n = !faces.is_empty() && faces.iter().flatten().all(|c| c.2.is_some());
    // Vertex i keeps file index i; a position used with a second (uv, normal)
    // combination is duplicated at the end.
    let mut first_use: Vec<Option<Corner>> = vec![None; positions.len()];
    let mut extra: HashMap<Corner, u32> = HashMap::new();
    let mut out_pos = positions.clone();
    let mut out_uv = vec![Point2::origin(); positions.len()];
    let mut out_n = vec![Vec3::zeros(); positions.len()];
    let key = |c: Corner| (c.0, c.1.filter(|_| all_uv), c.2.filter(|_| all_n));
    let mut triangles = Vec::with_capacity(faces.len());
    for face in &faces {
        let mut tri = [0u32; 3];
        for (k, &corner) in face.iter().enumerate() {
            let c = key(corner);
            let idx = match first_use[c.0] {
                None => {
                    first_use[c.0] = Some(c);
                    c.0 as u32
                }
                Some(first) if first == c => c.0 as u32,
                Some(_) => *extra.entry(c).or_insert_with(|| {
                    out_pos.push(positions[c.0]);
                    out_uv.push(Point2::origin());
                    out_n.push(Vec3::zeros());
                    (out_pos.len() - 1) as u32
                }),
            };
            if let Some(t) = c.1 {
                out_uv[idx as usize] = tex[t];
            }
            if let Some(nn) = c.2 {
                out_n[idx as usize] = norms[nn];
            }
            tri[k] = idx;
        }
        triangles.push(tri);
    }
    Ok(TriMesh {
        positions: out_pos,
        normals: all_n.then_some(out_n),
        uvs: all_uv.then_some(out_uv),
        triangles,
    })
}

pub fn read_obj(path: &Path) -> Result<TriMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    parse_obj(&text)
}

pub fn to_obj_string(mesh: &TriMesh) -> String {
    let mut s = String::with_capacity(mesh.positions.len() * 40 + mesh.triangles.len() * 24);
    for p in &mesh.positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    if let Some(uvs) = &mesh.uvs {
        for t in uvs {
            let _ = writeln!(s, "vt {} {}", t.x, t.y);
        }
    }
    if let Some(ns) = &mesh.normals {
        for n in ns {
            let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
        }
    }
    for tri in &mesh.triangles {
        s.push('f');
        for &i in tri {
            let i = i + 1;
            match (mesh.uvs.is_some(), mesh.normals.is_some()) {
                (false, false) => write!(s, " {i}"),
                (true, false) => write!(s, " {i}/{i}"),
                (false, true) => write!(s, " {i}//{i}"),
                (true, true) => write!(s, " {i}/{i}/{i}"),
            }
            .unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    std::fs::write(path, to_obj_string(mesh)).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "# cube\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
f 1 4 3 2\nf 5 6 7 8\nf 1 2 6 5\nf 2 3 7 6\nf 3 4 8 7\nf 4 1 5 8\n";

    #[test]
    fn cube_quads_are_fanned() {
        let m = parse_obj(CUBE).unwrap();
        assert_eq!(m.vertex_count(), 8);
        assert_eq!(m.triangle_count(), 12);
        assert!(m.normals.is_none() && m.uvs.is_none());
    }

    #[test]
    fn seams_split_vertices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 1 1 0\nvt 0 0\nvt 1 0\nvt 0 1\nvt 0.5 0.5\n\
f 1/1 2/2 3/3\nf 2/2 4/4 3/4\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.vertex_count(), 5);
        let uvs = m.uvs.as_ref().unwrap();
        assert_eq!(uvs[m.triangles[1][2] as usize], Point2::new(0.5, 0.5));
        assert_eq!(uvs[m.triangles[0][2] as usize], Point2::new(0.0, 1.0));
    }

    #[test]
    fn negative_indices_and_normals() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvn 0 0 1\nf -3//1 -2//1 -1//1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert_eq!(m.normals.unwrap()[2], Vec3::z());
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_obj("v 0 0 0\nv 1 x 0\n") {
            Err(MeshError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_obj("v 0 0 0\n\nf 1 2 3\n") {
            Err(MeshError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("out of range"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_read() {
        let mut m = parse_obj(CUBE).unwrap().with_vertex_normals();
        m.uvs = Some(m.positions.iter().map(|p| Point2::new(p.x, p.y)).collect());
        let back = parse_obj(&to_obj_string(&m)).unwrap();
        assert_eq!(back, m);
    }
}
