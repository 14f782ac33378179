use super::{ElementMap, FaceLabel, Mesh};
use crate::error::{Error, Result};
use std::collections::HashMap;
use std::fmt::Write;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn fields<T: std::str::FromStr>(line_no: usize, text: &str, n: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != n {
        return Err(parse_err(line_no, format!("expected {n} fields, found {}", parts.len())));
    }
    parts.iter().map(|p| p.parse::<T>().map_err(|_| parse_err(line_no, format!("cannot parse `{p}`")))).collect()
}

/// Parses a `mesh-v1` document.
pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty input"))?;
    if header != "mesh-v1" {
        return Err(parse_err(ln, format!("expected header `mesh-v1`, found `{header}`")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| parse_err(ln + 1, "missing counts line"))?;
    let counts: Vec<usize> = fields(ln, counts, 2)?;
    let (nv, nt) = (counts[0], counts[1]);
    let mut last = ln;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last + 1, "missing vertex line"))?;
        let x: Vec<f64> = fields(ln, l, 3)?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(parse_err(ln, "non-finite coordinate"));
        }
        vertices.push([x[0], x[1], x[2]]);
        last = ln;
    }
    let mut tets = Vec::with_capacity(nt);
    let mut regions = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(last + 1, "missing tet line"))?;
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(parse_err(ln, format!("expected 5 fields, found {}", parts.len())));
        }
        let mut tet = [0usize; 4];
        for (k, p) in parts[..4].iter().enumerate() {
            let v: usize = p.parse().map_err(|_| parse_err(ln, format!("cannot parse `{p}`")))?;
            if v >= nv {
                return Err(parse_err(ln, format!("vertex index {v} out of range")));
            }
            tet[k] = v;
        }
        let region: i32 = parts[4].parse().map_err(|_| parse_err(ln, format!("cannot parse region `{}`", parts[4])))?;
        let map = ElementMap::from_vertices(tet.map(|v| vertices[v])).map_err(|_| parse_err(ln, "degenerate tet"))?;
        if map.det <= 0.0 {
            return Err(parse_err(ln, "negative volume"));
        }
        tets.push(tet);
        regions.push(region);
        last = ln;
    }

    let mut labels = HashMap::new();
    if let Some((ln, l)) = lines.next() {
        if l != "boundary" {
            return Err(parse_err(ln, format!("expected `boundary`, found `{l}`")));
        }
        for (ln, l) in lines {
            let parts: Vec<&str> = l.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(parse_err(ln, format!("expected 4 fields, found {}", parts.len())));
            }
            let mut face = [0usize; 3];
            for (k, p) in parts[..3].iter().enumerate() {
                let v: usize = p.parse().map_err(|_| parse_err(ln, format!("cannot parse `{p}`")))?;
                if v >= nv {
                    return Err(parse_err(ln, format!("vertex index {v} out of range")));
                }
                face[k] = v;
            }
            face.sort_unstable();
            let label: FaceLabel = parts[3].parse().map_err(|e: Error| parse_err(ln, e.to_string()))?;
            labels.insert(face, label);
        }
    }
    Mesh::new(vertices, tets, regions, &labels).map_err(|e| parse_err(0, e.to_string()))
}

/// Serializes a mesh; coordinates use the shortest round-trip decimal form.
pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::new();
    writeln!(out, "mesh-v1").unwrap();
    writeln!(out, "{} {}", mesh.n_vertices(), mesh.n_tets()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{:?} {:?} {:?}", v[0], v[1], v[2]).unwrap();
    }
    for (t, tet) in mesh.tets().iter().enumerate() {
        writeln!(out, "{} {} {} {} {}", tet[0], tet[1], tet[2], tet[3], mesh.region(t)).unwrap();
    }
    writeln!(out, "boundary").unwrap();
    for f in mesh.boundary_faces() {
        let [a, b, c] = mesh.faces()[f];
        writeln!(out, "{a} {b} {c} {}", mesh.face_label(f).as_str()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_shell_mesh;

    const REF: &str = "mesh-v1\n4 1\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n0 1 2 3 7\n";

    #[test]
    fn single_tet() {
        let m = parse_mesh(REF).unwrap();
        assert_eq!(m.n_tets(), 1);
        assert_eq!(m.region(0), 7);
        assert!((m.volume() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn inverted_tet_reports_line() {
        let text = REF.replace("0 1 2 3 7", "0 2 1 3 7");
        match parse_mesh(&text) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 7);
                assert!(message.contains("negative volume"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_mesh("mesh-v2\n"), Err(Error::Parse { line: 1, .. })));
        let bad = REF.replace("0 1 2 3 7", "0 1 2 9 7");
        assert!(matches!(parse_mesh(&bad), Err(Error::Parse { line: 7, .. })));
        assert!(matches!(parse_mesh("mesh-v1\n4 1\n0 0 0\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn labels_round_trip() {
        let m = generate_shell_mesh(4, 0.25, 0.5).unwrap();
        let back = parse_mesh(&write_mesh(&m)).unwrap();
        assert_eq!(back.face_labels(), m.face_labels());
        assert_eq!(back.vertices(), m.vertices());
    }
}
