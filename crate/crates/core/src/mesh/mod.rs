//! Tetrahedral meshes: connectivity, derived edge/face tables, boundary labels,
//! element maps, structured generators and the `mesh-v1` text format.

mod generate;
mod io;

pub use generate::{generate_box_mesh, generate_cube_mesh, generate_shell_mesh};
pub use io::{parse_mesh, write_mesh};

use crate::error::{Error, Result};
use crate::linalg::{det, inverse, mat_vec, norm, spectral_norm, sub, transpose, Mat3, Vec3};
use crate::reference::ReferenceTet;
use std::collections::HashMap;

/// Classification of a mesh face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaceLabel {
    Interior,
    PecOuter,
    PecScatterer,
}

impl FaceLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FaceLabel::Interior => "interior",
            FaceLabel::PecOuter => "pec_outer",
            FaceLabel::PecScatterer => "pec_scatterer",
        }
    }

    pub fn is_boundary(self) -> bool {
        self != FaceLabel::Interior
    }
}

impl std::str::FromStr for FaceLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interior" => Ok(FaceLabel::Interior),
            "pec_outer" => Ok(FaceLabel::PecOuter),
            "pec_scatterer" => Ok(FaceLabel::PecScatterer),
            other => Err(Error::Argument(format!("unknown face label `{other}`"))),
        }
    }
}

/// Affine map `F(x̂) = B x̂ + b` from the reference tetrahedron.
#[derive(Debug, Clone, Copy)]
pub struct ElementMap {
    pub b: Mat3,
    pub offset: Vec3,
    pub det: f64,
    pub inv_t: Mat3,
    pub diameter: f64,
}

impl ElementMap {
    /// Map sending reference vertex `i` to `v[i]`. The determinant may be
    /// negative when the vertex order is not positively oriented.
    pub fn from_vertices(v: [Vec3; 4]) -> Result<Self> {
        let c1 = sub(v[1], v[0]);
        let c2 = sub(v[2], v[0]);
        let c3 = sub(v[3], v[0]);
        let b = [[c1[0], c2[0], c3[0]], [c1[1], c2[1], c3[1]], [c1[2], c2[2], c3[2]]];
        let d = det(&b);
        let inv = inverse(&b).ok_or_else(|| Error::Numeric("degenerate element map".into()))?;
        let mut diameter: f64 = 0.0;
        for &[i, j] in &ReferenceTet::EDGES {
            diameter = diameter.max(norm(sub(v[j], v[i])));
        }
        Ok(ElementMap { b, offset: v[0], det: d, inv_t: transpose(&inv), diameter })
    }

    pub fn map(&self, xh: Vec3) -> Vec3 {
        let y = mat_vec(&self.b, xh);
        [y[0] + self.offset[0], y[1] + self.offset[1], y[2] + self.offset[2]]
    }

    /// Reference coordinates of a physical point.
    pub fn inverse_map(&self, x: Vec3) -> Vec3 {
        let inv = transpose(&self.inv_t);
        mat_vec(&inv, sub(x, self.offset))
    }

    pub fn inverse(&self) -> Mat3 {
        transpose(&self.inv_t)
    }

    /// ‖B‖·‖B⁻¹‖ (spectral norms).
    pub fn shape_ratio(&self) -> f64 {
        spectral_norm(&self.b) * spectral_norm(&self.inverse())
    }
}

/// A conforming tetrahedral mesh.
#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    regions: Vec<i32>,
    edges: Vec<[usize; 2]>,
    faces: Vec<[usize; 3]>,
    /// Global edges of each tet, in the order of `ReferenceTet::EDGES` applied
    /// to the tet's vertices sorted by global index.
    tet_edges: Vec<[usize; 6]>,
    tet_faces: Vec<[usize; 4]>,
    face_tets: Vec<[usize; 2]>,
    face_labels: Vec<FaceLabel>,
    h_k: Vec<f64>,
}

pub const NO_TET: usize = usize::MAX;

impl Mesh {
    /// Builds a mesh from coordinates and connectivity. Boundary faces not
    /// present in `labels` become `PecOuter`.
    pub fn new(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        regions: Vec<i32>,
        labels: &HashMap<[usize; 3], FaceLabel>,
    ) -> Result<Self> {
        if regions.len() != tets.len() {
            return Err(Error::Dimension { expected: tets.len(), got: regions.len() });
        }
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= vertices.len() {
                    return Err(Error::Argument(format!("tet {t} references missing vertex {v}")));
                }
            }
            let m = ElementMap::from_vertices(tet.map(|v| vertices[v]))
                .map_err(|_| Error::Argument(format!("tet {t} is degenerate")))?;
            if m.det <= 0.0 {
                return Err(Error::Argument(format!("tet {t} has negative volume")));
            }
        }

        let mut edge_ids: HashMap<[usize; 2], usize> = HashMap::new();
        let mut face_ids: HashMap<[usize; 3], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut faces = Vec::new();
        let mut face_tets: Vec<[usize; 2]> = Vec::new();
        let mut tet_edges = Vec::with_capacity(tets.len());
        let mut tet_faces = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            let s = sorted(*tet);
            let mut te = [0; 6];
            for (e, &[i, j]) in ReferenceTet::EDGES.iter().enumerate() {
                let key = [s[i], s[j]];
                te[e] = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edges.len() - 1
                });
            }
            let mut tf = [0; 4];
            for (f, &[i, j, k]) in ReferenceTet::FACES.iter().enumerate() {
                let key = [s[i], s[j], s[k]];
                let id = *face_ids.entry(key).or_insert_with(|| {
                    faces.push(key);
                    face_tets.push([NO_TET, NO_TET]);
                    faces.len() - 1
                });
                let slot = &mut face_tets[id];
                if slot[0] == NO_TET {
                    slot[0] = t;
                } else if slot[1] == NO_TET {
                    slot[1] = t;
                } else {
                    return Err(Error::Argument(format!("face {key:?} is shared by more than two tets")));
                }
                tf[f] = id;
            }
            tet_edges.push(te);
            tet_faces.push(tf);
        }

        let mut face_labels = Vec::with_capacity(faces.len());
        for (f, key) in faces.iter().enumerate() {
            let boundary = face_tets[f][1] == NO_TET;
            let label = match labels.get(key) {
                Some(&l) if boundary && l.is_boundary() => l,
                Some(&l) if !boundary && l == FaceLabel::Interior => l,
                Some(&l) => {
                    return Err(Error::Argument(format!(
                        "face {key:?} labelled {} does not match its adjacency",
                        l.as_str()
                    )))
                }
                None if boundary => FaceLabel::PecOuter,
                None => FaceLabel::Interior,
            };
            face_labels.push(label);
        }
        for key in labels.keys() {
            if !face_ids.contains_key(key) {
                return Err(Error::Argument(format!("labelled face {key:?} is not a mesh face")));
            }
        }

        let h_k = tets
            .iter()
            .map(|tet| {
                let mut h: f64 = 0.0;
                for &[i, j] in &ReferenceTet::EDGES {
                    h = h.max(norm(sub(vertices[tet[j]], vertices[tet[i]])));
                }
                h
            })
            .collect();

        Ok(Mesh { vertices, tets, regions, edges, faces, tet_edges, tet_faces, face_tets, face_labels, h_k })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn regions(&self) -> &[i32] {
        &self.regions
    }

    pub fn region(&self, t: usize) -> i32 {
        self.regions[t]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_tets(&self) -> usize {
        self.tets.len()
    }

    /// Number of entities of topological dimension `dim`.
    pub fn n_entities(&self, dim: usize) -> usize {
        match dim {
            0 => self.n_vertices(),
            1 => self.n_edges(),
            2 => self.n_faces(),
            3 => self.n_tets(),
            _ => 0,
        }
    }

    pub fn tet_edges(&self, t: usize) -> &[usize; 6] {
        &self.tet_edges[t]
    }

    pub fn tet_faces(&self, t: usize) -> &[usize; 4] {
        &self.tet_faces[t]
    }

    /// Tets adjacent to face `f`; the second entry is [`NO_TET`] on the boundary.
    pub fn face_tets(&self, f: usize) -> [usize; 2] {
        self.face_tets[f]
    }

    pub fn face_label(&self, f: usize) -> FaceLabel {
        self.face_labels[f]
    }

    pub fn face_labels(&self) -> &[FaceLabel] {
        &self.face_labels
    }

    /// Vertices of tet `t` sorted by increasing global index.
    pub fn sorted_vertices(&self, t: usize) -> [usize; 4] {
        sorted(self.tets[t])
    }

    pub fn tet_coordinates(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn h_k(&self, t: usize) -> f64 {
        self.h_k[t]
    }

    /// Global mesh size `max h_K`.
    pub fn h(&self) -> f64 {
        self.h_k.iter().copied().fold(0.0, f64::max)
    }

    /// Diagonal of the bounding box (the diameter for box-shaped domains).
    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for c in 0..3 {
                lo[c] = lo[c].min(v[c]);
                hi[c] = hi[c].max(v[c]);
            }
        }
        norm(sub(hi, lo))
    }

    pub fn volume(&self) -> f64 {
        (0..self.n_tets()).map(|t| element_map(self, t).det / 6.0).sum()
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let c = self.tet_coordinates(t);
        let mut x = [0.0; 3];
        for v in c {
            for k in 0..3 {
                x[k] += v[k] / 4.0;
            }
        }
        x
    }

    /// Edges lying on a face with the given predicate on its label.
    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_faces()).filter(|&f| self.face_labels[f].is_boundary())
    }

    /// Checks face pairing, boundary-surface manifoldness and that the two
    /// tets of every interior face lie on opposite sides of it.
    pub fn check_conformity(&self) -> Result<()> {
        let mut boundary_edge_count: HashMap<[usize; 2], usize> = HashMap::new();
        for (f, face) in self.faces.iter().enumerate() {
            let [t0, t1] = self.face_tets[f];
            if t0 == NO_TET {
                return Err(Error::Topology(format!("face {f} has no adjacent tet")));
            }
            if t1 == NO_TET {
                if !self.face_labels[f].is_boundary() {
                    return Err(Error::Topology(format!("face {f} has one tet but is labelled interior")));
                }
                for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                    *boundary_edge_count.entry([face[a], face[b]]).or_default() += 1;
                }
                continue;
            }
            let n = face_normal(&self.vertices, face);
            let o = self.vertices[face[0]];
            let side = |t: usize| {
                let c = self.centroid(t);
                n[0] * (c[0] - o[0]) + n[1] * (c[1] - o[1]) + n[2] * (c[2] - o[2])
            };
            if side(t0) * side(t1) >= 0.0 {
                return Err(Error::Topology(format!("tets {t0} and {t1} lie on the same side of shared face {f}")));
            }
        }
        for (e, count) in boundary_edge_count {
            if count % 2 != 0 {
                return Err(Error::Topology(format!(
                    "boundary edge {e:?} touches {count} boundary faces (hanging entity)"
                )));
            }
        }
        Ok(())
    }

    /// Euler characteristic `V − E + F − T` of the meshed domain.
    pub fn euler_characteristic(&self) -> i64 {
        self.n_vertices() as i64 - self.n_edges() as i64 + self.n_faces() as i64 - self.n_tets() as i64
    }

    /// Euler characteristic of each connected component of the boundary surface.
    pub fn boundary_components(&self) -> Vec<i64> {
        let bfaces: Vec<usize> = self.boundary_faces().collect();
        let mut parent: HashMap<usize, usize> = HashMap::new();
        fn find(parent: &mut HashMap<usize, usize>, v: usize) -> usize {
            let p = *parent.entry(v).or_insert(v);
            if p == v {
                return v;
            }
            let r = find(parent, p);
            parent.insert(v, r);
            r
        }
        for &f in &bfaces {
            let [a, b, c] = self.faces[f];
            for (x, y) in [(a, b), (b, c)] {
                let rx = find(&mut parent, x);
                let ry = find(&mut parent, y);
                if rx != ry {
                    parent.insert(rx.max(ry), rx.min(ry));
                }
            }
        }
        let mut comps: std::collections::BTreeMap<usize, (i64, std::collections::HashSet<[usize; 2]>, i64)> =
            Default::default();
        let verts: std::collections::BTreeSet<usize> = bfaces.iter().flat_map(|&f| self.faces[f]).collect();
        for v in verts {
            let r = find(&mut parent, v);
            comps.entry(r).or_default().0 += 1;
        }
        for &f in &bfaces {
            let [a, b, c] = self.faces[f];
            let r = find(&mut parent, a);
            let entry = comps.entry(r).or_default();
            entry.2 += 1;
            for e in [[a, b], [a, c], [b, c]] {
                entry.1.insert(e);
            }
        }
        comps.values().map(|(v, e, f)| v - e.len() as i64 + f).collect()
    }

    /// Simply connected domain with a connected boundary (a topological ball).
    pub fn check_ball_topology(&self) -> Result<()> {
        let chi = self.euler_characteristic();
        let comps = self.boundary_components();
        if chi != 1 || comps != vec![2] {
            return Err(Error::Topology(format!(
                "domain must be simply connected with connected boundary \
                 (Euler characteristic {chi}, boundary components {comps:?})"
            )));
        }
        Ok(())
    }

    /// max over K of ‖B_K‖/h_K and h_K‖B_K⁻¹‖.
    pub fn mapping_bounds(&self) -> (f64, f64) {
        let mut a: f64 = 0.0;
        let mut b: f64 = 0.0;
        for t in 0..self.n_tets() {
            let m = element_map(self, t);
            a = a.max(spectral_norm(&m.b) / m.diameter);
            b = b.max(m.diameter * spectral_norm(&m.inverse()));
        }
        (a, b)
    }
}

fn sorted<const N: usize>(mut v: [usize; N]) -> [usize; N] {
    v.sort_unstable();
    v
}

fn face_normal(vertices: &[Vec3], face: &[usize; 3]) -> Vec3 {
    crate::linalg::cross(sub(vertices[face[1]], vertices[face[0]]), sub(vertices[face[2]], vertices[face[0]]))
}

/// Element map of tet `t` in its stored (positively oriented) vertex order.
pub fn element_map(mesh: &Mesh, t: usize) -> ElementMap {
    ElementMap::from_vertices(mesh.tet_coordinates(t)).expect("mesh tets are non-degenerate")
}
