use super::{FaceLabel, Mesh};
use crate::error::{Error, Result};
use crate::linalg::{det, sub, Vec3};
use std::collections::HashMap;

/// The six monotone lattice paths from (0,0,0) to (1,1,1) of a unit cell.
const KUHN_PATHS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Structured Kuhn-split mesh of the box `origin + [0, lengths]` with
/// `counts` cells per axis; region tags from `region_rule` at tet centroids.
/// Cells for which `keep_cell` returns false are omitted.
pub fn generate_box_mesh(
    counts: [usize; 3],
    lengths: [f64; 3],
    origin: Vec3,
    region_rule: &dyn Fn(Vec3) -> i32,
) -> Result<Mesh> {
    build_grid(counts, lengths, origin, region_rule, &|_| true, &|_| FaceLabel::PecOuter)
}

/// `n × n × n` Kuhn mesh of `[0, side]^3`; all boundary faces are `pec_outer`.
pub fn generate_cube_mesh(n: usize, side_length: f64, region_rule: &dyn Fn(Vec3) -> i32) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    if side_length <= 0.0 {
        return Err(Error::Argument("side length must be positive".into()));
    }
    generate_box_mesh([n; 3], [side_length; 3], [0.0; 3], region_rule)
}

/// `[-outer, outer]^3` minus `(-inner, inner)^3` on an `n`-cell grid per axis.
/// The inner boundary is labelled `pec_scatterer`, the outer one `pec_outer`.
pub fn generate_shell_mesh(n: usize, inner_half_width: f64, outer_half_width: f64) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::Argument("n must be at least 1".into()));
    }
    if !(0.0 < inner_half_width && inner_half_width < outer_half_width) {
        return Err(Error::Argument("need 0 < inner < outer".into()));
    }
    let cell = 2.0 * outer_half_width / n as f64;
    let layers = (outer_half_width - inner_half_width) / cell;
    if (layers - layers.round()).abs() > 1e-9 || layers.round() < 1.0 {
        return Err(Error::Argument(format!(
            "inner half width {inner_half_width} is not commensurate with the grid (cell size {cell})"
        )));
    }
    let inner = inner_half_width;
    let outer = outer_half_width;
    build_grid([n; 3], [2.0 * outer; 3], [-outer; 3], &|_| 0, &|c| c.iter().any(|x| x.abs() > inner), &|x| {
        if x.iter().any(|v| (v.abs() - outer).abs() < 1e-9 * outer) {
            FaceLabel::PecOuter
        } else {
            FaceLabel::PecScatterer
        }
    })
}

fn build_grid(
    counts: [usize; 3],
    lengths: [f64; 3],
    origin: Vec3,
    region_rule: &dyn Fn(Vec3) -> i32,
    keep_cell: &dyn Fn(Vec3) -> bool,
    boundary_label: &dyn Fn(Vec3) -> FaceLabel,
) -> Result<Mesh> {
    if counts.contains(&0) {
        return Err(Error::Argument("cell counts must be at least 1".into()));
    }
    let [nx, ny, nz] = counts;
    let step = [lengths[0] / nx as f64, lengths[1] / ny as f64, lengths[2] / nz as f64];
    let vid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) * (nz + 1));
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push([
                    origin[0] + i as f64 * step[0],
                    origin[1] + j as f64 * step[1],
                    origin[2] + k as f64 * step[2],
                ]);
            }
        }
    }
    let mut used = vec![false; vertices.len()];
    let mut tets = Vec::new();
    let mut regions = Vec::new();
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                let center = [
                    origin[0] + (i as f64 + 0.5) * step[0],
                    origin[1] + (j as f64 + 0.5) * step[1],
                    origin[2] + (k as f64 + 0.5) * step[2],
                ];
                if !keep_cell(center) {
                    continue;
                }
                for path in KUHN_PATHS {
                    let mut c = [i, j, k];
                    let mut tet = [vid(c[0], c[1], c[2]); 4];
                    for (s, &axis) in path.iter().enumerate() {
                        c[axis] += 1;
                        tet[s + 1] = vid(c[0], c[1], c[2]);
                    }
                    let p = tet.map(|v| vertices[v]);
                    let b = [sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0])];
                    if det(&b) < 0.0 {
                        tet.swap(2, 3);
                    }
                    let mut centroid = [0.0; 3];
                    for &v in &tet {
                        used[v] = true;
                        for d in 0..3 {
                            centroid[d] += vertices[v][d] / 4.0;
                        }
                    }
                    regions.push(region_rule(centroid));
                    tets.push(tet);
                }
            }
        }
    }

    // drop unused vertices, keeping the relative order
    let mut remap = vec![usize::MAX; vertices.len()];
    let mut kept = Vec::new();
    for (v, x) in vertices.iter().enumerate() {
        if used[v] {
            remap[v] = kept.len();
            kept.push(*x);
        }
    }
    for tet in &mut tets {
        *tet = tet.map(|v| remap[v]);
    }

    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for tet in &tets {
        let mut s = *tet;
        s.sort_unstable();
        for f in crate::reference::ReferenceTet::FACES {
            *count.entry([s[f[0]], s[f[1]], s[f[2]]]).or_default() += 1;
        }
    }
    let mut labels = HashMap::new();
    for (face, c) in count {
        if c == 1 {
            let mut m = [0.0; 3];
            for &v in &face {
                for d in 0..3 {
                    m[d] += kept[v][d] / 3.0;
                }
            }
            labels.insert(face, boundary_label(m));
        }
    }
    Mesh::new(kept, tets, regions, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_cube() {
        let m = generate_cube_mesh(1, 1.0, &|_| 0).unwrap();
        assert_eq!(m.n_tets(), 6);
        assert_eq!(m.n_vertices(), 8);
        assert_eq!(m.n_edges(), 19);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        m.check_conformity().unwrap();
        m.check_ball_topology().unwrap();
    }

    #[test]
    fn two_cell_cube_h() {
        let m = generate_cube_mesh(2, 1.0, &|_| 0).unwrap();
        assert_eq!(m.n_tets(), 48);
        assert!((m.h() - 3f64.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_cells_rejected() {
        assert!(matches!(generate_cube_mesh(0, 1.0, &|_| 0), Err(Error::Argument(_))));
    }

    #[test]
    fn shell_counts() {
        let m = generate_shell_mesh(4, 0.25, 0.5).unwrap();
        assert_eq!(m.n_tets(), 6 * (64 - 8));
        assert!((m.volume() - (1.0 - 0.125)).abs() < 1e-13);
        m.check_conformity().unwrap();
        let outer = m.boundary_faces().filter(|&f| m.face_label(f) == FaceLabel::PecOuter).count();
        let inner = m.boundary_faces().filter(|&f| m.face_label(f) == FaceLabel::PecScatterer).count();
        assert_eq!(outer, 6 * 16 * 2);
        assert_eq!(inner, 6 * 4 * 2);
        assert_eq!(m.euler_characteristic(), 2);
        assert_eq!(m.boundary_components(), vec![2, 2]);
        assert!(m.check_ball_topology().is_err());
    }

    #[test]
    fn shell_requires_commensurate_radii() {
        assert!(matches!(generate_shell_mesh(4, 0.3, 0.5), Err(Error::Argument(_))));
    }
}
