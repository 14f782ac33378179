//! Global finite-element spaces, Piola maps, canonical interpolants and the
//! discrete gradient and curl matrices.

mod piola;

pub use piola::{piola_map, GeometricMap, PiolaDirection, PiolaKind, QuadraticMap};

use crate::error::{Error, Result};
use crate::linalg::{mat_vec, transpose, CVec3, Vec3, C64, ZERO_C};
use crate::mesh::{ElementMap, Mesh};
use crate::reference::{build_shape_basis, BasisTable, DofFunctional, Family, ReferenceTet, ShapeBasis};
use crate::sparse::SparseRealMatrix;
use rayon::prelude::*;
use std::sync::Arc;

/// Essential boundary treatment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// No constrained DOFs.
    Natural,
    /// Tangential trace (Nédélec), normal trace (Raviart–Thomas) or value
    /// (Lagrange) vanishes on every face labelled `pec_*`.
    Pec,
}

/// Basis values and derivatives mapped to one physical element.
///
/// For Nédélec `derivs` holds curls, for Lagrange gradients, for
/// Raviart–Thomas the divergence in component 0. Scalar values are stored in
/// component 0 of `values`.
#[derive(Debug, Clone)]
pub struct PhysicalTable {
    pub n_points: usize,
    pub n_basis: usize,
    pub values: Vec<Vec3>,
    pub derivs: Vec<Vec3>,
}

impl PhysicalTable {
    pub fn value(&self, q: usize, i: usize) -> Vec3 {
        self.values[q * self.n_basis + i]
    }

    pub fn deriv(&self, q: usize, i: usize) -> Vec3 {
        self.derivs[q * self.n_basis + i]
    }
}

/// A conforming finite-element space on a mesh.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    basis: Arc<ShapeBasis>,
    bc: BoundaryCondition,
    offsets: [usize; 4],
    per_entity: [usize; 4],
    n_dofs: usize,
    cell_dofs: Vec<usize>,
    constrained: Vec<bool>,
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
    maps: Vec<ElementMap>,
    interpolation_order: usize,
    interpolation: Arc<Vec<DofFunctional>>,
}

/// Default quadrature order of the interpolation moments.
pub const DEFAULT_INTERPOLATION_ORDER: usize = 24;

pub const CONSTRAINED: usize = usize::MAX;

/// Builds the global space of `family`, degree `p`, on `mesh`.
pub fn build_fe_space(mesh: Arc<Mesh>, family: Family, p: usize, bc: BoundaryCondition) -> Result<FeSpace> {
    let basis = Arc::new(build_shape_basis(family, p)?);
    let mut per_entity = [0; 4];
    for (d, pe) in per_entity.iter_mut().enumerate() {
        *pe = basis.dofs_per_entity(d);
    }
    let mut offsets = [0; 4];
    let mut n_dofs = 0;
    for d in 0..4 {
        offsets[d] = n_dofs;
        n_dofs += per_entity[d] * mesh.n_entities(d);
    }

    let n_local = basis.dim();
    let mut cell_dofs = vec![0usize; mesh.n_tets() * n_local];
    let mut maps = Vec::with_capacity(mesh.n_tets());
    for t in 0..mesh.n_tets() {
        let sv = mesh.sorted_vertices(t);
        let edges = mesh.tet_edges(t);
        let faces = mesh.tet_faces(t);
        let global_entity = |dim: usize, local: usize| match dim {
            0 => sv[local],
            1 => edges[local],
            2 => faces[local],
            _ => t,
        };
        let local = &mut cell_dofs[t * n_local..(t + 1) * n_local];
        for (dim, ents) in basis.entity_dofs().iter().enumerate() {
            for (le, dofs) in ents.iter().enumerate() {
                let g = global_entity(dim, le);
                for (k, &ld) in dofs.iter().enumerate() {
                    local[ld] = offsets[dim] + g * per_entity[dim] + k;
                }
            }
        }
        maps.push(ElementMap::from_vertices(sv.map(|v| mesh.vertices()[v]))?);
    }

    let mut constrained = vec![false; n_dofs];
    if bc == BoundaryCondition::Pec {
        let mut mark = |dim: usize, entity: usize| {
            let o = offsets[dim] + entity * per_entity[dim];
            for c in &mut constrained[o..o + per_entity[dim]] {
                *c = true;
            }
        };
        for f in mesh.boundary_faces() {
            let [a, b, c] = mesh.faces()[f];
            mark(2, f);
            if family != Family::RaviartThomas {
                for t in mesh.face_tets(f) {
                    if t == crate::mesh::NO_TET {
                        continue;
                    }
                    let sv = mesh.sorted_vertices(t);
                    for (le, &[i, j]) in ReferenceTet::EDGES.iter().enumerate() {
                        let (vi, vj) = (sv[i], sv[j]);
                        if [a, b, c].contains(&vi) && [a, b, c].contains(&vj) {
                            mark(1, mesh.tet_edges(t)[le]);
                        }
                    }
                }
                for v in [a, b, c] {
                    mark(0, v);
                }
            }
        }
    }
    let mut free_index = vec![CONSTRAINED; n_dofs];
    let mut free_dofs = Vec::new();
    for (i, &c) in constrained.iter().enumerate() {
        if !c {
            free_index[i] = free_dofs.len();
            free_dofs.push(i);
        }
    }
    let interpolation = Arc::new(basis.functionals_with_order(DEFAULT_INTERPOLATION_ORDER)?);
    Ok(FeSpace {
        mesh,
        interpolation_order: DEFAULT_INTERPOLATION_ORDER.max(2 * p + 2),
        interpolation,
        basis,
        bc,
        offsets,
        per_entity,
        n_dofs,
        cell_dofs,
        constrained,
        free_index,
        free_dofs,
        maps,
    })
}

impl FeSpace {
    /// Uses entity quadrature of `order` for interpolation moments.
    pub fn with_interpolation_order(mut self, order: usize) -> Result<Self> {
        self.interpolation = Arc::new(self.basis.functionals_with_order(order)?);
        self.interpolation_order = order.max(2 * self.degree() + 2);
        Ok(self)
    }

    pub fn interpolation_order(&self) -> usize {
        self.interpolation_order
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn basis(&self) -> &ShapeBasis {
        &self.basis
    }

    pub fn family(&self) -> Family {
        self.basis.family()
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn n_local(&self) -> usize {
        self.basis.dim()
    }

    /// Global DOF of each local basis function of tet `t`.
    pub fn local_dofs(&self, t: usize) -> &[usize] {
        let n = self.n_local();
        &self.cell_dofs[t * n..(t + 1) * n]
    }

    /// Global DOFs attached to entity `entity` of dimension `dim`.
    pub fn entity_dofs(&self, dim: usize, entity: usize) -> std::ops::Range<usize> {
        let o = self.offsets[dim] + entity * self.per_entity[dim];
        o..o + self.per_entity[dim]
    }

    /// Map from the reference element with vertices in increasing global order.
    pub fn element_map(&self, t: usize) -> &ElementMap {
        &self.maps[t]
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    /// Position of `dof` among the free DOFs.
    pub fn free_index(&self, dof: usize) -> Option<usize> {
        match self.free_index[dof] {
            CONSTRAINED => None,
            i => Some(i),
        }
    }

    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    pub fn constrained_dofs(&self) -> Vec<usize> {
        (0..self.n_dofs).filter(|&i| self.constrained[i]).collect()
    }

    /// Full coefficient vector with zeros on constrained DOFs.
    pub fn expand_free(&self, free: &[C64]) -> Vec<C64> {
        let mut full = vec![ZERO_C; self.n_dofs];
        for (k, &d) in self.free_dofs.iter().enumerate() {
            full[d] = free[k];
        }
        full
    }

    pub fn restrict_free<T: Copy>(&self, full: &[T]) -> Vec<T> {
        self.free_dofs.iter().map(|&d| full[d]).collect()
    }

    /// Maps a reference table to element `t`.
    pub fn physical_table(&self, t: usize, table: &BasisTable) -> PhysicalTable {
        let m = &self.maps[t];
        let n = table.n_basis;
        let mut values = Vec::with_capacity(table.n_points * n);
        let mut derivs = Vec::with_capacity(table.n_points * n);
        for q in 0..table.n_points {
            for i in 0..n {
                let v = table.value(q, i);
                let d = table.deriv(q, i);
                match self.family() {
                    Family::Nedelec1 | Family::Nedelec2 => {
                        values.push(mat_vec(&m.inv_t, [v[0], v[1], v[2]]));
                        let c = mat_vec(&m.b, [d[0], d[1], d[2]]);
                        derivs.push([c[0] / m.det, c[1] / m.det, c[2] / m.det]);
                    }
                    Family::RaviartThomas => {
                        let c = mat_vec(&m.b, [v[0], v[1], v[2]]);
                        values.push([c[0] / m.det, c[1] / m.det, c[2] / m.det]);
                        derivs.push([d[0] / m.det, 0.0, 0.0]);
                    }
                    Family::Lagrange => {
                        values.push([v[0], 0.0, 0.0]);
                        derivs.push(mat_vec(&m.inv_t, [d[0], d[1], d[2]]));
                    }
                }
            }
        }
        PhysicalTable { n_points: table.n_points, n_basis: n, values, derivs }
    }

    /// Values and derivatives (curl / gradient / divergence) of the FE
    /// function with full coefficient vector `coeffs` at the points of
    /// `table`, on element `t`.
    pub fn eval_function(&self, t: usize, coeffs: &[C64], table: &BasisTable) -> (Vec<CVec3>, Vec<CVec3>) {
        let phys = self.physical_table(t, table);
        let dofs = self.local_dofs(t);
        let mut vals = vec![[ZERO_C; 3]; phys.n_points];
        let mut ders = vec![[ZERO_C; 3]; phys.n_points];
        for q in 0..phys.n_points {
            for (i, &g) in dofs.iter().enumerate() {
                let c = coeffs[g];
                if c == ZERO_C {
                    continue;
                }
                let v = phys.value(q, i);
                let d = phys.deriv(q, i);
                for k in 0..3 {
                    vals[q][k] += c * v[k];
                    ders[q][k] += c * d[k];
                }
            }
        }
        (vals, ders)
    }

    /// Pulls a physical vector field back to element `t` with the map of
    /// the space's family (covariant for Nédélec, contravariant for RT).
    fn pullback_value(&self, t: usize, v: CVec3) -> CVec3 {
        let m = &self.maps[t];
        match self.family() {
            Family::Nedelec1 | Family::Nedelec2 => {
                let bt = transpose(&m.b);
                let mut out = [ZERO_C; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i] += bt[i][j] * v[j];
                    }
                }
                out
            }
            Family::RaviartThomas => {
                let inv = m.inverse();
                let mut out = [ZERO_C; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        out[i] += m.det * inv[i][j] * v[j];
                    }
                }
                out
            }
            Family::Lagrange => v,
        }
    }

    /// Local canonical-interpolant DOFs of a vector field on element `t`.
    fn local_interpolant(&self, t: usize, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
        let m = &self.maps[t];
        let mut out = Vec::with_capacity(self.n_local());
        // functionals of one entity share their points; evaluate once per set
        let mut cached: Option<(&[Vec3], Vec<CVec3>)> = None;
        for func in self.interpolation.iter() {
            if cached.as_ref().is_none_or(|(pts, _)| *pts != func.points.as_slice()) {
                let mut vals = Vec::with_capacity(func.points.len());
                for x in &func.points {
                    let v = f(m.map(*x));
                    if v.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                        return Err(Error::Evaluation {
                            element: t,
                            message: format!("non-finite field value at {:?}", m.map(*x)),
                        });
                    }
                    vals.push(self.pullback_value(t, v));
                }
                cached = Some((func.points.as_slice(), vals));
            }
            let vals = &cached.as_ref().unwrap().1;
            let mut s = ZERO_C;
            for (vh, w) in vals.iter().zip(&func.weights) {
                if self.family() == Family::Lagrange {
                    s += vh[0] * w[0];
                } else {
                    s += vh[0] * w[0] + vh[1] * w[1] + vh[2] * w[2];
                }
            }
            out.push(s);
        }
        Ok(out)
    }

    /// Canonical interpolant of `f` on element `t` as local coefficients.
    pub fn element_interpolant(&self, t: usize, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
        self.local_interpolant(t, f)
    }
}

/// Canonical interpolant of a vector field (Nédélec, Raviart–Thomas), as a
/// full-length coefficient vector. Shared entities take the value computed on
/// their lowest-numbered adjacent tet.
pub fn canonical_interpolate(space: &FeSpace, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
    if space.family() == Family::Lagrange {
        return Err(Error::Argument("use canonical_interpolate_scalar for Lagrange spaces".into()));
    }
    interpolate(space, f)
}

/// Nodal interpolant of a scalar field in a Lagrange space.
pub fn canonical_interpolate_scalar(space: &FeSpace, f: &(dyn Fn(Vec3) -> C64 + Sync)) -> Result<Vec<C64>> {
    if space.family() != Family::Lagrange {
        return Err(Error::Argument("scalar interpolation needs a Lagrange space".into()));
    }
    let g = |x: Vec3| [f(x), ZERO_C, ZERO_C];
    interpolate(space, &g)
}

fn interpolate(space: &FeSpace, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
    let locals: Vec<Vec<C64>> =
        (0..space.mesh.n_tets()).into_par_iter().map(|t| space.local_interpolant(t, f)).collect::<Result<_>>()?;
    let mut out = vec![ZERO_C; space.n_dofs];
    let mut set = vec![false; space.n_dofs];
    for (t, local) in locals.iter().enumerate() {
        for (i, &g) in space.local_dofs(t).iter().enumerate() {
            if !set[g] {
                out[g] = local[i];
                set[g] = true;
            }
        }
    }
    Ok(out)
}

/// Functionals of `target` applied to the derivative of every `source` basis
/// function on the reference element (identical on every element).
fn reference_derivative_matrix(source: &ShapeBasis, target: &ShapeBasis) -> Vec<Vec<f64>> {
    target
        .functionals()
        .iter()
        .map(|func| {
            (0..source.dim())
                .map(|j| {
                    let v = func.apply_vector(|x| match source.family() {
                        Family::Lagrange => {
                            let d = |a: [usize; 3]| source.derivative(j, x, a)[0];
                            [d([1, 0, 0]), d([0, 1, 0]), d([0, 0, 1])]
                        }
                        _ => {
                            let d = |a: [usize; 3]| source.derivative(j, x, a);
                            let (dx, dy, dz) = (d([1, 0, 0]), d([0, 1, 0]), d([0, 0, 1]));
                            [dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]]
                        }
                    });
                    if v.abs() < 1e-13 {
                        0.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

fn global_set_matrix(source: &FeSpace, target: &FeSpace, local: &[Vec<f64>]) -> Result<SparseRealMatrix> {
    let mut entries = std::collections::BTreeMap::new();
    for t in 0..source.mesh.n_tets() {
        let rows = target.local_dofs(t);
        let cols = source.local_dofs(t);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                if local[i][j] != 0.0 {
                    entries.entry((r, c)).or_insert(local[i][j]);
                }
            }
        }
    }
    let t = entries.into_iter().map(|((r, c), v)| (r, c, v)).collect();
    SparseRealMatrix::from_triplets(target.n_dofs(), source.n_dofs(), t)
}

fn check_pair(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if !Arc::ptr_eq(&a.mesh, &b.mesh) {
        return Err(Error::Argument("spaces live on different meshes".into()));
    }
    if a.bc != b.bc {
        return Err(Error::Argument("spaces have different boundary conditions".into()));
    }
    Ok(())
}

/// Matrix `G` (full DOFs) with `G q` the Nédélec coefficients of the gradient
/// of the Lagrange function `q`.
pub fn build_discrete_gradient(lagrange: &FeSpace, nedelec: &FeSpace) -> Result<SparseRealMatrix> {
    check_pair(lagrange, nedelec)?;
    let (lp, np) = (lagrange.degree(), nedelec.degree());
    let ok = lagrange.family() == Family::Lagrange
        && match nedelec.family() {
            Family::Nedelec1 => lp == np,
            Family::Nedelec2 => lp == np || lp == np + 1,
            _ => false,
        };
    if !ok {
        return Err(Error::Argument(format!(
            "cannot map gradients of {} p={lp} into {} p={np}",
            lagrange.family(),
            nedelec.family()
        )));
    }
    let local = reference_derivative_matrix(lagrange.basis(), nedelec.basis());
    global_set_matrix(lagrange, nedelec, &local)
}

/// Matrix `C` (full DOFs) with `C u` the Raviart–Thomas coefficients of the
/// curl of the Nédélec function `u`.
pub fn build_discrete_curl(nedelec: &FeSpace, rt: &FeSpace) -> Result<SparseRealMatrix> {
    check_pair(nedelec, rt)?;
    if !nedelec.family().is_curl_conforming() || rt.family() != Family::RaviartThomas || nedelec.degree() != rt.degree()
    {
        return Err(Error::Argument("discrete curl needs Nédélec p and Raviart–Thomas p".into()));
    }
    let local = reference_derivative_matrix(nedelec.basis(), rt.basis());
    global_set_matrix(nedelec, rt, &local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_cube_mesh;

    fn cube(n: usize) -> Arc<Mesh> {
        Arc::new(generate_cube_mesh(n, 1.0, &|_| 0).unwrap())
    }

    #[test]
    fn dof_counts_on_single_cell() {
        let m = cube(1);
        let s = build_fe_space(m.clone(), Family::Nedelec1, 1, BoundaryCondition::Natural).unwrap();
        assert_eq!(s.n_dofs(), 19);
        let l = build_fe_space(m.clone(), Family::Lagrange, 1, BoundaryCondition::Natural).unwrap();
        assert_eq!(l.n_dofs(), 8);
        let pec = build_fe_space(m, Family::Nedelec1, 1, BoundaryCondition::Pec).unwrap();
        // only the main diagonal is interior
        assert_eq!(pec.n_free(), 1);
    }

    #[test]
    fn constant_field_is_reproduced() {
        let m = cube(2);
        for p in 1..=3 {
            let s = build_fe_space(m.clone(), Family::Nedelec1, p, BoundaryCondition::Natural).unwrap();
            let one = C64::new(1.0, 0.0);
            let c = canonical_interpolate(&s, &|_| [one, ZERO_C, ZERO_C]).unwrap();
            let b = s.basis().clone();
            let pts = [[0.1, 0.2, 0.3], [0.25, 0.25, 0.25]];
            let table = b.evaluate(&pts).unwrap();
            for t in 0..m.n_tets() {
                let (v, curl) = s.eval_function(t, &c, &table);
                for q in 0..2 {
                    assert!((v[q][0] - one).norm() < 1e-12);
                    assert!(v[q][1].norm() < 1e-12 && v[q][2].norm() < 1e-12);
                    assert!(curl[q].iter().all(|c| c.norm() < 1e-11));
                }
            }
        }
    }
}
