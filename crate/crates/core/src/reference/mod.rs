//! Reference tetrahedron, shape functions and degree-of-freedom functionals.
//!
//! Degree convention: `p = 1` is the lowest order for every family
//! (Whitney edge elements for Nédélec, the 4-function face element for
//! Raviart–Thomas, linear hats for Lagrange).
//!
//! Each basis is the dual basis of its DOF functionals: a spanning set for the
//! polynomial space is orthonormalized and then inverted against the
//! functionals, so that `dof_i(φ_j) = δ_ij`.
//!
//! All entity DOFs are defined through parametrizations that depend only on
//! the ordered vertex list of the entity (`edge (a, b)`: `x = v_a + s (v_b - v_a)`,
//! `face (a, b, c)`: `x = v_a + s (v_b - v_a) + t (v_c - v_a)`). When every
//! element orders its vertices by increasing global index, functionals on a
//! shared entity coincide from both sides and no sign or permutation
//! correction is needed.

pub mod polynomial;
pub mod quadrature;

use crate::error::{Error, Result};
use crate::linalg::{cross, sub, Vec3};
use faer::linalg::solvers::Solve;
use faer::Mat;
use polynomial::{homogeneous_exponents, legendre, MonomialSet};
use quadrature::{build_quadrature, line_rule, triangle_rule};

/// The unit tetrahedron with vertices (0,0,0), (1,0,0), (0,1,0), (0,0,1).
#[derive(Debug, Clone, Copy)]
pub struct ReferenceTet;

impl ReferenceTet {
    pub const VERTICES: [Vec3; 4] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    /// Edges, lexicographic in the local vertex indices.
    pub const EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];
    /// Faces, lexicographic in the local vertex indices.
    pub const FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    pub const VOLUME: f64 = 1.0 / 6.0;

    /// Barycentric coordinates (λ0, λ1, λ2, λ3) of `x`.
    pub fn barycentric(x: Vec3) -> [f64; 4] {
        [1.0 - x[0] - x[1] - x[2], x[0], x[1], x[2]]
    }

    pub fn contains(x: Vec3, tol: f64) -> bool {
        Self::barycentric(x).iter().all(|&l| l >= -tol)
    }
}

/// Element families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// First-kind Nédélec: P_{p-1}^3 + x × P_{p-1}^3.
    Nedelec1,
    /// Second-kind Nédélec: P_p^3.
    Nedelec2,
    /// Raviart–Thomas: P_{p-1}^3 + x P_{p-1}.
    RaviartThomas,
    /// Continuous Lagrange: P_p.
    Lagrange,
}

impl Family {
    pub fn value_size(self) -> usize {
        match self {
            Family::Lagrange => 1,
            _ => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Nedelec1 => "nedelec1",
            Family::Nedelec2 => "nedelec2",
            Family::RaviartThomas => "raviart_thomas",
            Family::Lagrange => "lagrange",
        }
    }

    /// Highest supported degree.
    pub fn max_degree(self) -> usize {
        match self {
            Family::Lagrange => 6,
            _ => 4,
        }
    }

    /// Dimension of the degree-`p` space on a tetrahedron.
    pub fn dimension(self, p: usize) -> usize {
        match self {
            Family::Nedelec1 => p * (p + 2) * (p + 3) / 2,
            Family::Nedelec2 => (p + 1) * (p + 2) * (p + 3) / 2,
            Family::RaviartThomas => p * (p + 1) * (p + 3) / 2,
            Family::Lagrange => (p + 1) * (p + 2) * (p + 3) / 6,
        }
    }

    pub fn is_curl_conforming(self) -> bool {
        matches!(self, Family::Nedelec1 | Family::Nedelec2)
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nedelec1" | "N1curl" => Ok(Family::Nedelec1),
            "nedelec2" | "N2curl" => Ok(Family::Nedelec2),
            "raviart_thomas" | "rt" => Ok(Family::RaviartThomas),
            "lagrange" | "P" => Ok(Family::Lagrange),
            other => Err(Error::Argument(format!("unknown element family `{other}`"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A linear functional `v ↦ Σ_q w_q · v(x_q)` attached to a mesh entity.
///
/// For scalar families only the first weight component is used.
#[derive(Debug, Clone)]
pub struct DofFunctional {
    /// (topological dimension, local entity index)
    pub entity: (usize, usize),
    pub points: Vec<Vec3>,
    pub weights: Vec<Vec3>,
}

impl DofFunctional {
    pub fn apply_vector(&self, f: impl Fn(Vec3) -> Vec3) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, w)| {
                let v = f(x);
                v[0] * w[0] + v[1] * w[1] + v[2] * w[2]
            })
            .sum()
    }

    pub fn apply_scalar(&self, f: impl Fn(Vec3) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, w)| f(x) * w[0]).sum()
    }
}

/// Tabulated basis on a set of reference points.
///
/// `values[(q * n_basis + i) * value_size + c]`; `derivs` holds curls (Nédélec),
/// gradients (Lagrange), both with 3 components, or divergences (Raviart–Thomas)
/// with 1 component.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n_points: usize,
    pub n_basis: usize,
    pub value_size: usize,
    pub deriv_size: usize,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

impl BasisTable {
    pub fn value(&self, q: usize, i: usize) -> &[f64] {
        let o = (q * self.n_basis + i) * self.value_size;
        &self.values[o..o + self.value_size]
    }

    pub fn deriv(&self, q: usize, i: usize) -> &[f64] {
        let o = (q * self.n_basis + i) * self.deriv_size;
        &self.derivs[o..o + self.deriv_size]
    }
}

/// Shape functions of one family and degree on the reference tetrahedron.
#[derive(Debug, Clone)]
pub struct ShapeBasis {
    family: Family,
    degree: usize,
    monomials: MonomialSet,
    /// `coeffs[(i * value_size + c) * n_mono + m]`
    coeffs: Vec<f64>,
    functionals: Vec<DofFunctional>,
    entity_dofs: [Vec<Vec<usize>>; 4],
}

/// Builds the dual basis of `family` at degree `p`.
pub fn build_shape_basis(family: Family, p: usize) -> Result<ShapeBasis> {
    if p == 0 || p > family.max_degree() {
        return Err(Error::Capability(format!(
            "{family} of degree {p} is not implemented (supported: 1..={})",
            family.max_degree()
        )));
    }
    let monomials = MonomialSet::new(p);
    let vs = family.value_size();
    let n_mono = monomials.len();
    let n_coef = vs * n_mono;
    let spanning = spanning_set(family, p, &monomials);
    let functionals = dof_functionals(family, p, 2 * p + 2)?;
    let n_dofs = functionals.len();
    if n_dofs != family.dimension(p) {
        return Err(Error::Numeric(format!(
            "{family} degree {p}: {n_dofs} functionals for a space of dimension {}",
            family.dimension(p)
        )));
    }

    // Orthonormal basis of span(spanning set) through a thin SVD.
    let s = Mat::<f64>::from_fn(n_coef, spanning.len(), |r, c| spanning[c][r]);
    let svd = s.thin_svd().map_err(|e| Error::Numeric(format!("SVD of spanning set failed: {e:?}")))?;
    let sig = svd.S().column_vector();
    let smax = (0..sig.nrows()).map(|i| sig[i]).fold(0.0f64, f64::max);
    let rank = (0..sig.nrows()).filter(|&i| sig[i] > 1e-10 * smax).count();
    if rank != n_dofs {
        return Err(Error::Numeric(format!("{family} degree {p}: spanning set has rank {rank}, expected {n_dofs}")));
    }
    let u = svd.U().subcols(0, rank).to_owned();

    // Functionals applied to each orthonormal vector.
    let ell = functional_matrix(&functionals, &monomials, vs);
    let d = &ell * &u;
    let lu = d.partial_piv_lu();
    let dinv = lu.solve(Mat::<f64>::identity(n_dofs, n_dofs));
    let c = &u * &dinv;

    let mut coeffs = vec![0.0; n_dofs * n_coef];
    for i in 0..n_dofs {
        for r in 0..n_coef {
            coeffs[i * n_coef + r] = c[(r, i)];
        }
    }
    let mut entity_dofs: [Vec<Vec<usize>>; 4] =
        [vec![Vec::new(); 4], vec![Vec::new(); 6], vec![Vec::new(); 4], vec![Vec::new(); 1]];
    for (i, f) in functionals.iter().enumerate() {
        entity_dofs[f.entity.0][f.entity.1].push(i);
    }
    let basis = ShapeBasis { family, degree: p, monomials, coeffs, functionals, entity_dofs };
    let err = basis.unisolvence_error();
    if err > 1e-10 {
        return Err(Error::Numeric(format!("{family} degree {p}: DOF matrix deviates from identity by {err:e}")));
    }
    Ok(basis)
}

impl ShapeBasis {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.functionals.len()
    }

    pub fn value_size(&self) -> usize {
        self.family.value_size()
    }

    pub fn functionals(&self) -> &[DofFunctional] {
        &self.functionals
    }

    /// Local DOFs attached to each entity: `[dim][local entity] -> dofs`.
    pub fn entity_dofs(&self) -> &[Vec<Vec<usize>>; 4] {
        &self.entity_dofs
    }

    /// Number of DOFs on each entity of dimension `dim`.
    pub fn dofs_per_entity(&self, dim: usize) -> usize {
        self.entity_dofs[dim][0].len()
    }

    /// Polynomial coefficients of basis function `i`, component `c`, over
    /// the monomials of [`Self::monomials`].
    pub fn coefficients(&self, i: usize, c: usize) -> &[f64] {
        let n = self.monomials.len();
        let o = (i * self.value_size() + c) * n;
        &self.coeffs[o..o + n]
    }

    pub fn monomials(&self) -> &MonomialSet {
        &self.monomials
    }

    /// max |dof_i(φ_j) − δ_ij|
    pub fn unisolvence_error(&self) -> f64 {
        let n = self.dim();
        let mut err: f64 = 0.0;
        for (i, f) in self.functionals.iter().enumerate() {
            for j in 0..n {
                let v = if self.value_size() == 1 {
                    f.apply_scalar(|x| self.eval_one(j, x)[0])
                } else {
                    f.apply_vector(|x| {
                        let v = self.eval_one(j, x);
                        [v[0], v[1], v[2]]
                    })
                };
                let e = if i == j { 1.0 } else { 0.0 };
                err = err.max((v - e).abs());
            }
        }
        err
    }

    /// Value of basis function `i` at a single point, without domain check.
    pub fn eval_one(&self, i: usize, x: Vec3) -> Vec<f64> {
        let mv = self.monomials.eval(x);
        (0..self.value_size()).map(|c| dot_slices(self.coefficients(i, c), &mv)).collect()
    }

    /// Tabulates values and the family's natural derivative (curl, divergence
    /// or gradient) at `points`, which must lie in the reference tetrahedron.
    pub fn evaluate(&self, points: &[Vec3]) -> Result<BasisTable> {
        for &x in points {
            if !ReferenceTet::contains(x, 1e-12) {
                return Err(Error::OutsideReference(x));
            }
        }
        Ok(self.tabulate(points))
    }

    /// Same as [`Self::evaluate`] but without the domain check.
    pub fn tabulate(&self, points: &[Vec3]) -> BasisTable {
        let n = self.dim();
        let vs = self.value_size();
        let deriv_size = match self.family {
            Family::RaviartThomas => 1,
            _ => 3,
        };
        let mut values = Vec::with_capacity(points.len() * n * vs);
        let mut derivs = Vec::with_capacity(points.len() * n * deriv_size);
        for &x in points {
            let mv = self.monomials.eval(x);
            let gx = self.monomials.eval_derivative(x, [1, 0, 0]);
            let gy = self.monomials.eval_derivative(x, [0, 1, 0]);
            let gz = self.monomials.eval_derivative(x, [0, 0, 1]);
            for i in 0..n {
                for c in 0..vs {
                    values.push(dot_slices(self.coefficients(i, c), &mv));
                }
                match self.family {
                    Family::Lagrange => {
                        let c = self.coefficients(i, 0);
                        derivs.extend([dot_slices(c, &gx), dot_slices(c, &gy), dot_slices(c, &gz)]);
                    }
                    Family::RaviartThomas => {
                        let div = dot_slices(self.coefficients(i, 0), &gx)
                            + dot_slices(self.coefficients(i, 1), &gy)
                            + dot_slices(self.coefficients(i, 2), &gz);
                        derivs.push(div);
                    }
                    Family::Nedelec1 | Family::Nedelec2 => {
                        let (c0, c1, c2) = (self.coefficients(i, 0), self.coefficients(i, 1), self.coefficients(i, 2));
                        derivs.extend([
                            dot_slices(c2, &gy) - dot_slices(c1, &gz),
                            dot_slices(c0, &gz) - dot_slices(c2, &gx),
                            dot_slices(c1, &gx) - dot_slices(c0, &gy),
                        ]);
                    }
                }
            }
        }
        BasisTable { n_points: points.len(), n_basis: n, value_size: vs, deriv_size, values, derivs }
    }

    /// ∂^α of every component of basis function `i` at `x` (reference coordinates).
    pub fn derivative(&self, i: usize, x: Vec3, alpha: [usize; 3]) -> Vec<f64> {
        let md = self.monomials.eval_derivative(x, alpha);
        (0..self.value_size()).map(|c| dot_slices(self.coefficients(i, c), &md)).collect()
    }

    /// Applies every DOF functional to a reference-space vector field.
    pub fn apply_functionals_vector(&self, f: impl Fn(Vec3) -> Vec3) -> Vec<f64> {
        self.functionals.iter().map(|d| d.apply_vector(&f)).collect()
    }

    pub fn apply_functionals_scalar(&self, f: impl Fn(Vec3) -> f64) -> Vec<f64> {
        self.functionals.iter().map(|d| d.apply_scalar(&f)).collect()
    }

    /// The same functionals evaluated with entity quadrature of the given
    /// order (at least `2p + 2`), for interpolating non-polynomial fields.
    pub fn functionals_with_order(&self, order: usize) -> Result<Vec<DofFunctional>> {
        dof_functionals(self.family, self.degree, order.max(2 * self.degree + 2))
    }

    /// All DOF points, concatenated in functional order.
    pub fn functional_points(&self) -> Vec<Vec3> {
        self.functionals.iter().flat_map(|f| f.points.iter().copied()).collect()
    }
}

fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Matrix of the functionals acting on monomial coefficient vectors.
fn functional_matrix(functionals: &[DofFunctional], monomials: &MonomialSet, vs: usize) -> Mat<f64> {
    let n_mono = monomials.len();
    let mut ell = Mat::<f64>::zeros(functionals.len(), vs * n_mono);
    for (i, f) in functionals.iter().enumerate() {
        for (x, w) in f.points.iter().zip(&f.weights) {
            let mv = monomials.eval(*x);
            for c in 0..vs {
                if w[c] == 0.0 {
                    continue;
                }
                for (m, v) in mv.iter().enumerate() {
                    ell[(i, c * n_mono + m)] += w[c] * v;
                }
            }
        }
    }
    ell
}

/// Coefficient vectors (component-major over the monomials) spanning the space.
fn spanning_set(family: Family, p: usize, monomials: &MonomialSet) -> Vec<Vec<f64>> {
    let n_mono = monomials.len();
    let vs = family.value_size();
    let unit = |c: usize, e: [usize; 3]| {
        let mut v = vec![0.0; vs * n_mono];
        v[c * n_mono + monomials.index_of(e).unwrap()] = 1.0;
        v
    };
    let lower = MonomialSet::new(p.saturating_sub(1));
    let mut out = Vec::new();
    match family {
        Family::Lagrange => {
            for &e in monomials.exponents() {
                out.push(unit(0, e));
            }
        }
        Family::Nedelec2 => {
            for c in 0..3 {
                for &e in monomials.exponents() {
                    out.push(unit(c, e));
                }
            }
        }
        Family::Nedelec1 => {
            for c in 0..3 {
                for &e in lower.exponents() {
                    out.push(unit(c, e));
                }
            }
            // x × (e_c m) for homogeneous m of degree p - 1
            for &e in &homogeneous_exponents(p - 1) {
                for c in 0..3 {
                    let mut v = vec![0.0; 3 * n_mono];
                    // x × e_c = ε_{i j c} x_j e_i
                    for i in 0..3 {
                        for j in 0..3 {
                            let eps = levi_civita(i, j, c);
                            if eps == 0.0 {
                                continue;
                            }
                            let mut ee = e;
                            ee[j] += 1;
                            v[i * n_mono + monomials.index_of(ee).unwrap()] += eps;
                        }
                    }
                    out.push(v);
                }
            }
        }
        Family::RaviartThomas => {
            for c in 0..3 {
                for &e in lower.exponents() {
                    out.push(unit(c, e));
                }
            }
            for &e in &homogeneous_exponents(p - 1) {
                let mut v = vec![0.0; 3 * n_mono];
                for i in 0..3 {
                    let mut ee = e;
                    ee[i] += 1;
                    v[i * n_mono + monomials.index_of(ee).unwrap()] += 1.0;
                }
                out.push(v);
            }
        }
    }
    out
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

fn monomials_2d(max_degree: isize) -> Vec<[usize; 2]> {
    let mut out = Vec::new();
    if max_degree < 0 {
        return out;
    }
    for d in 0..=(max_degree as usize) {
        for i in (0..=d).rev() {
            out.push([i, d - i]);
        }
    }
    out
}

fn homogeneous_2d(d: isize) -> Vec<[usize; 2]> {
    if d < 0 {
        return Vec::new();
    }
    let d = d as usize;
    (0..=d).rev().map(|i| [i, d - i]).collect()
}

fn dof_functionals(family: Family, p: usize, order: usize) -> Result<Vec<DofFunctional>> {
    let line = line_rule(order)?;
    let tri = triangle_rule(order)?;
    let tet = build_quadrature(order)?;
    let v = ReferenceTet::VERTICES;
    let pi = p as isize;
    let mut out = Vec::new();

    // vertices
    if family == Family::Lagrange {
        for (i, &x) in v.iter().enumerate() {
            out.push(DofFunctional { entity: (0, i), points: vec![x], weights: vec![[1.0, 0.0, 0.0]] });
        }
    }

    // edges
    for (ei, &[a, b]) in ReferenceTet::EDGES.iter().enumerate() {
        let t = sub(v[b], v[a]);
        let at = |s: f64| [v[a][0] + s * t[0], v[a][1] + s * t[1], v[a][2] + s * t[2]];
        match family {
            Family::Nedelec1 | Family::Nedelec2 => {
                let n_moments = if family == Family::Nedelec1 { p } else { p + 1 };
                for j in 0..n_moments {
                    out.push(DofFunctional {
                        entity: (1, ei),
                        points: line.points.iter().map(|&s| at(s)).collect(),
                        weights: line
                            .points
                            .iter()
                            .zip(&line.weights)
                            .map(|(&s, &w)| {
                                let q = w * legendre(j, 2.0 * s - 1.0);
                                [q * t[0], q * t[1], q * t[2]]
                            })
                            .collect(),
                    });
                }
            }
            Family::Lagrange => {
                for i in 1..p {
                    out.push(DofFunctional {
                        entity: (1, ei),
                        points: vec![at(i as f64 / p as f64)],
                        weights: vec![[1.0, 0.0, 0.0]],
                    });
                }
            }
            Family::RaviartThomas => {}
        }
    }

    // faces
    for (fi, &[a, b, c]) in ReferenceTet::FACES.iter().enumerate() {
        let t1 = sub(v[b], v[a]);
        let t2 = sub(v[c], v[a]);
        let at = |s: f64, t: f64| {
            [v[a][0] + s * t1[0] + t * t2[0], v[a][1] + s * t1[1] + t * t2[1], v[a][2] + s * t1[2] + t * t2[2]]
        };
        let pts: Vec<Vec3> = tri.points.iter().map(|q| at(q[0], q[1])).collect();
        let moment = |dir: &dyn Fn(f64, f64) -> Vec3, e: [usize; 2]| DofFunctional {
            entity: (2, fi),
            points: pts.clone(),
            weights: tri
                .points
                .iter()
                .zip(&tri.weights)
                .map(|(q, &w)| {
                    let m = w * q[0].powi(e[0] as i32) * q[1].powi(e[1] as i32);
                    let d = dir(q[0], q[1]);
                    [m * d[0], m * d[1], m * d[2]]
                })
                .collect(),
        };
        match family {
            Family::Nedelec1 => {
                for e in monomials_2d(pi - 2) {
                    out.push(moment(&|_, _| t1, e));
                    out.push(moment(&|_, _| t2, e));
                }
            }
            Family::Nedelec2 => {
                for e in monomials_2d(pi - 2) {
                    out.push(moment(&|_, _| t1, e));
                    out.push(moment(&|_, _| t2, e));
                }
                for e in homogeneous_2d(pi - 2) {
                    out.push(moment(&|s, t| [s * t1[0] + t * t2[0], s * t1[1] + t * t2[1], s * t1[2] + t * t2[2]], e));
                }
            }
            Family::RaviartThomas => {
                let n = cross(t1, t2);
                for e in monomials_2d(pi - 1) {
                    out.push(moment(&|_, _| n, e));
                }
            }
            Family::Lagrange => {
                for j in 1..p {
                    for i in 1..p {
                        if i + j < p {
                            out.push(DofFunctional {
                                entity: (2, fi),
                                points: vec![at(i as f64 / p as f64, j as f64 / p as f64)],
                                weights: vec![[1.0, 0.0, 0.0]],
                            });
                        }
                    }
                }
            }
        }
    }

    // interior
    let interior_moment = |w_of: &dyn Fn(Vec3) -> Vec3| DofFunctional {
        entity: (3, 0),
        points: tet.points.clone(),
        weights: tet
            .points
            .iter()
            .zip(&tet.weights)
            .map(|(&x, &w)| {
                let d = w_of(x);
                [w * d[0], w * d[1], w * d[2]]
            })
            .collect(),
    };
    let poly = |e: [usize; 3], x: Vec3| x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32);
    let full = |deg: isize| -> Vec<[usize; 3]> {
        if deg < 0 {
            Vec::new()
        } else {
            MonomialSet::new(deg as usize).exponents().to_vec()
        }
    };
    match family {
        Family::Nedelec1 | Family::Nedelec2 | Family::RaviartThomas => {
            let deg = match family {
                Family::RaviartThomas => pi - 2,
                _ => pi - 3,
            };
            for e in full(deg) {
                for c in 0..3 {
                    out.push(interior_moment(&|x| {
                        let mut d = [0.0; 3];
                        d[c] = poly(e, x);
                        d
                    }));
                }
            }
            if family == Family::Nedelec2 && pi >= 3 {
                for e in homogeneous_exponents(p - 3) {
                    out.push(interior_moment(&|x| {
                        let m = poly(e, x);
                        [m * x[0], m * x[1], m * x[2]]
                    }));
                }
            }
        }
        Family::Lagrange => {
            for l in 1..p {
                for j in 1..p {
                    for i in 1..p {
                        if i + j + l < p {
                            let pf = p as f64;
                            out.push(DofFunctional {
                                entity: (3, 0),
                                points: vec![[i as f64 / pf, j as f64 / pf, l as f64 / pf]],
                                weights: vec![[1.0, 0.0, 0.0]],
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions_match_formulas() {
        let cases = [
            (Family::Nedelec1, 1, 6),
            (Family::Nedelec1, 2, 20),
            (Family::Nedelec1, 3, 45),
            (Family::Nedelec2, 1, 12),
            (Family::Nedelec2, 2, 30),
            (Family::RaviartThomas, 1, 4),
            (Family::RaviartThomas, 2, 15),
            (Family::Lagrange, 1, 4),
            (Family::Lagrange, 3, 20),
        ];
        for (f, p, n) in cases {
            let b = build_shape_basis(f, p).unwrap();
            assert_eq!(b.dim(), n, "{f} p={p}");
        }
    }

    #[test]
    fn every_supported_basis_is_unisolvent() {
        for f in [Family::Nedelec1, Family::Nedelec2, Family::RaviartThomas, Family::Lagrange] {
            for p in 1..=f.max_degree().min(4) {
                let b = build_shape_basis(f, p).unwrap();
                assert!(b.unisolvence_error() < 1e-10, "{f} p={p}");
            }
        }
        for p in 5..=6 {
            let b = build_shape_basis(Family::Lagrange, p).unwrap();
            assert!(b.unisolvence_error() < 1e-10);
        }
    }

    #[test]
    fn unsupported_degree_is_a_capability_error() {
        assert!(matches!(build_shape_basis(Family::Nedelec1, 0), Err(Error::Capability(_))));
        assert!(matches!(build_shape_basis(Family::Nedelec1, 5), Err(Error::Capability(_))));
    }

    #[test]
    fn whitney_functions_match_closed_form() {
        let b = build_shape_basis(Family::Nedelec1, 1).unwrap();
        let grad = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let x = [0.1, 0.2, 0.3];
        let lam = ReferenceTet::barycentric(x);
        for (e, &[i, j]) in ReferenceTet::EDGES.iter().enumerate() {
            let v = b.eval_one(e, x);
            for c in 0..3 {
                let w = lam[i] * grad[j][c] - lam[j] * grad[i][c];
                assert!((v[c] - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn whitney_tangential_value_on_edge_midpoint() {
        let b = build_shape_basis(Family::Nedelec1, 1).unwrap();
        for (e, &[i, j]) in ReferenceTet::EDGES.iter().enumerate() {
            let vi = ReferenceTet::VERTICES[i];
            let vj = ReferenceTet::VERTICES[j];
            let mid = [(vi[0] + vj[0]) / 2.0, (vi[1] + vj[1]) / 2.0, (vi[2] + vj[2]) / 2.0];
            let t = sub(vj, vi);
            let len = crate::linalg::norm(t);
            let v = b.eval_one(e, mid);
            let tangential = (v[0] * t[0] + v[1] * t[1] + v[2] * t[2]) / len;
            assert!((tangential - 1.0 / len).abs() < 1e-12);
        }
    }

    #[test]
    fn lowest_order_derivatives_are_constant() {
        let pts = vec![[0.1, 0.1, 0.1], [0.5, 0.2, 0.1], [0.0, 0.0, 1.0], [0.3, 0.3, 0.3]];
        for f in [Family::Nedelec1, Family::Lagrange, Family::RaviartThomas] {
            let b = build_shape_basis(f, 1).unwrap();
            let t = b.evaluate(&pts).unwrap();
            for q in 1..pts.len() {
                for i in 0..b.dim() {
                    for (a, c) in t.deriv(q, i).iter().zip(t.deriv(0, i)) {
                        assert!((a - c).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn lagrange_partition_of_unity() {
        let b = build_shape_basis(Family::Lagrange, 1).unwrap();
        let t = b.evaluate(&[[0.2, 0.3, 0.1], [0.0, 0.5, 0.5]]).unwrap();
        for q in 0..2 {
            let s: f64 = (0..4).map(|i| t.value(q, i)[0]).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn points_outside_are_rejected() {
        let b = build_shape_basis(Family::Lagrange, 1).unwrap();
        assert!(matches!(b.evaluate(&[[0.6, 0.6, 0.0]]), Err(Error::OutsideReference(_))));
    }
}
