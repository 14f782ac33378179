//! k-weighted norms, error reports, and the estimators for the solution
//! operator norm and the divergence-conformity factor.

use crate::assembly::{
    assemble_curlcurl, assemble_gradient_coupling, assemble_mass, assemble_stiffness, ElementQuadrature, LinearSystem,
};
use crate::coefficients::{CoefficientField, ConstantField, SharedField};
use crate::error::{Error, Result};
use crate::linalg::{cinverse, cmat_from_real, CVec3, Vec3, C64, ZERO_C};
use crate::mesh::Mesh;
use crate::reference::quadrature::build_quadrature;
use crate::reference::Family;
use crate::solver::{factorize, largest_generalized_singular_value, solve, solve_adjoint, solve_columns};
use crate::spaces::{build_discrete_gradient, build_fe_space, BoundaryCondition, FeSpace};
use crate::sparse::SparseComplexMatrix;
use faer::{Mat, Side};
use rayon::prelude::*;
use std::sync::Arc;

/// Norm selector for [`compute_norm`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L2,
    /// `‖k⁻¹ curl u‖` (gradient for Lagrange, divergence for RT).
    CurlK,
    /// `(‖k⁻¹ curl u‖² + ‖u‖²)^{1/2}`.
    HkCurl,
    /// Piecewise `H^j` norm with `k⁻¹`-scaled derivatives.
    PiecewiseHj(usize),
}

fn c_norm_sqr(v: &CVec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn full_coefficients(space: &FeSpace, coeffs: &[C64]) -> Result<Vec<C64>> {
    if coeffs.len() == space.n_dofs() {
        Ok(coeffs.to_vec())
    } else if coeffs.len() == space.n_free() {
        Ok(space.expand_free(coeffs))
    } else {
        Err(Error::Dimension { expected: space.n_dofs(), got: coeffs.len() })
    }
}

/// Squared L² norms of the value and of the derivative, element by element.
fn element_sums(space: &FeSpace, coeffs: &[C64], quad: &ElementQuadrature) -> Vec<(f64, f64)> {
    (0..space.mesh().n_tets())
        .into_par_iter()
        .map(|t| {
            let (vals, ders) = space.eval_function(t, coeffs, &quad.table);
            let jac = space.element_map(t).det.abs();
            let mut s = (0.0, 0.0);
            for (q, w) in quad.rule.weights.iter().enumerate() {
                s.0 += w * jac * c_norm_sqr(&vals[q]);
                s.1 += w * jac * c_norm_sqr(&ders[q]);
            }
            s
        })
        .collect()
}

/// Norm of the FE function with coefficients `coeffs` (full or free length).
/// Quadrature of order `2p + 2`.
pub fn compute_norm(space: &FeSpace, coeffs: &[C64], k: f64, which: NormKind) -> Result<f64> {
    check_k(k)?;
    let coeffs = full_coefficients(space, coeffs)?;
    if let NormKind::PiecewiseHj(j) = which {
        return piecewise_fe_norm(space, &coeffs, k, j);
    }
    let quad = ElementQuadrature::standard(space)?;
    let (l2, d) = element_sums(space, &coeffs, &quad).into_iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(combine(l2, d / (k * k), which))
}

fn combine(l2: f64, dk: f64, which: NormKind) -> f64 {
    match which {
        NormKind::L2 => l2.sqrt(),
        NormKind::CurlK => dk.sqrt(),
        _ => (l2 + dk).sqrt(),
    }
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Argument(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

/// Norm of a closed-form field with its curl, by quadrature of `order` on
/// every element of `mesh`. `PiecewiseHj` is not available here; see
/// [`piecewise_field_norm`].
pub fn compute_field_norm(
    mesh: &Mesh,
    field: &(dyn Fn(Vec3) -> CVec3 + Sync),
    curl: &(dyn Fn(Vec3) -> CVec3 + Sync),
    k: f64,
    which: NormKind,
    order: usize,
) -> Result<f64> {
    check_k(k)?;
    if let NormKind::PiecewiseHj(_) = which {
        return Err(Error::Capability("piecewise norms of fields need derivatives; use piecewise_field_norm".into()));
    }
    let rule = build_quadrature(order)?;
    let (l2, d) = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let map = crate::mesh::element_map(mesh, t);
            let mut s = (0.0, 0.0);
            for (&xh, &w) in rule.points.iter().zip(&rule.weights) {
                let x = map.map(xh);
                s.0 += w * map.det.abs() * c_norm_sqr(&field(x));
                s.1 += w * map.det.abs() * c_norm_sqr(&curl(x));
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(combine(l2, d / (k * k), which))
}

fn multi_indices_of_order(m: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in (0..=m).rev() {
        for b in (0..=m - a).rev() {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

/// `Σ_{|α|≤j} Σ_i ∫_{Ω_i} |(k⁻¹∂)^α v|²` for a field given by its partial
/// derivatives `deriv(x, region, α)` (α = 0 is the value).
pub fn piecewise_field_norm(
    mesh: &Mesh,
    deriv: &(dyn Fn(Vec3, i32, [usize; 3]) -> CVec3 + Sync),
    k: f64,
    j: usize,
    order: usize,
) -> Result<f64> {
    check_k(k)?;
    let rule = build_quadrature(order)?;
    let alphas: Vec<(f64, [usize; 3])> =
        (0..=j).flat_map(|m| multi_indices_of_order(m).into_iter().map(move |a| (k.powi(-2 * m as i32), a))).collect();
    let total: f64 = (0..mesh.n_tets())
        .into_par_iter()
        .map(|t| {
            let map = crate::mesh::element_map(mesh, t);
            let region = mesh.region(t);
            let mut s = 0.0;
            for (&xh, &w) in rule.points.iter().zip(&rule.weights) {
                let x = map.map(xh);
                for (scale, a) in &alphas {
                    s += w * map.det.abs() * scale * c_norm_sqr(&deriv(x, region, *a));
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total.sqrt())
}

fn piecewise_fe_norm(space: &FeSpace, coeffs: &[C64], k: f64, j: usize) -> Result<f64> {
    if j > space.degree() {
        return Err(Error::Capability(format!(
            "piecewise H^{j} norm of a degree-{} finite element function",
            space.degree()
        )));
    }
    let rule = build_quadrature(2 * space.degree() + 2)?;
    let basis = space.basis();
    let family = space.family();
    let total: f64 = (0..space.mesh().n_tets())
        .into_par_iter()
        .map(|t| {
            let map = space.element_map(t);
            let binv = map.inverse();
            let dofs = space.local_dofs(t);
            let mut s = 0.0;
            for (&xh, &w) in rule.points.iter().zip(&rule.weights) {
                for m in 0..=j {
                    // reference derivatives of the local FE function for |β| = m
                    let betas = multi_indices_of_order(m);
                    let mut refd: Vec<[C64; 3]> = Vec::with_capacity(betas.len());
                    for beta in &betas {
                        let mut acc = [ZERO_C; 3];
                        for (i, &g) in dofs.iter().enumerate() {
                            if coeffs[g] == ZERO_C {
                                continue;
                            }
                            let d = basis.derivative(i, xh, *beta);
                            for (c, v) in d.iter().enumerate() {
                                acc[c] += coeffs[g] * v;
                            }
                        }
                        refd.push(acc);
                    }
                    for alpha in multi_indices_of_order(m) {
                        let dirs: Vec<usize> = (0..3).flat_map(|a| std::iter::repeat_n(a, alpha[a])).collect();
                        let mut phys = [ZERO_C; 3];
                        // ∂/∂x_a = Σ_b B⁻¹[b][a] ∂/∂x̂_b, expanded over all index sequences
                        for seq in 0..3usize.pow(m as u32) {
                            let mut factor = 1.0;
                            let mut beta = [0usize; 3];
                            let mut code = seq;
                            for &a in &dirs {
                                let b = code % 3;
                                code /= 3;
                                factor *= binv[b][a];
                                beta[b] += 1;
                            }
                            if factor == 0.0 {
                                continue;
                            }
                            let idx = betas.iter().position(|x| *x == beta).unwrap();
                            for c in 0..3 {
                                phys[c] += refd[idx][c] * factor;
                            }
                        }
                        let v = push_forward(family, map, phys);
                        s += w * map.det.abs() * k.powi(-2 * m as i32) * c_norm_sqr(&v);
                    }
                }
            }
            s
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(total.sqrt())
}

fn push_forward(family: Family, map: &crate::mesh::ElementMap, v: [C64; 3]) -> CVec3 {
    let mut out = [ZERO_C; 3];
    match family {
        Family::Nedelec1 | Family::Nedelec2 => {
            for r in 0..3 {
                for c in 0..3 {
                    out[r] += v[c] * map.inv_t[r][c];
                }
            }
        }
        Family::RaviartThomas => {
            for r in 0..3 {
                for c in 0..3 {
                    out[r] += v[c] * (map.b[r][c] / map.det);
                }
            }
        }
        Family::Lagrange => out[0] = v[0],
    }
    out
}

/// Absolute and relative errors of a discrete solution against a closed-form
/// field, with the norms of the reference field.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub k: f64,
    pub h: f64,
    pub p: usize,
    pub dofs: usize,
    pub err_l2: f64,
    pub err_curl_k: f64,
    pub err_hk_curl: f64,
    pub norm_l2: f64,
    pub norm_curl_k: f64,
    pub norm_hk_curl: f64,
    pub rel_l2: f64,
    pub rel_curl_k: f64,
    pub rel_hk_curl: f64,
    /// Set when a reference norm vanishes; the corresponding relative
    /// error then holds the absolute error.
    pub zero_denominator: bool,
}

impl ErrorReport {
    fn from_sums(space: &FeSpace, k: f64, e: (f64, f64), n: (f64, f64)) -> Self {
        let k2 = 1.0 / (k * k);
        let (err_l2, err_curl_k) = (e.0.sqrt(), (e.1 * k2).sqrt());
        let (norm_l2, norm_curl_k) = (n.0.sqrt(), (n.1 * k2).sqrt());
        let err_hk_curl = (e.0 + e.1 * k2).sqrt();
        let norm_hk_curl = (n.0 + n.1 * k2).sqrt();
        let mut zero = false;
        let mut rel = |a: f64, b: f64| {
            if b == 0.0 {
                zero = true;
                a
            } else {
                a / b
            }
        };
        let rel_l2 = rel(err_l2, norm_l2);
        let rel_curl_k = rel(err_curl_k, norm_curl_k);
        let rel_hk_curl = rel(err_hk_curl, norm_hk_curl);
        ErrorReport {
            k,
            h: space.mesh().h(),
            p: space.degree(),
            dofs: space.n_free(),
            err_l2,
            err_curl_k,
            err_hk_curl,
            norm_l2,
            norm_curl_k,
            norm_hk_curl,
            rel_l2,
            rel_curl_k,
            rel_hk_curl,
            zero_denominator: zero,
        }
    }
}

type Field<'a> = &'a (dyn Fn(Vec3) -> CVec3 + Sync);

fn error_sums(
    space: &FeSpace,
    quad: &ElementQuadrature,
    exact: Field,
    curl_exact: Field,
    local: &(dyn Fn(usize) -> Result<(Vec<CVec3>, Vec<CVec3>)> + Sync),
) -> Result<((f64, f64), (f64, f64))> {
    let parts: Vec<((f64, f64), (f64, f64))> = (0..space.mesh().n_tets())
        .into_par_iter()
        .map(|t| {
            let map = space.element_map(t);
            let (vals, ders) = local(t)?;
            let mut e = (0.0, 0.0);
            let mut n = (0.0, 0.0);
            for (q, (&xh, &w)) in quad.rule.points.iter().zip(&quad.rule.weights).enumerate() {
                let x = map.map(xh);
                let (u, cu) = (exact(x), curl_exact(x));
                let wq = w * map.det.abs();
                let du: CVec3 = std::array::from_fn(|c| u[c] - vals[q][c]);
                let dc: CVec3 = std::array::from_fn(|c| cu[c] - ders[q][c]);
                e.0 += wq * c_norm_sqr(&du);
                e.1 += wq * c_norm_sqr(&dc);
                n.0 += wq * c_norm_sqr(&u);
                n.1 += wq * c_norm_sqr(&cu);
            }
            Ok((e, n))
        })
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().fold(((0.0, 0.0), (0.0, 0.0)), |a, b| {
        ((a.0 .0 + b.0 .0, a.0 .1 + b.0 .1), (a.1 .0 + b.1 .0, a.1 .1 + b.1 .1))
    }))
}

/// Errors of the FE function `solution` (free or full coefficients) against
/// `exact` and its curl, evaluated at quadrature points of order `2p + 2`.
pub fn relative_error(
    space: &FeSpace,
    solution: &[C64],
    exact: Field,
    curl_exact: Field,
    k: f64,
) -> Result<ErrorReport> {
    check_k(k)?;
    let coeffs = full_coefficients(space, solution)?;
    let quad = ElementQuadrature::standard(space)?;
    let local = |t: usize| Ok(space.eval_function(t, &coeffs, &quad.table));
    let (e, n) = error_sums(space, &quad, exact, curl_exact, &local)?;
    Ok(ErrorReport::from_sums(space, k, e, n))
}

/// Error of the canonical interpolant, computed element by element from
/// local interpolants without forming a global vector.
pub fn interpolation_error(space: &FeSpace, exact: Field, curl_exact: Field, k: f64) -> Result<ErrorReport> {
    check_k(k)?;
    let quad = ElementQuadrature::standard(space)?;
    let local = |t: usize| {
        let c = space.element_interpolant(t, exact)?;
        let phys = space.physical_table(t, &quad.table);
        let mut vals = vec![[ZERO_C; 3]; phys.n_points];
        let mut ders = vec![[ZERO_C; 3]; phys.n_points];
        for q in 0..phys.n_points {
            for (i, ci) in c.iter().enumerate() {
                let (v, d) = (phys.value(q, i), phys.deriv(q, i));
                for a in 0..3 {
                    vals[q][a] += ci * v[a];
                    ders[q][a] += ci * d[a];
                }
            }
        }
        Ok((vals, ders))
    };
    let (e, n) = error_sums(space, &quad, exact, curl_exact, &local)?;
    Ok(ErrorReport::from_sums(space, k, e, n))
}

/// L² Gram matrix of the free DOFs.
pub fn l2_mass_matrix(space: &FeSpace) -> Result<SparseComplexMatrix> {
    let m = assemble_mass(space, &ConstantField::identity())?;
    let free = space.free_dofs();
    Ok(m.submatrix(free, free))
}

/// Discrete solution-operator norm and the work spent on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsolEstimate {
    pub value: f64,
    pub iterations: usize,
}

pub const CSOL_MAX_ITER: usize = 5000;

/// `max ‖E‖/‖f‖` over `P E = M f`, by power iteration on
/// `x ↦ P⁻ᴴ M P⁻¹ M x` in the `M`-inner product.
pub fn estimate_csol(system: &LinearSystem, mass: &SparseComplexMatrix, tol: f64) -> Result<CsolEstimate> {
    estimate_csol_with(&system.matrix, mass, tol, CSOL_MAX_ITER)
}

pub fn estimate_csol_with(
    matrix: &SparseComplexMatrix,
    mass: &SparseComplexMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<CsolEstimate> {
    if mass.n_rows() != matrix.n_rows() {
        return Err(Error::Dimension { expected: matrix.n_rows(), got: mass.n_rows() });
    }
    let fac = factorize(matrix)?;
    let op = |x: &[C64]| -> Result<Vec<C64>> {
        let e = solve(&fac, &mass.mul_vec(x))?;
        solve_adjoint(&fac, &mass.mul_vec(&e))
    };
    // Rayleigh quotients approximate σ².
    let (sigma2, iterations) = largest_generalized_singular_value(&op, mass, 2.0 * tol, max_iter)?;
    Ok(CsolEstimate { value: sigma2.max(0.0).sqrt(), iterations })
}

/// Divergence-conformity factor and the sizes of the problem behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaDvReport {
    pub value: f64,
    /// Dimension of the discretely ε-divergence-free subspace.
    pub dim_w: usize,
    pub n_nedelec: usize,
    pub n_lagrange: usize,
    pub n_enriched: usize,
}

/// Dense pieces of the γ_dv eigenproblem on the free Nédélec DOFs, exposed
/// for cross-checks.
pub struct GammaDvProblem {
    /// Orthonormal basis of `W_h` (columns).
    pub w: Mat<C64>,
    /// `‖Π₀ w‖²` as a Hermitian form on the `W_h` coordinates.
    pub numerator: Mat<C64>,
    /// `‖w‖²_H` as a Hermitian form on the `W_h` coordinates.
    pub denominator: Mat<C64>,
    pub report: GammaDvReport,
}

const CHUNK: usize = 64;

fn dense(a: &SparseComplexMatrix) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.n_rows(), a.n_cols());
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            out[(i, j)] = v;
        }
    }
    out
}

fn sparse_times_dense(a: &SparseComplexMatrix, x: faer::MatRef<'_, C64>) -> Mat<C64> {
    let mut out = Mat::<C64>::zeros(a.n_rows(), x.ncols());
    for j in 0..x.ncols() {
        let col: Vec<C64> = (0..x.nrows()).map(|i| x[(i, j)]).collect();
        let y = a.mul_vec(&col);
        for (i, v) in y.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

struct RealPartInverse(SharedField);

impl CoefficientField for RealPartInverse {
    fn eval(&self, x: Vec3, region: i32) -> Result<crate::linalg::CMat3> {
        let m = self.0.eval(x, region)?;
        let re: [[f64; 3]; 3] = std::array::from_fn(|r| std::array::from_fn(|c| m[r][c].re));
        cinverse(&cmat_from_real(&re))
            .ok_or_else(|| Error::Coefficient { point: x, message: "Re mu is singular".into() })
    }

    fn is_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn is_real_symmetric(&self) -> bool {
        self.0.is_symmetric()
    }

    fn description(&self) -> String {
        format!("(Re {})^-1", self.0.description())
    }
}

/// Assembles the dense γ_dv eigenproblem for Nédélec (first kind) degree
/// `p` with PEC conditions on `mesh`; Π₀ is computed in the Lagrange space
/// of degree `p + enrichment`.
pub fn gamma_dv_problem(
    mesh: &Arc<Mesh>,
    p: usize,
    eps: &SharedField,
    mu: &SharedField,
    k: f64,
    enrichment: usize,
) -> Result<GammaDvProblem> {
    check_k(k)?;
    if enrichment < 1 {
        return Err(Error::Argument("enrichment must be at least 1".into()));
    }
    mesh.check_ball_topology()?;
    faer::set_global_parallelism(faer::Par::Seq);
    let ned = build_fe_space(mesh.clone(), Family::Nedelec1, p, BoundaryCondition::Pec)?;
    let lag = build_fe_space(mesh.clone(), Family::Lagrange, p, BoundaryCondition::Pec)?;
    let rich = build_fe_space(mesh.clone(), Family::Lagrange, p + enrichment, BoundaryCondition::Pec)?;
    let (nf, lf, rf) = (ned.free_dofs(), lag.free_dofs(), rich.free_dofs());
    let (n, nl, nr) = (nf.len(), lf.len(), rf.len());

    // constraint C = Gᵀ M_ε on free DOFs; W_h = null(C)
    let g = build_discrete_gradient(&lag, &ned)?.to_complex().submatrix(nf, lf);
    let m_eps = assemble_mass(&ned, eps.as_ref())?.submatrix(nf, nf);
    let ch = sparse_times_dense(&m_eps.adjoint(), dense(&g).as_ref());
    let w = if nl == 0 {
        Mat::<C64>::identity(n, n)
    } else {
        let qr = ch.qr();
        let r = qr.thin_R();
        let scale = (0..nl).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
        if (0..nl).any(|i| r[(i, i)].norm() <= 1e-12 * scale) {
            return Err(Error::Topology("discrete gradient is rank deficient on the free DOFs".into()));
        }
        qr.compute_Q().subcols(nl, n - nl).to_owned()
    };
    let m = w.ncols();

    // denominator: k⁻² ((Re μ)⁻¹ curl u, curl v) + (u, v)
    let s = assemble_curlcurl(&ned, &RealPartInverse(mu.clone()), k)?
        .linear_combination(C64::new(1.0, 0.0), &assemble_mass(&ned, &ConstantField::identity())?, C64::new(1.0, 0.0))?
        .submatrix(nf, nf);
    let sw = sparse_times_dense(&s, w.as_ref());
    let mut denominator = w.adjoint() * &sw;
    drop(sw);
    hermitize(&mut denominator);

    // numerator: ‖∇φ‖² with (ε∇φ, ∇ψ) = (εw, ∇ψ) in the enriched space
    let kmat = assemble_stiffness(&rich, eps.as_ref())?.submatrix(rf, rf);
    let k_id = assemble_stiffness(&rich, &ConstantField::identity())?.submatrix(rf, rf);
    let b = assemble_gradient_coupling(&rich, &ned, eps.as_ref())?.submatrix(rf, nf);
    let bh = b.adjoint();
    let fac = factorize(&kmat)?;
    let mut numerator = Mat::<C64>::zeros(m, m);
    let mut start = 0;
    while start < m {
        let len = CHUNK.min(m - start);
        let mut y = sparse_times_dense(&b, w.subcols(start, len));
        solve_columns(&fac, y.as_mut(), false)?;
        let mut z = sparse_times_dense(&k_id, y.as_ref());
        solve_columns(&fac, z.as_mut(), true)?;
        let bz = sparse_times_dense(&bh, z.as_ref());
        let block = w.adjoint() * &bz;
        numerator.subcols_mut(start, len).copy_from(&block);
        start += len;
    }
    hermitize(&mut numerator);
    Ok(GammaDvProblem {
        w,
        numerator,
        denominator,
        report: GammaDvReport { value: f64::NAN, dim_w: m, n_nedelec: n, n_lagrange: nl, n_enriched: nr },
    })
}

fn hermitize(a: &mut Mat<C64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in j..n {
            let v = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = v;
            a[(j, i)] = v.conj();
        }
    }
}

/// Largest generalized eigenvalue of the Hermitian pencil `(a, b)` with `b`
/// positive definite.
pub fn largest_generalized_eigenvalue(a: &Mat<C64>, b: &Mat<C64>) -> Result<f64> {
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    let llt = b.llt(Side::Lower).map_err(|_| Error::Numeric("denominator form is not positive definite".into()))?;
    let l = llt.L();
    let mut x = a.to_owned();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut h = x.adjoint().to_owned();
    l.solve_lower_triangular_in_place(h.as_mut());
    hermitize(&mut h);
    let ev = h
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numeric(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(ev.last().copied().unwrap_or(0.0))
}

/// `γ_dv = sup ‖Π₀ w‖ / ‖w‖_H` over discretely ε-divergence-free `w`.
pub fn estimate_gamma_dv(
    mesh: &Arc<Mesh>,
    p: usize,
    eps: &SharedField,
    mu: &SharedField,
    k: f64,
    enrichment: usize,
) -> Result<GammaDvReport> {
    let prob = gamma_dv_problem(mesh, p, eps, mu, k, enrichment)?;
    let lambda = largest_generalized_eigenvalue(&prob.numerator, &prob.denominator)?;
    Ok(GammaDvReport { value: lambda.max(0.0).sqrt(), ..prob.report })
}

/// γ_dv of the adjoint problem (coefficients replaced by their adjoints).
pub fn estimate_gamma_dv_adjoint(
    mesh: &Arc<Mesh>,
    p: usize,
    eps: &SharedField,
    mu: &SharedField,
    k: f64,
    enrichment: usize,
) -> Result<GammaDvReport> {
    let eps_h: SharedField = Arc::new(crate::coefficients::AdjointField(eps.clone()));
    let mu_h: SharedField = Arc::new(crate::coefficients::AdjointField(mu.clone()));
    estimate_gamma_dv(mesh, p, &eps_h, &mu_h, k, enrichment)
}
