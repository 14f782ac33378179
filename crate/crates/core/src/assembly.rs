//! Galerkin matrices and load vectors.
//!
//! Matrices returned by `assemble_curlcurl` and `assemble_mass` act on all
//! DOFs of the space; `LinearSystem` holds the free-DOF restriction.

use crate::coefficients::CoefficientField;
use crate::error::{Error, Result};
use crate::linalg::{cmat_vec, cvec_from_real, CVec3, Vec3, C64, ZERO_C};
use crate::reference::quadrature::{build_quadrature, QuadratureRule};
use crate::reference::{BasisTable, Family};
use crate::spaces::{FeSpace, PhysicalTable};
use rayon::prelude::*;

pub use crate::sparse::{SparseComplexMatrix, SparseRealMatrix};

/// Quadrature rule and reference basis table used for every element.
pub struct ElementQuadrature {
    pub rule: QuadratureRule,
    pub table: BasisTable,
}

impl ElementQuadrature {
    pub fn new(space: &FeSpace, order: usize) -> Result<Self> {
        let rule = build_quadrature(order)?;
        let table = space.basis().evaluate(&rule.points)?;
        Ok(ElementQuadrature { rule, table })
    }

    /// Order `2p + 2`.
    pub fn standard(space: &FeSpace) -> Result<Self> {
        Self::new(space, 2 * space.degree() + 2)
    }
}

#[derive(Clone, Copy)]
enum Form {
    CurlCurl,
    Mass,
}

fn element_block(
    space: &FeSpace,
    quad: &ElementQuadrature,
    t: usize,
    form: Form,
    coef: &dyn CoefficientField,
    scale: f64,
) -> Result<Vec<C64>> {
    let map = space.element_map(t);
    let phys: PhysicalTable = space.physical_table(t, &quad.table);
    let n = phys.n_basis;
    let region = space.mesh().region(t);
    let symmetric = coef.is_symmetric();
    let mut block = vec![ZERO_C; n * n];
    for (q, (&xh, &w)) in quad.rule.points.iter().zip(&quad.rule.weights).enumerate() {
        let x = map.map(xh);
        let m = coef.eval(x, region).map_err(|e| Error::Evaluation { element: t, message: e.to_string() })?;
        let wq = w * map.det.abs() * scale;
        let vec_of = |i: usize| match form {
            Form::CurlCurl => phys.deriv(q, i),
            Form::Mass => phys.value(q, i),
        };
        for j in 0..n {
            let mj = cmat_vec(&m, &cvec_from_real(vec_of(j)));
            let i_start = if symmetric { j } else { 0 };
            for i in i_start..n {
                let vi = vec_of(i);
                let v = mj[0] * vi[0] + mj[1] * vi[1] + mj[2] * vi[2];
                block[i * n + j] += v * wq;
            }
        }
    }
    if symmetric {
        for j in 0..n {
            for i in j + 1..n {
                block[j * n + i] = block[i * n + j];
            }
        }
    }
    Ok(block)
}

fn assemble_form(space: &FeSpace, form: Form, coef: &dyn CoefficientField, scale: f64) -> Result<SparseComplexMatrix> {
    let quad = ElementQuadrature::standard(space)?;
    let n_tets = space.mesh().n_tets();
    let blocks: Vec<Vec<C64>> = (0..n_tets)
        .into_par_iter()
        .map(|t| element_block(space, &quad, t, form, coef, scale))
        .collect::<Result<_>>()?;
    let n = space.n_local();
    let mut triplets = Vec::with_capacity(n_tets * n * n);
    for (t, block) in blocks.iter().enumerate() {
        let dofs = space.local_dofs(t);
        for (i, &gi) in dofs.iter().enumerate() {
            for (j, &gj) in dofs.iter().enumerate() {
                triplets.push((gi, gj, block[i * n + j]));
            }
        }
    }
    SparseComplexMatrix::from_triplets(space.n_dofs(), space.n_dofs(), triplets)
}

/// `A_D[i, j] = k⁻² ∫ μ⁻¹ curl φ_j · curl φ_i` over all DOFs.
pub fn assemble_curlcurl(space: &FeSpace, mu_inv: &dyn CoefficientField, k: f64) -> Result<SparseComplexMatrix> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Argument(format!("wavenumber must be positive, got {k}")));
    }
    if !space.family().is_curl_conforming() {
        return Err(Error::Argument("curl-curl form needs a Nédélec space".into()));
    }
    assemble_form(space, Form::CurlCurl, mu_inv, 1.0 / (k * k))
}

/// `M[i, j] = ∫ weight φ_j · φ_i` over all DOFs.
pub fn assemble_mass(space: &FeSpace, weight: &dyn CoefficientField) -> Result<SparseComplexMatrix> {
    assemble_form(space, Form::Mass, weight, 1.0)
}

/// `K[i, j] = ∫ weight ∇ψ_j · ∇ψ_i` for a Lagrange space, over all DOFs.
pub fn assemble_stiffness(space: &FeSpace, weight: &dyn CoefficientField) -> Result<SparseComplexMatrix> {
    if space.family() != Family::Lagrange {
        return Err(Error::Argument("stiffness form needs a Lagrange space".into()));
    }
    assemble_form(space, Form::CurlCurl, weight, 1.0)
}

/// `B[i, j] = ∫ weight φ_j · ∇ψ_i` with φ from a Nédélec space and ψ from a
/// Lagrange space on the same mesh, over all DOFs of both.
pub fn assemble_gradient_coupling(
    lagrange: &FeSpace,
    nedelec: &FeSpace,
    weight: &dyn CoefficientField,
) -> Result<SparseComplexMatrix> {
    if lagrange.family() != Family::Lagrange || !nedelec.family().is_curl_conforming() {
        return Err(Error::Argument("coupling needs a Lagrange and a Nédélec space".into()));
    }
    if !std::sync::Arc::ptr_eq(lagrange.mesh(), nedelec.mesh()) {
        return Err(Error::Argument("spaces live on different meshes".into()));
    }
    let order = 2 * lagrange.degree().max(nedelec.degree()) + 2;
    let lq = ElementQuadrature::new(lagrange, order)?;
    let nq = ElementQuadrature::new(nedelec, order)?;
    let n_tets = lagrange.mesh().n_tets();
    let blocks: Vec<Vec<C64>> = (0..n_tets)
        .into_par_iter()
        .map(|t| {
            let map = nedelec.element_map(t);
            let region = nedelec.mesh().region(t);
            let grads = lagrange.physical_table(t, &lq.table);
            let vals = nedelec.physical_table(t, &nq.table);
            let (nl, nn) = (grads.n_basis, vals.n_basis);
            let mut block = vec![ZERO_C; nl * nn];
            for (q, (&xh, &w)) in nq.rule.points.iter().zip(&nq.rule.weights).enumerate() {
                let x = map.map(xh);
                let m = weight.eval(x, region).map_err(|e| Error::Evaluation { element: t, message: e.to_string() })?;
                let wq = w * map.det.abs();
                for j in 0..nn {
                    let mj = cmat_vec(&m, &cvec_from_real(vals.value(q, j)));
                    for i in 0..nl {
                        let g = grads.deriv(q, i);
                        block[i * nn + j] += (mj[0] * g[0] + mj[1] * g[1] + mj[2] * g[2]) * wq;
                    }
                }
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    let mut triplets = Vec::new();
    for (t, block) in blocks.iter().enumerate() {
        let (ld, nd) = (lagrange.local_dofs(t), nedelec.local_dofs(t));
        for (i, &gi) in ld.iter().enumerate() {
            for (j, &gj) in nd.iter().enumerate() {
                triplets.push((gi, gj, block[i * nd.len() + j]));
            }
        }
    }
    SparseComplexMatrix::from_triplets(lagrange.n_dofs(), nedelec.n_dofs(), triplets)
}

/// Galerkin system `P = A_D − A_E` on the free DOFs.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: SparseComplexMatrix,
    pub rhs: Vec<C64>,
    pub k: f64,
    pub forms: Vec<String>,
    pub free_dofs: Vec<usize>,
}

impl LinearSystem {
    pub fn dim(&self) -> usize {
        self.free_dofs.len()
    }
}

pub fn assemble_system(
    space: &FeSpace,
    mu_inv: &dyn CoefficientField,
    eps: &dyn CoefficientField,
    k: f64,
) -> Result<LinearSystem> {
    let a_d = assemble_curlcurl(space, mu_inv, k)?;
    let a_e = assemble_mass(space, eps)?;
    let p = a_d.linear_combination(C64::new(1.0, 0.0), &a_e, C64::new(-1.0, 0.0))?;
    let free = space.free_dofs().to_vec();
    Ok(LinearSystem {
        matrix: p.submatrix(&free, &free),
        rhs: vec![ZERO_C; free.len()],
        k,
        forms: vec![
            format!("k^-2 (mu^-1 curl u, curl v) [{}]", mu_inv.description()),
            format!("-(eps u, v) [{}]", eps.description()),
        ],
        free_dofs: free,
    })
}

fn check_finite(v: &CVec3, t: usize, x: Vec3) -> Result<()> {
    if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Evaluation { element: t, message: format!("non-finite load at {x:?}") });
    }
    Ok(())
}

/// `rhs[i] = ∫ f · φ_i` over all DOFs.
pub fn assemble_load_full(space: &FeSpace, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
    let quad = ElementQuadrature::standard(space)?;
    gather(space, |t| {
        let map = space.element_map(t);
        let phys = space.physical_table(t, &quad.table);
        let mut local = vec![ZERO_C; phys.n_basis];
        for (q, (&xh, &w)) in quad.rule.points.iter().zip(&quad.rule.weights).enumerate() {
            let x = map.map(xh);
            let fx = f(x);
            check_finite(&fx, t, x)?;
            let wq = w * map.det.abs();
            for (i, l) in local.iter_mut().enumerate() {
                let v = phys.value(q, i);
                *l += (fx[0] * v[0] + fx[1] * v[1] + fx[2] * v[2]) * wq;
            }
        }
        Ok(local)
    })
}

/// Load vector on the free DOFs.
pub fn assemble_load(space: &FeSpace, f: &(dyn Fn(Vec3) -> CVec3 + Sync)) -> Result<Vec<C64>> {
    Ok(space.restrict_free(&assemble_load_full(space, f)?))
}

/// Load of `f = k⁻² curl(μ⁻¹ curl E) − εE` in weak form,
/// `k⁻²(μ⁻¹ curl E, curl φ) − (εE, φ)`, on the free DOFs. Equal to
/// `(f, φ)` for every φ with vanishing tangential trace, without
/// differentiating the coefficient.
pub fn assemble_weak_load(
    space: &FeSpace,
    mu_inv: &dyn CoefficientField,
    eps: &dyn CoefficientField,
    k: f64,
    e: &(dyn Fn(Vec3) -> CVec3 + Sync),
    curl_e: &(dyn Fn(Vec3) -> CVec3 + Sync),
) -> Result<Vec<C64>> {
    let quad = ElementQuadrature::standard(space)?;
    let k2 = 1.0 / (k * k);
    let full = gather(space, |t| {
        let map = space.element_map(t);
        let region = space.mesh().region(t);
        let phys = space.physical_table(t, &quad.table);
        let mut local = vec![ZERO_C; phys.n_basis];
        for (q, (&xh, &w)) in quad.rule.points.iter().zip(&quad.rule.weights).enumerate() {
            let x = map.map(xh);
            let ev = |c: &dyn CoefficientField| {
                c.eval(x, region).map_err(|err| Error::Evaluation { element: t, message: err.to_string() })
            };
            let flux = cmat_vec(&ev(mu_inv)?, &curl_e(x));
            let de = cmat_vec(&ev(eps)?, &e(x));
            check_finite(&flux, t, x)?;
            check_finite(&de, t, x)?;
            let wq = w * map.det.abs();
            for (i, l) in local.iter_mut().enumerate() {
                let c = phys.deriv(q, i);
                let v = phys.value(q, i);
                let a = flux[0] * c[0] + flux[1] * c[1] + flux[2] * c[2];
                let b = de[0] * v[0] + de[1] * v[1] + de[2] * v[2];
                *l += (a * k2 - b) * wq;
            }
        }
        Ok(local)
    })?;
    Ok(space.restrict_free(&full))
}

fn gather(space: &FeSpace, local: impl Fn(usize) -> Result<Vec<C64>> + Sync + Send) -> Result<Vec<C64>> {
    let locals: Vec<Vec<C64>> = (0..space.mesh().n_tets()).into_par_iter().map(&local).collect::<Result<_>>()?;
    let mut out = vec![ZERO_C; space.n_dofs()];
    for (t, l) in locals.iter().enumerate() {
        for (i, &g) in space.local_dofs(t).iter().enumerate() {
            out[g] += l[i];
        }
    }
    Ok(out)
}
