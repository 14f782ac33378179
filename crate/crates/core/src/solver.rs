//! Sparse direct solves and the power iteration used for operator norms.

use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO_C};
use crate::sparse::SparseComplexMatrix;
use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, MatMut, Par};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Factorizations with a reciprocal condition estimate below this are
/// reported as singular.
pub const SINGULAR_RCOND: f64 = 1e-14;

/// Seed of the power-iteration start vector.
pub const POWER_SEED: u64 = 0x5eed_c501;

/// Sparse LU factors with row pivoting and a fill-reducing column ordering.
pub struct Factorization {
    lu: Lu<usize, C64>,
    n: usize,
    norm1: f64,
    rcond: f64,
}

impl std::fmt::Debug for Factorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Factorization").field("n", &self.n).field("rcond", &self.rcond).finish()
    }
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Estimate of `1 / (‖A‖₁ ‖A⁻¹‖₁)`.
    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    fn apply(&self, b: &[C64], adjoint: bool) -> Vec<C64> {
        let mut x = b.to_vec();
        if self.n == 0 {
            return x;
        }
        let rhs = MatMut::from_column_major_slice_mut(&mut x, self.n, 1);
        faer::set_global_parallelism(Par::Seq);
        if adjoint {
            self.lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs);
        } else {
            self.lu.solve_in_place_with_conj(Conj::No, rhs);
        }
        x
    }
}

fn to_faer(a: &SparseComplexMatrix) -> Result<SparseColMat<usize, C64>> {
    // CSR of Aᵀ is CSC of A.
    let t = a.transpose();
    let symbolic =
        SymbolicSparseColMat::new_checked(a.n_rows(), a.n_cols(), t.row_ptr().to_vec(), None, t.col_idx().to_vec());
    Ok(SparseColMat::new(symbolic, t.values().to_vec()))
}

fn norm1(a: &SparseComplexMatrix) -> f64 {
    let mut col = vec![0.0; a.n_cols()];
    for (&j, v) in a.col_idx().iter().zip(a.values()) {
        col[j] += v.norm();
    }
    col.into_iter().fold(0.0, f64::max)
}

fn finite(x: &[C64]) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Hager–Higham estimate of `‖A⁻¹‖₁`; `None` when a solve is not finite.
fn inverse_norm1(fac: &Factorization) -> Option<f64> {
    let n = fac.n;
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    let mut last_j = usize::MAX;
    for _ in 0..5 {
        let y = fac.apply(&x, false);
        if !finite(&y) {
            return None;
        }
        let new_est: f64 = y.iter().map(|z| z.norm()).sum();
        if new_est <= est && last_j != usize::MAX {
            break;
        }
        est = new_est;
        let xi: Vec<C64> = y.iter().map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }).collect();
        let z = fac.apply(&xi, true);
        if !finite(&z) {
            return None;
        }
        let (j, zmax) = z.iter().enumerate().fold(
            (0, -1.0),
            |(bj, bv), (i, v)| {
                if v.norm() > bv {
                    (i, v.norm())
                } else {
                    (bj, bv)
                }
            },
        );
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if zmax <= ztx || j == last_j {
            break;
        }
        last_j = j;
        x = vec![ZERO_C; n];
        x[j] = C64::new(1.0, 0.0);
    }
    // Alternating-sign vector guards against underestimates.
    let alt: Vec<C64> = (0..n)
        .map(|i| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::new(s * (1.0 + i as f64 / (n.max(2) - 1) as f64), 0.0)
        })
        .collect();
    let y = fac.apply(&alt, false);
    if !finite(&y) {
        return None;
    }
    let alt_est = 2.0 * y.iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
    Some(est.max(alt_est))
}

/// LU factorization of a square sparse complex matrix. Structural zero
/// pivots are reported with their index; numerically singular matrices
/// are detected through the condition estimate.
pub fn factorize(a: &SparseComplexMatrix) -> Result<Factorization> {
    if a.n_rows() != a.n_cols() {
        return Err(Error::Dimension { expected: a.n_rows(), got: a.n_cols() });
    }
    let n = a.n_rows();
    faer::set_global_parallelism(Par::Seq);
    let mat = to_faer(a)?;
    let lu = mat.sp_lu().map_err(|e| match e {
        faer::sparse::linalg::LuError::SymbolicSingular { index } => Error::Singular { pivot: Some(index), rcond: 0.0 },
        faer::sparse::linalg::LuError::Generic(g) => Error::Numeric(format!("sparse LU failed: {g:?}")),
    })?;
    let norm1 = norm1(a);
    let mut fac = Factorization { lu, n, norm1, rcond: 1.0 };
    if n == 0 {
        return Ok(fac);
    }
    if norm1 == 0.0 {
        return Err(Error::Singular { pivot: Some(0), rcond: 0.0 });
    }
    let rcond = match inverse_norm1(&fac) {
        Some(inv) if inv > 0.0 => 1.0 / (norm1 * inv),
        _ => 0.0,
    };
    fac.rcond = rcond;
    if !(rcond >= SINGULAR_RCOND) {
        return Err(Error::Singular { pivot: None, rcond });
    }
    Ok(fac)
}

fn check_dim(fac: &Factorization, b: &[C64]) -> Result<()> {
    if b.len() != fac.n {
        return Err(Error::Dimension { expected: fac.n, got: b.len() });
    }
    Ok(())
}

/// Solves `A x = b`.
pub fn solve(fac: &Factorization, b: &[C64]) -> Result<Vec<C64>> {
    check_dim(fac, b)?;
    let x = fac.apply(b, false);
    if !finite(&x) {
        return Err(Error::Singular { pivot: None, rcond: fac.rcond });
    }
    Ok(x)
}

/// Solves `Aᴴ x = b`.
pub fn solve_adjoint(fac: &Factorization, b: &[C64]) -> Result<Vec<C64>> {
    check_dim(fac, b)?;
    let x = fac.apply(b, true);
    if !finite(&x) {
        return Err(Error::Singular { pivot: None, rcond: fac.rcond });
    }
    Ok(x)
}

/// Solves `A X = B` (or `Aᴴ X = B`) for all columns of `rhs` in place.
pub fn solve_columns(fac: &Factorization, mut rhs: MatMut<'_, C64>, adjoint: bool) -> Result<()> {
    if rhs.nrows() != fac.n {
        return Err(Error::Dimension { expected: fac.n, got: rhs.nrows() });
    }
    if fac.n == 0 || rhs.ncols() == 0 {
        return Ok(());
    }
    faer::set_global_parallelism(Par::Seq);
    if adjoint {
        fac.lu.solve_transpose_in_place_with_conj(Conj::Yes, rhs.as_mut());
    } else {
        fac.lu.solve_in_place_with_conj(Conj::No, rhs.as_mut());
    }
    for j in 0..rhs.ncols() {
        for i in 0..rhs.nrows() {
            let z = rhs[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::Singular { pivot: None, rcond: fac.rcond });
            }
        }
    }
    Ok(())
}

fn m_inner(m: &SparseComplexMatrix, x: &[C64], y: &[C64]) -> C64 {
    let my: Vec<C64> = m.mul_vec(y);
    x.iter().zip(&my).map(|(a, b)| a.conj() * b).sum()
}

/// Largest eigenvalue of an operator that is self-adjoint and positive
/// semidefinite in the `m`-inner product, by power iteration with a
/// Rayleigh-quotient stagnation test. Returns `(σ, iterations)`.
///
/// For `apply_op(x) = S* S x` this is the square of the largest singular
/// value of `S` with respect to `m`.
pub fn largest_generalized_singular_value(
    apply_op: &dyn Fn(&[C64]) -> Result<Vec<C64>>,
    m: &SparseComplexMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, usize)> {
    let n = m.n_rows();
    if m.n_cols() != n {
        return Err(Error::Dimension { expected: n, got: m.n_cols() });
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::Argument("tolerance must be positive and max_iter at least 1".into()));
    }
    if n == 0 {
        return Ok((0.0, 0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(POWER_SEED);
    let mut x: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let normalize = |v: &mut Vec<C64>| -> Result<()> {
        let nrm = m_inner(m, v, v).re.sqrt();
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(Error::Numeric("power iterate has zero or non-finite M-norm".into()));
        }
        v.iter_mut().for_each(|z| *z /= nrm);
        Ok(())
    };
    normalize(&mut x)?;
    let mut prev = f64::NAN;
    let mut gap = f64::INFINITY;
    for it in 1..=max_iter {
        let y = apply_op(&x)?;
        if y.len() != n {
            return Err(Error::Dimension { expected: n, got: y.len() });
        }
        let rho = m_inner(m, &x, &y).re;
        if !rho.is_finite() {
            return Err(Error::Numeric("non-finite Rayleigh quotient".into()));
        }
        if rho == 0.0 && y.iter().all(|z| *z == ZERO_C) {
            return Ok((0.0, it));
        }
        gap = (rho - prev).abs();
        if gap <= tol * rho.abs() {
            return Ok((rho, it));
        }
        prev = rho;
        x = y;
        normalize(&mut x)?;
    }
    Err(Error::NoConvergence { iterations: max_iter, gap })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_and_permutation() {
        let i = SparseComplexMatrix::identity(4, c(1.0));
        let f = factorize(&i).unwrap();
        let b = vec![c(1.0), c(2.0), C64::new(0.0, 3.0), c(-4.0)];
        assert_eq!(solve(&f, &b).unwrap(), b);
        let p = SparseComplexMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (1, 0, c(1.0))]).unwrap();
        let f = factorize(&p).unwrap();
        let x = solve(&f, &[c(1.0), c(2.0)]).unwrap();
        assert_eq!(x, vec![c(2.0), c(1.0)]);
    }

    #[test]
    fn singular_reported() {
        let a = SparseComplexMatrix::from_triplets(2, 2, vec![(0, 0, c(1.0)), (1, 0, c(1.0))]).unwrap();
        assert!(matches!(factorize(&a), Err(Error::Singular { .. })));
        let a = SparseComplexMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, c(1.0)), (0, 1, c(1.0)), (1, 0, c(1.0)), (1, 1, c(1.0))],
        )
        .unwrap();
        assert!(matches!(factorize(&a), Err(Error::Singular { .. })));
    }

    #[test]
    fn dimension_checked() {
        let f = factorize(&SparseComplexMatrix::identity(3, c(1.0))).unwrap();
        assert!(matches!(solve(&f, &[c(1.0)]), Err(Error::Dimension { .. })));
        assert!(matches!(solve_adjoint(&f, &[c(1.0)]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn power_iteration_diagonal() {
        let m = SparseComplexMatrix::identity(3, c(1.0));
        let (s, it) = largest_generalized_singular_value(&|x| Ok(x.to_vec()), &m, 1e-12, 10).unwrap();
        assert!((s - 1.0).abs() < 1e-14 && it <= 2);
        let d = [1.0, 2.0, 3.0];
        let op = |x: &[C64]| Ok(x.iter().zip(d).map(|(v, s)| v * s).collect());
        let (s, _) = largest_generalized_singular_value(&op, &m, 1e-13, 500).unwrap();
        assert!((s - 3.0).abs() < 1e-9);
    }

    #[test]
    fn power_iteration_reports_no_convergence() {
        let m = SparseComplexMatrix::identity(2, c(1.0));
        let op = |x: &[C64]| Ok(vec![x[0], x[1] * 0.999]);
        assert!(matches!(
            largest_generalized_singular_value(&op, &m, 1e-15, 3),
            Err(Error::NoConvergence { iterations: 3, .. })
        ));
    }
}
