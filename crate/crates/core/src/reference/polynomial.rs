//! Monomial bases in three variables.

/// All monomials x^a y^b z^c with a + b + c ≤ degree, ordered by total degree
/// and then lexicographically (descending x exponent).
#[derive(Debug, Clone)]
pub struct MonomialSet {
    degree: usize,
    exponents: Vec<[usize; 3]>,
}

impl MonomialSet {
    pub fn new(degree: usize) -> Self {
        let mut exponents = Vec::new();
        for d in 0..=degree {
            exponents.extend(homogeneous_exponents(d));
        }
        Self { degree, exponents }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    pub fn exponents(&self) -> &[[usize; 3]] {
        &self.exponents
    }

    pub fn index_of(&self, e: [usize; 3]) -> Option<usize> {
        self.exponents.iter().position(|&x| x == e)
    }

    /// Values of every monomial at `x`.
    pub fn eval(&self, x: [f64; 3]) -> Vec<f64> {
        let pw = powers(x, self.degree);
        self.exponents.iter().map(|e| pw[0][e[0]] * pw[1][e[1]] * pw[2][e[2]]).collect()
    }

    /// Partial derivative ∂^α of every monomial at `x`.
    pub fn eval_derivative(&self, x: [f64; 3], alpha: [usize; 3]) -> Vec<f64> {
        let pw = powers(x, self.degree);
        self.exponents
            .iter()
            .map(|e| {
                let mut v = 1.0;
                for d in 0..3 {
                    if e[d] < alpha[d] {
                        return 0.0;
                    }
                    v *= falling_factorial(e[d], alpha[d]) * pw[d][e[d] - alpha[d]];
                }
                v
            })
            .collect()
    }

    /// Gradients of every monomial at `x`.
    pub fn eval_grad(&self, x: [f64; 3]) -> Vec<[f64; 3]> {
        let gx = self.eval_derivative(x, [1, 0, 0]);
        let gy = self.eval_derivative(x, [0, 1, 0]);
        let gz = self.eval_derivative(x, [0, 0, 1]);
        (0..self.len()).map(|i| [gx[i], gy[i], gz[i]]).collect()
    }
}

/// Exponents of the homogeneous monomials of total degree `d`.
pub fn homogeneous_exponents(d: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for a in (0..=d).rev() {
        for b in (0..=(d - a)).rev() {
            out.push([a, b, d - a - b]);
        }
    }
    out
}

/// Multi-indices α with |α| = j, one per unordered derivative.
pub fn multi_indices(j: usize) -> Vec<[usize; 3]> {
    homogeneous_exponents(j)
}

fn powers(x: [f64; 3], degree: usize) -> [Vec<f64>; 3] {
    let mut pw = [vec![1.0; degree + 1], vec![1.0; degree + 1], vec![1.0; degree + 1]];
    for d in 0..3 {
        for i in 1..=degree {
            pw[d][i] = pw[d][i - 1] * x[d];
        }
    }
    pw
}

fn falling_factorial(n: usize, k: usize) -> f64 {
    ((n - k + 1)..=n).map(|v| v as f64).product()
}

/// Legendre polynomial P_n(t) on [-1, 1] by the three-term recurrence.
pub fn legendre(n: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Number of polynomials of total degree ≤ p in `dim` variables (0 when p < 0).
pub fn dim_polynomials(p: isize, dim: usize) -> usize {
    if p < 0 {
        return 0;
    }
    let p = p as usize;
    match dim {
        1 => p + 1,
        2 => (p + 1) * (p + 2) / 2,
        3 => (p + 1) * (p + 2) * (p + 3) / 6,
        _ => unreachable!("dimension {dim}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_count_matches_formula() {
        for d in 0..6 {
            assert_eq!(MonomialSet::new(d).len(), dim_polynomials(d as isize, 3));
        }
    }

    #[test]
    fn derivative_of_cubic() {
        let m = MonomialSet::new(3);
        let i = m.index_of([2, 1, 0]).unwrap();
        let x = [0.3, 0.7, 0.1];
        let d = m.eval_derivative(x, [1, 1, 0]);
        assert!((d[i] - 2.0 * 0.3).abs() < 1e-15);
    }

    #[test]
    fn legendre_values() {
        assert!((legendre(2, 0.5) - (-0.125)).abs() < 1e-15);
        assert!((legendre(3, 1.0) - 1.0).abs() < 1e-15);
    }
}
