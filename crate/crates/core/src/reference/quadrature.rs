//! Quadrature on the unit interval, the unit triangle and the reference tetrahedron.
//!
//! Orders 1 and 2 use the classical symmetric tetrahedral rules; every other
//! order uses a collapsed-coordinate (Duffy) product of Gauss–Jacobi rules,
//! which has strictly positive weights and is exact for total degree ≤ order.

use crate::error::{Error, Result};
use faer::{Mat, Side};

/// Highest order accepted by [`build_quadrature`].
pub const MAX_ORDER: usize = 40;

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 3]) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Rule on [0, 1]; points stored as `(t, 0, 0)`.
#[derive(Debug, Clone)]
pub struct LineRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Rule on the unit triangle {s, t ≥ 0, s + t ≤ 1}.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

/// Tetrahedral rule exact for polynomials of total degree ≤ `order`.
pub fn build_quadrature(order: usize) -> Result<QuadratureRule> {
    if order == 0 {
        return Err(Error::Argument("quadrature order must be at least 1".into()));
    }
    if order > MAX_ORDER {
        return Err(Error::Capability(format!("quadrature order {order} exceeds the implemented maximum {MAX_ORDER}")));
    }
    match order {
        1 => Ok(QuadratureRule { order, points: vec![[0.25; 3]], weights: vec![1.0 / 6.0] }),
        2 => {
            let a = 0.585_410_196_624_968_5;
            let b = 0.138_196_601_125_010_5;
            Ok(QuadratureRule {
                order,
                points: vec![[b, b, b], [a, b, b], [b, a, b], [b, b, a]],
                weights: vec![1.0 / 24.0; 4],
            })
        }
        _ => collapsed_tet(order),
    }
}

fn collapsed_tet(order: usize) -> Result<QuadratureRule> {
    let n = order.div_ceil(2) + 1;
    let (u, wu) = gauss_jacobi_unit(n, 0)?;
    let (v, wv) = gauss_jacobi_unit(n, 1)?;
    let (w, ww) = gauss_jacobi_unit(n, 2)?;
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (k, &wk) in w.iter().enumerate() {
        for (j, &vj) in v.iter().enumerate() {
            for (i, &ui) in u.iter().enumerate() {
                let z = wk;
                let y = vj * (1.0 - wk);
                let x = ui * (1.0 - vj) * (1.0 - wk);
                points.push([x, y, z]);
                weights.push(wu[i] * wv[j] * ww[k]);
            }
        }
    }
    Ok(QuadratureRule { order, points, weights })
}

/// Gauss–Legendre rule on [0, 1] exact for degree ≤ `order`.
pub fn line_rule(order: usize) -> Result<LineRule> {
    let n = order / 2 + 1;
    let (points, weights) = gauss_jacobi_unit(n, 0)?;
    Ok(LineRule { points, weights })
}

/// Collapsed rule on the unit triangle exact for total degree ≤ `order`.
pub fn triangle_rule(order: usize) -> Result<TriangleRule> {
    let n = order.div_ceil(2) + 1;
    let (u, wu) = gauss_jacobi_unit(n, 0)?;
    let (v, wv) = gauss_jacobi_unit(n, 1)?;
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (j, &vj) in v.iter().enumerate() {
        for (i, &ui) in u.iter().enumerate() {
            points.push([ui * (1.0 - vj), vj]);
            weights.push(wu[i] * wv[j]);
        }
    }
    Ok(TriangleRule { points, weights })
}

/// n-point Gauss–Jacobi rule for the weight (1 − t)^a on [0, 1] (Golub–Welsch).
pub fn gauss_jacobi_unit(n: usize, a: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let alpha = a as f64;
    let beta = 0.0;
    let mut jm = Mat::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + alpha + beta;
        let diag = if k == 0 {
            (beta - alpha) / (alpha + beta + 2.0)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + 2.0))
        };
        jm[(k, k)] = diag;
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + alpha + beta;
            let num = 4.0 * k1 * (k1 + alpha) * (k1 + beta) * (k1 + alpha + beta);
            let den = s1 * s1 * (s1 + 1.0) * (s1 - 1.0);
            let off = (num / den).sqrt();
            jm[(k, k + 1)] = off;
            jm[(k + 1, k)] = off;
        }
    }
    let evd = jm
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numeric(format!("Golub-Welsch eigen solve failed: {e:?}")))?;
    // ∫_{-1}^{1} (1 - x)^a dx
    let mu0 = 2f64.powi(a as i32 + 1) / (alpha + 1.0);
    let s = evd.S();
    let u = evd.U();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let x = s[j];
        let v0 = u[(0, j)];
        nodes.push(0.5 * (1.0 + x));
        // map [-1, 1] → [0, 1]: (1 - x)^a dx = 2^{a+1} (1 - t)^a dt
        weights.push(mu0 * v0 * v0 / 2f64.powi(a as i32 + 1));
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|v| v as f64).product()
    }

    /// ∫_K̂ x^a y^b z^c = a! b! c! / (a + b + c + 3)!
    fn monomial_integral(a: usize, b: usize, c: usize) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    #[test]
    fn weights_positive_and_sum_to_volume() {
        for order in 1..=12 {
            let q = build_quadrature(order).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0 / 6.0).abs() < 1e-14, "order {order}: {s}");
        }
    }

    #[test]
    fn exact_for_monomials_up_to_order() {
        for order in 1..=10 {
            let q = build_quadrature(order).unwrap();
            for a in 0..=order {
                for b in 0..=(order - a) {
                    for c in 0..=(order - a - b) {
                        let got = q.integrate(|x| x[0].powi(a as i32) * x[1].powi(b as i32) * x[2].powi(c as i32));
                        let exact = monomial_integral(a, b, c);
                        assert!((got - exact).abs() < 1e-12, "order {order} ({a},{b},{c})");
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        let q2 = build_quadrature(2).unwrap();
        assert!((q2.integrate(|x| x[0] * x[1]) - 1.0 / 120.0).abs() < 1e-12);
        let q3 = build_quadrature(3).unwrap();
        assert!((q3.integrate(|x| x[0].powi(3)) - 1.0 / 120.0).abs() < 1e-12);
    }

    #[test]
    fn order_limits() {
        assert!(matches!(build_quadrature(0), Err(Error::Argument(_))));
        assert!(matches!(build_quadrature(MAX_ORDER + 1), Err(Error::Capability(_))));
    }

    #[test]
    fn line_and_triangle_rules_are_exact() {
        let l = line_rule(7).unwrap();
        let s: f64 = l.points.iter().zip(&l.weights).map(|(t, w)| w * t.powi(7)).sum();
        assert!((s - 1.0 / 8.0).abs() < 1e-14);
        let t = triangle_rule(6).unwrap();
        // ∫_T s^a t^b = a! b! / (a + b + 2)!
        let s: f64 = t.points.iter().zip(&t.weights).map(|(p, w)| w * p[0].powi(4) * p[1].powi(2)).sum();
        assert!((s - factorial(4) * factorial(2) / factorial(8)).abs() < 1e-15);
    }
}
