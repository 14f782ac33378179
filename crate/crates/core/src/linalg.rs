//! Fixed-size 3-vectors and 3×3 matrices, real and complex.

pub use num_complex::Complex64 as C64;

pub type Vec3 = [f64; 3];
/// Row-major 3×3 real matrix.
pub type Mat3 = [[f64; 3]; 3];
pub type CVec3 = [C64; 3];
/// Row-major 3×3 complex matrix.
pub type CMat3 = [[C64; 3]; 3];

pub const ZERO_C: C64 = C64 { re: 0.0, im: 0.0 };

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn identity() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

pub fn det(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn transpose(m: &Mat3) -> Mat3 {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Inverse via the adjugate; `None` when the determinant vanishes.
pub fn inverse(m: &Mat3) -> Option<Mat3> {
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
        }
    }
    Some(inv)
}

pub fn mat_vec(m: &Mat3, v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|l| a[i][l] * b[l][j]).sum();
        }
    }
    c
}

/// Spectral norm ‖m‖₂.
pub fn spectral_norm(m: &Mat3) -> f64 {
    let mtm = mat_mul(&transpose(m), m);
    let flat: Vec<f64> = mtm.iter().flatten().copied().collect();
    let ev = symmetric_eigenvalues(&flat, 3);
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

pub fn cvec_from_real(v: Vec3) -> CVec3 {
    [C64::from(v[0]), C64::from(v[1]), C64::from(v[2])]
}

pub fn cdot(a: &CVec3, b: &CVec3) -> C64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Σ a_i conj(b_i)
pub fn cinner(a: &CVec3, b: &CVec3) -> C64 {
    a[0] * b[0].conj() + a[1] * b[1].conj() + a[2] * b[2].conj()
}

pub fn cnorm_sqr(a: &CVec3) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn cidentity() -> CMat3 {
    let mut m = [[ZERO_C; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::from(1.0);
    }
    m
}

pub fn cscalar(s: C64) -> CMat3 {
    let mut m = [[ZERO_C; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = s;
    }
    m
}

pub fn cmat_from_real(m: &Mat3) -> CMat3 {
    let mut c = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = C64::from(m[i][j]);
        }
    }
    c
}

pub fn cmat_vec(m: &CMat3, v: &CVec3) -> CVec3 {
    [cdot(&m[0], v), cdot(&m[1], v), cdot(&m[2], v)]
}

pub fn cmat_mul(a: &CMat3, b: &CMat3) -> CMat3 {
    let mut c = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    c
}

pub fn ctranspose(m: &CMat3) -> CMat3 {
    let mut t = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

pub fn cadjoint(m: &CMat3) -> CMat3 {
    let mut t = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i].conj();
        }
    }
    t
}

pub fn cdet(m: &CMat3) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

pub fn cinverse(m: &CMat3) -> Option<CMat3> {
    let d = cdet(m);
    if d.norm() == 0.0 || !d.is_finite() {
        return None;
    }
    let mut inv = [[ZERO_C; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / d;
        }
    }
    Some(inv)
}

pub fn cmax_abs_diff(a: &CMat3, b: &CMat3) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            d = d.max((a[i][j] - b[i][j]).norm());
        }
    }
    d
}

/// Symmetric part of the entrywise real part, (Re M + Re Mᵀ)/2.
pub fn real_symmetric_part(m: &CMat3) -> Mat3 {
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            r[i][j] = 0.5 * (m[i][j].re + m[j][i].re);
        }
    }
    r
}

/// Spectral norm of a complex 3×3 matrix, through the real 6×6 embedding of MᴴM.
pub fn cspectral_norm(m: &CMat3) -> f64 {
    let mhm = cmat_mul(&cadjoint(m), m);
    let mut a = vec![0.0; 36];
    for i in 0..3 {
        for j in 0..3 {
            let z = mhm[i][j];
            a[i * 6 + j] = z.re;
            a[(i + 3) * 6 + j + 3] = z.re;
            a[i * 6 + j + 3] = -z.im;
            a[(i + 3) * 6 + j] = z.im;
        }
    }
    let ev = symmetric_eigenvalues(&a, 6);
    ev.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// Eigenvalues (ascending) of a small dense real symmetric matrix stored row-major,
/// by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        let scale: f64 = (0..n).map(|i| m[i * n + i].abs()).sum::<f64>().max(1e-300);
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let mrp = m[r * n + p];
                    let mrq = m[r * n + q];
                    m[r * n + p] = c * mrp - s * mrq;
                    m[r * n + q] = s * mrp + c * mrq;
                }
                for r in 0..n {
                    let mpr = m[p * n + r];
                    let mqr = m[q * n + r];
                    m[p * n + r] = c * mpr - s * mqr;
                    m[q * n + r] = s * mpr + c * mqr;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = [[2.0, 1.0, 0.0], [0.5, 3.0, -1.0], [0.0, 1.0, 4.0]];
        let inv = inverse(&m).unwrap();
        let p = mat_mul(&m, &inv);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((p[i][j] - e).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn jacobi_eigenvalues_of_known_matrix() {
        let a = [2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0];
        let ev = symmetric_eigenvalues(&a, 3);
        assert!((ev[0] - 1.0).abs() < 1e-14);
        assert!((ev[1] - 3.0).abs() < 1e-14);
        assert!((ev[2] - 5.0).abs() < 1e-14);
    }

    #[test]
    fn complex_spectral_norm_of_scaled_identity() {
        let m = cscalar(C64::new(1.0, 1.0));
        assert!((cspectral_norm(&m) - 2f64.sqrt()).abs() < 1e-14);
    }
}
