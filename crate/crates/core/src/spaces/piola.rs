use crate::error::{Error, Result};
use crate::linalg::{det, inverse, mat_vec, norm, sub, transpose, Mat3, Vec3};
use crate::mesh::ElementMap;
use crate::reference::ReferenceTet;

/// A (possibly curved) map from the reference tetrahedron.
pub trait GeometricMap: Sync {
    fn map(&self, xh: Vec3) -> Vec3;
    fn jacobian(&self, xh: Vec3) -> Mat3;

    /// Reference point mapped to `x`, by Newton iteration from the centroid.
    fn inverse_map(&self, x: Vec3) -> Option<Vec3> {
        let mut xh = [0.25; 3];
        for _ in 0..50 {
            let r = sub(self.map(xh), x);
            if norm(r) < 1e-15 * (1.0 + norm(x)) {
                return Some(xh);
            }
            let jinv = inverse(&self.jacobian(xh))?;
            let d = mat_vec(&jinv, r);
            xh = sub(xh, d);
            if norm(d) < 1e-16 {
                return Some(xh);
            }
        }
        Some(xh)
    }
}

impl GeometricMap for ElementMap {
    fn map(&self, xh: Vec3) -> Vec3 {
        ElementMap::map(self, xh)
    }

    fn jacobian(&self, _xh: Vec3) -> Mat3 {
        self.b
    }

    fn inverse_map(&self, x: Vec3) -> Option<Vec3> {
        Some(ElementMap::inverse_map(self, x))
    }
}

/// Quadratic isoparametric map from 10 nodes: the 4 vertices followed by the
/// 6 edge nodes in `ReferenceTet::EDGES` order.
#[derive(Debug, Clone)]
pub struct QuadraticMap {
    pub nodes: [Vec3; 10],
}

impl QuadraticMap {
    fn shape(xh: Vec3) -> ([f64; 10], [Vec3; 10]) {
        let l = ReferenceTet::barycentric(xh);
        let g: [Vec3; 4] = [[-1.0, -1.0, -1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let mut n = [0.0; 10];
        let mut dn = [[0.0; 3]; 10];
        for i in 0..4 {
            n[i] = l[i] * (2.0 * l[i] - 1.0);
            for c in 0..3 {
                dn[i][c] = (4.0 * l[i] - 1.0) * g[i][c];
            }
        }
        for (e, &[i, j]) in ReferenceTet::EDGES.iter().enumerate() {
            n[4 + e] = 4.0 * l[i] * l[j];
            for c in 0..3 {
                dn[4 + e][c] = 4.0 * (g[i][c] * l[j] + l[i] * g[j][c]);
            }
        }
        (n, dn)
    }
}

impl GeometricMap for QuadraticMap {
    fn map(&self, xh: Vec3) -> Vec3 {
        let (n, _) = Self::shape(xh);
        let mut x = [0.0; 3];
        for (k, node) in self.nodes.iter().enumerate() {
            for c in 0..3 {
                x[c] += n[k] * node[c];
            }
        }
        x
    }

    fn jacobian(&self, xh: Vec3) -> Mat3 {
        let (_, dn) = Self::shape(xh);
        let mut j = [[0.0; 3]; 3];
        for (k, node) in self.nodes.iter().enumerate() {
            for r in 0..3 {
                for c in 0..3 {
                    j[r][c] += node[r] * dn[k][c];
                }
            }
        }
        j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiolaKind {
    /// Covariant: v̂ = DFᵀ (v∘F).
    HCurl,
    /// Contravariant: v̂ = det(DF) DF⁻¹ (v∘F).
    HDiv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiolaDirection {
    /// Physical field → reference field.
    Pullback,
    /// Reference field → physical field.
    Pushforward,
}

/// Transforms `field` with the Piola map of `kind`. Pullback takes a field of
/// physical coordinates and returns one of reference coordinates; pushforward
/// is its inverse. Points where the Jacobian is singular evaluate to NaN.
pub fn piola_map<'a, M: GeometricMap>(
    map: &'a M,
    field: &'a (dyn Fn(Vec3) -> Vec3 + Sync),
    kind: PiolaKind,
    direction: PiolaDirection,
) -> Result<Box<dyn Fn(Vec3) -> Vec3 + Sync + 'a>> {
    if det(&map.jacobian([0.25; 3])).abs() < 1e-300 || inverse(&map.jacobian([0.25; 3])).is_none() {
        return Err(Error::Numeric("singular element map".into()));
    }
    const NAN3: Vec3 = [f64::NAN; 3];
    Ok(match direction {
        PiolaDirection::Pullback => Box::new(move |xh: Vec3| {
            let j = map.jacobian(xh);
            let v = field(map.map(xh));
            match kind {
                PiolaKind::HCurl => mat_vec(&transpose(&j), v),
                PiolaKind::HDiv => match inverse(&j) {
                    Some(ji) => {
                        let d = det(&j);
                        let w = mat_vec(&ji, v);
                        [d * w[0], d * w[1], d * w[2]]
                    }
                    None => NAN3,
                },
            }
        }),
        PiolaDirection::Pushforward => Box::new(move |x: Vec3| {
            let Some(xh) = map.inverse_map(x) else { return NAN3 };
            let j = map.jacobian(xh);
            let v = field(xh);
            match kind {
                PiolaKind::HCurl => match inverse(&j) {
                    Some(ji) => mat_vec(&transpose(&ji), v),
                    None => NAN3,
                },
                PiolaKind::HDiv => {
                    let d = det(&j);
                    let w = mat_vec(&j, v);
                    [w[0] / d, w[1] / d, w[2] / d]
                }
            }
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubled() -> ElementMap {
        ElementMap::from_vertices(ReferenceTet::VERTICES.map(|v| [2.0 * v[0], 2.0 * v[1], 2.0 * v[2]])).unwrap()
    }

    #[test]
    fn scaled_map_pullbacks() {
        let m = doubled();
        let f = |x: Vec3| [x[0] + 1.0, x[1] * x[2], 3.0];
        let xh = [0.1, 0.2, 0.3];
        let x = [0.2, 0.4, 0.6];
        let c = piola_map(&m, &f, PiolaKind::HCurl, PiolaDirection::Pullback).unwrap();
        let d = piola_map(&m, &f, PiolaKind::HDiv, PiolaDirection::Pullback).unwrap();
        let (vc, vd, fx) = (c(xh), d(xh), f(x));
        for k in 0..3 {
            assert!((vc[k] - 2.0 * fx[k]).abs() < 1e-14);
            assert!((vd[k] - 4.0 * fx[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_map_rejected() {
        let m = ElementMap { b: [[0.0; 3]; 3], offset: [0.0; 3], det: 0.0, inv_t: [[0.0; 3]; 3], diameter: 0.0 };
        let f = |x: Vec3| x;
        assert!(matches!(piola_map(&m, &f, PiolaKind::HCurl, PiolaDirection::Pullback), Err(Error::Numeric(_))));
    }
}
