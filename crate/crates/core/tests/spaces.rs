use edgefem::linalg::{cross, norm, sub, CVec3, Vec3, C64, ZERO_C};
use edgefem::mesh::{generate_cube_mesh, Mesh, NO_TET};
use edgefem::reference::{build_shape_basis, Family};
use edgefem::spaces::{
    build_discrete_curl, build_discrete_gradient, build_fe_space, canonical_interpolate, canonical_interpolate_scalar,
    piola_map, BoundaryCondition, FeSpace, PiolaDirection, PiolaKind, QuadraticMap,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn cube(n: usize) -> Arc<Mesh> {
    Arc::new(generate_cube_mesh(n, 1.0, &|_| 0).unwrap())
}

fn random_coeffs(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
}

/// Value of an FE function at physical point `x` seen from tet `t`.
fn eval_at(space: &FeSpace, t: usize, coeffs: &[C64], x: Vec3) -> (CVec3, CVec3) {
    let xh = space.element_map(t).inverse_map(x);
    let table = space.basis().tabulate(&[xh]);
    let (v, d) = space.eval_function(t, coeffs, &table);
    (v[0], d[0])
}

/// Largest jump of the tangential (or normal) trace across interior faces,
/// relative to the largest value sampled.
fn trace_mismatch(space: &FeSpace, coeffs: &[C64], normal_part: bool) -> f64 {
    let mesh = space.mesh();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let bary = [[1.0 / 3.0, 1.0 / 3.0], [0.1, 0.2], [0.7, 0.15], [0.05, 0.05]];
    for f in 0..mesh.n_faces() {
        let [t0, t1] = mesh.face_tets(f);
        if t1 == NO_TET {
            continue;
        }
        let [a, b, c] = mesh.faces()[f].map(|v| mesh.vertices()[v]);
        let n = cross(sub(b, a), sub(c, a));
        let n = [n[0] / norm(n), n[1] / norm(n), n[2] / norm(n)];
        for [s, t] in bary {
            let x = [0, 1, 2].map(|k| a[k] + s * (b[k] - a[k]) + t * (c[k] - a[k]));
            let (v0, _) = eval_at(space, t0, coeffs, x);
            let (v1, _) = eval_at(space, t1, coeffs, x);
            scale = scale.max(v0.iter().map(|z| z.norm()).fold(0.0, f64::max));
            let d: Vec<C64> = (0..3).map(|k| v0[k] - v1[k]).collect();
            let dn = d[0] * n[0] + d[1] * n[1] + d[2] * n[2];
            let e =
                if normal_part { dn.norm() } else { (0..3).map(|k| (d[k] - dn * n[k]).norm_sqr()).sum::<f64>().sqrt() };
            worst = worst.max(e);
        }
    }
    worst / scale
}

#[test]
fn nedelec_tangential_continuity() {
    let m = cube(2);
    for family in [Family::Nedelec1, Family::Nedelec2] {
        for p in 1..=3 {
            let s = build_fe_space(m.clone(), family, p, BoundaryCondition::Natural).unwrap();
            let c = random_coeffs(s.n_dofs(), p as u64);
            let e = trace_mismatch(&s, &c, false);
            assert!(e < 1e-10, "{family} p={p}: {e}");
        }
    }
}

#[test]
fn raviart_thomas_normal_continuity() {
    let m = cube(2);
    for p in 1..=3 {
        let s = build_fe_space(m.clone(), Family::RaviartThomas, p, BoundaryCondition::Natural).unwrap();
        let c = random_coeffs(s.n_dofs(), 10 + p as u64);
        let e = trace_mismatch(&s, &c, true);
        assert!(e < 1e-10, "p={p}: {e}");
    }
}

#[test]
fn lagrange_continuity() {
    let m = cube(2);
    let s = build_fe_space(m.clone(), Family::Lagrange, 3, BoundaryCondition::Natural).unwrap();
    let c = random_coeffs(s.n_dofs(), 3);
    let mut worst: f64 = 0.0;
    for f in 0..m.n_faces() {
        let [t0, t1] = m.face_tets(f);
        if t1 == NO_TET {
            continue;
        }
        let [a, b, cc] = m.faces()[f].map(|v| m.vertices()[v]);
        let x = [0, 1, 2].map(|k| 0.2 * a[k] + 0.3 * b[k] + 0.5 * cc[k]);
        worst = worst.max((eval_at(&s, t0, &c, x).0[0] - eval_at(&s, t1, &c, x).0[0]).norm());
    }
    assert!(worst < 1e-10);
}

#[test]
fn pec_tangential_trace_vanishes() {
    let m = cube(2);
    for p in 1..=3 {
        let s = build_fe_space(m.clone(), Family::Nedelec1, p, BoundaryCondition::Pec).unwrap();
        let c = s.expand_free(&random_coeffs(s.n_free(), 5));
        for f in m.boundary_faces() {
            let t = m.face_tets(f)[0];
            let [a, b, cc] = m.faces()[f].map(|v| m.vertices()[v]);
            let n = cross(sub(b, a), sub(cc, a));
            let x = [0, 1, 2].map(|k| 0.2 * a[k] + 0.3 * b[k] + 0.5 * cc[k]);
            let (v, _) = eval_at(&s, t, &c, x);
            let tx = [v[1] * n[2] - v[2] * n[1], v[2] * n[0] - v[0] * n[2], v[0] * n[1] - v[1] * n[0]];
            assert!(tx.iter().all(|z| z.norm() < 1e-12));
        }
    }
}

#[test]
fn pec_free_count_matches_interior_edges() {
    let m = cube(2);
    let s = build_fe_space(m.clone(), Family::Nedelec1, 1, BoundaryCondition::Pec).unwrap();
    let mut boundary_edges = std::collections::HashSet::new();
    for f in m.boundary_faces() {
        let [a, b, c] = m.faces()[f];
        boundary_edges.extend([[a, b], [a, c], [b, c]]);
    }
    assert_eq!(s.n_free(), m.n_edges() - boundary_edges.len());
}

#[test]
fn interpolation_reproduces_space_members() {
    let m = cube(2);
    for (family, p) in [(Family::Nedelec1, 1), (Family::Nedelec1, 2), (Family::Nedelec2, 2), (Family::RaviartThomas, 2)]
    {
        let s = build_fe_space(m.clone(), family, p, BoundaryCondition::Natural).unwrap();
        let c = random_coeffs(s.n_dofs(), 7);
        // moments taken element by element, so no point location is needed
        let mut worst: f64 = 0.0;
        for t in 0..m.n_tets() {
            let local_field = |x: Vec3| eval_at(&s, t, &c, x).0;
            let local = s.element_interpolant(t, &local_field).unwrap();
            for (i, &g) in s.local_dofs(t).iter().enumerate() {
                worst = worst.max((local[i] - c[g]).norm());
            }
        }
        assert!(worst < 1e-10, "{family} p={p}: {worst}");
    }
}

#[test]
fn gradient_matrix_matches_pointwise_gradient() {
    let m = cube(2);
    for (fam, p, lp) in [(Family::Nedelec1, 1, 1), (Family::Nedelec1, 3, 3), (Family::Nedelec2, 2, 3)] {
        for bc in [BoundaryCondition::Natural, BoundaryCondition::Pec] {
            let ned = build_fe_space(m.clone(), fam, p, bc).unwrap();
            let lag = build_fe_space(m.clone(), Family::Lagrange, lp, bc).unwrap();
            let g = build_discrete_gradient(&lag, &ned).unwrap();
            let q = lag.expand_free(&random_coeffs(lag.n_free(), 11));
            let u = g.mul_vec(&q);
            for d in ned.constrained_dofs() {
                assert_eq!(u[d], ZERO_C);
            }
            let pts = [[0.1, 0.2, 0.3], [0.6, 0.1, 0.1], [0.25, 0.25, 0.25]];
            let tn = ned.basis().evaluate(&pts).unwrap();
            let tl = lag.basis().evaluate(&pts).unwrap();
            let mut worst: f64 = 0.0;
            for t in 0..m.n_tets() {
                let (v, _) = ned.eval_function(t, &u, &tn);
                let (_, grad) = lag.eval_function(t, &q, &tl);
                for k in 0..pts.len() {
                    for c in 0..3 {
                        worst = worst.max((v[k][c] - grad[k][c]).norm());
                    }
                }
            }
            assert!(worst < 1e-10, "{fam} p={p}: {worst}");
        }
    }
}

#[test]
fn gradient_rank_and_curl_annihilation() {
    let m = cube(1);
    let ned = build_fe_space(m.clone(), Family::Nedelec1, 2, BoundaryCondition::Natural).unwrap();
    let lag = build_fe_space(m.clone(), Family::Lagrange, 2, BoundaryCondition::Natural).unwrap();
    let rt = build_fe_space(m.clone(), Family::RaviartThomas, 2, BoundaryCondition::Natural).unwrap();
    let g = build_discrete_gradient(&lag, &ned).unwrap();
    let c = build_discrete_curl(&ned, &rt).unwrap();
    // C G = 0
    for j in 0..lag.n_dofs() {
        let mut e = vec![0.0; lag.n_dofs()];
        e[j] = 1.0;
        let cg = c.mul_vec(&g.mul_vec(&e));
        assert!(cg.iter().all(|v| v.abs() < 1e-10));
    }
    // rank(G) = n_lagrange - 1 (constants are in the kernel without boundary conditions)
    let dense = g.to_dense();
    let mat = faer::Mat::<f64>::from_fn(dense.len(), dense[0].len(), |i, j| dense[i][j]);
    let s = mat.singular_values().unwrap();
    let rank = s.iter().filter(|&&x| x > 1e-10 * s[0]).count();
    assert_eq!(rank, lag.n_dofs() - 1);

    let nedp = build_fe_space(m.clone(), Family::Nedelec1, 2, BoundaryCondition::Pec).unwrap();
    let lagp = build_fe_space(m.clone(), Family::Lagrange, 2, BoundaryCondition::Pec).unwrap();
    let gp = build_discrete_gradient(&lagp, &nedp).unwrap().submatrix(nedp.free_dofs(), lagp.free_dofs());
    let dense = gp.to_dense();
    let mat = faer::Mat::<f64>::from_fn(dense.len(), dense[0].len(), |i, j| dense[i][j]);
    let s = mat.singular_values().unwrap();
    let rank = s.iter().filter(|&&x| x > 1e-10 * s[0]).count();
    assert_eq!(rank, lagp.n_free());
}

#[test]
fn vertex_hat_gradient_support() {
    let m = cube(2);
    let ned = build_fe_space(m.clone(), Family::Nedelec1, 1, BoundaryCondition::Pec).unwrap();
    let lag = build_fe_space(m.clone(), Family::Lagrange, 1, BoundaryCondition::Pec).unwrap();
    let g = build_discrete_gradient(&lag, &ned).unwrap();
    // the only interior vertex of the 2x2x2 grid is the center
    let center = m.vertices().iter().position(|v| *v == [0.5, 0.5, 0.5]).unwrap();
    let mut q = vec![0.0; lag.n_dofs()];
    q[center] = 1.0;
    let u = g.mul_vec(&q);
    for (e, edge) in m.edges().iter().enumerate() {
        let touches = edge.contains(&center);
        assert_eq!(u[e] != 0.0, touches, "edge {edge:?}");
    }
}

#[test]
fn incompatible_gradient_spaces_rejected() {
    let m = cube(1);
    let ned = build_fe_space(m.clone(), Family::Nedelec1, 1, BoundaryCondition::Natural).unwrap();
    let lag = build_fe_space(m.clone(), Family::Lagrange, 2, BoundaryCondition::Natural).unwrap();
    assert!(build_discrete_gradient(&lag, &ned).is_err());
    let other = cube(1);
    let lag = build_fe_space(other, Family::Lagrange, 1, BoundaryCondition::Natural).unwrap();
    assert!(build_discrete_gradient(&lag, &ned).is_err());
}

fn smooth_field(seed: u64) -> impl Fn(Vec3) -> CVec3 + Sync {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<[f64; 4]> = (0..3).map(|_| [0, 0, 0, 0].map(|_| rng.random_range(-2.0..2.0))).collect();
    move |x: Vec3| {
        [0, 1, 2].map(|c| {
            let [a0, a1, a2, a3] = a[c];
            C64::new((a0 * x[0] + a1 * x[1] + a2 * x[2] + a3).sin() + a0 * x[1] * x[2], 0.0)
        })
    }
}

#[test]
fn commuting_diagram_on_random_fields() {
    let m = cube(1);
    let ned = build_fe_space(m.clone(), Family::Nedelec1, 2, BoundaryCondition::Natural).unwrap();
    let rt = build_fe_space(m.clone(), Family::RaviartThomas, 2, BoundaryCondition::Natural).unwrap();
    let c = build_discrete_curl(&ned, &rt).unwrap();
    for seed in 0..5 {
        let f = smooth_field(seed);
        let h = 1e-5;
        let curl = |x: Vec3| -> CVec3 {
            let d = |i: usize, j: usize| {
                let mut xp = x;
                let mut xm = x;
                xp[j] += h;
                xm[j] -= h;
                (f(xp)[i] - f(xm)[i]) / (2.0 * h)
            };
            [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
        };
        let u = canonical_interpolate(&ned, &f).unwrap();
        let w = canonical_interpolate(&rt, &curl).unwrap();
        let cu = c.mul_vec(&u);
        let err = cu.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }
}

#[test]
fn scalar_interpolation_rejects_vector_spaces() {
    let m = cube(1);
    let ned = build_fe_space(m.clone(), Family::Nedelec1, 1, BoundaryCondition::Natural).unwrap();
    assert!(canonical_interpolate_scalar(&ned, &|_| ZERO_C).is_err());
    let lag = build_fe_space(m, Family::Lagrange, 1, BoundaryCondition::Natural).unwrap();
    assert!(canonical_interpolate(&lag, &|_| [ZERO_C; 3]).is_err());
}

#[test]
fn pullback_pushforward_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let nodes: [Vec3; 10] = {
        let mut n = [[0.0; 3]; 10];
        let v = edgefem::reference::ReferenceTet::VERTICES;
        for i in 0..4 {
            n[i] = v[i];
        }
        for (e, [i, j]) in edgefem::reference::ReferenceTet::EDGES.iter().enumerate() {
            for c in 0..3 {
                n[4 + e][c] = 0.5 * (v[*i][c] + v[*j][c]) + rng.random_range(-0.03..0.03);
            }
        }
        n
    };
    let curved = QuadraticMap { nodes };
    let f = |x: Vec3| [x[1] * x[2], x[0].exp(), x[0] - x[2] * x[2]];
    for kind in [PiolaKind::HCurl, PiolaKind::HDiv] {
        let push = piola_map(&curved, &f, kind, PiolaDirection::Pushforward).unwrap();
        let pull = piola_map(&curved, push.as_ref(), kind, PiolaDirection::Pullback).unwrap();
        for _ in 0..20 {
            let xh = [rng.random_range(0.0..0.3), rng.random_range(0.0..0.3), rng.random_range(0.0..0.3)];
            let a = pull(xh);
            let b = f(xh);
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }
}

/// Sixth-order central differences; exact up to rounding for polynomials of degree ≤ 6.
fn fd_curl(f: &dyn Fn(Vec3) -> Vec3, x: Vec3, h: f64) -> Vec3 {
    let d = |i: usize, j: usize| {
        let s = |k: f64| {
            let mut y = x;
            y[j] += k * h;
            f(y)[i]
        };
        (45.0 * (s(1.0) - s(-1.0)) - 9.0 * (s(2.0) - s(-2.0)) + (s(3.0) - s(-3.0))) / (60.0 * h)
    };
    [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
}

#[test]
fn piola_curl_identity_on_curved_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut nodes = [[0.0; 3]; 10];
    let v = edgefem::reference::ReferenceTet::VERTICES;
    for i in 0..4 {
        nodes[i] = [v[i][0] * 1.3, v[i][1] + 0.2 * v[i][0], v[i][2] * 0.8];
    }
    for (e, [i, j]) in edgefem::reference::ReferenceTet::EDGES.iter().enumerate() {
        for c in 0..3 {
            nodes[4 + e][c] = 0.5 * (nodes[*i][c] + nodes[*j][c]) + rng.random_range(-0.05..0.05);
        }
    }
    let map = QuadraticMap { nodes };
    // quadratic physical field: pulled-back fields are polynomials of degree ≤ 5
    let f = |x: Vec3| [x[1] * x[1] - x[2], x[0] * x[2], 1.0 + x[0] * x[1]];
    let curl_f = |x: Vec3| [x[0] - x[0], -1.0 - x[1], x[2] - 2.0 * x[1]];
    let pulled = piola_map(&map, &f, PiolaKind::HCurl, PiolaDirection::Pullback).unwrap();
    let curl_pulled = piola_map(&map, &curl_f, PiolaKind::HDiv, PiolaDirection::Pullback).unwrap();
    for _ in 0..20 {
        let xh = [rng.random_range(0.05..0.3), rng.random_range(0.05..0.3), rng.random_range(0.05..0.3)];
        let lhs = fd_curl(pulled.as_ref(), xh, 1e-2);
        let rhs = curl_pulled(xh);
        for c in 0..3 {
            assert!((lhs[c] - rhs[c]).abs() < 1e-10, "{lhs:?} vs {rhs:?}");
        }
    }
}

#[test]
fn nedelec1_inside_nedelec2_and_gradients_inside_nedelec1() {
    for p in 1..=3 {
        let n1 = build_shape_basis(Family::Nedelec1, p).unwrap();
        let n2 = build_shape_basis(Family::Nedelec2, p).unwrap();
        let lag = build_shape_basis(Family::Lagrange, p).unwrap();
        let pts: Vec<Vec3> = {
            let mut rng = ChaCha8Rng::seed_from_u64(p as u64);
            (0..60)
                .map(|_| loop {
                    let x = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                    if x.iter().sum::<f64>() <= 1.0 {
                        break x;
                    }
                })
                .collect()
        };
        let sample = |vals: &dyn Fn(Vec3) -> Vec3| -> Vec<f64> { pts.iter().flat_map(|&x| vals(x)).collect() };
        let span = |b: &edgefem::reference::ShapeBasis| -> faer::Mat<f64> {
            let cols: Vec<Vec<f64>> = (0..b.dim())
                .map(|i| {
                    sample(&|x| {
                        let v = b.eval_one(i, x);
                        [v[0], v[1], v[2]]
                    })
                })
                .collect();
            faer::Mat::from_fn(cols[0].len(), cols.len(), |r, c| cols[c][r])
        };
        let a2 = span(&n2);
        let a1 = span(&n1);
        let residual = |a: &faer::Mat<f64>, target: Vec<f64>| -> f64 {
            let qr = a.qr();
            let q = qr.compute_thin_Q();
            let t = faer::Mat::from_fn(target.len(), 1, |r, _| target[r]);
            let proj = &q * (q.transpose() * &t);
            (0..target.len()).map(|r| (t[(r, 0)] - proj[(r, 0)]).abs()).fold(0.0, f64::max)
        };
        for i in 0..n1.dim() {
            let col: Vec<f64> = (0..a1.nrows()).map(|r| a1[(r, i)]).collect();
            assert!(residual(&a2, col) < 1e-10);
        }
        for j in 0..lag.dim() {
            let g = sample(&|x| {
                let d = |a: [usize; 3]| lag.derivative(j, x, a)[0];
                [d([1, 0, 0]), d([0, 1, 0]), d([0, 0, 1])]
            });
            assert!(residual(&a1, g) < 1e-10);
        }
    }
}
