use edgefem::linalg::Vec3;
use edgefem::reference::quadrature::{build_quadrature, MAX_ORDER};
use edgefem::reference::{build_shape_basis, Family, ShapeBasis};
use edgefem::Error;
use faer::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FAMILIES: [Family; 4] = [Family::Nedelec1, Family::Nedelec2, Family::RaviartThomas, Family::Lagrange];

fn random_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let x: Vec3 = [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)];
        if x[0] + x[1] + x[2] <= 1.0 {
            out.push(x);
        }
    }
    out
}

fn known_dimension(family: Family, p: usize) -> usize {
    let table: &[usize] = match family {
        Family::Nedelec1 => &[6, 20, 45, 84],
        Family::Nedelec2 => &[12, 30, 60, 105],
        Family::RaviartThomas => &[4, 15, 36, 70],
        Family::Lagrange => &[4, 10, 20, 35, 56, 84],
    };
    table[p - 1]
}

/// Numerical rank of the point-evaluation matrix of the basis.
fn sampled_rank(basis: &ShapeBasis, seed: u64) -> usize {
    let pts = random_points(3 * basis.dim(), seed);
    let vs = basis.value_size();
    let mut a = Mat::<f64>::zeros(pts.len() * vs, basis.dim());
    for (q, &x) in pts.iter().enumerate() {
        for i in 0..basis.dim() {
            for (c, v) in basis.eval_one(i, x).into_iter().enumerate() {
                a[(q * vs + c, i)] = v;
            }
        }
    }
    let s = a.singular_values().unwrap();
    let smax = s.iter().copied().fold(0.0, f64::max);
    s.iter().filter(|&&v| v > 1e-10 * smax).count()
}

#[test]
fn dimensions_match_sampled_rank() {
    for family in FAMILIES {
        for p in 1..=family.max_degree() {
            let basis = build_shape_basis(family, p).unwrap();
            assert_eq!(basis.dim(), known_dimension(family, p), "{family} p={p}");
            assert_eq!(family.dimension(p), known_dimension(family, p));
            assert_eq!(sampled_rank(&basis, p as u64), basis.dim(), "{family} p={p}");
            assert!(basis.unisolvence_error() < 1e-9, "{family} p={p}");
        }
    }
}

fn vector_monomials(degree: usize) -> Vec<(usize, [usize; 3])> {
    let mut out = Vec::new();
    for c in 0..3 {
        for a in 0..=degree {
            for b in 0..=degree - a {
                for d in 0..=degree - a - b {
                    out.push((c, [a, b, d]));
                }
            }
        }
    }
    out
}

fn mono(e: [usize; 3], x: Vec3) -> f64 {
    x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32)
}

/// max |Π f − f| at sample points.
fn interpolation_defect(basis: &ShapeBasis, c: usize, e: [usize; 3]) -> f64 {
    let f = |x: Vec3| {
        let mut v = [0.0; 3];
        v[c] = mono(e, x);
        v
    };
    let coeffs = if basis.value_size() == 1 {
        basis.apply_functionals_scalar(|x| mono(e, x))
    } else {
        basis.apply_functionals_vector(f)
    };
    let mut worst: f64 = 0.0;
    for x in random_points(20, 5) {
        let mut v = vec![0.0; basis.value_size()];
        for (i, ci) in coeffs.iter().enumerate() {
            for (vc, b) in v.iter_mut().zip(basis.eval_one(i, x)) {
                *vc += ci * b;
            }
        }
        let exact = if basis.value_size() == 1 { vec![mono(e, x)] } else { f(x).to_vec() };
        for (a, b) in v.iter().zip(&exact) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

#[test]
fn spaces_reproduce_their_polynomials() {
    for family in FAMILIES {
        for p in 1..=3 {
            let basis = build_shape_basis(family, p).unwrap();
            let full = match family {
                Family::Nedelec1 | Family::RaviartThomas => p - 1,
                _ => p,
            };
            let comps = if family == Family::Lagrange { 1 } else { 3 };
            for (c, e) in vector_monomials(full).into_iter().filter(|(c, _)| *c < comps) {
                let d = interpolation_defect(&basis, c, e);
                assert!(d < 1e-10, "{family} p={p} component {c} exponent {e:?}: {d}");
            }
        }
    }
}

#[test]
fn first_kind_is_incomplete() {
    // x e_x has a nonzero symmetric gradient part, so it is not of the form a + b × x
    let basis = build_shape_basis(Family::Nedelec1, 1).unwrap();
    assert!(interpolation_defect(&basis, 0, [1, 0, 0]) > 1e-3);
    // but x e_y − y e_x is
    let f = |x: Vec3| [-x[1], x[0], 0.0];
    let coeffs = basis.apply_functionals_vector(f);
    for x in random_points(10, 9) {
        let mut v = [0.0; 3];
        for (i, ci) in coeffs.iter().enumerate() {
            let b = basis.eval_one(i, x);
            for c in 0..3 {
                v[c] += ci * b[c];
            }
        }
        let e = f(x);
        assert!((0..3).all(|c| (v[c] - e[c]).abs() < 1e-12));
    }
}

#[test]
fn tabulated_derivatives_match_finite_differences() {
    let h = 1e-6;
    let pts = random_points(6, 13);
    for family in FAMILIES {
        let basis = build_shape_basis(family, 2).unwrap();
        let table = basis.evaluate(&pts).unwrap();
        for (q, &x) in pts.iter().enumerate() {
            for i in 0..basis.dim() {
                let d = |c: usize, j: usize| {
                    let (mut xp, mut xm) = (x, x);
                    xp[j] += h;
                    xm[j] -= h;
                    (basis.eval_one(i, xp)[c] - basis.eval_one(i, xm)[c]) / (2.0 * h)
                };
                let fd: Vec<f64> = match family {
                    Family::Lagrange => vec![d(0, 0), d(0, 1), d(0, 2)],
                    Family::RaviartThomas => vec![d(0, 0) + d(1, 1) + d(2, 2)],
                    _ => vec![d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)],
                };
                for (a, b) in table.deriv(q, i).iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6 * (1.0 + a.abs()), "{family} basis {i}: {a} vs {b}");
                }
                let v = table.value(q, i);
                assert_eq!(v, basis.eval_one(i, x).as_slice());
            }
        }
    }
}

#[test]
fn bad_requests() {
    assert!(matches!(build_shape_basis(Family::Nedelec1, 0), Err(Error::Capability(_))));
    assert!(matches!(build_shape_basis(Family::Nedelec1, 5), Err(Error::Capability(_))));
    assert!(matches!(build_shape_basis(Family::Lagrange, 7), Err(Error::Capability(_))));
    let basis = build_shape_basis(Family::Nedelec1, 1).unwrap();
    assert!(matches!(basis.evaluate(&[[0.6, 0.6, 0.0]]), Err(Error::OutsideReference(_))));
    assert!(build_quadrature(MAX_ORDER + 1).is_err());
    assert!(build_quadrature(0).is_err());
    assert!("n3curl".parse::<Family>().is_err());
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn quadrature_integrates_monomials(order in 1usize..=MAX_ORDER, a in 0usize..15, b in 0usize..15, c in 0usize..15) {
        prop_assume!(a + b + c <= order);
        let rule = build_quadrature(order).unwrap();
        let got = rule.integrate(|x| mono([a, b, c], x));
        let exact = factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3);
        prop_assert!((got - exact).abs() <= 1e-13 * exact.max(1e-300) + 1e-16, "{got} vs {exact}");
    }

    #[test]
    fn quadrature_points_lie_inside(order in 1usize..=MAX_ORDER) {
        let rule = build_quadrature(order).unwrap();
        prop_assert!(rule.weights.iter().all(|&w| w > 0.0));
        prop_assert!(rule.points.iter().all(|&x| x.iter().all(|&t| t >= 0.0) && x[0] + x[1] + x[2] <= 1.0 + 1e-14));
    }
}
