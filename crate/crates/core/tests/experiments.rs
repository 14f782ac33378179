use edgefem::assembly::{assemble_curlcurl, assemble_mass};
use edgefem::coefficients::ConstantField;
use edgefem::experiments::{
    cells_for_kh, log_log_slope, manufactured_solution, run_convergence_study, run_interpolation_study, run_study,
    CoeffKind, MeshKind, SolutionId, StudyConfig, StudyKind, CSV_HEADER,
};
use edgefem::linalg::{CVec3, Vec3, C64};
use edgefem::mesh::generate_cube_mesh;
use edgefem::reference::Family;
use edgefem::spaces::{build_fe_space, BoundaryCondition};
use edgefem::sparse::SparseComplexMatrix;
use edgefem::Error;
use faer::{Mat, Side};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

const IDS: [&str; 3] = ["sine3", "gradient", "slab_wave"];

fn sample_points(n: usize, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [0, 1, 2].map(|_| rng.random_range(0.05..0.95))).collect()
}

/// Central-difference curl of `f`.
fn fd_curl(f: &dyn Fn(Vec3) -> CVec3, x: Vec3, h: f64) -> CVec3 {
    let d = |c: usize, j: usize| {
        let (mut p, mut m) = (x, x);
        p[j] += h;
        m[j] -= h;
        (f(p)[c] - f(m)[c]) / (2.0 * h)
    };
    [d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1)]
}

fn vnorm(v: &CVec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn vdiff(a: &CVec3, b: &CVec3) -> f64 {
    vnorm(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

#[test]
fn closed_form_curls_match_finite_differences() {
    for id in IDS {
        for k in [2.0, 7.0] {
            let s = manufactured_solution(id, k).unwrap();
            for x in sample_points(50, 1) {
                let fd = fd_curl(&*s.field, x, 1e-5);
                let cf = (s.curl)(x);
                assert!(vdiff(&fd, &cf) < 1e-6 * (1.0 + vnorm(&cf)), "{id} at {x:?}");
            }
        }
    }
}

#[test]
fn sources_satisfy_the_equation() {
    // f = k⁻² curl curl E − E for unit coefficients
    for id in IDS {
        let k = 3.0;
        let s = manufactured_solution(id, k).unwrap();
        for x in sample_points(50, 2) {
            let cc = fd_curl(&*s.curl, x, 1e-5);
            let e = (s.field)(x);
            let expected: CVec3 = [0, 1, 2].map(|c| cc[c] / (k * k) - e[c]);
            let f = (s.source)(x);
            assert!(vdiff(&expected, &f) < 1e-6 * (1.0 + vnorm(&f)), "{id} at {x:?}");
        }
    }
}

#[test]
fn solutions_have_vanishing_tangential_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for id in IDS {
        let s = manufactured_solution(id, 4.0).unwrap();
        for _ in 0..50 {
            let axis = rng.random_range(0..3);
            let mut x: Vec3 = [0, 1, 2].map(|_| rng.random_range(0.0..1.0));
            x[axis] = if rng.random_bool(0.5) { 0.0 } else { 1.0 };
            let e = (s.field)(x);
            for c in (0..3).filter(|&c| c != axis) {
                assert!(e[c].norm() < 1e-14, "{id} at {x:?}");
            }
        }
    }
    assert!(manufactured_solution("plane", 1.0).is_err());
    assert!(manufactured_solution("sine3", 0.0).is_err());
}

fn small_config() -> StudyConfig {
    StudyConfig { n_list: vec![2, 4], k_list: vec![3.0], ..StudyConfig::default() }
}

#[test]
fn csv_format_and_rates() {
    let report = run_convergence_study(&small_config()).unwrap();
    let csv = report.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 3);
    let n_cols = CSV_HEADER.split(',').count();
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), n_cols);
        assert!(l.starts_with("convergence,3,"));
    }
    let (a, b) = (&report.rows[0], &report.rows[1]);
    assert!(a.rate_hkcurl.is_none());
    let expected = (a.err_hkcurl_rel.unwrap() / b.err_hkcurl_rel.unwrap()).ln() / (a.h / b.h).ln();
    assert!((b.rate_hkcurl.unwrap() - expected).abs() < 1e-12);
    assert!(report.summary_value("max_galerkin_to_best_ratio").unwrap() > 0.0);
    assert_eq!(report.summary_value("failed_rows"), Some(0.0));
    assert!(report.summary_text().contains("failed_rows=0"));
    // no timing unless asked
    assert!(lines[1].ends_with(','));
}

#[test]
fn interpolation_rates_follow_the_degree() {
    for p in [1, 2] {
        let cfg = StudyConfig { p, n_list: vec![2, 4], ..small_config() };
        let report = run_interpolation_study(&cfg).unwrap();
        let rate = report.rows[1].rate_hkcurl.unwrap();
        assert!(rate > p as f64 - 0.2, "p={p}: {rate}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        StudyConfig { n_list: vec![4, 2], ..small_config() },
        StudyConfig { n_list: vec![], ..small_config() },
        StudyConfig { k_list: vec![-1.0], ..small_config() },
        StudyConfig { family: Family::RaviartThomas, ..small_config() },
        StudyConfig { p: 9, ..small_config() },
        StudyConfig { enrichment: 0, ..small_config() },
        StudyConfig { kh: 0.0, ..small_config() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        assert!(run_study(&cfg).is_err());
    }
    assert!("spectral".parse::<StudyKind>().is_err());
    assert!("sphere".parse::<MeshKind>().is_err());
    assert_eq!("pml_box".parse::<MeshKind>().unwrap(), MeshKind::PmlBox);
    assert_eq!("slab_wave".parse::<SolutionId>().unwrap(), SolutionId::SlabWave);
}

#[test]
fn budget_exhaustion_is_an_error() {
    let cfg = StudyConfig { max_dofs: 10, ..small_config() };
    assert!(matches!(run_convergence_study(&cfg), Err(Error::Capability(_))));
}

fn dense(a: &SparseComplexMatrix) -> Mat<C64> {
    let mut d = Mat::<C64>::zeros(a.n_rows(), a.n_cols());
    for (i, j, v) in a.triplets() {
        d[(i, j)] = v;
    }
    d
}

/// Smallest nonzero `k` with `curl curl u = k² u` on the discrete space.
fn discrete_resonance(n: usize, p: usize) -> f64 {
    let space = build_fe_space(
        Arc::new(generate_cube_mesh(n, 1.0, &|_| 0).unwrap()),
        Family::Nedelec1,
        p,
        BoundaryCondition::Pec,
    )
    .unwrap();
    let free = space.free_dofs().to_vec();
    let id = ConstantField::identity();
    let a = dense(&assemble_curlcurl(&space, &id, 1.0).unwrap().submatrix(&free, &free));
    let m = dense(&assemble_mass(&space, &id).unwrap().submatrix(&free, &free));
    let l = m.llt(Side::Lower).unwrap().L().to_owned();
    let mut x = a.to_owned();
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut h = x.adjoint().to_owned();
    l.solve_lower_triangular_in_place(h.as_mut());
    let ev = h.self_adjoint_eigenvalues(Side::Lower).unwrap();
    ev.into_iter().find(|&l| l > 1e-6).unwrap().sqrt()
}

#[test]
fn singular_rows_are_flagged_not_fatal() {
    let k = discrete_resonance(1, 2);
    let cfg = StudyConfig { n_list: vec![1, 2], k_list: vec![k], p: 2, ..StudyConfig::default() };
    let report = run_convergence_study(&cfg).unwrap();
    let failure = report.rows[0].failure.as_deref().unwrap();
    assert!(failure.starts_with("singular"), "{failure}");
    assert!(report.rows[0].err_hkcurl_rel.is_none());
    assert!(report.rows[1].failure.is_none());
    assert_eq!(report.summary_value("failed_rows"), Some(1.0));
}

#[test]
fn studies_are_deterministic() {
    let cfg = StudyConfig { coeff: CoeffKind::Bump, ..small_config() };
    let a = run_study(&cfg).unwrap().to_csv();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| run_study(&cfg).unwrap().to_csv());
    assert_eq!(a, b);
}

#[test]
fn cells_for_kh_is_minimal() {
    for kind in [MeshKind::Cube, MeshKind::Slab] {
        for k in [1.0, 5.0, 13.0] {
            let n = cells_for_kh(kind, k, 0.6);
            assert!(k * kind.h(n) <= 0.6);
            assert!(n == 1 || k * kind.h(n - 1) > 0.6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn log_log_slope_recovers_power_laws(a in 0.1f64..10.0, s in -4.0f64..4.0) {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|t: &f64| a * t.powf(s)).collect();
        prop_assert!((log_log_slope(&x, &y).unwrap() - s).abs() < 1e-10);
    }
}
