//! Parameter sweeps: convergence, interpolation, pollution, PML checks and
//! scans of the diagnostic scalars. Every study returns a [`StudyReport`]
//! whose CSV form is byte-for-byte reproducible.

use crate::assembly::{assemble_load, assemble_mass, assemble_system, assemble_weak_load};
use crate::coefficients::{
    build_pml_profile, bump_permittivity, sample_shell, verify_coefficient_bounds, BoundMode, ConstantField,
    InverseField, PmlField, PmlProfile, PmlTensor, SharedField,
};
use crate::diagnostics::{estimate_csol, estimate_gamma_dv, interpolation_error, l2_mass_matrix, relative_error};
use crate::error::{Error, Result};
use crate::linalg::{cmax_abs_diff, cscalar, CVec3, Vec3, C64, ZERO_C};
use crate::mesh::{generate_box_mesh, Mesh};
use crate::reference::Family;
use crate::solver::{factorize, solve};
use crate::spaces::{build_fe_space, canonical_interpolate, BoundaryCondition, FeSpace};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

pub const CSV_HEADER: &str =
    "study,k,h,p,dofs,err_l2_rel,err_curlk_rel,err_hkcurl_rel,best_approx_rel,gamma_dv,c_sol,rate_hkcurl,wall_ms";

/// Errors below this are treated as zero when computing rates.
pub const RATE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Convergence,
    Interpolation,
    Pollution,
    Preasymptotic,
    PmlVerify,
    GammaDvScan,
    CsolScan,
}

impl StudyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StudyKind::Convergence => "convergence",
            StudyKind::Interpolation => "interpolation",
            StudyKind::Pollution => "pollution",
            StudyKind::Preasymptotic => "preasymptotic",
            StudyKind::PmlVerify => "pml_verify",
            StudyKind::GammaDvScan => "gamma_dv_scan",
            StudyKind::CsolScan => "csol_scan",
        }
    }
}

impl FromStr for StudyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "convergence" => StudyKind::Convergence,
            "interpolation" => StudyKind::Interpolation,
            "pollution" => StudyKind::Pollution,
            "preasymptotic" => StudyKind::Preasymptotic,
            "pml_verify" => StudyKind::PmlVerify,
            "gamma_dv_scan" => StudyKind::GammaDvScan,
            "csol_scan" => StudyKind::CsolScan,
            _ => return Err(Error::Config(format!("unknown study kind '{s}'"))),
        })
    }
}

/// Geometry of the computational domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Unit cube `[0, 1]³` with `n` cells per axis.
    Cube,
    /// `[0, 1]² × [0, 1/n]`: `n × n × 1` cells.
    Slab,
    /// `[-1, 1]³` with `n` cells per axis, for PML runs.
    PmlBox,
}

impl FromStr for MeshKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "cube" => MeshKind::Cube,
            "slab" => MeshKind::Slab,
            "pml_box" => MeshKind::PmlBox,
            _ => return Err(Error::Config(format!("unknown mesh kind '{s}'"))),
        })
    }
}

impl MeshKind {
    pub fn build(self, n: usize) -> Result<Mesh> {
        if n == 0 {
            return Err(Error::Argument("n must be at least 1".into()));
        }
        let rule = |_: Vec3| 0;
        match self {
            MeshKind::Cube => generate_box_mesh([n; 3], [1.0; 3], [0.0; 3], &rule),
            MeshKind::Slab => generate_box_mesh([n, n, 1], [1.0, 1.0, 1.0 / n as f64], [0.0; 3], &rule),
            MeshKind::PmlBox => generate_box_mesh([n; 3], [2.0; 3], [-1.0; 3], &rule),
        }
    }

    /// Lower corner and side of the (x, y) square the solutions live on.
    fn frame(self) -> (Vec3, f64) {
        match self {
            MeshKind::PmlBox => ([-1.0; 3], 2.0),
            _ => ([0.0; 3], 1.0),
        }
    }

    /// Mesh size `max h_K` of the `n`-cell mesh without building it.
    pub fn h(self, n: usize) -> f64 {
        let c = match self {
            MeshKind::PmlBox => 2.0 / n as f64,
            _ => 1.0 / n as f64,
        };
        3f64.sqrt() * c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoeffKind {
    /// μ = ε = I.
    Vacuum,
    /// μ = I, ε = 1 + a·bump.
    Bump,
    /// Radial PML around μ = ε = I.
    Pml,
}

impl FromStr for CoeffKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "vacuum" => CoeffKind::Vacuum,
            "bump" => CoeffKind::Bump,
            "pml" => CoeffKind::Pml,
            _ => return Err(Error::Config(format!("unknown coefficient kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionId {
    Sine3,
    Gradient,
    SlabWave,
}

impl FromStr for SolutionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sine3" => SolutionId::Sine3,
            "gradient" => SolutionId::Gradient,
            "slab_wave" => SolutionId::SlabWave,
            _ => return Err(Error::Argument(format!("unknown manufactured solution '{s}'"))),
        })
    }
}

/// Settings of one study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub kind: StudyKind,
    pub mesh_kind: MeshKind,
    pub n_list: Vec<usize>,
    pub family: Family,
    pub p: usize,
    pub k_list: Vec<f64>,
    pub coeff: CoeffKind,
    pub pml: PmlProfile,
    pub pml_theta_list: Vec<f64>,
    pub bump_amplitude: f64,
    pub bump_radius: f64,
    pub solution: SolutionId,
    /// Target `k h` of pollution runs.
    pub kh: f64,
    /// Bound on `(k h)² C_sol` in the rescaled pollution regime.
    pub csol_bound: f64,
    /// Largest system a study may build.
    pub max_dofs: usize,
    pub enrichment: usize,
    pub csol_tol: f64,
    /// Estimate C_sol for every solved row.
    pub with_csol: bool,
    /// Fill the `wall_ms` column.
    pub timing: bool,
    pub output_csv: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            kind: StudyKind::Convergence,
            mesh_kind: MeshKind::Cube,
            n_list: vec![2, 4, 8],
            family: Family::Nedelec1,
            p: 1,
            k_list: vec![5.0],
            coeff: CoeffKind::Vacuum,
            pml: PmlProfile { theta: PI / 4.0, r_minus: 0.5, r_plus: 0.8 },
            pml_theta_list: vec![PI / 8.0, PI / 4.0, 3.0 * PI / 8.0],
            bump_amplitude: 1.0,
            bump_radius: 0.3,
            solution: SolutionId::Sine3,
            kh: 0.6,
            csol_bound: 0.5,
            max_dofs: 60_000,
            enrichment: 2,
            csol_tol: 1e-6,
            with_csol: false,
            timing: false,
            output_csv: None,
        }
    }
}

impl StudyConfig {
    /// Defaults for `kind`; pollution scans use the slab geometry.
    pub fn for_kind(kind: StudyKind) -> Self {
        let base = StudyConfig { kind, ..StudyConfig::default() };
        match kind {
            StudyKind::Pollution => StudyConfig {
                mesh_kind: MeshKind::Slab,
                solution: SolutionId::SlabWave,
                k_list: vec![5.0, 10.0, 20.0],
                ..base
            },
            _ => base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::Config("mesh.n_list must hold positive integers".into()));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("mesh.n_list must be strictly increasing".into()));
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|k| !(*k > 0.0) || !k.is_finite()) {
            return Err(Error::Config("problem.k_list must hold positive numbers".into()));
        }
        if !self.family.is_curl_conforming() {
            return Err(Error::Config("fem.family must be nedelec1 or nedelec2".into()));
        }
        if self.p == 0 || self.p > self.family.max_degree() {
            return Err(Error::Config(format!("fem.p must be in 1..={}", self.family.max_degree())));
        }
        if !(self.kh > 0.0) || !(self.csol_bound > 0.0) || !(self.csol_tol > 0.0) {
            return Err(Error::Config("pollution.kh, pollution.csol_bound and csol.tol must be positive".into()));
        }
        if self.enrichment == 0 {
            return Err(Error::Config("gamma.enrichment must be at least 1".into()));
        }
        build_pml_profile(self.pml.theta, self.pml.r_minus, self.pml.r_plus)?;
        for &t in &self.pml_theta_list {
            build_pml_profile(t, self.pml.r_minus, self.pml.r_plus)?;
        }
        Ok(())
    }
}

/// One CSV row. Absent quantities are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub study: String,
    pub k: f64,
    pub h: f64,
    pub p: usize,
    pub dofs: usize,
    pub err_l2_rel: Option<f64>,
    pub err_curlk_rel: Option<f64>,
    pub err_hkcurl_rel: Option<f64>,
    pub best_approx_rel: Option<f64>,
    pub gamma_dv: Option<f64>,
    pub c_sol: Option<f64>,
    pub rate_hkcurl: Option<f64>,
    pub wall_ms: Option<f64>,
    /// Set when the row could not be computed (for example a singular
    /// system); the error fields are then empty.
    pub failure: Option<String>,
}

impl StudyRow {
    fn new(study: StudyKind, k: f64, h: f64, p: usize, dofs: usize) -> Self {
        StudyRow {
            study: study.as_str().into(),
            k,
            h,
            p,
            dofs,
            err_l2_rel: None,
            err_curlk_rel: None,
            err_hkcurl_rel: None,
            best_approx_rel: None,
            gamma_dv: None,
            c_sol: None,
            rate_hkcurl: None,
            wall_ms: None,
            failure: None,
        }
    }

    pub fn to_csv_line(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.study,
            self.k,
            self.h,
            self.p,
            self.dofs,
            o(self.err_l2_rel),
            o(self.err_curlk_rel),
            o(self.err_hkcurl_rel),
            o(self.best_approx_rel),
            o(self.gamma_dv),
            o(self.c_sol),
            o(self.rate_hkcurl),
            o(self.wall_ms)
        )
    }
}

/// Rows of a study plus named summary statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub summary: Vec<(String, f64)>,
}

impl StudyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.to_csv_line());
            s.push('\n');
        }
        s
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.summary {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    /// Fills `rate_hkcurl` from consecutive rows with equal k and p.
    fn compute_rates(&mut self) {
        for i in 1..self.rows.len() {
            let (a, b) = (&self.rows[i - 1], &self.rows[i]);
            if a.k != b.k || a.p != b.p || a.h == b.h {
                continue;
            }
            if let (Some(ea), Some(eb)) = (a.err_hkcurl_rel, b.err_hkcurl_rel) {
                if ea >= RATE_FLOOR && eb >= RATE_FLOOR {
                    self.rows[i].rate_hkcurl = Some((ea / eb).ln() / (a.h / b.h).ln());
                }
            }
        }
    }
}

type FieldFn = Arc<dyn Fn(Vec3) -> CVec3 + Send + Sync>;

/// Closed-form field `E`, its curl, and `f = k⁻² curl curl E − E`.
#[derive(Clone)]
pub struct ManufacturedSolution {
    pub id: SolutionId,
    pub k: f64,
    pub field: FieldFn,
    pub curl: FieldFn,
    pub source: FieldFn,
}

fn real3(v: [f64; 3]) -> CVec3 {
    v.map(|x| C64::new(x, 0.0))
}

/// Manufactured solution on the unit cube.
pub fn manufactured_solution(id: &str, k: f64) -> Result<ManufacturedSolution> {
    manufactured_solution_on(id.parse()?, k, [0.0; 3], 1.0)
}

/// Manufactured solution on the cube `lo + [0, side]³` (for `slab_wave`
/// only x and y are rescaled).
pub fn manufactured_solution_on(id: SolutionId, k: f64, lo: Vec3, side: f64) -> Result<ManufacturedSolution> {
    if !(k > 0.0) || !(side > 0.0) {
        return Err(Error::Argument("k and side must be positive".into()));
    }
    let s = move |x: Vec3| [0, 1, 2].map(|c| (x[c] - lo[c]) / side);
    let a = PI / side;
    let (field, curl, source): (FieldFn, FieldFn, FieldFn) = match id {
        SolutionId::Sine3 => {
            let e = move |x: Vec3| {
                let [sx, sy, sz] = s(x).map(|t| (PI * t).sin());
                [sy * sz, sx * sz, sx * sy]
            };
            let factor = 2.0 * a * a / (k * k) - 1.0;
            (
                Arc::new(move |x| real3(e(x))),
                Arc::new(move |x| {
                    let u = s(x);
                    let [sx, sy, sz] = u.map(|t| (PI * t).sin());
                    let [cx, cy, cz] = u.map(|t| (PI * t).cos());
                    real3([a * sx * (cy - cz), a * sy * (cz - cx), a * sz * (cx - cy)])
                }),
                Arc::new(move |x| real3(e(x).map(|v| factor * v))),
            )
        }
        SolutionId::Gradient => {
            let g = move |x: Vec3| {
                let u = s(x);
                let b = u.map(|t| t * (1.0 - t));
                let db = u.map(|t| (1.0 - 2.0 * t) / side);
                [64.0 * db[0] * b[1] * b[2], 64.0 * b[0] * db[1] * b[2], 64.0 * b[0] * b[1] * db[2]]
            };
            (Arc::new(move |x| real3(g(x))), Arc::new(|_| [ZERO_C; 3]), Arc::new(move |x| real3(g(x).map(|v| -v))))
        }
        SolutionId::SlabWave => {
            let (dx, dy) = ((PI / 5.0).cos(), (PI / 5.0).sin());
            // u = B(x, y) sin(k d·x) with the envelope B = 16 x(1−x) y(1−y)
            let parts = move |x: Vec3| {
                let u = s(x);
                let (bx, by) = (u[0] * (1.0 - u[0]), u[1] * (1.0 - u[1]));
                let b = 16.0 * bx * by;
                let gb = [16.0 * (1.0 - 2.0 * u[0]) * by / side, 16.0 * bx * (1.0 - 2.0 * u[1]) / side];
                let lap = 16.0 * (-2.0 * by - 2.0 * bx) / (side * side);
                let phase = k * (dx * x[0] + dy * x[1]);
                (b, gb, lap, phase.sin(), phase.cos())
            };
            (
                Arc::new(move |x| {
                    let (b, _, _, sn, _) = parts(x);
                    real3([0.0, 0.0, b * sn])
                }),
                Arc::new(move |x| {
                    let (b, gb, _, sn, cs) = parts(x);
                    let ux = gb[0] * sn + b * k * dx * cs;
                    let uy = gb[1] * sn + b * k * dy * cs;
                    real3([uy, -ux, 0.0])
                }),
                Arc::new(move |x| {
                    let (_, gb, lap, sn, cs) = parts(x);
                    let fz = -lap * sn / (k * k) - 2.0 / k * cs * (dx * gb[0] + dy * gb[1]);
                    real3([0.0, 0.0, fz])
                }),
            )
        }
    };
    Ok(ManufacturedSolution { id, k, field, curl, source })
}

/// μ⁻¹ and ε of a study.
pub struct Coefficients {
    pub mu_inv: SharedField,
    pub eps: SharedField,
    pub mu: SharedField,
}

pub fn study_coefficients(cfg: &StudyConfig, theta: f64) -> Result<Coefficients> {
    let id: SharedField = Arc::new(ConstantField::identity());
    Ok(match cfg.coeff {
        CoeffKind::Vacuum => Coefficients { mu_inv: id.clone(), eps: id.clone(), mu: id },
        CoeffKind::Bump => {
            let radius = cfg.bump_radius;
            let amp = cfg.bump_amplitude;
            let bump = bump_permittivity(amp, radius);
            // centre the bump in the cube
            let c = match cfg.mesh_kind {
                MeshKind::PmlBox => [0.0; 3],
                _ => [0.5; 3],
            };
            let eps: SharedField = Arc::new(crate::coefficients::FnField::new(
                &format!("bump permittivity (a = {amp}, R = {radius}) centred at {c:?}"),
                true,
                true,
                move |x| {
                    use crate::coefficients::CoefficientField;
                    bump.eval([x[0] - c[0], x[1] - c[1], x[2] - c[2]], 0)
                        .unwrap_or_else(|_| cscalar(C64::new(f64::NAN, 0.0)))
                },
            ));
            Coefficients { mu_inv: id.clone(), eps, mu: id }
        }
        CoeffKind::Pml => {
            let profile = build_pml_profile(theta, cfg.pml.r_minus, cfg.pml.r_plus)?;
            let mu: SharedField =
                Arc::new(PmlField { profile, tensor: PmlTensor::Mu, mu_scat: id.clone(), eps_scat: id.clone() });
            let eps: SharedField =
                Arc::new(PmlField { profile, tensor: PmlTensor::Epsilon, mu_scat: id.clone(), eps_scat: id.clone() });
            Coefficients { mu_inv: Arc::new(InverseField(mu.clone())), eps, mu }
        }
    })
}

/// Result of one Galerkin solve.
pub struct SolveOutcome {
    pub space: FeSpace,
    pub solution: Vec<C64>,
    pub system: crate::assembly::LinearSystem,
}

/// Builds the space on `mesh`, assembles the manufactured problem and solves it.
///
/// The load is `(f, φ)` with the closed-form `f` for vacuum coefficients,
/// `M Π_h f` for the gradient solution, and the weak form
/// `k⁻²(μ⁻¹ curl E, curl φ) − (εE, φ)` otherwise.
pub fn solve_manufactured(
    mesh: Arc<Mesh>,
    cfg: &StudyConfig,
    coef: &Coefficients,
    sol: &ManufacturedSolution,
) -> Result<SolveOutcome> {
    let space = build_fe_space(mesh, cfg.family, cfg.p, BoundaryCondition::Pec)?;
    let mut system = assemble_system(&space, coef.mu_inv.as_ref(), coef.eps.as_ref(), sol.k)?;
    system.rhs = match (cfg.coeff, sol.id) {
        (CoeffKind::Vacuum, SolutionId::Gradient) => {
            let mut fi = canonical_interpolate(&space, &*sol.source)?;
            for d in space.constrained_dofs() {
                fi[d] = ZERO_C;
            }
            let m = assemble_mass(&space, &ConstantField::identity())?;
            space.restrict_free(&m.mul_vec(&fi))
        }
        (CoeffKind::Vacuum, _) => assemble_load(&space, &*sol.source)?,
        _ => assemble_weak_load(&space, coef.mu_inv.as_ref(), coef.eps.as_ref(), sol.k, &*sol.field, &*sol.curl)?,
    };
    let fac = factorize(&system.matrix)?;
    let solution = solve(&fac, &system.rhs)?;
    Ok(SolveOutcome { space, solution, system })
}

fn check_budget(cfg: &StudyConfig, dofs: usize) -> Result<()> {
    if dofs > cfg.max_dofs {
        return Err(Error::Capability(format!("{dofs} DOFs exceed the budget of {}", cfg.max_dofs)));
    }
    Ok(())
}

fn elapsed_ms(cfg: &StudyConfig, t: Instant) -> Option<f64> {
    cfg.timing.then(|| t.elapsed().as_secs_f64() * 1e3)
}

/// One solved row: errors, interpolant error, optional C_sol.
fn solved_row(cfg: &StudyConfig, kind: StudyKind, mesh: Arc<Mesh>, k: f64, theta: f64) -> Result<StudyRow> {
    let start = Instant::now();
    let coef = study_coefficients(cfg, theta)?;
    let (lo, side) = cfg.mesh_kind.frame();
    let sol = manufactured_solution_on(cfg.solution, k, lo, side)?;
    let h = mesh.h();
    let probe = build_fe_space(mesh.clone(), cfg.family, cfg.p, BoundaryCondition::Pec)?;
    check_budget(cfg, probe.n_free())?;
    let mut row = StudyRow::new(kind, k, h, cfg.p, probe.n_free());
    let best = interpolation_error(&probe, &*sol.field, &*sol.curl, k)?;
    row.best_approx_rel = Some(best.rel_hk_curl);
    drop(probe);
    match solve_manufactured(mesh, cfg, &coef, &sol) {
        Ok(out) => {
            let rep = relative_error(&out.space, &out.solution, &*sol.field, &*sol.curl, k)?;
            row.err_l2_rel = Some(rep.rel_l2);
            row.err_curlk_rel = Some(rep.rel_curl_k);
            row.err_hkcurl_rel = Some(rep.rel_hk_curl);
            if cfg.with_csol {
                let m = l2_mass_matrix(&out.space)?;
                row.c_sol = Some(estimate_csol(&out.system, &m, cfg.csol_tol)?.value);
            }
        }
        Err(e) if e.is_numerical() => row.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    row.wall_ms = elapsed_ms(cfg, start);
    Ok(row)
}

fn grid(cfg: &StudyConfig) -> Vec<(f64, usize)> {
    cfg.k_list.iter().flat_map(|&k| cfg.n_list.iter().map(move |&n| (k, n))).collect()
}

/// Rows computed concurrently and merged in input order.
fn parallel_rows<T: Sync>(items: &[T], f: impl Fn(&T) -> Result<StudyRow> + Sync + Send) -> Result<Vec<StudyRow>> {
    items.par_iter().map(f).collect()
}

/// Galerkin errors and interpolant errors over `k_list × n_list`.
pub fn run_convergence_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let kind = if cfg.kind == StudyKind::Preasymptotic { StudyKind::Preasymptotic } else { StudyKind::Convergence };
    let rows = parallel_rows(&grid(cfg), |&(k, n)| {
        let mesh = Arc::new(cfg.mesh_kind.build(n)?);
        solved_row(cfg, kind, mesh, k, cfg.pml.theta)
    })?;
    let mut report = StudyReport { rows, summary: Vec::new() };
    report.compute_rates();
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| Some(r.err_hkcurl_rel? / r.best_approx_rel?)).collect();
    if let Some(max) = ratios.iter().copied().reduce(f64::max) {
        report.summary.push(("max_galerkin_to_best_ratio".into(), max));
    }
    report.summary.push(("failed_rows".into(), report.rows.iter().filter(|r| r.failure.is_some()).count() as f64));
    Ok(report)
}

/// Canonical-interpolant errors over `k_list × n_list`.
pub fn run_interpolation_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let rows = parallel_rows(&grid(cfg), |&(k, n)| {
        let start = Instant::now();
        let mesh = Arc::new(cfg.mesh_kind.build(n)?);
        let (lo, side) = cfg.mesh_kind.frame();
        let sol = manufactured_solution_on(cfg.solution, k, lo, side)?;
        let space = build_fe_space(mesh.clone(), cfg.family, cfg.p, BoundaryCondition::Pec)?;
        let rep = interpolation_error(&space, &*sol.field, &*sol.curl, k)?;
        let mut row = StudyRow::new(StudyKind::Interpolation, k, mesh.h(), cfg.p, space.n_free());
        row.err_l2_rel = Some(rep.rel_l2);
        row.err_curlk_rel = Some(rep.rel_curl_k);
        row.err_hkcurl_rel = Some(rep.rel_hk_curl);
        row.best_approx_rel = Some(rep.rel_hk_curl);
        row.wall_ms = elapsed_ms(cfg, start);
        Ok(row)
    })?;
    let mut report = StudyReport { rows, summary: Vec::new() };
    report.compute_rates();
    Ok(report)
}

/// Smallest `n` with `k h(n) ≤ kh`.
pub fn cells_for_kh(kind: MeshKind, k: f64, kh: f64) -> usize {
    let mut n = ((k * kind.h(1)) / kh).ceil().max(1.0) as usize;
    while n > 1 && k * kind.h(n - 1) <= kh {
        n -= 1;
    }
    while k * kind.h(n) > kh {
        n += 1;
    }
    n
}

/// Pollution scan: errors versus k at fixed `k h` (mesh chosen per k), and
/// a second pass that refines each mesh until `(k h)² C_sol` is below the
/// configured bound (or the DOF budget is exhausted).
pub fn run_pollution_study(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut fixed_cfg = cfg.clone();
    fixed_cfg.with_csol = true;
    let fixed = parallel_rows(&cfg.k_list, |&k| {
        let n = cells_for_kh(cfg.mesh_kind, k, cfg.kh);
        let mesh = Arc::new(cfg.mesh_kind.build(n)?);
        solved_row(&fixed_cfg, StudyKind::Pollution, mesh, k, cfg.pml.theta)
    })?;
    let errs: Vec<f64> = fixed.iter().filter_map(|r| r.err_hkcurl_rel).collect();
    let mut summary = Vec::new();
    let complete = errs.len() == cfg.k_list.len();
    let increasing = complete && errs.windows(2).all(|w| w[1] > w[0]);
    summary.push(("fixed_kh_strictly_increasing".into(), if increasing { 1.0 } else { 0.0 }));
    if complete {
        summary.push(("fixed_kh_max_over_min".into(), max_over_min(&errs)));
    }

    let rescaled = parallel_rows(&cfg.k_list, |&k| {
        let mut n = cells_for_kh(cfg.mesh_kind, k, cfg.kh);
        loop {
            let mesh = Arc::new(cfg.mesh_kind.build(n)?);
            let dofs = build_fe_space(mesh.clone(), cfg.family, cfg.p, BoundaryCondition::Pec)?.n_free();
            if dofs > cfg.max_dofs {
                let mut row = StudyRow::new(StudyKind::Pollution, k, mesh.h(), cfg.p, dofs);
                row.failure =
                    Some(format!("DOF budget {} reached before (kh)^2 C_sol <= {}", cfg.max_dofs, cfg.csol_bound));
                return Ok(row);
            }
            let row = solved_row(&fixed_cfg, StudyKind::Pollution, mesh.clone(), k, cfg.pml.theta)?;
            let Some(c) = row.c_sol else { return Ok(row) };
            let kh = k * row.h;
            if kh * kh * c <= cfg.csol_bound {
                return Ok(row);
            }
            // smallest n meeting the bound at the current C_sol
            let target = (kh * kh * c / cfg.csol_bound).sqrt();
            n = ((n as f64 * target).ceil() as usize).max(n + 1);
        }
    })?;
    let errs: Vec<f64> =
        rescaled.iter().filter_map(|r| if r.failure.is_none() { r.err_hkcurl_rel } else { None }).collect();
    let regime_reached = errs.len() == cfg.k_list.len();
    summary.push(("rescaled_regime_reached".into(), if regime_reached { 1.0 } else { 0.0 }));
    if regime_reached {
        summary.push(("rescaled_max_over_min".into(), max_over_min(&errs)));
    }
    let mut rows = fixed;
    rows.extend(rescaled);
    Ok(StudyReport { rows, summary })
}

fn max_over_min(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    max / min
}

/// Sampled coefficient constants of a PML profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlCertificate {
    pub theta: f64,
    /// min λ_min(Re ε) and min λ_min(Re μ⁻¹) over the far region `r ≥ R+`.
    pub coercivity_eps_far: f64,
    pub coercivity_mu_inv_far: f64,
    /// The same over the layer `R− ≤ r ≤ R+`.
    pub coercivity_eps_layer: f64,
    pub coercivity_mu_inv_layer: f64,
    /// max ‖ε‖ and ‖μ⁻¹‖ over all samples.
    pub bound_eps: f64,
    pub bound_mu_inv: f64,
    /// max deviation of the far-region tensors from `(1 + i tan θ) I`.
    pub far_tensor_deviation: f64,
    pub junction_residual: f64,
    /// smallest sampled increment of f(r)/r
    pub ratio_monotonicity: f64,
}

pub const PML_SAMPLES: usize = 4000;
pub const PML_SEED: u64 = 7;

pub fn certify_pml(theta: f64, r_minus: f64, r_plus: f64) -> Result<PmlCertificate> {
    let profile = build_pml_profile(theta, r_minus, r_plus)?;
    let id: SharedField = Arc::new(ConstantField::identity());
    let field = |tensor| PmlField { profile, tensor, mu_scat: id.clone(), eps_scat: id.clone() };
    let eps = field(PmlTensor::Epsilon);
    let mu = field(PmlTensor::Mu);
    let far = sample_shell(PML_SAMPLES, r_plus, 2.0 * r_plus, PML_SEED);
    let layer = sample_shell(PML_SAMPLES, r_minus, r_plus, PML_SEED + 1);
    let all: Vec<_> = far.iter().chain(&layer).copied().collect();
    let positive = |rep: crate::coefficients::BoundReport, what: &str| -> Result<f64> {
        if !(rep.value > 0.0) {
            return Err(Error::Coefficient {
                point: rep.location,
                message: format!("{what} is not coercive (λ_min = {})", rep.value),
            });
        }
        Ok(rep.value)
    };
    let target = cscalar(C64::new(1.0, theta.tan()));
    let mut dev: f64 = 0.0;
    for &(x, r) in &far {
        use crate::coefficients::CoefficientField;
        dev = dev.max(cmax_abs_diff(&eps.eval(x, r)?, &target));
        dev = dev.max(cmax_abs_diff(&mu.eval(x, r)?, &target));
    }
    Ok(PmlCertificate {
        theta,
        coercivity_eps_far: positive(verify_coefficient_bounds(&eps, &far, BoundMode::Coercivity)?, "Re ε")?,
        coercivity_mu_inv_far: positive(
            verify_coefficient_bounds(&mu, &far, BoundMode::CoercivityOfInverse)?,
            "Re μ⁻¹",
        )?,
        coercivity_eps_layer: positive(verify_coefficient_bounds(&eps, &layer, BoundMode::Coercivity)?, "Re ε")?,
        coercivity_mu_inv_layer: positive(
            verify_coefficient_bounds(&mu, &layer, BoundMode::CoercivityOfInverse)?,
            "Re μ⁻¹",
        )?,
        bound_eps: verify_coefficient_bounds(&eps, &all, BoundMode::Boundedness)?.value,
        bound_mu_inv: verify_coefficient_bounds(&mu, &all, BoundMode::BoundednessOfInverse)?.value,
        far_tensor_deviation: dev,
        junction_residual: profile.junction_residuals().into_iter().fold(0.0, f64::max),
        ratio_monotonicity: profile.monotonicity_margins(10_000).1,
    })
}

/// PML coefficient certification for every angle of `pml_theta_list`, then
/// a manufactured convergence run with the PML coefficients of `pml.theta`.
pub fn run_pml_verification(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let mut summary = Vec::new();
    for &theta in &cfg.pml_theta_list {
        let c = certify_pml(theta, cfg.pml.r_minus, cfg.pml.r_plus)?;
        let tag = format!("theta={theta}");
        summary.extend([
            (format!("{tag}.coercivity_eps_far"), c.coercivity_eps_far),
            (format!("{tag}.coercivity_mu_inv_far"), c.coercivity_mu_inv_far),
            (format!("{tag}.coercivity_eps_layer"), c.coercivity_eps_layer),
            (format!("{tag}.coercivity_mu_inv_layer"), c.coercivity_mu_inv_layer),
            (format!("{tag}.bound_eps"), c.bound_eps),
            (format!("{tag}.bound_mu_inv"), c.bound_mu_inv),
            (format!("{tag}.far_tensor_deviation"), c.far_tensor_deviation),
            (format!("{tag}.junction_residual"), c.junction_residual),
            (format!("{tag}.ratio_monotonicity"), c.ratio_monotonicity),
        ]);
    }
    let mut pml_cfg = cfg.clone();
    pml_cfg.coeff = CoeffKind::Pml;
    pml_cfg.mesh_kind = MeshKind::PmlBox;
    let rows = parallel_rows(&grid(&pml_cfg), |&(k, n)| {
        let mesh = Arc::new(pml_cfg.mesh_kind.build(n)?);
        solved_row(&pml_cfg, StudyKind::PmlVerify, mesh, k, cfg.pml.theta)
    })?;
    let mut report = StudyReport { rows, summary };
    report.compute_rates();
    Ok(report)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn append_slopes(
    report: &mut StudyReport,
    name: &str,
    value: impl Fn(&StudyRow) -> Option<f64>,
    k_list: &[f64],
    n_count: usize,
) {
    for &k in k_list {
        let rows: Vec<&StudyRow> = report.rows.iter().filter(|r| r.k == k).collect();
        let (h, v): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(|r| Some((r.h, value(r)?))).unzip();
        if let Some(s) = log_log_slope(&h, &v) {
            report.summary.push((format!("k={k}.{name}_slope_h"), s));
        }
    }
    if k_list.len() > 1 {
        for i in 0..n_count {
            let (k, v): (Vec<f64>, Vec<f64>) = k_list
                .iter()
                .filter_map(|&k| {
                    let r = report.rows.iter().filter(|r| r.k == k).nth(i)?;
                    Some((k, value(r)?))
                })
                .unzip();
            if let (Some(s), Some(r)) = (log_log_slope(&k, &v), report.rows.iter().filter(|r| r.k == k_list[0]).nth(i))
            {
                report.summary.push((format!("h={}.{name}_slope_k", r.h), s));
            }
        }
    }
}

/// γ_dv over `k_list × n_list` (Nédélec first kind, PEC cube).
pub fn run_gamma_dv_scan(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let rows = parallel_rows(&grid(cfg), |&(k, n)| {
        let start = Instant::now();
        let mesh = Arc::new(cfg.mesh_kind.build(n)?);
        let coef = study_coefficients(cfg, cfg.pml.theta)?;
        let r = estimate_gamma_dv(&mesh, cfg.p, &coef.eps, &coef.mu, k, cfg.enrichment)?;
        let mut row = StudyRow::new(StudyKind::GammaDvScan, k, mesh.h(), cfg.p, r.n_nedelec);
        row.gamma_dv = Some(r.value);
        row.wall_ms = elapsed_ms(cfg, start);
        Ok(row)
    })?;
    let mut report = StudyReport { rows, summary: Vec::new() };
    append_slopes(&mut report, "gamma_dv", |r| r.gamma_dv, &cfg.k_list, cfg.n_list.len());
    Ok(report)
}

/// C_sol over `k_list × n_list` for the configured coefficients.
pub fn run_csol_scan(cfg: &StudyConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let rows = parallel_rows(&grid(cfg), |&(k, n)| {
        let start = Instant::now();
        let mesh = Arc::new(cfg.mesh_kind.build(n)?);
        let coef = study_coefficients(cfg, cfg.pml.theta)?;
        let space = build_fe_space(mesh.clone(), cfg.family, cfg.p, BoundaryCondition::Pec)?;
        check_budget(cfg, space.n_free())?;
        let system = assemble_system(&space, coef.mu_inv.as_ref(), coef.eps.as_ref(), k)?;
        let m = l2_mass_matrix(&space)?;
        let mut row = StudyRow::new(StudyKind::CsolScan, k, mesh.h(), cfg.p, space.n_free());
        match estimate_csol(&system, &m, cfg.csol_tol) {
            Ok(c) => row.c_sol = Some(c.value),
            Err(e) if e.is_numerical() => row.failure = Some(e.to_string()),
            Err(e) => return Err(e),
        }
        row.wall_ms = elapsed_ms(cfg, start);
        Ok(row)
    })?;
    let mut report = StudyReport { rows, summary: Vec::new() };
    append_slopes(&mut report, "c_sol", |r| r.c_sol, &cfg.k_list, cfg.n_list.len());
    Ok(report)
}

/// Runs the study selected by `cfg.kind`.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyReport> {
    match cfg.kind {
        StudyKind::Convergence | StudyKind::Preasymptotic => {
            let mut c = cfg.clone();
            if cfg.kind == StudyKind::Preasymptotic {
                c.with_csol = true;
            }
            run_convergence_study(&c)
        }
        StudyKind::Interpolation => run_interpolation_study(cfg),
        StudyKind::Pollution => run_pollution_study(cfg),
        StudyKind::PmlVerify => run_pml_verification(cfg),
        StudyKind::GammaDvScan => run_gamma_dv_scan(cfg),
        StudyKind::CsolScan => run_csol_scan(cfg),
    }
}
