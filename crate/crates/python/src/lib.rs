//! Python bindings: meshes, spaces, manufactured solves, diagnostics and studies.

use std::collections::BTreeMap;
use std::sync::Arc;

use edgefem_core::cli::{study_config, ConfigMap};
use edgefem_core::coefficients::{ConstantField, SharedField};
use edgefem_core::diagnostics::{estimate_csol, estimate_gamma_dv, interpolation_error, l2_mass_matrix, ErrorReport};
use edgefem_core::experiments::{
    certify_pml, manufactured_solution, run_study as run_study_rs, solve_manufactured, study_coefficients, StudyConfig,
    StudyKind, StudyReport,
};
use edgefem_core::linalg::C64;
use edgefem_core::mesh::{generate_cube_mesh, generate_shell_mesh, parse_mesh, write_mesh};
use edgefem_core::reference::Family;
use edgefem_core::spaces::{build_fe_space, BoundaryCondition};
use edgefem_core::Error;
use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

create_exception!(edgefem, NumericalError, PyRuntimeError, "Singular system, breakdown or non-convergence.");

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        e if e.is_numerical() => NumericalError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for edgefem_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().py_err()
}

fn boundary(s: &str) -> PyResult<BoundaryCondition> {
    match s {
        "pec" => Ok(BoundaryCondition::Pec),
        "natural" => Ok(BoundaryCondition::Natural),
        _ => Err(PyValueError::new_err(format!("unknown boundary condition '{s}'"))),
    }
}

/// Tetrahedral mesh with oriented edges and faces.
#[pyclass(module = "edgefem", frozen)]
struct Mesh {
    inner: Arc<edgefem_core::mesh::Mesh>,
}

#[pymethods]
impl Mesh {
    /// Structured Kuhn mesh of `[0, side]³` with `n` cells per side.
    #[staticmethod]
    #[pyo3(signature = (n, side=1.0))]
    fn cube(n: usize, side: f64) -> PyResult<Self> {
        let m = generate_cube_mesh(n, side, &|_| 0).py_err()?;
        Ok(Mesh { inner: Arc::new(m) })
    }

    /// Box `[-outer, outer]³` with the cube `[-inner, inner]³` removed.
    #[staticmethod]
    fn shell(n: usize, inner: f64, outer: f64) -> PyResult<Self> {
        let m = generate_shell_mesh(n, inner, outer).py_err()?;
        Ok(Mesh { inner: Arc::new(m) })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Mesh { inner: Arc::new(parse_mesh(text).py_err()?) })
    }

    fn to_text(&self) -> String {
        write_mesh(&self.inner)
    }

    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    #[getter]
    fn n_faces(&self) -> usize {
        self.inner.n_faces()
    }

    #[getter]
    fn n_tets(&self) -> usize {
        self.inner.n_tets()
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn vertices(&self) -> Vec<[f64; 3]> {
        self.inner.vertices().to_vec()
    }

    fn tets(&self) -> Vec<[usize; 4]> {
        self.inner.tets().to_vec()
    }

    fn euler_characteristic(&self) -> i64 {
        self.inner.euler_characteristic()
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, tets={}, h={})", self.inner.n_vertices(), self.inner.n_tets(), self.inner.h())
    }
}

/// Global finite element space on a mesh.
#[pyclass(module = "edgefem", frozen)]
struct FeSpace {
    inner: edgefem_core::spaces::FeSpace,
}

#[pymethods]
impl FeSpace {
    #[new]
    #[pyo3(signature = (mesh, family="nedelec1", p=1, bc="pec"))]
    fn new(mesh: &Mesh, family: &str, p: usize, bc: &str) -> PyResult<Self> {
        let inner = build_fe_space(mesh.inner.clone(), parse::<Family>(family)?, p, boundary(bc)?).py_err()?;
        Ok(FeSpace { inner })
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_string()
    }

    #[getter]
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    #[getter]
    fn n_dofs(&self) -> usize {
        self.inner.n_dofs()
    }

    #[getter]
    fn n_free(&self) -> usize {
        self.inner.n_free()
    }

    fn local_dofs(&self, t: usize) -> PyResult<Vec<usize>> {
        if t >= self.inner.mesh().n_tets() {
            return Err(PyValueError::new_err(format!("element {t} out of range")));
        }
        Ok(self.inner.local_dofs(t).to_vec())
    }

    fn __repr__(&self) -> String {
        format!("FeSpace(family={}, p={}, dofs={})", self.inner.family(), self.inner.degree(), self.inner.n_dofs())
    }
}

/// Discrete errors against a closed-form field.
#[pyclass(module = "edgefem", frozen, get_all)]
struct Errors {
    k: f64,
    h: f64,
    p: usize,
    dofs: usize,
    err_l2: f64,
    err_curl_k: f64,
    err_hk_curl: f64,
    rel_l2: f64,
    rel_curl_k: f64,
    rel_hk_curl: f64,
    zero_denominator: bool,
}

impl From<ErrorReport> for Errors {
    fn from(r: ErrorReport) -> Self {
        Errors {
            k: r.k,
            h: r.h,
            p: r.p,
            dofs: r.dofs,
            err_l2: r.err_l2,
            err_curl_k: r.err_curl_k,
            err_hk_curl: r.err_hk_curl,
            rel_l2: r.rel_l2,
            rel_curl_k: r.rel_curl_k,
            rel_hk_curl: r.rel_hk_curl,
            zero_denominator: r.zero_denominator,
        }
    }
}

#[pymethods]
impl Errors {
    fn __repr__(&self) -> String {
        format!("Errors(dofs={}, rel_l2={:e}, rel_hk_curl={:e})", self.dofs, self.rel_l2, self.rel_hk_curl)
    }
}

/// Galerkin solution of a manufactured problem.
#[pyclass(module = "edgefem", frozen)]
struct Solution {
    #[pyo3(get)]
    errors: Py<Errors>,
    #[pyo3(get)]
    best_approximation: Py<Errors>,
    coefficients: Vec<C64>,
}

#[pymethods]
impl Solution {
    /// Coefficients of the free degrees of freedom.
    fn coefficients(&self) -> Vec<C64> {
        self.coefficients.clone()
    }
}

fn vacuum_config(family: &str, p: usize) -> PyResult<StudyConfig> {
    Ok(StudyConfig { family: parse(family)?, p, ..StudyConfig::default() })
}

/// Solves the manufactured cube problem in vacuum with PEC walls.
#[pyfunction]
#[pyo3(signature = (mesh, k, p=1, family="nedelec1", solution="sine3"))]
fn solve(py: Python<'_>, mesh: &Mesh, k: f64, p: usize, family: &str, solution: &str) -> PyResult<Solution> {
    let cfg = vacuum_config(family, p)?;
    let sol = manufactured_solution(solution, k).py_err()?;
    let mesh = mesh.inner.clone();
    let (errors, best, coefficients) = py
        .detach(|| -> edgefem_core::Result<_> {
            let coef = study_coefficients(&cfg, cfg.pml.theta)?;
            let out = solve_manufactured(mesh, &cfg, &coef, &sol)?;
            let errors =
                edgefem_core::diagnostics::relative_error(&out.space, &out.solution, &*sol.field, &*sol.curl, k)?;
            let best = interpolation_error(&out.space, &*sol.field, &*sol.curl, k)?;
            Ok((errors, best, out.solution))
        })
        .py_err()?;
    Ok(Solution {
        errors: Py::new(py, Errors::from(errors))?,
        best_approximation: Py::new(py, Errors::from(best))?,
        coefficients,
    })
}

/// Canonical interpolation error of a manufactured field.
#[pyfunction]
#[pyo3(signature = (space, k, solution="sine3"))]
fn interpolation_errors(py: Python<'_>, space: &FeSpace, k: f64, solution: &str) -> PyResult<Errors> {
    let sol = manufactured_solution(solution, k).py_err()?;
    let r = py.detach(|| interpolation_error(&space.inner, &*sol.field, &*sol.curl, k)).py_err()?;
    Ok(r.into())
}

/// Norm of the discrete solution operator in vacuum with PEC walls.
#[pyfunction]
#[pyo3(signature = (mesh, k, p=1, tol=1e-6))]
fn estimate_c_sol(py: Python<'_>, mesh: &Mesh, k: f64, p: usize, tol: f64) -> PyResult<f64> {
    let mesh = mesh.inner.clone();
    py.detach(|| -> edgefem_core::Result<f64> {
        let space = build_fe_space(mesh, Family::Nedelec1, p, BoundaryCondition::Pec)?;
        let id = ConstantField::identity();
        let system = edgefem_core::assembly::assemble_system(&space, &id, &id, k)?;
        let m = l2_mass_matrix(&space)?;
        Ok(estimate_csol(&system, &m, tol)?.value)
    })
    .py_err()
}

/// Divergence-conformity factor in vacuum; returns `(value, dim_w)`.
#[pyfunction]
#[pyo3(signature = (mesh, k, p=1, enrichment=2))]
fn gamma_dv(py: Python<'_>, mesh: &Mesh, k: f64, p: usize, enrichment: usize) -> PyResult<(f64, usize)> {
    let mesh = mesh.inner.clone();
    let id: SharedField = Arc::new(ConstantField::identity());
    let r = py.detach(|| estimate_gamma_dv(&mesh, p, &id, &id, k, enrichment)).py_err()?;
    Ok((r.value, r.dim_w))
}

/// Sampled coefficient constants of a radial PML profile.
#[pyfunction]
fn pml_certificate(theta: f64, r_minus: f64, r_plus: f64) -> PyResult<BTreeMap<&'static str, f64>> {
    let c = certify_pml(theta, r_minus, r_plus).py_err()?;
    Ok(BTreeMap::from([
        ("theta", c.theta),
        ("coercivity_eps_far", c.coercivity_eps_far),
        ("coercivity_mu_inv_far", c.coercivity_mu_inv_far),
        ("coercivity_eps_layer", c.coercivity_eps_layer),
        ("coercivity_mu_inv_layer", c.coercivity_mu_inv_layer),
        ("bound_eps", c.bound_eps),
        ("bound_mu_inv", c.bound_mu_inv),
        ("far_tensor_deviation", c.far_tensor_deviation),
        ("junction_residual", c.junction_residual),
        ("ratio_monotonicity", c.ratio_monotonicity),
    ]))
}

/// Rows and summary of a parameter study.
#[pyclass(module = "edgefem", frozen)]
struct Report {
    inner: StudyReport,
}

#[pymethods]
impl Report {
    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn summary(&self) -> BTreeMap<String, f64> {
        self.inner.summary.iter().cloned().collect()
    }

    /// One dict per row; absent quantities are `None`.
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, pyo3::types::PyDict>>> {
        use pyo3::types::PyDict;
        self.inner
            .rows
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("study", &r.study)?;
                d.set_item("k", r.k)?;
                d.set_item("h", r.h)?;
                d.set_item("p", r.p)?;
                d.set_item("dofs", r.dofs)?;
                d.set_item("err_l2_rel", r.err_l2_rel)?;
                d.set_item("err_curlk_rel", r.err_curlk_rel)?;
                d.set_item("err_hkcurl_rel", r.err_hkcurl_rel)?;
                d.set_item("best_approx_rel", r.best_approx_rel)?;
                d.set_item("gamma_dv", r.gamma_dv)?;
                d.set_item("c_sol", r.c_sol)?;
                d.set_item("rate_hkcurl", r.rate_hkcurl)?;
                d.set_item("failure", r.failure.as_deref())?;
                Ok(d)
            })
            .collect()
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

/// Runs a study. `overrides` holds `section.key=value` strings as on the
/// command line.
#[pyfunction]
#[pyo3(signature = (kind, overrides=Vec::new()))]
fn run_study(py: Python<'_>, kind: &str, overrides: Vec<String>) -> PyResult<Report> {
    let kind: StudyKind = parse(kind)?;
    let mut map = ConfigMap::default();
    for o in &overrides {
        map.apply_override(o).py_err()?;
    }
    let cfg = study_config(&map, kind).py_err()?;
    let inner = py.detach(|| run_study_rs(&cfg)).py_err()?;
    Ok(Report { inner })
}

#[pymodule]
#[pyo3(name = "edgefem")]
fn py_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NumericalError", m.py().get_type::<NumericalError>())?;
    m.add_class::<Mesh>()?;
    m.add_class::<FeSpace>()?;
    m.add_class::<Errors>()?;
    m.add_class::<Solution>()?;
    m.add_class::<Report>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(interpolation_errors, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_c_sol, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_dv, m)?)?;
    m.add_function(wrap_pyfunction!(pml_certificate, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
