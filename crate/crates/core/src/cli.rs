//! Command-line front end.
//!
//! Settings come from a TOML file whose sections map to dotted keys
//! (`[mesh] n_list = [4, 8]` is `mesh.n_list`), followed by `key=value`
//! overrides. Every subcommand prints one final `status=...` line.

use crate::diagnostics::relative_error;
use crate::error::{Error, Result};
#[cfg(test)]
use crate::experiments::CoeffKind;
use crate::experiments::{
    manufactured_solution_on, run_study, solve_manufactured, study_coefficients, MeshKind, SolutionId, StudyConfig,
    StudyKind, StudyReport, StudyRow, CSV_HEADER,
};
use crate::mesh::write_mesh;
use crate::reference::Family;
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueKind {
    Str,
    Int,
    Float,
    Bool,
    IntList,
    FloatList,
}

pub struct ConfigKey {
    pub name: &'static str,
    pub kind: ValueKind,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: ValueKind, default: &'static str, help: &'static str) -> ConfigKey {
    ConfigKey { name, kind, default, help }
}

/// Every recognized configuration key.
pub const CONFIG_KEYS: &[ConfigKey] = &[
    key(
        "study.kind",
        ValueKind::Str,
        "per subcommand",
        "convergence | interpolation | preasymptotic | pollution | pml_verify | gamma_dv_scan | csol_scan",
    ),
    key("study.max_dofs", ValueKind::Int, "60000", "largest system a study may build"),
    key("mesh.kind", ValueKind::Str, "cube (slab for pollution)", "cube | slab | pml_box"),
    key("mesh.n_list", ValueKind::IntList, "[2, 4, 8]", "cells per axis, strictly increasing"),
    key("fem.p", ValueKind::Int, "1", "polynomial degree"),
    key("fem.family", ValueKind::Str, "nedelec1", "nedelec1 | nedelec2"),
    key("problem.k_list", ValueKind::FloatList, "[5.0] ([5.0, 10.0, 20.0] for pollution)", "wavenumbers"),
    key("coeff.kind", ValueKind::Str, "vacuum", "vacuum | bump | pml"),
    key("coeff.bump_amplitude", ValueKind::Float, "1.0", "permittivity bump height"),
    key("coeff.bump_radius", ValueKind::Float, "0.3", "permittivity bump radius"),
    key("pml.theta", ValueKind::Float, "0.7853981633974483", "PML scaling angle in [0, pi/2)"),
    key("pml.theta_list", ValueKind::FloatList, "[pi/8, pi/4, 3pi/8]", "angles certified by pml-check"),
    key("pml.r_minus", ValueKind::Float, "0.5", "inner PML radius"),
    key("pml.r_plus", ValueKind::Float, "0.8", "outer PML radius"),
    key("solution.id", ValueKind::Str, "sine3 (slab_wave for pollution)", "sine3 | gradient | slab_wave"),
    key("pollution.kh", ValueKind::Float, "0.6", "target k h of pollution scans"),
    key("pollution.csol_bound", ValueKind::Float, "0.5", "bound on (k h)^2 C_sol in the rescaled scan"),
    key("gamma.enrichment", ValueKind::Int, "2", "extra Lagrange degree of the enriched space"),
    key("csol.tol", ValueKind::Float, "1e-6", "relative tolerance of the C_sol power iteration"),
    key("csol.enabled", ValueKind::Bool, "false", "estimate C_sol for every solved row"),
    key("output.dir", ValueKind::Str, ".", "directory all files are written under"),
    key("output.csv", ValueKind::Str, "\"\"", "CSV path relative to output.dir (empty: stdout)"),
    key("output.timing", ValueKind::Bool, "false", "fill the wall_ms column"),
    key("threads", ValueKind::Int, "0", "worker threads (0: all cores)"),
];

pub fn config_keys_help() -> String {
    let mut s = String::from("Config keys (TOML sections or KEY=VALUE overrides):\n");
    for k in CONFIG_KEYS {
        s.push_str(&format!("  {:<22} {:<20} {}\n", k.name, k.default, k.help));
    }
    s
}

/// Flattened, type-checked settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigMap {
    values: BTreeMap<String, toml::Value>,
}

fn lookup(name: &str) -> Result<&'static ConfigKey> {
    CONFIG_KEYS.iter().find(|k| k.name == name).ok_or_else(|| Error::Config(format!("unknown key '{name}'")))
}

fn coerce(spec: &ConfigKey, v: toml::Value) -> Result<toml::Value> {
    use toml::Value as V;
    let bad = |v: &V| Error::Config(format!("{}: expected {:?}, got {v}", spec.name, spec.kind));
    Ok(match (spec.kind, v) {
        (ValueKind::Str, V::String(s)) => V::String(s),
        (ValueKind::Int, V::Integer(i)) if i >= 0 => V::Integer(i),
        (ValueKind::Float, V::Integer(i)) => V::Float(i as f64),
        (ValueKind::Float, V::Float(f)) => V::Float(f),
        (ValueKind::Bool, V::Boolean(b)) => V::Boolean(b),
        (ValueKind::IntList, V::Integer(i)) => coerce(spec, V::Array(vec![V::Integer(i)]))?,
        (ValueKind::FloatList, v @ (V::Integer(_) | V::Float(_))) => coerce(spec, V::Array(vec![v]))?,
        (ValueKind::IntList, V::Array(a)) => V::Array(
            a.into_iter()
                .map(|x| match x {
                    V::Integer(i) if i >= 0 => Ok(V::Integer(i)),
                    other => Err(bad(&other)),
                })
                .collect::<Result<_>>()?,
        ),
        (ValueKind::FloatList, V::Array(a)) => V::Array(
            a.into_iter()
                .map(|x| match x {
                    V::Integer(i) => Ok(V::Float(i as f64)),
                    V::Float(f) => Ok(V::Float(f)),
                    other => Err(bad(&other)),
                })
                .collect::<Result<_>>()?,
        ),
        (_, other) => return Err(bad(&other)),
    })
}

impl ConfigMap {
    /// Parses TOML text; tables one level deep become `section.key`.
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut map = ConfigMap::default();
        for (name, value) in table {
            match value {
                toml::Value::Table(section) => {
                    for (key, v) in section {
                        if matches!(v, toml::Value::Table(_)) {
                            return Err(Error::Config(format!("nested table '{name}.{key}' is not allowed")));
                        }
                        map.set(&format!("{name}.{key}"), v)?;
                    }
                }
                v => map.set(&name, v)?,
            }
        }
        Ok(map)
    }

    pub fn set(&mut self, name: &str, value: toml::Value) -> Result<()> {
        let spec = lookup(name)?;
        self.values.insert(name.to_string(), coerce(spec, value)?);
        Ok(())
    }

    /// Applies `key=value`; the value is read as a TOML literal, falling back
    /// to a bare string.
    pub fn apply_override(&mut self, text: &str) -> Result<()> {
        let (name, raw) = text
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override '{text}' is not of the form key=value")))?;
        let (name, raw) = (name.trim(), raw.trim());
        let spec = lookup(name)?;
        let value = match format!("v = {raw}").parse::<toml::Table>() {
            Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
            Err(_) => toml::Value::String(raw.into()),
        };
        let value = match (spec.kind, value) {
            (ValueKind::Str, v) if !v.is_str() => toml::Value::String(raw.into()),
            (_, v) => v,
        };
        self.set(name, value)
    }

    pub fn get(&self, name: &str) -> Option<&toml::Value> {
        self.values.get(name)
    }

    fn string(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(|v| v.as_str())
    }

    fn float(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|v| v.as_float())
    }

    fn int(&self, name: &str) -> Option<usize> {
        self.get(name).and_then(|v| v.as_integer()).map(|i| i as usize)
    }

    fn bool(&self, name: &str) -> Option<bool> {
        self.get(name).and_then(|v| v.as_bool())
    }

    fn floats(&self, name: &str) -> Option<Vec<f64>> {
        let a = self.get(name)?.as_array()?;
        Some(a.iter().filter_map(|v| v.as_float()).collect())
    }

    fn ints(&self, name: &str) -> Option<Vec<usize>> {
        let a = self.get(name)?.as_array()?;
        Some(a.iter().filter_map(|v| v.as_integer()).map(|i| i as usize).collect())
    }
}

/// Settings outside [`StudyConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    pub out_dir: PathBuf,
    pub threads: usize,
}

/// Builds the study configuration; `kind` is used when `study.kind` is unset.
pub fn study_config(map: &ConfigMap, kind: StudyKind) -> Result<StudyConfig> {
    let kind = match map.string("study.kind") {
        Some(s) => s.parse()?,
        None => kind,
    };
    let mut cfg = StudyConfig::for_kind(kind);
    if let Some(s) = map.string("mesh.kind") {
        cfg.mesh_kind = s.parse()?;
    }
    if let Some(v) = map.ints("mesh.n_list") {
        cfg.n_list = v;
    }
    if let Some(p) = map.int("fem.p") {
        cfg.p = p;
    }
    if let Some(s) = map.string("fem.family") {
        cfg.family = s.parse::<Family>().map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(v) = map.floats("problem.k_list") {
        cfg.k_list = v;
    }
    if let Some(s) = map.string("coeff.kind") {
        cfg.coeff = s.parse()?;
    }
    if let Some(v) = map.float("coeff.bump_amplitude") {
        cfg.bump_amplitude = v;
    }
    if let Some(v) = map.float("coeff.bump_radius") {
        cfg.bump_radius = v;
    }
    if let Some(v) = map.float("pml.theta") {
        cfg.pml.theta = v;
    }
    if let Some(v) = map.floats("pml.theta_list") {
        cfg.pml_theta_list = v;
    }
    if let Some(v) = map.float("pml.r_minus") {
        cfg.pml.r_minus = v;
    }
    if let Some(v) = map.float("pml.r_plus") {
        cfg.pml.r_plus = v;
    }
    if let Some(s) = map.string("solution.id") {
        cfg.solution = s.parse::<SolutionId>().map_err(|e| Error::Config(e.to_string()))?;
    }
    if let Some(v) = map.float("pollution.kh") {
        cfg.kh = v;
    }
    if let Some(v) = map.float("pollution.csol_bound") {
        cfg.csol_bound = v;
    }
    if let Some(v) = map.int("study.max_dofs") {
        cfg.max_dofs = v;
    }
    if let Some(v) = map.int("gamma.enrichment") {
        cfg.enrichment = v;
    }
    if let Some(v) = map.float("csol.tol") {
        cfg.csol_tol = v;
    }
    if let Some(v) = map.bool("csol.enabled") {
        cfg.with_csol = v;
    }
    if let Some(v) = map.bool("output.timing") {
        cfg.timing = v;
    }
    if let Some(s) = map.string("output.csv") {
        cfg.output_csv = (!s.is_empty()).then(|| PathBuf::from(s));
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run_settings(map: &ConfigMap) -> RunSettings {
    RunSettings {
        out_dir: PathBuf::from(map.string("output.dir").unwrap_or(".")),
        threads: map.int("threads").unwrap_or(0),
    }
}

/// `out_dir/rel`, refusing paths that could leave `out_dir`.
pub fn confined_path(out_dir: &Path, rel: &Path) -> Result<PathBuf> {
    if rel.as_os_str().is_empty() || rel.components().any(|c| !matches!(c, Component::Normal(_) | Component::CurDir)) {
        return Err(Error::Config(format!(
            "output path '{}' must be relative and stay inside the output directory",
            rel.display()
        )));
    }
    Ok(out_dir.join(rel))
}

fn write_confined(out_dir: &Path, rel: &Path, contents: &str) -> Result<PathBuf> {
    let path = confined_path(out_dir, rel)?;
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&path, contents)?;
    Ok(path)
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML configuration file.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override a config key (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Overrides given positionally.
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Directory all outputs are written under (overrides output.dir).
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Print progress and summaries to stderr.
    #[arg(short, long, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Write a structured tetrahedral mesh in mesh-v1 format.
    MeshGen {
        #[command(flatten)]
        common: CommonArgs,
        /// Cells per axis (default: first entry of mesh.n_list).
        #[arg(long)]
        n: Option<usize>,
        /// Output file relative to the output directory.
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Solve one manufactured problem and report its errors.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// Wavenumber (default: first entry of problem.k_list).
        #[arg(long)]
        k: Option<f64>,
        /// Cells per axis (default: first entry of mesh.n_list).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Convergence, interpolation or preasymptotic study.
    Convergence(CommonArgs),
    /// Error growth in k at fixed k h.
    Pollution(CommonArgs),
    /// PML coefficient certification and complex-coefficient convergence.
    PmlCheck(CommonArgs),
    /// Divergence-conformity factor scan.
    GammaDv(CommonArgs),
    /// Solution-operator norm scan.
    Csol(CommonArgs),
}

#[derive(Parser, Debug)]
#[command(name = "edgefem", version, about = "Edge-element Maxwell solver and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn load_config(common: &CommonArgs) -> Result<ConfigMap> {
    let mut map = match &common.config {
        Some(path) => ConfigMap::parse(&std::fs::read_to_string(path)?)?,
        None => ConfigMap::default(),
    };
    for o in common.set.iter().chain(&common.overrides) {
        map.apply_override(o)?;
    }
    Ok(map)
}

/// What a subcommand produced.
struct Outcome {
    status: String,
    code: i32,
}

fn status_of(err: &Error, k: Option<f64>) -> Outcome {
    let k = k.map(|k| format!(" k={k}")).unwrap_or_default();
    let reason = err.to_string().replace('"', "'");
    match err {
        Error::Singular { .. } => {
            Outcome { status: format!("status=singular{k} reason=\"{reason}\""), code: EXIT_NUMERICAL }
        }
        e if e.is_numerical() => {
            Outcome { status: format!("status=numerical{k} reason=\"{reason}\""), code: EXIT_NUMERICAL }
        }
        _ => Outcome { status: format!("status=invalid reason=\"{reason}\""), code: EXIT_INVALID },
    }
}

fn allowed_kinds(cmd: &Command) -> (StudyKind, &'static [StudyKind]) {
    use StudyKind::*;
    match cmd {
        Command::Convergence(_) => (Convergence, &[Convergence, Interpolation, Preasymptotic]),
        Command::Pollution(_) => (Pollution, &[Pollution]),
        Command::PmlCheck(_) => (PmlVerify, &[PmlVerify]),
        Command::GammaDv(_) => (GammaDvScan, &[GammaDvScan]),
        Command::Csol(_) => (CsolScan, &[CsolScan]),
        Command::MeshGen { .. } | Command::Solve { .. } => (Convergence, &[Convergence]),
    }
}

fn run_command(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<Outcome> {
    let common = match cmd {
        Command::MeshGen { common, .. } | Command::Solve { common, .. } => common,
        Command::Convergence(c)
        | Command::Pollution(c)
        | Command::PmlCheck(c)
        | Command::GammaDv(c)
        | Command::Csol(c) => c,
    };
    let map = load_config(common)?;
    let mut settings = run_settings(&map);
    if let Some(d) = &common.out_dir {
        settings.out_dir = d.clone();
    }
    let (default_kind, allowed) = allowed_kinds(cmd);
    let mut cfg = study_config(&map, default_kind)?;
    if !allowed.contains(&cfg.kind) {
        return Err(Error::Config(format!("study.kind '{}' does not belong to this subcommand", cfg.kind.as_str())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| Error::Config(format!("threads: {e}")))?;
    let verbose = common.verbose > 0;
    let (mut obuf, mut ebuf) = (Vec::new(), Vec::new());
    let result = pool.install(|| match cmd {
        Command::MeshGen { n, out: file, .. } => {
            let n = n.unwrap_or(cfg.n_list[0]);
            let mesh = cfg.mesh_kind.build(n)?;
            let path = write_confined(&settings.out_dir, file, &write_mesh(&mesh))?;
            Ok(Outcome { status: format!("status=ok tets={} file={}", mesh.n_tets(), path.display()), code: EXIT_OK })
        }
        Command::Solve { k, n, .. } => {
            let k = k.unwrap_or(cfg.k_list[0]);
            if !(k > 0.0) || !k.is_finite() {
                return Err(Error::Config("k must be positive".into()));
            }
            let n = n.unwrap_or(cfg.n_list[0]);
            cfg.k_list = vec![k];
            cfg.n_list = vec![n];
            solve_once(&cfg, &settings, k, n, &mut obuf, verbose, &mut ebuf)
        }
        _ => {
            let report = run_study(&cfg)?;
            emit_report(&cfg, &settings, &report, &mut obuf, verbose, &mut ebuf)
        }
    });
    out.write_all(&obuf)?;
    err.write_all(&ebuf)?;
    result
}

fn solve_once(
    cfg: &StudyConfig,
    settings: &RunSettings,
    k: f64,
    n: usize,
    out: &mut dyn Write,
    verbose: bool,
    err: &mut dyn Write,
) -> Result<Outcome> {
    let mesh = Arc::new(cfg.mesh_kind.build(n)?);
    let coef = study_coefficients(cfg, cfg.pml.theta)?;
    let (lo, side) = match cfg.mesh_kind {
        MeshKind::PmlBox => ([-1.0; 3], 2.0),
        _ => ([0.0; 3], 1.0),
    };
    let sol = manufactured_solution_on(cfg.solution, k, lo, side)?;
    if verbose {
        let _ = writeln!(err, "solving n={n} k={k} family={} p={}", cfg.family.name(), cfg.p);
    }
    let solved = match solve_manufactured(mesh.clone(), cfg, &coef, &sol) {
        Ok(s) => s,
        Err(e) => return Ok(status_of(&e, Some(k))),
    };
    let rep = relative_error(&solved.space, &solved.solution, &*sol.field, &*sol.curl, k)?;
    let row = StudyRow {
        study: "solve".into(),
        k,
        h: mesh.h(),
        p: cfg.p,
        dofs: solved.space.n_free(),
        err_l2_rel: Some(rep.rel_l2),
        err_curlk_rel: Some(rep.rel_curl_k),
        err_hkcurl_rel: Some(rep.rel_hk_curl),
        best_approx_rel: None,
        gamma_dv: None,
        c_sol: None,
        rate_hkcurl: None,
        wall_ms: None,
        failure: None,
    };
    let csv = format!("{CSV_HEADER}\n{}\n", row.to_csv_line());
    match &cfg.output_csv {
        Some(rel) => {
            write_confined(&settings.out_dir, rel, &csv)?;
        }
        None => out.write_all(csv.as_bytes())?,
    }
    Ok(Outcome {
        status: format!("status=ok k={k} dofs={} err_hkcurl_rel={}", row.dofs, rep.rel_hk_curl),
        code: EXIT_OK,
    })
}

fn emit_report(
    cfg: &StudyConfig,
    settings: &RunSettings,
    report: &StudyReport,
    out: &mut dyn Write,
    verbose: bool,
    err: &mut dyn Write,
) -> Result<Outcome> {
    let csv = report.to_csv();
    let target = match &cfg.output_csv {
        Some(rel) => Some(write_confined(&settings.out_dir, rel, &csv)?),
        None => {
            out.write_all(csv.as_bytes())?;
            None
        }
    };
    out.write_all(report.summary_text().as_bytes())?;
    if verbose {
        for r in report.rows.iter().filter(|r| r.failure.is_some()) {
            let _ = writeln!(err, "row k={} h={} failed: {}", r.k, r.h, r.failure.as_deref().unwrap_or(""));
        }
    }
    let csv_part = target.map(|p| format!(" csv={}", p.display())).unwrap_or_default();
    if let Some(bad) = report.rows.iter().find(|r| r.failure.as_deref().is_some_and(|f| f.starts_with("singular"))) {
        return Ok(Outcome {
            status: format!("status=singular k={} study={}{csv_part}", bad.k, cfg.kind.as_str()),
            code: EXIT_NUMERICAL,
        });
    }
    Ok(Outcome {
        status: format!("status=ok study={} rows={}{csv_part}", cfg.kind.as_str(), report.rows.len()),
        code: EXIT_OK,
    })
}

fn command_with_key_help() -> clap::Command {
    let help = config_keys_help();
    Cli::command().mut_subcommands(|s| s.after_help(help.clone()))
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let matches = match command_with_key_help().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(rendered.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(rendered.as_bytes());
                    let _ = writeln!(out, "status=usage");
                    EXIT_USAGE
                }
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = err.write_all(e.render().to_string().as_bytes());
            let _ = writeln!(out, "status=usage");
            return EXIT_USAGE;
        }
    };
    let outcome = run_command(&cli.command, out, err).unwrap_or_else(|e| status_of(&e, None));
    let _ = writeln!(out, "{}", outcome.status);
    outcome.code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_flatten() {
        let map = ConfigMap::parse("threads = 2\n[mesh]\nn_list = [2, 4]\n[problem]\nk_list = 5\n").unwrap();
        assert_eq!(map.ints("mesh.n_list"), Some(vec![2, 4]));
        assert_eq!(map.floats("problem.k_list"), Some(vec![5.0]));
        assert_eq!(map.int("threads"), Some(2));
    }

    #[test]
    fn unknown_and_mistyped_keys_rejected() {
        assert!(ConfigMap::parse("[mesh]\nsize = 3\n").is_err());
        assert!(ConfigMap::parse("[fem]\np = \"two\"\n").is_err());
        let mut map = ConfigMap::default();
        assert!(map.apply_override("nope.key=1").is_err());
        assert!(map.apply_override("fem.p").is_err());
        map.apply_override("fem.family=nedelec2").unwrap();
        map.apply_override("problem.k_list=[5, 10]").unwrap();
        assert_eq!(map.string("fem.family"), Some("nedelec2"));
        assert_eq!(map.floats("problem.k_list"), Some(vec![5.0, 10.0]));
    }

    #[test]
    fn paths_confined() {
        let d = Path::new("out");
        assert!(confined_path(d, Path::new("a/b.csv")).is_ok());
        assert!(confined_path(d, Path::new("../b.csv")).is_err());
        assert!(confined_path(d, Path::new("/tmp/b.csv")).is_err());
        assert!(confined_path(d, Path::new("")).is_err());
    }

    #[test]
    fn coefficient_kind_parses() {
        let mut map = ConfigMap::default();
        map.apply_override("coeff.kind=pml").unwrap();
        assert_eq!(study_config(&map, StudyKind::Convergence).unwrap().coeff, CoeffKind::Pml);
    }
}
