//! Config-driven command line front end.
//!
//! Every subcommand reads one JSON [`RunConfig`], writes its outputs into
//! the output directory together with `manifest.json`, and maps failures to
//! exit codes: 2 for configuration and domain errors, 3 for refuted
//! assumptions (unless `--force`), 4 for numerical convergence failures and
//! 1 for I/O. Errors are also printed to stderr as a JSON object.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::conditions::{check_conditions, Assumptions, CheckOptions, ConditionReport, Exponents, Verdict};
use crate::covariance::CoefficientSeq;
use crate::error::{Error, Result};
use crate::inference::{autocov_clt_check, ls_clt_check, AutocovExperiment, LsExperiment};
use crate::kernels::{KernelRef, KernelSpec};
use crate::levy::LevyModel;
use crate::montecarlo::{run_experiment, ConditionGate, ExperimentConfig, McReport, Statistic};
use crate::simulate::{sha256_hex, simulate_paired, simulate_path, ConvMethod, PathConfig, PolynomialMap};
use crate::variance::{eta2_qn, eta2_sn};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_REFUTED: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Sn,
    Qn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Simulation {
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_budget")]
    pub mass_budget: f64,
    #[serde(default)]
    pub method: ConvMethod,
    #[serde(default)]
    pub stream: u64,
}

fn default_m() -> usize {
    PathConfig::new(1.0, 1).m
}

fn default_budget() -> f64 {
    crate::simulate::DEFAULT_MASS_BUDGET
}

impl Default for Simulation {
    fn default() -> Self {
        Simulation {
            m: default_m(),
            horizon: None,
            mass_budget: default_budget(),
            method: ConvMethod::Auto,
            stream: 0,
        }
    }
}

/// Sampling grid for `kernel-export`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportGrid {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

/// The JSON document behind every subcommand. Fields a subcommand does not
/// use are ignored by it; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// When present, must name the subcommand being run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy: Option<LevyModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    /// Second kernel for `S_n`; the first kernel is reused when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel2: Option<KernelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<CoefficientSeq>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub statistic: Option<StatisticKind>,
    /// Assumption set to check or to gate on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assumptions: Option<Assumptions>,
    /// Skip the assumption check entirely.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub waive_conditions: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_step: Option<f64>,
    #[serde(default)]
    pub simulation: Simulation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<PolynomialMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub export: Option<ExportGrid>,
    /// Output hashes recorded by a previous run; ignored on input.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub outputs: BTreeMap<String, String>,
}

impl RunConfig {
    /// Parses and validates a config document. Errors carry the JSON path
    /// of the offending field.
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            Error::config(
                if path == "." { "$".to_string() } else { format!("$.{path}") },
                format!("{inner} (line {}, column {})", inner.line(), inner.column()),
            )
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "$.schema_version",
                format!("unsupported schema version {}, expected {SCHEMA_VERSION}", cfg.schema_version),
            ));
        }
        Ok(cfg)
    }

    fn levy(&self) -> Result<LevyModel> {
        let m = self.levy.ok_or_else(|| Error::config("$.levy", "missing"))?;
        m.validate()?;
        Ok(m)
    }

    fn kernel(&self, dir: &Path) -> Result<KernelRef> {
        self.kernel.as_ref().ok_or_else(|| Error::config("$.kernel", "missing"))?.build_in(dir)
    }

    fn kernel2(&self, dir: &Path) -> Result<KernelRef> {
        match &self.kernel2 {
            Some(k) => k.build_in(dir),
            None => self.kernel(dir),
        }
    }

    fn delta(&self) -> Result<f64> {
        self.delta.ok_or_else(|| Error::config("$.delta", "missing"))
    }

    fn n(&self) -> Result<usize> {
        self.n.ok_or_else(|| Error::config("$.n", "missing"))
    }

    fn replicates(&self) -> Result<usize> {
        self.replicates.ok_or_else(|| Error::config("$.replicates", "missing"))
    }

    fn b(&self) -> Result<&CoefficientSeq> {
        self.b.as_ref().ok_or_else(|| Error::config("$.b", "missing"))
    }

    fn statistic(&self) -> StatisticKind {
        self.statistic.unwrap_or(if self.b.is_some() { StatisticKind::Qn } else { StatisticKind::Sn })
    }

    fn path(&self) -> Result<PathConfig> {
        let s = &self.simulation;
        let p = PathConfig {
            delta: self.delta()?,
            n: self.n()?,
            m: s.m,
            horizon: s.horizon,
            seed: self.seed,
            stream: s.stream,
            mass_budget: s.mass_budget,
            method: s.method,
        };
        p.validate()?;
        Ok(p)
    }

    fn check_options(&self) -> CheckOptions {
        CheckOptions {
            exponents: match &self.exponents {
                Some(v) => Exponents::Fixed(v.clone()),
                None => Exponents::Auto,
            },
            driver: self.levy,
            phase_step: self.phase_step,
        }
    }

    /// Makes relative CSV paths absolute so the resolved config is usable
    /// from any directory.
    fn resolve_paths(&mut self, dir: &Path) {
        for k in [&mut self.kernel, &mut self.kernel2].into_iter().flatten() {
            if let KernelSpec::Tabulated { csv: Some(p), .. } = k {
                let full = dir.join(&*p);
                *p = std::fs::canonicalize(&full).unwrap_or(full).display().to_string();
            }
        }
    }
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Check an assumption set and report the norms behind the verdict.
    Check,
    /// Compute the limit variance of S_n or Q_n.
    Variance,
    /// Simulate one sample path (two when `kernel2` is given).
    Simulate,
    /// Monte Carlo check of the Gaussian limit of S_n or Q_n.
    Mc,
    /// Monte Carlo check of the sample-autocovariance limit.
    AutocovClt,
    /// Monte Carlo check of the least-squares derivative limit.
    LsClt,
    /// Write a kernel on a grid as a `t,phi` CSV.
    KernelExport,
}

#[derive(Parser, Debug)]
#[command(name = "cmaqf", version, about = "Quadratic forms of sampled Lévy-driven moving averages")]
struct Invocation {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run even when the assumptions are refuted.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true, env = "CMAQF_THREADS")]
    pub threads: Option<usize>,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Variance => "variance",
            Command::Simulate => "simulate",
            Command::Mc => "mc",
            Command::AutocovClt => "autocov-clt",
            Command::LsClt => "ls-clt",
            Command::KernelExport => "kernel-export",
        }
    }
}

/// Failure of a run, before mapping to an exit code.
#[derive(Debug)]
pub enum Failure {
    Error(Error),
    Refuted(Box<ConditionReport>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Refuted(_) => EXIT_REFUTED,
            Failure::Error(e) => exit_code(e),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        let (kind, message, path) = match self {
            Failure::Refuted(r) => ("refuted", format!("assumptions {} refuted\n{}", r.assumptions, r.table()), None),
            Failure::Error(Error::Config { path, message }) => ("config", message.clone(), Some(path.clone())),
            Failure::Error(e) => (e.kind(), e.to_string(), None),
        };
        let mut obj = serde_json::json!({
            "error": { "kind": kind, "message": message, "exit_code": self.exit_code() }
        });
        if let Some(p) = path {
            obj["error"]["path"] = serde_json::Value::String(p);
        }
        obj
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Convergence(_) | Error::Truncation { .. } => EXIT_CONVERGENCE,
        Error::Replicate { source, .. } => exit_code(source),
        _ => EXIT_CONFIG,
    }
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let inv = match Invocation::try_parse_from(argv) {
        Ok(i) => i,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(inv.command, &inv.common) {
        Ok(_) => 0,
        Err(f) => {
            let mut err = std::io::stderr().lock();
            let _ = writeln!(err, "{}", f.to_json());
            f.exit_code()
        }
    }
}

/// Runs one subcommand and returns the output directory.
pub fn execute(cmd: Command, common: &Common) -> std::result::Result<PathBuf, Failure> {
    let config_path = common
        .config
        .as_ref()
        .ok_or_else(|| Error::config("--config", "a config file is required"))?;
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", config_path.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(s) = &cfg.subcommand {
        if s != cmd.name() {
            return Err(Error::config("$.subcommand", format!("config is for `{s}`, not `{}`", cmd.name())).into());
        }
    }
    let dir = config_path.parent().map(Path::to_path_buf).unwrap_or_default();
    cfg.resolve_paths(&dir);
    cfg.subcommand = Some(cmd.name().to_string());
    cfg.outputs.clear();
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = Some(out.clone());
    }
    let out = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("cmaqf-out"));
    cfg.output_dir = Some(out.clone());
    std::fs::create_dir_all(&out).map_err(Error::from)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::domain(format!("thread pool: {e}")))?;
    let files = pool.install(|| dispatch(cmd, &cfg, &dir, &out, common.force))?;

    for f in files {
        let bytes = std::fs::read(out.join(&f)).map_err(Error::from)?;
        cfg.outputs.insert(f, sha256_hex(&bytes));
    }
    let manifest = serde_json::to_string_pretty(&cfg).map_err(Error::from)?;
    std::fs::write(out.join("manifest.json"), manifest).map_err(Error::from)?;
    Ok(out)
}

fn write_json<T: Serialize>(out: &Path, name: &str, value: &T) -> Result<String> {
    std::fs::write(out.join(name), serde_json::to_string_pretty(value)?)?;
    Ok(name.to_string())
}

/// Checks the configured (or default) assumption set; refuted verdicts
/// stop the run unless forced.
fn gate(
    cfg: &RunConfig,
    default: Assumptions,
    kernels: &[KernelRef],
    b: Option<&CoefficientSeq>,
    force: bool,
) -> std::result::Result<ConditionGate, Failure> {
    if cfg.waive_conditions {
        return Ok(ConditionGate::Waived);
    }
    let which = cfg.assumptions.unwrap_or(default);
    let ks: Vec<KernelRef> = kernels.iter().take(which.kernel_count()).cloned().collect();
    let report = check_conditions(which, &ks, b, cfg.delta()?, &cfg.check_options())?;
    if report.verdict == Verdict::Refuted && !force {
        return Err(Failure::Refuted(Box::new(report)));
    }
    Ok(ConditionGate::Checked(report))
}

fn dispatch(cmd: Command, cfg: &RunConfig, dir: &Path, out: &Path, force: bool) -> std::result::Result<Vec<String>, Failure> {
    match cmd {
        Command::Check => {
            let which = cfg.assumptions.ok_or_else(|| Error::config("$.assumptions", "missing"))?;
            let mut kernels = vec![cfg.kernel(dir)?];
            if which.kernel_count() == 2 {
                kernels.push(cfg.kernel2(dir)?);
            }
            let b = if which.needs_b() { Some(cfg.b()?) } else { None };
            let report = check_conditions(which, &kernels, b, cfg.delta()?, &cfg.check_options())?;
            println!("{}", report.table());
            let file = write_json(out, "report.json", &report)?;
            if report.verdict == Verdict::Refuted && !force {
                return Err(Failure::Refuted(Box::new(report)));
            }
            Ok(vec![file])
        }
        Command::Variance => {
            let model = cfg.levy()?;
            let delta = cfg.delta()?;
            let k1 = cfg.kernel(dir)?;
            let (mut report, default, kernels, b) = match cfg.statistic() {
                StatisticKind::Sn => {
                    let k2 = cfg.kernel2(dir)?;
                    let r = eta2_sn(k1.as_ref(), k2.as_ref(), &model, delta)?;
                    (r, Assumptions::SnNorm, vec![k1, k2], None)
                }
                StatisticKind::Qn => {
                    let b = cfg.b()?;
                    let r = eta2_qn(&k1, b, &model, delta)?;
                    (r, Assumptions::QnNorm, vec![k1], Some(b))
                }
            };
            if let ConditionGate::Checked(c) = gate(cfg, default, &kernels, b, force)? {
                report.conditions = Some(format!("{}: {}", c.assumptions, c.verdict));
            }
            println!("eta2 = {}", report.eta2);
            Ok(vec![write_json(out, "report.json", &report)?])
        }
        Command::Simulate => {
            let model = cfg.levy()?;
            let path = cfg.path()?;
            let k1 = cfg.kernel(dir)?;
            if cfg.kernel2.is_some() {
                let k2 = cfg.kernel2(dir)?;
                let (x1, x2) = simulate_paired(k1.as_ref(), k2.as_ref(), &model, &path)?;
                x1.write_csv(&out.join("path.csv"))?;
                x2.write_csv(&out.join("path2.csv"))?;
                Ok(vec!["path.csv".into(), "path.json".into(), "path2.csv".into(), "path2.json".into()])
            } else {
                simulate_path(k1.as_ref(), &model, &path)?.write_csv(&out.join("path.csv"))?;
                Ok(vec!["path.csv".into(), "path.json".into()])
            }
        }
        Command::Mc => {
            let model = cfg.levy()?;
            let path = cfg.path()?;
            let k1 = cfg.kernel(dir)?;
            let (statistic, conditions) = match cfg.statistic() {
                StatisticKind::Sn => {
                    let k2 = cfg.kernel2(dir)?;
                    let g = gate(cfg, Assumptions::SnNorm, &[k1.clone(), k2.clone()], None, force)?;
                    (Statistic::Sn { k1, k2 }, g)
                }
                StatisticKind::Qn => {
                    let b = cfg.b()?;
                    let g = gate(cfg, Assumptions::QnNorm, std::slice::from_ref(&k1), Some(b), force)?;
                    (Statistic::Qn { kernel: k1, b: b.clone() }, g)
                }
            };
            let report = run_experiment(&ExperimentConfig {
                statistic,
                model,
                path,
                replicates: cfg.replicates()?,
                conditions,
            })?;
            finish(report, out)
        }
        Command::AutocovClt => {
            let kernel = cfg.kernel(dir)?;
            let conditions = gate(cfg, Assumptions::SampleAcf, std::slice::from_ref(&kernel), None, force)?;
            let report = autocov_clt_check(&AutocovExperiment {
                kernel,
                model: cfg.levy()?,
                path: cfg.path()?,
                alpha: cfg.alpha.clone().ok_or_else(|| Error::config("$.alpha", "missing"))?,
                replicates: cfg.replicates()?,
                conditions: Some(conditions),
            })?;
            finish(report, out)
        }
        Command::LsClt => {
            let kernel = cfg.kernel(dir)?;
            let conditions = gate(cfg, Assumptions::SampleAcf, std::slice::from_ref(&kernel), None, force)?;
            let report = ls_clt_check(&LsExperiment {
                kernel,
                model: cfg.levy()?,
                path: cfg.path()?,
                v: cfg.v.clone().unwrap_or_else(PolynomialMap::identity),
                theta0: cfg.theta0,
                replicates: cfg.replicates()?,
                conditions: Some(conditions),
            })?;
            finish(report, out)
        }
        Command::KernelExport => {
            let kernel = cfg.kernel(dir)?;
            let g = cfg.export.as_ref().ok_or_else(|| Error::config("$.export", "missing"))?;
            if !(g.step > 0.0) || g.count == 0 {
                return Err(Error::config("$.export", "need step > 0 and count ≥ 1").into());
            }
            let mut f = std::io::BufWriter::new(std::fs::File::create(out.join("kernel.csv")).map_err(Error::from)?);
            let io = |r: std::io::Result<()>| r.map_err(Error::from);
            io(writeln!(f, "t,phi"))?;
            for k in 0..g.count {
                let t = g.start + k as f64 * g.step;
                io(writeln!(f, "{t:e},{:e}", kernel.eval(t)))?;
            }
            io(f.flush())?;
            Ok(vec!["kernel.csv".into()])
        }
    }
}

fn finish(mut report: McReport, out: &Path) -> std::result::Result<Vec<String>, Failure> {
    report.write(out)?;
    println!(
        "{}: eta2 = {}, variance ratio = {}, KS = {}",
        report.statistic,
        report.eta2,
        report.variance_ratio.map_or("n/a".into(), |r| format!("{r:.4}")),
        report.ks_distance.map_or("n/a".into(), |d| format!("{d:.4}")),
    );
    Ok(vec!["replicates.csv".into(), "report.json".into()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, body).unwrap();
        p
    }

    fn argv(cmd: &str, cfg: &Path, out: &Path) -> Vec<String> {
        vec![
            "cmaqf".into(),
            cmd.into(),
            "--config".into(),
            cfg.display().to_string(),
            "--out".into(),
            out.display().to_string(),
        ]
    }

    const OU_FS: &str = r#"{
        "schema_version": 1,
        "levy": {"type": "brownian_motion", "variance": 2.0},
        "kernel": {"type": "exponential_ou", "lambda": 1.0},
        "b": {"type": "finite_support", "values": [0.5, 1.0, 0.0, 1.0, 0.5]},
        "delta": 1.0,
        "assumptions": "qn-norm"
    }"#;

    #[test]
    fn check_supported_and_variance() {
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "ou_fs.json", OU_FS);
        assert_eq!(run(argv("check", &cfg, &d.path().join("c"))), 0);
        let r: ConditionReport =
            serde_json::from_str(&std::fs::read_to_string(d.path().join("c/report.json")).unwrap()).unwrap();
        assert_eq!(r.verdict, Verdict::Supported);
        let delta0 = OU_FS.replace("[0.5, 1.0, 0.0, 1.0, 0.5]", "[1.0]");
        let cfg = write(d.path(), "ou_delta0.json", &delta0);
        assert_eq!(run(argv("variance", &cfg, &d.path().join("v"))), 0);
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(d.path().join("v/report.json")).unwrap()).unwrap();
        assert!((v["eta2"].as_f64().unwrap() - 2.626071).abs() < 1e-6);
    }

    #[test]
    fn config_errors_carry_paths() {
        let e = RunConfig::from_json(r#"{"schema_version": 1, "levy": {"type": "brownian_motion", "variance": "x"}}"#)
            .unwrap_err();
        match e {
            // tagged enums are buffered, so the path stops at the enum
            Error::Config { path, .. } => assert_eq!(path, "$.levy"),
            e => panic!("{e}"),
        }
        match RunConfig::from_json(r#"{"schema_version": 1, "simulation": {"m": "x"}}"#).unwrap_err() {
            Error::Config { path, .. } => assert_eq!(path, "$.simulation.m"),
            e => panic!("{e}"),
        }
        let e = RunConfig::from_json(r#"{"schema_version": 1, "bogus": 3}"#).unwrap_err();
        assert!(matches!(e, Error::Config { .. }));
        assert!(RunConfig::from_json(r#"{"schema_version": 7}"#).is_err());
        assert!(RunConfig::from_json("{not json").is_err());
        let d = tempfile::tempdir().unwrap();
        let cfg = write(d.path(), "bad.json", "{not json");
        assert_eq!(run(argv("variance", &cfg, d.path())), EXIT_CONFIG);
    }

    #[test]
    fn refuted_gate_and_force() {
        let d = tempfile::tempdir().unwrap();
        let body = r#"{
            "schema_version": 1,
            "kernel": {"type": "tabulated", "start": 0.0, "step": 1.0, "values": [1.0, 0.5, 0.3], "tail_exponent": 0.7},
            "delta": 1.0,
            "assumptions": "sample-acf"
        }"#;
        let cfg = write(d.path(), "tab.json", body);
        assert_eq!(run(argv("check", &cfg, &d.path().join("a"))), EXIT_REFUTED);
        let mut forced = argv("check", &cfg, &d.path().join("b"));
        forced.push("--force".into());
        assert_eq!(run(forced), 0);
    }

    #[test]
    fn truncation_maps_to_convergence_exit() {
        let d = tempfile::tempdir().unwrap();
        let body = r#"{
            "schema_version": 1,
            "levy": {"type": "brownian_motion", "variance": 1.0},
            "kernel": {"type": "exponential_ou", "lambda": 1.0},
            "delta": 1.0, "n": 10,
            "simulation": {"horizon": 2.0}
        }"#;
        let cfg = write(d.path(), "t.json", body);
        assert_eq!(run(argv("simulate", &cfg, d.path())), EXIT_CONVERGENCE);
    }

    #[test]
    fn manifest_round_trip_is_bit_identical() {
        let d = tempfile::tempdir().unwrap();
        let body = r#"{
            "schema_version": 1,
            "levy": {"type": "compound_poisson_normal", "rate": 1.0, "jump_variance": 1.0},
            "kernel": {"type": "exponential_ou", "lambda": 1.0},
            "b": {"type": "finite_support", "values": [1.0]},
            "delta": 1.0, "n": 100, "replicates": 5, "seed": 9,
            "simulation": {"m": 8}
        }"#;
        let cfg = write(d.path(), "mc.json", body);
        let a = d.path().join("a");
        let b = d.path().join("b");
        assert_eq!(run(argv("mc", &cfg, &a)), 0);
        assert_eq!(run(argv("mc", &a.join("manifest.json"), &b)), 0);
        for f in ["replicates.csv", "report.json"] {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
        }
        let m: RunConfig = RunConfig::from_json(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.subcommand.as_deref(), Some("mc"));
        // a manifest for one subcommand is refused by another
        assert_eq!(run(argv("simulate", &a.join("manifest.json"), &b)), EXIT_CONFIG);
    }

    #[test]
    fn kernel_export_csv() {
        let d = tempfile::tempdir().unwrap();
        let body = r#"{
            "schema_version": 1,
            "kernel": {"type": "exponential_ou", "lambda": 1.0},
            "export": {"start": 0.0, "step": 0.5, "count": 3}
        }"#;
        let cfg = write(d.path(), "k.json", body);
        assert_eq!(run(argv("kernel-export", &cfg, d.path())), 0);
        let csv = std::fs::read_to_string(d.path().join("kernel.csv")).unwrap();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "t,phi");
        assert_eq!(rows.len(), 4);
        let phi: f64 = rows[2].split(',').nth(1).unwrap().parse().unwrap();
        assert!((phi - (-0.5f64).exp()).abs() < 1e-15);
    }
}
