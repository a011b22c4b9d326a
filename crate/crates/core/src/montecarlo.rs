//! Replicated experiments comparing normalized statistics with their
//! Gaussian limits.

use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::conditions::{ConditionReport, Verdict};
use crate::covariance::{autocovariance, crosscovariance, CoefficientSeq};
use crate::error::{Error, Result};
use crate::kernels::KernelRef;
use crate::levy::LevyModel;
use crate::simulate::{
    compute_qn, compute_sn, ls_kernels, normalized_statistic, sample_autocov, simulate_paired, simulate_path,
    ParamMap, PathConfig, PolynomialMap,
};
use crate::variance::{autocov_clt_sigma, eta2_qn, eta2_sn, expected_qn_for_kernel, expected_sn};

#[derive(Clone, Debug)]
pub enum Statistic {
    /// `S_n` for two kernels sharing the driver.
    Sn { k1: KernelRef, k2: KernelRef },
    Qn { kernel: KernelRef, b: CoefficientSeq },
    /// `αᵀ √n (γ̂_n(j) − E γ̂_n(j))_{j=1..m}` with `m = α.len()`.
    AutocovContrast { kernel: KernelRef, alpha: Vec<f64> },
    /// `ℓ′_n(θ)/√n` for the least-squares criterion with `v(θ)`.
    LsDerivative { kernel: KernelRef, v: PolynomialMap, theta: f64 },
}

impl Statistic {
    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Sn { .. } => "sn",
            Statistic::Qn { .. } => "qn",
            Statistic::AutocovContrast { .. } => "autocov-contrast",
            Statistic::LsDerivative { .. } => "ls-derivative",
        }
    }
}

/// Whether the experiment runs under checked assumptions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionGate {
    Checked(ConditionReport),
    Waived,
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub statistic: Statistic,
    pub model: LevyModel,
    /// Δ, n, seed and simulation settings; the stream index is set per
    /// replicate.
    pub path: PathConfig,
    pub replicates: usize,
    pub conditions: ConditionGate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub statistic: String,
    pub replicates: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Analytic limit variance.
    pub eta2: f64,
    /// `variance / eta2`; absent when `eta2 = 0`.
    pub variance_ratio: Option<f64>,
    /// KS distance to `N(0, eta2)`; absent when `eta2 = 0`.
    pub ks_distance: Option<f64>,
    /// Every replicate is exactly zero.
    pub degenerate: bool,
    pub conditions: ConditionGate,
    pub csv_paths: Vec<String>,
    pub diagnostics: Vec<String>,
}

impl McReport {
    /// Writes `replicates.csv` and `report.json` into `dir` and records the
    /// CSV file name.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let csv = dir.join("replicates.csv");
        write_replicates(&csv, &self.replicates)?;
        self.csv_paths = vec!["replicates.csv".to_string()];
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

pub fn write_replicates(path: &Path, values: &[f64]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "replicate,statistic")?;
    for (i, v) in values.iter().enumerate() {
        writeln!(f, "{i},{v:e}")?;
    }
    f.flush()?;
    Ok(())
}

/// Sup distance between the empirical CDF of `samples` and `N(0, variance)`.
pub fn ks_distance(samples: &[f64], variance: f64) -> Result<f64> {
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::domain(format!("variance must be > 0, got {variance}")));
    }
    if samples.len() < 2 {
        return Err(Error::domain("need at least two samples"));
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::domain(e.to_string()))?;
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let r = s.len() as f64;
    let mut d = 0.0f64;
    let mut i = 0;
    while i < s.len() {
        // ties jump together
        let mut j = i;
        while j + 1 < s.len() && s[j + 1] == s[i] {
            j += 1;
        }
        let f = normal.cdf(s[i]);
        d = d.max(f - i as f64 / r).max((j + 1) as f64 / r - f);
        i = j + 1;
    }
    Ok(d)
}

/// Mean, sample variance, skewness and excess kurtosis.
pub fn moments(x: &[f64]) -> (f64, f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    let var = if n > 1.0 { m2 / (n - 1.0) } else { 0.0 };
    let (m2, m3, m4) = (m2 / n, m3 / n, m4 / n);
    if m2 == 0.0 {
        return (mean, var, 0.0, 0.0);
    }
    (mean, var, m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
}

/// What each replicate needs besides its random path.
enum Plan {
    Sn { k1: KernelRef, k2: KernelRef, center: f64 },
    Qn { kernel: KernelRef, b: CoefficientSeq, center: f64 },
    Autocov { kernel: KernelRef, alpha: Vec<f64>, centers: Vec<f64> },
    Ls { k1: KernelRef, k2: KernelRef, k: usize, center: f64 },
}

fn plan(cfg: &ExperimentConfig) -> Result<(Plan, f64, Vec<String>)> {
    let n = cfg.path.n;
    let delta = cfg.path.delta;
    let model = &cfg.model;
    let sigma2 = model.cumulants()?.sigma2;
    Ok(match &cfg.statistic {
        Statistic::Sn { k1, k2 } => {
            let r = eta2_sn(k1.as_ref(), k2.as_ref(), model, delta)?;
            let center = expected_sn(k1.as_ref(), k2.as_ref(), model, n)?;
            (Plan::Sn { k1: k1.clone(), k2: k2.clone(), center }, r.eta2, r.diagnostics)
        }
        Statistic::Qn { kernel, b } => {
            let r = eta2_qn(kernel, b, model, delta)?;
            let center = expected_qn_for_kernel(b, kernel.as_ref(), model, delta, n)?;
            (Plan::Qn { kernel: kernel.clone(), b: b.clone(), center }, r.eta2, r.diagnostics)
        }
        Statistic::AutocovContrast { kernel, alpha } => {
            let m = alpha.len();
            if m == 0 || alpha.iter().all(|a| *a == 0.0) {
                return Err(Error::domain("contrast α must be nonzero"));
            }
            if m + 1 >= n {
                return Err(Error::domain(format!("need m < n − 1, got m = {m}, n = {n}")));
            }
            let sigma = autocov_clt_sigma(kernel.as_ref(), model, delta, m)?;
            let eta2 = quadratic(&sigma, alpha);
            let centers = (1..=m)
                .map(|j| (1.0 - j as f64 / n as f64) * autocovariance(kernel.as_ref(), sigma2, j as f64 * delta).value)
                .collect();
            (Plan::Autocov { kernel: kernel.clone(), alpha: alpha.clone(), centers }, eta2, Vec::new())
        }
        Statistic::LsDerivative { kernel, v, theta } => {
            let k = v.dim();
            if k == 0 || k >= n {
                return Err(Error::domain(format!("need 1 ≤ k < n, got k = {k}, n = {n}")));
            }
            let (k1, k2) = ls_kernels(kernel, v, *theta, delta);
            let r = eta2_sn(k1.as_ref(), k2.as_ref(), model, delta)?;
            let center = (n - k) as f64 * crosscovariance(k1.as_ref(), k2.as_ref(), sigma2, 0.0).value;
            (Plan::Ls { k1, k2, k, center }, r.eta2, r.diagnostics)
        }
    })
}

/// `αᵀ Σ α`.
pub fn quadratic(sigma: &[Vec<f64>], alpha: &[f64]) -> f64 {
    alpha
        .iter()
        .zip(sigma)
        .map(|(a, row)| a * row.iter().zip(alpha).map(|(s, b)| s * b).sum::<f64>())
        .sum()
}

fn replicate(plan: &Plan, model: &LevyModel, path: &PathConfig) -> Result<f64> {
    let n = path.n;
    Ok(match plan {
        Plan::Sn { k1, k2, center } => {
            let (x1, x2) = simulate_paired(k1.as_ref(), k2.as_ref(), model, path)?;
            normalized_statistic(compute_sn(&x1, &x2)?, *center, n)
        }
        Plan::Qn { kernel, b, center } => {
            let x = simulate_path(kernel.as_ref(), model, path)?;
            normalized_statistic(compute_qn(&x, b)?, *center, n)
        }
        Plan::Autocov { kernel, alpha, centers } => {
            let x = simulate_path(kernel.as_ref(), model, path)?;
            let g = sample_autocov(&x, alpha.len())?;
            let root = (n as f64).sqrt();
            alpha.iter().zip(g.iter().zip(centers)).map(|(a, (g, c))| a * root * (g - c)).sum()
        }
        Plan::Ls { k1, k2, k, center } => {
            let (x1, x2) = simulate_paired(k1.as_ref(), k2.as_ref(), model, path)?;
            let raw: f64 = x1.values[*k..].iter().zip(&x2.values[*k..]).map(|(a, b)| a * b).sum();
            normalized_statistic(raw, *center, n)
        }
    })
}

/// Runs `R` replicates on stream indices `0..R` and summarizes them.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<McReport> {
    if cfg.replicates < 2 {
        return Err(Error::domain("need at least two replicates"));
    }
    if cfg.path.n < 2 {
        return Err(Error::domain("need n ≥ 2"));
    }
    cfg.path.validate()?;
    let (plan, eta2, mut diagnostics) = plan(cfg)?;
    if let ConditionGate::Checked(r) = &cfg.conditions {
        if r.verdict != Verdict::Supported {
            diagnostics.push(format!("assumptions {} are {}", r.assumptions, r.verdict));
        }
    }
    let values = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|i| {
            replicate(&plan, &cfg.model, &cfg.path.with_stream(i))
                .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
        })
        .collect::<Result<Vec<f64>>>()?;
    summarize(cfg.statistic.name(), values, eta2, cfg.conditions.clone(), diagnostics)
}

pub(crate) fn summarize(
    statistic: &str,
    values: Vec<f64>,
    eta2: f64,
    conditions: ConditionGate,
    mut diagnostics: Vec<String>,
) -> Result<McReport> {
    let (mean, variance, skewness, excess_kurtosis) = moments(&values);
    let degenerate = values.iter().all(|v| *v == 0.0);
    if degenerate {
        diagnostics.push("degenerate: every replicate is zero".into());
    }
    let (variance_ratio, ks) = if eta2 > 0.0 {
        (Some(variance / eta2), Some(ks_distance(&values, eta2)?))
    } else {
        diagnostics.push(format!("limit variance is {eta2:e}; ratio and KS distance not defined"));
        (None, None)
    };
    Ok(McReport {
        statistic: statistic.to_string(),
        replicates: values,
        mean,
        variance,
        skewness,
        excess_kurtosis,
        eta2,
        variance_ratio,
        ks_distance: ks,
        degenerate,
        conditions,
        csv_paths: Vec::new(),
        diagnostics,
    })
}

/// Identity `b = δ₀` experiment on one kernel, as [`Statistic::Qn`].
pub fn qn_delta0(kernel: &KernelRef) -> Statistic {
    Statistic::Qn { kernel: Arc::clone(kernel), b: CoefficientSeq::delta0() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::ExponentialOu;
    use proptest::prelude::*;

    fn ou() -> KernelRef {
        Arc::new(ExponentialOu::new(1.0).unwrap())
    }

    fn cfg(statistic: Statistic, n: usize, r: usize, seed: u64) -> ExperimentConfig {
        let mut path = PathConfig::new(1.0, n);
        path.seed = seed;
        path.m = 16;
        ExperimentConfig {
            statistic,
            model: LevyModel::BrownianMotion { variance: 2.0 },
            path,
            replicates: r,
            conditions: ConditionGate::Waived,
        }
    }

    #[test]
    fn ks_examples() {
        let std = Normal::new(0.0, 1.0).unwrap();
        let r = 999;
        let q: Vec<f64> = (1..=r).map(|i| std.inverse_cdf(i as f64 / (r + 1) as f64)).collect();
        let d = ks_distance(&q, 1.0).unwrap();
        assert!(d <= 1.0 / (r + 1) as f64 + 1e-12, "{d}");
        assert_eq!(ks_distance(&[0.0; 10], 1.0).unwrap(), 0.5);
        assert!(ks_distance(&[1.0, 2.0], 0.0).is_err());
        assert!(ks_distance(&[1.0], 1.0).is_err());
    }

    proptest! {
        #[test]
        fn ks_scale_invariant(x in proptest::collection::vec(-4.0f64..4.0, 2..50), c in 0.1f64..10.0) {
            let a = ks_distance(&x, 1.3).unwrap();
            let y: Vec<f64> = x.iter().map(|v| v * c).collect();
            let b = ks_distance(&y, 1.3 * c * c).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn moments_of_known_sample() {
        let (m, v, s, k) = moments(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert!(s.abs() < 1e-15);
        assert!((k - (2.5625 / 1.5625 - 3.0)).abs() < 1e-12);
    }

    #[test]
    fn qn_delta0_replicates_equal_sn() {
        let sn = run_experiment(&cfg(Statistic::Sn { k1: ou(), k2: ou() }, 200, 8, 5)).unwrap();
        let qn = run_experiment(&cfg(qn_delta0(&ou()), 200, 8, 5)).unwrap();
        assert_eq!(sn.replicates, qn.replicates);
        assert!((sn.eta2 - qn.eta2).abs() < 1e-10);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = run_experiment(&cfg(Statistic::Sn { k1: ou(), k2: ou() }, 100, 6, 1)).unwrap();
        let b = run_experiment(&cfg(Statistic::Sn { k1: ou(), k2: ou() }, 100, 6, 1)).unwrap();
        let c = run_experiment(&cfg(Statistic::Sn { k1: ou(), k2: ou() }, 100, 6, 2)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.replicates, c.replicates);
        assert_eq!(a.replicates.len(), 6);
    }

    #[test]
    fn zero_derivative_is_degenerate() {
        let v = PolynomialMap { coeffs: vec![vec![0.5]] };
        let r = run_experiment(&cfg(Statistic::LsDerivative { kernel: ou(), v, theta: 0.0 }, 100, 4, 0)).unwrap();
        assert!(r.degenerate);
        assert!(r.replicates.iter().all(|x| *x == 0.0));
        assert_eq!(r.variance_ratio, None);
    }

    #[test]
    fn input_errors() {
        assert!(run_experiment(&cfg(qn_delta0(&ou()), 100, 1, 0)).is_err());
        let bad = Statistic::AutocovContrast { kernel: ou(), alpha: vec![0.0] };
        assert!(run_experiment(&cfg(bad, 100, 4, 0)).is_err());
        let mut c = cfg(qn_delta0(&ou()), 100, 4, 0);
        c.path.horizon = Some(2.0);
        match run_experiment(&c).unwrap_err() {
            Error::Replicate { index, source } => {
                assert!(matches!(*source, Error::Truncation { .. }));
                assert!(index < 4);
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn report_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = run_experiment(&cfg(qn_delta0(&ou()), 50, 3, 0)).unwrap();
        r.write(dir.path()).unwrap();
        let csv = std::fs::read_to_string(dir.path().join("replicates.csv")).unwrap();
        assert!(csv.starts_with("replicate,statistic\n0,"));
        assert_eq!(csv.lines().count(), 4);
        let back: McReport = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(back, r);
    }
}
