//! Sample-autocovariance and least-squares experiments built on the
//! Monte Carlo harness.

use nalgebra::{DMatrix, DVector};

use crate::conditions::{check_conditions, Assumptions, CheckOptions};
use crate::covariance::autocovariance;
use crate::error::{Error, Result};
use crate::kernels::KernelRef;
use crate::levy::LevyModel;
use crate::montecarlo::{run_experiment, ConditionGate, ExperimentConfig, McReport, Statistic};
use crate::simulate::{ParamMap, PathConfig, PolynomialMap};

#[derive(Clone, Debug)]
pub struct AutocovExperiment {
    pub kernel: KernelRef,
    pub model: LevyModel,
    /// Δ, n, seed and simulation settings.
    pub path: PathConfig,
    /// Contrast over lags `1..=m`.
    pub alpha: Vec<f64>,
    pub replicates: usize,
    /// Precomputed assumption check; `sample-acf` is checked when absent.
    pub conditions: Option<ConditionGate>,
}

#[derive(Clone, Debug)]
pub struct LsExperiment {
    pub kernel: KernelRef,
    pub model: LevyModel,
    pub path: PathConfig,
    pub v: PolynomialMap,
    /// Evaluation point; when absent it is solved from the projection
    /// equations, which requires `v(θ) = θ` in one dimension.
    pub theta0: Option<f64>,
    pub replicates: usize,
    pub conditions: Option<ConditionGate>,
}

fn sample_acf_gate(given: &Option<ConditionGate>, kernel: &KernelRef, model: &LevyModel, delta: f64) -> Result<ConditionGate> {
    if let Some(g) = given {
        return Ok(g.clone());
    }
    let opts = CheckOptions { driver: Some(*model), ..CheckOptions::default() };
    Ok(ConditionGate::Checked(check_conditions(
        Assumptions::SampleAcf,
        std::slice::from_ref(kernel),
        None,
        delta,
        &opts,
    )?))
}

/// Replicates of `αᵀ√n(γ̂_n − E γ̂_n)` against `αᵀΣα`.
pub fn autocov_clt_check(exp: &AutocovExperiment) -> Result<McReport> {
    let conditions = sample_acf_gate(&exp.conditions, &exp.kernel, &exp.model, exp.path.delta)?;
    run_experiment(&ExperimentConfig {
        statistic: Statistic::AutocovContrast { kernel: exp.kernel.clone(), alpha: exp.alpha.clone() },
        model: exp.model,
        path: exp.path.clone(),
        replicates: exp.replicates,
        conditions,
    })
}

/// Coefficients `c` of the best linear predictor of `X_t` from
/// `X_{t−1}, …, X_{t−k}`: the Toeplitz system `Γ_k c = (γ(Δ), …, γ(kΔ))`.
pub fn projection_coefficients(kernel: &KernelRef, model: &LevyModel, delta: f64, k: usize) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::domain("need k ≥ 1"));
    }
    let sigma2 = model.cumulants()?.sigma2;
    let g: Vec<f64> = (0..=k).map(|j| autocovariance(kernel.as_ref(), sigma2, j as f64 * delta).value).collect();
    let gamma = DMatrix::from_fn(k, k, |i, j| g[i.abs_diff(j)]);
    let rhs = DVector::from_iterator(k, g[1..].iter().copied());
    let chol = gamma
        .cholesky()
        .ok_or_else(|| Error::domain("autocovariance matrix is not positive definite"))?;
    Ok(chol.solve(&rhs).iter().copied().collect())
}

fn is_identity(v: &PolynomialMap) -> bool {
    v.dim() == 1 && v.value(0.0) == [0.0] && v.derivative(0.0) == [1.0] && v.derivative(1.0) == [1.0]
}

/// Replicates of `ℓ′_n(θ₀)/√n` against the limit variance of the
/// equivalent bilinear form.
pub fn ls_clt_check(exp: &LsExperiment) -> Result<McReport> {
    let k = exp.v.dim();
    let c = projection_coefficients(&exp.kernel, &exp.model, exp.path.delta, k)?;
    let theta = match exp.theta0 {
        Some(t) => t,
        None if is_identity(&exp.v) => c[0],
        None => return Err(Error::domain("θ₀ must be given unless v(θ) = θ")),
    };
    let conditions = sample_acf_gate(&exp.conditions, &exp.kernel, &exp.model, exp.path.delta)?;
    let mut report = run_experiment(&ExperimentConfig {
        statistic: Statistic::LsDerivative { kernel: exp.kernel.clone(), v: exp.v.clone(), theta },
        model: exp.model,
        path: exp.path.clone(),
        replicates: exp.replicates,
        conditions,
    })?;
    let gap = exp.v.value(theta).iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if gap > 1e-8 {
        report.diagnostics.push(format!(
            "v(θ₀) differs from the projection coefficients by {gap:.3e}; the statistic is not centered"
        ));
    }
    report.diagnostics.push(format!("θ₀ = {theta}"));
    Ok(report)
}

/// Per-replicate change from centering lag `j` at `γ(jΔ)` instead of the
/// exact mean `(1 − j/n)γ(jΔ)`: `j γ(jΔ)/√n`.
pub fn centering_shift(kernel: &KernelRef, model: &LevyModel, delta: f64, j: usize, n: usize) -> Result<f64> {
    let sigma2 = model.cumulants()?.sigma2;
    let g = autocovariance(kernel.as_ref(), sigma2, j as f64 * delta).value;
    Ok(j as f64 * g / (n as f64).sqrt())
}
