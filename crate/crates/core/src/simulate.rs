//! Simulation of sampled moving averages and the statistics computed from
//! them.
//!
//! The driver is discretized on a fine grid of step `δ = Δ/m` with exact
//! increment laws, and the kernel is sampled at the interval midpoints:
//!
//! `X_{tΔ} ≈ Σ_j φ((j + ½)δ) · (L_{tΔ - jδ} - L_{tΔ - (j+1)δ})`.
//!
//! The kernel is truncated to `[-T, T]`; the discarded `L²` mass is checked
//! against a budget and recorded in the path's provenance. The sum is
//! evaluated directly or, for long windows, as `m` interleaved convolutions
//! accumulated in the frequency domain.

use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::covariance::{cross_integral, CoefficientSeq};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelRef, LagCombination};
use crate::levy::LevyModel;
use crate::quad::{integrate_to_infinity, Tol};
use crate::rng;

/// Default relative `L²` mass allowed outside `[-T, T]`.
pub const DEFAULT_MASS_BUDGET: f64 = 1e-4;
/// Largest automatic horizon, in units of `Δ`.
pub const MAX_AUTO_HORIZON: u32 = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvMethod {
    /// Direct sums for short windows, FFT otherwise.
    #[default]
    Auto,
    Direct,
    Fft,
}

fn default_m() -> usize {
    64
}

fn default_budget() -> f64 {
    DEFAULT_MASS_BUDGET
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathConfig {
    pub delta: f64,
    pub n: usize,
    /// Fine steps per `Δ`.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Truncation horizon `T`, a multiple of `Δ`. Chosen from the mass budget
    /// when absent.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub stream: u64,
    #[serde(default = "default_budget")]
    pub mass_budget: f64,
    #[serde(default)]
    pub method: ConvMethod,
}

impl PathConfig {
    pub fn new(delta: f64, n: usize) -> Self {
        PathConfig {
            delta,
            n,
            m: default_m(),
            horizon: None,
            seed: 0,
            stream: 0,
            mass_budget: DEFAULT_MASS_BUDGET,
            method: ConvMethod::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::domain(format!("Δ must be > 0, got {}", self.delta)));
        }
        if self.n == 0 {
            return Err(Error::domain("n must be ≥ 1"));
        }
        if self.m == 0 {
            return Err(Error::grid("need at least one fine step per Δ"));
        }
        if !(self.mass_budget > 0.0) {
            return Err(Error::domain("mass budget must be > 0"));
        }
        if let Some(t) = self.horizon {
            let r = t / self.delta;
            if !(t > 0.0) || (r - r.round()).abs() > 1e-9 * r.max(1.0) {
                return Err(Error::grid(format!("horizon {t} is not a positive multiple of Δ = {}", self.delta)));
            }
        }
        Ok(())
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        PathConfig { stream, ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub kernel_hash: String,
    pub model_hash: String,
    /// Horizon actually used.
    pub horizon: f64,
    /// Relative `L²` mass of the kernel outside `[-T, T]`.
    pub tail_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    /// `X_Δ, …, X_{nΔ}`.
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl SamplePath {
    /// A path from raw values, for statistics on external data.
    pub fn from_values(values: Vec<f64>) -> Self {
        SamplePath {
            values,
            provenance: Provenance {
                config_hash: String::new(),
                kernel_hash: String::new(),
                model_hash: String::new(),
                horizon: 0.0,
                tail_mass: 0.0,
            },
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes the values as one CSV column and the provenance to a
    /// `.json` sidecar next to it.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "x")?;
        for v in &self.values {
            writeln!(f, "{v:e}")?;
        }
        f.flush()?;
        let side = path.with_extension("json");
        std::fs::write(side, serde_json::to_string_pretty(&self.provenance)?)?;
        Ok(())
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// `∫_{|t| > T} φ²` relative to `∫ φ²`.
pub fn relative_mass_outside(kernel: &dyn Kernel, horizon: f64) -> f64 {
    let total = cross_integral(kernel, kernel, 0.0).value;
    if total == 0.0 {
        return 0.0;
    }
    let tails = kernel.tails();
    let (a, b) = kernel.support();
    let sq = |t: f64| kernel.eval(t).powi(2);
    let tol = Tol { rel: 1e-10, ..Tol::default() };
    let mut out = 0.0;
    if b > horizon {
        let f = |x: f64| sq(horizon + x);
        let brk = |lo: f64, hi: f64| kernel.breaks(horizon + lo, horizon + hi).into_iter().map(|t| t - horizon).collect::<Vec<f64>>();
        out += if b.is_finite() {
            crate::quad::integrate(&f, 0.0, b - horizon, &brk(0.0, b - horizon), horizon.max(1.0), tol)
        } else {
            integrate_to_infinity(&f, 0.0, horizon.max(1.0), tails.right.pow(2.0).kind(), &brk, tol).value
        };
    }
    if a < -horizon {
        let f = |x: f64| sq(-horizon - x);
        let brk = |lo: f64, hi: f64| kernel.breaks(-horizon - hi, -horizon - lo).into_iter().map(|t| -horizon - t).collect::<Vec<f64>>();
        out += if a.is_finite() {
            crate::quad::integrate(&f, 0.0, -horizon - a, &brk(0.0, -horizon - a), horizon.max(1.0), tol)
        } else {
            integrate_to_infinity(&f, 0.0, horizon.max(1.0), tails.left.pow(2.0).kind(), &brk, tol).value
        };
    }
    (out / total).max(0.0)
}

/// Smallest multiple of `Δ` (up to `MAX_AUTO_HORIZON Δ`) whose outside mass
/// is within budget.
pub fn auto_horizon(kernel: &dyn Kernel, delta: f64, budget: f64) -> Result<(f64, f64)> {
    let (a, b) = kernel.support();
    let reach = a.abs().max(b.abs());
    if reach.is_finite() {
        let k = (reach / delta).ceil().max(1.0);
        if k <= MAX_AUTO_HORIZON as f64 {
            return Ok((k * delta, 0.0));
        }
    }
    let mass = |k: u32| relative_mass_outside(kernel, k as f64 * delta);
    let mut hi = 1u32;
    while mass(hi) >= budget {
        if hi >= MAX_AUTO_HORIZON {
            return Err(Error::Truncation { mass: mass(hi), budget });
        }
        hi = (hi * 2).min(MAX_AUTO_HORIZON);
    }
    let mut lo = hi / 2;
    if lo == 0 || mass(lo) < budget {
        lo = 0;
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if mass(mid) < budget {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((hi as f64 * delta, mass(hi)))
}

/// Midpoint taps `φ((j + ½)δ)` for `j ∈ [j_lo, j_hi]`.
struct Taps {
    j_lo: i64,
    values: Vec<f64>,
}

impl Taps {
    fn new(kernel: &dyn Kernel, step: f64, horizon: f64) -> Taps {
        let (a, b) = kernel.support();
        let lo = a.max(-horizon);
        let hi = b.min(horizon);
        let j_lo = (lo / step).floor() as i64;
        let j_hi = ((hi / step).ceil() as i64 - 1).max(j_lo);
        let values = (j_lo..=j_hi).map(|j| kernel.eval((j as f64 + 0.5) * step)).collect();
        Taps { j_lo, values }
    }

    #[cfg(test)]
    fn j_hi(&self) -> i64 {
        self.j_lo + self.values.len() as i64 - 1
    }
}

/// Fine increments `e_i` for `[iδ, (i+1)δ)`, `i ∈ [i_lo, i_lo + len)`.
struct Increments {
    i_lo: i64,
    values: Vec<f64>,
}

fn horizon_for(kernel: &dyn Kernel, cfg: &PathConfig) -> Result<(f64, f64)> {
    match cfg.horizon {
        Some(t) => {
            let mass = relative_mass_outside(kernel, t);
            if mass >= cfg.mass_budget {
                return Err(Error::Truncation { mass, budget: cfg.mass_budget });
            }
            Ok((t, mass))
        }
        None => auto_horizon(kernel, cfg.delta, cfg.mass_budget),
    }
}

/// The range of increments needed by the taps, padded so both convolution
/// methods read the same numbers.
fn increment_range(taps: &[&Taps], m: usize, n: usize) -> (i64, i64) {
    let m = m as i64;
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    for t in taps {
        let q = (t.values.len() as i64 + m - 1) / m;
        lo = lo.min((1 - q) * m - t.j_lo);
        hi = hi.max(n as i64 * m - t.j_lo - 1);
    }
    (lo, hi)
}

fn draw(model: &LevyModel, cfg: &PathConfig, range: (i64, i64)) -> Result<Increments> {
    let step = cfg.delta / cfg.m as f64;
    let mut values = vec![0.0; (range.1 - range.0 + 1) as usize];
    let mut r = rng::stream(cfg.seed, cfg.stream);
    model.fill_increments(step, &mut r, &mut values)?;
    Ok(Increments { i_lo: range.0, values })
}

fn convolve_direct(taps: &Taps, inc: &Increments, m: usize, n: usize) -> Vec<f64> {
    let m = m as i64;
    (1..=n as i64)
        .map(|t| {
            let base = t * m - 1 - inc.i_lo;
            taps.values
                .iter()
                .enumerate()
                .map(|(k, phi)| phi * inc.values[(base - taps.j_lo - k as i64) as usize])
                .sum()
        })
        .collect()
}

/// Polyphase form: with `j = j_lo + qm + r`,
/// `X_t = Σ_r Σ_q h_r[q] g_r[t − q]`, `h_r[q] = φ_{j_lo+qm+r}`,
/// `g_r[p] = e_{pm − j_lo − r − 1}`.
fn convolve_fft(taps: &Taps, inc: &Increments, m: usize, n: usize) -> Vec<f64> {
    let mi = m as i64;
    let q_len = taps.values.len().div_ceil(m);
    let p0 = 2 - q_len as i64;
    let g_len = n + q_len - 1;
    let size = g_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut acc = vec![Complex::new(0.0, 0.0); size];
    let mut h = vec![Complex::new(0.0, 0.0); size];
    let mut g = vec![Complex::new(0.0, 0.0); size];
    for r in 0..m {
        h.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        let mut any = false;
        for q in 0..q_len {
            if let Some(v) = taps.values.get(q * m + r) {
                h[q].re = *v;
                any |= *v != 0.0;
            }
        }
        if !any {
            continue;
        }
        for (k, z) in g.iter_mut().enumerate() {
            *z = if k < g_len {
                let p = p0 + k as i64;
                let i = p * mi - taps.j_lo - r as i64 - 1;
                Complex::new(inc.values[(i - inc.i_lo) as usize], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fwd.process(&mut h);
        fwd.process(&mut g);
        for ((a, x), y) in acc.iter_mut().zip(&h).zip(&g) {
            *a += x * y;
        }
    }
    inv.process(&mut acc);
    let scale = 1.0 / size as f64;
    (1..=n as i64).map(|t| acc[(t - p0) as usize].re * scale).collect()
}

fn use_fft(method: ConvMethod, taps: &Taps, m: usize, n: usize) -> bool {
    match method {
        ConvMethod::Direct => false,
        ConvMethod::Fft => true,
        ConvMethod::Auto => {
            let direct = (n * taps.values.len()) as f64;
            let len = (n + taps.values.len() / m + 1).next_power_of_two() as f64;
            let fft = 3.0 * m as f64 * len * len.log2();
            fft < direct
        }
    }
}

fn provenance(kernel: &dyn Kernel, model: &LevyModel, cfg: &PathConfig, horizon: f64, tail_mass: f64) -> Result<Provenance> {
    Ok(Provenance {
        config_hash: sha256_hex(serde_json::to_string(cfg)?.as_bytes()),
        kernel_hash: sha256_hex(kernel.describe().as_bytes()),
        model_hash: sha256_hex(serde_json::to_string(model)?.as_bytes()),
        horizon,
        tail_mass,
    })
}

fn run(taps: &Taps, inc: &Increments, cfg: &PathConfig) -> Vec<f64> {
    if use_fft(cfg.method, taps, cfg.m, cfg.n) {
        convolve_fft(taps, inc, cfg.m, cfg.n)
    } else {
        convolve_direct(taps, inc, cfg.m, cfg.n)
    }
}

/// Simulates `X_Δ, …, X_{nΔ}`.
pub fn simulate_path(kernel: &dyn Kernel, model: &LevyModel, cfg: &PathConfig) -> Result<SamplePath> {
    cfg.validate()?;
    model.validate()?;
    let (horizon, mass) = horizon_for(kernel, cfg)?;
    let taps = Taps::new(kernel, cfg.delta / cfg.m as f64, horizon);
    let inc = draw(model, cfg, increment_range(&[&taps], cfg.m, cfg.n))?;
    let values = run(&taps, &inc, cfg);
    Ok(SamplePath { values, provenance: provenance(kernel, model, cfg, horizon, mass)? })
}

/// Two paths driven by the same increments.
pub fn simulate_paired(
    k1: &dyn Kernel,
    k2: &dyn Kernel,
    model: &LevyModel,
    cfg: &PathConfig,
) -> Result<(SamplePath, SamplePath)> {
    cfg.validate()?;
    model.validate()?;
    let (h1, m1) = horizon_for(k1, cfg)?;
    let (h2, m2) = horizon_for(k2, cfg)?;
    let step = cfg.delta / cfg.m as f64;
    let t1 = Taps::new(k1, step, h1);
    let t2 = Taps::new(k2, step, h2);
    let inc = draw(model, cfg, increment_range(&[&t1, &t2], cfg.m, cfg.n))?;
    Ok((
        SamplePath { values: run(&t1, &inc, cfg), provenance: provenance(k1, model, cfg, h1, m1)? },
        SamplePath { values: run(&t2, &inc, cfg), provenance: provenance(k2, model, cfg, h2, m2)? },
    ))
}

/// `S_n = Σ_t x¹_t x²_t`.
pub fn compute_sn(x1: &SamplePath, x2: &SamplePath) -> Result<f64> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch { left: x1.len(), right: x2.len() });
    }
    Ok(x1.values.iter().zip(&x2.values).map(|(a, b)| a * b).sum())
}

/// `r(u) = Σ_{t} x_t x_{t+u}` for `u = 0..=max_lag`.
pub fn lagged_products(x: &[f64], max_lag: usize, method: ConvMethod) -> Vec<f64> {
    let n = x.len();
    let max_lag = max_lag.min(n.saturating_sub(1));
    let fft = match method {
        ConvMethod::Direct => false,
        ConvMethod::Fft => true,
        ConvMethod::Auto => (max_lag as f64) > 4.0 * (n as f64).log2().max(1.0) * 8.0,
    };
    if n == 0 {
        return Vec::new();
    }
    if !fft {
        return (0..=max_lag)
            .map(|u| x[..n - u].iter().zip(&x[u..]).map(|(a, b)| a * b).sum())
            .collect();
    }
    let size = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut z: Vec<Complex<f64>> = (0..size).map(|i| Complex::new(x.get(i).copied().unwrap_or(0.0), 0.0)).collect();
    fwd.process(&mut z);
    for v in z.iter_mut() {
        *v = Complex::new(v.norm_sqr(), 0.0);
    }
    inv.process(&mut z);
    let scale = 1.0 / size as f64;
    (0..=max_lag).map(|u| z[u].re * scale).collect()
}

/// `Q_n = Σ_{t,s} b(t − s) x_t x_s` for even `b`.
pub fn compute_qn(x: &SamplePath, b: &CoefficientSeq) -> Result<f64> {
    compute_qn_with(x, b, ConvMethod::Auto)
}

pub fn compute_qn_with(x: &SamplePath, b: &CoefficientSeq, method: ConvMethod) -> Result<f64> {
    b.validate()?;
    b.require_even()?;
    let n = x.len();
    if n == 0 {
        return Ok(0.0);
    }
    let reach = b.radius().map_or(n - 1, |k| (k as usize).min(n - 1));
    let r = lagged_products(&x.values, reach, method);
    let mut q = b.get(0) * r[0];
    for (u, ru) in r.iter().enumerate().skip(1) {
        q += 2.0 * b.get(u as i64) * ru;
    }
    Ok(q)
}

/// `γ̂_n(j) = n⁻¹ Σ_{t=1}^{n−j} x_t x_{t+j}` for `j = 1..=m`.
pub fn sample_autocov(x: &SamplePath, m: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if m == 0 || m + 1 >= n {
        return Err(Error::domain(format!("need 1 ≤ m < n − 1, got m = {m}, n = {n}")));
    }
    let r = lagged_products(&x.values, m, ConvMethod::Direct);
    Ok(r[1..].iter().map(|v| v / n as f64).collect())
}

/// A differentiable map `θ ↦ v(θ) ∈ ℝ^k`.
pub trait ParamMap {
    fn dim(&self) -> usize;
    fn value(&self, theta: f64) -> Vec<f64>;
    fn derivative(&self, theta: f64) -> Vec<f64>;
}

/// Component `i` is `Σ_p coeffs[i][p] θ^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialMap {
    pub coeffs: Vec<Vec<f64>>,
}

impl PolynomialMap {
    /// `v(θ) = θ` in one dimension.
    pub fn identity() -> Self {
        PolynomialMap { coeffs: vec![vec![0.0, 1.0]] }
    }
}

impl ParamMap for PolynomialMap {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, theta: f64) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.iter().rev().fold(0.0, |acc, a| acc * theta + a)).collect()
    }
    fn derivative(&self, theta: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| {
                c.iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (p, a)| acc * theta + p as f64 * a)
            })
            .collect()
    }
}

/// `ℓ′_n(θ) = −2 Σ_{t=k+1}^n (x_t − v(θ)ᵀX(t)) v′(θ)ᵀX(t)` with
/// `X(t) = (x_{t−1}, …, x_{t−k})`.
pub fn ls_derivative(x: &SamplePath, v: &dyn ParamMap, theta: f64) -> Result<f64> {
    let k = v.dim();
    let n = x.len();
    if k == 0 || n <= k {
        return Err(Error::domain(format!("need 1 ≤ k < n, got k = {k}, n = {n}")));
    }
    let vv = v.value(theta);
    let dv = v.derivative(theta);
    let xs = &x.values;
    let mut total = 0.0;
    for t in k..n {
        let mut fit = 0.0;
        let mut slope = 0.0;
        for j in 1..=k {
            fit += vv[j - 1] * xs[t - j];
            slope += dv[j - 1] * xs[t - j];
        }
        total += (xs[t] - fit) * slope;
    }
    Ok(-2.0 * total)
}

/// Kernels `φ₁ = −φ + Σ_j v_j φ(· − jΔ)` and `φ₂ = Σ_j 2v′_j φ(· − jΔ)`
/// for which `ℓ′_n(θ)` has the form of `S_n`.
pub fn ls_kernels(kernel: &KernelRef, v: &dyn ParamMap, theta: f64, delta: f64) -> (KernelRef, KernelRef) {
    let vv = v.value(theta);
    let dv = v.derivative(theta);
    let mut t1 = vec![(0i64, -1.0)];
    t1.extend(vv.iter().enumerate().map(|(j, w)| (j as i64 + 1, *w)));
    let t2: Vec<(i64, f64)> = dv.iter().enumerate().map(|(j, w)| (j as i64 + 1, 2.0 * w)).collect();
    (
        Arc::new(LagCombination::new(kernel.clone(), t1, delta)),
        Arc::new(LagCombination::new(kernel.clone(), t2, delta)),
    )
}

/// `(raw − expected)/√n`.
pub fn normalized_statistic(raw: f64, expected: f64, n: usize) -> f64 {
    (raw - expected) / (n as f64).sqrt()
}
