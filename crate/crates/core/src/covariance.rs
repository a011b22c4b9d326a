//! Star convolution, covariances of moving averages, and the lattice sums
//! shared by the variance formulas and the condition checks.
//!
//! Covariances `σ² ∫ φ₁(t) φ₂(t + h) dt` are computed by adaptive
//! Gauss-Legendre quadrature split at the kernels' kinks, with half-lines
//! handled by geometric panels. Sequences `s ↦ γ(sΔ)` are computed on a
//! window and continued by a tail model that follows the kernels' decay
//! class.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::KernelGrid;
use crate::kernels::{Decay, Kernel, KernelRef, LagCombination, Tails};
use crate::norms::{Bracketed, SeqTail, TailedSequence};
use crate::quad::{integrate, integrate_to_infinity, TailKind, Tol};

/// The even weight sequence `b` of a quadratic form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSeq {
    /// `b(-K), …, b(K)`; the length must be odd.
    FiniteSupport { values: Vec<f64> },
    /// `b(t) = c|t|^{-ρ}` for `t ≠ 0` and `b(0) = b0`.
    PowerDecay { c: f64, rho: f64, b0: f64 },
}

/// Window radius used when a power-decay sequence must be materialized.
pub const POWER_RADIUS: i64 = 1024;

impl CoefficientSeq {
    /// `b = δ₀`.
    pub fn delta0() -> Self {
        CoefficientSeq::FiniteSupport { values: vec![1.0] }
    }

    /// Symmetric sequence from `b(0), b(1), …, b(K)`.
    pub fn symmetric(half: &[f64]) -> Self {
        let mut values: Vec<f64> = half[1..].iter().rev().copied().collect();
        values.extend_from_slice(half);
        CoefficientSeq::FiniteSupport { values }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CoefficientSeq::FiniteSupport { values } => {
                if values.len() % 2 == 0 {
                    return Err(Error::config("b.values", "need an odd number of entries b(-K..K)"));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("b has non-finite entries"));
                }
            }
            CoefficientSeq::PowerDecay { c, rho, b0 } => {
                if !(c.is_finite() && *c > 0.0 && rho.is_finite() && *rho > 0.0 && b0.is_finite()) {
                    return Err(Error::domain(format!("power-decay b needs c > 0, ρ > 0, got c = {c}, ρ = {rho}")));
                }
            }
        }
        Ok(())
    }

    /// `K` for finite support.
    pub fn radius(&self) -> Option<i64> {
        match self {
            CoefficientSeq::FiniteSupport { values } => Some(values.len() as i64 / 2),
            CoefficientSeq::PowerDecay { .. } => None,
        }
    }

    pub fn get(&self, u: i64) -> f64 {
        match self {
            CoefficientSeq::FiniteSupport { values } => {
                let k = values.len() as i64 / 2;
                if u.abs() > k {
                    0.0
                } else {
                    values[(u + k) as usize]
                }
            }
            CoefficientSeq::PowerDecay { c, rho, b0 } => {
                if u == 0 {
                    *b0
                } else {
                    c * (u.unsigned_abs() as f64).powf(-rho)
                }
            }
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            CoefficientSeq::FiniteSupport { values } => {
                let n = values.len();
                (0..n / 2).all(|i| values[i] == values[n - 1 - i])
            }
            CoefficientSeq::PowerDecay { .. } => true,
        }
    }

    pub fn require_even(&self) -> Result<()> {
        self.validate()?;
        if self.is_even() {
            Ok(())
        } else {
            Err(Error::NotEven)
        }
    }

    /// Exact `b ∈ ℓ^q` membership.
    pub fn in_lq(&self, q: f64) -> bool {
        match self {
            CoefficientSeq::FiniteSupport { .. } => true,
            CoefficientSeq::PowerDecay { rho, .. } => q.is_infinite() || q * rho > 1.0,
        }
    }

    /// Decay class of `|b|`.
    pub fn decay(&self) -> Decay {
        match self {
            CoefficientSeq::FiniteSupport { .. } => Decay::Compact,
            CoefficientSeq::PowerDecay { rho, .. } => Decay::Power { exponent: *rho },
        }
    }

    /// `(lag, weight)` pairs of a finitely supported `b`, zeros dropped.
    pub fn lag_terms(&self) -> Option<Vec<(i64, f64)>> {
        let k = self.radius()?;
        Some((-k..=k).map(|u| (u, self.get(u))).filter(|t| t.1 != 0.0).collect())
    }

    /// `b` (or `|b|`) as a windowed sequence with its exact tail.
    pub fn as_sequence(&self, abs: bool) -> TailedSequence {
        let f = |x: f64| if abs { x.abs() } else { x };
        match self {
            CoefficientSeq::FiniteSupport { values } => {
                TailedSequence::finite(-(values.len() as i64 / 2), values.iter().map(|v| f(*v)).collect())
            }
            CoefficientSeq::PowerDecay { c, rho, .. } => {
                let r = POWER_RADIUS;
                let values = (-r..=r).map(|u| f(self.get(u))).collect();
                let tail = SeqTail::Power { exponent: *rho, constant: f(*c) };
                TailedSequence { start: -r, values, left: tail, right: tail }
            }
        }
    }
}

/// `b ⋆ φ` as a kernel for finitely supported `b` (`|b| ⋆ |φ|` with `abs`).
pub fn star_conv_kernel(b: &CoefficientSeq, kernel: &KernelRef, delta: f64, abs: bool) -> Result<KernelRef> {
    b.validate()?;
    let terms = b.lag_terms().ok_or_else(|| {
        Error::domain("b ⋆ φ as a kernel needs finitely supported b; use star_conv on a grid")
    })?;
    Ok(std::sync::Arc::new(if abs {
        LagCombination::absolute(kernel.clone(), terms, delta)
    } else {
        LagCombination::new(kernel.clone(), terms, delta)
    }))
}

/// `(b ⋆ φ)(t) = Σ_s b(s) φ(t − sΔ)` at the grid nodes, or `(|b| ⋆ |φ|)`.
///
/// Beyond the window `φ` is continued by the grid's fitted tail. For
/// power-decay `b` the part of the sum with `s < -S` is added as a midpoint
/// integral, which diverges (an error) when `ρ` plus the kernel's tail
/// exponent is at most one.
pub fn star_conv(b: &CoefficientSeq, grid: &KernelGrid, abs: bool) -> Result<KernelGrid> {
    b.validate()?;
    let m = grid.m() as i64;
    let half = (grid.len() / 2) as i64;
    let f = |x: f64| if abs { x.abs() } else { x };
    let phi = |k: i64, left: bool| -> f64 {
        match grid.index_of(k) {
            Some(i) if left => f(grid.left_values()[i]),
            Some(i) => f(grid.values()[i]),
            None => f(grid.value_ext(k)),
        }
    };
    let (s_lo, tail_int): (i64, Option<(f64, f64)>) = match b {
        CoefficientSeq::FiniteSupport { values } => (-(values.len() as i64 / 2), None),
        CoefficientSeq::PowerDecay { c, rho, .. } => {
            let e = grid.tail().map(|t| t.exponent).unwrap_or(f64::INFINITY);
            let last = *grid.values().last().unwrap();
            if last != 0.0 && rho + e <= 1.0 {
                return Err(Error::Convergence(format!(
                    "Σ b(s) φ(t − sΔ) diverges: ρ = {rho} plus kernel tail exponent {e:.3} ≤ 1"
                )));
            }
            (-POWER_RADIUS, Some((*c, *rho)))
        }
    };
    let compute = |left: bool| -> Vec<f64> {
        (-half..=half)
            .map(|k| {
                // φ(kδ − sΔ) vanishes once kδ − sΔ < −T
                let s_hi = (k + half).div_euclid(m);
                let s_hi = match b.radius() {
                    Some(r) => s_hi.min(r),
                    None => s_hi,
                };
                let mut v = 0.0;
                for s in s_lo..=s_hi {
                    let w = f(b.get(s));
                    if w != 0.0 {
                        v += w * phi(k - s * m, left);
                    }
                }
                if let Some((c, rho)) = tail_int {
                    let step = grid.step();
                    let g = |x: f64| {
                        let arg = k as f64 * step + x * grid.delta();
                        f(c) * x.powf(-rho) * f(tail_value(grid, arg))
                    };
                    let start = POWER_RADIUS as f64 + 0.5;
                    v += integrate_to_infinity(&g, start, start, TailKind::Slow, &|_, _| Vec::new(), Tol { rel: 1e-10, ..Tol::default() }).value;
                }
                v
            })
            .collect()
    };
    let right = compute(false);
    let left = compute(true);
    KernelGrid::from_values(grid.delta(), grid.m(), right, left)
}

fn tail_value(grid: &KernelGrid, t: f64) -> f64 {
    match grid.tail() {
        Some(fit) if *grid.values().last().unwrap() != 0.0 && t > 0.0 => {
            grid.values().last().unwrap().signum() * fit.constant * t.powf(-fit.exponent)
        }
        _ => 0.0,
    }
}

/// A covariance integral with quadrature diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    pub value: f64,
    /// Extrapolated half-line remainder included in `value`.
    pub tail: f64,
    pub converged: bool,
}

impl CovEstimate {
    /// Whether the extrapolated tail exceeds 1% of the value.
    pub fn tail_warning(&self) -> bool {
        self.tail.abs() > 0.01 * self.value.abs()
    }
}

fn merged_breaks(k1: &dyn Kernel, k2: &dyn Kernel, h: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut b = k1.breaks(lo, hi);
    b.extend(k2.breaks(lo + h, hi + h).into_iter().map(|x| x - h));
    b
}

/// `∫ φ₁(t) φ₂(t + h) dt`.
pub fn cross_integral(k1: &dyn Kernel, k2: &dyn Kernel, h: f64) -> CovEstimate {
    let (a1, b1) = k1.support();
    let (a2, b2) = k2.support();
    let lo = a1.max(a2 - h);
    let hi = b1.min(b2 - h);
    if !(hi > lo) {
        return CovEstimate { value: 0.0, tail: 0.0, converged: true };
    }
    let f = |t: f64| k1.eval(t) * k2.eval(t + h);
    let (s1, e1) = k1.smooth_outside();
    let (s2, e2) = k2.smooth_outside();
    let tails1 = k1.tails();
    let tails2 = k2.tails();
    let tol = Tol::default();
    let mut total = CovEstimate { value: 0.0, tail: 0.0, converged: true };

    // finite middle piece [mid_lo, mid_hi]
    let mid_lo = if lo.is_finite() { lo } else { s1.min(s2 - h).min(hi) };
    let mid_hi = if hi.is_finite() { hi } else { e1.max(e2 - h).max(mid_lo) };
    let span = (mid_hi - mid_lo).max(1e-300);
    let panel = span.min(1.0).max(span / 4096.0);
    total.value += integrate(&f, mid_lo, mid_hi, &merged_breaks(k1, k2, h, mid_lo, mid_hi), panel, tol);
    let tol = Tol { abs: tol.rel * total.value.abs(), ..tol };

    if hi.is_infinite() {
        let kind = tails1.right.product(tails2.right).kind();
        let r = integrate_to_infinity(&f, mid_hi, 1.0, kind, &|a, b| merged_breaks(k1, k2, h, a, b), tol);
        total.value += r.value;
        total.tail += r.remainder;
        total.converged &= r.converged;
    }
    if lo.is_infinite() {
        let kind = tails1.left.product(tails2.left).kind();
        let g = |x: f64| f(-x);
        let brk = |a: f64, b: f64| merged_breaks(k1, k2, h, -b, -a).into_iter().map(|x| -x).collect::<Vec<_>>();
        let r = integrate_to_infinity(&g, -mid_lo, 1.0, kind, &brk, tol);
        total.value += r.value;
        total.tail += r.remainder;
        total.converged &= r.converged;
    }
    total
}

/// `γ₁₂(h) = σ² ∫ φ₁(t) φ₂(t + h) dt`.
pub fn crosscovariance(k1: &dyn Kernel, k2: &dyn Kernel, sigma2: f64, h: f64) -> CovEstimate {
    let c = cross_integral(k1, k2, h);
    CovEstimate { value: sigma2 * c.value, tail: sigma2 * c.tail, converged: c.converged }
}

/// `γ(h) = σ² ∫ φ(t) φ(t + h) dt`.
pub fn autocovariance(kernel: &dyn Kernel, sigma2: f64, h: f64) -> CovEstimate {
    crosscovariance(kernel, kernel, sigma2, h.abs())
}

/// Options for materializing covariance sequences.
#[derive(Clone, Copy, Debug)]
pub struct SeqOptions {
    /// Explicit window for power-law tails.
    pub power_radius: i64,
    /// Hard cap for exponentially decaying tails.
    pub max_radius: i64,
}

impl Default for SeqOptions {
    fn default() -> Self {
        SeqOptions { power_radius: POWER_RADIUS, max_radius: 1 << 16 }
    }
}

/// Decay in `s` of `∫ f(t) g(t + sΔ) dt` from the kernels' tails.
pub fn correlation_tails(k1: &dyn Kernel, k2: &dyn Kernel) -> Result<Tails> {
    Tails::correlation(&k1.tails(), &k2.tails()).ok_or_else(|| {
        Error::Convergence("kernel tails too heavy: ∫ φ₁(t) φ₂(t + h) dt does not converge".into())
    })
}

/// Computes `v(s)` for `s` going outward from `first` in direction `dir`
/// until the decay class says the rest is negligible (or the window for
/// power tails is filled). Returns the values and the tail model.
fn outward<F: Fn(i64) -> f64 + Sync>(
    v: &F,
    first: i64,
    dir: i64,
    last: Option<i64>,
    decay: Decay,
    scale: f64,
    opts: SeqOptions,
) -> (Vec<f64>, SeqTail) {
    let mut out = Vec::new();
    match decay {
        Decay::Power { exponent } => {
            let n = opts.power_radius;
            let ks: Vec<i64> = (0..=n).map(|j| first + dir * j).filter(|k| last.is_none_or(|l| dir * (l - k) >= 0)).collect();
            out = ks.par_iter().map(|&k| v(k)).collect();
            let edge = first + dir * (out.len() as i64 - 1);
            let tail = if last.is_some() || out.is_empty() {
                SeqTail::Zero
            } else {
                SeqTail::power_through(edge, out[out.len() - 1], exponent)
            };
            (out, tail)
        }
        _ => {
            let chunk = 64;
            let mut quiet = 0;
            let mut k = first;
            let mut peak = scale.abs();
            'outer: loop {
                let ks: Vec<i64> = (0..chunk).map(|j| k + dir * j).filter(|kk| last.is_none_or(|l| dir * (l - kk) >= 0)).collect();
                if ks.is_empty() {
                    break;
                }
                let vals: Vec<f64> = ks.par_iter().map(|&kk| v(kk)).collect();
                for x in vals {
                    out.push(x);
                    peak = peak.max(x.abs());
                    if x.abs() <= 1e-17 * peak {
                        quiet += 1;
                        if quiet >= 8 {
                            break 'outer;
                        }
                    } else {
                        quiet = 0;
                    }
                    if out.len() as i64 > opts.max_radius {
                        break 'outer;
                    }
                }
                k += dir * chunk;
            }
            (out, SeqTail::Zero)
        }
    }
}

/// `s ↦ γ₁₂(sΔ)` as a windowed sequence with tails.
pub fn covariance_sequence(
    k1: &dyn Kernel,
    k2: &dyn Kernel,
    sigma2: f64,
    delta: f64,
    opts: SeqOptions,
) -> Result<TailedSequence> {
    covariance_sequence_with(k1, k2, delta, opts, |k1, k2, h| crosscovariance(k1, k2, sigma2, h).value)
}

/// Like [`covariance_sequence`] for `∫ |φ₁(t) φ₂(t + sΔ)| dt`.
pub fn abs_correlation_sequence(k1: &KernelRef, k2: &KernelRef, delta: f64, opts: SeqOptions) -> Result<TailedSequence> {
    let a1 = crate::kernels::Abs(k1.clone());
    let a2 = crate::kernels::Abs(k2.clone());
    covariance_sequence_with(&a1, &a2, delta, opts, |k1, k2, h| cross_integral(k1, k2, h).value)
}

fn covariance_sequence_with<G>(
    k1: &dyn Kernel,
    k2: &dyn Kernel,
    delta: f64,
    opts: SeqOptions,
    g: G,
) -> Result<TailedSequence>
where
    G: Fn(&dyn Kernel, &dyn Kernel, f64) -> f64 + Sync,
{
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("Δ must be > 0, got {delta}")));
    }
    let tails = correlation_tails(k1, k2)?;
    let v = |s: i64| g(k1, k2, s as f64 * delta);
    // the correlation vanishes for h outside [a2 − b1, b2 − a1]
    let (a1, b1) = k1.support();
    let (a2, b2) = k2.support();
    let h_lo = a2 - b1;
    let h_hi = b2 - a1;
    let s_last_right = h_hi.is_finite().then(|| (h_hi / delta).ceil() as i64);
    let s_last_left = h_lo.is_finite().then(|| (h_lo / delta).floor() as i64);
    let first_right = s_last_left.map_or(0, |l| l.max(0));
    let first_left = s_last_right.map_or(-1, |r| r.min(-1));
    let zero = v(0);
    let (right, rtail) = outward(&v, first_right, 1, s_last_right, tails.right, zero, opts);
    if k1.describe() == k2.describe() {
        // autocorrelation: mirror for exact evenness
        let n = right.len() as i64;
        let mut values: Vec<f64> = right[1..].iter().rev().copied().collect();
        values.extend_from_slice(&right);
        return Ok(TailedSequence { start: -(n - 1), values, left: rtail, right: rtail });
    }
    let (left, ltail) = outward(&v, first_left, -1, s_last_left, tails.left, zero, opts);
    // assemble: [left reversed][gap zeros][right]
    let left_end = first_left - (left.len() as i64 - 1);
    let start = left_end.min(first_right);
    let end = (first_right + right.len() as i64 - 1).max(first_left);
    let mut values = vec![0.0; (end - start + 1) as usize];
    for (j, x) in left.iter().enumerate() {
        values[(first_left - j as i64 - start) as usize] = *x;
    }
    for (j, x) in right.iter().enumerate() {
        values[(first_right + j as i64 - start) as usize] = *x;
    }
    Ok(TailedSequence { start, values, left: ltail, right: rtail })
}

/// `s ↦ (b ⋆ γ)(sΔ) = Σ_u b(u) γ((s + u)Δ)` on `[−S, S]` with tail model.
///
/// For even `b` this is the sequence whose squared `ℓ²` norm enters the
/// variance of `Q_n`.
pub fn b_star_gamma(b: &CoefficientSeq, gamma: &TailedSequence, radius: i64) -> Result<TailedSequence> {
    b.validate()?;
    let bseq = b.as_sequence(false);
    let g_tail = gamma.right.exponent().or(gamma.left.exponent());
    let out_exp = match (b, g_tail) {
        (_, None) => match b {
            CoefficientSeq::PowerDecay { rho, .. } => Some(*rho),
            _ => None,
        },
        (CoefficientSeq::FiniteSupport { .. }, Some(e)) => Some(e),
        (CoefficientSeq::PowerDecay { rho, .. }, Some(e)) => {
            match (Decay::Power { exponent: *rho }).convolve(Decay::Power { exponent: e }) {
                Some(d) => d.power_exponent(),
                None => {
                    return Err(Error::Convergence(format!(
                        "Σ_u b(u) γ((s+u)Δ) diverges: ρ = {rho}, γ tail exponent {e:.3}"
                    )))
                }
            }
        }
    };
    gamma.correlate(&bseq, radius, out_exp)
}

/// `b ⋆ γ` for a kernel, computing the covariance sequence first.
pub fn b_star_gamma_for_kernel(
    b: &CoefficientSeq,
    kernel: &dyn Kernel,
    sigma2: f64,
    delta: f64,
    radius: i64,
) -> Result<TailedSequence> {
    let gamma = covariance_sequence(kernel, kernel, sigma2, delta, SeqOptions::default())?;
    b_star_gamma(b, &gamma, radius)
}

/// `Σ_s f(t + sΔ)` over all integers `s`.
///
/// Exponentially decaying sides are summed until negligible; power-law
/// sides are summed to `power_terms` terms and completed by the midpoint
/// integral `Δ⁻¹ ∫_{t+(S+½)Δ}^∞ f`.
pub fn lattice_sum<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    t: f64,
    delta: f64,
    support: (f64, f64),
    tails: Tails,
    power_terms: i64,
) -> Bracketed {
    let s_lo = if support.0.is_finite() { ((support.0 - t) / delta).ceil() as i64 - 1 } else { i64::MIN };
    let s_hi = if support.1.is_finite() { ((support.1 - t) / delta).floor() as i64 + 1 } else { i64::MAX };
    let mut total = 0.0;
    let mut tail_bound = 0.0;
    let mut radius = 0i64;
    let anchor = 0i64.clamp(s_lo, s_hi);
    for (dir, last, decay) in [(1i64, s_hi, tails.right), (-1i64, s_lo, tails.left)] {
        let mut s = if dir == 1 { anchor } else { anchor - 1 };
        if dir * (last - s) < 0 {
            continue;
        }
        let mut quiet = 0;
        let mut count = 0i64;
        let mut peak: f64 = 0.0;
        loop {
            let v = f(t + s as f64 * delta);
            total += v;
            peak = peak.max(v.abs());
            count += 1;
            if s == last {
                break;
            }
            match decay {
                Decay::Power { .. } if count >= power_terms => {
                    let from = t + (s as f64 + 0.5 * dir as f64) * delta;
                    let g = |x: f64| f(from + dir as f64 * x);
                    let r = integrate_to_infinity(&g, 0.0, delta, TailKind::Slow, &|_, _| Vec::new(), Tol { rel: 1e-12, ..Tol::default() });
                    total += r.value / delta;
                    tail_bound += (r.value / delta).abs();
                    break;
                }
                Decay::Power { .. } => {}
                _ => {
                    if v.abs() <= 1e-18 * peak.max(total.abs()) {
                        quiet += 1;
                        if quiet >= 4 {
                            break;
                        }
                    } else {
                        quiet = 0;
                    }
                    if count > 1_000_000 {
                        break;
                    }
                }
            }
            s += dir;
        }
        radius = radius.max(s.abs());
    }
    Bracketed { value: total, radius, tail_bound }
}
