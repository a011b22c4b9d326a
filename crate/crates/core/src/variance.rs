//! Asymptotic variances `η²` of `S_n` and `Q_n`, the covariance matrix of
//! the sample autocovariances, and exact expectations of the statistics.
//!
//! Every `η²` is a fourth-cumulant phase integral over `[0, Δ]` plus sums of
//! products of covariances. The phase integral uses the lattice sums of
//! [`crate::covariance::lattice_sum`]; the covariance sums are inner products
//! of windowed sequences with tail models.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::covariance::{
    b_star_gamma, correlation_tails, covariance_sequence, lattice_sum, CoefficientSeq, SeqOptions, POWER_RADIUS,
};
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelRef, LagCombination, Tails};
use crate::levy::LevyModel;
use crate::norms::{Bracketed, TailedSequence};
use crate::quad::{integrate, Tol};

/// Number of explicit lattice terms before a power tail is integrated.
pub const POWER_TERMS: i64 = 256;

/// One summand of `η²`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    /// Largest lattice index summed explicitly.
    pub radius: i64,
    /// Size of the tail contribution included in `value`.
    pub tail_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    /// `"sn"` or `"qn"`.
    pub statistic: String,
    pub eta2: f64,
    pub kappa4_term: f64,
    pub covariance_terms: Vec<Term>,
    /// Set by callers that ran the condition checks; `None` means the
    /// assumptions were not verified.
    pub conditions: Option<String>,
    /// For `Q_n` with finitely supported `b`: the same `η²` computed as the
    /// variance of `S_n` with `φ₁ = φ`, `φ₂ = b ⋆ φ`.
    pub eta2_via_bilinear: Option<f64>,
    pub diagnostics: Vec<String>,
}

impl VarianceReport {
    fn assemble(statistic: &str, kappa4: Term, covariance_terms: Vec<Term>) -> Self {
        let eta2 = kappa4.value + covariance_terms.iter().map(|t| t.value).sum::<f64>();
        let mut diagnostics = Vec::new();
        for t in std::iter::once(&kappa4).chain(&covariance_terms) {
            if t.tail_bound > 1e-6 * eta2.abs().max(1e-300) {
                diagnostics.push(format!("{}: tail contribution {:.3e} beyond index {}", t.name, t.tail_bound, t.radius));
            }
        }
        VarianceReport {
            statistic: statistic.into(),
            eta2,
            kappa4_term: kappa4.value,
            covariance_terms,
            conditions: None,
            eta2_via_bilinear: None,
            diagnostics,
        }
    }
}

/// Break points of the kernels reduced modulo `Δ` into `(0, Δ)`.
pub(crate) fn phase_breaks(kernels: &[&dyn Kernel], delta: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for k in kernels {
        let (a, b) = k.smooth_outside();
        let (s0, s1) = k.support();
        let mut pts = k.breaks(a - delta, b + delta);
        pts.extend([s0, s1, a, b].into_iter().filter(|x| x.is_finite()));
        for x in pts {
            let r = x - (x / delta).floor() * delta;
            if r > 1e-12 * delta && r < delta * (1.0 - 1e-12) {
                out.push(r);
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * delta);
    out
}

fn phase_integral<F: Fn(f64) -> f64 + Sync>(g: &F, delta: f64, breaks: &[f64]) -> f64 {
    integrate(g, 0.0, delta, breaks, delta / 4.0, Tol { rel: 1e-12, ..Tol::default() })
}

/// Support of a product of two kernels.
fn joint_support(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0.max(b.0), a.1.min(b.1))
}

/// `κ₄ ∫₀^Δ (Σ_s φ₁(t+sΔ) φ₂(t+sΔ))² dt` by lattice sums of the product.
fn kappa4_term_sn(k1: &dyn Kernel, k2: &dyn Kernel, kappa4: f64, delta: f64) -> Term {
    if kappa4 == 0.0 {
        return Term { name: "kappa4".into(), value: 0.0, radius: 0, tail_bound: 0.0 };
    }
    let support = joint_support(k1.support(), k2.support());
    let tails = k1.tails().product(&k2.tails());
    let prod = |x: f64| k1.eval(x) * k2.eval(x);
    let radius = std::sync::atomic::AtomicI64::new(0);
    let g = |t: f64| {
        let s = lattice_sum(&prod, t, delta, support, tails, POWER_TERMS);
        radius.fetch_max(s.radius, std::sync::atomic::Ordering::Relaxed);
        s.value * s.value
    };
    let v = phase_integral(&g, delta, &phase_breaks(&[k1, k2], delta));
    let at0 = lattice_sum(&prod, 0.5 * delta, delta, support, tails, POWER_TERMS);
    Term {
        name: "kappa4".into(),
        value: kappa4 * v,
        radius: radius.into_inner(),
        tail_bound: kappa4 * delta * (2.0 * at0.value.abs() * at0.tail_bound + at0.tail_bound * at0.tail_bound),
    }
}

fn term(name: &str, b: Bracketed, scale: f64) -> Term {
    Term {
        name: name.into(),
        value: scale * b.value,
        radius: b.radius,
        tail_bound: scale.abs() * b.tail_bound,
    }
}

/// Asymptotic variance of `(S_n − E S_n)/√n` for `S_n = Σ X¹_{tΔ} X²_{tΔ}`
/// with both moving averages driven by the same Lévy process.
pub fn eta2_sn(k1: &dyn Kernel, k2: &dyn Kernel, model: &LevyModel, delta: f64) -> Result<VarianceReport> {
    eta2_sn_with(k1, k2, model, delta, SeqOptions::default())
}

pub fn eta2_sn_with(
    k1: &dyn Kernel,
    k2: &dyn Kernel,
    model: &LevyModel,
    delta: f64,
    opts: SeqOptions,
) -> Result<VarianceReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("Δ must be > 0, got {delta}")));
    }
    let c = model.cumulants()?;
    correlation_tails(k1, k2)?;
    let k4 = kappa4_term_sn(k1, k2, c.kappa4, delta);
    // sequences carry σ² each, so the products carry σ⁴
    let g11 = covariance_sequence(k1, k1, c.sigma2, delta, opts)?;
    let same = k1.describe() == k2.describe();
    let g22 = if same { g11.clone() } else { covariance_sequence(k2, k2, c.sigma2, delta, opts)? };
    let g12 = if same { g11.clone() } else { covariance_sequence(k1, k2, c.sigma2, delta, opts)? };
    let t1 = g11.dot(&g22)?;
    let t2 = g12.dot(&g12.reversed())?;
    Ok(VarianceReport::assemble(
        "sn",
        k4,
        vec![term("gamma11_gamma22", t1, 1.0), term("gamma12_gamma21", t2, 1.0)],
    ))
}

/// Lattice values `φ(t + sΔ)` for `s` from the first index that can be
/// non-zero up to where the kernel is negligible (exponential tails) or
/// `POWER_TERMS` terms (power tails), plus `extra` further values.
pub(crate) fn lattice_vector(kernel: &dyn Kernel, t: f64, delta: f64, extra: i64) -> (i64, Vec<f64>, i64) {
    let (a, b) = kernel.support();
    let s_lo = if a.is_finite() { ((a - t) / delta).floor() as i64 } else { -POWER_TERMS };
    let tails = kernel.tails();
    let mut v = Vec::new();
    let mut s = s_lo;
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    loop {
        let x = kernel.eval(t + s as f64 * delta);
        v.push(x);
        peak = peak.max(x.abs());
        if b.is_finite() && t + s as f64 * delta > b {
            break;
        }
        match tails.right {
            crate::kernels::Decay::Power { .. } => {
                if s - s_lo + 1 >= POWER_TERMS {
                    break;
                }
            }
            _ => {
                if x.abs() <= 1e-18 * peak {
                    quiet += 1;
                    if quiet >= 4 {
                        break;
                    }
                } else {
                    quiet = 0;
                }
                if v.len() > 1_000_000 {
                    break;
                }
            }
        }
        s += 1;
    }
    let last_main = s;
    for j in 1..=extra {
        v.push(kernel.eval(t + (s + j) as f64 * delta));
    }
    (s_lo, v, last_main)
}

/// Asymptotic variance of `(Q_n − E Q_n)/√n` for `Q_n = Σ b(t−s) X_{tΔ} X_{sΔ}`.
///
/// The value is computed from lattice sums of `φ` against `b` and from
/// `2‖(b ⋆ γ)(·Δ)‖²`. For finitely supported `b` the same quantity is also
/// computed as the `S_n` variance with `φ₂ = b ⋆ φ`, stored in
/// `eta2_via_bilinear`.
pub fn eta2_qn(kernel: &KernelRef, b: &CoefficientSeq, model: &LevyModel, delta: f64) -> Result<VarianceReport> {
    b.require_even()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::domain(format!("Δ must be > 0, got {delta}")));
    }
    let c = model.cumulants()?;
    let phi = kernel.as_ref();
    let power_phi = matches!(phi.tails().right, crate::kernels::Decay::Power { .. });

    // κ₄ term: G(t) = Σ_s φ(t+sΔ) Σ_u b(u) φ(t+(s+u)Δ)
    let mut diagnostics = Vec::new();
    let kappa4_term = if c.kappa4 == 0.0 {
        0.0
    } else {
        let k_b = b.radius().unwrap_or(0);
        let g_of = |t: f64, cap: Option<usize>| -> f64 {
            let (_, mut v, last_main) = lattice_vector(phi, t, delta, k_b);
            let n_main = v.len() - k_b as usize;
            let n_main = cap.map_or(n_main, |c| c.min(n_main));
            if cap.is_some() {
                v.truncate(n_main + k_b as usize);
            }
            let mut g = 0.0;
            for i in 0..n_main {
                if v[i] == 0.0 {
                    continue;
                }
                let mut w = 0.0;
                let (lo, hi) = match b.radius() {
                    Some(k) => ((i as i64 - k).max(0) as usize, (i + k as usize).min(v.len() - 1)),
                    None => (0, v.len() - 1),
                };
                for (j, vj) in v.iter().enumerate().take(hi + 1).skip(lo) {
                    w += b.get(j as i64 - i as i64) * vj;
                }
                g += v[i] * w;
            }
            if power_phi && b.radius().is_some() && cap.is_none() {
                // remaining s > S: midpoint integral of φ · (b ⋆ φ)
                let from = t + (last_main as f64 + 0.5) * delta;
                let f = |x: f64| {
                    let y = from + x;
                    let bs: f64 = (-k_b..=k_b).map(|u| b.get(u) * phi.eval(y + u as f64 * delta)).sum();
                    phi.eval(y) * bs
                };
                g += crate::quad::integrate_to_infinity(
                    &f,
                    0.0,
                    delta,
                    crate::quad::TailKind::Slow,
                    &|_, _| Vec::new(),
                    Tol { rel: 1e-12, ..Tol::default() },
                )
                .value
                    / delta;
            }
            g
        };
        let breaks = phase_breaks(&[phi], delta);
        let full = phase_integral(&|t| g_of(t, None).powi(2), delta, &breaks);
        if power_phi && b.radius().is_none() {
            let half = phase_integral(&|t| g_of(t, Some(POWER_TERMS as usize / 2)).powi(2), delta, &breaks);
            diagnostics.push(format!(
                "kappa4: power-law kernel and power-decay b truncated at {POWER_TERMS} lattice terms; halving changes the integral by {:.3e}",
                c.kappa4 * (full - half).abs()
            ));
        }
        c.kappa4 * full
    };

    // 2‖b ⋆ γ‖²
    let gamma = covariance_sequence(phi, phi, c.sigma2, delta, SeqOptions::default())?;
    let radius = match b.radius() {
        Some(k) => gamma.radius() + k,
        None => POWER_RADIUS,
    };
    let bg = b_star_gamma(b, &gamma, radius)?;
    let norm2 = bg.dot(&bg)?;
    let k4 = Term { name: "kappa4".into(), value: kappa4_term, radius: POWER_TERMS, tail_bound: 0.0 };
    let mut report = VarianceReport::assemble("qn", k4, vec![term("two_b_star_gamma_sq", norm2, 2.0)]);
    report.diagnostics.extend(diagnostics);

    if b.radius().is_some() {
        let phi2 = Arc::new(LagCombination::new(kernel.clone(), b.lag_terms().unwrap(), delta));
        let via = eta2_sn(phi, phi2.as_ref(), model, delta)?;
        report.eta2_via_bilinear = Some(via.eta2);
    } else {
        report
            .diagnostics
            .push("bilinear cross-check skipped: b ⋆ φ is not a finite lag combination".into());
    }
    Ok(report)
}

/// `E Q_n = n Σ_{|u|<n} (1 − |u|/n) b(u) γ(uΔ)` from a covariance sequence.
pub fn expected_qn(b: &CoefficientSeq, gamma: &TailedSequence, n: usize) -> Result<f64> {
    b.require_even()?;
    if n == 0 {
        return Err(Error::domain("n must be ≥ 1"));
    }
    let n_i = n as i64;
    let reach = match b.radius() {
        Some(k) => k.min(n_i - 1),
        None => n_i - 1,
    };
    let mut s = 0.0;
    for u in -reach..=reach {
        s += (1.0 - u.abs() as f64 / n as f64) * b.get(u) * gamma.get(u);
    }
    Ok(n as f64 * s)
}

/// `E Q_n` for a kernel, computing `γ` by quadrature.
pub fn expected_qn_for_kernel(
    b: &CoefficientSeq,
    kernel: &dyn Kernel,
    model: &LevyModel,
    delta: f64,
    n: usize,
) -> Result<f64> {
    let c = model.cumulants()?;
    let reach = b.radius().map_or(n as i64, |k| k.min(n as i64));
    let mut half = Vec::with_capacity(reach as usize + 1);
    for u in 0..=reach {
        half.push(crate::covariance::autocovariance(kernel, c.sigma2, u as f64 * delta).value);
    }
    let gamma = TailedSequence::even(&half, crate::norms::SeqTail::Zero);
    expected_qn(b, &gamma, n)
}

/// `E S_n = n γ₁₂(0)`.
pub fn expected_sn(k1: &dyn Kernel, k2: &dyn Kernel, model: &LevyModel, n: usize) -> Result<f64> {
    let c = model.cumulants()?;
    Ok(n as f64 * crate::covariance::crosscovariance(k1, k2, c.sigma2, 0.0).value)
}

/// Asymptotic covariance matrix of `√n(γ̂_n(j) − γ(jΔ))_{j=1..m}`:
/// `κ₄ ∫₀^Δ K(t)K(t)ᵀ dt + Σ_s (γ_s + γ_{−s}) γ_sᵀ` with
/// `γ_s = (γ((s+j)Δ))_j` and `K_j(t) = Σ_s φ(t+sΔ) φ(t+(s+j)Δ)`.
pub fn autocov_clt_sigma(kernel: &dyn Kernel, model: &LevyModel, delta: f64, m: usize) -> Result<Vec<Vec<f64>>> {
    if m == 0 {
        return Err(Error::domain("need at least one lag"));
    }
    let c = model.cumulants()?;
    let gamma = covariance_sequence(kernel, kernel, c.sigma2, delta, SeqOptions::default())?;
    let mut sigma = vec![vec![0.0; m]; m];
    // Σ_s γ((s+j)Δ) γ((s+k)Δ) + Σ_s γ((j−s)Δ) γ((s+k)Δ)
    for j in 1..=m as i64 {
        for k in j..=m as i64 {
            let a = gamma.shifted(j).dot(&gamma.shifted(k))?.value;
            let b = gamma.reversed().shifted(-j).dot(&gamma.shifted(k))?.value;
            sigma[(j - 1) as usize][(k - 1) as usize] = a + b;
        }
    }
    if c.kappa4 != 0.0 {
        let support = kernel.support();
        let base = kernel.tails();
        let shifted_tails = |_: i64| -> Tails { base.product(&base) };
        let breaks = phase_breaks(&[kernel], delta);
        let kj = |j: i64, t: f64| -> f64 {
            let f = |x: f64| kernel.eval(x) * kernel.eval(x + j as f64 * delta);
            lattice_sum(&f, t, delta, support, shifted_tails(j), POWER_TERMS).value
        };
        for j in 1..=m as i64 {
            for k in j..=m as i64 {
                let v = phase_integral(&|t| kj(j, t) * kj(k, t), delta, &breaks);
                sigma[(j - 1) as usize][(k - 1) as usize] += c.kappa4 * v;
            }
        }
    }
    for j in 0..m {
        for k in 0..j {
            sigma[j][k] = sigma[k][j];
        }
    }
    Ok(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExponentialOu, FractionalNoise};

    fn ou() -> KernelRef {
        Arc::new(ExponentialOu::new(1.0).unwrap())
    }

    const BM2: LevyModel = LevyModel::BrownianMotion { variance: 2.0 };
    const CPN: LevyModel = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 };

    fn geometric() -> f64 {
        let e2 = (-2f64).exp();
        2.0 * (1.0 + e2) / (1.0 - e2)
    }

    #[test]
    fn ou_brownian_sn() {
        let r = eta2_sn(ou().as_ref(), ou().as_ref(), &BM2, 1.0).unwrap();
        assert_eq!(r.kappa4_term, 0.0);
        assert!((r.eta2 - 2.626071).abs() < 1e-6);
        assert!((r.eta2 - geometric()).abs() < 1e-12 * geometric());
        let sum: f64 = r.kappa4_term + r.covariance_terms.iter().map(|t| t.value).sum::<f64>();
        assert_eq!(sum, r.eta2);
    }

    #[test]
    fn ou_compound_poisson_kappa4_term() {
        let r = eta2_sn(ou().as_ref(), ou().as_ref(), &CPN, 1.0).unwrap();
        // κ₄ ∫₀¹ e^{−4t} dt / (1 − e^{−2})²
        let e2 = (-2f64).exp();
        let want = 3.0 * (1.0 - (-4f64).exp()) / 4.0 / (1.0 - e2).powi(2);
        assert!((want - 0.984776).abs() < 1e-6);
        assert!((r.kappa4_term - want).abs() < 1e-12, "{} vs {want}", r.kappa4_term);
        // σ² = 1 here, so the covariance part is a quarter of the Brownian(2) one
        assert!((r.eta2 - want - geometric() / 4.0).abs() < 1e-12);
    }

    #[test]
    fn qn_with_delta0_matches_sn() {
        let b = CoefficientSeq::delta0();
        for model in [BM2, CPN] {
            let q = eta2_qn(&ou(), &b, &model, 1.0).unwrap();
            let s = eta2_sn(ou().as_ref(), ou().as_ref(), &model, 1.0).unwrap();
            assert!((q.eta2 - s.eta2).abs() < 1e-12 * s.eta2);
            assert!((q.eta2_via_bilinear.unwrap() - s.eta2).abs() < 1e-12 * s.eta2);
        }
    }

    #[test]
    fn qn_direct_and_bilinear_agree() {
        let b = CoefficientSeq::symmetric(&[0.0, 1.0, 0.5]);
        for model in [BM2, CPN] {
            let q = eta2_qn(&ou(), &b, &model, 1.0).unwrap();
            let via = q.eta2_via_bilinear.unwrap();
            assert!((q.eta2 - via).abs() < 1e-10 * q.eta2, "{} vs {via}", q.eta2);
        }
    }

    #[test]
    fn non_even_b_refused() {
        let b = CoefficientSeq::FiniteSupport { values: vec![1.0, 0.0, 0.5] };
        assert!(matches!(eta2_qn(&ou(), &b, &BM2, 1.0), Err(Error::NotEven)));
    }

    #[test]
    fn sn_is_symmetric_and_shift_invariant() {
        let f: KernelRef = Arc::new(FractionalNoise::new(0.1).unwrap());
        let a = eta2_sn(ou().as_ref(), f.as_ref(), &CPN, 1.0).unwrap();
        let b = eta2_sn(f.as_ref(), ou().as_ref(), &CPN, 1.0).unwrap();
        assert!((a.eta2 - b.eta2).abs() < 1e-9 * a.eta2);
        let s1 = crate::kernels::Shifted { base: ou(), shift: 0.37 };
        let s2 = crate::kernels::Shifted { base: f.clone(), shift: 0.37 };
        let c = eta2_sn(&s1, &s2, &CPN, 1.0).unwrap();
        assert!((a.eta2 - c.eta2).abs() < 1e-8 * a.eta2, "{} vs {}", a.eta2, c.eta2);
    }

    #[test]
    fn expected_values() {
        let g = TailedSequence::even(&[2.0, 0.5, 0.1], crate::norms::SeqTail::Zero);
        assert_eq!(expected_qn(&CoefficientSeq::delta0(), &g, 7).unwrap(), 14.0);
        let c = 0.3;
        let b = CoefficientSeq::symmetric(&[1.0, c]);
        let want = 2.0 * 2.0 + 2.0 * c * 0.5;
        assert!((expected_qn(&b, &g, 2).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn sigma_matches_bilinear_variance() {
        // Σ_jj is the S_n variance with φ₂ = φ(· + jΔ)
        for model in [BM2, CPN] {
            let s = autocov_clt_sigma(ou().as_ref(), &model, 1.0, 2).unwrap();
            assert_eq!(s[0][1], s[1][0]);
            for j in 1..=2i64 {
                let lag = LagCombination::new(ou(), vec![(-j, 1.0)], 1.0);
                let v = eta2_sn(ou().as_ref(), &lag, &model, 1.0).unwrap().eta2;
                let d = s[(j - 1) as usize][(j - 1) as usize];
                assert!((d - v).abs() < 1e-10 * v, "j={j}: {d} vs {v}");
            }
        }
    }
}
