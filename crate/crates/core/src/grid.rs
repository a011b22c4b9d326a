//! Uniform fine-grid sampling of kernels.
//!
//! A [`KernelGrid`] holds `φ` on `kδ`, `|k| ≤ T/δ`, with `δ = Δ/m`, both as
//! right-continuous values and as left limits so that jump kernels integrate
//! correctly by the trapezoid rule. The right tail is summarized by a power
//! law fitted on the last decade of the window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, Tabulated};
use crate::levy::LevyModel;
use crate::quad::richardson_trapezoid;

/// Default number of fine steps per sampling interval.
pub const DEFAULT_M: usize = 64;
/// Default half-width of the window in units of `Δ`.
pub const DEFAULT_WINDOW: usize = 64;

/// Power law `C t^{-ρ}` fitted to `|φ|` on `[T/10, T]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub exponent: f64,
    pub constant: f64,
    /// Largest `|log|φ| - log(C t^{-ρ})|` over the fitted range.
    pub residual: f64,
    /// Least-squares slope of `log|φ|` against `t` on the same range.
    pub log_linear_slope: f64,
    pub from: f64,
    pub to: f64,
}

#[derive(Clone, Debug)]
pub struct KernelGrid {
    delta: f64,
    m: usize,
    half: usize,
    right: Vec<f64>,
    left: Vec<f64>,
    tail: Option<TailFit>,
}

fn is_multiple(x: f64, unit: f64) -> Option<usize> {
    let k = (x / unit).round();
    if k >= 1.0 && (k * unit - x).abs() <= 1e-9 * unit.max(x.abs()) {
        Some(k as usize)
    } else {
        None
    }
}

fn fit_tail(ts: &[f64], vs: &[f64]) -> Option<TailFit> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(vs)
        .filter(|(t, v)| **t > 0.0 && v.abs() > 0.0 && v.is_finite())
        .map(|(t, v)| (*t, v.abs().ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let line = |xs: &dyn Fn(f64) -> f64| -> (f64, f64) {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| xs(p.0)).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (xs(p.0) - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (xs(p.0) - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        (slope, my - slope * mx)
    };
    let (slope, icept) = line(&|t: f64| t.ln());
    let (lin_slope, _) = line(&|t: f64| t);
    let residual = pts
        .iter()
        .map(|p| (p.1 - (icept + slope * p.0.ln())).abs())
        .fold(0.0, f64::max);
    Some(TailFit {
        exponent: -slope,
        constant: icept.exp(),
        residual,
        log_linear_slope: lin_slope,
        from: pts[0].0,
        to: pts[pts.len() - 1].0,
    })
}

/// Samples `kernel` on step `Δ/m` over `[-T, T]`.
pub fn grid_sample(kernel: &dyn Kernel, delta: f64, m: usize, t: f64) -> Result<KernelGrid> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::domain(format!("sampling interval must be > 0, got {delta}")));
    }
    if m == 0 {
        return Err(Error::grid("need m ≥ 1 fine steps per sampling interval"));
    }
    let blocks = is_multiple(t, delta)
        .ok_or_else(|| Error::grid(format!("window half-width {t} is not a positive multiple of Δ = {delta}")))?;
    let half = blocks * m;
    let step = delta / m as f64;
    let node = |i: usize| (i as f64 - half as f64) * step;
    let right: Vec<f64> = (0..=2 * half).map(|i| kernel.eval(node(i))).collect();
    let left: Vec<f64> = (0..=2 * half).map(|i| kernel.eval_left(node(i))).collect();

    // last decade of the right half of the window
    let from = half + (half / 10).max(1);
    let ts: Vec<f64> = (from..=2 * half).map(node).collect();
    let tail = fit_tail(&ts, &right[from..]);
    Ok(KernelGrid {
        delta,
        m,
        half,
        right,
        left,
        tail,
    })
}

impl KernelGrid {
    /// Grid from precomputed node values on `[-half·δ, half·δ]`.
    pub(crate) fn from_values(delta: f64, m: usize, right: Vec<f64>, left: Vec<f64>) -> Result<Self> {
        if right.len() != left.len() || right.len().is_multiple_of(2) {
            return Err(Error::grid("grid values must have equal odd length"));
        }
        let half = right.len() / 2;
        let step = delta / m as f64;
        let from = half + (half / 10).max(1);
        let ts: Vec<f64> = (from..=2 * half).map(|i| (i as f64 - half as f64) * step).collect();
        let tail = fit_tail(&ts, &right[from..]);
        Ok(KernelGrid { delta, m, half, right, left, tail })
    }
}

/// [`grid_sample`] with `m = 64` and `T = 64Δ`.
pub fn grid_sample_default(kernel: &dyn Kernel, delta: f64) -> Result<KernelGrid> {
    grid_sample(kernel, delta, DEFAULT_M, DEFAULT_WINDOW as f64 * delta)
}

impl KernelGrid {
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        self.delta / self.m as f64
    }

    /// Half-width `T` of the window.
    pub fn window(&self) -> f64 {
        self.half as f64 * self.step()
    }

    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }

    /// Node `t_i = -T + iδ`.
    pub fn time(&self, i: usize) -> f64 {
        (i as f64 - self.half as f64) * self.step()
    }

    /// Index of node `t = kδ`.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let i = k + self.half as i64;
        (i >= 0 && (i as usize) < self.right.len()).then_some(i as usize)
    }

    /// Right-continuous values at the nodes.
    pub fn values(&self) -> &[f64] {
        &self.right
    }

    /// Left limits at the nodes.
    pub fn left_values(&self) -> &[f64] {
        &self.left
    }

    pub fn tail(&self) -> Option<TailFit> {
        self.tail
    }

    /// Value at node `kδ`, continued by the fitted power tail beyond `T`
    /// and by zero before `-T`.
    pub fn value_ext(&self, k: i64) -> f64 {
        match self.index_of(k) {
            Some(i) => self.right[i],
            None if k < 0 => 0.0,
            None => match self.tail {
                Some(f) if *self.right.last().unwrap() != 0.0 => {
                    let sign = self.right.last().unwrap().signum();
                    sign * f.constant * (k as f64 * self.step()).powf(-f.exponent)
                }
                _ => 0.0,
            },
        }
    }

    /// Squared `L²` norm by trapezoid on the window.
    pub fn l2_norm_sq(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
        richardson_trapezoid(&sq(&self.left), &sq(&self.right), self.step())
    }

    /// `∫_{|t|>T} φ²` estimated from the tail fit, zero if the window ends
    /// in zeros.
    pub fn l2_mass_outside(&self) -> f64 {
        let last = *self.right.last().unwrap();
        if last == 0.0 {
            return 0.0;
        }
        match self.tail {
            Some(f) if 2.0 * f.exponent > 1.0 => {
                let t = self.window();
                f.constant * f.constant * t.powf(1.0 - 2.0 * f.exponent) / (2.0 * f.exponent - 1.0)
            }
            _ => f64::INFINITY,
        }
    }

    /// The grid as a tabulated kernel starting at `-T`. Its tail exponent is
    /// the fitted one and marked as declared.
    pub fn to_tabulated(&self) -> Result<Tabulated> {
        let tail = self.tail.map(|f| f.exponent).filter(|e| *e > 0.5);
        Tabulated::new(-self.window(), self.step(), self.right.clone(), tail)
    }

    fn same_layout(&self, other: &KernelGrid) -> Result<()> {
        if self.right.len() != other.right.len() || (self.step() - other.step()).abs() > 1e-15 * self.step() {
            return Err(Error::grid(format!(
                "grids differ: {} nodes at step {} vs {} nodes at step {}",
                self.right.len(),
                self.step(),
                other.right.len(),
                other.step()
            )));
        }
        Ok(())
    }
}

/// `∫ g₁g₂g₃g₄` and the three pair products, combined as
/// `κ₄ ∫∏g_j + σ⁴ Σ_pairings ∫g_ag_b ∫g_cg_d`.
pub fn fourth_moment(g: [&KernelGrid; 4], model: &LevyModel) -> Result<f64> {
    for k in 1..4 {
        g[0].same_layout(g[k])?;
    }
    let c = model.cumulants()?;
    let h = g[0].step();
    let prod = |idx: &[usize]| -> f64 {
        let n = g[0].len();
        let mut l = vec![1.0; n];
        let mut r = vec![1.0; n];
        for &j in idx {
            for i in 0..n {
                l[i] *= g[j].left[i];
                r[i] *= g[j].right[i];
            }
        }
        richardson_trapezoid(&l, &r, h)
    };
    let all = prod(&[0, 1, 2, 3]);
    let pairs = prod(&[0, 1]) * prod(&[2, 3]) + prod(&[0, 2]) * prod(&[1, 3]) + prod(&[0, 3]) * prod(&[1, 2]);
    Ok(c.kappa4 * all + c.sigma2 * c.sigma2 * pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExponentialOu, FractionalNoise, Indicator};

    #[test]
    fn ou_unit_grid() {
        let k = ExponentialOu::new(1.0).unwrap();
        let g = grid_sample(&k, 1.0, 1, 3.0).unwrap();
        let want = [0.0, 0.0, 0.0, 1.0, (-1f64).exp(), (-2f64).exp(), (-3f64).exp()];
        assert_eq!(g.values(), &want);
        assert_eq!(g.left_values()[3], 0.0);
        assert!(matches!(grid_sample(&k, 1.0, 1, 2.5), Err(Error::Grid(_))));
        assert!(matches!(grid_sample(&k, 1.0, 0, 3.0), Err(Error::Grid(_))));
    }

    #[test]
    fn fractional_tail_fit() {
        let k = FractionalNoise::new(0.1).unwrap();
        let g = grid_sample_default(&k, 1.0).unwrap();
        let f = g.tail().unwrap();
        assert!((f.exponent - 0.9).abs() < 0.05, "{f:?}");
        // |φ| ≤ C t^{-ρ} e^{residual} on the fitted range
        for i in 0..g.len() {
            let t = g.time(i);
            if t >= f.from {
                assert!(g.values()[i] <= f.constant * t.powf(-f.exponent) * f.residual.exp() * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn carma_tail_is_log_linear() {
        let k = crate::kernels::Carma::new(&[3.0, 2.0], &[3.0, 1.0], 1).unwrap();
        let g = grid_sample(&k, 0.5, 8, 16.0).unwrap();
        let f = g.tail().unwrap();
        assert!(f.log_linear_slope < 0.0);
        assert!((f.log_linear_slope + 1.0).abs() < 0.01, "{f:?}");
    }

    #[test]
    fn tabulated_round_trip() {
        let k = FractionalNoise::new(0.1).unwrap();
        let g = grid_sample(&k, 1.0, 8, 16.0).unwrap();
        let tab = g.to_tabulated().unwrap();
        let back = grid_sample(&tab, 1.0, 8, 16.0).unwrap();
        assert_eq!(back.values(), g.values());
    }

    #[test]
    fn isserlis_and_disjoint_supports() {
        let a = grid_sample(&Indicator::new(0.0, 1.0).unwrap(), 1.0, 64, 4.0).unwrap();
        let b = grid_sample(&Indicator::new(2.0, 3.0).unwrap(), 1.0, 64, 4.0).unwrap();
        let bm = LevyModel::BrownianMotion { variance: 1.0 };
        let cp = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 };
        assert!((fourth_moment([&a, &a, &a, &a], &bm).unwrap() - 3.0).abs() < 1e-12);
        assert!((fourth_moment([&a, &a, &a, &a], &cp).unwrap() - 6.0).abs() < 1e-12);
        assert!((fourth_moment([&a, &b, &a, &b], &bm).unwrap() - 1.0).abs() < 1e-12);
        let other = grid_sample(&Indicator::new(0.0, 1.0).unwrap(), 1.0, 32, 4.0).unwrap();
        assert!(matches!(fourth_moment([&a, &a, &a, &other], &bm), Err(Error::Grid(_))));
    }
}
