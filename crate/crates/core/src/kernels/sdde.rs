use serde::{Deserialize, Serialize};

use super::{fmt_f64, merge_breaks, Decay, Kernel, Tails};
use crate::error::{Error, Result};

/// Atom `weight · δ_location` of the delay measure `η`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SddeAtom {
    pub location: f64,
    pub weight: f64,
}

/// Kernel of the stationary solution of `dX_t = ∫ X_{t-s} η(ds) dt + dL_t`,
/// i.e. the solution of `φ(t) = 1 + ∫_0^t ∫ φ(s-u) η(du) ds`, `φ = 0` on
/// `(-∞, 0)`.
///
/// The Volterra equation is stepped with the trapezoid rule on `[0, T]`
/// (implicit in the zero-delay atom). Between nodes the kernel is linearly
/// interpolated; beyond `T` it continues with an exponential envelope fitted
/// to the last half of the solution.
#[derive(Clone, Debug)]
pub struct Sdde {
    atoms: Vec<SddeAtom>,
    step: f64,
    values: Vec<f64>,
    tail_rate: f64,
}

fn h(atoms: &[SddeAtom], re: f64, im: f64) -> (f64, f64) {
    let mut a = re;
    let mut b = im;
    for at in atoms {
        let m = at.weight * (re * at.location).exp();
        let ph = im * at.location;
        a += m * ph.cos();
        b += m * ph.sin();
    }
    (a, b)
}

/// Number of zeros of `z + Σ w_i e^{z τ_i}` with `Re z ≤ 0`, counting a zero
/// on the imaginary axis as present.
///
/// In the closed left half-plane `|h(z)| ≥ |z| - Σ|w_i|`, so every such zero
/// lies in the half-disk of radius `R = Σ|w_i| + 1`. The imaginary-axis
/// segment is scanned for near-zeros and the winding number of `h` along
/// the half-disk boundary counts the zeros inside.
pub fn characteristic_roots_in_left_half_plane(atoms: &[SddeAtom]) -> usize {
    let w: f64 = atoms.iter().map(|a| a.weight.abs()).sum();
    let r = w + 1.0;
    let tau_max = atoms.iter().map(|a| a.location).fold(0.0, f64::max);
    let dy = (r / 4000.0).min(0.05 / (1.0 + tau_max));
    let steps = (2.0 * r / dy).ceil() as usize;
    let scale = 1.0 + w;

    // boundary zeros on the imaginary axis
    let modulus = |y: f64| {
        let (a, b) = h(atoms, 0.0, y);
        a.hypot(b)
    };
    let ys: Vec<f64> = (0..=steps).map(|k| -r + 2.0 * r * k as f64 / steps as f64).collect();
    let ms: Vec<f64> = ys.iter().map(|&y| modulus(y)).collect();
    for k in 0..ms.len() {
        let local_min = (k == 0 || ms[k] <= ms[k - 1]) && (k + 1 == ms.len() || ms[k] <= ms[k + 1]);
        if !local_min {
            continue;
        }
        // golden-section refinement on the bracketing cells
        let (mut lo, mut hi) = (ys[k.saturating_sub(1)], ys[(k + 1).min(ys.len() - 1)]);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let x1 = hi - g * (hi - lo);
            let x2 = lo + g * (hi - lo);
            if modulus(x1) < modulus(x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        if modulus(0.5 * (lo + hi)) <= 1e-9 * scale {
            return 1;
        }
    }

    // winding number along the boundary of the half-disk, counter-clockwise
    let point = |s: f64| -> (f64, f64) {
        // s ∈ [0, 1]: imaginary axis from -iR to iR; s ∈ [1, 2]: arc through -R
        if s <= 1.0 {
            (0.0, -r + 2.0 * r * s)
        } else {
            let th = std::f64::consts::FRAC_PI_2 + std::f64::consts::PI * (s - 1.0);
            (r * th.cos(), r * th.sin())
        }
    };
    let arg = |s: f64| {
        let (x, y) = point(s);
        let (a, b) = h(atoms, x, y);
        b.atan2(a)
    };
    let mut total = 0.0;
    let mut s = 0.0;
    let mut cur = arg(s);
    let mut ds = 1e-3;
    while s < 2.0 {
        let next_s = (s + ds).min(2.0);
        let next = arg(next_s);
        let mut d = next - cur;
        while d > std::f64::consts::PI {
            d -= 2.0 * std::f64::consts::PI;
        }
        while d < -std::f64::consts::PI {
            d += 2.0 * std::f64::consts::PI;
        }
        if d.abs() > 0.5 && ds > 1e-12 {
            ds *= 0.5;
            continue;
        }
        total += d;
        s = next_s;
        cur = next;
        if d.abs() < 0.1 {
            ds = (ds * 1.5).min(1e-2);
        }
    }
    (total / (2.0 * std::f64::consts::PI)).round().max(0.0) as usize
}

fn lattice_index(x: f64, step: f64, what: &str) -> Result<usize> {
    let k = (x / step).round();
    if (k * step - x).abs() > 1e-9 * x.abs().max(step) {
        return Err(Error::grid(format!("{what} {x} is not a multiple of the step {step}")));
    }
    Ok(k as usize)
}

impl Sdde {
    pub fn solve(atoms: &[SddeAtom], horizon: f64, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0 && horizon.is_finite() && horizon > step) {
            return Err(Error::domain(format!("need 0 < step < horizon, got step {step}, horizon {horizon}")));
        }
        for a in atoms {
            if !(a.location.is_finite() && a.location >= 0.0 && a.weight.is_finite()) {
                return Err(Error::domain(format!("invalid delay atom {a:?}")));
            }
        }
        let roots = characteristic_roots_in_left_half_plane(atoms);
        if roots > 0 {
            return Err(Error::NonStationary(format!(
                "z + Σ w e^(zτ) has {roots} zero(s) with Re z ≤ 0"
            )));
        }
        let n = lattice_index(horizon, step, "horizon")?;
        let lags: Vec<(usize, f64)> = atoms
            .iter()
            .map(|a| Ok((lattice_index(a.location, step, "delay")?, a.weight)))
            .collect::<Result<_>>()?;
        let w0: f64 = lags.iter().filter(|l| l.0 == 0).map(|l| l.1).sum();
        let denom = 1.0 - 0.5 * step * w0;
        if denom.abs() < 1e-12 {
            return Err(Error::domain("step too coarse for the zero-delay atom"));
        }

        let mut phi = vec![0.0; n + 1];
        phi[0] = 1.0;
        for k in 0..n {
            // right limit of the integrand at kδ, left limit at (k+1)δ
            let mut f_right = 0.0;
            let mut f_left = 0.0;
            for &(j, w) in &lags {
                if k >= j {
                    f_right += w * phi[k - j];
                }
                if j >= 1 && k + 1 > j {
                    f_left += w * phi[k + 1 - j];
                }
            }
            phi[k + 1] = (phi[k] + 0.5 * step * (f_right + f_left)) / denom;
        }

        let q = n / 4;
        let env = |a: usize, b: usize| phi[a..=b].iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let m1 = env(n / 2, n / 2 + q);
        let m2 = env(n / 2 + q, n);
        let tail_rate = if m2 == 0.0 {
            f64::INFINITY
        } else {
            (m1 / m2).ln() / (q as f64 * step)
        };
        if !(tail_rate > 0.0) {
            return Err(Error::domain(format!(
                "solution shows no decay on [0, {horizon}]; increase the horizon"
            )));
        }
        Ok(Sdde {
            atoms: atoms.to_vec(),
            step,
            values: phi,
            tail_rate,
        })
    }

    pub fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Solution values at the nodes `kδ`, `k = 0..=T/δ`.
    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }
}

impl Kernel for Sdde {
    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let n = self.values.len() - 1;
        let x = t / self.step;
        if x >= n as f64 {
            if self.tail_rate.is_infinite() {
                return 0.0;
            }
            return self.values[n] * (-self.tail_rate * (t - self.horizon())).exp();
        }
        let kr = x.round();
        if (x - kr).abs() < 1e-9 {
            return self.values[kr as usize];
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        {
            self.values[k] * (1.0 - f) + self.values[k + 1] * f
        }
    }

    fn eval_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.eval(t)
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let t = self.horizon();
        let a = (lo.max(0.0) / self.step).floor().max(0.0) as usize;
        let b = ((hi.min(t)) / self.step).ceil().max(0.0) as usize;
        let mut out: Vec<f64> = (a..=b)
            .map(|k| k as f64 * self.step)
            .filter(|&x| lo < x && x < hi && x <= t)
            .collect();
        if lo < 0.0 && 0.0 < hi {
            out.push(0.0);
        }
        merge_breaks(out)
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (0.0, self.horizon())
    }

    fn tails(&self) -> Tails {
        let right = if self.tail_rate.is_infinite() {
            Decay::Compact
        } else {
            Decay::Exponential { rate: self.tail_rate }
        };
        Tails::causal(right, false)
    }

    fn describe(&self) -> String {
        let atoms: Vec<String> = self
            .atoms
            .iter()
            .map(|a| format!("{}@{}", fmt_f64(a.weight), fmt_f64(a.location)))
            .collect();
        format!("sdde:{}:{}:{}", atoms.join(","), fmt_f64(self.horizon()), fmt_f64(self.step))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(location: f64, weight: f64) -> SddeAtom {
        SddeAtom { location, weight }
    }

    fn max_err_vs_exp(k: &Sdde) -> f64 {
        k.node_values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - (-(i as f64) * k.step()).exp()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ou_reduction_second_order() {
        let k = Sdde::solve(&[atom(0.0, -1.0)], 10.0, 1e-3).unwrap();
        assert_eq!(k.eval(0.0), 1.0);
        let e1 = max_err_vs_exp(&k);
        assert!(e1 < 1e-4, "{e1}");
        let k2 = Sdde::solve(&[atom(0.0, -1.0)], 10.0, 5e-4).unwrap();
        let e2 = max_err_vs_exp(&k2);
        assert!(e1 / e2 >= 3.0, "ratio {}", e1 / e2);
        assert!((k.tail_rate() - 1.0).abs() < 1e-2);
        // exponential continuation beyond the horizon
        assert!((k.eval(12.0) - (-12.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn delayed_equation_matches_method_of_steps() {
        // φ' = -φ(t - 1) on [0, 1] is φ = 1 and on [1, 2] φ = 1 - (t - 1)
        let k = Sdde::solve(&[atom(1.0, -1.0), atom(0.0, -0.5)], 40.0, 1e-3);
        assert!(k.is_ok(), "{k:?}");
        let k = Sdde::solve(&[atom(1.0, -0.5)], 60.0, 1e-3).unwrap();
        for &t in &[0.25, 0.5, 1.0] {
            assert!((k.eval(t) - 1.0).abs() < 1e-12);
        }
        for &t in &[1.5, 2.0] {
            assert!((k.eval(t) - (1.0 - 0.5 * (t - 1.0))).abs() < 1e-9, "{t}: {}", k.eval(t));
        }
    }

    #[test]
    fn nonstationary_inputs_rejected() {
        assert!(matches!(Sdde::solve(&[atom(0.0, 0.0)], 10.0, 1e-2), Err(Error::NonStationary(_))));
        assert!(matches!(Sdde::solve(&[atom(0.0, 1.0)], 10.0, 1e-2), Err(Error::NonStationary(_))));
        assert!(matches!(Sdde::solve(&[], 10.0, 1e-2), Err(Error::NonStationary(_))));
        // strong delayed feedback gives oscillatory instability: τ w > π/2
        assert!(matches!(Sdde::solve(&[atom(1.0, -2.0)], 10.0, 1e-2), Err(Error::NonStationary(_))));
    }

    #[test]
    fn root_counts() {
        assert_eq!(characteristic_roots_in_left_half_plane(&[atom(0.0, -1.0)]), 0);
        assert_eq!(characteristic_roots_in_left_half_plane(&[atom(0.0, 1.0)]), 1);
        assert_eq!(characteristic_roots_in_left_half_plane(&[atom(1.0, -1.0)]), 0);
        assert!(characteristic_roots_in_left_half_plane(&[atom(1.0, -2.0)]) >= 1);
    }

    #[test]
    fn off_grid_delay_is_grid_error() {
        assert!(matches!(Sdde::solve(&[atom(0.3333, -1.0)], 10.0, 0.01), Err(Error::Grid(_))));
    }
}
