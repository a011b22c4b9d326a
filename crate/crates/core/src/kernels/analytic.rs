use statrs::function::gamma::gamma;

use super::{fmt_f64, Decay, Kernel, Tails};
use crate::error::{Error, Result};

/// `φ(t) = e^{-λt} 1_{[0,∞)}(t)`.
#[derive(Clone, Debug)]
pub struct ExponentialOu {
    pub lambda: f64,
}

impl ExponentialOu {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::domain(format!("OU rate must be > 0, got {lambda}")));
        }
        Ok(ExponentialOu { lambda })
    }
}

impl Kernel for ExponentialOu {
    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            0.0
        } else {
            (-self.lambda * t).exp()
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
        if lo < 0.0 && 0.0 < hi {
            vec![0.0]
        } else {
            Vec::new()
        }
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn tails(&self) -> Tails {
        Tails::causal(Decay::Exponential { rate: self.lambda }, true)
    }

    fn describe(&self) -> String {
        format!("ou:{}", fmt_f64(self.lambda))
    }
}

/// `φ(t) = [t₊^d - (t-1)₊^d] / Γ(1+d)`, `0 < d < 1/4`.
#[derive(Clone, Debug)]
pub struct FractionalNoise {
    pub d: f64,
    norm: f64,
}

impl FractionalNoise {
    pub fn new(d: f64) -> Result<Self> {
        if !(d > 0.0 && d < 0.25) {
            return Err(Error::domain(format!("fractional parameter d must lie in (0, 1/4), got {d}")));
        }
        Ok(FractionalNoise { d, norm: gamma(1.0 + d) })
    }

    /// Constant `C` in `φ(t) ~ C t^{d-1}`.
    pub fn tail_constant(&self) -> f64 {
        self.d / self.norm
    }
}

impl Kernel for FractionalNoise {
    fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else if t <= 1.0 {
            t.powf(self.d) / self.norm
        } else if t <= 2.0 {
            (t.powf(self.d) - (t - 1.0).powf(self.d)) / self.norm
        } else {
            // t^d (1 - (1 - 1/t)^d) without cancellation
            -t.powf(self.d) * (self.d * (-1.0 / t).ln_1p()).exp_m1() / self.norm
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        [0.0, 1.0].into_iter().filter(|&x| lo < x && x < hi).collect()
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (0.0, 1.0)
    }

    fn tails(&self) -> Tails {
        Tails::causal(Decay::Power { exponent: 1.0 - self.d }, true)
    }

    fn describe(&self) -> String {
        format!("fractional:{}", fmt_f64(self.d))
    }
}

/// `1_{[start, end)}(t)`.
#[derive(Clone, Debug)]
pub struct Indicator {
    pub start: f64,
    pub end: f64,
}

impl Indicator {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && start < end) {
            return Err(Error::domain(format!("indicator needs start < end, got [{start}, {end})")));
        }
        Ok(Indicator { start, end })
    }
}

impl Kernel for Indicator {
    fn eval(&self, t: f64) -> f64 {
        if t >= self.start && t < self.end {
            1.0
        } else {
            0.0
        }
    }

    fn eval_left(&self, t: f64) -> f64 {
        if t > self.start && t <= self.end {
            1.0
        } else {
            0.0
        }
    }

    fn support(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        [self.start, self.end].into_iter().filter(|&x| lo < x && x < hi).collect()
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (self.start, self.end)
    }

    fn tails(&self) -> Tails {
        Tails {
            left: Decay::Compact,
            right: Decay::Compact,
            exact: true,
        }
    }

    fn describe(&self) -> String {
        format!("indicator:{}:{}", fmt_f64(self.start), fmt_f64(self.end))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractional_values() {
        let k = FractionalNoise::new(0.1).unwrap();
        assert_eq!(k.eval(-0.5), 0.0);
        // Γ(1.1) = 0.951350769866873 from standard tables
        let want = 0.5f64.powf(0.1) / 0.951_350_769_866_873;
        assert!((k.eval(0.5) - want).abs() < 1e-12);
        // continuous at 1 with a cusp of order ε^d
        let eps: f64 = 1e-12;
        let jump = (k.eval(1.0 - eps) - k.eval(1.0 + eps)).abs();
        assert!(jump <= 1.01 * eps.powf(0.1) / 0.951_350_769_866_873, "{jump}");
    }

    #[test]
    fn fractional_asymptotic_ratio() {
        let k = FractionalNoise::new(0.1).unwrap();
        let t: f64 = 1e3;
        let ratio = k.eval(t) / (k.tail_constant() * t.powf(0.1 - 1.0));
        assert!((ratio - 1.0).abs() < 1e-2, "{ratio}");
        // stable far out where naive differencing would cancel
        let t: f64 = 1e12;
        let ratio = k.eval(t) / (k.tail_constant() * t.powf(-0.9));
        assert!((ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ou_values() {
        let k = ExponentialOu::new(1.0).unwrap();
        assert!((k.eval(1.0) - 0.367879441171).abs() < 1e-12);
        assert_eq!(k.eval(-1e-9), 0.0);
        assert_eq!(k.eval_left(0.0), 0.0);
        assert_eq!(k.eval(0.0), 1.0);
        assert!(ExponentialOu::new(0.0).is_err());
    }

    #[test]
    fn domain_errors() {
        assert!(FractionalNoise::new(0.25).is_err());
        assert!(FractionalNoise::new(0.0).is_err());
        assert!(Indicator::new(1.0, 1.0).is_err());
    }
}
