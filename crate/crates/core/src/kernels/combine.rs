use super::{merge_breaks, Decay, KernelRef, Kernel, Tails};

/// `t ↦ Σ_j w_j φ(t - l_j Δ)`, optionally with `|w_j| |φ|` in place of
/// `w_j φ`. With `l_j = u`, `w_j = b(u)` this is the star convolution
/// `(b ⋆ φ)(t)` for finitely supported `b`.
#[derive(Clone, Debug)]
pub struct LagCombination {
    base: KernelRef,
    terms: Vec<(i64, f64)>,
    spacing: f64,
    abs: bool,
}

impl LagCombination {
    pub fn new(base: KernelRef, terms: Vec<(i64, f64)>, spacing: f64) -> Self {
        let terms = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        LagCombination { base, terms, spacing, abs: false }
    }

    /// The companion `Σ |w_j| |φ(t - l_j Δ)|`.
    pub fn absolute(base: KernelRef, terms: Vec<(i64, f64)>, spacing: f64) -> Self {
        let mut k = Self::new(base, terms, spacing);
        k.abs = true;
        k
    }

    pub fn terms(&self) -> &[(i64, f64)] {
        &self.terms
    }

    pub fn base(&self) -> &KernelRef {
        &self.base
    }

    fn combine(&self, f: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for &(l, w) in &self.terms {
            let v = f(l as f64 * self.spacing);
            s += if self.abs { w.abs() * v.abs() } else { w * v };
        }
        s
    }
}

impl Kernel for LagCombination {
    fn eval(&self, t: f64) -> f64 {
        self.combine(|shift| self.base.eval(t - shift))
    }

    fn eval_left(&self, t: f64) -> f64 {
        self.combine(|shift| self.base.eval_left(t - shift))
    }

    fn support(&self) -> (f64, f64) {
        if self.terms.is_empty() {
            return (0.0, 0.0);
        }
        let (a, b) = self.base.support();
        let lo = self.terms.iter().map(|t| t.0).min().unwrap() as f64 * self.spacing;
        let hi = self.terms.iter().map(|t| t.0).max().unwrap() as f64 * self.spacing;
        (a + lo, b + hi)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        for &(l, _) in &self.terms {
            let s = l as f64 * self.spacing;
            out.extend(self.base.breaks(lo - s, hi - s).into_iter().map(|x| x + s));
        }
        merge_breaks(out)
    }

    fn smooth_outside(&self) -> (f64, f64) {
        if self.terms.is_empty() {
            return (0.0, 0.0);
        }
        let (a, b) = self.base.smooth_outside();
        let lo = self.terms.iter().map(|t| t.0).min().unwrap() as f64 * self.spacing;
        let hi = self.terms.iter().map(|t| t.0).max().unwrap() as f64 * self.spacing;
        (a + lo, b + hi)
    }

    fn tails(&self) -> Tails {
        let base = self.base.tails();
        if self.terms.is_empty() {
            return Tails { left: Decay::Compact, right: Decay::Compact, exact: true };
        }
        // cancellation between terms can only speed up decay, so the class
        // is exact only when no cancellation is possible
        let same_sign = self.terms.iter().all(|t| t.1 > 0.0) || self.terms.iter().all(|t| t.1 < 0.0);
        Tails {
            exact: base.exact && (self.abs || same_sign || self.terms.len() == 1),
            ..base
        }
    }

    fn describe(&self) -> String {
        let t: Vec<String> = self
            .terms
            .iter()
            .map(|(l, w)| format!("{l}:{}", super::fmt_f64(*w)))
            .collect();
        format!(
            "lags({}|{}|{}|{})",
            self.base.describe(),
            super::fmt_f64(self.spacing),
            self.abs,
            t.join(",")
        )
    }
}

/// `|φ|`.
#[derive(Clone, Debug)]
pub struct Abs(pub KernelRef);

impl Kernel for Abs {
    fn eval(&self, t: f64) -> f64 {
        self.0.eval(t).abs()
    }
    fn eval_left(&self, t: f64) -> f64 {
        self.0.eval_left(t).abs()
    }
    fn support(&self) -> (f64, f64) {
        self.0.support()
    }
    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.0.breaks(lo, hi)
    }
    fn smooth_outside(&self) -> (f64, f64) {
        self.0.smooth_outside()
    }
    fn tails(&self) -> Tails {
        self.0.tails()
    }
    fn describe(&self) -> String {
        format!("abs({})", self.0.describe())
    }
}

/// `t ↦ φ(t - shift)`.
#[derive(Clone, Debug)]
pub struct Shifted {
    pub base: KernelRef,
    pub shift: f64,
}

impl Kernel for Shifted {
    fn eval(&self, t: f64) -> f64 {
        self.base.eval(t - self.shift)
    }
    fn eval_left(&self, t: f64) -> f64 {
        self.base.eval_left(t - self.shift)
    }
    fn support(&self) -> (f64, f64) {
        let (a, b) = self.base.support();
        (a + self.shift, b + self.shift)
    }
    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        self.base
            .breaks(lo - self.shift, hi - self.shift)
            .into_iter()
            .map(|x| x + self.shift)
            .collect()
    }
    fn smooth_outside(&self) -> (f64, f64) {
        let (a, b) = self.base.smooth_outside();
        (a + self.shift, b + self.shift)
    }
    fn tails(&self) -> Tails {
        self.base.tails()
    }
    fn describe(&self) -> String {
        format!("shift({}|{})", self.base.describe(), super::fmt_f64(self.shift))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{ExponentialOu, Indicator};
    use std::sync::Arc;

    #[test]
    fn two_shifted_indicators() {
        let phi: KernelRef = Arc::new(Indicator::new(0.0, 1.0).unwrap());
        let k = LagCombination::new(phi, vec![(-1, 1.0), (1, 1.0)], 1.0);
        for &(t, want) in &[(-1.5, 0.0), (-1.0, 1.0), (-0.5, 1.0), (0.0, 0.0), (0.5, 0.0), (1.0, 1.0), (1.9, 1.0), (2.0, 0.0)] {
            assert_eq!(k.eval(t), want, "t = {t}");
        }
        assert_eq!(k.support(), (-1.0, 2.0));
        assert_eq!(k.breaks(-5.0, 5.0), vec![-1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn absolute_companion_dominates() {
        let phi: KernelRef = Arc::new(ExponentialOu::new(1.0).unwrap());
        let k = LagCombination::new(phi.clone(), vec![(0, 1.0), (1, -2.0)], 0.5);
        let a = LagCombination::absolute(phi, vec![(0, 1.0), (1, -2.0)], 0.5);
        assert!(!k.tails().exact);
        assert!(a.tails().exact);
        for i in 0..50 {
            let t = i as f64 * 0.1;
            assert!(a.eval(t) >= k.eval(t).abs() - 1e-15);
        }
    }
}
