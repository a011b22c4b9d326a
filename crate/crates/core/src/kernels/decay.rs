use serde::{Deserialize, Serialize};

use crate::quad::TailKind;

/// Decay class of a function towards one side of the real line.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Decay {
    /// Vanishes identically beyond a finite point.
    Compact,
    /// Bounded by `C e^{-rate·t}`.
    Exponential { rate: f64 },
    /// Behaves like `C t^{-exponent}`.
    Power { exponent: f64 },
}

impl Decay {
    pub fn kind(&self) -> TailKind {
        match self {
            Decay::Power { .. } => TailKind::Slow,
            _ => TailKind::Fast,
        }
    }

    pub fn power_exponent(&self) -> Option<f64> {
        match *self {
            Decay::Power { exponent } => Some(exponent),
            _ => None,
        }
    }

    /// Decay of `|f|^p`.
    pub fn pow(self, p: f64) -> Decay {
        match self {
            Decay::Compact => Decay::Compact,
            Decay::Exponential { rate } => Decay::Exponential { rate: rate * p },
            Decay::Power { exponent } => Decay::Power { exponent: exponent * p },
        }
    }

    /// Decay of a pointwise product.
    pub fn product(self, other: Decay) -> Decay {
        use Decay::*;
        match (self, other) {
            (Compact, _) | (_, Compact) => Compact,
            (Exponential { rate: a }, Exponential { rate: b }) => Exponential { rate: a + b },
            (Exponential { rate }, Power { .. }) | (Power { .. }, Exponential { rate }) => Exponential { rate },
            (Power { exponent: a }, Power { exponent: b }) => Power { exponent: a + b },
        }
    }

    /// Decay of a sum: the slower of the two wins.
    pub fn slowest(self, other: Decay) -> Decay {
        use Decay::*;
        match (self, other) {
            (Compact, x) | (x, Compact) => x,
            (Exponential { rate: a }, Exponential { rate: b }) => Exponential { rate: a.min(b) },
            (Power { exponent }, Exponential { .. }) | (Exponential { .. }, Power { exponent }) => Power { exponent },
            (Power { exponent: a }, Power { exponent: b }) => Power { exponent: a.min(b) },
        }
    }

    /// Decay of `Σ_u f(u) g(t - u)` as `t → ∞` when `f` and `g` have these
    /// right tails (and are locally integrable). `None` if the convolution
    /// itself diverges.
    pub fn convolve(self, other: Decay) -> Option<Decay> {
        use Decay::*;
        Some(match (self, other) {
            (Compact, x) | (x, Compact) => x,
            (Exponential { rate: a }, Exponential { rate: b }) => Exponential { rate: a.min(b) },
            (Exponential { .. }, Power { exponent }) | (Power { exponent }, Exponential { .. }) => Power { exponent },
            (Power { exponent: a }, Power { exponent: c }) => {
                if a + c <= 1.0 {
                    return None;
                }
                let left = if c > 1.0 { a } else { a + c - 1.0 };
                let right = if a > 1.0 { c } else { a + c - 1.0 };
                Power { exponent: left.min(right) }
            }
        })
    }

    /// Decay in `s` of `∫ f(t) g(t + s) dt` when both `f` and `g` have this
    /// right tail, assuming the integral converges.
    pub fn correlate_same_side(self, other: Decay) -> Decay {
        use Decay::*;
        match (self, other) {
            (Compact, _) => Compact,
            (_, Compact) => Compact,
            (Exponential { .. }, x) => x,
            (Power { .. }, Exponential { rate }) => Exponential { rate },
            (Power { exponent: a }, Power { exponent: c }) => Power { exponent: if a > 1.0 { c } else { a + c - 1.0 } },
        }
    }

    /// Whether a sequence with this tail belongs to `ℓ^p` (tail-wise).
    pub fn summable(self, p: f64) -> bool {
        match self {
            Decay::Power { exponent } => p.is_infinite() || p * exponent > 1.0,
            _ => true,
        }
    }
}

/// Decay on both sides plus whether the classification is exact (proven
/// from a closed form) or merely fitted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tails {
    pub left: Decay,
    pub right: Decay,
    pub exact: bool,
}

impl Tails {
    pub fn causal(right: Decay, exact: bool) -> Self {
        Tails { left: Decay::Compact, right, exact }
    }

    /// Tails of `s ↦ ∫ f(t) g(t + sΔ) dt`.
    pub fn correlation(f: &Tails, g: &Tails) -> Option<Tails> {
        // s → +∞ pairs f's left tail with g's right tail and both right tails
        let right = f
            .left
            .convolve(g.right)?
            .slowest(f.right.correlate_same_side(g.right))
            .slowest(g.left.correlate_same_side(f.left));
        let left = g
            .left
            .convolve(f.right)?
            .slowest(g.right.correlate_same_side(f.right))
            .slowest(f.left.correlate_same_side(g.left));
        Some(Tails {
            left,
            right,
            exact: f.exact && g.exact,
        })
    }

    pub fn product(&self, other: &Tails) -> Tails {
        Tails {
            left: self.left.product(other.left),
            right: self.right.product(other.right),
            exact: self.exact && other.exact,
        }
    }

    pub fn slowest(&self, other: &Tails) -> Tails {
        Tails {
            left: self.left.slowest(other.left),
            right: self.right.slowest(other.right),
            exact: self.exact && other.exact,
        }
    }
}
