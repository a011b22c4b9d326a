//! Moving-average kernels `φ`.
//!
//! Every kernel is an object behind [`KernelRef`] that can be evaluated
//! pointwise (right-continuous, with left limits on request), reports the
//! points where it is not smooth so quadrature can split there, and carries
//! decay metadata for its two tails. The configuration-facing description is
//! [`KernelSpec`]; [`KernelSpec::build`] validates it and returns the kernel.
//!
//! Besides the configurable families there are a few combinators used by the
//! analytic layer: lag combinations `Σ w_j φ(t - l_jΔ)` (which cover `b ⋆ φ`
//! for finitely supported `b`), absolute values, time shifts and indicators.

mod analytic;
mod carma;
mod combine;
pub mod decay;
mod sdde;
mod tabulated;

use std::fmt::Debug;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use analytic::{ExponentialOu, FractionalNoise, Indicator};
pub use carma::Carma;
pub use combine::{Abs, LagCombination, Shifted};
pub use decay::{Decay, Tails};
pub use sdde::{characteristic_roots_in_left_half_plane, Sdde, SddeAtom};
pub use tabulated::Tabulated;

/// A real function on `ℝ` used as a moving-average kernel.
pub trait Kernel: Send + Sync + Debug {
    /// Right-continuous value `φ(t)`.
    fn eval(&self, t: f64) -> f64;

    /// Left limit `φ(t-)`.
    fn eval_left(&self, t: f64) -> f64 {
        self.eval(t)
    }

    /// Closed interval outside of which `φ` vanishes (ends may be infinite).
    fn support(&self) -> (f64, f64);

    /// Points in the open interval `(lo, hi)` where `φ` has a jump or a kink.
    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64>;

    /// `(a, b)` such that `φ` is smooth on `(-∞, a)` and on `(b, ∞)`.
    fn smooth_outside(&self) -> (f64, f64);

    fn tails(&self) -> Tails;

    /// Canonical text used for provenance hashing.
    fn describe(&self) -> String;
}

pub type KernelRef = Arc<dyn Kernel>;

/// Merges break lists, sorted and deduplicated.
pub(crate) fn merge_breaks(mut v: Vec<f64>) -> Vec<f64> {
    v.retain(|x| x.is_finite());
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * (1.0 + b.abs()));
    v
}

pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

/// One atom `w δ_τ` of the delay measure.
pub type Atom = SddeAtom;

/// Configuration-level kernel description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// CARMA(p, q) with autoregressive coefficients `a_1..a_p` and moving
    /// average coefficients `b_0..b_{p-1}`.
    Carma { a: Vec<f64>, b: Vec<f64>, q: usize },
    /// Resolvent of a delay equation with a finite atomic delay measure.
    Sdde { atoms: Vec<SddeAtom>, horizon: f64, step: f64 },
    FractionalNoise { d: f64 },
    #[serde(rename = "exponential_ou")]
    ExponentialOu { lambda: f64 },
    /// Values on `start + k·step`, inline or from a `t,phi` CSV file.
    Tabulated {
        #[serde(default)]
        start: Option<f64>,
        #[serde(default)]
        step: Option<f64>,
        #[serde(default)]
        values: Option<Vec<f64>>,
        #[serde(default)]
        csv: Option<String>,
        /// Declared exact tail exponent; fitted when absent.
        #[serde(default)]
        tail_exponent: Option<f64>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> Result<KernelRef> {
        self.build_in(Path::new("."))
    }

    /// Like [`build`](Self::build) but resolves relative CSV paths against `dir`.
    pub fn build_in(&self, dir: &Path) -> Result<KernelRef> {
        Ok(match self {
            KernelSpec::Carma { a, b, q } => Arc::new(Carma::new(a, b, *q)?),
            KernelSpec::Sdde { atoms, horizon, step } => Arc::new(Sdde::solve(atoms, *horizon, *step)?),
            KernelSpec::FractionalNoise { d } => Arc::new(FractionalNoise::new(*d)?),
            KernelSpec::ExponentialOu { lambda } => Arc::new(ExponentialOu::new(*lambda)?),
            KernelSpec::Tabulated {
                start,
                step,
                values,
                csv,
                tail_exponent,
            } => {
                let tab = match (csv, values) {
                    (Some(path), None) => {
                        let p = dir.join(path);
                        Tabulated::read_csv(&p, *tail_exponent)?
                    }
                    (None, Some(v)) => {
                        let start = start.ok_or_else(|| Error::config("kernel.start", "missing"))?;
                        let step = step.ok_or_else(|| Error::config("kernel.step", "missing"))?;
                        Tabulated::new(start, step, v.clone(), *tail_exponent)?
                    }
                    _ => {
                        return Err(Error::config(
                            "kernel",
                            "tabulated kernel needs exactly one of `values` or `csv`",
                        ))
                    }
                };
                Arc::new(tab)
            }
        })
    }
}

/// `φ(t)` for a built kernel; total on valid kernels.
pub fn eval_kernel(kernel: &dyn Kernel, t: f64) -> f64 {
    kernel.eval(t)
}
