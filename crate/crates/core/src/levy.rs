//! Mean-zero Lévy drivers with finite fourth moment.
//!
//! The limit theorems only see the driver through its second and fourth
//! cumulants `(σ², κ₄)` of `L₁`, so three parametric families are enough to
//! cover both the Gaussian case (`κ₄ = 0`) and genuinely jumpy drivers
//! (`κ₄ > 0`). Increments over a step `dt` are sampled exactly from their
//! infinitely divisible law.
//!
//! Integrability of `∫ f dL` in `L⁴(P)` is not checked numerically: it holds
//! for every kernel in `L² ∩ L⁴` once `E L₁⁴ < ∞`, which all three families
//! satisfy by construction.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum LevyModel {
    /// Brownian motion with `Var L₁ = variance`.
    BrownianMotion { variance: f64 },
    /// Poisson(`rate`) many N(0, `jump_variance`) jumps per unit time.
    CompoundPoissonNormal { rate: f64, jump_variance: f64 },
    /// Difference of two independent Gamma(`shape`, `rate`) subordinators.
    BilateralGamma { shape: f64, rate: f64 },
}

/// Second and fourth cumulant of `L₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cumulants {
    pub sigma2: f64,
    pub kappa4: f64,
}

fn positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

impl LevyModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LevyModel::BrownianMotion { variance } => positive("variance", variance),
            LevyModel::CompoundPoissonNormal { rate, jump_variance } => {
                positive("rate", rate)?;
                positive("jump_variance", jump_variance)
            }
            LevyModel::BilateralGamma { shape, rate } => {
                positive("shape", shape)?;
                positive("rate", rate)
            }
        }
    }

    /// Exact `(σ², κ₄)` with `κ₄ = E L₁⁴ − 3σ⁴`.
    pub fn cumulants(&self) -> Result<Cumulants> {
        self.validate()?;
        Ok(match *self {
            LevyModel::BrownianMotion { variance } => Cumulants {
                sigma2: variance,
                kappa4: 0.0,
            },
            // κ_m = λ E J^m with J ~ N(0, τ²)
            LevyModel::CompoundPoissonNormal { rate, jump_variance } => Cumulants {
                sigma2: rate * jump_variance,
                kappa4: 3.0 * rate * jump_variance * jump_variance,
            },
            // gamma cumulants a (m-1)! / b^m, doubled by the symmetric difference
            LevyModel::BilateralGamma { shape, rate } => Cumulants {
                sigma2: 2.0 * shape / (rate * rate),
                kappa4: 12.0 * shape / rate.powi(4),
            },
        })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, LevyModel::BrownianMotion { .. })
    }

    /// `count` independent draws of `L_dt`.
    pub fn sample_increments<R: Rng + ?Sized>(
        &self,
        count: usize,
        dt: f64,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; count];
        self.fill_increments(dt, rng, &mut out)?;
        Ok(out)
    }

    /// Overwrites `out` with independent draws of `L_dt`.
    pub fn fill_increments<R: Rng + ?Sized>(
        &self,
        dt: f64,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        self.validate()?;
        positive("dt", dt)?;
        match *self {
            LevyModel::BrownianMotion { variance } => {
                let sd = (variance * dt).sqrt();
                for x in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *x = sd * z;
                }
            }
            LevyModel::CompoundPoissonNormal { rate, jump_variance } => {
                let counts = Poisson::new(rate * dt)
                    .map_err(|e| Error::domain(format!("poisson intensity: {e}")))?;
                for x in out.iter_mut() {
                    let k: f64 = counts.sample(rng);
                    *x = if k > 0.0 {
                        let z: f64 = StandardNormal.sample(rng);
                        (k * jump_variance).sqrt() * z
                    } else {
                        0.0
                    };
                }
            }
            LevyModel::BilateralGamma { shape, rate } => {
                let g = Gamma::new(shape * dt, 1.0 / rate)
                    .map_err(|e| Error::domain(format!("gamma law: {e}")))?;
                for x in out.iter_mut() {
                    let up: f64 = g.sample(rng);
                    let down: f64 = g.sample(rng);
                    *x = up - down;
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn moments(xs: &[f64]) -> (f64, f64, f64, f64, f64) {
        // mean, E x², se(x²), E x⁴, se(x⁴)
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let m4: Vec<f64> = m2.iter().map(|x| x * x).collect();
        let avg = |v: &[f64]| v.iter().sum::<f64>() / n;
        let se = |v: &[f64], m: f64| (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let a2 = avg(&m2);
        let a4 = avg(&m4);
        (mean, a2, se(&m2, a2), a4, se(&m4, a4))
    }

    #[test]
    fn cumulant_examples() {
        let bm = LevyModel::BrownianMotion { variance: 2.0 }.cumulants().unwrap();
        assert_eq!((bm.sigma2, bm.kappa4), (2.0, 0.0));
        let cp = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 }
            .cumulants()
            .unwrap();
        assert_eq!((cp.sigma2, cp.kappa4), (1.0, 3.0));
        let bg = LevyModel::BilateralGamma { shape: 2.0, rate: 1.0 }.cumulants().unwrap();
        assert_eq!((bg.sigma2, bg.kappa4), (4.0, 24.0));
    }

    #[test]
    fn invalid_parameters_rejected() {
        for m in [
            LevyModel::BrownianMotion { variance: 0.0 },
            LevyModel::CompoundPoissonNormal { rate: -1.0, jump_variance: 1.0 },
            LevyModel::BilateralGamma { shape: 1.0, rate: f64::NAN },
        ] {
            assert!(matches!(m.cumulants(), Err(Error::Domain(_))));
        }
        let bm = LevyModel::BrownianMotion { variance: 1.0 };
        assert!(bm.sample_increments(3, 0.0, &mut stream(1, 0)).is_err());
        assert!(bm.sample_increments(0, 1.0, &mut stream(1, 0)).unwrap().is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let m = LevyModel::CompoundPoissonNormal { rate: 2.0, jump_variance: 0.5 };
        let a = m.sample_increments(1000, 0.1, &mut stream(42, 5)).unwrap();
        let b = m.sample_increments(1000, 0.1, &mut stream(42, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn brownian_mean_within_clt_bound() {
        let m = LevyModel::BrownianMotion { variance: 1.0 };
        let xs = m.sample_increments(1_000_000, 1.0, &mut stream(11, 0)).unwrap();
        let (mean, ..) = moments(&xs);
        assert!(mean.abs() < 0.004, "mean {mean}");
    }

    #[test]
    fn compound_poisson_fourth_moment() {
        let m = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 };
        let xs = m.sample_increments(1_000_000, 1.0, &mut stream(12, 0)).unwrap();
        let (_, _, _, m4, _) = moments(&xs);
        assert!((m4 - 6.0).abs() < 0.3, "E L^4 = {m4}");
    }

    #[test]
    fn empirical_moments_match_cumulants() {
        for (i, m) in [
            LevyModel::BrownianMotion { variance: 1.5 },
            LevyModel::CompoundPoissonNormal { rate: 2.0, jump_variance: 0.5 },
            LevyModel::BilateralGamma { shape: 2.0, rate: 1.0 },
        ]
        .into_iter()
        .enumerate()
        {
            let c = m.cumulants().unwrap();
            let xs = m.sample_increments(1_000_000, 1.0, &mut stream(13, i as u64)).unwrap();
            let (_, m2, se2, m4, se4) = moments(&xs);
            let want4 = c.kappa4 + 3.0 * c.sigma2 * c.sigma2;
            assert!((m2 - c.sigma2).abs() < 4.0 * se2, "{m:?}: E L^2 {m2} vs {}", c.sigma2);
            assert!((m4 - want4).abs() < 4.0 * se4, "{m:?}: E L^4 {m4} vs {want4}");
        }
    }

    #[test]
    fn variance_scales_linearly_in_dt() {
        let m = LevyModel::BilateralGamma { shape: 3.0, rate: 2.0 };
        let s2 = m.cumulants().unwrap().sigma2;
        for (dt, idx) in [(0.25, 0u64), (2.0, 1)] {
            let xs = m.sample_increments(400_000, dt, &mut stream(14, idx)).unwrap();
            let (_, m2, se2, ..) = moments(&xs);
            assert!((m2 - s2 * dt).abs() < 4.0 * se2, "dt {dt}: {m2} vs {}", s2 * dt);
        }
    }

    #[test]
    fn distinct_streams_uncorrelated() {
        let m = LevyModel::BrownianMotion { variance: 1.0 };
        let n = 200_000;
        let a = m.sample_increments(n, 1.0, &mut stream(15, 0)).unwrap();
        let b = m.sample_increments(n, 1.0, &mut stream(15, 1)).unwrap();
        assert_ne!(a[..10], b[..10]);
        let corr = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>() / n as f64;
        assert!(corr.abs() < 4.0 / (n as f64).sqrt(), "corr {corr}");
    }
}
