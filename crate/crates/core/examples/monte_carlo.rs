//! Monte Carlo check of the central limit theorem for Q_n: moments, the
//! empirical-to-asymptotic variance ratio and the KS distance.

use std::sync::Arc;

use cmaqf::covariance::CoefficientSeq;
use cmaqf::kernels::{ExponentialOu, KernelRef};
use cmaqf::levy::LevyModel;
use cmaqf::montecarlo::{run_experiment, ConditionGate, ExperimentConfig, Statistic};
use cmaqf::simulate::PathConfig;

fn main() -> cmaqf::error::Result<()> {
    let ou: KernelRef = Arc::new(ExponentialOu::new(1.0)?);
    let mut path = PathConfig::new(1.0, 2000);
    path.seed = 7;
    let mut report = run_experiment(&ExperimentConfig {
        statistic: Statistic::Qn { kernel: ou, b: CoefficientSeq::symmetric(&[1.0, 0.5]) },
        model: LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 },
        path,
        replicates: 1000,
        conditions: ConditionGate::Waived,
    })?;
    println!("eta2 = {:.6}", report.eta2);
    println!("mean = {:.4}, variance = {:.4}", report.mean, report.variance);
    println!("skewness = {:.4}, excess kurtosis = {:.4}", report.skewness, report.excess_kurtosis);
    println!("variance ratio = {:.4}", report.variance_ratio.unwrap_or(f64::NAN));
    println!("KS distance = {:.4}", report.ks_distance.unwrap_or(f64::NAN));

    let dir = std::env::temp_dir().join("cmaqf_mc");
    report.write(&dir)?;
    println!("replicates in {}", dir.join("replicates.csv").display());
    Ok(())
}
