//! Joint normality of sample autocovariances, seen through a contrast of
//! lags 1 to 3.

use std::sync::Arc;

use cmaqf::inference::{autocov_clt_check, AutocovExperiment};
use cmaqf::kernels::{Carma, KernelRef};
use cmaqf::levy::LevyModel;
use cmaqf::montecarlo::ConditionGate;
use cmaqf::simulate::PathConfig;
use cmaqf::variance::autocov_clt_sigma;

fn main() -> cmaqf::error::Result<()> {
    let k: KernelRef = Arc::new(Carma::new(&[3.0, 2.0], &[3.0, 1.0], 1)?);
    let model = LevyModel::CompoundPoissonNormal { rate: 2.0, jump_variance: 0.5 };
    let sigma = autocov_clt_sigma(k.as_ref(), &model, 0.5, 3)?;
    for row in &sigma {
        println!("{}", row.iter().map(|v| format!("{v:>10.5}")).collect::<String>());
    }
    let mut path = PathConfig::new(0.5, 2000);
    path.seed = 11;
    let report = autocov_clt_check(&AutocovExperiment {
        kernel: k,
        model,
        path,
        alpha: vec![1.0, -0.5, 0.25],
        replicates: 800,
        conditions: None,
    })?;
    if let ConditionGate::Checked(c) = &report.conditions {
        println!("conditions: {}", c.verdict);
    }
    println!("alpha' Sigma alpha = {:.5}, empirical {:.5}", report.eta2, report.variance);
    println!("KS distance = {:.4}", report.ks_distance.unwrap_or(f64::NAN));
    Ok(())
}
