//! Derivative of the least-squares criterion for an AR(1) fit of a sampled
//! OU process, evaluated at the projection coefficient.

use std::sync::Arc;

use cmaqf::inference::{ls_clt_check, projection_coefficients, LsExperiment};
use cmaqf::kernels::{ExponentialOu, KernelRef};
use cmaqf::levy::LevyModel;
use cmaqf::simulate::{PathConfig, PolynomialMap};

fn main() -> cmaqf::error::Result<()> {
    let k: KernelRef = Arc::new(ExponentialOu::new(0.7)?);
    let model = LevyModel::BilateralGamma { shape: 1.0, rate: 1.0 };
    let c = projection_coefficients(&k, &model, 1.0, 1)?;
    println!("projection coefficient = {:.6} (exp(-0.7) = {:.6})", c[0], (-0.7f64).exp());

    let mut path = PathConfig::new(1.0, 1000);
    path.seed = 5;
    let report = ls_clt_check(&LsExperiment {
        kernel: k,
        model,
        path,
        v: PolynomialMap::identity(),
        theta0: None,
        replicates: 500,
        conditions: None,
    })?;
    println!("limit variance = {:.5}, empirical {:.5}", report.eta2, report.variance);
    println!("mean = {:.4} (standard error {:.4})", report.mean, (report.variance / 500.0).sqrt());
    for d in &report.diagnostics {
        println!("note: {d}");
    }
    Ok(())
}
