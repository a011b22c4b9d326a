//! Assumption checks for a short-memory and a long-memory kernel.

use std::sync::Arc;

use cmaqf::conditions::{check_conditions, Assumptions, CheckOptions};
use cmaqf::covariance::CoefficientSeq;
use cmaqf::kernels::{ExponentialOu, FractionalNoise, KernelRef};

fn main() -> cmaqf::error::Result<()> {
    let opts = CheckOptions::default();
    let ou: KernelRef = Arc::new(ExponentialOu::new(1.0)?);
    let report = check_conditions(Assumptions::QnNorm, &[ou], Some(&CoefficientSeq::delta0()), 1.0, &opts)?;
    print!("{}", report.table());

    // d = 0.2 gives γ(h) ~ h^{-0.6}: square summable but not summable
    let frac: KernelRef = Arc::new(FractionalNoise::new(0.2)?);
    let report = check_conditions(Assumptions::SnNorm, &[frac.clone(), frac], None, 1.0, &opts)?;
    print!("{}", report.table());
    Ok(())
}
