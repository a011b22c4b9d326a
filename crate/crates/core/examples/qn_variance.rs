//! Asymptotic variance of a quadratic form of an OU sample with a compound
//! Poisson driver, term by term, with the bilinear cross-check.

use std::sync::Arc;

use cmaqf::covariance::CoefficientSeq;
use cmaqf::kernels::{ExponentialOu, KernelRef};
use cmaqf::levy::LevyModel;
use cmaqf::variance::eta2_qn;

fn main() -> cmaqf::error::Result<()> {
    let ou: KernelRef = Arc::new(ExponentialOu::new(1.0)?);
    let model = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 };
    for b in [CoefficientSeq::delta0(), CoefficientSeq::symmetric(&[1.0, 0.5])] {
        let r = eta2_qn(&ou, &b, &model, 1.0)?;
        println!("b = {b:?}");
        println!("  eta2 = {:.6}", r.eta2);
        println!("  kappa4 term = {:.6}", r.kappa4_term);
        for t in &r.covariance_terms {
            println!("  {} = {:.6}", t.name, t.value);
        }
        if let Some(via) = r.eta2_via_bilinear {
            println!("  via bilinear form = {via:.6}");
        }
    }
    Ok(())
}
