//! Kernel of a stochastic delay equation dX = (-X_t + 0.3 X_{t-1}) dt + dL,
//! its autocovariance and the cost of halving the solver step.

use cmaqf::covariance::autocovariance;
use cmaqf::kernels::{Kernel, Sdde, SddeAtom};

fn main() -> cmaqf::error::Result<()> {
    let atoms = [SddeAtom { location: 0.0, weight: -1.0 }, SddeAtom { location: 1.0, weight: 0.3 }];
    let coarse = Sdde::solve(&atoms, 30.0, 0.02)?;
    let fine = Sdde::solve(&atoms, 30.0, 0.01)?;
    for t in [0.5, 1.0, 1.5, 3.0] {
        println!("phi({t}) = {:.8} (step 0.02) {:.8} (step 0.01)", coarse.eval(t), fine.eval(t));
    }
    println!("gamma(0) = {:.8}", autocovariance(&fine, 1.0, 0.0).value);

    // a delayed feedback stronger than the damping is not stationary
    let unstable = [SddeAtom { location: 0.0, weight: -1.0 }, SddeAtom { location: 1.0, weight: 1.5 }];
    if let Err(e) = Sdde::solve(&unstable, 30.0, 0.01) {
        println!("{e}");
    }
    Ok(())
}
