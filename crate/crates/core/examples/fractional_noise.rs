//! Long memory of fractional noise: the autocovariance decays like
//! h^{2d-1}, so simulation needs a long horizon and absolute sums diverge.

use cmaqf::covariance::autocovariance;
use cmaqf::kernels::FractionalNoise;
use cmaqf::levy::LevyModel;
use cmaqf::simulate::{auto_horizon, simulate_path, PathConfig};

fn main() -> cmaqf::error::Result<()> {
    let d = 0.1;
    let k = FractionalNoise::new(d)?;
    for h in [1.0, 10.0, 100.0, 1000.0] {
        let g = autocovariance(&k, 1.0, h).value;
        println!("h = {h:>6}: gamma = {g:.6e}, gamma / h^(2d-1) = {:.6}", g / f64::powf(h, 2.0 * d - 1.0));
    }

    let (t, mass) = auto_horizon(&k, 1.0, 1e-2)?;
    println!("horizon for 1% relative L2 mass: T = {t} (mass outside {mass:.2e})");

    let mut cfg = PathConfig::new(1.0, 2000);
    cfg.m = 16;
    for budget in [1e-2, 1e-4, 1e-6] {
        cfg.mass_budget = budget;
        match simulate_path(&k, &LevyModel::BrownianMotion { variance: 1.0 }, &cfg) {
            Ok(p) => println!("budget {budget:e}: T = {}", p.provenance.horizon),
            Err(e) => println!("budget {budget:e}: {e}"),
        }
    }
    Ok(())
}
