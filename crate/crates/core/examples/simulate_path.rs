//! Simulates an OU sample, writes it as CSV with its provenance sidecar and
//! compares the sample autocovariance with the exact one.

use cmaqf::covariance::autocovariance;
use cmaqf::kernels::ExponentialOu;
use cmaqf::levy::LevyModel;
use cmaqf::simulate::{sample_autocov, simulate_path, PathConfig};

fn main() -> cmaqf::error::Result<()> {
    let ou = ExponentialOu::new(1.0)?;
    let model = LevyModel::BilateralGamma { shape: 2.0, rate: 2.0 };
    let mut cfg = PathConfig::new(0.5, 50_000);
    cfg.seed = 2024;
    let path = simulate_path(&ou, &model, &cfg)?;
    println!("horizon T = {}, tail mass {:.2e}", path.provenance.horizon, path.provenance.tail_mass);

    let acf = sample_autocov(&path, 4)?;
    for (j, g) in (1..).zip(&acf) {
        let exact = autocovariance(&ou, 1.0, j as f64 * cfg.delta).value;
        println!("lag {j}: sample {g:.4}, exact {exact:.4}");
    }

    let out = std::env::temp_dir().join("cmaqf_ou_path.csv");
    path.write_csv(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
