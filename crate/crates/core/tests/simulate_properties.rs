use cmaqf::covariance::crosscovariance;
use cmaqf::kernels::{Carma, ExponentialOu};
use cmaqf::levy::LevyModel;
use cmaqf::simulate::{compute_sn, simulate_paired, simulate_path, PathConfig};

const BM2: LevyModel = LevyModel::BrownianMotion { variance: 2.0 };

#[test]
fn sample_variance_converges_as_m_doubles() {
    let ou = ExponentialOu::new(1.0).unwrap();
    let var = |m: usize| {
        let mut cfg = PathConfig::new(1.0, 20_000);
        cfg.m = m;
        cfg.horizon = Some(64.0);
        cfg.seed = 5;
        let x = simulate_path(&ou, &BM2, &cfg).unwrap().values;
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    };
    let v: Vec<f64> = [4, 8, 16, 32, 64].iter().map(|&m| var(m)).collect();
    let steps: Vec<f64> = v.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    // the same seed draws different fine increments for each m, so only the
    // overall contraction is meaningful
    assert!(steps[3] < steps[0], "{v:?}");
    assert!((v[4] - 1.0).abs() < 0.05, "{v:?}");
}

#[test]
fn paired_paths_share_the_driver() {
    let ou = ExponentialOu::new(1.0).unwrap();
    let carma = Carma::new(&[3.0, 2.0], &[3.0, 1.0], 1).unwrap();
    let mut cfg = PathConfig::new(1.0, 100_000);
    cfg.seed = 8;
    let (x1, x2) = simulate_paired(&ou, &carma, &BM2, &cfg).unwrap();
    let empirical = compute_sn(&x1, &x2).unwrap() / cfg.n as f64;
    let want = crosscovariance(&ou, &carma, 2.0, 0.0).value;
    assert!((empirical / want - 1.0).abs() < 0.05, "{empirical} vs {want}");
}

#[test]
fn csv_export_with_sidecar() {
    let ou = ExponentialOu::new(1.0).unwrap();
    let p = simulate_path(&ou, &BM2, &PathConfig::new(1.0, 5)).unwrap();
    let d = tempfile::tempdir().unwrap();
    let f = d.path().join("x.csv");
    p.write_csv(&f).unwrap();
    let rows: Vec<f64> = std::fs::read_to_string(&f).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(rows, p.values);
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.path().join("x.json")).unwrap()).unwrap();
    assert_eq!(side["kernel_hash"].as_str().unwrap().len(), 64);
    assert_eq!(side["horizon"].as_f64().unwrap(), 5.0);
}
