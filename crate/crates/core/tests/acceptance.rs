//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --test acceptance`; exits non-zero if any criterion fails.

use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cmaqf::conditions::{check_conditions, Assumptions, CheckOptions, Exponents, Verdict};
use cmaqf::covariance::{autocovariance, CoefficientSeq};
use cmaqf::grid::{fourth_moment, grid_sample};
use cmaqf::inference::{autocov_clt_check, AutocovExperiment};
use cmaqf::kernels::{Carma, ExponentialOu, FractionalNoise, Indicator, Kernel, KernelRef, Sdde, SddeAtom, Tabulated};
use cmaqf::levy::LevyModel;
use cmaqf::montecarlo::{run_experiment, ConditionGate, ExperimentConfig, Statistic};
use cmaqf::simulate::{simulate_path, ConvMethod, PathConfig};
use cmaqf::variance::{autocov_clt_sigma, eta2_qn};
use rayon::prelude::*;

const BM2: LevyModel = LevyModel::BrownianMotion { variance: 2.0 };
const CPN: LevyModel = LevyModel::CompoundPoissonNormal { rate: 1.0, jump_variance: 1.0 };

fn ou() -> KernelRef {
    Arc::new(ExponentialOu::new(1.0).unwrap())
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn criterion(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let o = f();
    let took = start.elapsed();
    let in_time = took <= budget;
    let pass = o.pass && in_time;
    println!(
        "{} {id:>2} {name}: {} [{:.2}s / {}s]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        budget.as_secs()
    );
    pass
}

fn fourth_moment_oracle() -> Outcome {
    // I(1[a,b)) = L_b − L_a, built from increments on [0,.5), [.5,1), [1,1.5), [1.5,2)
    let members: [&[usize]; 4] = [&[0, 1], &[1, 2], &[0, 1, 2, 3], &[1]];
    let ranges = [(0.0, 1.0), (0.5, 1.5), (0.0, 2.0), (0.5, 1.0)];
    let grids: Vec<_> = ranges
        .iter()
        .map(|&(a, b)| grid_sample(&Indicator::new(a, b).unwrap(), 0.5, 64, 2.0).unwrap())
        .collect();
    let want = fourth_moment([&grids[0], &grids[1], &grids[2], &grids[3]], &CPN).unwrap();

    let chunks = 100u64;
    let per = 10_000usize;
    let (sum, sum_sq) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = cmaqf::rng::stream(2024, c);
            let mut e = [0.0; 4];
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..per {
                CPN.fill_increments(0.5, &mut rng, &mut e).unwrap();
                let p: f64 = members.iter().map(|m| m.iter().map(|&i| e[i]).sum::<f64>()).product();
                s += p;
                s2 += p * p;
            }
            (s, s2)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let r = (chunks as usize * per) as f64;
    let mean = sum / r;
    let se = ((sum_sq / r - mean * mean) / r).sqrt();
    let z = (mean - want) / se;
    outcome(z.abs() < 4.0, format!("MC {mean:.5} vs {want:.5}, {z:+.2} SE over 1e6 replicates"))
}

fn ou_autocovariance() -> Outcome {
    let k = ou();
    let worst = [0.0f64, 1.0, 2.0, 5.0]
        .iter()
        .map(|&h| (autocovariance(k.as_ref(), 2.0, h).value / (-h).exp() - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(worst < 1e-6, format!("max relative error {worst:.2e}"))
}

fn carma_residues() -> Outcome {
    let k = Carma::new(&[3.0, 2.0], &[3.0, 1.0], 1).unwrap();
    let worst = (0..=10_000)
        .map(|i| {
            let t = i as f64 * 1e-3;
            (k.eval(t) - (2.0 * (-t).exp() - (-2.0 * t).exp())).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst < 1e-8, format!("max abs error {worst:.2e} on [0, 10]"))
}

fn variance_identity() -> Outcome {
    let b = CoefficientSeq::symmetric(&[0.0, 1.0, 0.5]);
    let mut worst = 0.0f64;
    for model in [BM2, CPN] {
        let r = eta2_qn(&ou(), &b, &model, 1.0).unwrap();
        let via = r.eta2_via_bilinear.unwrap();
        worst = worst.max((r.eta2 - via).abs() / r.eta2);
    }
    outcome(worst < 1e-8, format!("max relative gap {worst:.2e} (Brownian and compound Poisson)"))
}

fn gaussian_limit() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, model, seed) in [("Brownian", BM2, 1u64), ("compound Poisson", CPN, 2)] {
        let mut path = PathConfig::new(1.0, 4000);
        path.seed = seed;
        let r = run_experiment(&ExperimentConfig {
            statistic: Statistic::Qn { kernel: ou(), b: CoefficientSeq::delta0() },
            model,
            path,
            replicates: 2000,
            conditions: ConditionGate::Waived,
        })
        .unwrap();
        let ratio = r.variance_ratio.unwrap();
        let ks = r.ks_distance.unwrap();
        pass &= (0.9..=1.1).contains(&ratio) && ks < 0.05;
        if model == BM2 {
            pass &= (r.eta2 - 2.626071).abs() < 1e-6;
        }
        detail.push(format!("{label}: eta2 {:.6}, ratio {ratio:.4}, KS {ks:.4}", r.eta2));
    }
    outcome(pass, detail.join("; "))
}

fn condition_calibration() -> Outcome {
    let auto = CheckOptions::default();
    let b = CoefficientSeq::symmetric(&[0.0, 1.0, 0.5]);
    let a = check_conditions(Assumptions::QnNorm, &[ou()], Some(&b), 1.0, &auto).unwrap();
    let frac: KernelRef = Arc::new(FractionalNoise::new(0.1).unwrap());
    let f = check_conditions(Assumptions::SnDecay, &[frac.clone(), frac], None, 1.0, &auto).unwrap();
    let values: Vec<f64> = (0..=400).map(|k| (1.0 + k as f64 * 0.05).powf(-0.7)).collect();
    let tab: KernelRef = Arc::new(Tabulated::new(0.0, 0.05, values, Some(0.7)).unwrap());
    let t = check_conditions(Assumptions::SnDecay, &[tab.clone(), tab], None, 1.0, &auto).unwrap();

    let mut sweep_ok = 0;
    for i in 1..=20 {
        let rho = i as f64 * 0.1;
        let b = CoefficientSeq::PowerDecay { c: 1.0, rho, b0: 1.0 };
        let opts = CheckOptions { exponents: Exponents::Fixed(vec![1.0, 1.5]), ..Default::default() };
        let r = check_conditions(Assumptions::QnNorm, &[ou()], Some(&b), 1.0, &opts).unwrap();
        let want = if 1.5 * rho > 1.0 { Verdict::Supported } else { Verdict::Refuted };
        sweep_ok += (r.entries[0].verdict == want && b.in_lq(1.5) == (want == Verdict::Supported)) as usize;
    }
    let pass = a.verdict == Verdict::Supported
        && f.verdict == Verdict::Supported
        && f.exponents["alpha1"] == 0.9
        && f.exponents["alpha2"] == 0.9
        && t.verdict == Verdict::Refuted
        && sweep_ok == 20;
    outcome(
        pass,
        format!(
            "(a) {} (b) {} at α = {} (c) {} (d) {sweep_ok}/20 agree",
            a.verdict, f.verdict, f.exponents["alpha1"], t.verdict
        ),
    )
}

fn simulation_isometry() -> Outcome {
    let mut cfg = PathConfig::new(1.0, 100_000);
    cfg.seed = 7;
    let x = simulate_path(ou().as_ref(), &BM2, &cfg).unwrap().values;
    let var = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
    let rel = (var - 1.0).abs();

    let mut small = PathConfig::new(1.0, 128);
    small.seed = 3;
    let frac = FractionalNoise::new(0.1).unwrap();
    let mut worst = 0.0f64;
    for k in [ou().as_ref(), &frac as &dyn Kernel] {
        small.method = ConvMethod::Direct;
        let d = simulate_path(k, &CPN, &small).unwrap().values;
        small.method = ConvMethod::Fft;
        let f = simulate_path(k, &CPN, &small).unwrap().values;
        let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(d.iter().zip(&f).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale);
    }
    outcome(
        rel < 0.05 && worst < 1e-10,
        format!("sample variance {var:.4} vs γ(0) = 1; FFT vs direct {worst:.2e}"),
    )
}

fn autocov_clt() -> Outcome {
    let mut path = PathConfig::new(1.0, 4000);
    path.seed = 11;
    let r = autocov_clt_check(&AutocovExperiment {
        kernel: ou(),
        model: BM2,
        path,
        alpha: vec![1.0],
        replicates: 1000,
        conditions: None,
    })
    .unwrap();
    let ratio = r.variance_ratio.unwrap();
    let sigma = autocov_clt_sigma(ou().as_ref(), &CPN, 1.0, 5).unwrap();
    let m = nalgebra::DMatrix::from_fn(5, 5, |i, j| sigma[i][j]);
    let symmetric = (0..5).all(|i| (0..5).all(|j| sigma[i][j] == sigma[j][i]));
    let min_eig = m.symmetric_eigen().eigenvalues.min();
    outcome(
        (0.85..=1.15).contains(&ratio) && symmetric && min_eig > -1e-12,
        format!("Σ₁₁ {:.6}, ratio {ratio:.4}; 5×5 Σ symmetric, min eigenvalue {min_eig:.3e}", r.eta2),
    )
}

fn sdde_reduction() -> Outcome {
    let atoms = [SddeAtom { location: 0.0, weight: -1.0 }];
    let err = |step: f64| {
        let k = Sdde::solve(&atoms, 10.0, step).unwrap();
        (0..=100_000)
            .map(|i| {
                let t = i as f64 * 1e-4;
                (k.eval(t) - (-t).exp()).abs()
            })
            .fold(0.0, f64::max)
    };
    let coarse = err(1e-3);
    let fine = err(5e-4);
    outcome(
        coarse < 1e-4 && coarse / fine >= 3.0,
        format!("max error {coarse:.2e} at δ = 1e-3, ratio {:.2} on halving", coarse / fine),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let common = r#""schema_version": 1,
        "levy": {"type": "compound_poisson_normal", "rate": 1.0, "jump_variance": 1.0},
        "kernel": {"type": "exponential_ou", "lambda": 1.0},
        "delta": 1.0, "n": 200, "replicates": 20, "seed": 5,
        "simulation": {"m": 8}"#;
    let runs = [
        ("check", r#", "b": {"type": "finite_support", "values": [0.5, 1.0, 0.0, 1.0, 0.5]}, "assumptions": "qn-norm""#),
        ("variance", r#", "b": {"type": "finite_support", "values": [0.5, 1.0, 0.0, 1.0, 0.5]}"#),
        ("simulate", r#", "kernel2": {"type": "carma", "a": [3.0, 2.0], "b": [3.0, 1.0], "q": 1}"#),
        ("mc", r#", "b": {"type": "finite_support", "values": [1.0]}"#),
        ("autocov-clt", r#", "alpha": [1.0, -0.5]"#),
        ("ls-clt", ""),
        ("kernel-export", r#", "export": {"start": -1.0, "step": 0.25, "count": 41}"#),
    ];
    let mut bad = Vec::new();
    for (cmd, extra) in runs {
        let cfg = d.join(format!("{cmd}.json"));
        std::fs::write(&cfg, format!("{{{common}{extra}}}")).unwrap();
        let first = d.join(format!("{cmd}-a"));
        let second = d.join(format!("{cmd}-b"));
        let argv = |c: &Path, o: &Path| {
            vec!["cmaqf".to_string(), cmd.into(), "--config".into(), c.display().to_string(), "--out".into(), o.display().to_string()]
        };
        if cmaqf::cli::run(argv(&cfg, &first)) != 0 || cmaqf::cli::run(argv(&first.join("manifest.json"), &second)) != 0 {
            bad.push(format!("{cmd}: run failed"));
            continue;
        }
        let manifest = cmaqf::cli::RunConfig::from_json(&std::fs::read_to_string(first.join("manifest.json")).unwrap()).unwrap();
        for (file, hash) in &manifest.outputs {
            let a = std::fs::read(first.join(file)).unwrap();
            let b = std::fs::read(second.join(file)).unwrap();
            if a != b || cmaqf_hash(&b) != *hash {
                bad.push(format!("{cmd}: {file} differs"));
            }
        }
    }
    outcome(bad.is_empty(), if bad.is_empty() { "7 subcommands reproduced from their manifests".into() } else { bad.join(", ") })
}

fn cmaqf_hash(bytes: &[u8]) -> String {
    use sha2::Digest;
    hex::encode(sha2::Sha256::digest(bytes))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "fourth-moment oracle", s(60), fourth_moment_oracle),
        criterion(2, "closed-form autocovariance", s(1), ou_autocovariance),
        criterion(3, "CARMA residue oracle", s(1), carma_residues),
        criterion(4, "direct vs bilinear variance", s(5), variance_identity),
        criterion(5, "Gaussian limit", s(600), gaussian_limit),
        criterion(6, "condition checker calibration", s(60), condition_calibration),
        criterion(7, "simulation isometry", s(60), simulation_isometry),
        criterion(8, "autocovariance CLT", s(600), autocov_clt),
        criterion(9, "delay equation reduction", s(10), sdde_reduction),
        criterion(10, "CLI determinism", s(120), cli_determinism),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
