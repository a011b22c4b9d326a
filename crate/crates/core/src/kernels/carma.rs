use nalgebra::DMatrix;

use super::{fmt_f64, Decay, Kernel, Tails};
use crate::error::{Error, Result};

/// CARMA(p, q) kernel `φ(t) = 1_{[0,∞)}(t) bᵀ e^{At} e_p`.
///
/// `e^{At} e_p` is tabulated on a step `τ` by powers of `e^{Aτ}` (Padé
/// scaling and squaring) and evaluated between nodes with a short Taylor
/// series in `A`, which keeps pointwise evaluation cheap and accurate.
#[derive(Clone, Debug)]
pub struct Carma {
    a: Vec<f64>,
    b: Vec<f64>,
    q: usize,
    p: usize,
    companion: Vec<f64>,
    tau: f64,
    table: Vec<f64>,
    nodes: usize,
    rate: f64,
}

impl Carma {
    pub fn new(a: &[f64], b: &[f64], q: usize) -> Result<Self> {
        let p = a.len();
        if p == 0 {
            return Err(Error::Convention("autoregressive order p must be ≥ 1".into()));
        }
        if a.iter().chain(b).any(|x| !x.is_finite()) {
            return Err(Error::domain("CARMA coefficients must be finite"));
        }
        if b.len() != p {
            return Err(Error::Convention(format!("b must have p = {p} entries b_0..b_(p-1), got {}", b.len())));
        }
        if q >= p {
            return Err(Error::Convention(format!("need q < p, got q = {q}, p = {p}")));
        }
        if b[q] != 1.0 {
            return Err(Error::Convention(format!("need b_q = 1, got b_{q} = {}", b[q])));
        }
        if let Some(k) = (q + 1..p).find(|&k| b[k] != 0.0) {
            return Err(Error::Convention(format!("need b_k = 0 for k > q, got b_{k} = {}", b[k])));
        }

        let mut m = DMatrix::<f64>::zeros(p, p);
        for i in 0..p - 1 {
            m[(i, i + 1)] = 1.0;
        }
        for j in 0..p {
            m[(p - 1, j)] = -a[p - 1 - j];
        }
        let eig = m.clone().complex_eigenvalues();
        let max_re = eig.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        if !(max_re < 0.0) {
            return Err(Error::Stability(format!(
                "companion matrix has an eigenvalue with real part {max_re:.6} ≥ 0"
            )));
        }
        let rate = -max_re;

        let norm1 = (0..p)
            .map(|j| (0..p).map(|i| m[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let tau = (0.25 / norm1.max(1e-12)).min(0.05);
        let horizon = (80.0 + 8.0 * (p as f64 - 1.0)) / rate;
        let nodes = ((horizon / tau).ceil() as usize).clamp(2, 400_000);
        let step = (m.clone() * tau).exp();
        let mut table = vec![0.0; p * (nodes + 1)];
        table[p - 1] = 1.0;
        for j in 1..=nodes {
            let (prev, cur) = table.split_at_mut(j * p);
            let prev = &prev[(j - 1) * p..];
            for i in 0..p {
                cur[i] = (0..p).map(|k| step[(i, k)] * prev[k]).sum();
            }
        }
        let companion = (0..p * p).map(|idx| m[(idx / p, idx % p)]).collect();
        Ok(Carma {
            a: a.to_vec(),
            b: b.to_vec(),
            q,
            p,
            companion,
            tau,
            table,
            nodes,
            rate,
        })
    }

    /// Decay rate `-max Re λ` over the roots of the autoregressive polynomial.
    pub fn decay_rate(&self) -> f64 {
        self.rate
    }

    fn state(&self, t: f64) -> Vec<f64> {
        let p = self.p;
        let j = (t / self.tau).round() as usize;
        if j > self.nodes {
            let m = DMatrix::from_row_slice(p, p, &self.companion) * t;
            let e = m.exp();
            return (0..p).map(|i| e[(i, p - 1)]).collect();
        }
        let r = t - j as f64 * self.tau;
        let mut sum = self.table[j * p..(j + 1) * p].to_vec();
        let mut term = sum.clone();
        for k in 1..40 {
            let next: Vec<f64> = (0..p)
                .map(|i| (0..p).map(|c| self.companion[i * p + c] * term[c]).sum::<f64>() * r / k as f64)
                .collect();
            term = next;
            let tn: f64 = term.iter().map(|x| x.abs()).sum();
            let sn: f64 = sum.iter().map(|x| x.abs()).sum();
            for i in 0..p {
                sum[i] += term[i];
            }
            if tn <= 1e-18 * sn || tn == 0.0 {
                break;
            }
        }
        sum
    }
}

impl Kernel for Carma {
    fn eval(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        let s = self.state(t);
        self.b.iter().zip(&s).map(|(b, x)| b * x).sum()
    }

    fn eval_left(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            self.eval(t)
        }
    }

    fn support(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        if lo < 0.0 && 0.0 < hi {
            vec![0.0]
        } else {
            Vec::new()
        }
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (0.0, 0.0)
    }

    fn tails(&self) -> Tails {
        Tails::causal(Decay::Exponential { rate: self.rate }, true)
    }

    fn describe(&self) -> String {
        let a: Vec<String> = self.a.iter().map(|x| fmt_f64(*x)).collect();
        let b: Vec<String> = self.b.iter().map(|x| fmt_f64(*x)).collect();
        format!("carma:{}:{}:{}", a.join(","), b.join(","), self.q)
    }
}
