use std::io::Write;
use std::path::Path;

use super::{fmt_f64, merge_breaks, Decay, Kernel, Tails};
use crate::error::{Error, Result};

/// Kernel given by samples on `start + k·step`.
///
/// Between nodes values are interpolated linearly; before `start` the kernel
/// is zero. Past the last node it continues as `C t^{-ρ}` anchored at the
/// last value. `ρ` is either declared (and then treated as exact) or fitted
/// by least squares on the last decade of the table.
#[derive(Clone, Debug)]
pub struct Tabulated {
    start: f64,
    step: f64,
    values: Vec<f64>,
    tail: TabTail,
    declared: bool,
    fit_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum TabTail {
    Zero,
    Power { exponent: f64, constant: f64 },
}

/// Least-squares slope of `log|v|` against `log t`; returns
/// `(exponent, max abs residual)`.
pub(crate) fn fit_power(ts: &[f64], vs: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = ts
        .iter()
        .zip(vs)
        .filter(|(t, v)| **t > 0.0 && v.abs() > 0.0)
        .map(|(t, v)| (t.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid = pts
        .iter()
        .map(|p| (p.1 - (my + slope * (p.0 - mx))).abs())
        .fold(0.0, f64::max);
    Some((-slope, resid))
}

impl Tabulated {
    pub fn new(start: f64, step: f64, values: Vec<f64>, tail_exponent: Option<f64>) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && step > 0.0) {
            return Err(Error::domain(format!("tabulated grid needs finite start and step > 0, got {start}, {step}")));
        }
        if values.len() < 2 {
            return Err(Error::domain("tabulated kernel needs at least two values"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("tabulated values must be finite"));
        }
        let end = start + step * (values.len() - 1) as f64;
        let last = *values.last().unwrap();
        let (tail, declared, fit_residual) = match tail_exponent {
            Some(rho) => {
                if !(rho > 0.5) {
                    return Err(Error::domain(format!("tail exponent {rho} ≤ 1/2 leaves L²")));
                }
                if last == 0.0 {
                    (TabTail::Zero, true, 0.0)
                } else {
                    if end <= 0.0 {
                        return Err(Error::domain("a power tail needs the table to end at t > 0"));
                    }
                    (TabTail::Power { exponent: rho, constant: last * end.powf(rho) }, true, 0.0)
                }
            }
            None => {
                let n = values.len();
                let from = if end > 0.0 && end / 10.0 > start {
                    ((end / 10.0 - start) / step).ceil() as usize
                } else {
                    n / 2
                };
                let ts: Vec<f64> = (from..n).map(|k| start + k as f64 * step).collect();
                match fit_power(&ts, &values[from..]) {
                    _ if last == 0.0 => (TabTail::Zero, false, 0.0),
                    Some((rho, resid)) => {
                        if !(rho > 0.5) {
                            return Err(Error::domain(format!(
                                "fitted tail exponent {rho:.4} ≤ 1/2: kernel would not be square integrable"
                            )));
                        }
                        (TabTail::Power { exponent: rho, constant: last * end.powf(rho) }, false, resid)
                    }
                    None => (TabTail::Zero, false, 0.0),
                }
            }
        };
        Ok(Tabulated {
            start,
            step,
            values,
            tail,
            declared,
            fit_residual,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    /// Tail exponent beyond the table, if the tail is not identically zero.
    pub fn tail_exponent(&self) -> Option<f64> {
        match self.tail {
            TabTail::Power { exponent, .. } => Some(exponent),
            TabTail::Zero => None,
        }
    }

    /// Largest log-residual of the tail fit (zero when declared).
    pub fn fit_residual(&self) -> f64 {
        self.fit_residual
    }

    pub fn read_csv(path: &Path, tail_exponent: Option<f64>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Csv(format!("{}: empty file", path.display())))?;
        if header.trim() != "t,phi" {
            return Err(Error::Csv(format!("{}: expected header `t,phi`, got `{header}`", path.display())));
        }
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .ok_or_else(|| Error::Csv(format!("{}: row {} too short", path.display(), i + 2)))?
                    .parse::<f64>()
                    .map_err(|e| Error::Csv(format!("{}: row {}: {e}", path.display(), i + 2)))
            };
            ts.push(parse(it.next())?);
            vs.push(parse(it.next())?);
        }
        if ts.len() < 2 {
            return Err(Error::Csv(format!("{}: need at least two rows", path.display())));
        }
        let step = ts[1] - ts[0];
        for (k, t) in ts.iter().enumerate() {
            if (t - (ts[0] + k as f64 * step)).abs() > 1e-9 * step.abs().max(t.abs()) {
                return Err(Error::Csv(format!("{}: t column is not equally spaced at row {}", path.display(), k + 2)));
            }
        }
        Tabulated::new(ts[0], step, vs, tail_exponent)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "t,phi")?;
        for (k, v) in self.values.iter().enumerate() {
            writeln!(f, "{},{}", self.start + k as f64 * self.step, v)?;
        }
        f.flush()?;
        Ok(())
    }
}

impl Kernel for Tabulated {
    fn eval(&self, t: f64) -> f64 {
        if t < self.start {
            return 0.0;
        }
        let n = self.values.len() - 1;
        let x = (t - self.start) / self.step;
        if x >= n as f64 {
            if x == n as f64 {
                return self.values[n];
            }
            return match self.tail {
                TabTail::Zero => 0.0,
                TabTail::Power { exponent, constant } => constant * t.powf(-exponent),
            };
        }
        let kr = x.round();
        if (x - kr).abs() < 1e-9 {
            return self.values[kr as usize];
        }
        let k = x.floor() as usize;
        let f = x - k as f64;
        {
            self.values[k] * (1.0 - f) + self.values[k + 1] * f
        }
    }

    fn eval_left(&self, t: f64) -> f64 {
        if t <= self.start {
            0.0
        } else {
            self.eval(t)
        }
    }

    fn support(&self) -> (f64, f64) {
        match self.tail {
            TabTail::Zero => (self.start, self.end()),
            TabTail::Power { .. } => (self.start, f64::INFINITY),
        }
    }

    fn breaks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let end = self.end();
        let a = ((lo - self.start) / self.step).floor().max(0.0) as usize;
        let b = (((hi.min(end)) - self.start) / self.step).ceil().max(0.0) as usize;
        let out: Vec<f64> = (a..=b.min(self.values.len() - 1))
            .map(|k| self.start + k as f64 * self.step)
            .filter(|&x| lo < x && x < hi)
            .collect();
        merge_breaks(out)
    }

    fn smooth_outside(&self) -> (f64, f64) {
        (self.start, self.end())
    }

    fn tails(&self) -> Tails {
        let right = match self.tail {
            TabTail::Zero => Decay::Compact,
            TabTail::Power { exponent, .. } => Decay::Power { exponent },
        };
        Tails::causal(right, self.declared)
    }

    fn describe(&self) -> String {
        let v: Vec<String> = self.values.iter().map(|x| fmt_f64(*x)).collect();
        let tail = match self.tail {
            TabTail::Zero => "zero".to_string(),
            TabTail::Power { exponent, .. } => fmt_f64(exponent),
        };
        format!(
            "tabulated:{}:{}:{}:{}:{}",
            fmt_f64(self.start),
            fmt_f64(self.step),
            tail,
            self.declared,
            v.join(",")
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_and_tail() {
        let vals: Vec<f64> = (0..=100).map(|k| 1.0 / (1.0 + k as f64 * 0.1)).collect();
        let k = Tabulated::new(1.0, 0.1, vals.clone(), None).unwrap();
        assert_eq!(k.eval(0.99), 0.0);
        assert_eq!(k.eval(1.0 + 3.0 * 0.1), vals[3]);
        let mid = 0.5 * (vals[3] + vals[4]);
        assert!((k.eval(1.35) - mid).abs() < 1e-15);
        // continuity at the end of the table
        assert!((k.eval(11.0 + 1e-12) - vals[100]).abs() < 1e-9);
        let rho = k.tail_exponent().unwrap();
        assert!((rho - 1.0).abs() < 1e-9, "{rho}");
        assert!((k.eval(22.0) - 0.5 / 11.0).abs() < 1e-12);
        assert!(!k.tails().exact);
    }

    #[test]
    fn declared_tail_is_exact() {
        let vals: Vec<f64> = (0..=64).map(|k| (1.0 + k as f64).powf(-0.7)).collect();
        let k = Tabulated::new(0.0, 1.0, vals, Some(0.7)).unwrap();
        assert!(k.tails().exact);
        assert_eq!(k.tail_exponent(), Some(0.7));
    }

    #[test]
    fn non_square_integrable_tail_rejected() {
        let vals: Vec<f64> = (0..=64).map(|k| (1.0 + k as f64).powf(-0.3)).collect();
        assert!(matches!(Tabulated::new(0.0, 1.0, vals.clone(), None), Err(Error::Domain(_))));
        assert!(matches!(Tabulated::new(0.0, 1.0, vals, Some(0.4)), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("k.csv");
        let vals: Vec<f64> = (0..=20).map(|k| (-(k as f64) * 0.25).exp()).collect();
        let k = Tabulated::new(0.0, 0.25, vals, None).unwrap();
        k.write_csv(&p).unwrap();
        let back = Tabulated::read_csv(&p, None).unwrap();
        assert_eq!(back.values(), k.values());
        assert_eq!(back.step(), k.step());
        std::fs::write(&p, "x,y\n0,1\n").unwrap();
        assert!(matches!(Tabulated::read_csv(&p, None), Err(Error::Csv(_))));
    }

    #[test]
    fn zero_table_is_compact() {
        let k = Tabulated::new(0.0, 0.5, vec![0.0; 10], None).unwrap();
        assert_eq!(k.tails().right, Decay::Compact);
        assert_eq!(k.eval(100.0), 0.0);
    }
}
