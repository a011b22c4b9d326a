//! Two-sided sequences known on a finite window plus a tail model, and
//! their `ℓ^p` norms, inner products and convolutions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Model for the values beyond one end of the window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeqTail {
    /// Identically zero.
    Zero,
    /// `v_k = v_edge · ratio^{|k - edge|}`.
    Geometric { ratio: f64 },
    /// `v_k = constant · |k|^{-exponent}`.
    Power { exponent: f64, constant: f64 },
}

impl SeqTail {
    /// Power tail through the point `(k, v)` with a known exponent.
    pub fn power_through(k: i64, v: f64, exponent: f64) -> SeqTail {
        SeqTail::Power {
            exponent,
            constant: v * (k.unsigned_abs() as f64).powf(exponent),
        }
    }

    pub fn exponent(&self) -> Option<f64> {
        match *self {
            SeqTail::Power { exponent, .. } => Some(exponent),
            _ => None,
        }
    }
}

/// `v_k` for `k ∈ [start, start + len)` explicitly, tails outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailedSequence {
    pub start: i64,
    pub values: Vec<f64>,
    pub left: SeqTail,
    pub right: SeqTail,
}

/// A norm or sum together with the part contributed by the tail models.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracketed {
    pub value: f64,
    /// Window radius `S` (largest `|k|` summed explicitly).
    pub radius: i64,
    /// Bound on the tail contribution included in `value`.
    pub tail_bound: f64,
}

/// `Σ_{k ≥ s} |C|^p k^{-pe}` bracketed by integrals: returns
/// `(midpoint estimate, upper bound)`.
fn power_tail_sum(c: f64, e: f64, p: f64, first: f64) -> (f64, f64) {
    let q = p * e;
    if !(q > 1.0) {
        return (f64::INFINITY, f64::INFINITY);
    }
    let cp = c.abs().powf(p);
    let mid = cp * (first - 0.5).powf(1.0 - q) / (q - 1.0);
    let upper = cp * (first.powf(-q) + first.powf(1.0 - q) / (q - 1.0));
    (mid, upper)
}

impl TailedSequence {
    pub fn finite(start: i64, values: Vec<f64>) -> Self {
        TailedSequence {
            start,
            values,
            left: SeqTail::Zero,
            right: SeqTail::Zero,
        }
    }

    /// Symmetric sequence from `v_0, v_1, …` with the same tail on both sides.
    pub fn even(half: &[f64], tail: SeqTail) -> Self {
        let n = half.len() as i64;
        let mut values: Vec<f64> = half[1..].iter().rev().copied().collect();
        values.extend_from_slice(half);
        TailedSequence {
            start: -(n - 1),
            values,
            left: tail,
            right: tail,
        }
    }

    /// `k ↦ v_{-k}`.
    pub fn reversed(&self) -> TailedSequence {
        let mut values = self.values.clone();
        values.reverse();
        TailedSequence {
            start: -self.end(),
            values,
            left: self.right,
            right: self.left,
        }
    }

    /// `k ↦ v_{k+j}`. Power tails keep their law in `|k|`, which is exact
    /// to leading order.
    pub fn shifted(&self, j: i64) -> TailedSequence {
        TailedSequence {
            start: self.start - j,
            values: self.values.clone(),
            left: self.left,
            right: self.right,
        }
    }

    pub fn end(&self) -> i64 {
        self.start + self.values.len() as i64 - 1
    }

    pub fn radius(&self) -> i64 {
        self.start.abs().max(self.end().abs())
    }

    /// `v_k` for any `k`, from the window or the tail models.
    pub fn get(&self, k: i64) -> f64 {
        if k < self.start {
            match self.left {
                SeqTail::Zero => 0.0,
                SeqTail::Geometric { ratio } => self.values[0] * ratio.powi((self.start - k) as i32),
                SeqTail::Power { exponent, constant } => constant * (k.unsigned_abs() as f64).powf(-exponent),
            }
        } else if k > self.end() {
            match self.right {
                SeqTail::Zero => 0.0,
                SeqTail::Geometric { ratio } => {
                    self.values[self.values.len() - 1] * ratio.powi((k - self.end()) as i32)
                }
                SeqTail::Power { exponent, constant } => constant * (k.unsigned_abs() as f64).powf(-exponent),
            }
        } else {
            self.values[(k - self.start) as usize]
        }
    }

    /// Continuous extension of a power tail, used for midpoint integrals.
    fn tail_fn(&self, x: f64) -> f64 {
        let t = if x < 0.0 { self.left } else { self.right };
        match t {
            SeqTail::Power { exponent, constant } => constant * x.abs().powf(-exponent),
            _ => 0.0,
        }
    }

    fn side_sum_p(&self, tail: SeqTail, edge_value: f64, first: f64, p: f64) -> (f64, f64) {
        match tail {
            SeqTail::Zero => (0.0, 0.0),
            SeqTail::Geometric { ratio } => {
                let r = ratio.abs().powf(p);
                if r >= 1.0 {
                    (f64::INFINITY, f64::INFINITY)
                } else {
                    let s = edge_value.abs().powf(p) * r / (1.0 - r);
                    (s, s)
                }
            }
            SeqTail::Power { exponent, constant } => power_tail_sum(constant, exponent, p, first),
        }
    }

    /// `‖v‖_{ℓ^p}` including tails; `+∞` when a tail is not `p`-summable.
    pub fn lp_norm(&self, p: f64) -> Bracketed {
        let radius = self.radius();
        if p.is_infinite() {
            let mut m = self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let mut tail_bound: f64 = 0.0;
            for (tail, edge, k) in [
                (self.left, self.values[0], self.start - 1),
                (self.right, self.values[self.values.len() - 1], self.end() + 1),
            ] {
                let sup = match tail {
                    SeqTail::Zero => 0.0,
                    SeqTail::Geometric { ratio } if ratio.abs() < 1.0 => (edge * ratio).abs(),
                    SeqTail::Geometric { .. } => f64::INFINITY,
                    SeqTail::Power { exponent, constant } => {
                        let k = (k.unsigned_abs() as f64).max(1.0);
                        if exponent >= 0.0 { (constant * k.powf(-exponent)).abs() } else { f64::INFINITY }
                    }
                };
                tail_bound = tail_bound.max(sup);
            }
            m = m.max(tail_bound);
            return Bracketed { value: m, radius, tail_bound };
        }
        let body: f64 = self.values.iter().map(|x| x.abs().powf(p)).sum();
        let (lm, lb) = self.side_sum_p(self.left, self.values[0], (1 - self.start) as f64, p);
        let (rm, rb) = self.side_sum_p(self.right, self.values[self.values.len() - 1], (self.end() + 1) as f64, p);
        let total = body + lm + rm;
        Bracketed {
            value: total.powf(1.0 / p),
            radius,
            tail_bound: (lb + rb).powf(1.0 / p),
        }
    }

    /// `Σ_k u_k v_k` over all `k`, tails included.
    pub fn dot(&self, other: &TailedSequence) -> Result<Bracketed> {
        let lo = self.start.min(other.start);
        let hi = self.end().max(other.end());
        let mut body = 0.0;
        for k in lo..=hi {
            body += self.get(k) * other.get(k);
        }
        let mut tail = 0.0;
        let mut bound = 0.0;
        for right in [false, true] {
            let (a, b) = if right { (self.right, other.right) } else { (self.left, other.left) };
            let edge = if right { hi } else { lo };
            let dir = if right { 1 } else { -1 };
            let (m, ub) = match (a, b) {
                (SeqTail::Zero, _) | (_, SeqTail::Zero) => (0.0, 0.0),
                (SeqTail::Power { exponent: e1, constant: c1 }, SeqTail::Power { exponent: e2, constant: c2 }) => {
                    let (m, ub) = power_tail_sum((c1 * c2).abs(), e1 + e2, 1.0, (edge.abs() + 1) as f64);
                    ((c1 * c2).signum() * m, ub)
                }
                _ => {
                    // at least one geometric factor: sum explicitly until negligible
                    let mut s = 0.0;
                    let mut k = edge + dir;
                    let mut quiet = 0;
                    for _ in 0..1_000_000 {
                        let t = self.get(k) * other.get(k);
                        s += t;
                        if t.abs() <= 1e-18 * (body.abs() + s.abs()) {
                            quiet += 1;
                            if quiet > 8 {
                                break;
                            }
                        } else {
                            quiet = 0;
                        }
                        k += dir;
                    }
                    (s, s.abs())
                }
            };
            if !m.is_finite() {
                return Err(Error::Convergence(format!(
                    "product of the {} tails is not summable",
                    if right { "right" } else { "left" }
                )));
            }
            tail += m;
            bound += ub;
        }
        Ok(Bracketed {
            value: body + tail,
            radius: lo.abs().max(hi.abs()),
            tail_bound: bound,
        })
    }

    /// `w_s = Σ_u a_u v_{s+u}` (correlation with `a` read in reverse, which is
    /// the convolution for even `a`) on `s ∈ [-radius, radius]`.
    ///
    /// Window terms are summed exactly; the part of the sum where both factors
    /// are in power tails is added as a midpoint integral. The result's tails
    /// are power laws with the given exponent fitted through the window edge,
    /// or zero when both inputs are finite.
    pub fn correlate(&self, a: &TailedSequence, radius: i64, out_exponent: Option<f64>) -> Result<TailedSequence> {
        let a_lo = a.start;
        let a_hi = a.end();
        let mut values = Vec::with_capacity((2 * radius + 1) as usize);
        for s in -radius..=radius {
            let mut w = 0.0;
            for u in a_lo..=a_hi {
                w += a.values[(u - a_lo) as usize] * self.get(s + u);
            }
            // a's tails: beyond its window v is also far out, so use both
            // continuous extensions
            for (tail, from, dir) in [(a.right, a_hi, 1.0), (a.left, a_lo, -1.0)] {
                if let SeqTail::Power { .. } = tail {
                    let g = |x: f64| a.tail_fn(dir * x) * self.get_ext(s as f64 + dir * x);
                    w += midpoint_tail(&g, from.unsigned_abs() as f64 + 0.5)?;
                } else if let SeqTail::Geometric { .. } = tail {
                    let mut u = from + dir as i64;
                    loop {
                        let t = a.get(u) * self.get(s + u);
                        w += t;
                        if t.abs() <= 1e-18 * w.abs().max(1e-300) || (u - from).abs() > 100_000 {
                            break;
                        }
                        u += dir as i64;
                    }
                }
            }
            values.push(w);
        }
        let finite = matches!((self.left, self.right, a.left, a.right), (SeqTail::Zero, SeqTail::Zero, SeqTail::Zero, SeqTail::Zero));
        let (left, right) = if finite {
            (SeqTail::Zero, SeqTail::Zero)
        } else if let Some(e) = out_exponent {
            let n = values.len();
            (
                SeqTail::power_through(-radius, values[0], e),
                SeqTail::power_through(radius, values[n - 1], e),
            )
        } else {
            (SeqTail::Zero, SeqTail::Zero)
        };
        Ok(TailedSequence {
            start: -radius,
            values,
            left,
            right,
        })
    }

    /// Value at real argument: window values at integers, tail laws beyond.
    fn get_ext(&self, x: f64) -> f64 {
        if x < self.start as f64 - 0.5 || x > self.end() as f64 + 0.5 {
            let tail = if x < 0.0 { self.left } else { self.right };
            match tail {
                SeqTail::Power { exponent, constant } => constant * x.abs().powf(-exponent),
                _ => self.get(x.round() as i64),
            }
        } else {
            self.get(x.round() as i64)
        }
    }
}

/// `∫_a^∞ g` for a power-decaying `g` over doubling panels.
fn midpoint_tail(g: &dyn Fn(f64) -> f64, a: f64) -> Result<f64> {
    let hl = crate::quad::integrate_to_infinity(
        g,
        a,
        a.max(1.0),
        crate::quad::TailKind::Slow,
        &|_, _| Vec::new(),
        crate::quad::Tol { rel: 1e-10, ..Default::default() },
    );
    if !hl.value.is_finite() {
        return Err(Error::Convergence("tail integral diverges".into()));
    }
    Ok(hl.value)
}

/// `‖v‖_{ℓ^p}` of a windowed sequence with a tail model.
pub fn lp_norm_sequence(seq: &TailedSequence, p: f64) -> Result<Bracketed> {
    if !(p >= 1.0) {
        return Err(Error::domain(format!("ℓ^p needs p ≥ 1, got {p}")));
    }
    Ok(seq.lp_norm(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn exp_seq(n: usize) -> TailedSequence {
        let half: Vec<f64> = (0..n).map(|k| (-(k as f64)).exp()).collect();
        TailedSequence::even(&half, SeqTail::Geometric { ratio: (-1f64).exp() })
    }

    #[test]
    fn geometric_l1() {
        let e = (-1f64).exp();
        let want = (1.0 + e) / (1.0 - e);
        assert!((want - 2.163953).abs() < 1e-6);
        for n in [1, 5, 40] {
            let got = exp_seq(n).lp_norm(1.0).value;
            assert!((got - want).abs() < 1e-13, "{n}: {got}");
        }
    }

    #[test]
    fn harmonic_type_diverges() {
        let half: Vec<f64> = (0..100).map(|k| if k == 0 { 0.0 } else { (k as f64).powf(-0.9) }).collect();
        let s = TailedSequence::even(&half, SeqTail::power_through(99, half[99], 0.9));
        assert_eq!(s.lp_norm(1.0).value, f64::INFINITY);
        assert!(s.lp_norm(2.0).value.is_finite());
        assert_eq!(s.lp_norm(f64::INFINITY).value, 1.0);
    }

    #[test]
    fn power_tail_sum_matches_zeta() {
        // Σ_{k≥1} k^{-2} = π²/6
        let half: Vec<f64> = (0..200).map(|k| if k == 0 { 0.0 } else { (k as f64).powi(-2) }).collect();
        let s = TailedSequence {
            start: 0,
            values: half.clone(),
            left: SeqTail::Zero,
            right: SeqTail::power_through(199, half[199], 2.0),
        };
        let v = s.lp_norm(1.0);
        let z2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((v.value - z2).abs() < 1e-7, "{}", v.value - z2);
        assert!(v.tail_bound >= 1.0 / 200.0);
    }

    #[test]
    fn dot_of_geometric_sequences() {
        let s = exp_seq(3);
        let e2 = (-2f64).exp();
        let want = (1.0 + e2) / (1.0 - e2);
        let got = s.dot(&s).unwrap().value;
        assert!((got - want).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn correlate_with_delta_is_identity() {
        let s = exp_seq(30);
        let delta = TailedSequence::finite(0, vec![1.0]);
        let w = s.correlate(&delta, 10, None).unwrap();
        for k in -10..=10 {
            assert_eq!(w.get(k), s.get(k));
        }
    }

    proptest! {
        #[test]
        fn lp_norms_decrease_in_p(vals in proptest::collection::vec(-5.0f64..5.0, 1..40)) {
            let s = TailedSequence::finite(-3, vals);
            let n1 = s.lp_norm(1.0).value;
            let n2 = s.lp_norm(2.0).value;
            let ni = s.lp_norm(f64::INFINITY).value;
            prop_assert!(n2 <= n1 * (1.0 + 1e-12) + 1e-300);
            prop_assert!(ni <= n2 * (1.0 + 1e-12) + 1e-300);
        }

        #[test]
        fn finite_correlation_matches_brute_force(
            v in proptest::collection::vec(-2.0f64..2.0, 1..20),
            a in proptest::collection::vec(-2.0f64..2.0, 1..6),
        ) {
            let sv = TailedSequence::finite(-2, v.clone());
            let sa = TailedSequence::finite(-1, a.clone());
            let w = sv.correlate(&sa, 8, None).unwrap();
            for s in -8i64..=8 {
                let mut want = 0.0;
                for (j, av) in a.iter().enumerate() {
                    let u = j as i64 - 1;
                    want += av * sv.get(s + u);
                }
                prop_assert!((w.get(s) - want).abs() < 1e-12);
            }
        }
    }
}
