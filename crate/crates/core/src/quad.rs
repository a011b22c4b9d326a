//! Quadrature primitives.
//!
//! Integrals are split at the non-smooth points of the integrand and each
//! smooth piece is integrated with adaptive 16-point Gauss-Legendre panels.
//! Half-lines use geometrically growing panels; a power-law remainder is
//! extrapolated from the ratio of successive panel contributions.

use std::sync::OnceLock;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pnm1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

fn gl16_rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// One 16-point Gauss-Legendre panel on `[a, b]`.
pub fn gl16<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    gl16_rule().iter().map(|&(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

/// Accuracy targets for adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Tol {
    pub rel: f64,
    pub abs: f64,
    pub max_depth: u32,
}

impl Default for Tol {
    fn default() -> Self {
        Tol {
            rel: 1e-13,
            abs: 1e-300,
            max_depth: 40,
        }
    }
}

/// Most panel splits one adaptive call may perform. Integrands that are
/// pure rounding noise (a cancelling lag combination, say) never meet a
/// relative target; the budget bounds the work spent on them.
pub const MAX_SPLITS: usize = 500;

struct Panel {
    a: f64,
    b: f64,
    l: f64,
    r: f64,
    err: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn panel<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, whole: f64, depth: u32) -> Panel {
    let m = 0.5 * (a + b);
    let l = gl16(f, a, m);
    let r = gl16(f, m, b);
    Panel { a, b, l, r, err: (l + r - whole).abs(), depth }
}

/// Adaptive integral over a finite interval assumed smooth inside.
///
/// A panel is split while its halves-versus-whole difference exceeds
/// `rel` times the magnitude of the first estimate on `[a, b]`, so rounding
/// noise in tiny sub-panels does not force needless refinement. Panels
/// with the largest discrepancy are split first, at most [`MAX_SPLITS`]
/// times.
pub fn adaptive<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tol) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let whole = gl16(f, a, b);
    let first = panel(f, a, b, whole, 0);
    let target = tol.rel * whole.abs().max(first.l.abs() + first.r.abs()) + tol.abs;
    let mut done = 0.0;
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(first);
    let mut splits = 0;
    while let Some(p) = heap.pop() {
        let m = 0.5 * (p.a + p.b);
        if p.err <= target || p.depth >= tol.max_depth || m <= p.a || m >= p.b || splits >= MAX_SPLITS {
            done += p.l + p.r;
            // everything left has a smaller discrepancy
            if p.err <= target || splits >= MAX_SPLITS {
                done += heap.drain().map(|q| q.l + q.r).sum::<f64>();
                break;
            }
            continue;
        }
        splits += 1;
        heap.push(panel(f, p.a, m, p.l, p.depth + 1));
        heap.push(panel(f, m, p.b, p.r, p.depth + 1));
    }
    done
}

/// Integral over `[lo, hi]`, split at `breaks` and into panels no longer
/// than `max_panel`.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    max_panel: f64,
    tol: Tol,
) -> f64 {
    if !(hi > lo) {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > lo && x < hi).collect();
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
    let mut total = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / max_panel).ceil().max(1.0) as usize;
        let h = (b - a) / pieces as f64;
        for k in 0..pieces {
            let pa = a + k as f64 * h;
            let pb = if k + 1 == pieces { b } else { pa + h };
            total += adaptive(f, pa, pb, tol);
        }
    }
    total
}

/// How an integrand behaves towards infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailKind {
    /// Identically zero beyond some point, or exponentially small.
    Fast,
    /// Decays like a power `x^{-p}` with `p > 1`.
    Slow,
}

/// Result of a half-line integral.
#[derive(Clone, Copy, Debug)]
pub struct HalfLine {
    pub value: f64,
    /// Extrapolated contribution beyond the last panel (already in `value`).
    pub remainder: f64,
    pub converged: bool,
}

/// Integral over `[a, ∞)` using panels of length `len·2^k`.
///
/// `breaks` is consulted per panel so kernels with isolated kinks in the
/// tail are still split correctly.
pub fn integrate_to_infinity<F, B>(f: &F, a: f64, len: f64, kind: TailKind, breaks: &B, tol: Tol) -> HalfLine
where
    F: Fn(f64) -> f64 + ?Sized,
    B: Fn(f64, f64) -> Vec<f64> + ?Sized,
{
    let mut total = 0.0f64;
    let mut lo = a;
    let mut width = len;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut quiet = 0;
    for k in 0..120 {
        let hi = lo + width;
        // far panels only need accuracy relative to what has accumulated
        let panel_tol = Tol { abs: tol.abs.max(tol.rel * total.abs()), ..tol };
        let piece = integrate(f, lo, hi, &breaks(lo, hi), width, panel_tol);
        total += piece;
        match kind {
            TailKind::Fast => {
                if piece.abs() <= 1e-17 * total.abs() || piece == 0.0 {
                    quiet += 1;
                    if quiet >= 3 {
                        return HalfLine { value: total, remainder: 0.0, converged: true };
                    }
                } else {
                    quiet = 0;
                }
            }
            TailKind::Slow => {
                if let Some(p) = prev {
                    if p != 0.0 && k >= 6 {
                        let r = piece / p;
                        if r > 0.0 && r < 1.0 {
                            if let Some(pr) = prev_ratio {
                                let rem = piece * r / (1.0 - r);
                                let drift = (r - pr).abs() / (1.0 - r);
                                if (rem * drift).abs() <= tol.rel * total.abs().max(1e-300) * 10.0
                                    || rem.abs() <= 1e-16 * total.abs()
                                {
                                    return HalfLine { value: total + rem, remainder: rem, converged: true };
                                }
                            }
                            prev_ratio = Some(r);
                        } else if piece == 0.0 {
                            return HalfLine { value: total, remainder: 0.0, converged: true };
                        }
                    }
                }
            }
        }
        prev = Some(piece);
        lo = hi;
        width *= 2.0;
    }
    // budget exhausted: add the best remainder guess and flag it
    let rem = match (prev, prev_ratio) {
        (Some(p), Some(r)) if r > 0.0 && r < 1.0 => p * r / (1.0 - r),
        _ => 0.0,
    };
    HalfLine { value: total + rem, remainder: rem, converged: kind == TailKind::Fast }
}

/// Trapezoid rule on equally spaced samples with one Richardson step when
/// the interval count is even. `left`/`right` hold one-sided limits so
/// integrands with jumps at nodes are handled exactly at first order.
pub fn richardson_trapezoid(left: &[f64], right: &[f64], step: f64) -> f64 {
    debug_assert_eq!(left.len(), right.len());
    let n = left.len();
    if n < 2 {
        return 0.0;
    }
    let node = |i: usize| -> f64 {
        if i == 0 {
            right[0]
        } else if i == n - 1 {
            left[n - 1]
        } else {
            0.5 * (left[i] + right[i])
        }
    };
    let trap = |stride: usize| -> f64 {
        let mut s = 0.5 * (node(0) + node(n - 1));
        let mut i = stride;
        while i < n - 1 {
            s += node(i);
            i += stride;
        }
        s * step * stride as f64
    };
    let fine = trap(1);
    if (n - 1).is_multiple_of(2) && n >= 5 {
        let coarse = trap(2);
        (4.0 * fine - coarse) / 3.0
    } else {
        fine
    }
}
