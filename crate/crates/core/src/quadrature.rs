//! Adaptive Gauss–Kronrod quadrature on finite intervals, plus expectations
//! against a marginal parametrised by its tail probability.
//!
//! Expectations `E h(Y)` are computed as `∫_0^1 h(Q(q)) dq` where `Q` is the
//! tail quantile (`P(Y > Q(q)) = q`). The range is cut into dyadic blocks
//! `[2^{-k-1}, 2^{-k}]` so that heavy upper tails are approached geometrically
//! and divergence shows up as non-decaying block contributions.

use std::cell::Cell;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::marginals::{Extended, Marginal};

// Gauss–Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Stopping rule: stop once the estimated error is below `max(abs, rel·|I|)`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-14,
            rel: 1e-12,
            max_evals: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_err: f64,
    pub evals: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let k = kronrod * half;
    let g = gauss * half;
    (k, (k - g).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive GK15 on the finite interval `[a, b]`.
///
/// Bisects the segment with the largest error estimate until the total error
/// meets `tol`. Segments that can no longer be split in floating point are
/// accepted as-is. Fails with [`Error::Quadrature`] when the evaluation budget
/// runs out or the integrand produces a non-finite value.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: Tolerance) -> Result<QuadResult> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, abs_err: 0.0, evals: 0 });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };

    let (v, e) = gk15(&mut f, lo, hi);
    let mut evals = 15;
    let mut heap = BinaryHeap::new();
    let mut total = v;
    let mut total_err = e;
    let mut frozen_err = 0.0;
    let mut frozen_value = 0.0;
    heap.push(Segment { a: lo, b: hi, value: v, err: e });

    loop {
        if !total.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite integrand value on [{lo}, {hi}]"
            )));
        }
        if total_err + frozen_err <= tol.abs.max(tol.rel * total.abs()) {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) < 1e-15 * seg.a.abs().max(1e-300) {
            // cannot split further; keep its contribution
            frozen_err += seg.err;
            frozen_value += seg.value;
            total_err -= seg.err;
            continue;
        }
        if evals + 30 > tol.max_evals {
            return Err(Error::Quadrature(format!(
                "tolerance not reached within {} evaluations (estimate {total:e} ± {:e})",
                tol.max_evals,
                total_err + frozen_err
            )));
        }
        let (v1, e1) = gk15(&mut f, seg.a, mid);
        let (v2, e2) = gk15(&mut f, mid, seg.b);
        evals += 30;
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.err;
        heap.push(Segment { a: seg.a, b: mid, value: v1, err: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, err: e2 });
    }
    // re-sum to shed accumulated cancellation in the running total
    let value = heap.iter().map(|s| s.value).sum::<f64>() + frozen_value;
    Ok(QuadResult {
        value: sign * value,
        abs_err: total_err.max(0.0) + frozen_err,
        evals,
    })
}

/// Value above which a partial sum is declared divergent.
pub const DIVERGENCE_BOUND: f64 = 1e12;
const MAX_BLOCKS: usize = 1000;
const BLOCK_REL_TOL: f64 = 1e-13;

/// `E h(Y)` restricted to the event `{P(Y > y) ≤ q_max}` (not normalised),
/// i.e. `∫_0^{q_max} h(Q(q)) dq`.
///
/// Returns [`Extended::Divergent`] when partial sums exceed
/// [`DIVERGENCE_BOUND`] or block contributions fail to decay within
/// 1000 dyadic blocks.
pub fn tail_integral<H: FnMut(f64) -> f64>(m: &Marginal, q_max: f64, mut h: H) -> Result<Extended> {
    if let Some(point) = m.point_mass() {
        return Ok(Extended::Finite(q_max.clamp(0.0, 1.0) * h(point)));
    }
    let q_max = q_max.clamp(0.0, 1.0);
    if q_max == 0.0 {
        return Ok(Extended::Finite(0.0));
    }
    let tol = Tolerance { abs: 0.0, rel: 1e-12, max_evals: 200_000 };
    let blew_up = Cell::new(false);
    let mut g = |q: f64| {
        let v = h(m.tail_quantile(q));
        if v.is_finite() {
            v
        } else {
            blew_up.set(true);
            0.0
        }
    };

    let mut sum = block_integral(&mut g, 0.5 * q_max, q_max, tol)?;
    if blew_up.get() {
        return Ok(Extended::Divergent);
    }
    let mut quiet = 0;
    let mut upper = 0.5 * q_max;
    for _ in 0..MAX_BLOCKS {
        let lower = 0.5 * upper;
        if lower < f64::MIN_POSITIVE {
            break;
        }
        // later blocks only need accuracy relative to the running sum
        let block_tol = Tolerance { abs: 1e-15 * sum.abs(), ..tol };
        let block = block_integral(&mut g, lower, upper, block_tol)?;
        sum += block;
        if blew_up.get() || !sum.is_finite() || sum.abs() > DIVERGENCE_BOUND {
            return Ok(Extended::Divergent);
        }
        if block.abs() <= BLOCK_REL_TOL * sum.abs() || block == 0.0 {
            quiet += 1;
            if quiet >= 3 {
                return Ok(Extended::Finite(sum));
            }
        } else {
            quiet = 0;
        }
        upper = lower;
    }
    Ok(Extended::Divergent)
}

/// Falls back to a looser relative tolerance when quantile round-off keeps
/// the strict one out of reach.
fn block_integral<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: Tolerance) -> Result<f64> {
    match integrate(&mut *f, a, b, tol) {
        Ok(r) => Ok(r.value),
        Err(Error::Quadrature(_)) => Ok(integrate(f, a, b, Tolerance { rel: 1e-7, ..tol })?.value),
        Err(e) => Err(e),
    }
}

/// `E h(Y)` over the whole law of `m`.
pub fn expectation<H: FnMut(f64) -> f64>(m: &Marginal, h: H) -> Result<Extended> {
    tail_integral(m, 1.0, h)
}

/// `E h(Y)` for an integrand known to be bounded; divergence is reported as an error.
pub fn expectation_finite<H: FnMut(f64) -> f64>(m: &Marginal, h: H) -> Result<f64> {
    match expectation(m, h)? {
        Extended::Finite(v) => Ok(v),
        Extended::Divergent => Err(Error::Quadrature(
            "expectation of a bounded integrand did not converge".into(),
        )),
    }
}
