//! Breiman constants, exact product tails and their Monte Carlo counterparts.
//!
//! Under conditional dependence with `F̄ ∈ R_{-α}`,
//! `P(XY > x) ~ E[Y^α s(Y)] F̄(x)`. This module computes the constant by
//! quadrature or sampling, the exact `P(XY > x)` as
//! `∫ P(X > x/y | Y = y) G(dy)`, a one-pass Monte Carlo ratio over several
//! thresholds, and a finite-`x` check of the uniformity that defines the class.

use serde::{Deserialize, Serialize};

use crate::dependence::{normalization, CdModel};
use crate::error::{Error, Result, Warning};
use crate::marginals::Extended;
use crate::mc::{run_blocks, RngStream, RunConfig, Tally};
use crate::quadrature;
use crate::stats::Proportion;

/// Fewer hits than this attach an [`Warning::InsufficientHits`].
pub const MIN_HITS: u64 = 100;
/// Smallest Monte Carlo sample accepted by the ratio estimators.
pub const MIN_SAMPLES: u64 = 10_000;
/// Largest `F̄(x)` still treated as the tail region.
pub const MAX_TAIL_PROB: f64 = 0.1;
/// Default `ε` for the stronger moment condition `E Y^{α+ε} s(Y) < ∞`.
pub const DEFAULT_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BreimanMethod {
    Quadrature,
    MonteCarlo { n: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreimanEstimate {
    pub value: Extended,
    /// Standard error; zero for quadrature.
    pub stderr: f64,
}

/// `E[Y^α s(Y)]`.
pub fn breiman_constant(m: &CdModel, alpha: f64, method: BreimanMethod, run: &RunConfig) -> Result<BreimanEstimate> {
    if m.non_cd() {
        return Err(Error::NotCd);
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be >= 0, got {alpha}")));
    }
    let h = |y: f64| y_power(y, alpha) * m.s_fn(y);
    match method {
        BreimanMethod::Quadrature => {
            let value = quadrature::expectation(m.y_marginal(), h)?;
            Ok(BreimanEstimate { value, stderr: 0.0 })
        }
        BreimanMethod::MonteCarlo { n, seed } => {
            if n < 2 {
                return Err(Error::InvalidParameter("Monte Carlo needs at least 2 samples".into()));
            }
            let g = *m.y_marginal();
            let merged = run_blocks(run, n, seed, 0, 2, |s, t| {
                let v = h(g.sample(s));
                t.sums[0] += v;
                t.sums[1] += v * v;
                Ok(())
            })?;
            let nf = n as f64;
            let mean = merged.mean(0);
            let var = ((merged.mean(1) - mean * mean) * nf / (nf - 1.0)).max(0.0);
            Ok(BreimanEstimate { value: Extended::Finite(mean), stderr: (var / nf).sqrt() })
        }
    }
}

fn y_power(y: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        1.0
    } else if y <= 0.0 {
        0.0
    } else {
        y.powf(alpha)
    }
}

/// Which moment condition licenses the asymptotic prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentCase {
    /// `E Y^{α+ε} s(Y) < ∞`.
    Strong,
    /// Only `E Y^α s(Y) < ∞`.
    WeakOnly,
    /// Even `E Y^α s(Y)` diverges.
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub alpha: f64,
    pub epsilon: f64,
    pub constant: Extended,
    pub higher: Extended,
    pub case: MomentCase,
}

pub fn moment_case(m: &CdModel, alpha: f64, epsilon: f64) -> Result<MomentReport> {
    let run = RunConfig::default();
    let constant = breiman_constant(m, alpha, BreimanMethod::Quadrature, &run)?.value;
    let higher = breiman_constant(m, alpha + epsilon, BreimanMethod::Quadrature, &run)?.value;
    let case = match (constant.is_finite(), higher.is_finite()) {
        (_, true) => MomentCase::Strong,
        (true, false) => MomentCase::WeakOnly,
        (false, false) => MomentCase::Neither,
    };
    Ok(MomentReport { alpha, epsilon, constant, higher, case })
}

/// Exact `P(XY > x) = ∫ P(X > x/y | Y = y) G(dy)` for `x > 0`.
pub fn product_tail_exact(m: &CdModel, x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("product tail needs finite x > 0, got {x}")));
    }
    let mut failure = None;
    let value = quadrature::expectation(m.y_marginal(), |y| {
        if y <= 0.0 {
            return 0.0;
        }
        match m.cond_tail(x / y, y) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    match value {
        Extended::Finite(v) => Ok(v.clamp(0.0, 1.0)),
        Extended::Divergent => Err(Error::Quadrature(format!("product tail at x = {x} did not converge"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioRow {
    pub x: f64,
    pub x_tail: f64,
    pub n_samples: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub ratio: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

impl TailRatioRow {
    pub(crate) fn new(x: f64, x_tail: f64, p: Proportion) -> Self {
        Self {
            x,
            x_tail,
            n_samples: p.n,
            hits: p.hits,
            p_hat: p.p_hat,
            stderr: p.stderr,
            ratio: p.p_hat / x_tail,
            ci_lo: p.ci_lo / x_tail,
            ci_hi: p.ci_hi / x_tail,
        }
    }

    /// Standard error of the ratio.
    pub fn ratio_stderr(&self) -> f64 {
        self.stderr / self.x_tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRatioReport {
    pub rows: Vec<TailRatioRow>,
    /// `None` when the constant diverges or the model is not CD.
    pub predicted_constant: Option<f64>,
    pub n_samples: u64,
    pub seed: u64,
    pub blocks: usize,
    pub warnings: Vec<Warning>,
}

pub(crate) fn check_thresholds(m: &CdModel, thresholds: &[f64], n: u64) -> Result<Vec<f64>> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("no thresholds".into()));
    }
    if thresholds.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("thresholds must be strictly ascending".into()));
    }
    thresholds
        .iter()
        .map(|&x| {
            let q = m.x_tail(x);
            if !(q > 0.0 && q <= MAX_TAIL_PROB) {
                Err(Error::Domain(format!("threshold {x} has F(x) tail {q}, outside (0, {MAX_TAIL_PROB}]")))
            } else {
                Ok(q)
            }
        })
        .collect()
}

pub(crate) fn count_exceedances(value: f64, thresholds: &[f64], hits: &mut [u64]) {
    // thresholds ascending: every threshold below value is exceeded
    let k = thresholds.partition_point(|&x| x < value);
    for h in &mut hits[..k] {
        *h += 1;
    }
}

pub(crate) fn build_report(
    thresholds: &[f64],
    tails: &[f64],
    hits: &[u64],
    n: u64,
    predicted_constant: Option<f64>,
    seed: u64,
    blocks: usize,
) -> TailRatioReport {
    let mut warnings = Vec::new();
    let rows = thresholds
        .iter()
        .zip(tails)
        .zip(hits)
        .map(|((&x, &q), &h)| {
            if h < MIN_HITS {
                warnings.push(Warning::InsufficientHits { x, hits: h });
            }
            TailRatioRow::new(x, q, Proportion::new(h, n))
        })
        .collect();
    TailRatioReport { rows, predicted_constant, n_samples: n, seed, blocks, warnings }
}

/// Finite Breiman constant at the model's tail index, if any.
pub(crate) fn predicted_constant(m: &CdModel) -> Result<Option<f64>> {
    if m.non_cd() {
        return Ok(None);
    }
    let Some(alpha) = m.x_rv_index() else { return Ok(None) };
    Ok(breiman_constant(m, alpha, BreimanMethod::Quadrature, &RunConfig::default())?.value.finite())
}

/// Draws one `XY` from sample stream `s`. Ruin paths start with the same draw.
pub(crate) fn draw_product(m: &CdModel, s: &mut RngStream) -> Result<f64> {
    let (x, y) = m.sample_joint(s)?;
    Ok(x * y)
}

/// Monte Carlo `P(XY > x) / F̄(x)` at every threshold from one pass of `n` pairs.
pub fn tail_ratio_mc(m: &CdModel, thresholds: &[f64], n: u64, seed: u64, run: &RunConfig) -> Result<TailRatioReport> {
    let tails = check_thresholds(m, thresholds, n)?;
    let merged = run_blocks(run, n, seed, thresholds.len(), 0, |s, t: &mut Tally<'_>| {
        count_exceedances(draw_product(m, s)?, thresholds, t.hits);
        Ok(())
    })?;
    Ok(build_report(thresholds, &tails, &merged.total.hits, n, predicted_constant(m)?, seed, run.blocks))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum YGridPolicy {
    /// `G` quantiles `0.01, 0.02, ..., 0.99`.
    FixedQuantiles,
    /// The fixed quantiles plus `y` with `Ḡ(y) ∈ {F̄(x), F̄(x)/2, F̄(x)/10}`.
    TailExtended,
    /// Fixed quantiles at or below `y_max`, plus `y_max` itself.
    Below { y_max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    ConsistentWithCd,
    NotCd,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::ConsistentWithCd => "ConsistentWithCd",
            Verdict::NotCd => "NotCd",
            Verdict::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdRow {
    pub x: f64,
    pub sup_deviation: f64,
    pub argmax_y: f64,
    pub grid_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdDiagnostic {
    pub rows: Vec<CdRow>,
    pub y_grid_policy: YGridPolicy,
    pub verdict: Verdict,
}

impl CdDiagnostic {
    pub fn max_deviation(&self) -> f64 {
        self.rows.iter().map(|r| r.sup_deviation).fold(0.0, f64::max)
    }
}

/// Decay target for [`Verdict::ConsistentWithCd`].
pub const CD_DECAY_TARGET: f64 = 0.05;
/// Deviation that triggers [`Verdict::NotCd`].
pub const NOT_CD_DEVIATION: f64 = 1.0;

fn y_grid(m: &CdModel, x_tail: f64, policy: &YGridPolicy) -> Vec<f64> {
    let g = m.y_marginal();
    let mut ys: Vec<f64> = (1..=99).map(|k| g.tail_quantile(1.0 - k as f64 / 100.0)).collect();
    match policy {
        YGridPolicy::FixedQuantiles => {}
        YGridPolicy::TailExtended => {
            for q in [x_tail, x_tail / 2.0, x_tail / 10.0] {
                let q = q.clamp(f64::MIN_POSITIVE, 1.0);
                ys.push(g.tail_quantile(q));
            }
        }
        YGridPolicy::Below { y_max } => {
            ys.retain(|y| y <= y_max);
            ys.push(*y_max);
        }
    }
    let (lo, hi) = g.support();
    for y in &mut ys {
        *y = y.clamp(lo, hi);
    }
    ys.retain(|&y| y > 0.0 && g.in_positive_support(y));
    ys
}

/// `sup_y |P(X > x | Y = y) / (F̄(x) s(y)) - 1|` over a `y` grid, for each `x`.
pub fn cd_diagnostic(m: &CdModel, x_grid: &[f64], policy: YGridPolicy) -> Result<CdDiagnostic> {
    if x_grid.is_empty() {
        return Err(Error::InvalidParameter("empty x grid".into()));
    }
    if x_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidParameter("x grid must be strictly ascending".into()));
    }
    let mut rows = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let fq = m.x_tail(x);
        let ys = y_grid(m, fq, &policy);
        let mut best = CdRow { x, sup_deviation: 0.0, argmax_y: f64::NAN, grid_size: ys.len() };
        for &y in &ys {
            let denom = fq * m.s_fn(y);
            let dev = if denom > 0.0 {
                (m.cond_tail(x, y)? / denom - 1.0).abs()
            } else {
                f64::INFINITY
            };
            if !(dev <= best.sup_deviation) {
                best.sup_deviation = dev;
                best.argmax_y = y;
            }
        }
        rows.push(best);
    }
    let devs: Vec<f64> = rows.iter().map(|r| r.sup_deviation).collect();
    let verdict = if devs.iter().any(|&d| d > NOT_CD_DEVIATION) {
        Verdict::NotCd
    } else if devs.windows(2).all(|w| w[1] < w[0]) && devs[devs.len() - 1] < CD_DECAY_TARGET {
        Verdict::ConsistentWithCd
    } else {
        Verdict::Inconclusive
    };
    Ok(CdDiagnostic { rows, y_grid_policy: policy, verdict })
}

/// `∫ s dG`, which is 1 for every valid pair.
pub fn e_s_check(m: &CdModel) -> Result<f64> {
    normalization(m)
}
