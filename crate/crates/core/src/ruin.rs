//! Discrete-time risk model with stochastic discounting.
//!
//! With i.i.d. pairs `(X_i, Y_i)`, the discounted aggregate loss is
//! `S_n = Σ_{i≤n} X_i ∏_{j≤i} Y_j` and the ruin probabilities are
//! `ψ(x, n) = P(max_{k≤n} S_k > x)` and `ψ(x) = lim_n ψ(x, n)`.
//! For conditionally dependent pairs with `r = E Y^α` and `C = E Y^α s(Y)`,
//! `ψ(x, n) ~ C (1 - r^n)/(1 - r) F̄(x)` and `ψ(x) ~ C/(1 - r) F̄(x)`.

use serde::{Deserialize, Serialize};

use crate::dependence::CdModel;
use crate::error::{Error, Result, Warning};
use crate::estimators::{
    breiman_constant, build_report, check_thresholds, count_exceedances, moment_case, BreimanMethod, MomentCase,
    TailRatioReport, DEFAULT_EPSILON, MIN_HITS,
};
use crate::marginals::Extended;
use crate::mc::{run_blocks, RngStream, RunConfig};
use crate::quadrature;
use crate::stats::Proportion;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Finite(u64),
    Infinite(Infinite),
}

/// `"inf"` in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Infinite {
    Inf,
}

/// Largest depth the infinite-horizon simulation will use.
pub const MAX_DEPTH: u64 = 10_000;
const UNIT_TOL: f64 = 1e-12;

/// A pair law together with its tail index and derived constants.
#[derive(Debug, Clone)]
pub struct RiskModel {
    pair: CdModel,
    alpha: f64,
    r: Extended,
    constant: Extended,
    epsilon: f64,
}

impl RiskModel {
    /// Uses the regular-variation index of the pair's `X` law.
    pub fn new(pair: CdModel) -> Result<Self> {
        let alpha = pair
            .x_rv_index()
            .ok_or_else(|| Error::InvalidParameter("X marginal is not regularly varying".into()))?;
        Self::with_alpha(pair, alpha)
    }

    pub fn with_alpha(pair: CdModel, alpha: f64) -> Result<Self> {
        pair.validate().into_result()?;
        if pair.non_cd() {
            return Err(Error::NotCd);
        }
        let r = quadrature::expectation(pair.y_marginal(), |y| if y > 0.0 { y.powf(alpha) } else { 0.0 })?;
        let constant = breiman_constant(&pair, alpha, BreimanMethod::Quadrature, &RunConfig::default())?.value;
        Ok(Self { pair, alpha, r, constant, epsilon: DEFAULT_EPSILON })
    }

    /// `ε` of the stronger moment condition.
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn pair(&self) -> &CdModel {
        &self.pair
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `E Y^α`.
    pub fn discount_moment(&self) -> Result<f64> {
        self.r.require("E Y^alpha")
    }

    /// `E Y^α s(Y)`.
    pub fn constant(&self) -> Result<f64> {
        self.constant.require("E Y^alpha s(Y)")
    }

    /// Multiplier of `F̄(x)` in the finite-horizon asymptotic.
    pub fn asymptotic_psi_n(&self, n: u64) -> Result<f64> {
        let c = self.constant()?;
        let r = self.discount_moment()?;
        if (r - 1.0).abs() < UNIT_TOL {
            return Ok(n as f64 * c);
        }
        Ok(c * (1.0 - r.powf(n as f64)) / (1.0 - r))
    }

    /// Multiplier of `F̄(x)` in the infinite-horizon asymptotic, with a
    /// warning when only the weaker moment condition holds.
    pub fn asymptotic_psi_inf(&self) -> Result<(f64, Vec<Warning>)> {
        let r = self.discount_moment()?;
        if r >= 1.0 {
            return Err(Error::Contraction(r));
        }
        let c = self.constant()?;
        let mut warnings = Vec::new();
        if moment_case(&self.pair, self.alpha, self.epsilon)?.case != MomentCase::Strong {
            warnings.push(Warning::CaseIiOnly);
        }
        Ok((c / (1.0 - r), warnings))
    }

    /// `r^{i-1} C`, the multiplier for `P(X_i ∏_{j≤i} Y_j > x)`.
    pub fn term_prediction(&self, i: u64) -> Result<f64> {
        if i == 0 {
            return Err(Error::InvalidParameter("term index starts at 1".into()));
        }
        Ok(self.discount_moment()?.powf((i - 1) as f64) * self.constant()?)
    }

    /// Depth `n*` beyond which the remaining terms are negligible:
    /// the smallest `n` with `C r^n / (1 - r) < tail_tol F̄(max x) / 10`.
    pub fn truncation_depth(&self, tail_tol: f64, max_x: f64) -> Result<u64> {
        if !(tail_tol > 0.0 && tail_tol < 0.01) {
            return Err(Error::InvalidParameter(format!("tail_tol must be in (0, 0.01), got {tail_tol}")));
        }
        let r = self.discount_moment()?;
        if r >= 1.0 {
            return Err(Error::Contraction(r));
        }
        let c = self.constant()?;
        let target = tail_tol * self.pair.x_tail(max_x) / 10.0;
        if !(target > 0.0) {
            return Err(Error::Domain(format!("F tail vanishes at {max_x}")));
        }
        let mut n = 1;
        while c * r.powf(n as f64) / (1.0 - r) >= target {
            n += 1;
            if n > MAX_DEPTH {
                return Err(Error::InvalidParameter(format!("truncation depth exceeds {MAX_DEPTH}")));
            }
        }
        Ok(n)
    }

    /// Simulates `n` periods on the sample stream, returning the running
    /// maximum, the terminal value and the positive-part bound.
    fn path(&self, s: &mut RngStream, n: u64) -> Result<(f64, f64, f64)> {
        let (mut discount, mut total, mut upper) = (1.0, 0.0, 0.0);
        let mut max = f64::NEG_INFINITY;
        for _ in 0..n {
            let (x, y) = self.pair.sample_joint(s)?;
            discount *= y;
            total += x * discount;
            upper += x.max(0.0) * discount;
            max = max.max(total);
        }
        Ok((max, total, upper))
    }

    fn simulate(
        &self,
        x_grid: &[f64],
        depth: u64,
        horizon: Horizon,
        multiplier: f64,
        n_samples: u64,
        seed: u64,
        run: &RunConfig,
        mut warnings: Vec<Warning>,
    ) -> Result<RuinResult> {
        let tails = check_thresholds(&self.pair, x_grid, n_samples)?;
        let k = x_grid.len();
        let merged = run_blocks(run, n_samples, seed, 3 * k, 0, |s, t| {
            let (max, terminal, upper) = self.path(s, depth)?;
            count_exceedances(max, x_grid, &mut t.hits[..k]);
            count_exceedances(terminal, x_grid, &mut t.hits[k..2 * k]);
            count_exceedances(upper, x_grid, &mut t.hits[2 * k..]);
            Ok(())
        })?;
        let hits = &merged.total.hits;
        let rows = (0..k)
            .map(|j| {
                if hits[j] < MIN_HITS {
                    warnings.push(Warning::InsufficientHits { x: x_grid[j], hits: hits[j] });
                }
                let p = Proportion::new(hits[j], n_samples);
                let prediction = multiplier * tails[j];
                RuinRow {
                    x: x_grid[j],
                    x_tail: tails[j],
                    hits: hits[j],
                    psi_hat: p.p_hat,
                    stderr: p.stderr,
                    ci_lo: p.ci_lo,
                    ci_hi: p.ci_hi,
                    prediction,
                    ratio_to_prediction: p.p_hat / prediction,
                    terminal_p: hits[k + j] as f64 / n_samples as f64,
                    upper_p: hits[2 * k + j] as f64 / n_samples as f64,
                }
            })
            .collect();
        Ok(RuinResult { rows, horizon, depth, multiplier, n_samples, seed, blocks: run.blocks, warnings })
    }

    /// Monte Carlo `ψ(x, n)` at every `x` from one set of `n_samples` paths.
    pub fn psi_finite_mc(&self, x_grid: &[f64], n: u64, n_samples: u64, seed: u64, run: &RunConfig) -> Result<RuinResult> {
        if n == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        let multiplier = self.asymptotic_psi_n(n)?;
        self.simulate(x_grid, n, Horizon::Finite(n), multiplier, n_samples, seed, run, Vec::new())
    }

    /// Monte Carlo `ψ(x)` by simulating to [`RiskModel::truncation_depth`].
    pub fn psi_infinite_mc(
        &self,
        x_grid: &[f64],
        tail_tol: f64,
        n_samples: u64,
        seed: u64,
        run: &RunConfig,
    ) -> Result<RuinResult> {
        let (multiplier, warnings) = self.asymptotic_psi_inf()?;
        let max_x = x_grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let depth = self.truncation_depth(tail_tol, max_x)?;
        self.simulate(x_grid, depth, Horizon::Infinite(Infinite::Inf), multiplier, n_samples, seed, run, warnings)
    }

    /// Monte Carlo `P(X_i ∏_{j≤i} Y_j > x) / F̄(x)`. `(X_i, Y_i)` is drawn
    /// jointly first, then `Y_1 .. Y_{i-1}` independently from `G`.
    pub fn term_tail_mc(&self, i: u64, x_grid: &[f64], n_samples: u64, seed: u64, run: &RunConfig) -> Result<TailRatioReport> {
        let predicted = self.term_prediction(i)?;
        let tails = check_thresholds(&self.pair, x_grid, n_samples)?;
        let g = *self.pair.y_marginal();
        let merged = run_blocks(run, n_samples, seed, x_grid.len(), 0, |s, t| {
            let (x, y) = self.pair.sample_joint(s)?;
            let mut v = x * y;
            for _ in 1..i {
                v *= g.sample(s);
            }
            count_exceedances(v, x_grid, t.hits);
            Ok(())
        })?;
        Ok(build_report(x_grid, &tails, &merged.total.hits, n_samples, Some(predicted), seed, run.blocks))
    }

    /// `n_samples` draws of `S_n`, or of `T_n = Σ X_i ∏_{j=i}^n Y_j` when
    /// `reversed`.
    pub fn terminal_values(&self, n: u64, n_samples: u64, seed: u64, reversed: bool) -> Result<Vec<f64>> {
        let root = RngStream::new(seed);
        (0..n_samples)
            .map(|k| {
                let mut s = root.derive(k);
                let pairs: Vec<(f64, f64)> = (0..n).map(|_| self.pair.sample_joint(&mut s)).collect::<Result<_>>()?;
                let mut total = 0.0;
                if reversed {
                    let mut discount = 1.0;
                    for &(x, y) in pairs.iter().rev() {
                        discount *= y;
                        total += x * discount;
                    }
                } else {
                    let mut discount = 1.0;
                    for &(x, y) in &pairs {
                        discount *= y;
                        total += x * discount;
                    }
                }
                Ok(total)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinRow {
    pub x: f64,
    pub x_tail: f64,
    pub hits: u64,
    pub psi_hat: f64,
    pub stderr: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Asymptotic `ψ`, the multiplier times `F̄(x)`.
    pub prediction: f64,
    pub ratio_to_prediction: f64,
    /// `P(S_n > x)` from the same paths.
    pub terminal_p: f64,
    /// `P(Σ X_i^+ ∏ Y_j > x)` from the same paths.
    pub upper_p: f64,
}

impl RuinRow {
    /// `ψ̂ / F̄(x)`.
    pub fn ratio_to_tail(&self) -> f64 {
        self.psi_hat / self.x_tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuinResult {
    pub rows: Vec<RuinRow>,
    pub horizon: Horizon,
    /// Periods simulated per path; the truncation depth for infinite horizons.
    pub depth: u64,
    pub multiplier: f64,
    pub n_samples: u64,
    pub seed: u64,
    pub blocks: usize,
    pub warnings: Vec<Warning>,
}
