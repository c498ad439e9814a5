//! Conditionally dependent pairs `(X, Y)`.
//!
//! A pair is conditionally dependent when `P(X > x | Y = y) ~ F̄(x) s(y)`
//! uniformly over the support of `Y`. Each [`CdModel`] exposes the exact
//! conditional tail, the adjustment function `s`, parameter validation and an
//! exact joint sampler.
//!
//! Outside the positive support `D` of `Y` the conditional tail is `F̄(x)` and
//! `s(y) = 1`.

pub mod copula;
pub mod kernel;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::{Extended, Marginal};
use crate::mc::UniformSource;
use crate::quadrature;

pub use kernel::{Kernel, KernelSpec, Slot};

/// JSON form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Sarmanov {
        /// Omitted with `example21_kernel2`, where it is derived from `G`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        theta: Option<f64>,
        kernel1: KernelSpec,
        kernel2: KernelSpec,
        #[serde(rename = "F")]
        f: Marginal,
        #[serde(rename = "G")]
        g: Marginal,
    },
    Frank {
        theta: f64,
        #[serde(rename = "F")]
        f: Marginal,
        #[serde(rename = "G")]
        g: Marginal,
    },
    Amh {
        theta: f64,
        #[serde(rename = "F")]
        f: Marginal,
        #[serde(rename = "G")]
        g: Marginal,
    },
    /// `X = ξ - η`, `Y = η` for `(ξ, η)` drawn from `base`.
    Shift { base: Box<ModelSpec> },
}

#[derive(Debug, Clone)]
pub struct Sarmanov {
    theta: f64,
    kernel1: Kernel,
    kernel2: Kernel,
    d1: f64,
    b1: f64,
    b2: f64,
}

impl Sarmanov {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn d1(&self) -> f64 {
        self.d1
    }

    pub fn kernel1(&self) -> &Kernel {
        &self.kernel1
    }

    pub fn kernel2(&self) -> &Kernel {
        &self.kernel2
    }

    /// Kernel bounds `(b1, b2)`.
    pub fn bounds(&self) -> (f64, f64) {
        (self.b1, self.b2)
    }

    /// Acceptance probability of the rejection sampler, `1 / (1 + |θ| b1 b2)`.
    pub fn acceptance(&self) -> f64 {
        1.0 / (1.0 + self.theta.abs() * self.b1 * self.b2)
    }
}

#[derive(Debug, Clone)]
enum Kind {
    Sarmanov(Sarmanov),
    Frank { theta: f64 },
    Amh { theta: f64 },
    Shift { base: Box<CdModel>, normalizer: f64 },
}

/// A bivariate law with its marginals. For shift models `f` is the law of
/// `ξ`, not of `X`; use [`CdModel::x_tail`] for `F̄`.
#[derive(Debug, Clone)]
pub struct CdModel {
    spec: ModelSpec,
    kind: Kind,
    f: Marginal,
    g: Marginal,
}

const GRID_POINTS: usize = 1000;
const CENTERING_TOL: f64 = 1e-8;
const MIN_ACCEPTANCE: f64 = 1e-6;
const MAX_REJECTIONS: usize = 10_000_000;

fn check_g(g: &Marginal) -> Result<()> {
    if g.support().0 < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Y must be supported on [0, inf), got {} with lower end {}",
            g.family_name(),
            g.support().0
        )));
    }
    Ok(())
}

impl CdModel {
    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        match spec {
            ModelSpec::Sarmanov { theta, kernel1, kernel2, f, g } => {
                Self::sarmanov(*theta, *kernel1, *kernel2, *f, *g)
            }
            ModelSpec::Frank { theta, f, g } => Self::frank(*theta, *f, *g),
            ModelSpec::Amh { theta, f, g } => Self::amh(*theta, *f, *g),
            ModelSpec::Shift { base } => Self::shift(Self::from_spec(base)?),
        }
    }

    /// Sarmanov pair. `theta` may be omitted only with
    /// [`KernelSpec::Example21Kernel2`], which then sets
    /// `theta = 1 / (d1 E[1/(1+Y)])`.
    pub fn sarmanov(
        theta: Option<f64>,
        kernel1: KernelSpec,
        kernel2: KernelSpec,
        f: Marginal,
        g: Marginal,
    ) -> Result<Self> {
        check_g(&g)?;
        if kernel1.slot() == Some(Slot::Y) {
            return Err(Error::InvalidParameter(format!("{} cannot be the X kernel", kernel1.name())));
        }
        if kernel2.slot() == Some(Slot::X) {
            return Err(Error::InvalidParameter(format!("{} cannot be the Y kernel", kernel2.name())));
        }
        let k1 = Kernel::bind(kernel1, f, None)?;
        let d1 = k1.limit_at_infinity()?;
        let theta = match (theta, kernel2) {
            (Some(t), _) => t,
            (None, KernelSpec::Example21Kernel2) => {
                if d1 == 0.0 {
                    return Err(Error::InvalidParameter("example21_kernel2 needs d1 != 0".into()));
                }
                let m = quadrature::expectation_finite(&g, |y| 1.0 / (1.0 + y))?;
                1.0 / (d1 * m)
            }
            (None, _) => return Err(Error::InvalidParameter("sarmanov needs theta".into())),
        };
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")));
        }
        let k2 = Kernel::bind(kernel2, g, Some(theta * d1))?;
        let b1 = kernel_bound(&k1);
        let b2 = kernel_bound(&k2);
        let spec = ModelSpec::Sarmanov { theta: Some(theta), kernel1, kernel2, f, g };
        Ok(Self {
            spec,
            kind: Kind::Sarmanov(Sarmanov { theta, kernel1: k1, kernel2: k2, d1, b1, b2 }),
            f,
            g,
        })
    }

    pub fn frank(theta: f64, f: Marginal, g: Marginal) -> Result<Self> {
        check_g(&g)?;
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")));
        }
        Ok(Self { spec: ModelSpec::Frank { theta, f, g }, kind: Kind::Frank { theta }, f, g })
    }

    pub fn amh(theta: f64, f: Marginal, g: Marginal) -> Result<Self> {
        check_g(&g)?;
        if !theta.is_finite() {
            return Err(Error::InvalidParameter(format!("theta must be finite, got {theta}")));
        }
        Ok(Self { spec: ModelSpec::Amh { theta, f, g }, kind: Kind::Amh { theta }, f, g })
    }

    /// `X = ξ - η`, `Y = η` with `s(y) = s0(y) / E s0(η)`.
    pub fn shift(base: CdModel) -> Result<Self> {
        let xi = match base.x_marginal() {
            Some(m) if m.is_long_tailed() => *m,
            Some(m) => return Err(Error::UnsupportedMarginal(m.family_name().into())),
            None => return Err(Error::UnsupportedMarginal("derived (shift) marginal".into())),
        };
        if xi.support().0 <= 0.0 {
            return Err(Error::UnsupportedMarginal(format!(
                "{} with support reaching {} (needs a positive base)",
                xi.family_name(),
                xi.support().0
            )));
        }
        let g = base.g;
        let normalizer = quadrature::expectation_finite(&g, |y| base.s_fn(y))?;
        if !(normalizer > 0.0) {
            return Err(Error::InvalidModel(format!("E s0(eta) = {normalizer} is not positive")));
        }
        let spec = ModelSpec::Shift { base: Box::new(base.spec.clone()) };
        Ok(Self { spec, kind: Kind::Shift { base: Box::new(base), normalizer }, f: xi, g })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn variant_name(&self) -> &'static str {
        match self.kind {
            Kind::Sarmanov(_) => "sarmanov",
            Kind::Frank { .. } => "frank",
            Kind::Amh { .. } => "amh",
            Kind::Shift { .. } => "shift",
        }
    }

    pub fn as_sarmanov(&self) -> Option<&Sarmanov> {
        match &self.kind {
            Kind::Sarmanov(s) => Some(s),
            _ => None,
        }
    }

    /// The catalog law of `X`; `None` for shift models, whose `X` law is derived.
    pub fn x_marginal(&self) -> Option<&Marginal> {
        match self.kind {
            Kind::Shift { .. } => None,
            _ => Some(&self.f),
        }
    }

    pub fn y_marginal(&self) -> &Marginal {
        &self.g
    }

    /// Regular-variation index of `X`. A shift by a nonnegative bounded or
    /// lighter variable keeps the index of `ξ`.
    pub fn x_rv_index(&self) -> Option<f64> {
        self.f.rv_index()
    }

    /// `F̄(x) = P(X > x)`. Shift models integrate the base conditional tail.
    pub fn x_tail(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Shift { base, .. } => {
                quadrature::expectation_finite(&self.g, |v| base.cond_tail(x + v, v).unwrap_or(f64::NAN))
                    .unwrap_or(f64::NAN)
            }
            _ => self.f.tail(x),
        }
    }

    /// True for AMH with `θ = -1` (and shifts built on it): a valid joint law
    /// whose conditional tail is not uniformly `F̄ s`.
    pub fn non_cd(&self) -> bool {
        match &self.kind {
            Kind::Amh { theta } => *theta == -1.0,
            Kind::Shift { base, .. } => base.non_cd(),
            _ => false,
        }
    }

    /// `P(X > x | Y = y)`.
    pub fn cond_tail(&self, x: f64, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() || x.is_nan() {
            return Err(Error::Domain(format!("conditional tail needs y > 0, got ({x}, {y})")));
        }
        if !self.g.in_positive_support(y) {
            return Ok(self.x_tail(x));
        }
        match &self.kind {
            Kind::Sarmanov(s) => {
                let fq = self.f.tail(x);
                let phi2 = s.kernel2.eval(y);
                let extra = s.theta * phi2 * s.kernel1.upper_integral(x)?;
                Ok((fq + extra).clamp(0.0, 1.0))
            }
            Kind::Frank { theta } => Ok(copula::frank_cond_tail(*theta, self.f.tail(x), self.g.cdf(y))),
            Kind::Amh { theta } => Ok(copula::amh_cond_tail(*theta, self.f.tail(x), self.g.tail(y))),
            Kind::Shift { base, .. } => base.cond_tail(x + y, y),
        }
    }

    /// The adjustment function `s(y)`; 1 outside the support of `Y`.
    pub fn s_fn(&self, y: f64) -> f64 {
        if !self.g.in_positive_support(y) {
            return 1.0;
        }
        match &self.kind {
            Kind::Sarmanov(s) => s.kernel2.one_plus(s.theta * s.d1, y),
            Kind::Frank { theta } => copula::frank_s(*theta, self.g.tail(y)),
            Kind::Amh { theta } => copula::amh_s(*theta, self.g.tail(y)),
            Kind::Shift { base, normalizer } => base.s_fn(y) / normalizer,
        }
    }

    /// Analytic upper bound on `s` over the support of `Y`.
    pub fn s_upper_bound(&self) -> f64 {
        match &self.kind {
            Kind::Sarmanov(s) => 1.0 + (s.theta * s.d1).abs() * s.b2,
            Kind::Frank { theta } => theta / -(-theta).exp_m1(),
            Kind::Amh { theta } => 1.0 + theta.abs(),
            Kind::Shift { base, normalizer } => base.s_upper_bound() / normalizer,
        }
    }

    /// `y0 = sup{y : 3 Ḡ(y)^2 >= 1}`, the edge of the region where the
    /// `θ = -1` AMH pair still behaves uniformly.
    pub fn amh_y0(&self) -> Option<f64> {
        match self.kind {
            Kind::Amh { theta } if theta == -1.0 => Some(self.g.tail_quantile(1.0 / 3f64.sqrt())),
            _ => None,
        }
    }

    /// `P(X <= x, Y <= y)`.
    pub fn joint_cdf(&self, x: f64, y: f64) -> Result<f64> {
        let (u, v) = (self.f.cdf(x), self.g.cdf(y));
        match &self.kind {
            Kind::Frank { theta } => Ok(copula::frank_cdf(*theta, u, v)),
            Kind::Amh { theta } => Ok(copula::amh_cdf(*theta, u, v)),
            Kind::Sarmanov(s) => {
                // ∫_{-inf}^x φ dF = -∫_x^inf φ dF for centered kernels
                let lower1 = -s.kernel1.upper_integral(x)?;
                let lower2 = -s.kernel2.upper_integral(y)?;
                Ok(u * v + s.theta * lower1 * lower2)
            }
            Kind::Shift { .. } => Err(Error::Unsupported("joint cdf of a shift model".into())),
        }
    }

    /// One exact draw of `(X, Y)`.
    pub fn sample_joint<U: UniformSource + ?Sized>(&self, rng: &mut U) -> Result<(f64, f64)> {
        match &self.kind {
            Kind::Sarmanov(s) => {
                let acceptance = s.acceptance();
                if acceptance < MIN_ACCEPTANCE {
                    return Err(Error::RejectionStall(acceptance));
                }
                let bound = 1.0 / acceptance;
                let (y, gq) = self.g.sample_with_tail(rng);
                let phi2 = s.kernel2.eval_with_tail(y, gq);
                for _ in 0..MAX_REJECTIONS {
                    let (x, fq) = self.f.sample_with_tail(rng);
                    let weight = 1.0 + s.theta * s.kernel1.eval_with_tail(x, fq) * phi2;
                    if rng.uniform() * bound < weight {
                        return Ok((x, y));
                    }
                }
                Err(Error::RejectionStall(acceptance))
            }
            Kind::Frank { theta } => {
                let v = rng.uniform();
                let w = rng.uniform();
                let u = copula::frank_cond_inverse(*theta, v, w);
                Ok((self.f.inverse_cdf(u), self.g.inverse_cdf(v)))
            }
            Kind::Amh { theta } => {
                let v = rng.uniform();
                let w = rng.uniform();
                let u = copula::amh_cond_inverse(*theta, v, w);
                Ok((self.f.inverse_cdf(u), self.g.inverse_cdf(v)))
            }
            Kind::Shift { base, .. } => {
                let (xi, eta) = base.sample_joint(rng)?;
                Ok((xi - eta, eta))
            }
        }
    }

    /// Checks parameter validity and the conditions the asymptotic results need.
    pub fn validate(&self) -> ValidationReport {
        let mut checks = Vec::new();
        match &self.kind {
            Kind::Sarmanov(s) => self.validate_sarmanov(s, &mut checks),
            Kind::Frank { theta } => {
                checks.push(Check::new(
                    "theta_positive",
                    *theta > 0.0,
                    true,
                    format!("frank needs theta > 0, got {theta}"),
                ));
                self.push_g_continuous(&mut checks, true);
            }
            Kind::Amh { theta } => {
                checks.push(Check::new(
                    "theta_range",
                    (-1.0..1.0).contains(theta),
                    true,
                    format!("amh needs theta in [-1, 1), got {theta}"),
                ));
                self.push_g_continuous(&mut checks, true);
                checks.push(Check::new(
                    "conditionally_dependent",
                    *theta != -1.0,
                    false,
                    if *theta == -1.0 {
                        "theta = -1: s(y) = 2 G(y) tail, uniformity fails in the upper tail of Y".into()
                    } else {
                        "theta in (-1, 1)".into()
                    },
                ));
            }
            Kind::Shift { base, normalizer } => {
                for mut c in base.validate().checks {
                    c.name = format!("base.{}", c.name);
                    checks.push(c);
                }
                checks.push(Check::new(
                    "base_conditionally_dependent",
                    !base.non_cd(),
                    true,
                    "the base pair must be conditionally dependent".into(),
                ));
                checks.push(Check::new(
                    "normalizer_positive",
                    *normalizer > 0.0 && normalizer.is_finite(),
                    true,
                    format!("E s0(eta) = {normalizer}"),
                ));
            }
        }
        self.push_s_checks(&mut checks);
        ValidationReport { checks, non_cd: self.non_cd() }
    }

    fn push_g_continuous(&self, checks: &mut Vec<Check>, mandatory: bool) {
        checks.push(Check::new(
            "g_continuous",
            self.g.is_continuous(),
            mandatory,
            format!("Y ~ {} must be continuous for a dependent pair", self.g.family_name()),
        ));
    }

    fn validate_sarmanov(&self, s: &Sarmanov, checks: &mut Vec<Check>) {
        let dependent = s.theta != 0.0;
        for (name, k) in [("kernel1_centering", &s.kernel1), ("kernel2_centering", &s.kernel2)] {
            let check = match k.mean() {
                Ok(m) => Check::new(name, m.abs() <= CENTERING_TOL, dependent, format!("E phi = {m:e}")),
                Err(e) => Check::new(name, false, dependent, format!("E phi unavailable: {e}")),
            };
            checks.push(check);
        }
        checks.push(Check::new(
            "kernel_boundedness",
            s.b1.is_finite() && s.b2.is_finite(),
            true,
            format!("sup |phi1| = {}, sup |phi2| = {}", s.b1, s.b2),
        ));

        // min of 1 + θ φ1 φ2 over the product grid sits at a pair of extremes
        let (lo1, hi1) = grid_extremes(&s.kernel1);
        let (lo2, hi2) = grid_extremes(&s.kernel2);
        let mut worst = (f64::INFINITY, 0.0, 0.0);
        for a in [lo1, hi1] {
            for b in [lo2, hi2] {
                let value = 1.0 + s.theta * a.1 * b.1;
                if value < worst.0 {
                    worst = (value, a.0, b.0);
                }
            }
        }
        let mut c = Check::new(
            "density_nonnegativity",
            worst.0 >= -1e-12,
            true,
            format!("min of 1 + theta phi1 phi2 over the grid = {}", worst.0),
        );
        if worst.0 < -1e-12 {
            c.witness = Some(Witness { x: Some(worst.1), y: Some(worst.2) });
        }
        checks.push(c);
        self.push_g_continuous(checks, dependent);
    }

    fn push_s_checks(&self, checks: &mut Vec<Check>) {
        let ys = positive_grid(&self.g);
        let mut min_s = (f64::INFINITY, f64::NAN);
        let mut max_s = (f64::NEG_INFINITY, f64::NAN);
        for &y in &ys {
            let v = self.s_fn(y);
            if v < min_s.0 {
                min_s = (v, y);
            }
            if v > max_s.0 {
                max_s = (v, y);
            }
        }
        let positive = min_s.0 > 0.0;
        let mut c = Check::new(
            "s_positive",
            positive,
            !self.non_cd(),
            format!("min s over the grid = {} at y = {}", min_s.0, min_s.1),
        );
        if !positive {
            c.witness = Some(Witness { x: None, y: Some(min_s.1) });
        }
        checks.push(c);
        let bound = self.s_upper_bound();
        checks.push(Check::new(
            "s_bounded",
            max_s.0.is_finite() && max_s.0 <= bound * (1.0 + 1e-9) + 1e-12,
            true,
            format!("max s over the grid = {} (analytic bound {bound})", max_s.0),
        ));
    }
}

fn kernel_bound(k: &Kernel) -> f64 {
    let (lo, hi) = grid_extremes(k);
    lo.1.abs().max(hi.1.abs())
}

/// `(argmin, min)` and `(argmax, max)` of a kernel over the quantile grid plus
/// the support endpoints.
fn grid_extremes(k: &Kernel) -> ((f64, f64), (f64, f64)) {
    let m = k.marginal();
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(GRID_POINTS + 2);
    if let Some(p) = m.point_mass() {
        points.push((p, k.eval(p)));
    } else {
        let (lo, hi) = m.support();
        let (v_lo, v_hi) = k.endpoint_values();
        points.push((lo, v_lo));
        points.push((hi, v_hi));
        for i in 0..GRID_POINTS {
            let q = (i as f64 + 0.5) / GRID_POINTS as f64;
            points.push((m.tail_quantile(q), k.eval_at_tail_prob(q)));
        }
    }
    let min = points.iter().copied().fold((f64::NAN, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let max = points.iter().copied().fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    (min, max)
}

/// Quantile grid of `G` restricted to `y > 0`, with finite support endpoints.
fn positive_grid(g: &Marginal) -> Vec<f64> {
    if let Some(p) = g.point_mass() {
        return vec![p];
    }
    let (lo, hi) = g.support();
    let mut ys: Vec<f64> = (0..GRID_POINTS)
        .map(|i| g.tail_quantile((i as f64 + 0.5) / GRID_POINTS as f64))
        .collect();
    ys.push(lo);
    if hi.is_finite() {
        ys.push(hi);
    }
    ys.retain(|&y| g.in_positive_support(y));
    ys
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Option<f64>,
    pub y: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks do not make the model unusable.
    pub mandatory: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

impl Check {
    fn new(name: &str, passed: bool, mandatory: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, mandatory, detail, witness: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub non_cd: bool,
}

impl ValidationReport {
    /// All mandatory checks passed.
    pub fn usable(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.mandatory)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.mandatory && !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Error naming the failed mandatory checks, if any.
    pub fn into_result(self) -> Result<Self> {
        if self.usable() {
            Ok(self)
        } else {
            let names: Vec<&str> = self.failures().map(|c| c.name.as_str()).collect();
            Err(Error::InvalidModel(names.join(", ")))
        }
    }
}

/// `∫ s dG`; callers expect 1.
pub fn normalization(m: &CdModel) -> Result<f64> {
    quadrature::expectation(m.y_marginal(), |y| m.s_fn(y))?.require("E s(Y)")
}

/// Convenience for `E h(Y)` under the model's `G`.
pub fn y_expectation<H: FnMut(f64) -> f64>(m: &CdModel, h: H) -> Result<Extended> {
    quadrature::expectation(m.y_marginal(), h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto() -> Marginal {
        Marginal::pareto(2.0, 1.0).unwrap()
    }

    fn uniform() -> Marginal {
        Marginal::uniform(0.0, 1.0).unwrap()
    }

    fn fgm(theta: f64) -> CdModel {
        CdModel::sarmanov(Some(theta), KernelSpec::Fgm1, KernelSpec::Fgm2, pareto(), uniform()).unwrap()
    }

    #[test]
    fn fgm_validation_examples() {
        assert!(fgm(0.5).validate().usable());
        let bad = fgm(3.0).validate();
        assert!(!bad.usable());
        let c = bad.check("density_nonnegativity").unwrap();
        assert!(!c.passed);
        assert!(c.witness.is_some());
    }

    #[test]
    fn frank_validation() {
        let m = CdModel::frank(2.0, pareto(), uniform()).unwrap();
        assert!(m.validate().usable());
        let neg = CdModel::frank(-1.0, pareto(), uniform()).unwrap();
        assert!(!neg.validate().usable());
    }

    #[test]
    fn fgm_cond_tail_example() {
        let m = fgm(0.5);
        let x = 2f64.sqrt();
        let v = m.cond_tail(x, 0.25).unwrap();
        assert!((v - 0.4375).abs() < 1e-12, "{v}");
    }

    #[test]
    fn frank_below_support_is_one() {
        let m = CdModel::frank(2.0, pareto(), uniform()).unwrap();
        assert!((m.cond_tail(0.5, 0.3).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn amh_zero_is_independent() {
        let m = CdModel::amh(0.0, pareto(), uniform()).unwrap();
        for (x, y) in [(2.0, 0.1), (10.0, 0.9)] {
            assert_eq!(m.cond_tail(x, y).unwrap(), pareto().tail(x));
        }
    }

    #[test]
    fn s_examples() {
        assert!((fgm(0.5).s_fn(0.25) - 0.75).abs() < 1e-15);
        let frank = CdModel::frank(2.0, pareto(), uniform()).unwrap();
        let top = 2.0 / (1.0 - (-2.0f64).exp());
        assert!((frank.s_fn(1.0) - top).abs() < 1e-14);
        let indep = fgm(0.0);
        assert_eq!(indep.s_fn(0.3), 1.0);
    }

    #[test]
    fn off_support_extension() {
        let m = fgm(0.5);
        assert_eq!(m.s_fn(2.0), 1.0);
        assert_eq!(m.cond_tail(5.0, 2.0).unwrap(), pareto().tail(5.0));
        assert!(matches!(m.cond_tail(5.0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(m.cond_tail(5.0, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_slots_enforced() {
        assert!(CdModel::sarmanov(Some(0.5), KernelSpec::Fgm2, KernelSpec::Fgm2, pareto(), uniform()).is_err());
        assert!(CdModel::sarmanov(Some(0.5), KernelSpec::Fgm1, KernelSpec::Fgm1, pareto(), uniform()).is_err());
    }

    #[test]
    fn power_kernel_rejected_as_x_kernel() {
        let f = Marginal::pareto(3.0, 1.0).unwrap();
        let r = CdModel::sarmanov(Some(0.1), KernelSpec::PowerKernel { exponent: 1.0 }, KernelSpec::Fgm2, f, uniform());
        assert!(matches!(r, Err(Error::NoLimit(_))));
    }

    #[test]
    fn power_kernel_as_y_kernel_on_bounded_support() {
        let m = CdModel::sarmanov(
            Some(0.5),
            KernelSpec::Fgm1,
            KernelSpec::PowerKernel { exponent: 2.0 },
            pareto(),
            uniform(),
        )
        .unwrap();
        let r = m.validate();
        assert!(r.usable(), "{r:?}");
        assert!((normalization(&m).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn example21_theta_is_derived() {
        let g = Marginal::log_pareto(2.0, 1.0, std::f64::consts::E).unwrap();
        let m = CdModel::sarmanov(None, KernelSpec::ScaledFgm1 { d1: 1.0 }, KernelSpec::Example21Kernel2, pareto(), g)
            .unwrap();
        let s = m.as_sarmanov().unwrap();
        let mean = quadrature::expectation_finite(&g, |y| 1.0 / (1.0 + y)).unwrap();
        assert!((s.theta() - 1.0 / mean).abs() < 1e-12);
        // s(y) = θ d1 / (1 + y)
        for y in [3.0, 10.0, 1e4] {
            assert!((m.s_fn(y) - s.theta() / (1.0 + y)).abs() < 1e-12);
        }
        assert!(m.validate().usable(), "{:?}", m.validate());
    }

    #[test]
    fn shift_requires_long_tailed_base() {
        let base = CdModel::sarmanov(Some(0.0), KernelSpec::Fgm1, KernelSpec::Fgm2, uniform(), uniform()).unwrap();
        assert!(matches!(CdModel::shift(base), Err(Error::UnsupportedMarginal(_))));
    }

    #[test]
    fn shift_of_independent_base_has_unit_s() {
        let base = fgm(0.0);
        let m = CdModel::shift(base).unwrap();
        for y in [0.01, 0.5, 0.99] {
            assert!((m.s_fn(y) - 1.0).abs() < 1e-12);
        }
        assert!((normalization(&m).unwrap() - 1.0).abs() < 1e-8);
        assert!(m.validate().usable());
    }

    #[test]
    fn amh_minus_one_flagged() {
        let m = CdModel::amh(-1.0, pareto(), uniform()).unwrap();
        let r = m.validate();
        assert!(r.non_cd);
        assert!(r.usable());
        assert!(!r.check("conditionally_dependent").unwrap().passed);
        let y0 = m.amh_y0().unwrap();
        assert!((3.0 * uniform().tail(y0).powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_json_round_trip() {
        let text = r#"{"variant":"sarmanov","theta":0.5,"kernel1":{"kind":"fgm1"},"kernel2":{"kind":"fgm2"},
            "F":{"family":"pareto","alpha":2.0,"scale":1.0},"G":{"family":"uniform","a":0.0,"b":1.0}}"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        let m = CdModel::from_spec(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&serde_json::to_string(m.spec()).unwrap()).unwrap();
        assert_eq!(&back, m.spec());
        let shift = r#"{"variant":"shift","base":{"variant":"frank","theta":2.0,
            "F":{"family":"pareto","alpha":2.0,"scale":1.0},"G":{"family":"uniform","a":0.0,"b":1.0}}}"#;
        assert!(CdModel::from_spec(&serde_json::from_str(shift).unwrap()).is_ok());
        let unknown = r#"{"variant":"frank","theta":2.0,"rho":1,
            "F":{"family":"pareto","alpha":2.0,"scale":1.0},"G":{"family":"uniform","a":0.0,"b":1.0}}"#;
        assert!(serde_json::from_str::<ModelSpec>(unknown).is_err());
    }
}
