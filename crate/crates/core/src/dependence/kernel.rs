//! Sarmanov kernels bound to a marginal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::Marginal;
use crate::quadrature;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `1 - 2F(x)`.
    Fgm1,
    /// `1 - 2G(y)`.
    Fgm2,
    /// `(e^{-x} - c1) 1{x >= 0}`, `c1 = E[e^{-X} | X >= 0]`.
    ExpKernel1,
    /// `e^{-y} - E e^{-Y}`.
    ExpKernel2,
    /// `t^p - E T^p`.
    PowerKernel { exponent: f64 },
    /// `1/(1+y) - 1/(theta d1)`.
    Example21Kernel2,
    /// `d1 (2F(x) - 1)`; centered with limit `d1 > 0`.
    ScaledFgm1 { d1: f64 },
}

/// Which side of the pair a kernel is attached to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    X,
    Y,
}

impl KernelSpec {
    pub fn slot(&self) -> Option<Slot> {
        match self {
            KernelSpec::Fgm1 | KernelSpec::ExpKernel1 | KernelSpec::ScaledFgm1 { .. } => Some(Slot::X),
            KernelSpec::Fgm2 | KernelSpec::ExpKernel2 | KernelSpec::Example21Kernel2 => Some(Slot::Y),
            KernelSpec::PowerKernel { .. } => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Fgm1 => "fgm1",
            KernelSpec::Fgm2 => "fgm2",
            KernelSpec::ExpKernel1 => "exp_kernel1",
            KernelSpec::ExpKernel2 => "exp_kernel2",
            KernelSpec::PowerKernel { .. } => "power_kernel",
            KernelSpec::Example21Kernel2 => "example21_kernel2",
            KernelSpec::ScaledFgm1 { .. } => "scaled_fgm1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    /// `scale (1 - 2 F)`; FGM has scale 1, the scaled variant `-d1`.
    Fgm { scale: f64 },
    /// `e^{-t} - shift`, optionally zero for `t < 0`.
    Exp { shift: f64, positive_only: bool },
    Power { exponent: f64, mean: f64 },
    /// `1/(1+t) - 1/k`.
    Reciprocal { k: f64 },
}

/// A kernel with its derived constants computed against `marginal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    spec: KernelSpec,
    marginal: Marginal,
    form: Form,
}

impl Kernel {
    /// Binds `spec` to `marginal`. `theta_d1` is needed only by
    /// [`KernelSpec::Example21Kernel2`].
    pub fn bind(spec: KernelSpec, marginal: Marginal, theta_d1: Option<f64>) -> Result<Self> {
        let form = match spec {
            KernelSpec::Fgm1 | KernelSpec::Fgm2 => Form::Fgm { scale: 1.0 },
            KernelSpec::ScaledFgm1 { d1 } => {
                if !(d1.is_finite() && d1 > 0.0) {
                    return Err(Error::InvalidParameter(format!("scaled_fgm1 needs d1 > 0, got {d1}")));
                }
                Form::Fgm { scale: -d1 }
            }
            KernelSpec::ExpKernel1 => {
                let p_nonneg = marginal.tail(0.0) + point_at_zero(&marginal);
                if p_nonneg <= 0.0 {
                    return Err(Error::InvalidParameter("exp_kernel1 needs P(X >= 0) > 0".into()));
                }
                let mass = quadrature::tail_integral(&marginal, p_nonneg, |x| if x >= 0.0 { (-x).exp() } else { 0.0 })?
                    .require("E e^{-X} 1{X >= 0}")?;
                Form::Exp { shift: mass / p_nonneg, positive_only: true }
            }
            KernelSpec::ExpKernel2 => {
                let mean = quadrature::expectation_finite(&marginal, |y| (-y).exp())?;
                Form::Exp { shift: mean, positive_only: false }
            }
            KernelSpec::PowerKernel { exponent } => {
                if !(exponent.is_finite() && exponent > 0.0) {
                    return Err(Error::InvalidParameter(format!("power kernel exponent must be > 0, got {exponent}")));
                }
                let mean = marginal.moment(exponent)?.require("E T^p for the power kernel")?;
                Form::Power { exponent, mean }
            }
            KernelSpec::Example21Kernel2 => {
                let k = theta_d1.ok_or_else(|| Error::InvalidParameter("example21_kernel2 needs theta and d1".into()))?;
                if !(k.is_finite() && k != 0.0) {
                    return Err(Error::InvalidParameter(format!("example21_kernel2 needs theta*d1 != 0, got {k}")));
                }
                Form::Reciprocal { k }
            }
        };
        Ok(Self { spec, marginal, form })
    }

    pub fn spec(&self) -> KernelSpec {
        self.spec
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    /// Kernel value at `t` given `tail = P(T > t)`.
    pub fn eval_with_tail(&self, t: f64, tail: f64) -> f64 {
        match self.form {
            // 1 - 2F = 2 tail - 1
            Form::Fgm { scale } => scale * (2.0 * tail - 1.0),
            Form::Exp { shift, positive_only } => {
                if positive_only && t < 0.0 {
                    0.0
                } else {
                    (-t).exp() - shift
                }
            }
            Form::Power { exponent, mean } => t.powf(exponent) - mean,
            Form::Reciprocal { k } => 1.0 / (1.0 + t) - 1.0 / k,
        }
    }

    /// `1 + c phi(t)`. For the reciprocal kernel with `c = k` this is
    /// `k/(1+t)` exactly, avoiding the cancellation in `1 + k (1/(1+t) - 1/k)`.
    pub fn one_plus(&self, c: f64, t: f64) -> f64 {
        match self.form {
            Form::Reciprocal { k } if c == k => k / (1.0 + t),
            _ => 1.0 + c * self.eval(t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_tail(t, self.marginal.tail(t))
    }

    /// Value at the tail quantile `Q(q)`.
    pub fn eval_at_tail_prob(&self, q: f64) -> f64 {
        self.eval_with_tail(self.marginal.tail_quantile(q), q)
    }

    /// Values at the lower and upper ends of the support.
    pub fn endpoint_values(&self) -> (f64, f64) {
        let (lo, hi) = self.marginal.support();
        if self.marginal.point_mass().is_some() {
            let v = self.eval(lo);
            return (v, v);
        }
        (self.eval_with_tail(lo, 1.0), self.eval_with_tail(hi, 0.0))
    }

    /// `E phi(T)` by quadrature.
    pub fn mean(&self) -> Result<f64> {
        if let Some(m) = self.marginal.point_mass() {
            return Ok(self.eval(m));
        }
        integrate_over_tail_prob(self, 1.0)
    }

    /// `∫_x^inf phi dF = ∫_0^{P(T > x)} phi(Q(q)) dq`.
    pub fn upper_integral(&self, x: f64) -> Result<f64> {
        let q = self.marginal.tail(x);
        match self.form {
            // ∫_F^1 (1 - 2u) du = -F (1 - F)
            Form::Fgm { scale } if self.marginal.is_continuous() => Ok(-scale * q * (1.0 - q)),
            _ => integrate_over_tail_prob(self, q),
        }
    }

    /// `lim_{t -> inf} phi(t)`: analytic per kind, otherwise the values at
    /// tail probabilities `10^-4 .. 10^-8` must settle to within `1e-6`.
    pub fn limit_at_infinity(&self) -> Result<f64> {
        let (_, hi) = self.marginal.support();
        match (self.spec, self.form) {
            (KernelSpec::Fgm1 | KernelSpec::Fgm2, _) => Ok(-1.0),
            (KernelSpec::ScaledFgm1 { d1 }, _) => Ok(d1),
            (KernelSpec::ExpKernel1, Form::Exp { shift, .. }) if hi.is_infinite() => Ok(-shift),
            _ => self.numeric_limit(),
        }
    }

    fn numeric_limit(&self) -> Result<f64> {
        if let Some(m) = self.marginal.point_mass() {
            return Ok(self.eval(m));
        }
        let values: Vec<f64> = (4..=8).map(|j| self.eval_at_tail_prob(10f64.powi(-j))).collect();
        let settled = values.iter().all(|v| v.is_finite())
            && values.windows(2).all(|w| (w[1] - w[0]).abs() < 1e-6);
        if settled {
            Ok(values[values.len() - 1])
        } else {
            Err(Error::NoLimit(format!(
                "{} over {}: values {:?}",
                self.spec.name(),
                self.marginal.family_name(),
                values
            )))
        }
    }
}

fn integrate_over_tail_prob(k: &Kernel, q_max: f64) -> Result<f64> {
    // the kernel is bounded on every catalog support, so the block sum converges
    let m = k.marginal;
    let tol = quadrature::Tolerance { abs: 1e-15, rel: 1e-12, max_evals: 400_000 };
    if q_max <= 0.0 {
        return Ok(0.0);
    }
    if m.support().1.is_finite() {
        return Ok(quadrature::integrate(|q| k.eval_at_tail_prob(q), 0.0, q_max, tol)?.value);
    }
    quadrature::tail_integral(&m, q_max, |t| k.eval(t))?.require("kernel integral")
}

fn point_at_zero(m: &Marginal) -> f64 {
    match m.point_mass() {
        Some(p) if p == 0.0 => 1.0,
        _ => 0.0,
    }
}
