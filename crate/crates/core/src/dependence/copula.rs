//! Closed forms for the Frank and Ali–Mikhail–Haq pairs.
//!
//! Conditional tails take `fq = P(X > x)` rather than `F(x)` so that values
//! deep in the tail keep their relative precision.

/// Frank joint cdf `C(u, v)`, `theta > 0`.
pub fn frank_cdf(theta: f64, u: f64, v: f64) -> f64 {
    let num = (-theta * u).exp_m1() * (-theta * v).exp_m1();
    -(num / (-theta).exp_m1()).ln_1p() / theta
}

/// `P(X > x | Y = y)` for the Frank pair with `fq = P(X > x)`, `gy = G(y)`.
pub fn frank_cond_tail(theta: f64, fq: f64, gy: f64) -> f64 {
    // e^{-θ} - e^{-θF} = -e^{-θ} expm1(θ F̄); regrouping the denominator
    // around expm1(-θ) removes the cancellation as F̄ -> 0
    let a = (-theta).exp_m1();
    let b = (-theta).exp() * (theta * fq).exp_m1();
    let eg = (-theta * gy).exp();
    let cg = (-theta * gy).exp_m1();
    (b / (-a * eg - b * cg)).clamp(0.0, 1.0)
}

/// `s(y) = θ e^{-θ Ḡ(y)} / (1 - e^{-θ})`.
pub fn frank_s(theta: f64, gq: f64) -> f64 {
    theta * (-theta * gq).exp() / -(-theta).exp_m1()
}

/// `u` solving `∂C/∂v (u, v) = w`.
pub fn frank_cond_inverse(theta: f64, v: f64, w: f64) -> f64 {
    let ev = (-theta * v).exp();
    let a = w * (-theta).exp_m1() / (w + (1.0 - w) * ev);
    (-a.ln_1p() / theta).clamp(0.0, 1.0)
}

/// AMH joint cdf from marginal values and their complements.
pub fn amh_cdf(theta: f64, u: f64, v: f64) -> f64 {
    u * v / (1.0 - theta * (1.0 - u) * (1.0 - v))
}

/// `P(X > x | Y = y)` for the AMH pair with `fq = P(X > x)`, `gq = P(Y > y)`.
pub fn amh_cond_tail(theta: f64, fq: f64, gq: f64) -> f64 {
    let num = (1.0 + theta - 2.0 * theta * gq - theta * fq + theta * theta * fq * gq * gq) * fq;
    let den = (1.0 - theta * fq * gq).powi(2);
    (num / den).clamp(0.0, 1.0)
}

/// `s(y) = 1 + θ (1 - 2 Ḡ(y))`; equals `2 Ḡ(y)` at `θ = -1`.
pub fn amh_s(theta: f64, gq: f64) -> f64 {
    1.0 + theta * (1.0 - 2.0 * gq)
}

/// Conditional cdf of `U` given `V = v` for AMH.
pub fn amh_cond_cdf(theta: f64, v: f64, u: f64) -> f64 {
    let a = 1.0 - v;
    u * (1.0 - theta + theta * u) / (1.0 - theta * a * (1.0 - u)).powi(2)
}

/// `u` solving `∂C/∂v (u, v) = w` for AMH.
///
/// The condition is quadratic in `u`; the root in `[0, 1]` is taken, the
/// smaller one on ties. Bisection on the (monotone) conditional cdf covers the
/// case where rounding pushes both roots out of range.
pub fn amh_cond_inverse(theta: f64, v: f64, w: f64) -> f64 {
    let a = 1.0 - v;
    let k = 1.0 - theta * a;
    let qa = theta - w * theta * theta * a * a;
    let qb = 1.0 - theta - 2.0 * w * theta * a * k;
    let qc = -w * k * k;
    let in_range = |u: f64| (-1e-12..=1.0 + 1e-12).contains(&u);

    let roots: Vec<f64> = if qa.abs() < 1e-14 {
        vec![-qc / qb]
    } else {
        let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
        if q == 0.0 {
            vec![0.0]
        } else {
            vec![q / qa, qc / q]
        }
    };
    let mut best: Option<f64> = None;
    for r in roots.into_iter().filter(|r| r.is_finite() && in_range(*r)) {
        best = Some(best.map_or(r, |b: f64| b.min(r)));
    }
    match best {
        Some(u) => u.clamp(0.0, 1.0),
        None => {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if amh_cond_cdf(theta, v, mid) < w {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    }
}
