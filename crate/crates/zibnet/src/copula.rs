//! Frank copula primitives: distribution, conditional distribution, density,
//! inverse conditional (for sampling), and the dependence-to-rank-correlation
//! mappings.
//!
//! All closed forms are 0/0 at theta = 0, so every operation switches to its
//! independence limit for |theta| below [`THETA_INDEPENDENT_EPS`]. Expressions
//! use `expm1`/`ln_1p` so they stay finite for |theta| up to the search bound
//! of 35 used by the fitting layer.

use crate::error::{Error, Result};
use crate::numerics;
use serde::{Deserialize, Serialize};

/// Below this |theta| the copula is treated as the independence copula.
pub const THETA_INDEPENDENT_EPS: f64 = 1e-8;

/// Frank dependence parameter. Any finite real value is allowed; theta = 0 is
/// the independence limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FrankTheta(pub f64);

impl FrankTheta {
    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_independent(self) -> bool {
        self.0.abs() < THETA_INDEPENDENT_EPS
    }
}

impl From<f64> for FrankTheta {
    fn from(v: f64) -> Self {
        FrankTheta(v)
    }
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in [0,1], got {x}")))
    }
}

/// expm1(-t) + expm1(-tu) * expm1(-tv), the denominator shared by the
/// conditional distribution and the density. The expm1 form cancels
/// catastrophically at large |t| (both products are near -1 while the sum is
/// tiny), so there it is expanded into pure exponentials, whose largest term
/// dominates the sum without cancellation.
fn frank_denom(u: f64, v: f64, t: f64) -> f64 {
    if t.abs() <= 1.0 {
        (-t).exp_m1() + (-t * u).exp_m1() * (-t * v).exp_m1()
    } else {
        (-t).exp() + (-t * (u + v)).exp() - (-t * u).exp() - (-t * v).exp()
    }
}

/// Frank copula distribution function C(u, v; theta).
pub fn frank_cdf(u: f64, v: f64, theta: FrankTheta) -> Result<f64> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    if theta.is_independent() {
        return Ok(u * v);
    }
    let t = theta.0;
    let c = if t.abs() <= 1.0 {
        let num = (-t * u).exp_m1() * (-t * v).exp_m1() / (-t).exp_m1();
        -(num.ln_1p()) / t
    } else {
        // 1 + expm1(-tu)expm1(-tv)/expm1(-t) = frank_denom / expm1(-t)
        -(frank_denom(u, v, t) / (-t).exp_m1()).ln() / t
    };
    Ok(c.clamp(0.0, 1.0))
}

/// Conditional distribution C_{v|u}(v | u; theta) = dC/du.
pub fn frank_cond_cdf(v: f64, u: f64, theta: FrankTheta) -> Result<f64> {
    check_unit("v", v)?;
    check_unit("u", u)?;
    if theta.is_independent() {
        return Ok(v);
    }
    let t = theta.0;
    // e^{-tu} * expm1(-tv) = e^{-t(u+v)} - e^{-tu}, cancellation-free for
    // the same reason as the denominator
    let num = if t.abs() <= 1.0 {
        (-t * u).exp() * (-t * v).exp_m1()
    } else {
        (-t * (u + v)).exp() - (-t * u).exp()
    };
    Ok((num / frank_denom(u, v, t)).clamp(0.0, 1.0))
}

/// Frank copula density c(u, v; theta) on the open unit square.
pub fn frank_pdf(u: f64, v: f64, theta: FrankTheta) -> Result<f64> {
    if !(0.0 < u && u < 1.0) || !(0.0 < v && v < 1.0) {
        return Err(Error::Domain(format!(
            "frank_pdf requires (u, v) in the open unit square, got ({u}, {v})"
        )));
    }
    if theta.is_independent() {
        return Ok(1.0);
    }
    Ok(frank_log_pdf(u, v, theta).exp())
}

/// log c(u, v; theta); used directly by the likelihood code to avoid
/// overflow at large |theta|.
pub fn frank_log_pdf(u: f64, v: f64, theta: FrankTheta) -> f64 {
    if theta.is_independent() {
        return 0.0;
    }
    let t = theta.0;
    // -t * expm1(-t) > 0 for every t != 0
    let a = -t * (-t).exp_m1();
    let d = frank_denom(u, v, t);
    a.ln() - t * (u + v) - 2.0 * d.abs().ln()
}

/// Inverse of the conditional distribution: v with C_{v|u}(v | u) = w.
pub fn frank_inv_cond(w: f64, u: f64, theta: FrankTheta) -> Result<f64> {
    check_unit("w", w)?;
    check_unit("u", u)?;
    if theta.is_independent() {
        return Ok(w);
    }
    let t = theta.0;
    let num = w * (-t).exp_m1();
    let den = w + (-t * u).exp() * (1.0 - w);
    let mut v = (-(num / den).ln_1p() / t).clamp(0.0, 1.0);
    // the closed form loses a few digits at large |theta|; polish with
    // Newton on the conditional CDF (its v-derivative is the density)
    for _ in 0..3 {
        if !(0.0 < v && v < 1.0) {
            break;
        }
        let f = frank_cond_cdf(v, u, theta)? - w;
        let d = frank_log_pdf(u, v, theta).exp();
        if !(d.is_finite() && d > 0.0) {
            break;
        }
        let step = f / d;
        let next = (v - step).clamp(0.0, 1.0);
        v = next;
        if step.abs() < 1e-15 {
            break;
        }
    }
    Ok(v)
}

/// Kendall's tau of the Frank copula, via the first Debye function:
/// tau = 1 - (4/theta) * (1 - D1(theta)).
pub fn theta_to_kendall_tau(theta: FrankTheta) -> f64 {
    if theta.is_independent() {
        return 0.0;
    }
    let t = theta.0;
    // D1(t) = (1/t) * int_0^t s / (e^s - 1) ds; the integrand is smooth with
    // limit 1 at s = 0.
    let integrand = |s: f64| {
        if s.abs() < 1e-8 {
            1.0 - s / 2.0
        } else {
            s / s.exp_m1()
        }
    };
    let d1 = numerics::integrate(integrand, 0.0, t, 1e-12) / t;
    1.0 - 4.0 / t * (1.0 - d1)
}

/// Spearman's rho of the Frank copula: 12 * double-integral of C over the
/// unit square, minus 3, by tensor Gauss-Legendre quadrature.
pub fn theta_to_spearman_rho(theta: FrankTheta) -> f64 {
    if theta.is_independent() {
        return 0.0;
    }
    let (nodes, weights) = numerics::gauss_legendre_unit(64);
    let mut acc = 0.0;
    for (&u, &wu) in nodes.iter().zip(&weights) {
        for (&v, &wv) in nodes.iter().zip(&weights) {
            acc += wu * wv * frank_cdf(u, v, theta).expect("unit square");
        }
    }
    12.0 * acc - 3.0
}
