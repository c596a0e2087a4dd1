//! Bivariate copulas: distribution function, density, conditional
//! distribution (h-function) and its inverse, survival combination and
//! Kendall's tau.
//!
//! Every family here is exchangeable, C(u, v) = C(v, u), so the law of U
//! given V = v is the same h-function with the arguments swapped.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bvn;
use crate::error::{Error, Result};
use crate::normal;
use crate::quadrature::{self, GaussLegendre};

const SIMPLEX_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Independence,
    Comonotone,
    Countermonotone,
    Frechet,
    Gumbel,
    Clayton,
    Frank,
    Gaussian,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Independence,
        Family::Comonotone,
        Family::Countermonotone,
        Family::Frechet,
        Family::Gumbel,
        Family::Clayton,
        Family::Frank,
        Family::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Comonotone => "comonotone",
            Family::Countermonotone => "countermonotone",
            Family::Frechet => "frechet",
            Family::Gumbel => "gumbel",
            Family::Clayton => "clayton",
            Family::Frank => "frank",
            Family::Gaussian => "gaussian",
        }
    }

    /// Families with a density on the open square.
    pub fn has_density(self) -> bool {
        !matches!(
            self,
            Family::Comonotone | Family::Countermonotone | Family::Frechet
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| f.name() == lower)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown copula family `{s}`")))
    }
}

/// A copula family together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum CopulaSpec {
    Independence,
    Comonotone,
    Countermonotone,
    /// α·M + β·Π + γ·W
    Frechet {
        alpha: f64,
        beta: f64,
        gamma: f64,
    },
    Gumbel {
        theta: f64,
    },
    Clayton {
        theta: f64,
    },
    Frank {
        theta: f64,
    },
    Gaussian {
        rho: f64,
    },
}

/// A point of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPoint {
    pub u: f64,
    pub v: f64,
}

impl UnitPoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        for (name, x) in [("u", u), ("v", v)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::ParamOutOfDomain {
                    param: name,
                    value: x,
                    bound: "0 <= x <= 1",
                });
            }
        }
        Ok(Self { u, v })
    }
}

fn out_of_domain(param: &'static str, value: f64, bound: &'static str) -> Error {
    Error::ParamOutOfDomain {
        param,
        value,
        bound,
    }
}

/// Parses `family`, `family:param` or `frechet:alpha,beta,gamma`.
impl FromStr for CopulaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let family: Family = name.parse()?;
        let nums = args
            .map(|a| {
                a.split(',')
                    .map(|x| {
                        x.trim().parse::<f64>().map_err(|_| {
                            Error::InvalidConfig(format!("bad copula parameter `{x}` in `{s}`"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .transpose()?
            .unwrap_or_default();
        let spec = match (family, nums.as_slice()) {
            (Family::Independence, []) => CopulaSpec::Independence,
            (Family::Comonotone, []) => CopulaSpec::Comonotone,
            (Family::Countermonotone, []) => CopulaSpec::Countermonotone,
            (Family::Frechet, &[alpha, beta, gamma]) => CopulaSpec::Frechet { alpha, beta, gamma },
            (Family::Gumbel | Family::Clayton | Family::Frank | Family::Gaussian, &[p]) => {
                CopulaSpec::one_parameter(family, p)?
            }
            _ => {
                return Err(Error::InvalidConfig(format!(
                    "wrong number of parameters for {family} in `{s}`"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl CopulaSpec {
    pub fn family(&self) -> Family {
        match self {
            CopulaSpec::Independence => Family::Independence,
            CopulaSpec::Comonotone => Family::Comonotone,
            CopulaSpec::Countermonotone => Family::Countermonotone,
            CopulaSpec::Frechet { .. } => Family::Frechet,
            CopulaSpec::Gumbel { .. } => Family::Gumbel,
            CopulaSpec::Clayton { .. } => Family::Clayton,
            CopulaSpec::Frank { .. } => Family::Frank,
            CopulaSpec::Gaussian { .. } => Family::Gaussian,
        }
    }

    /// Builds a one-parameter family, validating the parameter.
    pub fn one_parameter(family: Family, param: f64) -> Result<Self> {
        let spec = match family {
            Family::Gumbel => CopulaSpec::Gumbel { theta: param },
            Family::Clayton => CopulaSpec::Clayton { theta: param },
            Family::Frank => CopulaSpec::Frank { theta: param },
            Family::Gaussian => CopulaSpec::Gaussian { rho: param },
            Family::Independence => CopulaSpec::Independence,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "{other} is not a one-parameter family"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The single parameter of a one-parameter family.
    pub fn parameter(&self) -> Option<f64> {
        match *self {
            CopulaSpec::Gumbel { theta }
            | CopulaSpec::Clayton { theta }
            | CopulaSpec::Frank { theta } => Some(theta),
            CopulaSpec::Gaussian { rho } => Some(rho),
            _ => None,
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.family().has_density()
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaSpec::Independence | CopulaSpec::Comonotone | CopulaSpec::Countermonotone => {
                Ok(())
            }
            CopulaSpec::Frechet { alpha, beta, gamma } => {
                for (name, x) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
                    if !(x >= 0.0) {
                        return Err(out_of_domain(name, x, "weight >= 0"));
                    }
                }
                let total = alpha + beta + gamma;
                if (total - 1.0).abs() > SIMPLEX_TOL {
                    return Err(out_of_domain(
                        "alpha+beta+gamma",
                        total,
                        "alpha + beta + gamma = 1",
                    ));
                }
                Ok(())
            }
            CopulaSpec::Gumbel { theta } => {
                if theta >= 1.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(out_of_domain("theta", theta, "theta >= 1"))
                }
            }
            CopulaSpec::Clayton { theta } => {
                if theta > 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(out_of_domain("theta", theta, "theta > 0"))
                }
            }
            CopulaSpec::Frank { theta } => {
                if theta != 0.0 && theta.is_finite() {
                    Ok(())
                } else {
                    Err(out_of_domain("theta", theta, "theta != 0"))
                }
            }
            CopulaSpec::Gaussian { rho } => {
                if rho > -1.0 && rho < 1.0 {
                    Ok(())
                } else {
                    Err(out_of_domain("rho", rho, "-1 < rho < 1"))
                }
            }
        }
    }

    /// C(u, v).
    pub fn cdf(&self, u: f64, v: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v));
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v;
        }
        if v >= 1.0 {
            return u;
        }
        let c = match *self {
            CopulaSpec::Independence => u * v,
            CopulaSpec::Comonotone => u.min(v),
            CopulaSpec::Countermonotone => (u + v - 1.0).max(0.0),
            CopulaSpec::Frechet { alpha, beta, gamma } => {
                alpha * u.min(v) + beta * u * v + gamma * (u + v - 1.0).max(0.0)
            }
            CopulaSpec::Gumbel { theta } => {
                let z = gumbel_z(-u.ln(), -v.ln(), theta);
                (-z).exp()
            }
            CopulaSpec::Clayton { theta } => {
                let ln_s = clayton_ln_s(-theta * u.ln(), -theta * v.ln());
                (-ln_s / theta).exp()
            }
            CopulaSpec::Frank { theta } => {
                let den = frank_den(theta, u, v);
                -(den / -(-theta).exp_m1()).ln() / theta
            }
            CopulaSpec::Gaussian { rho } => bvn::cdf(
                normal::quantile_unchecked(u),
                normal::quantile_unchecked(v),
                rho,
            ),
        };
        c.clamp(0.0, 1.0)
    }

    pub fn cdf_at(&self, p: UnitPoint) -> f64 {
        self.cdf(p.u, p.v)
    }

    /// log c(u, v) on the open square.
    pub fn log_density(&self, u: f64, v: f64) -> Result<f64> {
        Ok(match *self {
            CopulaSpec::Independence => 0.0,
            CopulaSpec::Comonotone | CopulaSpec::Countermonotone | CopulaSpec::Frechet { .. } => {
                return Err(Error::NoDensity {
                    family: self.family().name(),
                })
            }
            CopulaSpec::Gumbel { theta } => {
                let x = -u.ln();
                let y = -v.ln();
                let z = gumbel_z(x, y, theta);
                x + y - z
                    + (theta - 1.0) * (x.ln() + y.ln())
                    + (1.0 - 2.0 * theta) * z.ln()
                    + (z + theta - 1.0).ln()
            }
            CopulaSpec::Clayton { theta } => {
                let a = -theta * u.ln();
                let b = -theta * v.ln();
                let ln_s = clayton_ln_s(a, b);
                theta.ln_1p() + (a + b) * (theta + 1.0) / theta - (1.0 / theta + 2.0) * ln_s
            }
            CopulaSpec::Frank { theta } => {
                let den = frank_den(theta, u, v);
                (theta * -(-theta).exp_m1()).ln() - theta * (u + v) - 2.0 * den.abs().ln()
            }
            CopulaSpec::Gaussian { rho } => {
                let x = normal::quantile_unchecked(u);
                let y = normal::quantile_unchecked(v);
                let one_m = 1.0 - rho * rho;
                -(rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * one_m)
                    - 0.5 * one_m.ln()
            }
        })
    }

    /// c(u, v) = ∂²C/∂u∂v.
    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        self.log_density(u, v).map(f64::exp)
    }

    /// h(v | u) = P(V ≤ v | U = u) = ∂C(u, v)/∂u.
    pub fn conditional_cdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ConditionalUndefined { u });
        }
        let step = |at: f64| if v >= at { 1.0 } else { 0.0 };
        if v <= 0.0 {
            return Ok(0.0);
        }
        if v >= 1.0 {
            return Ok(1.0);
        }
        let h = match *self {
            CopulaSpec::Independence => v,
            CopulaSpec::Comonotone => step(u),
            CopulaSpec::Countermonotone => step(1.0 - u),
            CopulaSpec::Frechet { alpha, beta, gamma } => {
                alpha * step(u) + beta * v + gamma * step(1.0 - u)
            }
            CopulaSpec::Gumbel { theta } => {
                let x = -u.ln();
                let z = gumbel_z(x, -v.ln(), theta);
                (x - z + (theta - 1.0) * (x / z).ln()).exp()
            }
            CopulaSpec::Clayton { theta } => {
                let a = -theta * u.ln();
                let ln_s = clayton_ln_s(a, -theta * v.ln());
                ((1.0 + 1.0 / theta) * (a - ln_s)).exp()
            }
            CopulaSpec::Frank { theta } => {
                let den = frank_den(theta, u, v);
                (-theta * u).exp() * -(-theta * v).exp_m1() / den
            }
            CopulaSpec::Gaussian { rho } => {
                let x = normal::quantile_unchecked(u);
                let y = normal::quantile_unchecked(v);
                normal::cdf((y - rho * x) / (1.0 - rho * rho).sqrt())
            }
        };
        Ok(h.clamp(0.0, 1.0))
    }

    /// v = h⁻¹(w | u): the conditional quantile of V given U = u.
    pub fn conditional_quantile(&self, u: f64, w: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ConditionalUndefined { u });
        }
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::QuantileDomain { p: w });
        }
        let v = match *self {
            CopulaSpec::Independence => w,
            CopulaSpec::Comonotone => u,
            CopulaSpec::Countermonotone => 1.0 - u,
            CopulaSpec::Frechet { alpha, beta, gamma } => {
                frechet_generalized_inverse(alpha, beta, gamma, u, w)
            }
            CopulaSpec::Gumbel { theta } => gumbel_inverse(theta, u, w)?,
            CopulaSpec::Clayton { theta } => {
                let a = -theta * u.ln();
                let t = (-theta / (1.0 + theta) * w.ln()).exp_m1();
                (-softplus(t.ln() + a) / theta).exp()
            }
            CopulaSpec::Frank { theta } => {
                let d = (-theta).exp_m1();
                let ea = (-theta * u).exp();
                -(w * d / (w + (1.0 - w) * ea)).ln_1p() / theta
            }
            CopulaSpec::Gaussian { rho } => {
                let x = normal::quantile_unchecked(u);
                normal::cdf(rho * x + (1.0 - rho * rho).sqrt() * normal::quantile_unchecked(w))
            }
        };
        Ok(v.clamp(0.0, 1.0))
    }

    /// 1 − u − v + C(u, v): the survival copula evaluated at (1 − u, 1 − v).
    pub fn survival_value(&self, u: f64, v: f64) -> Result<f64> {
        let s = 1.0 - u - v + self.cdf(u, v);
        if s < -1e-12 {
            return Err(Error::Internal(format!(
                "negative survival probability {s:e} at ({u}, {v}) for {self:?}"
            )));
        }
        Ok(s.clamp(0.0, 1.0))
    }

    /// Kendall's tau, 4∬C dC − 1.
    ///
    /// Continuous families use the equivalent form 1 − 4∬ ∂₁C·∂₂C du dv,
    /// whose integrand stays in [0, 1], integrated adaptively with the inner
    /// range split on the diagonal. The singular families are exact.
    pub fn kendall_tau(&self) -> f64 {
        match *self {
            CopulaSpec::Independence => 0.0,
            CopulaSpec::Comonotone => 1.0,
            CopulaSpec::Countermonotone => -1.0,
            CopulaSpec::Frechet { alpha, beta, gamma } => {
                let s = alpha * alpha / 2.0
                    + beta * beta / 4.0
                    + 2.0 * alpha * beta / 3.0
                    + alpha * gamma / 2.0
                    + beta * gamma / 3.0;
                4.0 * s - 1.0
            }
            _ => self.kendall_tau_numeric(),
        }
    }

    fn kendall_tau_numeric(&self) -> f64 {
        let rule = GaussLegendre::new(8);
        let h = |u: f64, v: f64| self.conditional_cdf(u, v).unwrap_or(0.0);
        let mut outer = |u: f64| {
            let mut inner = |v: f64| h(u, v) * h(v, u);
            quadrature::adaptive(&rule, 0.0, u, 1e-9, 30, &mut inner)
                + quadrature::adaptive(&rule, u, 1.0, 1e-9, 30, &mut inner)
        };
        let mut total = 0.0;
        for (a, b) in [(0.0, 0.5), (0.5, 1.0)] {
            total += quadrature::adaptive(&rule, a, b, 1e-8, 30, &mut outer);
        }
        (1.0 - 4.0 * total).clamp(-1.0, 1.0)
    }
}

/// (x^θ + y^θ)^{1/θ} without overflow.
fn gumbel_z(x: f64, y: f64, theta: f64) -> f64 {
    let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
    if hi == 0.0 {
        return 0.0;
    }
    if hi.is_infinite() {
        return f64::INFINITY;
    }
    hi * ((lo / hi).powf(theta).ln_1p() / theta).exp()
}

/// ln(e^a + e^b − 1) for a, b ≥ 0.
fn clayton_ln_s(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + ((-hi).exp() * lo.exp_m1()).ln_1p()
}

/// (a − e^{−θ}) + b(1 − a) with a = e^{−θu}, b = e^{−θv}, written so that
/// both terms share the sign of θ. Equals −[e^{−θ} − 1 + (a − 1)(b − 1)].
fn frank_den(theta: f64, u: f64, v: f64) -> f64 {
    (-theta * u).exp() * -(-theta * (1.0 - u)).exp_m1() - (-theta * v).exp() * (-theta * u).exp_m1()
}

/// ln(1 + e^x)
fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

fn frechet_generalized_inverse(alpha: f64, beta: f64, gamma: f64, u: f64, w: f64) -> f64 {
    // Jumps of size α at v = u and γ at v = 1 − u, plus β·v continuous part.
    let (p1, m1, p2, m2) = if u <= 1.0 - u {
        (u, alpha, 1.0 - u, gamma)
    } else {
        (1.0 - u, gamma, u, alpha)
    };
    if w <= beta * p1 {
        return w / beta;
    }
    if w <= beta * p1 + m1 {
        return p1;
    }
    if w <= beta * p2 + m1 {
        return (w - m1) / beta;
    }
    if w <= beta * p2 + m1 + m2 {
        return p2;
    }
    ((w - m1 - m2) / beta).min(1.0)
}

/// Solves h(v | u) = w for Gumbel.
///
/// With x = −ln u and z = (x^θ + y^θ)^{1/θ}, h = exp(x − z)(x/z)^{θ−1}, so
/// t = ln z solves g(t) = e^t − x + (θ − 1)(t − ln x) + ln w = 0. g is convex
/// and increasing, so Newton (kept inside a bisection bracket) converges from
/// any start.
fn gumbel_inverse(theta: f64, u: f64, w: f64) -> Result<f64> {
    let x = -u.ln();
    let ln_x = x.ln();
    let ln_w = w.ln();
    let g = |t: f64| t.exp() - x + (theta - 1.0) * (t - ln_x) + ln_w;

    let mut lo = ln_x;
    let mut hi = ln_x.max(0.0) + 1.0;
    let mut expand = 0;
    while g(hi) < 0.0 {
        hi = 2.0 * hi + 1.0;
        expand += 1;
        if expand > 200 || !hi.is_finite() {
            return Err(Error::RootNotBracketed { u, w });
        }
    }
    let mut t = hi;
    for _ in 0..200 {
        let gt = g(t);
        if gt > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let step = gt / (t.exp() + theta - 1.0);
        let mut next = t - step;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done =
            (next - t).abs() <= 1e-15 * t.abs().max(1.0) || hi - lo <= 1e-15 * hi.abs().max(1.0);
        t = next;
        if done {
            break;
        }
    }
    if !t.is_finite() {
        return Err(Error::RootNotBracketed { u, w });
    }
    // y = z (1 − (x/z)^θ)^{1/θ}
    let ratio_pow = (theta * (ln_x - t)).exp_m1();
    let y = t.exp() * (-ratio_pow).powf(1.0 / theta);
    Ok((-y).exp())
}
