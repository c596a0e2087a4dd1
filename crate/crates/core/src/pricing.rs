//! Exchange option max{S₁(T) − S₂(T), 0} priced three ways: the GBM closed
//! form, Gibbs-chain Monte Carlo under a copula, and quadrature of the
//! survival-copula representation.

use serde::{Deserialize, Serialize};

use crate::copula::CopulaSpec;
use crate::error::{Error, Result};
use crate::gibbs::{self, ChainConfig};
use crate::marginals::NormalMarginal;
use crate::normal;
use crate::quadrature::GaussLegendre;

/// Spot prices, risk-free rate (per year) and time to expiry (years).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketState {
    pub s1: f64,
    pub s2: f64,
    pub r: f64,
    pub tau: f64,
}

impl MarketState {
    pub fn new(s1: f64, s2: f64, r: f64, tau: f64) -> Result<Self> {
        let s = Self { s1, s2, r, tau };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s1 > 0.0 && self.s1.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "s1 = {} must be > 0",
                self.s1
            )));
        }
        if !(self.s2 >= 0.0 && self.s2.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "s2 = {} must be >= 0",
                self.s2
            )));
        }
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidMarket(format!(
                "tau = {} must be >= 0",
                self.tau
            )));
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidMarket("r must be finite".into()));
        }
        Ok(())
    }

    pub fn discount(&self) -> f64 {
        (-self.r * self.tau).exp()
    }

    fn require_horizon(&self) -> Result<()> {
        if self.tau > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidMarket(
                "tau must be > 0 for this method".into(),
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceMethod {
    Margrabe,
    Mcmc,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub value: f64,
    /// Zero for deterministic methods. For MCMC this is the i.i.d. formula
    /// applied to a dependent chain, a lower bound on the true error.
    pub std_error: f64,
    pub method: PriceMethod,
    pub n_effective: usize,
}

impl PriceResult {
    fn exact(value: f64, method: PriceMethod) -> Self {
        Self {
            value,
            std_error: 0.0,
            method,
            n_effective: 0,
        }
    }

    /// Whether `std_error` ignores serial dependence.
    pub fn std_error_is_naive(&self) -> bool {
        self.method == PriceMethod::Mcmc
    }
}

#[inline]
pub fn payoff(s1_t: f64, s2_t: f64) -> f64 {
    (s1_t - s2_t).max(0.0)
}

/// Closed-form price under correlated GBM.
pub fn margrabe_price(
    state: &MarketState,
    sigma1: f64,
    sigma2: f64,
    rho: f64,
) -> Result<PriceResult> {
    state.validate()?;
    if !(sigma1 > 0.0) || !(sigma2 >= 0.0) {
        return Err(Error::InvalidMarket(format!(
            "volatilities must satisfy sigma1 > 0, sigma2 >= 0 (got {sigma1}, {sigma2})"
        )));
    }
    if !(-1.0..=1.0).contains(&rho) {
        return Err(Error::ParamOutOfDomain {
            param: "rho",
            value: rho,
            bound: "-1 <= rho <= 1",
        });
    }
    let var = sigma1 * sigma1 + sigma2 * sigma2 - 2.0 * rho * sigma1 * sigma2;
    if var < -1e-15 {
        return Err(Error::NegativeVariance(var));
    }
    let MarketState { s1, s2, tau, .. } = *state;
    if s2 == 0.0 {
        return Ok(PriceResult::exact(s1, PriceMethod::Margrabe));
    }
    if tau == 0.0 || var <= 0.0 {
        return Ok(PriceResult::exact(payoff(s1, s2), PriceMethod::Margrabe));
    }
    let vol = (var * tau).sqrt();
    let d1 = ((s1 / s2).ln() + 0.5 * vol * vol) / vol;
    let d2 = d1 - vol;
    let value = (s1 * normal::cdf(d1) - s2 * normal::cdf(d2)).max(0.0);
    Ok(PriceResult::exact(value, PriceMethod::Margrabe))
}

/// Discounted chain average of the payoff with S_i(T) = S_i e^{X_i},
/// X_i = F_i⁻¹(u_i) over the kept Gibbs pairs.
pub fn mcmc_price(
    state: &MarketState,
    spec: &CopulaSpec,
    m1: &NormalMarginal,
    m2: &NormalMarginal,
    config: &ChainConfig,
) -> Result<PriceResult> {
    state.validate()?;
    state.require_horizon()?;
    m1.validate()?;
    m2.validate()?;
    let chain = gibbs::run_chain(spec, config)?;
    let n = chain.pairs.len();
    // Welford
    let mut mean = 0.0;
    let mut m2_acc = 0.0;
    for (k, p) in chain.pairs.iter().enumerate() {
        let x1 = m1.quantile_transform(p.u)?;
        let x2 = m2.quantile_transform(p.v)?;
        let f = payoff(state.s1 * x1.exp(), state.s2 * x2.exp());
        let delta = f - mean;
        mean += delta / (k + 1) as f64;
        m2_acc += delta * (f - mean);
    }
    let sd = if n > 1 {
        (m2_acc / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    let df = state.discount();
    Ok(PriceResult {
        value: df * mean,
        std_error: df * sd / (n as f64).sqrt(),
        method: PriceMethod::Mcmc,
        n_effective: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Panels on the first pass over the log-price range.
    pub initial_panels: usize,
    pub max_doublings: u32,
    /// Successive passes must agree within `tolerance · S₁`.
    pub tolerance: f64,
    /// Gauss-Legendre nodes per panel.
    pub nodes: usize,
    /// Tail mass beyond the integration range, per asset.
    pub tail_prob: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            initial_panels: 16,
            max_doublings: 12,
            tolerance: 1e-6,
            nodes: 10,
            tail_prob: 1e-10,
        }
    }
}

/// V = e^{−rτ} ∫₀^∞ [(1 − u(z)) − C̄(1 − u(z), 1 − v(z))] dz with
/// u(z) = F₁(ln(z/S₁)), v(z) = F₂(ln(z/S₂)) and C̄(1−u, 1−v) = 1 − u − v + C(u, v).
///
/// The first term integrates to E[S₁(T)] and the second to E[min(S₁(T), S₂(T))].
/// Under the martingale drift e^{−rτ}E[S₁(T)] = S₁, giving the familiar
/// S₁ − e^{−rτ}∫C̄ dz. The integrand vanishes at both ends, so the range is
/// cut at the `tail_prob` lognormal quantiles and split into panels uniform
/// in ln z.
pub fn quadrature_price(
    state: &MarketState,
    spec: &CopulaSpec,
    m1: &NormalMarginal,
    m2: &NormalMarginal,
    settings: &QuadratureSettings,
) -> Result<PriceResult> {
    state.validate()?;
    state.require_horizon()?;
    spec.validate()?;
    m1.validate()?;
    m2.validate()?;
    if !(state.s2 > 0.0) {
        return Err(Error::InvalidMarket(
            "quadrature pricing needs s2 > 0".into(),
        ));
    }
    if settings.initial_panels == 0 || settings.nodes == 0 {
        return Err(Error::InvalidConfig(
            "quadrature needs panels and nodes".into(),
        ));
    }
    let q_lo = normal::quantile(settings.tail_prob)?;
    let q_hi = -q_lo;
    let (ln_s1, ln_s2) = (state.s1.ln(), state.s2.ln());
    let t_lo = (ln_s1 + m1.mean + m1.sd * q_lo).min(ln_s2 + m2.mean + m2.sd * q_lo);
    let t_hi = (ln_s1 + m1.mean + m1.sd * q_hi).max(ln_s2 + m2.mean + m2.sd * q_hi);

    let integrand = |t: f64| -> Result<f64> {
        let z = t.exp();
        let u = m1.cdf(t - ln_s1);
        let v = m2.cdf(t - ln_s2);
        Ok(((1.0 - u) - spec.survival_value(u, v)?) * z)
    };
    let rule = GaussLegendre::new(settings.nodes);
    let pass = |panels: usize| -> Result<f64> {
        let width = (t_hi - t_lo) / panels as f64;
        let mut total = 0.0;
        let mut err = None;
        for i in 0..panels {
            let a = t_lo + i as f64 * width;
            total += rule.integrate(a, a + width, |t| match integrand(t) {
                Ok(x) => x,
                Err(e) => {
                    err.get_or_insert(e);
                    0.0
                }
            });
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    };

    let target = settings.tolerance * state.s1;
    let mut panels = settings.initial_panels;
    let mut prev = pass(panels)?;
    let mut last_change = f64::INFINITY;
    for _ in 0..settings.max_doublings {
        panels *= 2;
        let next = pass(panels)?;
        last_change = (next - prev).abs();
        prev = next;
        if last_change <= target {
            return Ok(PriceResult {
                value: (state.discount() * prev).max(0.0),
                std_error: 0.0,
                method: PriceMethod::Quadrature,
                n_effective: panels * settings.nodes,
            });
        }
    }
    Err(Error::TruncationNotConverged {
        doublings: settings.max_doublings,
        last_change,
    })
}
