//! Normal log-return marginals: risk-neutral construction, the quantile map
//! from unit samples to log-returns, and closed-form marginal MLE.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

pub const DEFAULT_PERIODS_PER_YEAR: u32 = 252;

/// Law of a log-return X ~ N(mean, sd²) over one pricing horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalMarginal {
    pub mean: f64,
    pub sd: f64,
}

impl NormalMarginal {
    pub fn new(mean: f64, sd: f64) -> Result<Self> {
        let m = Self { mean, sd };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sd > 0.0 && self.sd.is_finite()) {
            return Err(Error::ParamOutOfDomain {
                param: "sd",
                value: self.sd,
                bound: "sd > 0",
            });
        }
        if !self.mean.is_finite() {
            return Err(Error::ParamOutOfDomain {
                param: "mean",
                value: self.mean,
                bound: "finite",
            });
        }
        Ok(())
    }

    /// F(x)
    pub fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.mean) / self.sd)
    }

    /// F⁻¹(u) = mean + sd·Φ⁻¹(u).
    pub fn quantile_transform(&self, u: f64) -> Result<f64> {
        Ok(self.mean + self.sd * normal::quantile(u)?)
    }

    /// ln f(x)
    pub fn log_pdf(&self, x: f64) -> f64 {
        let z = (x - self.mean) / self.sd;
        -0.5 * z * z - self.sd.ln() - normal::SQRT_2PI.ln()
    }
}

/// Drift convention for risk-neutral log-returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftMode {
    /// mean = r·τ, as written for the pricing procedure. Not a martingale.
    PaperLiteral,
    /// mean = (r − σ²/2)·τ, so that E[e^X] = e^{rτ}.
    #[default]
    Martingale,
}

impl std::str::FromStr for DriftMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "martingale" => Ok(DriftMode::Martingale),
            "paper" | "paper-literal" | "literal" => Ok(DriftMode::PaperLiteral),
            other => Err(Error::InvalidConfig(format!(
                "unknown drift mode `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for DriftMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DriftMode::PaperLiteral => "paper",
            DriftMode::Martingale => "martingale",
        })
    }
}

pub fn risk_neutral_marginal(
    r: f64,
    sigma_annual: f64,
    tau: f64,
    mode: DriftMode,
) -> Result<NormalMarginal> {
    if !(sigma_annual > 0.0) {
        return Err(Error::ParamOutOfDomain {
            param: "sigma",
            value: sigma_annual,
            bound: "sigma > 0",
        });
    }
    if !(tau > 0.0) {
        return Err(Error::ParamOutOfDomain {
            param: "tau",
            value: tau,
            bound: "tau > 0",
        });
    }
    let mean = match mode {
        DriftMode::PaperLiteral => r * tau,
        DriftMode::Martingale => (r - 0.5 * sigma_annual * sigma_annual) * tau,
    };
    NormalMarginal::new(mean, sigma_annual * tau.sqrt())
}

/// Annualized drift and volatility of a log-return series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnualizedParams {
    pub mu: f64,
    pub sigma: f64,
    pub periods_per_year: u32,
}

impl AnnualizedParams {
    /// Per-period law implied by the annualized parameters.
    pub fn per_period(&self) -> Result<NormalMarginal> {
        let ppy = f64::from(self.periods_per_year);
        if self.sigma <= 0.0 {
            return Err(Error::DegenerateSeries);
        }
        NormalMarginal::new(self.mu / ppy, self.sigma / ppy.sqrt())
    }
}

/// Stage-one fit of one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalFit {
    pub params: AnnualizedParams,
    pub n: usize,
    /// Zero sample variance; `params.sigma` is 0 and pricing will reject it.
    pub degenerate: bool,
    /// Annualized volatility with the 1/(n−1) normalization, for comparison.
    pub sigma_unbiased: f64,
    /// Absent for a degenerate series.
    pub loglik: Option<f64>,
}

/// Gaussian MLE: mean and 1/n variance, annualized.
pub fn fit_marginal(log_returns: &[f64], periods_per_year: u32) -> Result<MarginalFit> {
    let n = log_returns.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if periods_per_year == 0 {
        return Err(Error::InvalidConfig("periods_per_year must be >= 1".into()));
    }
    let nf = n as f64;
    let mean = log_returns.iter().sum::<f64>() / nf;
    let ss: f64 = log_returns.iter().map(|x| (x - mean).powi(2)).sum();
    let constant = log_returns.iter().all(|&x| x == log_returns[0]);
    let sd = if constant { 0.0 } else { (ss / nf).sqrt() };
    let ppy = f64::from(periods_per_year);
    let degenerate = !(sd > 0.0);
    let loglik = (!degenerate).then(|| {
        let m = NormalMarginal { mean, sd };
        log_returns.iter().map(|&x| m.log_pdf(x)).sum()
    });
    Ok(MarginalFit {
        params: AnnualizedParams {
            mu: ppy * mean,
            sigma: ppy.sqrt() * sd,
            periods_per_year,
        },
        n,
        degenerate,
        sigma_unbiased: ppy.sqrt() * (ss / (nf - 1.0)).sqrt(),
        loglik,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    #[test]
    fn risk_neutral_examples() {
        let m = risk_neutral_marginal(0.03, 0.2, 0.25, DriftMode::PaperLiteral).unwrap();
        assert!((m.mean - 0.0075).abs() < 1e-15 && (m.sd - 0.1).abs() < 1e-15);
        let m = risk_neutral_marginal(0.03, 0.2, 0.25, DriftMode::Martingale).unwrap();
        assert!((m.mean - 0.0025).abs() < 1e-15 && (m.sd - 0.1).abs() < 1e-15);
        let lit = risk_neutral_marginal(0.0, 0.2, 0.25, DriftMode::PaperLiteral).unwrap();
        let mart = risk_neutral_marginal(0.0, 0.2, 0.25, DriftMode::Martingale).unwrap();
        assert_eq!(lit.sd, mart.sd);
        assert_eq!(lit.mean, 0.0);
        assert!((mart.mean + 0.005).abs() < 1e-15);
        assert!(risk_neutral_marginal(0.0, 0.0, 0.25, DriftMode::Martingale).is_err());
        assert!(risk_neutral_marginal(0.0, 0.2, 0.0, DriftMode::Martingale).is_err());
    }

    #[test]
    fn quantile_transform_examples() {
        let m = NormalMarginal::new(0.0075, 0.1).unwrap();
        assert_eq!(m.quantile_transform(0.5).unwrap(), 0.0075);
        let s = NormalMarginal::new(0.0, 1.0).unwrap();
        assert!((s.quantile_transform(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(matches!(
            m.quantile_transform(1.0),
            Err(Error::QuantileDomain { .. })
        ));
    }

    #[test]
    fn fit_constant_series_is_degenerate() {
        let fit = fit_marginal(&[0.001; 50], 252).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.params.sigma, 0.0);
        assert!((fit.params.mu - 0.252).abs() < 1e-12);
        assert!(fit.params.per_period().is_err());
    }

    #[test]
    fn fit_needs_two_points() {
        assert!(matches!(
            fit_marginal(&[0.1], 252),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn fit_recovers_annualized_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = NormalMarginal::new(0.3548 / 252.0, 0.2023 / 252f64.sqrt()).unwrap();
        let xs: Vec<f64> = (0..100_000)
            .map(|_| {
                let u = ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
                m.quantile_transform(u).unwrap()
            })
            .collect();
        let fit = fit_marginal(&xs, 252).unwrap();
        assert!((fit.params.mu - 0.3548).abs() < 0.02, "{}", fit.params.mu);
        assert!((fit.params.sigma - 0.2023).abs() < 0.002);
        assert!(fit.sigma_unbiased > fit.params.sigma);
    }

    #[test]
    fn fit_is_a_likelihood_maximum() {
        let xs = [0.012, -0.004, 0.003, 0.021, -0.017, 0.0005, 0.009, -0.011];
        let fit = fit_marginal(&xs, 252).unwrap();
        let ll = |mu: f64, sigma: f64| {
            let m = AnnualizedParams {
                mu,
                sigma,
                periods_per_year: 252,
            }
            .per_period()
            .unwrap();
            xs.iter().map(|&x| m.log_pdf(x)).sum::<f64>()
        };
        let best = ll(fit.params.mu, fit.params.sigma);
        assert!((best - fit.loglik.unwrap()).abs() < 1e-9);
        for dmu in [-1e-4, 0.0, 1e-4] {
            for dsig in [-1e-4, 0.0, 1e-4] {
                assert!(ll(fit.params.mu + dmu, fit.params.sigma + dsig) <= best + 1e-12);
            }
        }
    }
}
