//! Inference for the margins: normal marginals fitted first, then the copula
//! parameter by maximizing the copula log-likelihood of the transformed
//! data. The Fréchet mixture has no density and is fitted by least squares
//! against the empirical copula instead.

use serde::{Deserialize, Serialize};

use crate::copula::{CopulaSpec, Family, UnitPoint};
use crate::error::{Error, Result};
use crate::marginals::{AnnualizedParams, NormalMarginal};

const PSEUDO_EPS: f64 = 1e-12;
const SEARCH_TOL: f64 = 1e-6;

/// Date-aligned log-return pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReturnPanel {
    pub pairs: Vec<(f64, f64)>,
    /// Periods spanned by each observation (1 for daily data at daily annualization).
    pub horizon: u32,
}

impl ReturnPanel {
    pub fn new(pairs: Vec<(f64, f64)>) -> Self {
        Self { pairs, horizon: 1 }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn first(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.0).collect()
    }

    pub fn second(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.1).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PseudoObservations {
    pub pairs: Vec<UnitPoint>,
}

impl PseudoObservations {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl From<Vec<UnitPoint>> for PseudoObservations {
    fn from(pairs: Vec<UnitPoint>) -> Self {
        Self { pairs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: CopulaSpec,
    /// Maximized copula log-likelihood (absent for Fréchet).
    pub loglik: Option<f64>,
    /// Least-squares distance to the empirical copula (Fréchet only).
    pub distance: Option<f64>,
    pub iterations: usize,
    pub n: usize,
    /// The optimum sits on the edge of the search bracket.
    pub at_boundary: bool,
}

fn per_observation(p: &AnnualizedParams, horizon: u32) -> Result<NormalMarginal> {
    if !(p.sigma > 0.0) {
        return Err(Error::DegenerateSeries);
    }
    let scale = f64::from(horizon.max(1)) / f64::from(p.periods_per_year);
    NormalMarginal::new(p.mu * scale, p.sigma * scale.sqrt())
}

/// (F₁(x₁ₖ), F₂(x₂ₖ)) under the fitted normal marginals.
pub fn pseudo_observations(
    panel: &ReturnPanel,
    p1: &AnnualizedParams,
    p2: &AnnualizedParams,
) -> Result<PseudoObservations> {
    let m1 = per_observation(p1, panel.horizon)?;
    let m2 = per_observation(p2, panel.horizon)?;
    let clamp = |x: f64| x.clamp(PSEUDO_EPS, 1.0 - PSEUDO_EPS);
    Ok(PseudoObservations {
        pairs: panel
            .pairs
            .iter()
            .map(|&(x1, x2)| UnitPoint {
                u: clamp(m1.cdf(x1)),
                v: clamp(m2.cdf(x2)),
            })
            .collect(),
    })
}

/// Σ ln c(uₖ, vₖ).
pub fn copula_loglik(family: Family, param: f64, obs: &PseudoObservations) -> Result<f64> {
    if !family.has_density() {
        return Err(Error::NoDensity {
            family: family.name(),
        });
    }
    let spec = CopulaSpec::one_parameter(family, param)?;
    loglik_of(&spec, obs)
}

fn loglik_of(spec: &CopulaSpec, obs: &PseudoObservations) -> Result<f64> {
    obs.pairs.iter().map(|p| spec.log_density(p.u, p.v)).sum()
}

/// Parameter bracket searched for each one-parameter family.
pub fn search_brackets(family: Family) -> Result<Vec<(f64, f64)>> {
    Ok(match family {
        Family::Gumbel => vec![(1.0 + 1e-6, 50.0)],
        Family::Clayton => vec![(1e-6, 50.0)],
        Family::Frank => vec![(-50.0, -1e-6), (1e-6, 50.0)],
        Family::Gaussian => vec![(-1.0 + 1e-6, 1.0 - 1e-6)],
        other => {
            return Err(Error::InvalidConfig(format!(
                "{other} is not fitted by likelihood search"
            )))
        }
    })
}

/// Copula-stage maximum likelihood for Gumbel, Clayton, Frank or Gaussian.
pub fn fit_copula(family: Family, obs: &PseudoObservations) -> Result<FitResult> {
    if obs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let brackets = search_brackets(family)?;
    let objective = |x: f64| match copula_loglik(family, x, obs) {
        Ok(ll) if ll.is_finite() => ll,
        _ => f64::NEG_INFINITY,
    };
    let mut best: Option<(f64, f64, usize, bool)> = None;
    let mut iterations = 0;
    for (lo, hi) in brackets {
        let (x, fx, iters) = golden_section_max(&objective, lo, hi, SEARCH_TOL);
        iterations += iters;
        let at_boundary = (x - lo).abs() < 10.0 * SEARCH_TOL || (hi - x).abs() < 10.0 * SEARCH_TOL;
        if fx.is_finite() && best.is_none_or(|b| fx > b.1) {
            best = Some((x, fx, iters, at_boundary));
        }
    }
    let (x, fx, _, at_boundary) = best.ok_or_else(|| {
        Error::SearchFailed(format!(
            "{family} log-likelihood not finite anywhere in the bracket"
        ))
    })?;
    Ok(FitResult {
        spec: CopulaSpec::one_parameter(family, x)?,
        loglik: Some(fx),
        distance: None,
        iterations,
        n: obs.len(),
        at_boundary,
    })
}

/// Golden-section search for the maximum of a unimodal function on [a, b].
/// Returns (argmax, max, iterations).
fn golden_section_max<F: Fn(f64) -> f64>(
    f: &F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64, usize) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while b - a > tol {
        iters += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // The bracket ends are never evaluated by the loop; keep the best seen.
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx, iters), |acc, (p, fp)| {
            if fp > acc.1 {
                (p, fp, iters)
            } else {
                acc
            }
        })
}

/// Cₙ(u, v) = (1/n)·#{k : uₖ ≤ u and vₖ ≤ v}.
pub fn empirical_copula(obs: &PseudoObservations, u: f64, v: f64) -> f64 {
    if obs.is_empty() {
        return 0.0;
    }
    let hits = obs.pairs.iter().filter(|p| p.u <= u && p.v <= v).count();
    hits as f64 / obs.len() as f64
}

/// Half-width of the diagonal and anti-diagonal bands used by the Fréchet fit.
pub const FRECHET_BAND: f64 = 0.08;

/// Minimum-distance fit of α·M + β·Π + γ·W to the empirical copula mass of
/// the bands |u − v| ≤ ε and |u + v − 1| ≤ ε, which carry the singular
/// components. A 0.01 simplex search is followed by a 1e-4 search within
/// ±0.01 of the coarse optimum.
///
/// CDF values alone identify the mixture poorly: (M + W)/2 and Π coincide
/// on both diagonals.
pub fn fit_frechet(obs: &PseudoObservations) -> Result<FitResult> {
    if obs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let eps = FRECHET_BAND;
    let n = obs.len() as f64;
    let diag = obs
        .pairs
        .iter()
        .filter(|p| (p.u - p.v).abs() <= eps)
        .count() as f64
        / n;
    let anti = obs
        .pairs
        .iter()
        .filter(|p| (p.u + p.v - 1.0).abs() <= eps)
        .count() as f64
        / n;
    // Π mass of either band; M puts ε on the anti-diagonal band, W ε on the diagonal.
    let pi_band = 2.0 * eps - eps * eps;
    let distance = |alpha: f64, gamma: f64| -> f64 {
        let beta = 1.0 - alpha - gamma;
        let model_diag = alpha + beta * pi_band + gamma * eps;
        let model_anti = gamma + beta * pi_band + alpha * eps;
        (diag - model_diag).powi(2) + (anti - model_anti).powi(2)
    };

    // Weights are integer multiples of 1/scale so that α + β + γ = 1 exactly
    // up to one rounding.
    let search = |scale: i64, a_range: (i64, i64), g_range: (i64, i64)| {
        let mut best = (0i64, 0i64, f64::INFINITY);
        let mut evals = 0usize;
        for a in a_range.0.max(0)..=a_range.1.min(scale) {
            for g in g_range.0.max(0)..=g_range.1.min(scale - a) {
                evals += 1;
                let d = distance(a as f64 / scale as f64, g as f64 / scale as f64);
                if d < best.2 {
                    best = (a, g, d);
                }
            }
        }
        (best, evals)
    };
    let ((a0, g0, _), coarse_evals) = search(100, (0, 100), (0, 100));
    let ((a, g, d), fine_evals) = search(
        10_000,
        (a0 * 100 - 100, a0 * 100 + 100),
        (g0 * 100 - 100, g0 * 100 + 100),
    );
    let alpha = a as f64 / 1e4;
    let gamma = g as f64 / 1e4;
    let beta = (10_000 - a - g) as f64 / 1e4;
    let spec = CopulaSpec::Frechet { alpha, beta, gamma };
    spec.validate()?;
    Ok(FitResult {
        spec,
        loglik: None,
        distance: Some(d),
        iterations: coarse_evals + fine_evals,
        n: obs.len(),
        at_boundary: false,
    })
}

/// Fits any supported family: likelihood search, or least squares for Fréchet.
pub fn fit_family(family: Family, obs: &PseudoObservations) -> Result<FitResult> {
    match family {
        Family::Frechet => fit_frechet(obs),
        _ => fit_copula(family, obs),
    }
}
