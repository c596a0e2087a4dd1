//! Batch model comparison: fit on an in-sample window, then price the
//! exchange option on every out-of-sample date under each requested model.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaSpec, Family};
use crate::data::{compute_log_returns, DateRange, PriceSeries};
use crate::error::{Error, Result};
use crate::estimation::{fit_family, pseudo_observations, FitResult};
use crate::gibbs::ChainConfig;
use crate::marginals::{
    fit_marginal, risk_neutral_marginal, AnnualizedParams, DriftMode, MarginalFit,
    DEFAULT_PERIODS_PER_YEAR,
};
use crate::pricing::{
    margrabe_price, mcmc_price, quadrature_price, MarketState, PriceResult, QuadratureSettings,
};

/// Output columns, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Gumbel,
    Clayton,
    Frank,
    Gaussian,
    Gbm,
}

impl Model {
    pub const ALL: [Model; 5] = [
        Model::Gumbel,
        Model::Clayton,
        Model::Frank,
        Model::Gaussian,
        Model::Gbm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::Gumbel => "gumbel",
            Model::Clayton => "clayton",
            Model::Frank => "frank",
            Model::Gaussian => "gaussian",
            Model::Gbm => "gbm",
        }
    }

    /// Copula family priced for this column (GBM has none).
    pub fn family(self) -> Option<Family> {
        match self {
            Model::Gumbel => Some(Family::Gumbel),
            Model::Clayton => Some(Family::Clayton),
            Model::Frank => Some(Family::Frank),
            Model::Gaussian => Some(Family::Gaussian),
            Model::Gbm => None,
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown model `{s}`")))
    }
}

/// Sorted, deduplicated model list.
pub fn normalize_models(models: &[Model]) -> Vec<Model> {
    let mut out = models.to_vec();
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CopulaMethod {
    #[default]
    Mcmc,
    Quadrature,
}

impl FromStr for CopulaMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mcmc" => Ok(CopulaMethod::Mcmc),
            "quadrature" => Ok(CopulaMethod::Quadrature),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for CopulaMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CopulaMethod::Mcmc => "mcmc",
            CopulaMethod::Quadrature => "quadrature",
        })
    }
}

/// Settings for pricing out-of-sample dates against a frozen fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricingConfig {
    pub out_of_sample: DateRange,
    /// Time to expiry, a fixed offset from each evaluation date (years).
    pub tau: f64,
    pub r: f64,
    pub drift_mode: DriftMode,
    pub method: CopulaMethod,
    /// Base chain settings; each date runs on its own stream (the date's
    /// index within the out-of-sample window).
    pub chain: ChainConfig,
    pub quadrature: QuadratureSettings,
}

impl PricingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tau = {} must be > 0",
                self.tau
            )));
        }
        if !self.r.is_finite() {
            return Err(Error::InvalidConfig("r must be finite".into()));
        }
        self.chain.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub in_sample: DateRange,
    pub models: Vec<Model>,
    pub periods_per_year: u32,
    pub pricing: PricingConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("no models requested".into()));
        }
        if self.periods_per_year == 0 {
            return Err(Error::InvalidConfig("periods_per_year must be >= 1".into()));
        }
        if self.in_sample.end >= self.pricing.out_of_sample.start {
            return Err(Error::InvalidConfig(format!(
                "in-sample window {} must end before out-of-sample window {} starts",
                self.in_sample, self.pricing.out_of_sample
            )));
        }
        self.pricing.validate()
    }
}

/// Frozen in-sample parameters, written by `fit` and read by `price`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub in_sample: DateRange,
    pub periods_per_year: u32,
    /// Number of in-sample log-returns.
    pub n_returns: usize,
    /// Output columns requested at fit time.
    pub models: Vec<Model>,
    pub marginal1: MarginalFit,
    pub marginal2: MarginalFit,
    pub copulas: Vec<FitResult>,
}

impl FitArtifact {
    /// Artifact from known parameters, bypassing estimation.
    pub fn from_parameters(
        in_sample: DateRange,
        sigma1: f64,
        sigma2: f64,
        copulas: &[CopulaSpec],
    ) -> Result<Self> {
        let marginal = |sigma: f64| MarginalFit {
            params: AnnualizedParams {
                mu: 0.0,
                sigma,
                periods_per_year: DEFAULT_PERIODS_PER_YEAR,
            },
            n: 0,
            degenerate: !(sigma > 0.0),
            sigma_unbiased: sigma,
            loglik: None,
        };
        let copulas = copulas
            .iter()
            .map(|spec| {
                spec.validate()?;
                Ok(FitResult {
                    spec: *spec,
                    loglik: None,
                    distance: None,
                    iterations: 0,
                    n: 0,
                    at_boundary: false,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut models: Vec<Model> = Model::ALL
            .into_iter()
            .filter(|m| {
                m.family()
                    .is_some_and(|f| copulas.iter().any(|c| c.spec.family() == f))
            })
            .collect();
        if models.contains(&Model::Gaussian) {
            models.push(Model::Gbm);
        }
        Ok(Self {
            in_sample,
            periods_per_year: DEFAULT_PERIODS_PER_YEAR,
            n_returns: 0,
            models,
            marginal1: marginal(sigma1),
            marginal2: marginal(sigma2),
            copulas,
        })
    }

    pub fn copula(&self, family: Family) -> Option<&CopulaSpec> {
        self.copulas
            .iter()
            .map(|f| &f.spec)
            .find(|s| s.family() == family)
    }

    pub fn sigmas(&self) -> (f64, f64) {
        (self.marginal1.params.sigma, self.marginal2.params.sigma)
    }
}

/// Copula families that must be fitted to serve `models` (GBM needs ρ̂).
pub fn families_for(models: &[Model]) -> Vec<Family> {
    let mut fams: Vec<Family> = models.iter().filter_map(|m| m.family()).collect();
    if models.contains(&Model::Gbm) && !fams.contains(&Family::Gaussian) {
        fams.push(Family::Gaussian);
    }
    fams
}

/// Marginal MLE on the in-sample returns, then each copula `models` needs
/// on the transformed data.
pub fn fit_window(
    series: &PriceSeries,
    in_sample: DateRange,
    models: &[Model],
    periods_per_year: u32,
) -> Result<FitArtifact> {
    let models = normalize_models(models);
    if models.is_empty() {
        return Err(Error::InvalidConfig("no models requested".into()));
    }
    let window = series.window(&in_sample);
    if window.is_empty() {
        return Err(Error::EmptyWindow(format!("in-sample window {in_sample}")));
    }
    let panel = compute_log_returns(&window)?;
    let marginal1 = fit_marginal(&panel.first(), periods_per_year)?;
    let marginal2 = fit_marginal(&panel.second(), periods_per_year)?;
    if marginal1.degenerate || marginal2.degenerate {
        return Err(Error::DegenerateSeries);
    }
    let obs = pseudo_observations(&panel, &marginal1.params, &marginal2.params)?;
    let copulas = families_for(&models)
        .iter()
        .map(|&f| fit_family(f, &obs))
        .collect::<Result<Vec<_>>>()?;
    Ok(FitArtifact {
        in_sample,
        periods_per_year,
        n_returns: panel.len(),
        models,
        marginal1,
        marginal2,
        copulas,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Cell {
    Ok { value: f64, std_error: f64 },
    Error { reason: String },
}

impl Cell {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Ok { value, .. } => Some(*value),
            Cell::Error { .. } => None,
        }
    }
}

impl From<Result<PriceResult>> for Cell {
    fn from(r: Result<PriceResult>) -> Self {
        match r {
            Ok(p) => Cell::Ok {
                value: p.value,
                std_error: p.std_error,
            },
            Err(e) => Cell::Error {
                reason: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub date: NaiveDate,
    pub s1: f64,
    pub s2: f64,
    pub cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub models: Vec<Model>,
    pub rows: Vec<TableRow>,
}

/// Marker written in place of a price that could not be computed.
pub const ERROR_MARKER: &str = "error";

impl ComparisonTable {
    pub fn column(&self, model: Model) -> Option<Vec<Option<f64>>> {
        let idx = self.models.iter().position(|&m| m == model)?;
        Some(self.rows.iter().map(|r| r.cells[idx].value()).collect())
    }

    pub fn failures(&self) -> usize {
        self.rows
            .iter()
            .flat_map(|r| &r.cells)
            .filter(|c| c.value().is_none())
            .count()
    }

    /// `date,<model>...` with prices to 4 decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        let mut header = vec!["date".to_string()];
        header.extend(self.models.iter().map(|m| m.name().to_string()));
        w.write_record(&header).map_err(io)?;
        for row in &self.rows {
            let mut rec = vec![row.date.to_string()];
            rec.extend(row.cells.iter().map(|c| match c.value() {
                Some(v) => format!("{v:.4}"),
                None => ERROR_MARKER.to_string(),
            }));
            w.write_record(&rec).map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn price_cell(
    model: Model,
    state: &MarketState,
    fit: &FitArtifact,
    cfg: &PricingConfig,
    chain: &ChainConfig,
) -> Result<PriceResult> {
    let (sigma1, sigma2) = fit.sigmas();
    let Some(family) = model.family() else {
        let rho = match fit.copula(Family::Gaussian) {
            Some(CopulaSpec::Gaussian { rho }) => *rho,
            _ => {
                return Err(Error::InvalidConfig(
                    "GBM column needs a fitted Gaussian correlation".into(),
                ))
            }
        };
        return margrabe_price(state, sigma1, sigma2, rho);
    };
    let spec = fit
        .copula(family)
        .ok_or_else(|| Error::InvalidConfig(format!("no fitted {family} copula")))?;
    let m1 = risk_neutral_marginal(cfg.r, sigma1, cfg.tau, cfg.drift_mode)?;
    let m2 = risk_neutral_marginal(cfg.r, sigma2, cfg.tau, cfg.drift_mode)?;
    match cfg.method {
        CopulaMethod::Mcmc => mcmc_price(state, spec, &m1, &m2, chain),
        CopulaMethod::Quadrature => quadrature_price(state, spec, &m1, &m2, &cfg.quadrature),
    }
}

/// Prices every out-of-sample date against the frozen fit. Dates run in
/// parallel; row order follows the series.
pub fn price_table(
    series: &PriceSeries,
    fit: &FitArtifact,
    models: &[Model],
    cfg: &PricingConfig,
) -> Result<ComparisonTable> {
    cfg.validate()?;
    let models = normalize_models(models);
    if models.is_empty() {
        return Err(Error::InvalidConfig("no models requested".into()));
    }
    let window = series.window(&cfg.out_of_sample);
    if window.is_empty() {
        return Err(Error::EmptyWindow(format!(
            "out-of-sample window {}",
            cfg.out_of_sample
        )));
    }
    let rows = window
        .rows
        .par_iter()
        .enumerate()
        .map(|(k, row)| {
            let chain = cfg
                .chain
                .with_stream(cfg.chain.stream.wrapping_add(k as u64));
            let cells = match MarketState::new(row.s1, row.s2, cfg.r, cfg.tau) {
                Ok(state) => models
                    .iter()
                    .map(|&m| price_cell(m, &state, fit, cfg, &chain).into())
                    .collect(),
                Err(e) => vec![Cell::from(Err(e)); models.len()],
            };
            TableRow {
                date: row.date,
                s1: row.s1,
                s2: row.s2,
                cells,
            }
        })
        .collect();
    Ok(ComparisonTable { models, rows })
}

pub fn run_compare(
    series: &PriceSeries,
    config: &RunConfig,
) -> Result<(FitArtifact, ComparisonTable)> {
    config.validate()?;
    let fit = fit_window(
        series,
        config.in_sample,
        &config.models,
        config.periods_per_year,
    )?;
    let table = price_table(series, &fit, &fit.models, &config.pricing)?;
    Ok((fit, table))
}

/// Companion metadata written next to a comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub pricing: PricingConfig,
    pub models: Vec<Model>,
    pub fit: FitArtifact,
    pub expiry_convention: String,
    pub seed_derivation: String,
    pub std_error_note: String,
    pub failures: usize,
    pub unsorted_input_rows: usize,
}

impl RunMetadata {
    pub fn new(
        pricing: &PricingConfig,
        fit: &FitArtifact,
        table: &ComparisonTable,
        series: &PriceSeries,
    ) -> Self {
        Self {
            pricing: *pricing,
            models: table.models.clone(),
            fit: fit.clone(),
            expiry_convention: format!(
                "expiry is a fixed offset of tau = {} years from each evaluation date",
                pricing.tau
            ),
            seed_derivation:
                "date k of the out-of-sample window uses chain seed `seed` on stream `stream + k`"
                    .into(),
            std_error_note:
                "MCMC standard errors use the i.i.d. formula and understate the true error".into(),
            failures: table.failures(),
            unsorted_input_rows: series.unsorted_rows,
        }
    }
}

/// `foo.csv` → `foo.meta.json`.
pub fn meta_path(csv_path: &std::path::Path) -> std::path::PathBuf {
    csv_path.with_extension("meta.json")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PriceRow;

    fn d(s: &str) -> NaiveDate {
        NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap()
    }

    fn pricing(range: &str) -> PricingConfig {
        PricingConfig {
            out_of_sample: range.parse().unwrap(),
            tau: 0.25,
            r: 0.03,
            drift_mode: DriftMode::Martingale,
            method: CopulaMethod::Quadrature,
            chain: ChainConfig::new(500, 5_000, 9),
            quadrature: QuadratureSettings::default(),
        }
    }

    #[test]
    fn model_names_round_trip() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("frechet".parse::<Model>().is_err());
        assert_eq!(
            normalize_models(&[Model::Gbm, Model::Gumbel, Model::Gbm]),
            vec![Model::Gumbel, Model::Gbm]
        );
        assert_eq!(families_for(&[Model::Gbm]), vec![Family::Gaussian]);
    }

    #[test]
    fn one_date_one_family_is_one_by_one() {
        let series = PriceSeries::from_rows(vec![
            PriceRow {
                date: d("2020-07-01"),
                s1: 100.0,
                s2: 95.0,
            },
            PriceRow {
                date: d("2020-07-02"),
                s1: 101.0,
                s2: 96.0,
            },
        ])
        .unwrap();
        let fit = FitArtifact::from_parameters(
            "2020-01-01:2020-06-30".parse().unwrap(),
            0.2,
            0.2,
            &[CopulaSpec::Frank { theta: 5.0 }],
        )
        .unwrap();
        let table = price_table(
            &series,
            &fit,
            &[Model::Frank],
            &pricing("2020-07-02:2020-07-02"),
        )
        .unwrap();
        assert_eq!(table.rows.len(), 1);
        assert_eq!(table.rows[0].cells.len(), 1);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "date,frank");
        assert!(lines[1].starts_with("2020-07-02,"));
        let value = lines[1].split(',').nth(1).unwrap();
        assert_eq!(value.split('.').nth(1).unwrap().len(), 4);
    }

    #[test]
    fn missing_fit_becomes_error_marker() {
        let series = PriceSeries::from_rows(vec![PriceRow {
            date: d("2020-07-01"),
            s1: 100.0,
            s2: 95.0,
        }])
        .unwrap();
        let fit = FitArtifact::from_parameters(
            "2020-01-01:2020-06-30".parse().unwrap(),
            0.2,
            0.2,
            &[CopulaSpec::Clayton { theta: 2.0 }],
        )
        .unwrap();
        let table = price_table(
            &series,
            &fit,
            &[Model::Clayton, Model::Gbm],
            &pricing("2020-07-01:2020-07-31"),
        )
        .unwrap();
        assert!(table.rows[0].cells[0].value().is_some());
        assert!(table.rows[0].cells[1].value().is_none());
        assert_eq!(table.failures(), 1);
        let mut buf = Vec::new();
        table.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains(",error"));
    }

    #[test]
    fn config_validation() {
        let cfg = RunConfig {
            in_sample: "2020-01-01:2020-07-01".parse().unwrap(),
            models: vec![Model::Gaussian],
            periods_per_year: 252,
            pricing: pricing("2020-07-01:2020-12-31"),
        };
        assert!(cfg.validate().is_err());
        let mut ok = cfg.clone();
        ok.in_sample = "2020-01-01:2020-06-30".parse().unwrap();
        assert!(ok.validate().is_ok());
        let mut bad = ok.clone();
        bad.models.clear();
        assert!(bad.validate().is_err());
        let mut bad = ok;
        bad.pricing.tau = 0.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn meta_path_sits_next_to_csv() {
        assert_eq!(
            meta_path(std::path::Path::new("out/table.csv")),
            std::path::PathBuf::from("out/table.meta.json")
        );
    }
}
