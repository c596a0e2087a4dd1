//! Synthetic return panels and price paths drawn from a known copula and
//! normal marginals.

use chrono::{Datelike, Days, NaiveDate, Weekday};

use crate::copula::CopulaSpec;
use crate::data::{PriceRow, PriceSeries};
use crate::error::{Error, Result};
use crate::estimation::ReturnPanel;
use crate::gibbs::sample_independent;
use crate::marginals::{AnnualizedParams, NormalMarginal};

/// n i.i.d. return pairs (F₁⁻¹(u), F₂⁻¹(v)) with (u, v) drawn from `spec`.
pub fn simulate_panel(
    spec: &CopulaSpec,
    m1: &NormalMarginal,
    m2: &NormalMarginal,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<ReturnPanel> {
    m1.validate()?;
    m2.validate()?;
    let draws = sample_independent(spec, n, seed, stream)?;
    let pairs = draws
        .iter()
        .map(|p| Ok((m1.quantile_transform(p.u)?, m2.quantile_transform(p.v)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReturnPanel::new(pairs))
}

fn next_weekday(d: NaiveDate) -> NaiveDate {
    let mut d = d + Days::new(1);
    while matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
        d = d + Days::new(1);
    }
    d
}

/// Price path of `n_returns + 1` weekday rows starting at `start` from
/// `spot`, with per-period returns implied by the annualized parameters.
pub fn simulate_series(
    spec: &CopulaSpec,
    p1: &AnnualizedParams,
    p2: &AnnualizedParams,
    n_returns: usize,
    start: NaiveDate,
    spot: (f64, f64),
    seed: u64,
) -> Result<PriceSeries> {
    if !(spot.0 > 0.0 && spot.1 > 0.0) {
        return Err(Error::InvalidMarket(
            "starting prices must be positive".into(),
        ));
    }
    let panel = simulate_panel(
        spec,
        &p1.per_period()?,
        &p2.per_period()?,
        n_returns,
        seed,
        0,
    )?;
    let mut rows = Vec::with_capacity(n_returns + 1);
    let mut date = start;
    let (mut ln1, mut ln2) = (spot.0.ln(), spot.1.ln());
    rows.push(PriceRow {
        date,
        s1: spot.0,
        s2: spot.1,
    });
    for &(x1, x2) in &panel.pairs {
        date = next_weekday(date);
        ln1 += x1;
        ln2 += x2;
        rows.push(PriceRow {
            date,
            s1: ln1.exp(),
            s2: ln2.exp(),
        });
    }
    PriceSeries::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::compute_log_returns;

    #[test]
    fn series_round_trips_to_returns() {
        let spec = CopulaSpec::Gaussian { rho: 0.5 };
        let p = AnnualizedParams {
            mu: 0.1,
            sigma: 0.2,
            periods_per_year: 252,
        };
        let start = NaiveDate::from_ymd_opt(2020, 1, 3).unwrap();
        let s = simulate_series(&spec, &p, &p, 10, start, (100.0, 50.0), 3).unwrap();
        assert_eq!(s.len(), 11);
        // 2020-01-03 is a Friday.
        assert_eq!(s.rows[1].date, NaiveDate::from_ymd_opt(2020, 1, 6).unwrap());
        let panel = compute_log_returns(&s).unwrap();
        let direct = simulate_panel(
            &spec,
            &p.per_period().unwrap(),
            &p.per_period().unwrap(),
            10,
            3,
            0,
        )
        .unwrap();
        for (a, b) in panel.pairs.iter().zip(&direct.pairs) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
    }
}
