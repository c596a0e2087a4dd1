//! Price-series ingestion and log-return construction.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::ReturnPanel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceRow {
    pub date: NaiveDate,
    pub s1: f64,
    pub s2: f64,
}

/// Two aligned price series, strictly increasing in date.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriceSeries {
    pub rows: Vec<PriceRow>,
    /// Rows found out of date order in the source (the series is sorted).
    #[serde(default)]
    pub unsorted_rows: usize,
}

impl PriceSeries {
    /// Sorts by date and rejects duplicates or nonpositive prices.
    pub fn from_rows(mut rows: Vec<PriceRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySeries);
        }
        for (i, row) in rows.iter().enumerate() {
            for (name, x) in [("s1", row.s1), ("s2", row.s2)] {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(Error::Parse {
                        row: i + 1,
                        column: name.into(),
                        reason: format!("price must be positive, got {x}"),
                    });
                }
            }
        }
        let unsorted_rows = rows.windows(2).filter(|w| w[1].date < w[0].date).count();
        rows.sort_by_key(|r| r.date);
        if let Some(w) = rows.windows(2).find(|w| w[0].date == w[1].date) {
            return Err(Error::Parse {
                row: 0,
                column: "date".into(),
                reason: format!("duplicate date {}", w[0].date),
            });
        }
        Ok(Self {
            rows,
            unsorted_rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows with dates inside `range` (inclusive).
    pub fn window(&self, range: &DateRange) -> PriceSeries {
        PriceSeries {
            rows: self
                .rows
                .iter()
                .filter(|r| range.contains(r.date))
                .copied()
                .collect(),
            unsorted_rows: 0,
        }
    }
}

/// Inclusive calendar date range, written `START:END` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if end < start {
            return Err(Error::InvalidConfig(format!(
                "date range ends ({end}) before it starts ({start})"
            )));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.start <= d && d <= self.end
    }
}

impl FromStr for DateRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidConfig(format!("expected START:END, got `{s}`")))?;
        let parse = |x: &str| {
            NaiveDate::parse_from_str(x.trim(), "%Y-%m-%d")
                .map_err(|e| Error::InvalidConfig(format!("bad date `{x}`: {e}")))
        };
        DateRange::new(parse(a)?, parse(b)?)
    }
}

impl fmt::Display for DateRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

pub fn ingest_csv(path: impl AsRef<Path>) -> Result<PriceSeries> {
    let file = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    ingest_reader(file)
}

/// Parses `date,s1,s2` CSV. Row numbers in errors count data rows from 1.
pub fn ingest_reader<R: Read>(reader: R) -> Result<PriceSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse {
        row: 0,
        column: "header".into(),
        reason: e.to_string(),
    })?;
    let names: Vec<&str> = header.iter().collect();
    if names != ["date", "s1", "s2"] {
        return Err(Error::Parse {
            row: 0,
            column: "header".into(),
            reason: format!("expected `date,s1,s2`, got `{}`", names.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            column: "*".into(),
            reason: e.to_string(),
        })?;
        let field = |idx: usize, name: &str| -> Result<&str> {
            match record.get(idx) {
                Some(s) if !s.is_empty() => Ok(s),
                _ => Err(Error::Parse {
                    row,
                    column: name.into(),
                    reason: "missing value".into(),
                }),
            }
        };
        let date =
            NaiveDate::parse_from_str(field(0, "date")?, "%Y-%m-%d").map_err(|e| Error::Parse {
                row,
                column: "date".into(),
                reason: e.to_string(),
            })?;
        let price = |idx: usize, name: &str| -> Result<f64> {
            let raw = field(idx, name)?;
            let x: f64 = raw.parse().map_err(|_| Error::Parse {
                row,
                column: name.into(),
                reason: format!("not a number: `{raw}`"),
            })?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Parse {
                    row,
                    column: name.into(),
                    reason: format!("price must be positive, got {raw}"),
                });
            }
            Ok(x)
        };
        rows.push(PriceRow {
            date,
            s1: price(1, "s1")?,
            s2: price(2, "s2")?,
        });
    }
    PriceSeries::from_rows(rows)
}

/// xᵢ,ₖ = ln(sᵢ(k+1) / sᵢ(k)) for consecutive rows.
pub fn compute_log_returns(series: &PriceSeries) -> Result<ReturnPanel> {
    if series.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: series.len(),
        });
    }
    Ok(ReturnPanel::new(
        series
            .rows
            .windows(2)
            .map(|w| ((w[1].s1 / w[0].s1).ln(), (w[1].s2 / w[0].s2).ln()))
            .collect(),
    ))
}

pub fn write_series<W: std::io::Write>(series: &PriceSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["date", "s1", "s2"]).map_err(io)?;
    for r in &series.rows {
        w.write_record([
            r.date.to_string(),
            format!("{:.6}", r.s1),
            format!("{:.6}", r.s2),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
