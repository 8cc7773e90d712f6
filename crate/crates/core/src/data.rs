//! Return-series ingestion, price-to-return conversion and rolling windows.
//!
//! Input files are comma-separated UTF-8 with one header row, ISO-8601
//! dates (`YYYY-MM-DD`) and `.` as decimal mark. Dates are opaque ordinals:
//! no calendar logic is applied beyond ordering.

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, RiskError};

const DATE_FORMAT: &str = "%Y-%m-%d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Price,
    Return,
}

/// Which columns of a CSV file hold the date and the value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub date_column: String,
    pub value_column: String,
    pub value_kind: ValueKind,
}

impl CsvSchema {
    pub fn returns(date_column: &str, value_column: &str) -> Self {
        Self {
            date_column: date_column.to_string(),
            value_column: value_column.to_string(),
            value_kind: ValueKind::Return,
        }
    }

    pub fn prices(date_column: &str, value_column: &str) -> Self {
        Self {
            value_kind: ValueKind::Price,
            ..Self::returns(date_column, value_column)
        }
    }
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self::returns("date", "return")
    }
}

/// Dated univariate observations. Despite the name it also carries price
/// levels straight after loading; `kind` records which.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
    label: String,
    kind: ValueKind,
}

impl ReturnSeries {
    /// Builds a return series, checking that dates strictly increase and
    /// every value is finite.
    pub fn new(dates: Vec<NaiveDate>, returns: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        Self::with_kind(dates, returns, label, ValueKind::Return)
    }

    pub fn with_kind(
        dates: Vec<NaiveDate>,
        values: Vec<f64>,
        label: impl Into<String>,
        kind: ValueKind,
    ) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(RiskError::Alignment(format!(
                "{} dates but {} values",
                dates.len(),
                values.len()
            )));
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(RiskError::Data(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(RiskError::Data(format!("non-finite value at index {i}")));
        }
        Ok(Self {
            dates,
            values,
            label: label.into(),
            kind,
        })
    }

    /// Series on consecutive synthetic dates starting 2000-01-01. Handy for
    /// simulated data where only the ordering matters.
    pub fn from_returns(returns: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let dates = synthetic_dates(returns.len());
        Self::new(dates, returns, label)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn returns(&self) -> &[f64] {
        &self.values
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ValueKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `n` consecutive calendar days starting 2000-01-01.
pub fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date");
    start.iter_days().take(n).collect()
}

/// N return series sharing one date index.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiSeries {
    dates: Vec<NaiveDate>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl MultiSeries {
    pub fn new(dates: Vec<NaiveDate>, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(RiskError::Alignment(format!(
                "{} names but {} columns",
                names.len(),
                columns.len()
            )));
        }
        if let Some((name, col)) = names.iter().zip(&columns).find(|(_, c)| c.len() != dates.len()) {
            return Err(RiskError::Alignment(format!(
                "column {name} has {} rows, expected {}",
                col.len(),
                dates.len()
            )));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RiskError::Data("dates not strictly increasing".into()));
        }
        if columns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(RiskError::Data("non-finite value".into()));
        }
        Ok(Self {
            dates,
            names,
            columns,
        })
    }

    pub fn from_columns(names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        Self::new(synthetic_dates(n), names, columns)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn n_series(&self) -> usize {
        self.columns.len()
    }

    pub fn n_obs(&self) -> usize {
        self.dates.len()
    }
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), DATE_FORMAT)
        .map_err(|e| RiskError::Data(format!("unparseable date {s:?}: {e}")))
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| RiskError::Schema(format!("missing column {name:?}")))
}

fn parse_value(raw: &str, row: usize, column: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .map_err(|_| RiskError::Data(format!("row {row}: unparseable number {raw:?} in column {column:?}")))
}

/// Sorts rows by date and rejects duplicates.
fn sort_rows<T>(mut rows: Vec<(NaiveDate, T)>) -> Result<Vec<(NaiveDate, T)>> {
    if rows.is_empty() {
        return Err(RiskError::Data("no observations".into()));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(RiskError::Data(format!("duplicate date {}", w[0].0)));
    }
    Ok(rows)
}

pub fn read_csv<R: Read>(reader: R, schema: &CsvSchema) -> Result<ReturnSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_idx = column_index(&headers, &schema.date_column)?;
    let value_idx = column_index(&headers, &schema.value_column)?;

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row number, header excluded
        let row = i + 1;
        let date = record
            .get(date_idx)
            .ok_or_else(|| RiskError::Data(format!("row {row}: missing date field")))?;
        let value = record
            .get(value_idx)
            .ok_or_else(|| RiskError::Data(format!("row {row}: missing value field")))?;
        let date = parse_date(date).map_err(|e| RiskError::Data(format!("row {row}: {e}")))?;
        let value = parse_value(value, row, &schema.value_column)?;
        if !value.is_finite() {
            return Err(RiskError::Data(format!("row {row}: non-finite value")));
        }
        rows.push((date, value));
    }
    let rows = sort_rows(rows)?;
    let (dates, values) = rows.into_iter().unzip();
    ReturnSeries::with_kind(dates, values, schema.value_column.clone(), schema.value_kind)
}

/// Loads a single-column series from a CSV file, sorted by date.
pub fn load_csv(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<ReturnSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv(file, schema)
}

/// Writes `date,<label>` rows. Values use Rust's shortest round-trip float
/// formatting, so reading the file back reproduces them bit for bit.
pub fn write_csv<W: Write>(series: &ReturnSeries, writer: W, date_column: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([date_column, series.label()])?;
    for (d, v) in series.dates().iter().zip(series.returns()) {
        wtr.write_record([d.format(DATE_FORMAT).to_string(), v.to_string()])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn save_csv(series: &ReturnSeries, path: impl AsRef<Path>, date_column: &str) -> Result<()> {
    let file = std::fs::File::create(path.as_ref())?;
    write_csv(series, file, date_column)
}

/// Reads a multi-column file: one date column, every other column numeric.
pub fn read_multi_csv<R: Read>(reader: R, date_column: &str) -> Result<MultiSeries> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let date_idx = column_index(&headers, date_column)?;
    let value_cols: Vec<(usize, String)> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != date_idx)
        .map(|(i, h)| (i, h.trim().to_string()))
        .collect();
    if value_cols.is_empty() {
        return Err(RiskError::Schema("no value columns".into()));
    }

    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let date = parse_date(record.get(date_idx).unwrap_or(""))
            .map_err(|e| RiskError::Data(format!("row {row}: {e}")))?;
        let values = value_cols
            .iter()
            .map(|(idx, name)| parse_value(record.get(*idx).unwrap_or(""), row, name))
            .collect::<Result<Vec<f64>>>()?;
        rows.push((date, values));
    }
    let rows = sort_rows(rows)?;
    let dates: Vec<NaiveDate> = rows.iter().map(|(d, _)| *d).collect();
    let columns = (0..value_cols.len())
        .map(|j| rows.iter().map(|(_, v)| v[j]).collect())
        .collect();
    let names = value_cols.into_iter().map(|(_, n)| n).collect();
    MultiSeries::new(dates, names, columns)
}

pub fn load_multi_csv(path: impl AsRef<Path>, date_column: &str) -> Result<MultiSeries> {
    let file = std::fs::File::open(path.as_ref())?;
    read_multi_csv(file, date_column)
}

/// Log returns `ln(p[i+1]/p[i])`, dated at the later date of each pair.
pub fn to_log_returns(prices: &ReturnSeries) -> Result<ReturnSeries> {
    if prices.kind() != ValueKind::Price {
        return Err(RiskError::Data("series is not a price series".into()));
    }
    if prices.len() < 2 {
        return Err(RiskError::Data("need at least two prices".into()));
    }
    if let Some(i) = prices.returns().iter().position(|p| *p <= 0.0) {
        return Err(RiskError::Data(format!("nonpositive price at index {i}")));
    }
    let returns = prices
        .returns()
        .windows(2)
        .map(|w| (w[1] / w[0]).ln())
        .collect();
    ReturnSeries::new(prices.dates()[1..].to_vec(), returns, prices.label())
}

/// The `m` observations strictly before index `t`.
pub fn window(series: &ReturnSeries, t: usize, m: usize) -> Result<&[f64]> {
    slice_window(series.returns(), t, m)
}

pub(crate) fn slice_window(xs: &[f64], t: usize, m: usize) -> Result<&[f64]> {
    if t < m {
        return Err(RiskError::Window { t, m });
    }
    if t > xs.len() {
        return Err(RiskError::Domain(format!(
            "index {t} beyond series of length {}",
            xs.len()
        )));
    }
    Ok(&xs[t - m..t])
}
