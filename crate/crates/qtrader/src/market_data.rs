//! Daily price-data ingestion, validation and chronological splitting.
//!
//! A [`PriceSeries`] is the raw market signal: one close price per trading
//! day, strictly increasing dates, every price positive and finite. Rows
//! that fail to parse are skipped (real exchange exports contain holiday
//! gaps and blank fields) and the skip count is reported to the caller.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use thiserror::Error;

/// Date pattern used when none is configured.
pub const DEFAULT_DATE_FORMAT: &str = "%Y-%m-%d";
/// Default CSV column holding the calendar date.
pub const DEFAULT_DATE_COLUMN: &str = "Date";
/// Default CSV column holding the close price.
pub const DEFAULT_CLOSE_COLUMN: &str = "Close";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("no valid rows in `{0}` after filtering")]
    EmptySeries(String),
    #[error("duplicate date {date} in `{symbol}`")]
    NonMonotonicDates { symbol: String, date: NaiveDate },
    #[error("series `{symbol}` has {len} rows, need at least {needed}")]
    TooShort {
        symbol: String,
        len: usize,
        needed: usize,
    },
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Ordered daily close prices with their calendar dates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    closes: Vec<f64>,
}

impl PriceSeries {
    /// Builds a series, enforcing the type invariants: equal lengths,
    /// strictly increasing dates, positive finite closes.
    pub fn new(
        symbol: impl Into<String>,
        dates: Vec<NaiveDate>,
        closes: Vec<f64>,
    ) -> Result<Self, DataError> {
        let symbol = symbol.into();
        if dates.len() != closes.len() {
            return Err(DataError::Invalid {
                what: "series",
                detail: format!(
                    "{} dates but {} closes in `{symbol}`",
                    dates.len(),
                    closes.len()
                ),
            });
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DataError::NonMonotonicDates {
                    symbol,
                    date: pair[1],
                });
            }
        }
        for &c in &closes {
            if !c.is_finite() || c <= 0.0 {
                return Err(DataError::Invalid {
                    what: "close price",
                    detail: format!("{c} in `{symbol}`"),
                });
            }
        }
        Ok(Self {
            symbol,
            dates,
            closes,
        })
    }

    /// Builds a series from closes alone, assigning consecutive calendar
    /// days starting at 2000-01-01. Convenient for synthetic data.
    pub fn from_closes(symbol: impl Into<String>, closes: Vec<f64>) -> Result<Self, DataError> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let dates = (0..closes.len() as i64)
            .map(|i| start + chrono::Duration::days(i))
            .collect();
        Self::new(symbol, dates, closes)
    }

    /// Deterministic sawtooth: each period the price ramps from `base`
    /// up to `base + amplitude` and back down. Useful as a learnable
    /// test signal with a known buy-low/sell-high policy.
    pub fn sawtooth(
        symbol: impl Into<String>,
        len: usize,
        period: usize,
        amplitude: f64,
        base: f64,
    ) -> Result<Self, DataError> {
        if period < 2 {
            return Err(DataError::Invalid {
                what: "sawtooth period",
                detail: format!("{period}"),
            });
        }
        let half = period / 2;
        let closes = (0..len)
            .map(|t| {
                let phase = t % period;
                let frac = if phase <= half {
                    phase as f64 / half as f64
                } else {
                    (period - phase) as f64 / (period - half) as f64
                };
                base + amplitude * frac
            })
            .collect();
        Self::from_closes(symbol, closes)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn len(&self) -> usize {
        self.closes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closes.is_empty()
    }

    pub fn close(&self, t: usize) -> f64 {
        self.closes[t]
    }

    pub fn date(&self, t: usize) -> NaiveDate {
        self.dates[t]
    }

    pub fn closes(&self) -> &[f64] {
        &self.closes
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    /// Writes the series as a two-column CSV (`Date,Close`). Close prices
    /// use the shortest round-trip decimal form, so a reload reproduces
    /// the exact same values.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let mut out = String::new();
        writeln!(out, "{DEFAULT_DATE_COLUMN},{DEFAULT_CLOSE_COLUMN}").unwrap();
        for (d, c) in self.dates.iter().zip(&self.closes) {
            writeln!(out, "{},{}", d.format(DEFAULT_DATE_FORMAT), c).unwrap();
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Result of a CSV load: the validated series plus how many rows were
/// dropped for unparseable dates or non-positive closes.
#[derive(Debug, Clone)]
pub struct CsvLoad {
    pub series: PriceSeries,
    pub skipped_rows: usize,
}

/// Loads a daily close series from a CSV file.
///
/// Rows are sorted by date after parsing; rows whose close is missing,
/// unparseable or non-positive (and rows whose date fails to parse) are
/// skipped and counted. Duplicate dates after sorting indicate corrupt
/// data and are rejected.
pub fn load_csv(
    path: impl AsRef<Path>,
    close_column: &str,
    date_column: &str,
    date_format: &str,
) -> Result<CsvLoad, DataError> {
    let path = path.as_ref();
    let symbol = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "series".to_string());

    let mut reader = csv::ReaderBuilder::new().flexible(true).from_path(path)?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };
    let date_idx = find(date_column)?;
    let close_idx = find(close_column)?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    let mut skipped = 0usize;
    for record in reader.records() {
        let record = record?;
        let date = record
            .get(date_idx)
            .and_then(|s| NaiveDate::parse_from_str(s.trim(), date_format).ok());
        let close = record
            .get(close_idx)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|c| c.is_finite() && *c > 0.0);
        match (date, close) {
            (Some(d), Some(c)) => rows.push((d, c)),
            _ => skipped += 1,
        }
    }
    if rows.is_empty() {
        return Err(DataError::EmptySeries(symbol));
    }
    rows.sort_by_key(|(d, _)| *d);
    for pair in rows.windows(2) {
        if pair[1].0 == pair[0].0 {
            return Err(DataError::NonMonotonicDates {
                symbol,
                date: pair[1].0,
            });
        }
    }
    let (dates, closes) = rows.into_iter().unzip();
    Ok(CsvLoad {
        series: PriceSeries::new(symbol, dates, closes)?,
        skipped_rows: skipped,
    })
}

/// Chronological train/test split specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.5,
        }
    }
}

impl SplitSpec {
    pub fn new(train_fraction: f64) -> Result<Self, DataError> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(DataError::Invalid {
                what: "train fraction",
                detail: format!("{train_fraction}, must lie in (0, 1)"),
            });
        }
        Ok(Self { train_fraction })
    }
}

/// Splits a series into the chronologically earlier
/// `floor(train_fraction * N)` rows and the remainder.
///
/// Both halves must be long enough to form at least one state, i.e.
/// strictly longer than `window_size`.
pub fn split_series(
    series: &PriceSeries,
    spec: &SplitSpec,
    window_size: usize,
) -> Result<(PriceSeries, PriceSeries), DataError> {
    let n = series.len();
    let needed = 2 * (window_size + 1);
    let cut = (spec.train_fraction * n as f64).floor() as usize;
    if n < needed || cut <= window_size || n - cut <= window_size {
        return Err(DataError::TooShort {
            symbol: series.symbol.clone(),
            len: n,
            needed,
        });
    }
    let train = PriceSeries::new(
        series.symbol.clone(),
        series.dates[..cut].to_vec(),
        series.closes[..cut].to_vec(),
    )?;
    let test = PriceSeries::new(
        series.symbol.clone(),
        series.dates[cut..].to_vec(),
        series.closes[cut..].to_vec(),
    )?;
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn write_temp(contents: &str) -> tempfile::NamedTempFile {
        let f = tempfile::NamedTempFile::new().unwrap();
        fs::write(f.path(), contents).unwrap();
        f
    }

    #[test]
    fn load_parses_rows_in_date_order() {
        let f = write_temp("Date,Close\n2020-01-02,101.5\n2020-01-01,100.0\n");
        let load = load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(load.series.len(), 2);
        assert_eq!(load.series.closes(), &[100.0, 101.5]);
        assert_eq!(load.skipped_rows, 0);
    }

    #[test]
    fn load_skips_unparseable_rows_and_reports_count() {
        let mut csv = String::from("Date,Close\n");
        for day in 1..=10 {
            csv.push_str(&format!("2020-01-{day:02},{}\n", 100 + day));
        }
        csv.push_str("2020-01-11,NA\n");
        csv.push_str("2020-01-12,-3.0\n");
        let f = write_temp(&csv);
        let load = load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(load.series.len(), 10);
        assert_eq!(load.skipped_rows, 2);
    }

    #[test]
    fn load_header_only_is_empty_series() {
        let f = write_temp("Date,Close\n");
        match load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT) {
            Err(DataError::EmptySeries(_)) => {}
            other => panic!("expected EmptySeries, got {other:?}"),
        }
    }

    #[test]
    fn load_missing_column_is_reported_by_name() {
        let f = write_temp("Date,Adj Close\n2020-01-01,100.0\n");
        match load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT) {
            Err(DataError::MissingColumn(c)) => assert_eq!(c, "Close"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn load_duplicate_dates_rejected() {
        let f = write_temp("Date,Close\n2020-01-01,100.0\n2020-01-01,101.0\n");
        assert!(matches!(
            load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT),
            Err(DataError::NonMonotonicDates { .. })
        ));
    }

    #[test]
    fn load_ignores_other_ohlcv_columns() {
        let f = write_temp(
            "Date,Open,High,Low,Close,Volume\n2020-01-01,99,102,98,100.5,12345\n2020-01-02,100,103,99,101.25,23456\n",
        );
        let load = load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(load.series.closes(), &[100.5, 101.25]);
    }

    #[test]
    fn split_even_length_is_half_and_half() {
        let series = PriceSeries::from_closes("S", (0..1000).map(|i| 100.0 + i as f64).collect())
            .unwrap();
        let (train, test) = split_series(&series, &SplitSpec::default(), 90).unwrap();
        assert_eq!(train.len(), 500);
        assert_eq!(test.len(), 500);
    }

    #[test]
    fn split_odd_length_floors_the_train_half() {
        let series = PriceSeries::from_closes("S", (0..1001).map(|i| 100.0 + i as f64).collect())
            .unwrap();
        let (train, test) = split_series(&series, &SplitSpec::default(), 90).unwrap();
        assert_eq!(train.len(), 500);
        assert_eq!(test.len(), 501);
    }

    #[test]
    fn split_too_short_for_window_is_rejected() {
        let series =
            PriceSeries::from_closes("S", (0..10).map(|i| 100.0 + i as f64).collect()).unwrap();
        assert!(matches!(
            split_series(&series, &SplitSpec::default(), 90),
            Err(DataError::TooShort { .. })
        ));
    }

    #[test]
    fn split_conserves_and_orders_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let n = rng.gen_range(30..400);
            let closes: Vec<f64> = (0..n).map(|_| rng.gen_range(1.0..500.0)).collect();
            let series = PriceSeries::from_closes("S", closes).unwrap();
            let window = rng.gen_range(1..8);
            let frac = rng.gen_range(0.2..0.8);
            let spec = SplitSpec::new(frac).unwrap();
            let Ok((train, test)) = split_series(&series, &spec, window) else {
                continue;
            };
            assert_eq!(train.len() + test.len(), series.len());
            assert_eq!(train.len(), (frac * n as f64).floor() as usize);
            let mut merged = train.closes().to_vec();
            merged.extend_from_slice(test.closes());
            assert_eq!(merged, series.closes());
            assert!(train.dates().last().unwrap() < test.dates().first().unwrap());
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let closes: Vec<f64> = (0..200).map(|_| rng.gen_range(0.01..9999.0)).collect();
        let series = PriceSeries::from_closes("round_trip", closes).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        series.write_csv(f.path()).unwrap();
        let reloaded = load_csv(f.path(), "Close", "Date", DEFAULT_DATE_FORMAT).unwrap();
        assert_eq!(reloaded.series.dates(), series.dates());
        assert_eq!(reloaded.series.closes(), series.closes());
        assert_eq!(reloaded.skipped_rows, 0);
    }

    #[test]
    fn constructor_rejects_bad_series() {
        let d = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        assert!(PriceSeries::new("S", vec![d], vec![1.0, 2.0]).is_err());
        assert!(PriceSeries::new("S", vec![d, d], vec![1.0, 2.0]).is_err());
        assert!(PriceSeries::from_closes("S", vec![1.0, -2.0]).is_err());
        assert!(PriceSeries::from_closes("S", vec![1.0, f64::NAN]).is_err());
    }
}
