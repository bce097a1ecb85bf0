//! Dated price and return panels, the log-return transform and descriptive
//! statistics.
//!
//! Panels are monthly: dates are [`YearMonth`] labels and must advance by
//! exactly one month per row. Values are stored row-major as `T x k`
//! matrices (rows are periods, columns are series).

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A calendar month, rendered as `YYYY-MM`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearMonth {
    year: i32,
    month: u8,
}

impl YearMonth {
    pub fn new(year: i32, month: u8) -> Option<Self> {
        if (1..=12).contains(&month) && (0..=9999).contains(&year) {
            Some(Self { year, month })
        } else {
            None
        }
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u8 {
        self.month
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    pub fn prev(self) -> Self {
        if self.month == 1 {
            Self { year: self.year - 1, month: 12 }
        } else {
            Self { year: self.year, month: self.month - 1 }
        }
    }

    /// Shift by `n` months (may be negative).
    pub fn offset(self, n: i64) -> Self {
        let idx = self.index() + n;
        Self { year: idx.div_euclid(12) as i32, month: (idx.rem_euclid(12) + 1) as u8 }
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse {
            row: 0,
            column: "date".to_string(),
            message: alloc::format!("expected YYYY-MM, got {s:?}"),
        };
        let s = s.trim();
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u8 = m.parse().map_err(|_| bad())?;
        YearMonth::new(year, month).ok_or_else(bad)
    }
}

impl Serialize for YearMonth {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearMonth {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_consecutive(dates: &[YearMonth]) -> Result<()> {
    for w in dates.windows(2) {
        if w[1] == w[0] {
            return Err(Error::Duplicate(w[1]));
        }
        if w[1] < w[0] {
            return Err(Error::Shape(alloc::format!("dates not increasing at {}", w[1])));
        }
        if w[1] != w[0].next() {
            return Err(Error::Gap { missing: w[0].next() });
        }
    }
    Ok(())
}

/// Monthly price levels, `T_p x k`, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    dates: Vec<YearMonth>,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl PricePanel {
    pub fn new(dates: Vec<YearMonth>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::Shape(alloc::format!(
                "{} dates and {} names for a {}x{} value matrix",
                dates.len(),
                names.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        if names.is_empty() || dates.is_empty() {
            return Err(Error::InsufficientData("empty price panel".to_string()));
        }
        check_consecutive(&dates)?;
        for t in 0..values.nrows() {
            for (i, name) in names.iter().enumerate() {
                let v = values[(t, i)];
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Parse {
                        row: t,
                        column: name.clone(),
                        message: alloc::format!("price must be positive and finite, got {v}"),
                    });
                }
            }
        }
        Ok(Self { dates, names, values })
    }

    /// Build from rows in any order. Rows are sorted by date; duplicates are
    /// rejected. Missing months are an error unless `forward_fill` is set, in
    /// which case the previous row is repeated (zero return for the gap).
    pub fn from_rows(mut rows: Vec<(YearMonth, Vec<f64>)>, names: Vec<String>, forward_fill: bool) -> Result<Self> {
        rows.sort_by_key(|(d, _)| *d);
        for w in rows.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::Duplicate(w[0].0));
            }
        }
        let k = names.len();
        let mut dates = Vec::with_capacity(rows.len());
        let mut flat = Vec::with_capacity(rows.len() * k);
        for (date, vals) in rows {
            if vals.len() != k {
                return Err(Error::Shape(alloc::format!("row {date} has {} values, expected {k}", vals.len())));
            }
            if let Some(&last) = dates.last() {
                let mut d: YearMonth = last;
                while d.next() != date {
                    if !forward_fill {
                        return Err(Error::Gap { missing: d.next() });
                    }
                    let start = flat.len() - k;
                    flat.extend_from_within(start..);
                    d = d.next();
                    dates.push(d);
                }
            }
            dates.push(date);
            flat.extend(vals);
        }
        let values = DMatrix::from_row_slice(dates.len(), k, &flat);
        Self::new(dates, names, values)
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Monthly log returns, `T x k`. Row `t` is dated by the later of the two
/// prices it differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<YearMonth>,
    names: Vec<String>,
    values: DMatrix<f64>,
}

impl ReturnPanel {
    pub fn new(dates: Vec<YearMonth>, names: Vec<String>, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != dates.len() || values.ncols() != names.len() {
            return Err(Error::Shape(alloc::format!(
                "{} dates and {} names for a {}x{} value matrix",
                dates.len(),
                names.len(),
                values.nrows(),
                values.ncols()
            )));
        }
        if names.is_empty() {
            return Err(Error::InsufficientData("no series".to_string()));
        }
        check_consecutive(&dates)?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (t, i) = (pos % values.nrows(), pos / values.nrows());
            return Err(Error::Numeric(alloc::format!("return for {} at {} is not finite", names[i], dates[t])));
        }
        Ok(Self { dates, names, values })
    }

    /// Single-series panel with consecutive dates starting at `start`.
    pub fn from_series(start: YearMonth, name: &str, values: &[f64]) -> Result<Self> {
        let dates = (0..values.len()).map(|t| start.offset(t as i64)).collect();
        Self::new(dates, alloc::vec![name.to_string()], DMatrix::from_column_slice(values.len(), 1, values))
    }

    pub fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Number of periods `T`.
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Number of series `k`.
    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, i: usize) -> Vec<f64> {
        self.values.column(i).iter().copied().collect()
    }

    /// One-series sub-panel.
    pub fn select(&self, i: usize) -> ReturnPanel {
        ReturnPanel {
            dates: self.dates.clone(),
            names: alloc::vec![self.names[i].clone()],
            values: self.values.columns(i, 1).into_owned(),
        }
    }

    /// Reorder series: column `j` of the result is column `order[j]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> ReturnPanel {
        let values = DMatrix::from_fn(self.len(), order.len(), |t, j| self.values[(t, order[j])]);
        ReturnPanel { dates: self.dates.clone(), names: order.iter().map(|&i| self.names[i].clone()).collect(), values }
    }

    /// Same panel with every value replaced.
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<ReturnPanel> {
        ReturnPanel::new(self.dates.clone(), self.names.clone(), values)
    }

    /// Index of `date` in the panel, if present.
    pub fn position(&self, date: YearMonth) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }
}

/// `r[t][i] = ln p[t+1][i] - ln p[t][i]`.
pub fn log_returns(p: &PricePanel) -> Result<ReturnPanel> {
    let tp = p.len();
    if tp < 2 {
        return Err(Error::InsufficientData(alloc::format!("log returns need at least 2 prices, got {tp}")));
    }
    let k = p.names.len();
    let values = DMatrix::from_fn(tp - 1, k, |t, i| libm::log(p.values[(t + 1, i)]) - libm::log(p.values[(t, i)]));
    ReturnPanel::new(p.dates[1..].to_vec(), p.names.clone(), values)
}

/// Per-series summary statistics. `sd` uses the `n - 1` denominator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub series: String,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

pub fn describe(r: &ReturnPanel) -> Result<Vec<Descriptives>> {
    let n = r.len();
    if n < 2 {
        return Err(Error::InsufficientData(alloc::format!("descriptives need at least 2 observations, got {n}")));
    }
    Ok((0..r.k())
        .map(|i| {
            let col = r.values.column(i);
            let mean = col.iter().sum::<f64>() / n as f64;
            let ss: f64 = col.iter().map(|x| (x - mean) * (x - mean)).sum();
            let (min, max) = col.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
            Descriptives {
                series: r.names[i].clone(),
                // clamp guards the last-ulp drift of the mean on constant series
                mean: mean.clamp(min, max),
                sd: libm::sqrt(ss / (n - 1) as f64),
                min,
                max,
                n,
            }
        })
        .collect())
}
