//! CSV ingestion of monthly price panels, and reading back impulse-response
//! files.

use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use tvmeff_core::irf::ImpulseSurface;
use tvmeff_core::{Error as CoreError, PricePanel, YearMonth};

use crate::error::{CliError, CliResult};
use crate::output::{Cell, Table};

/// Fewest price rows a loaded file may have.
pub const MIN_PRICE_ROWS: usize = 3;

/// A value column to load: `source` header, optionally renamed (`src=name`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub source: String,
    pub name: String,
}

impl FromStr for ColumnSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (source, name) = match s.split_once('=') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (s.trim(), s.trim()),
        };
        if source.is_empty() || name.is_empty() {
            return Err(format!("bad column mapping `{s}`, expected `column` or `column=name`"));
        }
        Ok(ColumnSpec { source: source.to_string(), name: name.to_string() })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadOptions {
    pub date_column: String,
    /// Empty means every non-date column, in file order.
    pub columns: Vec<ColumnSpec>,
    pub forward_fill: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self { date_column: "date".to_string(), columns: Vec::new(), forward_fill: false }
    }
}

pub fn load_price_csv(path: &Path, opts: &LoadOptions) -> CliResult<PricePanel> {
    let file = File::open(path).map_err(CliError::io(path))?;
    read_price_csv(file, path, opts)
}

/// Parse a price CSV from any reader; `path` only labels errors. Line numbers
/// in errors count the header as line 1.
pub fn read_price_csv<R: Read>(reader: R, path: &Path, opts: &LoadOptions) -> CliResult<PricePanel> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let csv_err = |e: csv::Error| CliError::Io { path: path.to_path_buf(), message: e.to_string() };
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let position = |name: &str| headers.iter().position(|h| h == name);
    let date_idx = position(&opts.date_column).ok_or_else(|| {
        CliError::Input(format!("{}: no date column `{}` in header", path.display(), opts.date_column))
    })?;
    let columns: Vec<(usize, String)> = if opts.columns.is_empty() {
        headers.iter().enumerate().filter(|(i, _)| *i != date_idx).map(|(i, h)| (i, h.to_string())).collect()
    } else {
        opts.columns
            .iter()
            .map(|c| {
                position(&c.source)
                    .map(|i| (i, c.name.clone()))
                    .ok_or_else(|| CliError::Input(format!("{}: no column `{}` in header", path.display(), c.source)))
            })
            .collect::<CliResult<_>>()?
    };
    if columns.is_empty() {
        return Err(CliError::Input(format!("{}: no value columns", path.display())));
    }

    let load_err = |line: u64, source: CoreError| CliError::Load { path: path.to_path_buf(), line, source };
    let mut rows: Vec<(u64, YearMonth, Vec<f64>)> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let parse_err = |column: &str, message: String| {
            load_err(line, CoreError::Parse { row: line as usize, column: column.to_string(), message })
        };
        let raw_date = record.get(date_idx).unwrap_or("");
        let date: YearMonth = raw_date
            .parse()
            .map_err(|_| parse_err(&opts.date_column, format!("`{raw_date}` is not a YYYY-MM date")))?;
        let mut values = Vec::with_capacity(columns.len());
        for (idx, name) in &columns {
            let cell = record.get(*idx).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| parse_err(name, format!("`{cell}` is not a number")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(parse_err(name, format!("price must be positive and finite, got {cell}")));
            }
            values.push(v);
        }
        rows.push((line, date, values));
    }

    rows.sort_by_key(|(_, d, _)| *d);
    let mut seen: HashMap<YearMonth, u64> = HashMap::new();
    for (line, date, _) in &rows {
        if seen.insert(*date, *line).is_some() {
            return Err(load_err(*line, CoreError::Duplicate(*date)));
        }
    }
    if !opts.forward_fill {
        for w in rows.windows(2) {
            if w[1].1 != w[0].1.next() {
                return Err(load_err(w[1].0, CoreError::Gap { missing: w[0].1.next() }));
            }
        }
    }
    let names: Vec<String> = columns.into_iter().map(|(_, n)| n).collect();
    let panel = PricePanel::from_rows(rows.into_iter().map(|(_, d, v)| (d, v)).collect(), names, opts.forward_fill)
        .map_err(CliError::core("input"))?;
    if panel.len() < MIN_PRICE_ROWS {
        return Err(CliError::Core {
            stage: "input",
            source: CoreError::InsufficientData(format!(
                "{} has {} price rows, need at least {MIN_PRICE_ROWS}",
                path.display(),
                panel.len()
            )),
        });
    }
    Ok(panel)
}

/// Read a long `date,horizon,shock,response,value` file back into a surface.
/// Rows must be in the order the writer produces them.
pub fn read_impulse_csv(path: &Path) -> CliResult<ImpulseSurface> {
    let file = File::open(path).map_err(CliError::io(path))?;
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(file);
    let bad = |m: String| CliError::Input(format!("{}: {m}", path.display()));
    let mut dates: Vec<YearMonth> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut horizon = 0usize;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", record.len())));
        }
        let date: YearMonth = record[0].parse().map_err(|_| bad(format!("bad date `{}`", &record[0])))?;
        let h: usize = record[1].parse().map_err(|_| bad(format!("bad horizon `{}`", &record[1])))?;
        let value: f64 = record[4].parse().map_err(|_| bad(format!("bad value `{}`", &record[4])))?;
        if dates.last() != Some(&date) {
            dates.push(date);
        }
        if dates.len() == 1 && h == 0 && !names.contains(&record[3].to_string()) {
            names.push(record[3].to_string());
        }
        horizon = horizon.max(h);
        values.push(value);
    }
    ImpulseSurface::from_parts(dates, names, horizon, values).map_err(CliError::core("input"))
}

/// Prices `100 * exp(cumsum(r))` with a leading base row, one month before
/// the first return.
pub fn prices_from_returns(returns: &tvmeff_core::ReturnPanel) -> PricePanel {
    let x = returns.values();
    let (t, k) = (x.nrows(), x.ncols());
    let mut levels = DMatrix::from_element(t + 1, k, 100.0);
    for s in 0..t {
        for i in 0..k {
            levels[(s + 1, i)] = levels[(s, i)] * x[(s, i)].exp();
        }
    }
    let first = returns.dates()[0].prev();
    let dates = (0..=t).map(|s| first.offset(s as i64)).collect();
    PricePanel::new(dates, returns.names().to_vec(), levels).expect("exponentials are positive")
}

/// `date,<series...>` table in the loader's input format.
pub fn price_table(p: &PricePanel) -> Table {
    let mut header = vec!["date".to_string()];
    header.extend(p.names().iter().cloned());
    let mut t = Table::new(&header);
    for (s, date) in p.dates().iter().enumerate() {
        let mut row = vec![Cell::from(date.to_string())];
        row.extend(p.values().row(s).iter().map(|v| Cell::from(*v)));
        t.push(row);
    }
    t
}
