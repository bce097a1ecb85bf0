#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nalgebra::DMatrix;
use tvmeff::io::{price_table, prices_from_returns};
use tvmeff_core::synth::{gen_panel, DgpSpec};
use tvmeff_core::ReturnPanel;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tvmeff"));
    c.env_remove("TVMEFF_THREADS");
    c
}

pub fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().expect("binary runs")
}

pub fn stderr_report(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let last = text.lines().last().expect("stderr has a report");
    serde_json::from_str(last).unwrap_or_else(|e| panic!("not JSON ({e}): {last}"))
}

/// Stable VAR(1) returns at monthly-return scale.
pub fn returns(names: &[&str], t: usize, seed: u64) -> ReturnPanel {
    let k = names.len();
    let a = DMatrix::from_fn(k, k, |i, j| if i == j { 0.25 } else { 0.05 / k as f64 });
    let mut spec = DgpSpec::constant(&[a], t, 0.03, seed);
    spec.intercept = vec![0.004; k];
    let (p, _) = gen_panel(&spec).unwrap();
    let names = names.iter().map(|s| s.to_string()).collect();
    ReturnPanel::new(p.dates().to_vec(), names, p.values().clone()).unwrap()
}

/// Write `returns` as a price CSV and return its path.
pub fn write_prices(dir: &Path, file: &str, r: &ReturnPanel) -> PathBuf {
    let path = dir.join(file);
    let bytes = price_table(&prices_from_returns(r)).to_csv("test fixture");
    std::fs::write(&path, bytes).unwrap();
    path
}

pub fn named_panel(dir: &Path, t: usize, seed: u64) -> PathBuf {
    write_prices(dir, "prices.csv", &returns(&["EQPI", "GBPI", "Exchange"], t, seed))
}

/// CSV records without the trailing comment line.
pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

pub fn last_line(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().last().unwrap().to_string()
}
