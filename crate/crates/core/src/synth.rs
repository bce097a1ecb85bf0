//! Simulated VAR panels with known coefficient paths, used as ground truth
//! for Monte Carlo checks of the estimators.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::bootstrap::replication_rng;
use crate::error::{Error, Result};
use crate::linalg::{companion, spectral_radius};
use crate::timeseries::{ReturnPanel, YearMonth};

/// Discarded presample periods.
pub const BURN_IN: usize = 50;
/// Largest companion spectral radius a generated path may reach.
pub const MAX_SPECTRAL_RADIUS: f64 = 0.98;

/// Lag matrices written row by row: `lags[l][row][col]`.
pub type LagMatrices = Vec<Vec<Vec<f64>>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathSpec {
    Constant {
        a: LagMatrices,
    },
    /// Linear interpolation from `start` at the first retained period to
    /// `end` at the last.
    LinearRamp {
        start: LagMatrices,
        end: LagMatrices,
    },
    /// `A_t = A_{t-1} + sigma_v * N(0, I)` elementwise, from `start`.
    RandomWalk {
        start: LagMatrices,
        sigma_v: f64,
    },
    /// `before` for retained periods `< at`, `after` from `at` on.
    BreakAt {
        before: LagMatrices,
        after: LagMatrices,
        at: usize,
    },
}

fn default_start() -> YearMonth {
    YearMonth::new(1924, 7).expect("valid month")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub k: usize,
    pub q: usize,
    /// Retained sample length.
    pub t: usize,
    pub path: PathSpec,
    pub intercept: Vec<f64>,
    pub noise_sd: Vec<f64>,
    pub seed: u64,
    /// Date of the first retained row.
    #[serde(default = "default_start")]
    pub start: YearMonth,
}

impl DgpSpec {
    /// Constant VAR with the given lag matrices, zero intercept and equal noise.
    pub fn constant(a: &[DMatrix<f64>], t: usize, noise_sd: f64, seed: u64) -> Self {
        let k = a[0].nrows();
        DgpSpec {
            k,
            q: a.len(),
            t,
            path: PathSpec::Constant { a: to_rows(a) },
            intercept: alloc::vec![0.0; k],
            noise_sd: alloc::vec![noise_sd; k],
            seed,
            start: default_start(),
        }
    }
}

pub fn to_rows(a: &[DMatrix<f64>]) -> LagMatrices {
    a.iter().map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()).collect()
}

fn from_rows(spec: &DgpSpec, rows: &LagMatrices, what: &str) -> Result<Vec<DMatrix<f64>>> {
    let (k, q) = (spec.k, spec.q);
    let ok = rows.len() == q && rows.iter().all(|m| m.len() == k && m.iter().all(|r| r.len() == k));
    if !ok {
        return Err(Error::Spec(alloc::format!("{what} must hold {q} matrices of size {k}x{k}")));
    }
    Ok(rows.iter().map(|m| DMatrix::from_fn(k, k, |i, j| m[i][j])).collect())
}

/// Coefficients in effect at each retained row, aligned with the panel.
#[derive(Debug, Clone, PartialEq)]
pub struct TruePath {
    pub dates: Vec<YearMonth>,
    pub a: Vec<Vec<DMatrix<f64>>>,
}

impl TruePath {
    /// The slots a lag-`q` model estimates (rows `q..T`).
    pub fn model_periods(&self, q: usize) -> &[Vec<DMatrix<f64>>] {
        &self.a[q..]
    }
}

fn coefficient_path(spec: &DgpSpec) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let t = spec.t;
    Ok(match &spec.path {
        PathSpec::Constant { a } => alloc::vec![from_rows(spec, a, "a")?; t],
        PathSpec::LinearRamp { start, end } => {
            let (s, e) = (from_rows(spec, start, "start")?, from_rows(spec, end, "end")?);
            (0..t)
                .map(|p| {
                    let w = if t > 1 { p as f64 / (t - 1) as f64 } else { 0.0 };
                    s.iter().zip(&e).map(|(s, e)| s + (e - s) * w).collect()
                })
                .collect()
        }
        PathSpec::RandomWalk { start, sigma_v } => {
            if !(*sigma_v >= 0.0 && sigma_v.is_finite()) {
                return Err(Error::Spec("sigma_v must be finite and non-negative".to_string()));
            }
            let mut rng = replication_rng(spec.seed, 1);
            let mut cur = from_rows(spec, start, "start")?;
            let mut out = Vec::with_capacity(t);
            for p in 0..t {
                if p > 0 {
                    for m in cur.iter_mut() {
                        for v in m.iter_mut() {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            *v += sigma_v * z;
                        }
                    }
                }
                out.push(cur.clone());
            }
            out
        }
        PathSpec::BreakAt { before, after, at } => {
            let (b, a) = (from_rows(spec, before, "before")?, from_rows(spec, after, "after")?);
            (0..t).map(|p| if p < *at { b.clone() } else { a.clone() }).collect()
        }
    })
}

/// Simulate forward from zero initial lags, discarding [`BURN_IN`] periods
/// run at the first retained period's coefficients.
pub fn gen_panel(spec: &DgpSpec) -> Result<(ReturnPanel, TruePath)> {
    let (k, q, t) = (spec.k, spec.q, spec.t);
    if k == 0 || q == 0 || t == 0 {
        return Err(Error::Spec("k, q and t must all be positive".to_string()));
    }
    if spec.intercept.len() != k || spec.noise_sd.len() != k {
        return Err(Error::Spec(alloc::format!("intercept and noise_sd need {k} entries")));
    }
    if spec.noise_sd.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
        return Err(Error::Spec("noise_sd must be finite and non-negative".to_string()));
    }
    let path = coefficient_path(spec)?;
    for (p, a) in path.iter().enumerate() {
        let rho = spectral_radius(&companion(a));
        if !(rho < MAX_SPECTRAL_RADIUS) {
            return Err(Error::Spec(alloc::format!(
                "companion spectral radius {rho:.4} at period {p} is not below {MAX_SPECTRAL_RADIUS}"
            )));
        }
    }

    let mut rng = replication_rng(spec.seed, 0);
    let total = BURN_IN + t;
    let mut x = DMatrix::zeros(total, k);
    for s in 0..total {
        let a = &path[s.saturating_sub(BURN_IN)];
        for i in 0..k {
            let mut v = spec.intercept[i];
            for (l, al) in a.iter().enumerate() {
                if s > l {
                    for j in 0..k {
                        v += al[(i, j)] * x[(s - l - 1, j)];
                    }
                }
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            x[(s, i)] = v + spec.noise_sd[i] * z;
        }
    }
    let dates: Vec<YearMonth> = (0..t).map(|p| spec.start.offset(p as i64)).collect();
    let names = (1..=k).map(|i| alloc::format!("x{i}")).collect();
    let panel = ReturnPanel::new(dates.clone(), names, x.rows(BURN_IN, t).into_owned())?;
    Ok((panel, TruePath { dates, a: path }))
}

/// Root-mean-square path deviation, per lag element and overall.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRmse {
    /// `per_element[l][(row, col)]`.
    pub per_element: Vec<DMatrix<f64>>,
    pub aggregate: f64,
}

pub fn path_rmse(estimated: &[Vec<DMatrix<f64>>], truth: &[Vec<DMatrix<f64>>]) -> Result<PathRmse> {
    let shape =
        |p: &[Vec<DMatrix<f64>>]| p.first().map(|lags| (lags.len(), lags.first().map_or((0, 0), |m| m.shape())));
    if estimated.len() != truth.len() || estimated.is_empty() || shape(estimated) != shape(truth) {
        return Err(Error::Shape(alloc::format!(
            "estimated path has {} periods, truth has {}",
            estimated.len(),
            truth.len()
        )));
    }
    let (q, (r, c)) = shape(truth).expect("non-empty");
    let n = truth.len() as f64;
    let mut per_element = alloc::vec![DMatrix::zeros(r, c); q];
    for (e, t) in estimated.iter().zip(truth) {
        if e.len() != q || e.iter().chain(t).any(|m| m.shape() != (r, c)) {
            return Err(Error::Shape("lag matrices differ in shape across periods".to_string()));
        }
        for l in 0..q {
            per_element[l] += (&e[l] - &t[l]).map(|d| d * d);
        }
    }
    let total: f64 = per_element.iter().map(|m| m.sum()).sum();
    let aggregate = libm::sqrt(total / (n * (q * r * c) as f64));
    for m in per_element.iter_mut() {
        m.apply(|v| *v = libm::sqrt(*v / n));
    }
    Ok(PathRmse { per_element, aggregate })
}
