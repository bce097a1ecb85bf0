//! ADF-GLS unit-root test: GLS detrending at a local-to-unity
//! quasi-difference, lag choice by the Ng-Perron modified BIC, and the
//! Dickey-Fuller t-ratio on the detrended series.
//!
//! The detrending coefficient vector is exposed as `phi_hat` (some texts
//! write it `psi_hat`).

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::least_squares;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Deterministics {
    Constant,
    ConstantAndTrend,
}

/// Deterministic terms and the local-to-unity noncentrality `c_bar < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetrendSpec {
    pub kind: Deterministics,
    pub c_bar: f64,
}

/// Critical values of the DF-GLS t-ratio at 1%, 5% and 10%.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl DetrendSpec {
    pub fn new(kind: Deterministics, c_bar: f64) -> Result<Self> {
        if !(c_bar < 0.0) {
            return Err(Error::Config(alloc::format!("c_bar must be negative, got {c_bar}")));
        }
        Ok(Self { kind, c_bar })
    }

    /// Constant only, `c_bar = -7`.
    pub fn constant() -> Self {
        Self { kind: Deterministics::Constant, c_bar: -7.0 }
    }

    /// Constant and linear trend, `c_bar = -13.5`.
    pub fn trend() -> Self {
        Self { kind: Deterministics::ConstantAndTrend, c_bar: -13.5 }
    }

    pub fn critical_values(&self) -> CriticalValues {
        match self.kind {
            // Dickey-Fuller without deterministics.
            Deterministics::Constant => CriticalValues { one: -2.58, five: -1.95, ten: -1.62 },
            // 5% is the T ~ 245 value; 1% and 10% are the asymptotic ERS entries.
            Deterministics::ConstantAndTrend => CriticalValues { one: -3.48, five: -2.91, ten: -2.57 },
        }
    }

    fn n_terms(&self) -> usize {
        match self.kind {
            Deterministics::Constant => 1,
            Deterministics::ConstantAndTrend => 2,
        }
    }

    fn term(&self, t: usize, j: usize) -> f64 {
        // t is 1-based
        if j == 0 {
            1.0
        } else {
            t as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitRootResult {
    pub statistic: f64,
    pub lag: usize,
    pub phi_hat: Vec<f64>,
    pub critical_5pct: f64,
    pub reject: bool,
    pub spec: DetrendSpec,
}

/// Schwert's rule `floor(12 (T/100)^(1/4))`.
pub fn schwert_pmax(len: usize) -> usize {
    libm::floor(12.0 * libm::pow(len as f64 / 100.0, 0.25)) as usize
}

/// Quasi-difference `y` and the deterministics at `1 + c_bar/T`, regress, and
/// return `(y - z phi_hat, phi_hat)`.
pub fn gls_detrend(y: &[f64], spec: &DetrendSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    if n < 10 {
        return Err(Error::InsufficientData(alloc::format!("GLS detrending needs at least 10 observations, got {n}")));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("series contains non-finite values".to_string()));
    }
    let alpha = 1.0 + spec.c_bar / n as f64;
    let m = spec.n_terms();
    let z =
        DMatrix::from_fn(
            n,
            m,
            |t, j| {
                if t == 0 {
                    spec.term(1, j)
                } else {
                    spec.term(t + 1, j) - alpha * spec.term(t, j)
                }
            },
        );
    let ya = DMatrix::from_fn(n, 1, |t, _| if t == 0 { y[0] } else { y[t] - alpha * y[t - 1] });
    let phi = least_squares(&z, &ya).map_err(|_| Error::Singular("collinear deterministic terms".to_string()))?;
    let phi: Vec<f64> = phi.column(0).iter().copied().collect();
    let detrended = (0..n)
        .map(|t| {
            let fitted: f64 = (0..m).map(|j| spec.term(t + 1, j) * phi[j]).sum();
            y[t] - fitted
        })
        .collect();
    Ok((detrended, phi))
}

struct AdfFit {
    beta0: f64,
    se: f64,
    rss: f64,
    nobs: usize,
    sum_lagged_sq: f64,
}

/// `dy_t = beta0 y_{t-1} + sum_j b_j dy_{t-j} + e_t` over `t in start..len`
/// (0-based, requires `start >= lags + 1`).
fn adf_regression(yd: &[f64], lags: usize, start: usize) -> Result<AdfFit> {
    let n = yd.len();
    let nobs = n - start;
    let p = lags + 1;
    if nobs <= p {
        return Err(Error::InsufficientData("too few observations for the ADF regression".to_string()));
    }
    let dy = |t: usize| yd[t] - yd[t - 1];
    let x = DMatrix::from_fn(nobs, p, |r, j| {
        let t = start + r;
        if j == 0 {
            yd[t - 1]
        } else {
            dy(t - j)
        }
    });
    let y = DMatrix::from_fn(nobs, 1, |r, _| dy(start + r));
    let b = least_squares(&x, &y).map_err(|_| Error::DegenerateSeries("ADF regressors are collinear".to_string()))?;
    let resid = &y - &x * &b;
    let rss = resid.norm_squared();
    let xtx_inv =
        (x.transpose() * &x).try_inverse().ok_or_else(|| Error::Singular("ADF regressor cross-product".to_string()))?;
    let s2 = rss / (nobs - p) as f64;
    Ok(AdfFit {
        beta0: b[(0, 0)],
        se: libm::sqrt(s2 * xtx_inv[(0, 0)]),
        rss,
        nobs,
        sum_lagged_sq: (0..nobs).map(|r| x[(r, 0)] * x[(r, 0)]).sum(),
    })
}

/// Ng-Perron modified BIC over `0..=p_max` on the common sample that drops
/// the first `p_max + 1` observations.
pub fn select_lag_mbic(y_detrended: &[f64], p_max: usize) -> Result<usize> {
    if y_detrended.len() <= p_max + 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "series of length {} is too short for p_max = {p_max}",
            y_detrended.len()
        )));
    }
    if p_max == 0 {
        return Ok(0);
    }
    let start = p_max + 1;
    let mut best = (f64::INFINITY, 0);
    for p in 0..=p_max {
        let fit = adf_regression(y_detrended, p, start)?;
        let n = fit.nobs as f64;
        let s2 = fit.rss / n;
        let tau = fit.beta0 * fit.beta0 * fit.sum_lagged_sq / s2;
        let mic = libm::log(s2) + libm::log(n) * (tau + p as f64) / n;
        if mic < best.0 {
            best = (mic, p);
        }
    }
    Ok(best.1)
}

/// ADF-GLS test. `p_max = None` uses [`schwert_pmax`], capped so the
/// common-sample regression stays identified.
pub fn adf_gls_test(y: &[f64], spec: &DetrendSpec, p_max: Option<usize>) -> Result<UnitRootResult> {
    let (yd, phi_hat) = gls_detrend(y, spec)?;
    let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let spread = yd.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if !(spread > 1e-10 * scale) {
        return Err(Error::DegenerateSeries("series is fully explained by its deterministic terms".to_string()));
    }
    let cap = (y.len().saturating_sub(4)) / 2;
    let p_max = p_max.unwrap_or_else(|| schwert_pmax(y.len()).min(cap));
    let lag = select_lag_mbic(&yd, p_max)?;
    let fit = adf_regression(&yd, lag, lag + 1)?;
    if !(fit.rss > 0.0 && fit.se > 0.0) {
        return Err(Error::DegenerateSeries("zero residual variance".to_string()));
    }
    let statistic = fit.beta0 / fit.se;
    let critical_5pct = spec.critical_values().five;
    Ok(UnitRootResult { statistic, lag, phi_hat, critical_5pct, reject: statistic < critical_5pct, spec: *spec })
}
