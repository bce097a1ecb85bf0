//! Time-invariant VAR(q): BIC lag choice, equation-by-equation OLS,
//! Newey-West standard errors and Hansen's joint parameter-constancy
//! statistic with variance scores.
//!
//! Coefficients for equation `i` are ordered `[const, x_{t-1}, ..., x_{t-q}]`
//! where each lag block lists the `k` series in panel order. The residual
//! variance uses the `T - q` denominator throughout.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{least_squares, variance};
use crate::timeseries::ReturnPanel;

/// Series with sample variance below this are treated as degenerate.
pub const VARIANCE_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub q: usize,
    pub names: Vec<String>,
    /// Intercepts, one per equation.
    pub nu: Vec<f64>,
    /// Lag matrices `A_1..A_q`; `a[l][(i, j)]` is the effect of `x_{j,t-l-1}` on `x_{i,t}`.
    pub a: Vec<DMatrix<f64>>,
    /// `(T - q) x k`.
    pub residuals: DMatrix<f64>,
    /// Residual covariance `E'E / (T - q)`.
    pub sigma: DMatrix<f64>,
    pub adj_r2: Vec<f64>,
    design: DMatrix<f64>,
}

impl VarModel {
    pub fn k(&self) -> usize {
        self.names.len()
    }

    /// Effective sample `T - q`.
    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    /// Regressor matrix `[1, x_{t-1}, ..., x_{t-q}]`, one row per effective observation.
    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    /// `k x (kq + 1)` coefficient table, row `i` for equation `i`, columns in
    /// regressor order.
    pub fn coefficient_table(&self) -> DMatrix<f64> {
        let k = self.k();
        DMatrix::from_fn(k, k * self.q + 1, |i, c| {
            if c == 0 {
                self.nu[i]
            } else {
                let (l, j) = ((c - 1) / k, (c - 1) % k);
                self.a[l][(i, j)]
            }
        })
    }
}

/// Rows `start..T` of `[1, x_{t-1}, ..., x_{t-q}]`.
pub(crate) fn lagged_design(x: &DMatrix<f64>, q: usize, start: usize) -> DMatrix<f64> {
    let k = x.ncols();
    DMatrix::from_fn(x.nrows() - start, k * q + 1, |r, c| {
        if c == 0 {
            1.0
        } else {
            let (l, j) = ((c - 1) / k + 1, (c - 1) % k);
            x[(start + r - l, j)]
        }
    })
}

pub(crate) fn check_variance(r: &ReturnPanel) -> Result<()> {
    for (i, name) in r.names().iter().enumerate() {
        let v = variance(r.values().column(i).iter().copied());
        if !(v >= VARIANCE_FLOOR) {
            return Err(Error::Singular(alloc::format!(
                "series {name} is degenerate (variance {v:e} below floor {VARIANCE_FLOOR:e})"
            )));
        }
    }
    Ok(())
}

fn singular_column(r: &ReturnPanel, col: usize) -> Error {
    if col == 0 {
        Error::Singular("intercept column is collinear with the lags".to_string())
    } else {
        let k = r.k();
        Error::Singular(alloc::format!(
            "regressor for series {} (lag {}) is collinear",
            r.names()[(col - 1) % k],
            (col - 1) / k + 1
        ))
    }
}

fn fit_on_sample(r: &ReturnPanel, q: usize, start: usize) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let x = r.values();
    let design = lagged_design(x, q, start);
    let response = x.rows(start, x.nrows() - start).into_owned();
    let b = least_squares(&design, &response).map_err(|c| singular_column(r, c))?;
    Ok((design, response, b))
}

/// Equation-by-equation OLS of `x_t` on `[1, x_{t-1}, ..., x_{t-q}]`.
pub fn fit_var_ols(r: &ReturnPanel, q: usize) -> Result<VarModel> {
    let (t_len, k) = (r.len(), r.k());
    if q == 0 {
        return Err(Error::Config("VAR lag order must be at least 1".to_string()));
    }
    if t_len <= q || t_len - q <= k * q + 1 {
        return Err(Error::InsufficientData(alloc::format!(
            "VAR({q}) with {k} series needs T - q > {}, got T = {t_len}",
            k * q + 1
        )));
    }
    check_variance(r)?;
    let (design, response, b) = fit_on_sample(r, q, q)?;
    let residuals = &response - &design * &b;
    let n = residuals.nrows();
    let sigma = residuals.transpose() * &residuals / n as f64;
    let p = k * q + 1;
    let adj_r2 = (0..k)
        .map(|i| {
            let y = response.column(i);
            let mean = y.sum() / n as f64;
            let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
            let rss = residuals.column(i).norm_squared();
            1.0 - (rss / (n - p) as f64) / (tss / (n - 1) as f64)
        })
        .collect();
    let nu = b.row(0).iter().copied().collect();
    let a = (0..q).map(|l| DMatrix::from_fn(k, k, |i, j| b[(1 + l * k + j, i)])).collect();
    Ok(VarModel { q, names: r.names().to_vec(), nu, a, residuals, sigma, adj_r2, design })
}

/// Per-lag-order BIC values, `bic[q - 1]` for `q = 1..=q_max`.
pub fn bic_values(r: &ReturnPanel, q_max: usize) -> Result<Vec<f64>> {
    let (t_len, k) = (r.len(), r.k());
    if q_max == 0 {
        return Err(Error::Config("q_max must be at least 1".to_string()));
    }
    if t_len <= q_max || t_len - q_max <= k * q_max + 1 {
        return Err(Error::InsufficientData(alloc::format!(
            "BIC search up to q = {q_max} needs T - q_max > {}, got T = {t_len}",
            k * q_max + 1
        )));
    }
    check_variance(r)?;
    let n = (t_len - q_max) as f64;
    (1..=q_max)
        .map(|q| {
            let (design, response, b) = fit_on_sample(r, q, q_max)?;
            let e = &response - &design * &b;
            let sigma = e.transpose() * &e / n;
            let det = sigma.determinant();
            if !(det > 0.0) {
                return Err(Error::Singular("residual covariance is not positive definite".to_string()));
            }
            let params = (k * (k * q + 1)) as f64;
            Ok(libm::log(det) + libm::log(n) * params / n)
        })
        .collect()
}

/// `argmin_q` of `ln det(Sigma_q) + ln(T*) * #params / T*` on the common
/// sample `T* = T - q_max`, searched over `q = 1..=q_max`.
pub fn select_lag_bic(r: &ReturnPanel, q_max: usize) -> Result<usize> {
    let bic = bic_values(r, q_max)?;
    let mut best = 0;
    for (i, v) in bic.iter().enumerate() {
        if *v < bic[best] {
            best = i;
        }
    }
    Ok(best + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    /// `floor(4 (n/100)^(2/9))`.
    Auto,
    Fixed(usize),
}

impl Bandwidth {
    pub fn resolve(self, nobs: usize) -> usize {
        match self {
            Bandwidth::Fixed(l) => l,
            Bandwidth::Auto => libm::floor(4.0 * libm::pow(nobs as f64 / 100.0, 2.0 / 9.0)) as usize,
        }
    }
}

/// Newey-West (Bartlett) sandwich standard errors, `k x (kq + 1)` aligned
/// with [`VarModel::coefficient_table`]. No small-sample scaling.
pub fn newey_west_se(m: &VarModel, bandwidth: Bandwidth) -> Result<DMatrix<f64>> {
    let x = &m.design;
    let (n, p) = (x.nrows(), x.ncols());
    let lags = bandwidth.resolve(n);
    if lags >= n {
        return Err(Error::Bandwidth { bandwidth: lags, sample: n });
    }
    let bread =
        (x.transpose() * x).try_inverse().ok_or_else(|| Error::Singular("regressor cross-product".to_string()))?;
    let mut se = DMatrix::zeros(m.k(), p);
    for i in 0..m.k() {
        let scores = DMatrix::from_fn(n, p, |t, c| x[(t, c)] * m.residuals[(t, i)]);
        let mut meat = scores.transpose() * &scores;
        for j in 1..=lags {
            let w = 1.0 - j as f64 / (lags as f64 + 1.0);
            let lead = scores.rows(j, n - j);
            let lag = scores.rows(0, n - j);
            let gamma = lead.transpose() * lag;
            meat += (&gamma + gamma.transpose()) * w;
        }
        let cov = &bread * meat * &bread;
        for c in 0..p {
            se[(i, c)] = libm::sqrt(cov[(c, c)].max(0.0));
        }
    }
    Ok(se)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HansenResult {
    pub lc: f64,
    /// Number of scores tested.
    pub dof: usize,
    pub critical_5pct: f64,
    pub reject_5pct: bool,
}

/// Asymptotic 5% critical values of the joint `L_c` statistic for 1..=20 scores.
const HANSEN_LC_5PCT: [f64; 20] = [
    0.470, 0.749, 1.01, 1.24, 1.47, 1.68, 1.90, 2.11, 2.32, 2.54, 2.75, 2.96, 3.15, 3.34, 3.54, 3.75, 3.95, 4.14, 4.33,
    4.52,
];

/// 5% critical value for `dof` scores; linear extrapolation past 20.
pub fn hansen_critical_5pct(dof: usize) -> f64 {
    assert!(dof >= 1, "at least one score");
    if dof <= HANSEN_LC_5PCT.len() {
        return HANSEN_LC_5PCT[dof - 1];
    }
    let slope = HANSEN_LC_5PCT[19] - HANSEN_LC_5PCT[18];
    HANSEN_LC_5PCT[19] + slope * (dof - 20) as f64
}

/// Per-observation scores stacked equation by equation:
/// `[x_t e_{1t}, e_{1t}^2 - s_1^2, x_t e_{2t}, e_{2t}^2 - s_2^2, ...]`.
pub fn hansen_scores(m: &VarModel) -> DMatrix<f64> {
    let x = &m.design;
    let (n, p) = (x.nrows(), x.ncols());
    let k = m.k();
    let mut f = DMatrix::zeros(n, k * (p + 1));
    for i in 0..k {
        let s2 = m.residuals.column(i).norm_squared() / n as f64;
        let base = i * (p + 1);
        for t in 0..n {
            let e = m.residuals[(t, i)];
            for c in 0..p {
                f[(t, base + c)] = x[(t, c)] * e;
            }
            f[(t, base + p)] = e * e - s2;
        }
    }
    f
}

/// Joint `L_c = n^{-1} sum_t S_t' V^{-1} S_t` over all equations' scores,
/// with `S_t` the cumulative score sums and `V = sum_t f_t f_t'`.
pub fn hansen_lc(m: &VarModel) -> Result<HansenResult> {
    let f = hansen_scores(m);
    let (n, dof) = (f.nrows(), f.ncols());
    let v = f.transpose() * &f;
    let chol = v.cholesky().ok_or_else(|| Error::Singular("score outer-product matrix is singular".to_string()))?;
    let mut cum = DMatrix::zeros(dof, n);
    let mut running = nalgebra::DVector::zeros(dof);
    for t in 0..n {
        running += f.row(t).transpose();
        cum.set_column(t, &running);
    }
    let solved = chol.solve(&cum);
    let lc = cum.component_mul(&solved).sum() / n as f64;
    let critical_5pct = hansen_critical_5pct(dof);
    Ok(HansenResult { lc: lc.max(0.0), dof, critical_5pct, reject_5pct: lc > critical_5pct })
}
