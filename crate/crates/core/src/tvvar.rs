//! Time-varying VAR estimated as one stacked least-squares problem.
//!
//! The lag matrices follow random walks and the intercepts are fixed. With
//! smoothness ratio `lambda` the estimate minimises
//!
//! ```text
//! sum_t |x_t - nu - sum_l A_{l,t} x_{t-l}|^2 + lambda * sum_t |vec(A_t) - vec(A_{t-1})|^2
//! ```
//!
//! which is ordinary least squares on an observation block stacked over a
//! smoothness block scaled by `sqrt(lambda)`. [`build_stacked_system`] writes
//! that system out explicitly (sparse); [`fit_tvvar_gls`] solves it without
//! forming it. Rows and unknowns split by equation, and within an equation
//! the normal matrix is block tridiagonal in time with a one-column border
//! for the intercept, so each equation costs `O(T (kq)^3)`.
//!
//! There is no prior on the first period's coefficients.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::timeseries::{ReturnPanel, YearMonth};
use crate::var::check_variance;

/// Flat index map for the stacked unknown vector: `k` intercepts, then one
/// block of `k * k * q` coefficients per period, each block ordered by
/// equation row, then lag, then regressor column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoefficientLayout {
    pub k: usize,
    pub q: usize,
    pub periods: usize,
}

impl CoefficientLayout {
    pub fn unknowns(&self) -> usize {
        self.k + self.periods * self.block()
    }

    pub fn observation_rows(&self) -> usize {
        self.periods * self.k
    }

    pub fn smoothness_rows(&self) -> usize {
        self.periods.saturating_sub(1) * self.block()
    }

    pub fn intercept(&self, row: usize) -> usize {
        row
    }

    /// Position of `A_{lag,t}[row, col]`, with `lag` in `1..=q` and `period`
    /// counted from the first modelled date.
    pub fn coefficient(&self, period: usize, lag: usize, row: usize, col: usize) -> usize {
        debug_assert!((1..=self.q).contains(&lag) && period < self.periods);
        self.k + period * self.block() + row * self.k * self.q + (lag - 1) * self.k + col
    }

    fn block(&self) -> usize {
        self.k * self.k * self.q
    }
}

/// Compressed-row sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDesign {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseDesign {
    fn with_cols(ncols: usize) -> Self {
        Self { nrows: 0, ncols, row_ptr: alloc::vec![0], cols: Vec::new(), vals: Vec::new() }
    }

    fn push_row(&mut self, entries: impl IntoIterator<Item = (usize, f64)>) {
        for (c, v) in entries {
            self.cols.push(c);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
        self.nrows += 1;
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored `(column, value)` pairs of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }
}

/// Observation rows (`(T - q) * k`, period-major) followed by smoothness rows.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedSystem {
    pub design: SparseDesign,
    pub response: Vec<f64>,
    pub layout: CoefficientLayout,
}

fn check_inputs(r: &ReturnPanel, q: usize, lambda: f64) -> Result<CoefficientLayout> {
    if !lambda.is_finite() {
        return Err(Error::Numeric(alloc::format!("smoothness must be finite, got {lambda}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Config(alloc::format!("smoothness must be positive, got {lambda}")));
    }
    if q == 0 {
        return Err(Error::Config("lag order must be at least 1".to_string()));
    }
    let (t_len, k) = (r.len(), r.k());
    if t_len < q + k * q + 2 {
        return Err(Error::InsufficientData(alloc::format!(
            "TV-VAR({q}) with {k} series needs T - q >= {}, got T = {t_len}",
            k * q + 2
        )));
    }
    Ok(CoefficientLayout { k, q, periods: t_len - q })
}

pub fn build_stacked_system(r: &ReturnPanel, q: usize, lambda: f64) -> Result<StackedSystem> {
    let layout = check_inputs(r, q, lambda)?;
    let CoefficientLayout { k, periods, .. } = layout;
    let x = r.values();
    let mut design = SparseDesign::with_cols(layout.unknowns());
    let mut response = Vec::with_capacity(layout.observation_rows() + layout.smoothness_rows());
    for p in 0..periods {
        let t = p + q;
        for i in 0..k {
            let lags = (1..=q).flat_map(|l| (0..k).map(move |j| (l, j)));
            design.push_row(
                core::iter::once((layout.intercept(i), 1.0))
                    .chain(lags.map(|(l, j)| (layout.coefficient(p, l, i, j), x[(t - l, j)]))),
            );
            response.push(x[(t, i)]);
        }
    }
    let w = libm::sqrt(lambda);
    for p in 1..periods {
        for i in 0..k {
            for l in 1..=q {
                for j in 0..k {
                    design.push_row([(layout.coefficient(p - 1, l, i, j), -w), (layout.coefficient(p, l, i, j), w)]);
                    response.push(0.0);
                }
            }
        }
    }
    Ok(StackedSystem { design, response, layout })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TvVarModel {
    pub q: usize,
    pub names: Vec<String>,
    pub lambda: f64,
    pub nu: Vec<f64>,
    /// `a_path[p][l]` is `A_{l+1}` at the `p`-th modelled date.
    pub a_path: Vec<Vec<DMatrix<f64>>>,
    /// `(T - q) x k` observation-block residuals.
    pub residuals: DMatrix<f64>,
    /// Dates `q+1..=T` of the input panel.
    pub dates: Vec<YearMonth>,
}

impl TvVarModel {
    pub fn k(&self) -> usize {
        self.names.len()
    }

    pub fn periods(&self) -> usize {
        self.a_path.len()
    }

    pub fn position(&self, date: YearMonth) -> Option<usize> {
        self.dates.binary_search(&date).ok()
    }

    /// `sum_t |vec(A_t) - vec(A_{t-1})|_F` over all lags.
    pub fn total_variation(&self) -> f64 {
        self.a_path
            .windows(2)
            .map(|w| {
                let ss: f64 = w[0].iter().zip(&w[1]).map(|(a, b)| (b - a).norm_squared()).sum();
                libm::sqrt(ss)
            })
            .sum()
    }

    /// Residual covariance `E'E / (T - q)`.
    pub fn residual_covariance(&self) -> DMatrix<f64> {
        self.residuals.transpose() * &self.residuals / self.residuals.nrows() as f64
    }
}

/// One equation of the stacked system: regressors `z` (`n x m`, one row per
/// period) and response `y`. Returns the intercept and per-period slopes.
fn solve_equation(z: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<(f64, Vec<DVector<f64>>)> {
    let (n, m) = (z.nrows(), z.ncols());
    let singular = || Error::Singular("lagged regressors do not identify the coefficient path".to_string());
    let eye = DMatrix::<f64>::identity(m, m);

    let mut factors: Vec<Cholesky<f64, Dyn>> = Vec::with_capacity(n);
    let mut g: Vec<DMatrix<f64>> = Vec::with_capacity(n);
    for p in 0..n {
        let zp = z.row(p).transpose();
        let links = (p > 0) as usize + (p + 1 < n) as usize;
        let mut d = &zp * zp.transpose() + &eye * (lambda * links as f64);
        let mut rhs = DMatrix::zeros(m, 2);
        rhs.set_column(0, &(&zp * y[p]));
        rhs.set_column(1, &zp);
        if let Some(prev) = factors.last() {
            d -= prev.inverse() * (lambda * lambda);
            rhs += prev.solve(&g[p - 1]) * lambda;
        }
        // keep D exactly symmetric so the factorisation sees a clean SPD block
        let d = (&d + d.transpose()) * 0.5;
        factors.push(d.cholesky().ok_or_else(singular)?);
        g.push(rhs);
    }
    let mut u: Vec<DMatrix<f64>> = alloc::vec![DMatrix::zeros(m, 2); n];
    u[n - 1] = factors[n - 1].solve(&g[n - 1]);
    for p in (0..n - 1).rev() {
        let rhs = &g[p] + &u[p + 1] * lambda;
        u[p] = factors[p].solve(&rhs);
    }

    let mut schur = n as f64;
    let mut num: f64 = y.iter().sum();
    for (p, up) in u.iter().enumerate() {
        let zp = z.row(p);
        num -= (zp * up.column(0))[0];
        schur -= (zp * up.column(1))[0];
    }
    if !(schur > 1e-12 * n as f64) {
        return Err(Error::Singular("intercept is not identified alongside the coefficient path".to_string()));
    }
    let nu = num / schur;
    let beta = u.iter().map(|up| up.column(0) - up.column(1) * nu).collect();
    Ok((nu, beta))
}

/// Least-squares solution of the stacked system of [`build_stacked_system`].
pub fn fit_tvvar_gls(r: &ReturnPanel, q: usize, lambda: f64) -> Result<TvVarModel> {
    let layout = check_inputs(r, q, lambda)?;
    check_variance(r)?;
    let CoefficientLayout { k, periods, .. } = layout;
    let x = r.values();
    let z = DMatrix::from_fn(periods, k * q, |p, c| x[(p + q - 1 - c / k, c % k)]);

    let mut nu = Vec::with_capacity(k);
    let mut a_path = alloc::vec![alloc::vec![DMatrix::zeros(k, k); q]; periods];
    let mut residuals = DMatrix::zeros(periods, k);
    for i in 0..k {
        let y: Vec<f64> = (0..periods).map(|p| x[(p + q, i)]).collect();
        let (nu_i, beta) = solve_equation(&z, &y, lambda)?;
        for (p, b) in beta.iter().enumerate() {
            if b.iter().any(|v| !v.is_finite()) || !nu_i.is_finite() {
                return Err(Error::Numeric("coefficient path is not finite".to_string()));
            }
            for c in 0..k * q {
                a_path[p][c / k][(i, c % k)] = b[c];
            }
            residuals[(p, i)] = y[p] - nu_i - z.row(p).dot(&b.transpose());
        }
        nu.push(nu_i);
    }
    Ok(TvVarModel { q, names: r.names().to_vec(), lambda, nu, a_path, residuals, dates: r.dates()[q..].to_vec() })
}

/// Univariate time-varying AR(q).
#[derive(Debug, Clone, PartialEq)]
pub struct TvArModel {
    pub q: usize,
    pub name: String,
    pub lambda: f64,
    pub nu: f64,
    /// `coefficients[p][l]` is `a_{l+1}` at the `p`-th modelled date.
    pub coefficients: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub dates: Vec<YearMonth>,
}

impl TvArModel {
    pub fn periods(&self) -> usize {
        self.coefficients.len()
    }
}

impl From<TvVarModel> for TvArModel {
    fn from(m: TvVarModel) -> Self {
        assert_eq!(m.k(), 1, "univariate conversion needs a one-series model");
        TvArModel {
            q: m.q,
            name: m.names[0].clone(),
            lambda: m.lambda,
            nu: m.nu[0],
            coefficients: m.a_path.iter().map(|lags| lags.iter().map(|a| a[(0, 0)]).collect()).collect(),
            residuals: m.residuals.column(0).iter().copied().collect(),
            dates: m.dates,
        }
    }
}

/// Time-varying AR(q) for column `series` of the panel.
pub fn fit_tvar_univariate(r: &ReturnPanel, series: usize, q: usize, lambda: f64) -> Result<TvArModel> {
    if series >= r.k() {
        return Err(Error::Shape(alloc::format!("series index {series} out of range for {} series", r.k())));
    }
    fit_tvvar_gls(&r.select(series), q, lambda).map(TvArModel::from)
}
