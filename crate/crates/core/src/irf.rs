//! Reduced-form impulse responses (`Phi_0 = I`) from VAR lag matrices, and
//! their time-varying version obtained by freezing the coefficient path at
//! each date.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::timeseries::YearMonth;
use crate::tvvar::TvVarModel;

/// `Phi_0 = I`, `Phi_h = sum_{j=1}^{min(h,q)} Phi_{h-j} A_j`.
pub fn ma_coefficients(a: &[DMatrix<f64>], horizon: usize) -> Vec<DMatrix<f64>> {
    let k = a.first().map_or(0, |m| m.nrows());
    let mut phi = Vec::with_capacity(horizon + 1);
    phi.push(DMatrix::identity(k, k));
    for h in 1..=horizon {
        let mut next = DMatrix::zeros(k, k);
        for (j, aj) in a.iter().enumerate().take(h) {
            next += &phi[h - j - 1] * aj;
        }
        phi.push(next);
    }
    phi
}

/// Post-multiply each `Phi_h` by the lower Cholesky factor of `sigma`.
pub fn orthogonalize(phi: &[DMatrix<f64>], sigma: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>> {
    let p = sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Singular("residual covariance is not positive definite".to_string()))?
        .l();
    Ok(phi.iter().map(|m| m * &p).collect())
}

/// Responses indexed by `(date, horizon, shock, response)`; `Phi_h[(response, shock)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSurface {
    pub dates: Vec<YearMonth>,
    pub names: Vec<String>,
    pub horizon: usize,
    values: Vec<f64>,
}

impl ImpulseSurface {
    pub fn from_parts(dates: Vec<YearMonth>, names: Vec<String>, horizon: usize, values: Vec<f64>) -> Result<Self> {
        let k = names.len();
        let want = dates.len() * (horizon + 1) * k * k;
        if values.len() != want {
            return Err(Error::Shape(alloc::format!("expected {want} surface values, got {}", values.len())));
        }
        Ok(Self { dates, names, horizon, values })
    }

    pub fn k(&self) -> usize {
        self.names.len()
    }

    fn index(&self, date: usize, h: usize, shock: usize, response: usize) -> usize {
        let k = self.k();
        ((date * (self.horizon + 1) + h) * k + shock) * k + response
    }

    pub fn get(&self, date: usize, h: usize, shock: usize, response: usize) -> f64 {
        self.values[self.index(date, h, shock, response)]
    }

    /// `Phi_0..Phi_H` at date index `date`.
    pub fn slice(&self, date: usize) -> Vec<DMatrix<f64>> {
        let k = self.k();
        (0..=self.horizon).map(|h| DMatrix::from_fn(k, k, |resp, shock| self.get(date, h, shock, resp))).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn responses_at(
    m: &TvVarModel,
    p: usize,
    horizon: usize,
    orthogonal: Option<&DMatrix<f64>>,
) -> Result<Vec<DMatrix<f64>>> {
    let phi = ma_coefficients(&m.a_path[p], horizon);
    match orthogonal {
        Some(sigma) => orthogonalize(&phi, sigma),
        None => Ok(phi),
    }
}

fn surface(m: &TvVarModel, horizon: usize, orthogonal: bool) -> Result<ImpulseSurface> {
    if horizon == 0 {
        return Err(Error::Config("impulse-response horizon must be at least 1".to_string()));
    }
    let sigma = orthogonal.then(|| m.residual_covariance());
    let k = m.k();
    let mut values = Vec::with_capacity(m.periods() * (horizon + 1) * k * k);
    for p in 0..m.periods() {
        for phi in responses_at(m, p, horizon, sigma.as_ref())? {
            for shock in 0..k {
                for resp in 0..k {
                    values.push(phi[(resp, shock)]);
                }
            }
        }
    }
    ImpulseSurface::from_parts(m.dates.clone(), m.names.clone(), horizon, values)
}

/// Reduced-form responses at every modelled date.
pub fn tv_irf(m: &TvVarModel, horizon: usize) -> Result<ImpulseSurface> {
    surface(m, horizon, false)
}

/// Cholesky-orthogonalised responses using the model's residual covariance.
pub fn tv_irf_orthogonalized(m: &TvVarModel, horizon: usize) -> Result<ImpulseSurface> {
    surface(m, horizon, true)
}

/// The `date` slice of [`tv_irf`].
pub fn static_irf(m: &TvVarModel, date: YearMonth, horizon: usize) -> Result<Vec<DMatrix<f64>>> {
    let p = m.position(date).ok_or(Error::Range(date))?;
    responses_at(m, p, horizon, None)
}
