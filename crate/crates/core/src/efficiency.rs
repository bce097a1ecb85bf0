//! Degree of market efficiency from VAR lag matrices.
//!
//! The cumulative impulse response is `Phi(1) = (I - A_1 - ... - A_q)^{-1}`
//! and the joint degree is the spectral norm of `Phi(1) - I`, zero exactly
//! when every lag matrix is zero. For one series the degree reduces to
//! `|sum(a) / (1 - sum(a))|`.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::timeseries::YearMonth;
use crate::tvvar::{TvArModel, TvVarModel};

/// `I - sum(A)` with a condition number above this is reported as a unit-root
/// boundary rather than inverted.
pub const MAX_CONDITION: f64 = 1e12;

/// `(I - A_1 - ... - A_q)^{-1}`.
pub fn cumulative_response(a: &[DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let k =
        a.first().map(|m| m.nrows()).ok_or_else(|| Error::Shape("at least one lag matrix is required".to_string()))?;
    if a.iter().any(|m| m.nrows() != k || m.ncols() != k) {
        return Err(Error::Shape("lag matrices must all be k x k".to_string()));
    }
    if a.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
        return Err(Error::Numeric("lag matrix has non-finite entries".to_string()));
    }
    let mut lhs = DMatrix::identity(k, k);
    for m in a {
        lhs -= m;
    }
    let sv = lhs.clone().svd(false, false).singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition < MAX_CONDITION) || !(smin > 1.0 / MAX_CONDITION) {
        return Err(Error::UnitRootBoundary { condition });
    }
    lhs.try_inverse().ok_or(Error::UnitRootBoundary { condition })
}

/// Largest singular value of `Phi(1) - I`.
pub fn joint_degree(phi1: &DMatrix<f64>) -> Result<f64> {
    if !phi1.is_square() {
        return Err(Error::Shape("Phi(1) must be square".to_string()));
    }
    if phi1.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("Phi(1) has non-finite entries".to_string()));
    }
    let n = phi1.nrows();
    Ok(spectral_norm(&(phi1 - DMatrix::identity(n, n))))
}

/// `|1 / (1 - sum(a)) - 1|` for scalar lag coefficients.
pub fn individual_degree(a: &[f64]) -> Result<f64> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite AR coefficient".to_string()));
    }
    let s: f64 = a.iter().sum();
    let margin = 1.0 - s;
    if !(margin.abs() > 1.0 / MAX_CONDITION) {
        return Err(Error::UnitRootBoundary { condition: f64::INFINITY });
    }
    Ok((1.0 / margin - 1.0).abs())
}

/// Dated degree path. Periods where `I - sum(A)` could not be inverted hold
/// `None` and are listed in `boundaries`.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyPath {
    pub dates: Vec<YearMonth>,
    pub zeta: Vec<Option<f64>>,
    pub bands: Option<Bands>,
    pub boundaries: Vec<YearMonth>,
}

/// Pointwise `(lower, upper)` per date at `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bands {
    pub level: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl EfficiencyPath {
    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// The path with every gap filled, or `None` if any period hit the boundary.
    pub fn complete(&self) -> Option<Vec<f64>> {
        self.zeta.iter().copied().collect()
    }
}

/// Anything that carries per-date lag matrices.
pub trait CoefficientPath {
    fn dates(&self) -> &[YearMonth];
    /// Lag matrices `A_1..A_q` at period `p`.
    fn lags_at(&self, p: usize) -> Vec<DMatrix<f64>>;
}

impl CoefficientPath for TvVarModel {
    fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    fn lags_at(&self, p: usize) -> Vec<DMatrix<f64>> {
        self.a_path[p].clone()
    }
}

impl CoefficientPath for TvArModel {
    fn dates(&self) -> &[YearMonth] {
        &self.dates
    }

    fn lags_at(&self, p: usize) -> Vec<DMatrix<f64>> {
        self.coefficients[p].iter().map(|&a| DMatrix::from_element(1, 1, a)).collect()
    }
}

/// Degree at one period: the individual formula for one series, the joint
/// spectral norm otherwise.
pub fn degree_at(a: &[DMatrix<f64>]) -> Result<f64> {
    if a.first().map(|m| m.nrows()) == Some(1) {
        let scalars: Vec<f64> = a.iter().map(|m| m[(0, 0)]).collect();
        individual_degree(&scalars)
    } else {
        joint_degree(&cumulative_response(a)?)
    }
}

pub fn degree_path<M: CoefficientPath + ?Sized>(m: &M) -> Result<EfficiencyPath> {
    let dates = m.dates().to_vec();
    let mut zeta = Vec::with_capacity(dates.len());
    let mut boundaries = Vec::new();
    for (p, &date) in dates.iter().enumerate() {
        match degree_at(&m.lags_at(p)) {
            Ok(z) => zeta.push(Some(z)),
            Err(Error::UnitRootBoundary { .. }) => {
                zeta.push(None);
                boundaries.push(date);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EfficiencyPath { dates, zeta, bands: None, boundaries })
}

/// Individual degree of series `i` read off the joint model's diagonal
/// (`A_l[i, i]` only).
pub fn diagonal_degree_path(m: &TvVarModel, i: usize) -> Result<EfficiencyPath> {
    if i >= m.k() {
        return Err(Error::Shape(alloc::format!("series index {i} out of range")));
    }
    let diag = TvArModel {
        q: m.q,
        name: m.names[i].clone(),
        lambda: m.lambda,
        nu: m.nu[i],
        coefficients: m.a_path.iter().map(|lags| lags.iter().map(|a| a[(i, i)]).collect()).collect(),
        residuals: m.residuals.column(i).iter().copied().collect(),
        dates: m.dates.clone(),
    };
    degree_path(&diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn scaled_identity(k: usize, s: f64) -> DMatrix<f64> {
        DMatrix::identity(k, k) * s
    }

    #[test]
    fn zero_lags_give_identity() {
        let phi = cumulative_response(&[DMatrix::zeros(3, 3)]).unwrap();
        assert_eq!(phi, DMatrix::identity(3, 3));
        assert_eq!(joint_degree(&phi).unwrap(), 0.0);
    }

    #[test]
    fn half_identity_doubles() {
        let phi = cumulative_response(&[scaled_identity(3, 0.5)]).unwrap();
        assert!((phi - scaled_identity(3, 2.0)).amax() < 1e-15);
        let phi = cumulative_response(&[scaled_identity(3, 0.25), scaled_identity(3, 0.25)]).unwrap();
        assert!((&phi - scaled_identity(3, 2.0)).amax() < 1e-15);
        assert!((joint_degree(&phi).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_one_offset() {
        let phi = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        assert!((joint_degree(&phi).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn individual_hand_values() {
        assert_eq!(individual_degree(&[0.0]).unwrap(), 0.0);
        assert!((individual_degree(&[0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert!((individual_degree(&[-0.5]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((individual_degree(&[0.3, 0.2]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn unit_root_boundary() {
        assert!(matches!(individual_degree(&[1.0]), Err(Error::UnitRootBoundary { .. })));
        assert!(matches!(individual_degree(&[0.5, 0.5]), Err(Error::UnitRootBoundary { .. })));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.2]);
        assert!(matches!(cumulative_response(&[a]), Err(Error::UnitRootBoundary { .. })));
    }

    #[test]
    fn non_finite_input() {
        let phi = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(joint_degree(&phi), Err(Error::Numeric(_))));
    }

    #[test]
    fn path_flags_boundary_periods() {
        let d0 = YearMonth::new(1931, 11).unwrap();
        let m = TvArModel {
            q: 1,
            name: "x".into(),
            lambda: 1.0,
            nu: 0.0,
            coefficients: vec![vec![0.5], vec![1.0], vec![0.0]],
            residuals: vec![0.0; 3],
            dates: vec![d0, d0.next(), d0.next().next()],
        };
        let path = degree_path(&m).unwrap();
        assert_eq!(path.len(), 3);
        assert!((path.zeta[0].unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(path.zeta[1], None);
        assert_eq!(path.zeta[2], Some(0.0));
        assert_eq!(path.boundaries, vec![d0.next()]);
        assert!(path.complete().is_none());
    }
}
