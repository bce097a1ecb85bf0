#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use tvmeff_core::{ReturnPanel, YearMonth};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn start() -> YearMonth {
    YearMonth::new(1924, 7).unwrap()
}

pub fn panel(values: DMatrix<f64>) -> ReturnPanel {
    let dates = (0..values.nrows()).map(|t| start().offset(t as i64)).collect();
    let names = (0..values.ncols()).map(|i| format!("s{i}")).collect();
    ReturnPanel::new(dates, names, values).unwrap()
}

/// i.i.d. Gaussian panel with standard deviation `sd`.
pub fn gaussian_panel(t: usize, k: usize, sd: f64, seed: u64) -> ReturnPanel {
    let mut r = rng(seed);
    panel(DMatrix::from_fn(t, k, |_, _| sd * normal(&mut r)))
}

/// Simulate `x_t = nu + sum_l A_l x_{t-l} + sd * e_t` with 50 burn-in periods.
pub fn simulate_var(a: &[DMatrix<f64>], nu: &[f64], t: usize, sd: f64, seed: u64) -> ReturnPanel {
    let k = nu.len();
    let mut r = rng(seed);
    let total = t + 50;
    let mut x = DMatrix::zeros(total, k);
    for s in 0..total {
        for i in 0..k {
            let mut v = nu[i] + sd * normal(&mut r);
            for (l, al) in a.iter().enumerate() {
                if s > l {
                    for j in 0..k {
                        v += al[(i, j)] * x[(s - l - 1, j)];
                    }
                }
            }
            x[(s, i)] = v;
        }
    }
    panel(x.rows(50, t).into_owned())
}

/// Gauss-Jordan elimination with partial pivoting; independent of nalgebra's
/// factorisations.
pub fn gauss_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut aug: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| a[(i, j)]).chain((0..m).map(|j| b[(i, j)])).collect()).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| aug[x][col].abs().total_cmp(&aug[y][col].abs())).unwrap();
        aug.swap(col, piv);
        let d = aug[col][col];
        for v in aug[col].iter_mut() {
            *v /= d;
        }
        let pivot = aug[col].clone();
        for (r, row) in aug.iter_mut().enumerate() {
            let f = row[col];
            if r != col && f != 0.0 {
                for (v, pv) in row[col..].iter_mut().zip(&pivot[col..]) {
                    *v -= f * pv;
                }
            }
        }
    }
    DMatrix::from_fn(n, m, |i, j| aug[i][n + j])
}

pub fn gauss_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    gauss_solve(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax()
}
