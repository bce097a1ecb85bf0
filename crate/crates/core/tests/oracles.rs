//! Implementations checked against independently assembled brute-force
//! computations.

mod common;

use common::*;
use nalgebra::DMatrix;
use tvmeff_core::efficiency::{cumulative_response, individual_degree, joint_degree};
use tvmeff_core::irf::{ma_coefficients, static_irf, tv_irf};
use tvmeff_core::tvvar::{build_stacked_system, fit_tvar_univariate, fit_tvvar_gls};
use tvmeff_core::unitroot::{gls_detrend, DetrendSpec};
use tvmeff_core::var::{fit_var_ols, hansen_critical_5pct, hansen_lc, newey_west_se, Bandwidth};

/// `[1, x_{t-1}, ..., x_{t-q}]` written out row by row.
fn design_by_hand(x: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    let (t_len, k) = x.shape();
    let mut rows = Vec::new();
    for t in q..t_len {
        let mut row = vec![1.0];
        for l in 1..=q {
            for j in 0..k {
                row.push(x[(t - l, j)]);
            }
        }
        rows.extend(row);
    }
    DMatrix::from_row_slice(t_len - q, k * q + 1, &rows)
}

#[test]
fn var_ols_matches_normal_equations() {
    for case in 0..20u64 {
        let k = 1 + (case % 3) as usize;
        let q = 1 + ((case / 3) % 3) as usize;
        let r = gaussian_panel(245, k, 0.03, 1000 + case);
        let m = fit_var_ols(&r, q).unwrap();
        let x = design_by_hand(r.values(), q);
        let y = r.values().rows(q, 245 - q).into_owned();
        let b = gauss_solve(&(x.transpose() * &x), &(x.transpose() * &y));
        let oracle = b.transpose();
        let got = m.coefficient_table();
        let rel = max_abs_diff(&got, &oracle) / oracle.amax();
        assert!(rel < 1e-10, "case {case} (k={k}, q={q}): rel err {rel:e}");
    }
}

#[test]
fn newey_west_matches_double_sum() {
    let r = simulate_var(&[DMatrix::from_row_slice(2, 2, &[0.3, 0.1, -0.2, 0.4])], &[0.01, -0.02], 120, 0.05, 5);
    let m = fit_var_ols(&r, 1).unwrap();
    let x = m.design().clone();
    let (n, p) = x.shape();
    for lags in [0usize, 1, 3, 7] {
        let se = newey_west_se(&m, Bandwidth::Fixed(lags)).unwrap();
        let bread = gauss_inverse(&(x.transpose() * &x));
        for i in 0..2 {
            let mut meat = DMatrix::zeros(p, p);
            for s in 0..n {
                for t in 0..n {
                    let d = s.abs_diff(t);
                    if d > lags {
                        continue;
                    }
                    let w = 1.0 - d as f64 / (lags as f64 + 1.0);
                    for a in 0..p {
                        for b in 0..p {
                            meat[(a, b)] += w * x[(s, a)] * m.residuals[(s, i)] * x[(t, b)] * m.residuals[(t, i)];
                        }
                    }
                }
            }
            let cov = &bread * meat * &bread;
            for c in 0..p {
                let want = cov[(c, c)].sqrt();
                let rel = (se[(i, c)] - want).abs() / want;
                assert!(rel < 1e-12, "L={lags} eq {i} coef {c}: {rel:e}");
                assert!(se[(i, c)] > 0.0);
            }
        }
    }
}

#[test]
fn newey_west_bandwidth_zero_is_white() {
    let r = gaussian_panel(200, 2, 0.02, 91);
    let m = fit_var_ols(&r, 1).unwrap();
    let x = m.design();
    let se = newey_west_se(&m, Bandwidth::Fixed(0)).unwrap();
    let bread = gauss_inverse(&(x.transpose() * x));
    for i in 0..2 {
        let mut meat = DMatrix::zeros(x.ncols(), x.ncols());
        for t in 0..x.nrows() {
            let row = x.row(t).transpose();
            meat += &row * row.transpose() * m.residuals[(t, i)].powi(2);
        }
        let cov = &bread * meat * &bread;
        for c in 0..x.ncols() {
            assert!((se[(i, c)] - cov[(c, c)].sqrt()).abs() < 1e-12 * cov[(c, c)].sqrt());
        }
    }
}

#[test]
fn hansen_matches_literal_sum() {
    let r = simulate_var(&[DMatrix::from_row_slice(2, 2, &[0.2, 0.0, 0.1, 0.3])], &[0.0, 0.0], 150, 1.0, 33);
    let m = fit_var_ols(&r, 1).unwrap();
    let got = hansen_lc(&m).unwrap();
    let x = m.design();
    let n = x.nrows();
    // scores: per equation [x e, e^2 - s^2]
    let mut f = vec![vec![]; n];
    for i in 0..2 {
        let s2: f64 = (0..n).map(|t| m.residuals[(t, i)].powi(2)).sum::<f64>() / n as f64;
        for t in 0..n {
            let e = m.residuals[(t, i)];
            for c in 0..x.ncols() {
                f[t].push(x[(t, c)] * e);
            }
            f[t].push(e * e - s2);
        }
    }
    let dim = f[0].len();
    let mut v = DMatrix::zeros(dim, dim);
    for ft in &f {
        for a in 0..dim {
            for b in 0..dim {
                v[(a, b)] += ft[a] * ft[b];
            }
        }
    }
    let vinv = gauss_inverse(&v);
    let mut lc = 0.0;
    for t in 0..n {
        let s: Vec<f64> = (0..dim).map(|a| (0..=t).map(|u| f[u][a]).sum()).collect();
        for a in 0..dim {
            for b in 0..dim {
                lc += s[a] * vinv[(a, b)] * s[b];
            }
        }
    }
    lc /= n as f64;
    assert_eq!(got.dof, 8);
    assert!((got.lc - lc).abs() < 1e-10 * lc, "{} vs {lc}", got.lc);
    assert_eq!(got.critical_5pct, hansen_critical_5pct(8));
}

#[test]
fn tvvar_matches_dense_least_squares() {
    for (case, (k, q, t, lambda)) in
        [(1, 1, 12, 1.0), (2, 1, 30, 0.5), (2, 2, 30, 3.0), (1, 3, 25, 10.0), (2, 1, 20, 1e-3)].into_iter().enumerate()
    {
        let r = gaussian_panel(t, k, 1.0, 500 + case as u64);
        let sys = build_stacked_system(&r, q, lambda).unwrap();
        let a = sys.design.to_dense();
        let y = DMatrix::from_column_slice(sys.response.len(), 1, &sys.response);
        let sol = a.svd(true, true).solve(&y, 1e-14).unwrap();
        let m = fit_tvvar_gls(&r, q, lambda).unwrap();
        let l = sys.layout;
        let mut worst: f64 = 0.0;
        for i in 0..k {
            worst = worst.max((m.nu[i] - sol[l.intercept(i)]).abs());
        }
        for p in 0..l.periods {
            for lag in 1..=q {
                for i in 0..k {
                    for j in 0..k {
                        let want = sol[l.coefficient(p, lag, i, j)];
                        worst = worst.max((m.a_path[p][lag - 1][(i, j)] - want).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "case {case}: max deviation {worst:e}");
    }
}

#[test]
fn huge_smoothness_collapses_to_ols() {
    let a = DMatrix::from_row_slice(3, 3, &[0.3, 0.1, 0.0, 0.0, 0.4, -0.1, 0.05, 0.0, 0.2]);
    let r = simulate_var(&[a], &[0.005, 0.002, 0.0], 245, 0.03, 7);
    let ols = fit_var_ols(&r, 1).unwrap();
    let tv = fit_tvvar_gls(&r, 1, 1e8).unwrap();
    let worst = tv.a_path.iter().map(|lags| max_abs_diff(&lags[0], &ols.a[0])).fold(0.0, f64::max);
    assert!(worst < 1e-4, "{worst:e}");
}

#[test]
fn univariate_tvar_is_the_k1_tvvar() {
    let r = gaussian_panel(80, 3, 0.05, 12);
    let uni = fit_tvar_univariate(&r, 1, 2, 1.0).unwrap();
    let joint = fit_tvvar_gls(&r.select(1), 2, 1.0).unwrap();
    assert_eq!(uni.nu, joint.nu[0]);
    for (p, lags) in joint.a_path.iter().enumerate() {
        for (l, a) in lags.iter().enumerate() {
            assert!((uni.coefficients[p][l] - a[(0, 0)]).abs() <= 1e-12);
        }
    }
}

#[test]
fn univariate_huge_smoothness_is_ar_ols() {
    let r = simulate_var(&[DMatrix::from_element(1, 1, 0.4)], &[0.001], 245, 0.02, 8);
    let tv = fit_tvar_univariate(&r, 0, 1, 1e8).unwrap();
    // AR(1) OLS by hand
    let y = r.column(0);
    let n = (y.len() - 1) as f64;
    let (mx, my) = (y[..y.len() - 1].iter().sum::<f64>() / n, y[1..].iter().sum::<f64>() / n);
    let sxy: f64 = (1..y.len()).map(|t| (y[t - 1] - mx) * (y[t] - my)).sum();
    let sxx: f64 = (1..y.len()).map(|t| (y[t - 1] - mx).powi(2)).sum();
    let slope = sxy / sxx;
    for c in &tv.coefficients {
        assert!((c[0] - slope).abs() < 1e-4);
    }
}

#[test]
fn near_noiseless_constant_var_has_flat_path() {
    let a = DMatrix::from_row_slice(3, 3, &[0.5, 0.1, 0.0, -0.1, 0.3, 0.0, 0.0, 0.2, 0.4]);
    let r = simulate_var(&[a], &[0.0; 3], 245, 1e-6, 21);
    let m = fit_tvvar_gls(&r, 1, 1.0).unwrap();
    let worst = m.a_path.windows(2).map(|w| max_abs_diff(&w[0][0], &w[1][0])).fold(0.0, f64::max);
    assert!(worst < 1e-3, "{worst:e}");
}

#[test]
fn gls_detrend_trend_matches_hand_regression() {
    // y = a + b t; the quasi-differenced regression recovers (a, b) exactly.
    let (a, b) = (2.5, -0.03);
    let n = 60;
    let y: Vec<f64> = (1..=n).map(|t| a + b * t as f64).collect();
    let spec = DetrendSpec::trend();
    let (d, phi) = gls_detrend(&y, &spec).unwrap();
    assert!(d.iter().all(|v| v.abs() < 1e-8));

    // hand-assembled normal equations on a noisy series
    let mut r = rng(4);
    let y: Vec<f64> = (1..=n).map(|t| a + b * t as f64 + normal(&mut r)).collect();
    let alpha = 1.0 - 13.5 / n as f64;
    let mut zz = DMatrix::zeros(2, 2);
    let mut zy = DMatrix::zeros(2, 1);
    for t in 1..=n {
        let (z0, z1, yt) = if t == 1 {
            (1.0, 1.0, y[0])
        } else {
            (1.0 - alpha, t as f64 - alpha * (t - 1) as f64, y[t - 1] - alpha * y[t - 2])
        };
        zz[(0, 0)] += z0 * z0;
        zz[(0, 1)] += z0 * z1;
        zz[(1, 1)] += z1 * z1;
        zy[(0, 0)] += z0 * yt;
        zy[(1, 0)] += z1 * yt;
    }
    zz[(1, 0)] = zz[(0, 1)];
    let want = gauss_solve(&zz, &zy);
    let (d, phi2) = gls_detrend(&y, &spec).unwrap();
    assert!((phi2[0] - want[0]).abs() < 1e-9 && (phi2[1] - want[1]).abs() < 1e-9);
    for t in 0..n {
        let fitted = want[0] + want[1] * (t + 1) as f64;
        assert!((d[t] - (y[t] - fitted)).abs() < 1e-9);
    }
    assert!((phi[0] - a).abs() < 1e-8 && (phi[1] - b).abs() < 1e-8);
}

/// Largest singular value by power iteration on M'M.
fn power_spectral_norm(m: &DMatrix<f64>) -> f64 {
    let mtm = m.transpose() * m;
    let mut v = DMatrix::from_element(m.ncols(), 1, 1.0);
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = &mtm * &v;
        lambda = w.norm();
        v = w / lambda;
    }
    lambda.sqrt()
}

#[test]
fn joint_degree_matches_power_iteration() {
    let mut r = rng(17);
    for _ in 0..10 {
        let a = DMatrix::from_fn(3, 3, |_, _| 0.2 * normal(&mut r));
        let phi = cumulative_response(std::slice::from_ref(&a)).unwrap();
        let want = power_spectral_norm(&(&phi - DMatrix::identity(3, 3)));
        let got = joint_degree(&phi).unwrap();
        assert!((got - want).abs() < 1e-10 * want.max(1.0), "{got} vs {want}");
        // Phi(1) by hand: solve (I - A) X = I
        let by_hand = gauss_inverse(&(DMatrix::identity(3, 3) - a));
        assert!(max_abs_diff(&phi, &by_hand) < 1e-12);
    }
}

#[test]
fn ma_coefficients_are_matrix_powers_for_var1() {
    let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]);
    let phi = ma_coefficients(std::slice::from_ref(&a), 12);
    let mut power = DMatrix::identity(2, 2);
    for (h, ph) in phi.iter().enumerate() {
        assert!(max_abs_diff(ph, &power) < 1e-15, "h = {h}");
        power = &power * &a;
    }
}

#[test]
fn tv_irf_scalar_path_is_power_of_coefficient() {
    let r = simulate_var(&[DMatrix::from_element(1, 1, 0.3)], &[0.0], 60, 1.0, 2);
    let m = fit_tvvar_gls(&r, 1, 1.0).unwrap();
    let s = tv_irf(&m, 6).unwrap();
    for (p, lags) in m.a_path.iter().enumerate() {
        let a = lags[0][(0, 0)];
        for h in 0..=6 {
            assert!((s.get(p, h, 0, 0) - a.powi(h as i32)).abs() < 1e-14);
        }
        assert_eq!(s.slice(p), static_irf(&m, m.dates[p], 6).unwrap());
    }
}

#[test]
fn individual_matches_joint_for_one_series() {
    for a in [-0.9, -0.5, 0.0, 0.1, 0.5, 0.75, 0.95] {
        let j = joint_degree(&cumulative_response(&[DMatrix::from_element(1, 1, a)]).unwrap()).unwrap();
        let i = individual_degree(&[a]).unwrap();
        assert!((i - j).abs() <= 1e-14 * i.max(1.0), "{a}: {i} vs {j}");
    }
}

#[test]
fn newey_west_close_to_classical_under_homoskedasticity() {
    let r = gaussian_panel(20_000, 2, 1.0, 123);
    let m = fit_var_ols(&r, 1).unwrap();
    let x = m.design();
    let se = newey_west_se(&m, Bandwidth::Fixed(0)).unwrap();
    let bread = gauss_inverse(&(x.transpose() * x));
    for i in 0..2 {
        let s2 = m.residuals.column(i).norm_squared() / m.nobs() as f64;
        for c in 0..x.ncols() {
            let classical = (s2 * bread[(c, c)]).sqrt();
            assert!((se[(i, c)] / classical - 1.0).abs() < 0.02);
        }
    }
}

#[test]
fn surfaces_are_flat_for_constant_paths_and_start_at_identity() {
    let r = gaussian_panel(80, 2, 0.05, 8);
    let m = fit_tvvar_gls(&r, 1, 1e10).unwrap();
    let s = tv_irf(&m, 4).unwrap();
    let first = s.slice(0);
    for p in 0..m.periods() {
        assert_eq!(s.slice(p)[0], DMatrix::identity(2, 2));
        for (a, b) in s.slice(p).iter().zip(&first) {
            assert!((a - b).amax() < 1e-6);
        }
    }
}

#[test]
fn static_cut_range_rule() {
    let r = gaussian_panel(40, 2, 0.05, 3);
    let m = fit_tvvar_gls(&r, 2, 1.0).unwrap();
    assert!(static_irf(&m, r.dates()[2], 3).is_ok());
    assert!(matches!(static_irf(&m, r.dates()[1], 3), Err(tvmeff_core::Error::Range(_))));
    assert!(static_irf(&m, *r.dates().last().unwrap(), 3).is_ok());
}
