//! Residual bootstrap under the null that every TV-VAR coefficient is zero.
//!
//! The null model is `x_t = nu + e_t`, so the residuals are the demeaned
//! returns. Each replication resamples whole rows (keeping cross-series
//! correlation), refits the TV model and records the degree path. Bands are
//! pointwise type-7 quantiles across replications.
//!
//! Replication `b` draws from ChaCha8 stream `b` of the master seed, so the
//! result does not depend on how replications are scheduled.

use alloc::string::ToString;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::efficiency::{degree_path, diagonal_degree_path};
use crate::error::{Error, Result};
use crate::timeseries::{ReturnPanel, YearMonth};
use crate::tvvar::{fit_tvar_univariate, fit_tvvar_gls};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Workers {
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub level: f64,
    pub seed: u64,
    pub workers: Workers,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self { replications: 5000, level: 0.95, seed: 42, workers: Workers::Auto }
    }
}

impl BootstrapConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 100 {
            return Err(Error::Config(alloc::format!(
                "bands need at least 100 replications, got {}",
                self.replications
            )));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(alloc::format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }
}

/// RNG for replication `index`.
pub fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Demeaned-row resampler for the efficient-market null.
#[derive(Debug, Clone)]
pub struct NullResampler {
    panel: ReturnPanel,
    mean: Vec<f64>,
    centered: DMatrix<f64>,
}

impl NullResampler {
    pub fn new(r: &ReturnPanel) -> Self {
        let x = r.values();
        let n = x.nrows() as f64;
        let mean: Vec<f64> = (0..r.k()).map(|i| x.column(i).sum() / n).collect();
        let centered = DMatrix::from_fn(x.nrows(), x.ncols(), |t, i| x[(t, i)] - mean[i]);
        Self { panel: r.clone(), mean, centered }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> ReturnPanel {
        let (t_len, k) = (self.centered.nrows(), self.centered.ncols());
        let mut values = DMatrix::zeros(t_len, k);
        for t in 0..t_len {
            let src = rng.random_range(0..t_len);
            for i in 0..k {
                values[(t, i)] = self.mean[i] + self.centered[(src, i)];
            }
        }
        self.panel.with_values(values).expect("resampled panel keeps the input's shape and dates")
    }
}

/// One null panel: `x*_t = mean + e*_t` with rows of centred returns drawn
/// with replacement.
pub fn simulate_null<R: Rng + ?Sized>(r: &ReturnPanel, rng: &mut R) -> ReturnPanel {
    NullResampler::new(r).draw(rng)
}

/// Which degree path a replication records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegreeTarget {
    Joint,
    /// Univariate TV-AR of one series.
    Individual(usize),
    /// One series' own-lag degree from the joint TV-VAR.
    Diagonal(usize),
}

/// Pointwise bands for one degree path.
#[derive(Debug, Clone, PartialEq)]
pub struct BandResult {
    pub dates: Vec<YearMonth>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub level: f64,
    pub replications: usize,
    pub failed: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandFlag {
    Inside,
    Above,
    Below,
}

impl BandFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            BandFlag::Inside => "inside",
            BandFlag::Above => "above",
            BandFlag::Below => "below",
        }
    }
}

impl BandResult {
    /// Position of each observed degree relative to the band; `above` marks
    /// significant inefficiency at that date.
    pub fn flags(&self, zeta: &[Option<f64>]) -> Vec<Option<BandFlag>> {
        zeta.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(z, (lo, hi))| {
                z.map(|z| {
                    if z > *hi {
                        BandFlag::Above
                    } else if z < *lo {
                        BandFlag::Below
                    } else {
                        BandFlag::Inside
                    }
                })
            })
            .collect()
    }
}

/// Type-7 quantile of ascending `sorted` at probability `p`.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `((1 - level)/2, (1 + level)/2)` quantiles per date across `draws`
/// (`draws[b][t]`).
pub fn pointwise_bands(draws: &[Vec<f64>], level: f64) -> (Vec<f64>, Vec<f64>) {
    let dates = draws.first().map_or(0, Vec::len);
    let (plo, phi) = ((1.0 - level) / 2.0, (1.0 + level) / 2.0);
    let mut column = Vec::with_capacity(draws.len());
    let mut lower = Vec::with_capacity(dates);
    let mut upper = Vec::with_capacity(dates);
    for t in 0..dates {
        column.clear();
        column.extend(draws.iter().map(|d| d[t]));
        column.sort_by(f64::total_cmp);
        lower.push(quantile_type7(&column, plo));
        upper.push(quantile_type7(&column, phi));
    }
    (lower, upper)
}

/// A fully specified bootstrap: the panel, model settings and the degree
/// paths to collect. Replications can be run in any order or concurrently
/// through [`BootstrapPlan::replicate`] and combined with
/// [`BootstrapPlan::finish`].
#[derive(Debug, Clone)]
pub struct BootstrapPlan {
    resampler: NullResampler,
    q: usize,
    lambda: f64,
    targets: Vec<DegreeTarget>,
    cfg: BootstrapConfig,
}

impl BootstrapPlan {
    pub fn new(r: &ReturnPanel, q: usize, lambda: f64, targets: &[DegreeTarget], cfg: BootstrapConfig) -> Result<Self> {
        cfg.validate()?;
        if r.len() < q + 10 {
            return Err(Error::InsufficientData(alloc::format!("bootstrap needs T >= q + 10, got T = {}", r.len())));
        }
        if targets.is_empty() {
            return Err(Error::Config("no degree path requested".to_string()));
        }
        for t in targets {
            if let DegreeTarget::Individual(i) | DegreeTarget::Diagonal(i) = t {
                if *i >= r.k() {
                    return Err(Error::Shape(alloc::format!("series index {i} out of range")));
                }
            }
        }
        Ok(Self { resampler: NullResampler::new(r), q, lambda, targets: targets.to_vec(), cfg })
    }

    pub fn config(&self) -> &BootstrapConfig {
        &self.cfg
    }

    pub fn replications(&self) -> usize {
        self.cfg.replications
    }

    /// Degree paths of replication `index`, one per target, or `None` when
    /// the refit fails or a period hits the unit-root boundary.
    pub fn replicate(&self, index: usize) -> Option<Vec<Vec<f64>>> {
        let mut rng = replication_rng(self.cfg.seed, index);
        let panel = self.resampler.draw(&mut rng);
        let mut joint = None;
        let mut out = Vec::with_capacity(self.targets.len());
        for target in &self.targets {
            let path = match *target {
                DegreeTarget::Joint => {
                    if joint.is_none() {
                        joint = Some(fit_tvvar_gls(&panel, self.q, self.lambda).ok()?);
                    }
                    degree_path(joint.as_ref()?).ok()?
                }
                DegreeTarget::Individual(i) => {
                    degree_path(&fit_tvar_univariate(&panel, i, self.q, self.lambda).ok()?).ok()?
                }
                DegreeTarget::Diagonal(i) => {
                    if joint.is_none() {
                        joint = Some(fit_tvvar_gls(&panel, self.q, self.lambda).ok()?);
                    }
                    diagonal_degree_path(joint.as_ref()?, i).ok()?
                }
            };
            out.push(path.complete()?);
        }
        Some(out)
    }

    /// Combine replication outputs (indexed by replication) into one band per
    /// target. More than 1% failures is a quality error.
    pub fn finish(&self, draws: Vec<Option<Vec<Vec<f64>>>>) -> Result<Vec<BandResult>> {
        let replications = draws.len();
        let ok: Vec<Vec<Vec<f64>>> = draws.into_iter().flatten().collect();
        let failed = replications - ok.len();
        if failed * 100 > replications || ok.is_empty() {
            return Err(Error::Quality { failed, replications });
        }
        let dates = self.resampler.panel.dates()[self.q..].to_vec();
        Ok((0..self.targets.len())
            .map(|j| {
                let per_target: Vec<Vec<f64>> = ok.iter().map(|rep| rep[j].clone()).collect();
                let (lower, upper) = pointwise_bands(&per_target, self.cfg.level);
                BandResult {
                    dates: dates.clone(),
                    lower,
                    upper,
                    level: self.cfg.level,
                    replications,
                    failed,
                    seed: self.cfg.seed,
                }
            })
            .collect())
    }

    /// All replications in index order on the calling thread.
    pub fn run_sequential(&self) -> Result<Vec<BandResult>> {
        let draws = (0..self.cfg.replications).map(|b| self.replicate(b)).collect();
        self.finish(draws)
    }
}

/// Bands for the joint degree path, computed sequentially.
pub fn bootstrap_bands(r: &ReturnPanel, q: usize, lambda: f64, cfg: &BootstrapConfig) -> Result<BandResult> {
    let plan = BootstrapPlan::new(r, q, lambda, &[DegreeTarget::Joint], *cfg)?;
    Ok(plan.run_sequential()?.remove(0))
}
