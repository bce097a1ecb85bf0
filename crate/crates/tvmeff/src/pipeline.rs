//! Pipeline stages shared by the subcommands and the full `run`.

use std::path::PathBuf;

use serde::Serialize;
use tvmeff_core::bootstrap::{BandResult, BootstrapPlan, DegreeTarget};
use tvmeff_core::efficiency::{degree_path, diagonal_degree_path, EfficiencyPath};
use tvmeff_core::irf::{static_irf, tv_irf, tv_irf_orthogonalized, ImpulseSurface};
use tvmeff_core::timeseries::{describe, log_returns, Descriptives};
use tvmeff_core::tvvar::{fit_tvar_univariate, fit_tvvar_gls, TvVarModel};
use tvmeff_core::unitroot::{adf_gls_test, UnitRootResult};
use tvmeff_core::var::{bic_values, fit_var_ols, hansen_lc, newey_west_se, HansenResult};
use tvmeff_core::{ReturnPanel, YearMonth};

use crate::config::{Choice, Format, IndividualSource, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::load_price_csv;
use crate::output::{json_bytes, write_atomic, Cell, Table};
use crate::parallel::{run_plan, worker_count};

pub const MANIFEST: &str = "manifest.json";

pub fn load_returns(cfg: &RunConfig) -> CliResult<ReturnPanel> {
    let prices = load_price_csv(cfg.input()?, &cfg.load_options())?;
    log_returns(&prices).map_err(CliError::core("input"))
}

/// One Table 1 column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesSummary {
    #[serde(flatten)]
    pub stats: Descriptives,
    pub adf_gls: UnitRootResult,
}

pub fn summarize(r: &ReturnPanel, cfg: &RunConfig) -> CliResult<Vec<SeriesSummary>> {
    let stats = describe(r).map_err(CliError::core("describe"))?;
    stats
        .into_iter()
        .enumerate()
        .map(|(i, stats)| {
            let adf_gls = adf_gls_test(&r.column(i), &cfg.detrend.spec(), cfg.pmax())
                .map_err(|e| CliError::Core { stage: "unitroot", source: with_series(e, &stats.series) })?;
            Ok(SeriesSummary { stats, adf_gls })
        })
        .collect()
}

fn with_series(e: tvmeff_core::Error, series: &str) -> tvmeff_core::Error {
    use tvmeff_core::Error;
    match e {
        Error::DegenerateSeries(m) => Error::DegenerateSeries(format!("{series}: {m}")),
        Error::Singular(m) => Error::Singular(format!("{series}: {m}")),
        Error::InsufficientData(m) => Error::InsufficientData(format!("{series}: {m}")),
        other => other,
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";")
}

/// Rows Mean..N, one column per series. `phi_hat` cells list the detrending
/// coefficients separated by `;`.
pub fn table1(summaries: &[SeriesSummary]) -> Table {
    let mut header = vec!["row".to_string()];
    header.extend(summaries.iter().map(|s| s.stats.series.clone()));
    let mut t = Table::new(&header);
    let mut row = |label: &str, f: &dyn Fn(&SeriesSummary) -> Cell| {
        let mut cells = vec![Cell::from(label)];
        cells.extend(summaries.iter().map(f));
        t.push(cells);
    };
    row("Mean", &|s| s.stats.mean.into());
    row("SD", &|s| s.stats.sd.into());
    row("Min", &|s| s.stats.min.into());
    row("Max", &|s| s.stats.max.into());
    row("ADF-GLS", &|s| s.adf_gls.statistic.into());
    row("Lags", &|s| s.adf_gls.lag.into());
    row("phi_hat", &|s| join(&s.adf_gls.phi_hat).into());
    row("N", &|s| s.stats.n.into());
    t
}

pub fn describe_table(stats: &[Descriptives]) -> Table {
    let mut t = Table::new(&["series", "mean", "sd", "min", "max", "n"]);
    for s in stats {
        t.push(vec![s.series.as_str().into(), s.mean.into(), s.sd.into(), s.min.into(), s.max.into(), s.n.into()]);
    }
    t
}

pub fn unitroot_table(summaries: &[SeriesSummary]) -> Table {
    let mut t = Table::new(&["series", "statistic", "lag", "phi_hat", "critical_5pct", "reject"]);
    for s in summaries {
        let u = &s.adf_gls;
        t.push(vec![
            s.stats.series.as_str().into(),
            u.statistic.into(),
            u.lag.into(),
            join(&u.phi_hat).into(),
            u.critical_5pct.into(),
            u.reject.into(),
        ]);
    }
    t
}

/// Lag order for the VAR and TV-VAR stages.
pub fn resolve_q(r: &ReturnPanel, cfg: &RunConfig) -> CliResult<(usize, Vec<f64>)> {
    let bic = bic_values(r, cfg.qmax);
    // A fixed order only reports BIC when the search is feasible.
    if let (Choice::Fixed(q), Err(tvmeff_core::Error::InsufficientData(_))) = (cfg.q, &bic) {
        return Ok((q, Vec::new()));
    }
    let bic = bic.map_err(CliError::core("var"))?;
    let q = match cfg.q {
        Choice::Fixed(q) => q,
        Choice::Auto => {
            let best =
                bic.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i + 1).expect("q_max >= 1");
            best
        }
    };
    Ok((q, bic))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationReport {
    pub series: String,
    pub constant: f64,
    pub constant_se: f64,
    /// `coefficients[l][j]`: effect of series `j` at lag `l + 1`.
    pub coefficients: Vec<Vec<f64>>,
    pub standard_errors: Vec<Vec<f64>>,
    pub adj_r2: f64,
}

/// Table 2 contents.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarReport {
    pub q: usize,
    /// BIC for `q = 1..=qmax`.
    pub bic: Vec<f64>,
    pub names: Vec<String>,
    pub bandwidth: usize,
    pub equations: Vec<EquationReport>,
    pub hansen: HansenResult,
}

pub fn var_report(r: &ReturnPanel, q: usize, bic: Vec<f64>, cfg: &RunConfig) -> CliResult<VarReport> {
    let m = fit_var_ols(r, q).map_err(CliError::core("var"))?;
    let se = newey_west_se(&m, cfg.bandwidth()).map_err(CliError::core("var"))?;
    let hansen = hansen_lc(&m).map_err(CliError::core("var"))?;
    let coef = m.coefficient_table();
    let k = m.k();
    let equations = (0..k)
        .map(|i| {
            let by_lag = |src: &nalgebra::DMatrix<f64>| {
                (0..q).map(|l| (0..k).map(|j| src[(i, 1 + l * k + j)]).collect()).collect()
            };
            EquationReport {
                series: m.names[i].clone(),
                constant: coef[(i, 0)],
                constant_se: se[(i, 0)],
                coefficients: by_lag(&coef),
                standard_errors: by_lag(&se),
                adj_r2: m.adj_r2[i],
            }
        })
        .collect();
    Ok(VarReport { q, bic, names: m.names.clone(), bandwidth: cfg.bandwidth().resolve(m.nobs()), equations, hansen })
}

/// Estimates with bracketed Newey-West errors below them, then adjusted R²
/// and the joint `L_c` (in the first series column).
pub fn table2(rep: &VarReport) -> Table {
    let mut header = vec!["row".to_string()];
    header.extend(rep.names.iter().cloned());
    let mut t = Table::new(&header);
    let bracket = |v: f64| Cell::from(format!("[{v}]"));
    let mut est = vec![Cell::from("Constant")];
    let mut err = vec![Cell::Empty];
    for e in &rep.equations {
        est.push(e.constant.into());
        err.push(bracket(e.constant_se));
    }
    t.push(est);
    t.push(err);
    for l in 0..rep.q {
        for (j, name) in rep.names.iter().enumerate() {
            let mut est = vec![Cell::from(format!("R_{{{name},t-{}}}", l + 1))];
            let mut err = vec![Cell::Empty];
            for e in &rep.equations {
                est.push(e.coefficients[l][j].into());
                err.push(bracket(e.standard_errors[l][j]));
            }
            t.push(est);
            t.push(err);
        }
    }
    let mut r2 = vec![Cell::from("adj_R2")];
    r2.extend(rep.equations.iter().map(|e| Cell::from(e.adj_r2)));
    t.push(r2);
    let mut lc = vec![Cell::from("Lc"), rep.hansen.lc.into()];
    lc.resize(header.len(), Cell::Empty);
    t.push(lc);
    t
}

pub fn fit_tv(r: &ReturnPanel, q: usize, cfg: &RunConfig) -> CliResult<TvVarModel> {
    fit_tvvar_gls(r, q, cfg.smoothness).map_err(CliError::core("tvvar"))
}

/// Long format `date,lag,row,col,estimate`; `row` is the equation and `col`
/// the lagged regressor.
pub fn coefficient_table(m: &TvVarModel) -> Table {
    let mut t = Table::new(&["date", "lag", "row", "col", "estimate"]);
    for (p, lags) in m.a_path.iter().enumerate() {
        for (l, a) in lags.iter().enumerate() {
            for i in 0..m.k() {
                for j in 0..m.k() {
                    t.push(vec![
                        m.dates[p].to_string().into(),
                        (l + 1).into(),
                        m.names[i].as_str().into(),
                        m.names[j].as_str().into(),
                        a[(i, j)].into(),
                    ]);
                }
            }
        }
    }
    t
}

pub fn individual_paths(r: &ReturnPanel, joint: &TvVarModel, cfg: &RunConfig) -> CliResult<Vec<EfficiencyPath>> {
    (0..r.k())
        .map(|i| match cfg.individual {
            IndividualSource::Univariate => {
                let m = fit_tvar_univariate(r, i, joint.q, cfg.smoothness).map_err(CliError::core("tvvar"))?;
                degree_path(&m).map_err(CliError::core("efficiency"))
            }
            IndividualSource::Diagonal => diagonal_degree_path(joint, i).map_err(CliError::core("efficiency")),
        })
        .collect()
}

pub fn individual_targets(k: usize, cfg: &RunConfig) -> Vec<DegreeTarget> {
    (0..k)
        .map(|i| match cfg.individual {
            IndividualSource::Univariate => DegreeTarget::Individual(i),
            IndividualSource::Diagonal => DegreeTarget::Diagonal(i),
        })
        .collect()
}

pub fn bootstrap(r: &ReturnPanel, q: usize, targets: &[DegreeTarget], cfg: &RunConfig) -> CliResult<Vec<BandResult>> {
    let plan =
        BootstrapPlan::new(r, q, cfg.smoothness, targets, cfg.bootstrap()).map_err(CliError::core("bootstrap"))?;
    run_plan(&plan, worker_count(cfg.workers))
}

fn flag_cells(path: &EfficiencyPath, band: &BandResult) -> Vec<[Cell; 4]> {
    let flags = band.flags(&path.zeta);
    (0..path.len())
        .map(|t| {
            [
                path.zeta[t].into(),
                band.lower[t].into(),
                band.upper[t].into(),
                flags[t].map_or("boundary", |f| f.as_str()).into(),
            ]
        })
        .collect()
}

/// `date,zeta,boundary` without bands; `date,zeta,lower,upper,flag` with.
pub fn degree_table(path: &EfficiencyPath, band: Option<&BandResult>) -> Table {
    match band {
        None => {
            let mut t = Table::new(&["date", "zeta", "boundary"]);
            for (d, z) in path.dates.iter().zip(&path.zeta) {
                t.push(vec![d.to_string().into(), (*z).into(), z.is_none().into()]);
            }
            t
        }
        Some(band) => {
            let mut t = Table::new(&["date", "zeta", "lower", "upper", "flag"]);
            for (d, cells) in path.dates.iter().zip(flag_cells(path, band)) {
                let mut row = vec![Cell::from(d.to_string())];
                row.extend(cells);
                t.push(row);
            }
            t
        }
    }
}

/// Long `series,date,...` version of [`degree_table`] for several paths.
pub fn individual_table(names: &[String], paths: &[EfficiencyPath], bands: Option<&[BandResult]>) -> Table {
    let mut out: Option<Table> = None;
    for (i, path) in paths.iter().enumerate() {
        let t = degree_table(path, bands.map(|b| &b[i]));
        let table = out.get_or_insert_with(|| {
            let mut h = vec!["series".to_string()];
            h.extend(t.header.iter().cloned());
            Table::new(&h)
        });
        for row in t.rows {
            let mut cells = vec![Cell::from(names[i].as_str())];
            cells.extend(row);
            table.push(cells);
        }
    }
    out.unwrap_or_else(|| Table::new(&["series", "date", "zeta", "boundary"]))
}

pub fn surface(m: &TvVarModel, cfg: &RunConfig) -> CliResult<ImpulseSurface> {
    let s = if cfg.orthogonalized { tv_irf_orthogonalized(m, cfg.horizon) } else { tv_irf(m, cfg.horizon) };
    s.map_err(CliError::core("irf"))
}

pub const IRF_HEADER: [&str; 5] = ["date", "horizon", "shock", "response", "value"];

/// Long `date,horizon,shock,response,value`, looping date, horizon, shock,
/// response.
pub fn irf_table(s: &ImpulseSurface) -> Table {
    let mut t = Table::new(&IRF_HEADER);
    for (p, date) in s.dates.iter().enumerate() {
        push_cut(&mut t, *date, &s.names, &s.slice(p));
    }
    t
}

fn push_cut(t: &mut Table, date: YearMonth, names: &[String], phi: &[nalgebra::DMatrix<f64>]) {
    for (h, m) in phi.iter().enumerate() {
        for (shock, sname) in names.iter().enumerate() {
            for (response, rname) in names.iter().enumerate() {
                t.push(vec![
                    date.to_string().into(),
                    h.into(),
                    sname.as_str().into(),
                    rname.as_str().into(),
                    m[(response, shock)].into(),
                ]);
            }
        }
    }
}

/// Static cuts at `cfg.at`, taken from the surface so they match it exactly.
pub fn static_table(m: &TvVarModel, s: &ImpulseSurface, cfg: &RunConfig) -> CliResult<Table> {
    let mut t = Table::new(&IRF_HEADER);
    for &date in &cfg.at {
        let phi = if cfg.orthogonalized {
            let p = m.position(date).ok_or(tvmeff_core::Error::Range(date)).map_err(CliError::core("irf"))?;
            s.slice(p)
        } else {
            static_irf(m, date, cfg.horizon).map_err(CliError::core("irf"))?
        };
        push_cut(&mut t, date, &s.names, &phi);
    }
    Ok(t)
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    seed: u64,
    q: usize,
    config: &'a RunConfig,
    artifacts: &'a [String],
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    /// Written files in order, manifest last.
    pub files: Vec<PathBuf>,
}

/// Full pipeline. Everything is computed before the first file is written,
/// and each file is renamed into place, so a failed run writes nothing.
pub fn run(cfg: &RunConfig) -> CliResult<RunOutput> {
    let r = load_returns(cfg)?;
    let summaries = summarize(&r, cfg)?;
    let (q, bic) = resolve_q(&r, cfg)?;
    let var = var_report(&r, q, bic, cfg)?;
    let tv = fit_tv(&r, q, cfg)?;
    let joint = degree_path(&tv).map_err(CliError::core("efficiency"))?;
    let individual = individual_paths(&r, &tv, cfg)?;
    let mut targets = vec![DegreeTarget::Joint];
    targets.extend(individual_targets(r.k(), cfg));
    let bands = bootstrap(&r, q, &targets, cfg)?;
    let surface = surface(&tv, cfg)?;
    let cuts = static_table(&tv, &surface, cfg)?;

    let artifacts: Vec<(&str, Table, Option<serde_json::Value>)> = vec![
        ("table1", table1(&summaries), Some(serde_json::to_value(&summaries).expect("serializes"))),
        ("table2", table2(&var), Some(serde_json::to_value(&var).expect("serializes"))),
        ("joint_degree", degree_table(&joint, Some(&bands[0])), None),
        ("individual_degrees", individual_table(r.names(), &individual, Some(&bands[1..])), None),
        ("irf_surface", irf_table(&surface), None),
        ("irf_static", cuts, None),
    ];

    let mut names = Vec::new();
    let mut payloads = Vec::new();
    let trailer = format!("manifest: {MANIFEST}");
    for (stem, table, json) in &artifacts {
        if cfg.wants(Format::Csv) {
            names.push(format!("{stem}.csv"));
            payloads.push(table.to_csv(&trailer));
        }
        if cfg.wants(Format::Json) {
            names.push(format!("{stem}.json"));
            payloads.push(json_bytes(&json.clone().unwrap_or_else(|| table.to_json())));
        }
    }
    let manifest = Manifest {
        tool: "tvmeff",
        version: env!("CARGO_PKG_VERSION"),
        core_version: tvmeff_core::VERSION,
        seed: cfg.seed,
        q,
        config: cfg,
        artifacts: &names,
    };
    let manifest = json_bytes(&manifest);
    names.push(MANIFEST.to_string());
    payloads.push(manifest);

    let mut files = Vec::with_capacity(names.len());
    for (name, bytes) in names.iter().zip(&payloads) {
        let path = cfg.out.join(name);
        write_atomic(&path, bytes)?;
        files.push(path);
    }
    Ok(RunOutput { dir: cfg.out.clone(), files })
}
