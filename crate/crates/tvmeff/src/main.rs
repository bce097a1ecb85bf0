use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvmeff::config::{Choice, Detrend, Format, IndividualSource, PartialConfig, RunConfig, THREADS_ENV};
use tvmeff::error::{CliError, CliResult};
use tvmeff::io::{price_table, prices_from_returns};
use tvmeff::output::{json_bytes, Sink, Table};
use tvmeff::pipeline;
use tvmeff_core::bootstrap::DegreeTarget;
use tvmeff_core::efficiency::degree_path;
use tvmeff_core::synth::{gen_panel, DgpSpec};
use tvmeff_core::timeseries::describe;
use tvmeff_core::YearMonth;

/// Time-varying VAR estimates of market efficiency from monthly price series.
#[derive(Debug, Parser)]
#[command(name = "tvmeff", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Descriptive statistics of log returns.
    Describe {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// ADF-GLS unit-root test per series.
    Unitroot {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        test: UnitRootArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Constant VAR with Newey-West errors and Hansen's L_c.
    Var {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Newey-West bandwidth: `auto` or a lag count.
        #[arg(long)]
        bandwidth: Option<Choice>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Time-varying coefficient path in long format.
    Tvvar {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Joint (or individual) degree-of-efficiency path.
    Efficiency {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        degrees: DegreeArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Time-varying impulse responses, or static cuts with `--at`.
    Irf {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        irf: IrfArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Bootstrap bands for the degree path under the efficient-market null.
    Bootstrap {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        degrees: DegreeArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Simulate a price panel and its true coefficient path from a JSON spec.
    Synth {
        #[arg(long)]
        spec: PathBuf,
        /// Price panel and truth files.
        #[arg(long, num_args = 2, value_names = ["PANEL", "TRUTH"], required = true)]
        out: Vec<PathBuf>,
    },
    /// Full pipeline: tables, degree paths with bands, impulse responses and a
    /// manifest.
    Run {
        #[command(flatten)]
        input: InputArgs,
        /// Rerun from a previous run's manifest (flags still override it).
        #[arg(long, conflicts_with = "config")]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        test: UnitRootArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        bandwidth: Option<Choice>,
        #[command(flatten)]
        boot: BootArgs,
        #[command(flatten)]
        irf: IrfArgs,
        /// Source of individual degrees.
        #[arg(long, value_enum)]
        source: Option<IndividualSource>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, value_delimiter = ',')]
        formats: Option<Vec<Format>>,
    },
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Price CSV with a `date` column (YYYY-MM) and one column per series.
    input: Option<PathBuf>,
    /// Flat TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    date_column: Option<String>,
    /// Value columns to load, `name` or `name=label`, comma separated.
    #[arg(long, value_delimiter = ',')]
    columns: Option<Vec<String>>,
    /// Fill missing months with the previous row instead of failing.
    #[arg(long)]
    forward_fill: bool,
}

#[derive(Debug, Args)]
struct UnitRootArgs {
    /// Deterministic terms removed before testing.
    #[arg(long = "spec", value_enum)]
    detrend: Option<Detrend>,
    /// Largest ADF lag considered: `auto` or a number.
    #[arg(long)]
    pmax: Option<Choice>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// VAR lag order: `auto` (BIC) or a number.
    #[arg(long)]
    q: Option<Choice>,
    #[arg(long)]
    qmax: Option<usize>,
    /// Weight on coefficient-path smoothness.
    #[arg(long)]
    smoothness: Option<f64>,
}

#[derive(Debug, Args)]
struct BootArgs {
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads: `auto` or a number.
    #[arg(long)]
    workers: Option<Choice>,
}

#[derive(Debug, Args)]
struct IrfArgs {
    #[arg(long)]
    horizon: Option<usize>,
    /// Dates of static cuts, YYYY-MM, comma separated.
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<YearMonth>>,
    /// Cholesky-orthogonalised shocks instead of unit reduced-form shocks.
    #[arg(long)]
    orthogonalized: bool,
}

#[derive(Debug, Args)]
struct DegreeArgs {
    /// Per-series degrees instead of the joint degree.
    #[arg(long)]
    individual: bool,
    #[arg(long, value_enum)]
    source: Option<IndividualSource>,
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Output file (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn flag(b: bool) -> Option<bool> {
    b.then_some(true)
}

impl InputArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            input: self.input.clone(),
            date_column: self.date_column.clone(),
            columns: self.columns.clone(),
            forward_fill: flag(self.forward_fill),
            ..Default::default()
        }
    }
}

impl UnitRootArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig { detrend: self.detrend, pmax: self.pmax, ..Default::default() }
    }
}

impl ModelArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig { q: self.q, qmax: self.qmax, smoothness: self.smoothness, ..Default::default() }
    }
}

impl BootArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            replications: self.reps,
            level: self.level,
            seed: self.seed,
            workers: self.workers,
            ..Default::default()
        }
    }
}

impl IrfArgs {
    fn partial(&self) -> PartialConfig {
        PartialConfig {
            horizon: self.horizon,
            at: self.at.clone(),
            orthogonalized: flag(self.orthogonalized),
            ..Default::default()
        }
    }
}

/// Flag layer over `TVMEFF_THREADS` over the file layer over defaults.
fn resolve(cli: PartialConfig, file: Option<&Path>, manifest: Option<&Path>) -> CliResult<RunConfig> {
    let env = PartialConfig::from_env_value(std::env::var(THREADS_ENV).ok().as_deref())?;
    let file = match (file, manifest) {
        (Some(p), _) => PartialConfig::from_toml_file(p)?,
        (None, Some(m)) => PartialConfig::from_manifest(m)?,
        (None, None) => PartialConfig::default(),
    };
    RunConfig::resolve([cli, env, file])
}

fn emit(cmd: &str, cfg: &RunConfig, out: &OutArgs, table: &Table, json: Option<serde_json::Value>) -> CliResult<()> {
    let bytes = match out.format {
        Format::Csv => {
            let trailer = format!("tvmeff {} {cmd} config={}", env!("CARGO_PKG_VERSION"), cfg.to_json_line());
            table.to_csv(&trailer)
        }
        Format::Json => json_bytes(&json.unwrap_or_else(|| table.to_json())),
    };
    Sink::from_option(out.out.as_deref()).emit(&bytes)
}

fn degree_output(
    r: &tvmeff_core::ReturnPanel,
    q: usize,
    cfg: &RunConfig,
    individual: bool,
    with_bands: bool,
) -> CliResult<Table> {
    let tv = pipeline::fit_tv(r, q, cfg)?;
    if individual {
        let paths = pipeline::individual_paths(r, &tv, cfg)?;
        let bands = if with_bands {
            Some(pipeline::bootstrap(r, q, &pipeline::individual_targets(r.k(), cfg), cfg)?)
        } else {
            None
        };
        Ok(pipeline::individual_table(r.names(), &paths, bands.as_deref()))
    } else {
        let path = degree_path(&tv).map_err(CliError::core("efficiency"))?;
        let bands = if with_bands { Some(pipeline::bootstrap(r, q, &[DegreeTarget::Joint], cfg)?) } else { None };
        Ok(pipeline::degree_table(&path, bands.as_ref().map(|b| &b[0])))
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Describe { input, out } => {
            let cfg = resolve(input.partial(), input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let stats = describe(&r).map_err(CliError::core("describe"))?;
            let json = serde_json::to_value(&stats).expect("serializes");
            emit("describe", &cfg, &out, &pipeline::describe_table(&stats), Some(json))
        }
        Command::Unitroot { input, test, out } => {
            let cfg = resolve(test.partial().over(input.partial()), input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let s = pipeline::summarize(&r, &cfg)?;
            emit("unitroot", &cfg, &out, &pipeline::unitroot_table(&s), None)
        }
        Command::Var { input, model, bandwidth, out } => {
            let cli = PartialConfig { bandwidth, ..Default::default() }.over(model.partial()).over(input.partial());
            let cfg = resolve(cli, input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let (q, bic) = pipeline::resolve_q(&r, &cfg)?;
            eprintln!("selected q = {q}");
            let rep = pipeline::var_report(&r, q, bic, &cfg)?;
            let json = serde_json::to_value(&rep).expect("serializes");
            emit("var", &cfg, &out, &pipeline::table2(&rep), Some(json))
        }
        Command::Tvvar { input, model, out } => {
            let cfg = resolve(model.partial().over(input.partial()), input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let (q, _) = pipeline::resolve_q(&r, &cfg)?;
            let tv = pipeline::fit_tv(&r, q, &cfg)?;
            emit("tvvar", &cfg, &out, &pipeline::coefficient_table(&tv), None)
        }
        Command::Efficiency { input, model, degrees, out } => {
            let cli = PartialConfig { individual: degrees.source, ..Default::default() }
                .over(model.partial())
                .over(input.partial());
            let cfg = resolve(cli, input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let (q, _) = pipeline::resolve_q(&r, &cfg)?;
            let table = degree_output(&r, q, &cfg, degrees.individual, false)?;
            emit("efficiency", &cfg, &out, &table, None)
        }
        Command::Irf { input, model, irf, out } => {
            let cfg =
                resolve(irf.partial().over(model.partial()).over(input.partial()), input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let (q, _) = pipeline::resolve_q(&r, &cfg)?;
            let tv = pipeline::fit_tv(&r, q, &cfg)?;
            let s = pipeline::surface(&tv, &cfg)?;
            let table =
                if cfg.at.is_empty() { pipeline::irf_table(&s) } else { pipeline::static_table(&tv, &s, &cfg)? };
            emit("irf", &cfg, &out, &table, None)
        }
        Command::Bootstrap { input, model, boot, degrees, out } => {
            let cli = PartialConfig { individual: degrees.source, ..Default::default() }
                .over(boot.partial())
                .over(model.partial())
                .over(input.partial());
            let cfg = resolve(cli, input.config.as_deref(), None)?;
            let r = pipeline::load_returns(&cfg)?;
            let (q, _) = pipeline::resolve_q(&r, &cfg)?;
            let table = degree_output(&r, q, &cfg, degrees.individual, true)?;
            emit("bootstrap", &cfg, &out, &table, None)
        }
        Command::Synth { spec, out } => synth(&spec, &out[0], &out[1]),
        Command::Run { input, manifest, test, model, bandwidth, boot, irf, source, out, formats } => {
            let cli = PartialConfig { bandwidth, individual: source, out, formats, ..Default::default() }
                .over(test.partial())
                .over(model.partial())
                .over(boot.partial())
                .over(irf.partial())
                .over(input.partial());
            let cfg = resolve(cli, input.config.as_deref(), manifest.as_deref())?;
            let done = pipeline::run(&cfg)?;
            for f in &done.files {
                eprintln!("wrote {}", f.display());
            }
            Ok(())
        }
    }
}

fn synth(spec_path: &Path, panel_path: &Path, truth_path: &Path) -> CliResult<()> {
    let text = std::fs::read_to_string(spec_path).map_err(CliError::io(spec_path))?;
    let spec: DgpSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", spec_path.display())))?;
    let (returns, truth) = gen_panel(&spec).map_err(CliError::core("synth"))?;
    let trailer = format!(
        "tvmeff {} synth spec={}",
        env!("CARGO_PKG_VERSION"),
        serde_json::to_string(&spec).expect("serializes")
    );

    let panel = price_table(&prices_from_returns(&returns));

    let mut coeffs = Table::new(&["date", "lag", "row", "col", "value"]);
    let names = returns.names();
    for (date, lags) in truth.dates.iter().zip(&truth.a) {
        for (l, a) in lags.iter().enumerate() {
            for (i, ni) in names.iter().enumerate() {
                for (j, nj) in names.iter().enumerate() {
                    coeffs.push(vec![
                        date.to_string().into(),
                        (l + 1).into(),
                        ni.as_str().into(),
                        nj.as_str().into(),
                        a[(i, j)].into(),
                    ]);
                }
            }
        }
    }
    Sink::File(panel_path.to_path_buf()).emit(&panel.to_csv(&trailer))?;
    Sink::File(truth_path.to_path_buf()).emit(&coeffs.to_csv(&trailer))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            let err = CliError::Config(e.kind().to_string());
            eprintln!("{}", err.report());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("{}", e.report());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
