use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use copx_core::compare::{
    fit_window, meta_path, price_table, CopulaMethod, FitArtifact, Model, PricingConfig,
    RunMetadata,
};
use copx_core::data::{ingest_csv, write_series, DateRange, PriceSeries};
use copx_core::gibbs::{run_chain, DEFAULT_BURN_IN, DEFAULT_KEPT};
use copx_core::marginals::{AnnualizedParams, DEFAULT_PERIODS_PER_YEAR};
use copx_core::pricing::QuadratureSettings;
use copx_core::simulate::simulate_series;
use copx_core::{ChainConfig, CopulaSpec, DriftMode, Error};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "copx",
    version,
    about = "Copula models for exchange-option pricing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit marginals and copulas on an in-sample window
    Fit(FitArgs),
    /// Price out-of-sample dates against a saved fit
    Price(PriceArgs),
    /// Fit and price in one pass
    Compare(CompareArgs),
    /// Write a Gibbs chain as CSV (k,u1,u2)
    ChainDump(ChainDumpArgs),
    /// Generate a synthetic price series from a copula and normal marginals
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct FitOptions {
    #[arg(long)]
    input: PathBuf,
    /// START:END, inclusive ISO dates
    #[arg(long)]
    in_sample: DateRange,
    /// Comma-separated subset of gumbel,clayton,frank,gaussian,gbm
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gumbel,clayton,frank,gaussian,gbm"
    )]
    families: Vec<Model>,
    #[arg(long, default_value_t = DEFAULT_PERIODS_PER_YEAR)]
    periods_per_year: u32,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    fit: FitOptions,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ChainOptions {
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Chain pairs kept after burn-in
    #[arg(long, default_value_t = DEFAULT_KEPT)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl ChainOptions {
    fn config(&self) -> ChainConfig {
        ChainConfig::new(self.burn_in, self.samples, self.seed).with_thin(self.thin)
    }
}

#[derive(Args)]
struct PricingOptions {
    #[arg(long)]
    out_of_sample: DateRange,
    /// Years to expiry from each evaluation date
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    /// Risk-free rate per year
    #[arg(long)]
    r: f64,
    /// martingale or paper
    #[arg(long, default_value = "martingale")]
    drift: DriftMode,
    /// mcmc or quadrature, for the copula columns
    #[arg(long, default_value = "mcmc")]
    method: CopulaMethod,
    #[command(flatten)]
    chain: ChainOptions,
    #[arg(long)]
    out: PathBuf,
}

impl PricingOptions {
    fn config(&self) -> PricingConfig {
        PricingConfig {
            out_of_sample: self.out_of_sample,
            tau: self.tau,
            r: self.r,
            drift_mode: self.drift,
            method: self.method,
            chain: self.chain.config(),
            quadrature: QuadratureSettings::default(),
        }
    }
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    fit: PathBuf,
    #[arg(long)]
    input: PathBuf,
    /// Columns to price; defaults to those requested at fit time
    #[arg(long, value_delimiter = ',')]
    families: Vec<Model>,
    #[command(flatten)]
    pricing: PricingOptions,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    fit: FitOptions,
    #[command(flatten)]
    pricing: PricingOptions,
    /// Also save the fit artifact here
    #[arg(long)]
    fit_out: Option<PathBuf>,
}

#[derive(Args)]
struct ChainDumpArgs {
    /// e.g. gumbel:4.0962, gaussian:0.5439, frechet:0.772,0,0.228
    #[arg(long)]
    copula: CopulaSpec,
    #[command(flatten)]
    chain: ChainOptions,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    copula: CopulaSpec,
    /// Annualized drift of asset 1
    #[arg(long, default_value_t = 0.0)]
    mu1: f64,
    #[arg(long)]
    sigma1: f64,
    #[arg(long, default_value_t = 0.0)]
    mu2: f64,
    #[arg(long)]
    sigma2: f64,
    /// Number of daily returns (the series has one more row)
    #[arg(long)]
    days: usize,
    #[arg(long)]
    start: NaiveDate,
    #[arg(long, default_value_t = 100.0)]
    s1: f64,
    #[arg(long, default_value_t = 100.0)]
    s2: f64,
    #[arg(long, default_value_t = DEFAULT_PERIODS_PER_YEAR)]
    periods_per_year: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Defaults to stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_series(path: &Path) -> Result<PriceSeries> {
    let series = ingest_csv(path)?;
    if series.unsorted_rows > 0 {
        eprintln!(
            "warning: {}: {} row(s) out of date order; sorted before use",
            path.display(),
            series.unsorted_rows
        );
    }
    Ok(series)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn fit(opts: &FitOptions, series: &PriceSeries) -> Result<FitArtifact> {
    Ok(fit_window(
        series,
        opts.in_sample,
        &opts.families,
        opts.periods_per_year,
    )?)
}

fn price(
    series: &PriceSeries,
    artifact: &FitArtifact,
    models: &[Model],
    opts: &PricingOptions,
) -> Result<()> {
    if artifact.in_sample.end >= opts.out_of_sample.start {
        bail!(Error::InvalidConfig(format!(
            "out-of-sample window {} must start after the in-sample window {}",
            opts.out_of_sample, artifact.in_sample
        )));
    }
    let config = opts.config();
    let table = price_table(series, artifact, models, &config)?;
    let mut w = create(&opts.out)?;
    table.write_csv(&mut w)?;
    w.flush()?;
    let meta = RunMetadata::new(&config, artifact, &table, series);
    write_json(&meta_path(&opts.out), &meta)?;
    if table.failures() > 0 {
        eprintln!(
            "warning: {} cell(s) could not be priced; see `error` markers in {}",
            table.failures(),
            opts.out.display()
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let series = load_series(&args.fit.input)?;
            let artifact = fit(&args.fit, &series)?;
            write_json(&args.out, &artifact)
        }
        Command::Price(args) => {
            let text = std::fs::read_to_string(&args.fit)
                .with_context(|| format!("cannot read {}", args.fit.display()))?;
            let artifact: FitArtifact = serde_json::from_str(&text)
                .map_err(|e| Error::Io(format!("{}: {e}", args.fit.display())))?;
            let series = load_series(&args.input)?;
            let models = if args.families.is_empty() {
                artifact.models.clone()
            } else {
                args.families.clone()
            };
            price(&series, &artifact, &models, &args.pricing)
        }
        Command::Compare(args) => {
            let series = load_series(&args.fit.input)?;
            let artifact = fit(&args.fit, &series)?;
            if let Some(path) = &args.fit_out {
                write_json(path, &artifact)?;
            }
            price(&series, &artifact, &args.fit.families, &args.pricing)
        }
        Command::ChainDump(args) => {
            let config = args.chain.config().with_stream(args.stream);
            let chain = run_chain(&args.copula, &config)?;
            if chain.degenerate {
                eprintln!(
                    "warning: {} chain never leaves its starting line",
                    args.copula.family()
                );
            }
            let mut w = output(args.out.as_deref())?;
            writeln!(w, "k,u1,u2")?;
            for (k, p) in chain.pairs.iter().enumerate() {
                writeln!(w, "{k},{:.17e},{:.17e}", p.u, p.v)?;
            }
            w.flush()?;
            Ok(())
        }
        Command::Simulate(args) => {
            let params = |mu, sigma| AnnualizedParams {
                mu,
                sigma,
                periods_per_year: args.periods_per_year,
            };
            let series = simulate_series(
                &args.copula,
                &params(args.mu1, args.sigma1),
                &params(args.mu2, args.sigma2),
                args.days,
                args.start,
                (args.s1, args.s2),
                args.seed,
            )?;
            write_series(&series, output(args.out.as_deref())?)?;
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_numerical() => EXIT_NUMERICAL,
        Some(Error::InvalidConfig(_)) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
