//! Command-line front end: `price`, `cumulant` and `validate` jobs driven by
//! a TOML configuration file.

pub mod config;
pub mod output;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use geoasian_core::laplace::{payoff_log_mgf, price_with};
use geoasian_core::mc::{mc_cumulant, mc_price_batch};
use geoasian_core::model::functional_characteristics;
use geoasian_core::riccati::{cumulant_average_price, DriftConvention};
use geoasian_core::{Error, C64};
use num_complex::Complex64;
use rayon::prelude::*;

pub use config::{JobConfig, OutputFormat, SimSection};
pub use output::{CumulantRecord, OutputRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRICING: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("pricing error: {0}")]
    Pricing(String),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Pricing(_) => EXIT_PRICING,
            CliError::Validation(_) => EXIT_VALIDATION,
        }
    }
}

fn pricing(e: Error) -> CliError {
    match e {
        Error::InvalidContour(m) => CliError::Config(format!("[contour] {m}")),
        Error::InvalidParameter { name, reason } => CliError::Config(format!("{name}: {reason}")),
        other => CliError::Pricing(other.to_string()),
    }
}

#[derive(Debug, Parser)]
#[command(name = "geoasian", version, about = "Geometric Asian option pricer for affine stochastic volatility models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format; overrides `output` in the config.
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    /// Worker threads for contour nodes and paths.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price the configured contract for each strike.
    Price { config: PathBuf },
    /// Dump the payoff cumulant on a grid of arguments.
    Cumulant {
        config: PathBuf,
        /// `lin:start:stop:n`, `vert:re:imStart:imStop:n`, or a comma list
        /// of complex numbers such as `1.5,2+3i`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Compare transform prices with the Monte Carlo oracle.
    Validate { config: PathBuf },
}

/// Parses a cumulant grid specification.
pub fn parse_grid(spec: &str) -> Result<Vec<C64>, CliError> {
    let bad = |why: &str| CliError::Config(format!("--grid {spec:?}: {why}"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(&format!("{s:?} is not a number")));
    let count = |s: &str| -> Result<usize, CliError> {
        let n = s.trim().parse::<usize>().map_err(|_| bad(&format!("{s:?} is not a count")))?;
        if n == 0 {
            return Err(bad("count must be >= 1"));
        }
        Ok(n)
    };
    let spaced = |a: f64, b: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![a];
        }
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts[0] {
        "lin" => {
            if parts.len() != 4 {
                return Err(bad("expected lin:start:stop:n"));
            }
            let (a, b, n) = (num(parts[1])?, num(parts[2])?, count(parts[3])?);
            Ok(spaced(a, b, n).into_iter().map(|x| C64::new(x, 0.0)).collect())
        }
        "vert" => {
            if parts.len() != 5 {
                return Err(bad("expected vert:re:imStart:imStop:n"));
            }
            let re = num(parts[1])?;
            let (a, b, n) = (num(parts[2])?, num(parts[3])?, count(parts[4])?);
            Ok(spaced(a, b, n).into_iter().map(|y| C64::new(re, y)).collect())
        }
        _ => spec
            .split(',')
            .map(|s| {
                s.trim()
                    .replace(' ', "")
                    .parse::<Complex64>()
                    .map_err(|_| bad(&format!("{s:?} is not a complex number")))
            })
            .collect(),
    }
}

pub fn cmd_price(cfg: &JobConfig) -> Result<Vec<OutputRecord>, CliError> {
    let fc = functional_characteristics(&cfg.model);
    let contracts = cfg.contracts();
    let results: Vec<_> = contracts
        .par_iter()
        .map(|c| price_with(c, &fc, &cfg.contour, &cfg.solver))
        .collect();
    contracts
        .iter()
        .zip(results)
        .map(|(c, r)| {
            let r = r.map_err(pricing)?;
            Ok(OutputRecord {
                model: cfg.model.name().to_string(),
                payoff: c.payoff.name().to_string(),
                strike: c.strike,
                maturity: c.maturity,
                price: r.price,
                error_estimate: r.error_estimate,
                abscissa: r.abscissa_used,
                mc_mean: None,
                mc_std_error: None,
                agree: None,
            })
        })
        .collect()
}

pub fn cmd_cumulant(cfg: &JobConfig, grid: &[C64]) -> Result<Vec<CumulantRecord>, CliError> {
    let results: Vec<_> = grid
        .par_iter()
        .map(|&u| payoff_log_mgf(&cfg.contract, &cfg.model, u, &cfg.solver))
        .collect();
    grid.iter()
        .zip(results)
        .map(|(u, r)| {
            let (kappa, blow_up) = match r {
                Ok(k) if k.is_finite() => (k, false),
                Ok(_) => (C64::new(f64::NAN, f64::NAN), true),
                Err(e) if e.is_moment_failure() => (C64::new(f64::NAN, f64::NAN), true),
                Err(e) => return Err(pricing(e)),
            };
            Ok(CumulantRecord {
                u_re: u.re,
                u_im: u.im,
                kappa_re: kappa.re,
                kappa_im: kappa.im,
                blow_up,
            })
        })
        .collect()
}

/// Monte Carlo check of the deterministic drift in `log E[Ŝ_T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftReport {
    /// `log E[exp(∫₀ᵀ X_s ds / T)]` by simulation.
    pub mc: f64,
    pub mc_std_error: f64,
    /// `log E[Ŝ_T]` minus the drift of each convention.
    pub half_maturity: f64,
    pub literal: f64,
}

impl DriftReport {
    pub fn z(&self, model_value: f64) -> f64 {
        (model_value - self.mc).abs() / self.mc_std_error
    }

    pub fn render(&self) -> String {
        format!(
            "drift convention check, log E[exp(mean of X)]: MC {:.8} ± {:.2e}\n  (r-q)T/2: {:.8}  |z| = {:.2}  {}\n  (r-q):    {:.8}  |z| = {:.2}  {}\n",
            self.mc,
            self.mc_std_error,
            self.half_maturity,
            self.z(self.half_maturity),
            if self.z(self.half_maturity) <= 4.0 { "consistent" } else { "rejected" },
            self.literal,
            self.z(self.literal),
            if self.z(self.literal) <= 4.0 { "consistent" } else { "rejected" },
        )
    }
}

pub fn drift_report(cfg: &JobConfig) -> Result<DriftReport, CliError> {
    let sim = cfg.sim.resolve(&cfg.model)?;
    let c = &cfg.contract;
    let fc = functional_characteristics(&cfg.model);
    let one = C64::new(1.0, 0.0);
    let kappa = cumulant_average_price(one, c, &fc, &cfg.solver).map_err(pricing)?.re;
    let mc = mc_cumulant(&cfg.model, 0.0, 1.0 / c.maturity, c, &sim).map_err(pricing)?;
    Ok(DriftReport {
        mc: mc.mean,
        mc_std_error: mc.std_error,
        half_maturity: kappa - DriftConvention::HalfMaturity.average_drift(c),
        literal: kappa - DriftConvention::Literal.average_drift(c),
    })
}

pub fn cmd_validate(cfg: &JobConfig) -> Result<(Vec<OutputRecord>, DriftReport), CliError> {
    let sim = cfg.sim.resolve(&cfg.model)?;
    let mut records = cmd_price(cfg)?;
    let mc = mc_price_batch(&cfg.model, &cfg.contracts(), &sim).map_err(pricing)?;
    for (r, e) in records.iter_mut().zip(mc) {
        r.mc_mean = Some(e.mean);
        r.mc_std_error = Some(e.std_error);
        r.agree = Some((r.price - e.mean).abs() <= 3.0 * e.std_error + r.error_estimate);
    }
    Ok((records, drift_report(cfg)?))
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Pricing(format!("cannot write output: {e}"))),
    }
}

fn execute(cli: &Cli, stdout: &mut Vec<u8>, stderr: &mut Vec<u8>) -> Result<(), CliError> {
    let path = match &cli.command {
        Command::Price { config } | Command::Cumulant { config, .. } | Command::Validate { config } => config,
    };
    let cfg = JobConfig::load(path)?;
    for w in cfg.model.warnings() {
        let _ = writeln!(stderr, "warning: {w}");
    }
    let format = cli.format.unwrap_or(cfg.output);
    let out_path = cli.out.clone().or_else(|| cfg.out_path.as_ref().map(PathBuf::from));
    match &cli.command {
        Command::Price { .. } => {
            let records = cmd_price(&cfg)?;
            emit(&output::render_prices(&records, format), out_path.as_deref(), stdout)
        }
        Command::Cumulant { grid, .. } => {
            let grid = parse_grid(grid)?;
            let records = cmd_cumulant(&cfg, &grid)?;
            emit(&output::render_cumulants(&records, format), out_path.as_deref(), stdout)
        }
        Command::Validate { .. } => {
            let (records, drift) = cmd_validate(&cfg)?;
            let mut text = output::render_prices(&records, format);
            if format == OutputFormat::Table {
                text.push('\n');
                text.push_str(&drift.render());
            } else {
                let _ = write!(stderr, "{}", drift.render());
            }
            emit(&text, out_path.as_deref(), stdout)?;
            let failed = records.iter().filter(|r| r.agree != Some(true)).count();
            if failed > 0 {
                return Err(CliError::Validation(format!(
                    "{failed} of {} strikes disagree with the Monte Carlo oracle",
                    records.len()
                )));
            }
            Ok(())
        }
    }
}

/// Runs a parsed command and returns the process exit code.
pub fn run(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut out = Vec::new();
    let mut diag = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            Ok(pool) => pool.install(|| execute(cli, &mut out, &mut diag)),
            Err(e) => Err(CliError::Config(format!("--threads {n}: {e}"))),
        },
        None => execute(cli, &mut out, &mut diag),
    };
    let _ = stdout.write_all(&out);
    let _ = stderr.write_all(&diag);
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, stdout, stderr),
        Err(e) => {
            let _ = write!(stderr, "{e}");
            if e.use_stderr() {
                EXIT_CONFIG
            } else {
                EXIT_OK
            }
        }
    }
}
