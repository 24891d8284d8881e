//! das-sim: sum-rate experiments for distributed antenna systems.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use das_sim::commands::{cmd_cell_average, cmd_modes, cmd_rate_curve, cmd_validate};
use das_sim::output::{emit, render};
use das_sim::spec::{parse_positions, parse_snr_list, ExperimentSpec, OutputFormat, Scenario};
use das_sim::CliError;

#[derive(Parser)]
#[command(
    name = "das-sim",
    about = "Ergodic sum-rate analysis and transmission-mode selection experiments \
             for single-cell downlink distributed antenna systems",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-mode closed-form and Monte Carlo rate curves for fixed users.
    RateCurve(CommonArgs),
    /// Cell-averaged rate under one or more mode selectors.
    CellAverage(CellAverageArgs),
    /// List the exhaustive and minimum-distance candidate sets.
    Modes(CommonArgs),
    /// Run the numerical validation report.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Declarative experiment config (TOML); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed for every stochastic component.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR grid in dB, e.g. `0,10,20,30,40`.
    #[arg(long, value_parser = parse_snr_arg, allow_hyphen_values = true)]
    snr: Option<SnrArg>,
    /// Number of random user drops (cell averaging).
    #[arg(long)]
    drops: Option<u32>,
    /// Channel realizations per Monte Carlo estimate.
    #[arg(long)]
    realizations: Option<u32>,
    /// Number of DA ports.
    #[arg(long)]
    n_ports: Option<usize>,
    /// Number of users.
    #[arg(long)]
    k_users: Option<usize>,
    /// Cell radius in cell units.
    #[arg(long)]
    cell_radius: Option<f64>,
    /// Pathloss exponent.
    #[arg(long)]
    pathloss_exponent: Option<f64>,
    /// Fixed user positions as `x,y;x,y;...`.
    #[arg(long, value_parser = parse_positions_arg, allow_hyphen_values = true)]
    users: Option<PositionsArg>,
    /// Explicit port positions as `x,y;x,y;...` (canonical ring otherwise).
    #[arg(long, value_parser = parse_positions_arg, allow_hyphen_values = true)]
    ports: Option<PositionsArg>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shrink drops/realizations 20x (200 drops, 250 realizations).
    #[arg(long)]
    desk_scale: bool,
}

#[derive(Args)]
struct CellAverageArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Selector to evaluate (repeatable): `proposed`, `ideal-mc`,
    /// `ideal-closed`, `fixed=<u1,...,uN>`, `all-fixed`.
    #[arg(long = "selector")]
    selectors: Vec<String>,
    /// Redraw users closer than this to any port.
    #[arg(long)]
    exclusion_radius: Option<f64>,
    /// Use independent fading draws per candidate mode.
    #[arg(long)]
    independent_randoms: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated check names; empty string selects none.
    #[arg(long)]
    checks: Option<String>,
    /// Fault injection: evaluate the conditioning check without the tie
    /// spread so the fallback path engages.
    #[arg(long)]
    disable_tie_perturbation: bool,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

// Whole-list argument wrappers (a bare Vec would make clap expect one value
// per occurrence instead of one parsed list).
#[derive(Clone)]
struct SnrArg(Vec<f64>);

fn parse_snr_arg(text: &str) -> Result<SnrArg, String> {
    parse_snr_list(text).map(SnrArg)
}

#[derive(Clone)]
struct PositionsArg(Vec<[f64; 2]>);

fn parse_positions_arg(text: &str) -> Result<PositionsArg, String> {
    parse_positions(text).map(PositionsArg)
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

impl CommonArgs {
    /// Config-file values override defaults; explicit flags override both.
    fn build_spec(&self, scenario: Scenario) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_config_file(path)?,
            None => ExperimentSpec::default(),
        };
        if self.desk_scale {
            spec.run.drops = 200;
            spec.run.realizations = 250;
        }
        if let Some(seed) = self.seed {
            spec.run.seed = seed;
        }
        if let Some(snr) = &self.snr {
            spec.run.snr_grid_db = snr.0.clone();
        }
        if let Some(drops) = self.drops {
            spec.run.drops = drops;
        }
        if let Some(realizations) = self.realizations {
            spec.run.realizations = realizations;
        }
        if let Some(n) = self.n_ports {
            spec.geometry.n_ports = n;
        }
        if let Some(k) = self.k_users {
            spec.geometry.k_users = k;
        }
        if let Some(r) = self.cell_radius {
            spec.geometry.cell_radius = r;
        }
        if let Some(p) = self.pathloss_exponent {
            spec.geometry.pathloss_exponent = p;
        }
        if let Some(users) = &self.users {
            spec.geometry.users = Some(users.0.clone());
            spec.geometry.k_users = users.0.len();
        }
        if let Some(ports) = &self.ports {
            spec.geometry.ports = Some(ports.0.clone());
            spec.geometry.n_ports = ports.0.len();
        }
        if let Some(format) = self.format {
            spec.format = format.into();
        }
        if let Some(out) = &self.out {
            spec.out = Some(out.clone());
        }
        spec.finalize(scenario)
    }
}

fn run() -> Result<(), CliError> {
    match Cli::parse().command {
        Command::RateCurve(args) => {
            let spec = args.build_spec(Scenario::RateCurve)?;
            let rows = cmd_rate_curve(&spec)?;
            emit(&render(&rows, spec.format)?, spec.out.as_deref())
        }
        Command::CellAverage(args) => {
            let mut spec = args.common.build_spec(Scenario::CellAverage)?;
            if !args.selectors.is_empty() {
                spec.run.selectors = Some(args.selectors.clone());
            }
            if let Some(r) = args.exclusion_radius {
                spec.run.exclusion_radius = r;
            }
            if args.independent_randoms {
                spec.run.common_randoms = false;
            }
            let rows = cmd_cell_average(&spec)?;
            emit(&render(&rows, spec.format)?, spec.out.as_deref())
        }
        Command::Modes(args) => {
            let spec = args.build_spec(Scenario::Modes)?;
            let report = cmd_modes(&spec)?;
            let bytes = match spec.format {
                OutputFormat::Csv => render(&report.to_rows(), OutputFormat::Csv)?,
                OutputFormat::Json => {
                    let mut b = serde_json::to_vec_pretty(&report)
                        .map_err(|e| CliError::Numerical(e.to_string()))?;
                    b.push(b'\n');
                    b
                }
            };
            emit(&bytes, spec.out.as_deref())
        }
        Command::Validate(args) => {
            let mut spec = args.common.build_spec(Scenario::Validate)?;
            if let Some(checks) = &args.checks {
                spec.checks = Some(
                    checks
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::to_string)
                        .collect(),
                );
            }
            spec.disable_tie_perturbation = args.disable_tie_perturbation;
            let (outcomes, all_passed) = cmd_validate(&spec)?;
            for o in &outcomes {
                println!(
                    "{} {}: {} (measured {:.6e}, threshold {:.6e})",
                    if o.passed { "PASS" } else { "FAIL" },
                    o.name,
                    o.detail,
                    o.measured,
                    o.threshold
                );
            }
            if spec.out.is_some() {
                let rows: Vec<_> = outcomes.iter().map(|o| o.to_row()).collect();
                emit(&render(&rows, spec.format)?, spec.out.as_deref())?;
            }
            if all_passed {
                Ok(())
            } else {
                Err(CliError::ValidationFailed(
                    outcomes.iter().filter(|o| !o.passed).count() as u32,
                ))
            }
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("das-sim: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
