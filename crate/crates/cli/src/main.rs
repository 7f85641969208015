//! `qminority`: command-line front end for the four-player quantum Minority game.
//!
//! Every command prints a comma-separated table preceded by `#` lines that
//! record the version, the command line and the effective configuration.
//! Exit codes: 0 success, 2 usage error, 1 runtime or domain error.

mod commands;
mod table;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qminority_core::analysis::PayoffModel;
use qminority_core::game::{MeasurementBasis, NamedStrategy};
use qminority_core::strategies::{JonesConvention, StrategyParams};

#[derive(Parser, Debug)]
#[command(
    name = "qminority",
    version,
    about = "Quantum Minority game: payoffs, equilibria and data analysis"
)]
struct Cli {
    /// Decimal places in numeric output.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u8).range(1..=17))]
    digits: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Expected payoff of every player for a symmetric profile.
    Payoff(PayoffArgs),
    /// Average payoff along α, simulated and from the closed forms.
    ScanAlpha(ScanArgs),
    /// Certified symmetric Nash equilibria.
    FindNe(NeArgs),
    /// Best symmetric profile.
    FindPo(PoArgs),
    /// Best unilateral deviation from a symmetric point.
    Deviation(DeviationArgs),
    /// Fit the noise fidelity f to measured average payoffs.
    Fit(FitArgs),
    /// Draw synthetic coincidence counts.
    SimulateCounts(SimulateArgs),
    /// Payoff estimate from a counts file.
    Estimate(EstimateArgs),
    /// GHZ fidelity of the noisy state, direct and from stabilizer settings.
    Fidelity(FidelityArgs),
    /// Waveplate angles for strategy matrices.
    Waveplates(WaveplateArgs),
}

#[derive(Args, Debug, Clone, Copy)]
struct StateArgs {
    /// Entanglement parameter α in [0, 1]; accepts `sqrt(p/q)`.
    #[arg(long, value_parser = unit_interval)]
    alpha: f64,
    /// White-noise fidelity f in [0, 1].
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    f: f64,
}

#[derive(Args, Debug, Clone, Copy)]
struct StrategyArgs {
    /// Named strategy, I or II. Ignored when --theta is given.
    #[arg(long, default_value = "I", value_parser = named_strategy)]
    strategy: NamedStrategy,
    /// Explicit θ in [0, π]; requires --beta1 and --beta2.
    #[arg(long, value_parser = angle_0_pi, requires_all = ["beta1", "beta2"])]
    theta: Option<f64>,
    /// Explicit β₁ in [−π, π].
    #[arg(long, value_parser = angle_pm_pi, requires = "theta", allow_hyphen_values = true)]
    beta1: Option<f64>,
    /// Explicit β₂ in [−π, π].
    #[arg(long, value_parser = angle_pm_pi, requires = "theta", allow_hyphen_values = true)]
    beta2: Option<f64>,
}

impl StrategyArgs {
    fn resolve(&self) -> (String, StrategyParams) {
        match (self.theta, self.beta1, self.beta2) {
            (Some(theta), Some(beta1), Some(beta2)) => (
                "custom".into(),
                StrategyParams {
                    theta,
                    beta1,
                    beta2,
                },
            ),
            _ => (self.strategy.to_string(), self.strategy.params()),
        }
    }
}

#[derive(Args, Debug)]
struct PayoffArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Readout basis: Z, X or Y.
    #[arg(long, default_value = "Z", value_parser = basis)]
    basis: MeasurementBasis,
}

#[derive(Args, Debug)]
struct ScanArgs {
    /// White-noise fidelity f in [0, 1].
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    f: f64,
    /// Named strategy, I or II.
    #[arg(long, default_value = "II", value_parser = named_strategy)]
    strategy: NamedStrategy,
    /// Readout basis: Z, X or Y.
    #[arg(long, default_value = "Z", value_parser = basis)]
    basis: MeasurementBasis,
    /// Evenly spaced α values from 0 to 1 (at least 2).
    #[arg(long, default_value_t = 101, value_parser = clap::value_parser!(u32).range(2..))]
    npoints: u32,
    /// Explicit comma-separated α values; overrides --npoints.
    #[arg(long, value_delimiter = ',', value_parser = unit_interval)]
    alphas: Option<Vec<f64>>,
}

#[derive(Args, Debug, Clone, Copy)]
struct SearchArgs {
    /// Grid points per axis.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u32).range(3..=512))]
    grid: u32,
    /// Local polish tolerance.
    #[arg(long, default_value = "1e-9", value_parser = positive)]
    refine_tol: f64,
    /// Largest deviation gain accepted as an equilibrium.
    #[arg(long, default_value = "1e-6", value_parser = positive)]
    certify_tol: f64,
}

#[derive(Args, Debug)]
struct NeArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Also list stationary points that fail certification.
    #[arg(long)]
    all: bool,
}

#[derive(Args, Debug)]
struct PoArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct DeviationArgs {
    #[command(flatten)]
    state: StateArgs,
    /// θ of the common strategy M(θ, β, −β), in [0, π].
    #[arg(long, value_parser = angle_0_pi, default_value_t = PI / 2.0)]
    theta: f64,
    /// β of the common strategy, in [−π, π].
    #[arg(long, value_parser = angle_pm_pi, default_value_t = PI / 8.0, allow_hyphen_values = true)]
    beta: f64,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// File with `alpha,strategy,basis,payoff,error` rows.
    points: PathBuf,
    /// Payoff model: brute-force or printed.
    #[arg(long, default_value = "brute-force", value_parser = payoff_model)]
    model: PayoffModel,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    state: StateArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    /// Readout basis: Z, X or Y.
    #[arg(long, default_value = "Z", value_parser = basis)]
    basis: MeasurementBasis,
    /// Number of fourfold coincidences.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
    events: u64,
    /// Generator seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Detector efficiency as `<aH..dV>=<value>`; repeatable, default 1.
    #[arg(long = "efficiency", value_parser = efficiency)]
    efficiencies: Vec<(usize, f64)>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// Counts file with an `outcome,count` header.
    counts: PathBuf,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    /// Comma-separated f values.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 0.71, 1.0], value_parser = unit_interval)]
    f: Vec<f64>,
    /// Entanglement parameter of the prepared state.
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    alpha: f64,
}

#[derive(Args, Debug)]
struct WaveplateArgs {
    /// Solve for this θ instead of listing strategies I and II.
    #[arg(long, value_parser = angle_0_pi, requires_all = ["beta1", "beta2"])]
    theta: Option<f64>,
    #[arg(long, value_parser = angle_pm_pi, requires = "theta", allow_hyphen_values = true)]
    beta1: Option<f64>,
    #[arg(long, value_parser = angle_pm_pi, requires = "theta", allow_hyphen_values = true)]
    beta2: Option<f64>,
    /// Jones convention for solving: standard or reversed.
    #[arg(long, default_value = "standard", value_parser = convention)]
    convention: JonesConvention,
}

/// A number, or `sqrt(x)` / `sqrt(p/q)`.
fn number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = if let Some(inner) = s.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
        let ratio = match inner.split_once('/') {
            Some((p, q)) => plain(p)? / plain(q)?,
            None => plain(inner)?,
        };
        if ratio < 0.0 {
            return Err(format!("cannot take the square root of {ratio}"));
        }
        ratio.sqrt()
    } else {
        plain(s)?
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn plain(s: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("`{s}` is not a number"))
}

fn in_range(s: &str, lo: f64, hi: f64) -> Result<f64, String> {
    let v = number(s)?;
    if (lo..=hi).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [{lo}, {hi}]"))
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    in_range(s, 0.0, 1.0)
}

fn angle_0_pi(s: &str) -> Result<f64, String> {
    in_range(s, 0.0, PI)
}

fn angle_pm_pi(s: &str) -> Result<f64, String> {
    in_range(s, -PI, PI)
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn named_strategy(s: &str) -> Result<NamedStrategy, String> {
    s.parse().map_err(|e: qminority_core::Error| e.to_string())
}

fn basis(s: &str) -> Result<MeasurementBasis, String> {
    s.parse().map_err(|e: qminority_core::Error| e.to_string())
}

fn payoff_model(s: &str) -> Result<PayoffModel, String> {
    s.parse().map_err(|e: qminority_core::Error| e.to_string())
}

fn convention(s: &str) -> Result<JonesConvention, String> {
    match s.to_ascii_lowercase().as_str() {
        "standard" => Ok(JonesConvention::Standard),
        "reversed" => Ok(JonesConvention::Reversed),
        _ => Err(format!("unknown convention `{s}` (standard or reversed)")),
    }
}

fn efficiency(s: &str) -> Result<(usize, f64), String> {
    let (label, value) = s.split_once('=').ok_or("expected <detector>=<value>")?;
    let index = (0..qminority_core::analysis::DETECTORS)
        .find(|&i| qminority_core::analysis::detector_label(i).eq_ignore_ascii_case(label))
        .ok_or_else(|| format!("unknown detector `{label}`"))?;
    let value = positive(value)?;
    Ok((index, value))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
