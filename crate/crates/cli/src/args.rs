//! Command-line interface definition and argument parsers.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use teleport_hv_core::hv::HvModel;
use teleport_hv_core::teleport::BellLabel;

/// Seed used when neither `--seed` nor `TELEPORT_HV_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

/// Minimum Monte Carlo sample count accepted on the command line.
pub const MIN_SAMPLES: usize = 1000;

pub const ABOUT: &str = "Exact spin-1/2 teleportation checks and hidden-variable \
consistency reports";

#[derive(Parser, Debug)]
#[command(name = "teleport-hv", version, about = ABOUT)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Teleportation protocol checks
    #[command(subcommand)]
    Teleport(TeleportCmd),
    /// Hidden-variable model expectation sweeps
    #[command(subcommand)]
    Hv(HvCmd),
    /// Conditional-vs-final density consistency reports
    #[command(subcommand)]
    Nogo(NogoCmd),
    /// Compare responses built from two different states at a fixed setting
    StateDep(StateDepArgs),
}

#[derive(Subcommand, Debug)]
pub enum TeleportCmd {
    /// Run the protocol over label pairs and random input axes and check
    /// outcome probabilities, corrections and route equivalence
    Verify(TeleportVerifyArgs),
}

#[derive(Subcommand, Debug)]
pub enum HvCmd {
    /// Sweep the angle between state axis and setting, comparing the
    /// model average against the quantum value cos(theta)
    Expect(HvExpectArgs),
}

#[derive(Subcommand, Debug)]
pub enum NogoCmd {
    /// One spin-1/2 particle: project on a setting, compare conditional
    /// and final densities
    OneSpin(OneSpinArgs),
    /// Three-particle teleportation candidate model
    Tp(TpArgs),
}

/// 'theta,phi' pair in radians.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Angles {
    pub theta: f64,
    pub phi: f64,
}

impl Angles {
    pub fn direction(&self) -> teleport_hv_core::spinor::Direction {
        teleport_hv_core::spinor::Direction::from_polar(self.theta, self.phi)
    }
}

pub fn parse_angles(s: &str) -> Result<Angles, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'theta,phi', got '{s}'"));
    }
    let theta: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad angle '{}'", parts[0]))?;
    let phi: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad angle '{}'", parts[1]))?;
    if !theta.is_finite() || !phi.is_finite() {
        return Err("angles must be finite".into());
    }
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(format!("theta must lie in [0, pi], got {theta}"));
    }
    Ok(Angles { theta, phi })
}

pub fn parse_label(s: &str) -> Result<BellLabel, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected 'beta,betabar' with values +-1, got '{s}'"));
    }
    let beta: i32 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad label component '{}'", parts[0]))?;
    let beta_bar: i32 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad label component '{}'", parts[1]))?;
    BellLabel::new(beta, beta_bar).map_err(|e| e.to_string())
}

/// Sweep given as 'theta0:theta1:steps'.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Sweep {
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl Sweep {
    pub fn thetas(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + h * k as f64).collect()
    }
}

pub fn parse_sweep(s: &str) -> Result<Sweep, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected 'theta0:theta1:steps', got '{s}'"));
    }
    let start: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| format!("bad angle '{}'", parts[0]))?;
    let stop: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| format!("bad angle '{}'", parts[1]))?;
    let steps: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| format!("bad step count '{}'", parts[2]))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err("sweep bounds must be finite".into());
    }
    if steps == 0 {
        return Err("sweep needs at least one step".into());
    }
    Ok(Sweep { start, stop, steps })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Model1,
    Model2,
}

impl ModelArg {
    pub fn model(&self) -> HvModel {
        match self {
            ModelArg::Model1 => HvModel::Model1,
            ModelArg::Model2 => HvModel::Model2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    MonteCarlo,
    ProductRule,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug)]
pub struct TeleportVerifyArgs {
    /// Input axis 'theta,phi' in radians; omit to sweep seeded random axes
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true)]
    pub n: Option<Angles>,

    /// Initial Bell label 'beta,betabar'; omit to run all four
    #[arg(long, value_parser = parse_label, allow_hyphen_values = true)]
    pub label0: Option<BellLabel>,

    /// Tolerance on probabilities, corrections and route deviations
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,

    /// Random axes per label pair when --n is omitted
    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Write the JSON report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HvExpectArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,

    /// Angle sweep 'theta0:theta1:steps' between state axis and setting
    #[arg(long, value_parser = parse_sweep, default_value = "0:3.141592653589793:13")]
    pub sweep: Sweep,

    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,

    /// Gauss-Legendre nodes per panel (product-rule scheme only)
    #[arg(long, default_value_t = 48)]
    pub order: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_enum, default_value_t = SchemeArg::MonteCarlo)]
    pub scheme: SchemeArg,

    /// Deterministic worker split of the sample stream
    #[arg(long, default_value_t = 1)]
    pub partitions: u32,

    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OneSpinArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,

    /// State axis 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "0,0")]
    pub n: Angles,

    /// Projector setting 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "1.5707963267948966,0")]
    pub a: Angles,

    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 1)]
    pub partitions: u32,

    /// Exit with code 3 unless the verdict is 'consistent'
    #[arg(long, conflicts_with = "expect_contradiction")]
    pub expect_consistent: bool,

    /// Exit with code 3 unless the verdict is 'contradiction'
    #[arg(long)]
    pub expect_contradiction: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TpArgs {
    /// Candidate model file; omit to use the built-in uniform-product
    /// candidate
    #[arg(long)]
    pub candidate: Option<PathBuf>,

    /// Initial Bell label 'beta,betabar'
    #[arg(long, value_parser = parse_label, allow_hyphen_values = true, default_value = "-1,-1")]
    pub label0: BellLabel,

    /// Experimental: measured label differing from label0. Reports the
    /// projection weight and particle-3 expectation only; no verdict.
    #[arg(long, value_parser = parse_label, allow_hyphen_values = true)]
    pub label: Option<BellLabel>,

    /// Input axis 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "0,0")]
    pub n: Angles,

    /// Particle-3 measurement setting 'theta,phi' (experimental label runs)
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "0,0")]
    pub c: Angles,

    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, default_value_t = 1)]
    pub partitions: u32,

    #[arg(long, conflicts_with = "expect_contradiction")]
    pub expect_consistent: bool,

    #[arg(long)]
    pub expect_contradiction: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StateDepArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,

    /// Instrument setting 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "1.5707963267948966,0")]
    pub a: Angles,

    /// First state axis 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "0,0")]
    pub n1: Angles,

    /// Second state axis 'theta,phi'
    #[arg(long, value_parser = parse_angles, allow_hyphen_values = true, default_value = "1.5707963267948966,0")]
    pub n2: Angles,

    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Resolve the effective seed: flag, then environment, then default.
pub fn resolve_seed(flag: Option<u64>) -> u64 {
    if let Some(s) = flag {
        return s;
    }
    if let Ok(v) = std::env::var("TELEPORT_HV_SEED") {
        if let Ok(s) = v.trim().parse() {
            return s;
        }
    }
    DEFAULT_SEED
}
