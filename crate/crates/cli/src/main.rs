//! `wlambda`: level sets, proximity counts, β-shifts and dimension covers.
//!
//! Every command writes one table (CSV by default, or JSON with the resolved
//! config and the verification summary). Exit status: 0 on success, 1 when an
//! asserted inequality fails, 2 on usage errors.

mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use output::Format;

#[derive(Debug, Parser)]
#[command(name = "wlambda", version, about = "Approximation by λ-expansions: experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Write the table here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distinct level-n sums. Columns: index, value.
    Levelset(LevelsetArgs),
    /// Growth rates log2(#F_n)/n. Columns: n, count, exact_count, tau.
    Tau(TauArgs),
    /// Word with Σ ω_i λ^i = 1. Columns: mode, found, word, length, sum, tau_bound.
    GammaWitness(WitnessArgs),
    /// Proximity counts. Columns: n, k, r, tilde_count, restricted_count.
    Proximity(ProximityArgs),
    /// Check one of the inequalities; exit 1 on a violation.
    #[command(subcommand)]
    Verify(Verify),
    /// Grid points where the restricted count exceeds 4^n λ^{s(n+k)}.
    /// Columns: fraction, lambda, n, k, restricted_count, threshold.
    ScanExceptional(ScanArgs),
    /// β-transformation and the multinacci subshift.
    #[command(subcommand)]
    Beta(BetaCmd),
    /// Same as `beta perron`.
    Perron(PerronArgs),
    /// Covers of the approximation layers.
    #[command(subcommand)]
    Dimension(DimensionCmd),
}

#[derive(Debug, Subcommand)]
enum Verify {
    /// P̃_n ≤ 2^n + Σ 2^{n−l} P_l on a λ-grid.
    /// Columns: fraction, lambda, n, k, r, lhs, rhs, holds.
    ProximityInequality(InequalityArgs),
    /// N_r(φ, φ+t) ≤ 4 N_r(φ, φ) on random instances.
    /// Columns: trials, seed, max_ratio, within_four, below_two, size, t, r.
    Translation(TranslationArgs),
    /// Components of {|p| ≤ γ} have diameter ≤ 4γ/δ.
    /// Columns: coeffs, components, max_diameter, bound, holds.
    IntervalDiameter(DiameterArgs),
    /// Rams covers of random interval families.
    /// Columns: family, size, b, rho, region, pieces, lhs, rhs, sup_holds, sum_holds, coverage.
    Rams(RamsArgs),
    /// Cylinder search on random (A, f).
    /// Columns: lambda, a_lo, a_hi, slope, offset, n_shift, word, theta, ratio, contained, large.
    Cylinders(CylinderArgs),
    /// Nested interval construction; see --table for columns.
    Tree(TreeArgs),
}

#[derive(Debug, Subcommand)]
enum BetaCmd {
    /// Greedy digits. Columns: k, digit, partial, error, bound.
    Digits(DigitsArgs),
    /// Expansion of 1 and Parry admissibility.
    /// Columns: k, digit_of_1, quasi_greedy (or: digits, admissible with --digits).
    Parry(ParryArgs),
    /// Adjacency of the subshift avoiding 0 1^m. Columns: state, label, next0, next1.
    Sft(SftArgs),
    /// Perron eigenvalue. Columns: m, mu, lambda, mu_times_lambda, iterations, shifted, vector.
    Perron(PerronArgs),
    /// Projected cylinder lengths. Columns: n, count, min_len, max_len, min_ratio, max_ratio.
    Cylinders(BetaCylinderArgs),
    /// Orbit with error shadows. Columns: k, x, digit, err, unreliable, in_a_beta.
    Orbit(OrbitArgs),
}

#[derive(Debug, Subcommand)]
enum DimensionCmd {
    /// Box-count estimates. Columns: n, cover_count, scale, estimate, upper, lower.
    Cover(CoverArgs),
    /// Closed-form bracket. Columns: alpha, lower, upper, n, inverse_alpha, witness_bound.
    Bounds(BoundsArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct LambdaArg {
    /// Parameter in (1/2, 1).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Use the multinacci number of this order.
    #[arg(long)]
    pub multinacci: Option<u32>,
}

#[derive(Debug, Args, Serialize)]
pub struct LevelsetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub merge_tol: f64,
    /// Raise the level cap (each level doubles memory: 2^n sums of 8 bytes).
    #[arg(long, default_value_t = 28)]
    pub cap: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct TauArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub merge_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct WitnessArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long, default_value_t = 24)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Also search every word (n_max ≤ 24).
    #[arg(long)]
    pub exhaustive: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct ProximityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 0)]
    pub k_max: usize,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct InequalityArgs {
    /// Number of grid points in (1/2, 2/3).
    #[arg(long, default_value_t = 50)]
    pub lambda_grid: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub radii: Vec<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct TranslationArgs {
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct DiameterArgs {
    /// Coefficients c_1,…,c_d in {-1,0,1}; all polynomials with c_1 ≠ 0 up to
    /// --max-degree when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub coeffs: Option<Vec<i8>>,
    #[arg(long, default_value_t = 6)]
    pub max_degree: usize,
    #[arg(long)]
    pub gamma: f64,
    /// Defaults to the empirical certificate with default settings.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct RamsArgs {
    #[arg(long, default_value_t = 1000)]
    pub families: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "2,3,5")]
    pub b: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.3,0.7,1")]
    pub rho: Vec<f64>,
    /// Sample points per family for the coverage check.
    #[arg(long, default_value_t = 10_000)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct CylinderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeTable {
    Levels,
    Schedule,
    Nodes,
    Correlation,
}

#[derive(Debug, Args, Serialize)]
pub struct TreeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub s: f64,
    /// Similarities as slope:offset, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "2:0", value_parser = run::parse_similarity, allow_hyphen_values = true)]
    pub sims: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    #[arg(long, default_value_t = 256)]
    pub paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 4096)]
    pub max_level: usize,
    /// levels: level, stage, delta, delta_hat, nodes;
    /// schedule: q, map, theta, gamma, gamma_hat, m, start, end, sandwich, derivative;
    /// nodes: word, level, delta_lo, delta_hi, hat_lo, hat_hi;
    /// correlation: level, radius_level, radius, nodes, close_pairs, fraction, exponent.
    #[arg(long, value_enum, default_value = "levels")]
    pub table: TreeTable,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long, default_value_t = 1)]
    pub r: u64,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 4)]
    pub k_max: usize,
    #[arg(long, default_value_t = 50)]
    pub lambda_grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DigitsArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ParryArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Test this digit sequence instead of listing the expansion of 1.
    #[arg(long, value_delimiter = ',')]
    pub digits: Option<Vec<u8>>,
}

#[derive(Debug, Args, Serialize)]
pub struct SftArgs {
    #[arg(long)]
    pub m: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct PerronArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BetaCylinderArgs {
    #[arg(long)]
    pub m: u32,
    #[arg(long)]
    pub n_max: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct OrbitArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long, default_value_t = 40)]
    pub n: usize,
    /// Mark the times with f^n(x) ≤ β^{−κn}.
    #[arg(long)]
    pub kappa: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub merge_tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub lambda: LambdaArg,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
}

fn dispatch(cmd: &Command) -> anyhow::Result<output::Report> {
    match cmd {
        Command::Levelset(a) => run::levelset(a),
        Command::Tau(a) => run::tau(a),
        Command::GammaWitness(a) => run::gamma_witness(a),
        Command::Proximity(a) => run::proximity(a),
        Command::Verify(v) => match v {
            Verify::ProximityInequality(a) => run::verify_inequality(a),
            Verify::Translation(a) => run::verify_translation(a),
            Verify::IntervalDiameter(a) => run::verify_diameter(a),
            Verify::Rams(a) => run::verify_rams(a),
            Verify::Cylinders(a) => run::verify_cylinders(a),
            Verify::Tree(a) => run::verify_tree(a),
        },
        Command::ScanExceptional(a) => run::scan_exceptional(a),
        Command::Beta(b) => match b {
            BetaCmd::Digits(a) => run::beta_digits(a),
            BetaCmd::Parry(a) => run::beta_parry(a),
            BetaCmd::Sft(a) => run::beta_sft(a),
            BetaCmd::Perron(a) => run::perron(a),
            BetaCmd::Cylinders(a) => run::beta_cylinders(a),
            BetaCmd::Orbit(a) => run::beta_orbit(a),
        },
        Command::Perron(a) => run::perron(a),
        Command::Dimension(d) => match d {
            DimensionCmd::Cover(a) => run::dimension_cover(a),
            DimensionCmd::Bounds(a) => run::dimension_bounds(a),
        },
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Levelset(_) => "levelset",
        Command::Tau(_) => "tau",
        Command::GammaWitness(_) => "gamma-witness",
        Command::Proximity(_) => "proximity",
        Command::Verify(v) => match v {
            Verify::ProximityInequality(_) => "verify proximity-inequality",
            Verify::Translation(_) => "verify translation",
            Verify::IntervalDiameter(_) => "verify interval-diameter",
            Verify::Rams(_) => "verify rams",
            Verify::Cylinders(_) => "verify cylinders",
            Verify::Tree(_) => "verify tree",
        },
        Command::ScanExceptional(_) => "scan-exceptional",
        Command::Beta(b) => match b {
            BetaCmd::Digits(_) => "beta digits",
            BetaCmd::Parry(_) => "beta parry",
            BetaCmd::Sft(_) => "beta sft",
            BetaCmd::Perron(_) => "beta perron",
            BetaCmd::Cylinders(_) => "beta cylinders",
            BetaCmd::Orbit(_) => "beta orbit",
        },
        Command::Perron(_) => "perron",
        Command::Dimension(d) => match d {
            DimensionCmd::Cover(_) => "dimension cover",
            DimensionCmd::Bounds(_) => "dimension bounds",
        },
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut report = match dispatch(&cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let mut config = serde_json::Map::new();
    config.insert("command".into(), command_name(&cli.command).into());
    config.insert("format".into(), serde_json::json!(cli.format));
    config.append(&mut report.config);
    report.config = config;

    if let Err(e) = output::write(&report, cli.format, cli.output.as_deref()) {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    for line in &report.notes {
        eprintln!("{line}");
    }
    if report.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("verification failed: {} counterexample(s)", report.failed.len());
        for f in &report.failed {
            eprintln!("{f}");
        }
        ExitCode::from(1)
    }
}
