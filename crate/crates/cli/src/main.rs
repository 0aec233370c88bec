use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scms_core::scms::Scale;
use scms_core::verify::Suite;
use thiserror::Error;

mod commands;
mod config;

/// Density ridge estimation under power transformations.
///
/// Exit codes: 0 success, 1 verification failure, 2 invalid configuration,
/// 3 unreadable input or unwritable output.
#[derive(Debug, Parser)]
#[command(name = "scms", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic point cloud as CSV.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Generate(GenerateArgs),
    /// Run SCMS on a CSV cloud. Output columns: x0.., iterations, converged,
    /// final_align. With --reference, prints `marg=.. haus=.. converged_frac=..`.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Estimate(EstimateArgs),
    /// Grid of estimator runs. Output columns: method, q, h, k, marg, haus,
    /// converged_frac, status.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Sweep(SweepArgs),
    /// Cosine score and normal direction of a planar KDE on a grid. Output
    /// columns: x, y, q, s, ux, uy (s is empty where the gradient vanishes).
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Field(FieldArgs),
    /// Run the numerical property suites.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Verify(VerifyArgs),
    /// Corrupt clean data inside its PCA subspace, denoise there, print MSE.
    #[command(args_override_self = true, allow_negative_numbers = true)]
    Denoise(DenoiseArgs),
}

#[derive(Debug, Args)]
struct ConfigFile {
    /// File of `key = value` lines; flags on the command line take precedence.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Shape {
    Circle,
    Sphere,
    SwissRoll,
    Bimodal,
    Curve,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    /// Number of points.
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Standard deviation of the added Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Circle or sphere radius.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Half the distance between the bimodal means.
    #[arg(long, default_value_t = 1.5)]
    a: f64,
    /// Ambient dimension of the embedded curve.
    #[arg(long, default_value_t = 20)]
    dim: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodName {
    Score,
    LScore,
    MfitI,
    MfitIi,
}

#[derive(Debug, Clone, Args)]
struct MethodArgs {
    #[arg(long, value_enum, default_value_t = MethodName::Score)]
    method: MethodName,
    /// Power exponent (score and l-score only), at most 1; 0 is the logarithm.
    #[arg(long, default_value_t = 0.0)]
    q: f64,
    /// Kernel bandwidth: a number, or `knn:K` for the K-th neighbor distance.
    #[arg(long)]
    h: Option<Scale>,
    /// MFIT neighborhood radius, same syntax as --h; defaults to --h.
    #[arg(long)]
    radius: Option<Scale>,
    /// Ridge dimension.
    #[arg(long, default_value_t = 1)]
    d: usize,
    /// Nearest samples per l-score evaluation.
    #[arg(long)]
    neighbors: Option<usize>,
    /// Step-length convergence tolerance [default: 1e-7 times the data diameter].
    #[arg(long)]
    epsilon: Option<f64>,
    /// Step size in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    method: MethodArgs,
    /// `circle:R` or `sphere:R`, centered at the origin.
    #[arg(long)]
    reference: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    input: PathBuf,
    /// `circle:R` or `sphere:R`.
    #[arg(long)]
    reference: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "l-score,mfit-i,mfit-ii")]
    methods: Vec<MethodName>,
    /// Exponents for score and l-score rows.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,-5,-10")]
    qs: Vec<f64>,
    /// Bandwidths (score family) or radii (MFIT).
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    hs: Vec<f64>,
    /// Neighbor counts for l-score rows.
    #[arg(long, value_delimiter = ',', default_value = "30")]
    neighbors: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Args)]
struct FieldArgs {
    /// Planar sample cloud.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    h: f64,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-1,0,1")]
    qs: Vec<f64>,
    /// Nodes per axis.
    #[arg(long, default_value_t = 41)]
    resolution: usize,
    /// `xmin,xmax,ymin,ymax` [default: data bounding box padded by 10%].
    #[arg(long = "box", value_delimiter = ',', allow_hyphen_values = true)]
    bounds: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Suites to run [default: all]: lemma1, lemma2, inclusion, concentration, fd,
    /// hausdorff, equivalence.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<Suite>,
    /// Instances per suite [default: 5000 for lemma1/lemma2, 200 otherwise].
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 20240607)]
    seed: u64,
    /// Grid resolution of the inclusion and concentration suites.
    #[arg(long, default_value_t = 161)]
    resolution: usize,
    #[arg(long, hide = true)]
    inject_gamma_sign_flip: bool,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Args)]
struct DenoiseArgs {
    /// Clean high-dimensional cloud.
    #[arg(long)]
    input: PathBuf,
    /// PCA subspace dimension.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Noise added inside the subspace.
    #[arg(long, default_value_t = 0.2)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Skip the estimator and score the corrupted coordinates directly.
    #[arg(long)]
    identity: bool,
    #[command(flatten)]
    method: MethodArgs,
    /// Denoised subspace coordinates as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    _config: ConfigFile,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Verification(String),
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Verification(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<scms_core::Error> for CliError {
    fn from(e: scms_core::Error) -> Self {
        use scms_core::Error as E;
        match e {
            E::Io(_) | E::Csv(_) | E::Parse(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<OsString> = std::env::args_os().collect();
    let result = config::expand_config(args).and_then(|args| {
        let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
        match cli.command {
            Command::Generate(a) => commands::generate(&a),
            Command::Estimate(a) => commands::estimate(&a),
            Command::Sweep(a) => commands::sweep(&a),
            Command::Field(a) => commands::field(&a),
            Command::Verify(a) => commands::verify(&a),
            Command::Denoise(a) => commands::denoise(&a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
