//! Command-line arguments.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "meinardus",
    version,
    about = "Weighted partition asymptotics and local limit checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact coefficients c_0..c_N of the generating function.
    Enumerate(EnumerateArgs),
    /// Saddle-point estimates of log c_n.
    Estimate(EstimateArgs),
    /// Solve Khintchine's equation for delta_n and report tilted moments.
    Saddle(SaddleArgs),
    /// Check the local limit condition and report P(Z_n = n) ratios.
    Nllt(NlltArgs),
    /// Sample the characteristic function of Z_n, or check the inversion integral.
    Charfn(CharFnArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Built-in model name (partitions, distinct, prime-powers, example3,
    /// ratio-kernel(p), q4-indicator, gcd2, empty-weights) or a JSON model file.
    #[arg(long)]
    pub model: String,
    /// Epsilon for the example3 model, in (0, 1).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Mantissa bits for high-precision arithmetic.
    #[arg(long, default_value_t = 256)]
    pub bits: u32,
    /// Target tolerance for truncations and error bounds.
    #[arg(long, default_value_t = 1e-30)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EnumerateMethod {
    /// Lambda sieve and exponential recurrence.
    Recurrence,
    /// Factor-by-factor product (independent check).
    Oracle,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Largest index N.
    #[arg(long)]
    pub n: usize,
    /// Emit only the row for N.
    #[arg(long)]
    pub last: bool,
    #[arg(long, value_enum, default_value_t = EnumerateMethod::Recurrence)]
    pub method: EnumerateMethod,
}

/// A single `--n` or a comma-separated `--grid`.
#[derive(Debug, Args)]
pub struct NSelection {
    #[arg(long, conflicts_with = "grid")]
    pub n: Option<u64>,
    /// Comma-separated list of n values.
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<u64>,
}

impl NSelection {
    /// The selected n values, or `default` when none were given.
    pub fn values(&self, default: &[u64]) -> Vec<u64> {
        match (self.n, self.grid.is_empty()) {
            (Some(n), _) => vec![n],
            (None, false) => self.grid.clone(),
            (None, true) => default.to_vec(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub select: NSelection,
    /// pure (residue expansion) or semi-exact (direct log f and exact variance).
    #[arg(long, default_value = "semi-exact")]
    pub variant: String,
    /// Also compute the exact c_n and the ratio estimate/exact.
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug, Args)]
pub struct SaddleArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub select: NSelection,
    /// Override the truncation depth K of the Lambda sums.
    #[arg(long)]
    pub truncation: Option<usize>,
}

#[derive(Debug, Args)]
pub struct NlltArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub select: NSelection,
    /// Largest modulus q checked.
    #[arg(long, default_value_t = 12)]
    pub q_max: u64,
}

#[derive(Debug, Args)]
pub struct CharFnArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: u64,
    /// Comma-separated alpha values in [-1/2, 1/2].
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "samples"
    )]
    pub alpha: Vec<f64>,
    /// Number of equally spaced alpha values on [0, 1/2] (default 11).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Tilt parameter; defaults to the saddle point delta_n.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Compare the inversion integral with the exact probability instead.
    #[arg(long, conflicts_with_all = ["alpha", "samples", "delta"])]
    pub integral: bool,
}
