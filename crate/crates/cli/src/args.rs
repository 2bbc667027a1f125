use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "ffdistinct",
    version,
    about = "Spectral and counting computations over finite fields"
)]
pub struct Cli {
    /// Cap on worker threads. Output does not depend on this value.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    pub threads: Option<u16>,
    /// Human-readable output instead of JSON / CSV.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Enumerate or certify varieties.
    #[command(subcommand)]
    Variety(VarietyCmd),
    /// Cayley graph spectra.
    #[command(subcommand)]
    Spectrum(SpectrumCmd),
    /// Energies and distance counts of a point set.
    #[command(subcommand)]
    Energy(EnergyCmd),
    /// Seeded experiments driven by a TOML plan.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
    /// Inequality audits.
    #[command(subcommand)]
    Audit(AuditCmd),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FamilyArg {
    Sphere,
    Paraboloid,
    Minkowski,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Characteristic (odd prime).
    #[arg(long)]
    pub p: u64,
    /// Extension degree, q = p^n.
    #[arg(long, default_value_t = 1)]
    pub n: u32,
    /// Dimension of the ambient space.
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Args)]
pub struct VarietyArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    /// Built-in family.
    #[arg(long, required_unless_present = "input", conflicts_with = "input")]
    pub family: Option<FamilyArg>,
    /// Family parameter (sphere radius / Minkowski product).
    #[arg(long, default_value_t = 1)]
    pub j: u32,
    /// Variety file written by `variety enum`.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SubsetArgs {
    #[command(flatten)]
    pub variety: VarietyArgs,
    /// `all` or `random:N`.
    #[arg(long, default_value = "all")]
    pub subset: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum VarietyCmd {
    /// Print the variety's points.
    Enum(VarietyArgs),
    /// Regularity constants and verdict.
    Check {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value_t = 0.5)]
        c1_lo: f64,
        #[arg(long, default_value_t = 2.0)]
        c1_hi: f64,
        #[arg(long, default_value_t = 3.0)]
        c2_max: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum SpectrumCmd {
    /// Spectrum of the Cayley graph C_V.
    Cayley {
        #[command(flatten)]
        variety: VarietyArgs,
        /// Also write the full eigenvalue table here.
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Spectrum of the Euclidean graph E_q(d, Q, t).
    Euclidean {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        t: u32,
        /// Diagonal of Q, comma separated. Defaults to the sum of squares.
        #[arg(long, value_delimiter = ',')]
        form: Option<Vec<u32>>,
        #[arg(long)]
        table: Option<PathBuf>,
    },
    /// Spectrum of the affine graph C_{P'} for P = sum a_j x_j^s.
    Affine {
        #[command(flatten)]
        field: FieldArgs,
        /// Coefficients a_j, comma separated. Defaults to all ones.
        #[arg(long, value_delimiter = ',')]
        coeffs: Option<Vec<u32>>,
        #[arg(long, default_value_t = 2)]
        s: u32,
        #[arg(long)]
        table: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum EnergyCmd {
    /// k-energy Lambda_k (even k).
    Lambda {
        #[command(flatten)]
        set: SubsetArgs,
        #[arg(long)]
        k: usize,
    },
    /// Distance counts nu_k(t) for every t.
    Nu {
        #[command(flatten)]
        set: SubsetArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        form: Option<Vec<u32>>,
    },
    /// Shifted counts nu_{P,k}(t) over X.
    Nup {
        #[command(flatten)]
        set: SubsetArgs,
        #[arg(long)]
        k: usize,
        /// Shift set X, comma separated field elements.
        #[arg(long, value_delimiter = ',', required = true)]
        x: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        coeffs: Option<Vec<u32>>,
        #[arg(long, default_value_t = 2)]
        s: u32,
    },
    /// Distance set Delta_{k,Q}(E).
    Delta {
        #[command(flatten)]
        set: SubsetArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, value_delimiter = ',')]
        form: Option<Vec<u32>>,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    /// TOML plan file.
    #[arg(long)]
    pub plan: PathBuf,
    /// Per-trial CSV table.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    Coverage(PlanArgs),
    Energy(PlanArgs),
    Sumset(PlanArgs),
}

#[derive(Debug, Subcommand)]
pub enum AuditCmd {
    /// Mixing inequality on C_V for random multiset pairs.
    Mixing {
        #[command(flatten)]
        variety: VarietyArgs,
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        /// Largest number of distinct vertices in a multiset.
        #[arg(long, default_value_t = 40)]
        support: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}
