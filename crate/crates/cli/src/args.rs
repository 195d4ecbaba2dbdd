//! Command-line flags. Each flag overrides the matching field of the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lowner", version, about = "Loewner chains, Faber/Grunsky data and dispersionless hierarchy reductions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; unknown keys are errors.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $LOWNER_OUT_DIR, else ./lowner-out].
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// Series truncation depth [default: 16].
    #[arg(long, global = true)]
    pub depth: Option<i32>,
    /// RK4 step in lambda [default: 0.001].
    #[arg(long, global = true)]
    pub rk4_step: Option<f64>,
    /// Relative finite-difference step [default: 1e-5].
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// Lax residual tolerance [default: 1e-4].
    #[arg(long, global = true)]
    pub lax_tol: Option<f64>,
    /// Relative hydrodynamic residual tolerance [default: 1e-6].
    #[arg(long, global = true)]
    pub hydro_tol: Option<f64>,
    /// Flow-symmetry tolerance [default: 1e-6].
    #[arg(long, global = true)]
    pub flow_tol: Option<f64>,
    /// Integrated vs closed-form coefficient tolerance [default: 1e-6].
    #[arg(long, global = true)]
    pub loewner_tol: Option<f64>,
    /// Grunsky symmetry tolerance [default: 1e-10].
    #[arg(long, global = true)]
    pub symmetry_tol: Option<f64>,
    /// Grunsky table half-width [default: 8].
    #[arg(long, global = true)]
    pub half_width: Option<usize>,
    /// Highest Faber index reported [default: 8].
    #[arg(long, global = true)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Faber polynomials and flow coefficients at one lambda.
    Faber {
        #[command(flatten)]
        source: SourceArgs,
        /// Evaluation point [default: midpoint of the source range, or 0.5].
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
    },
    /// Grunsky coefficient table at one lambda.
    Grunsky {
        #[command(flatten)]
        source: SourceArgs,
        /// Evaluation point [default: midpoint of the source range, or 0.5].
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
    },
    /// Integrate the Loewner equation; compares with the closed form for examples.
    Loewner {
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Solve the hodograph relation for lambda(t).
    Hodograph {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        times: TimesArgs,
    },
    /// Build the Lax series at lambda(t).
    BuildLax {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        times: TimesArgs,
    },
    /// Finite-difference checks of the Lax, hydrodynamic and flow-symmetry equations.
    Verify {
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        times: TimesArgs,
        #[command(flatten)]
        verify: VerifyArgs,
    },
    /// Relax a log-gas on a curve.
    Coulomb {
        #[command(flatten)]
        gas: CoulombArgs,
    },
    /// Run the full pipeline on the closed-form examples.
    Golden {
        /// A.1.1, A.1.2, A.2.1 or A.2.2 [default: all four].
        #[arg(long)]
        example: Option<String>,
    },
}

#[derive(Debug, Args, Default)]
pub struct SourceArgs {
    /// Closed-form example: A.1.1, A.1.2, A.2.1 or A.2.2.
    #[arg(long)]
    pub example: Option<String>,
    /// Driving point U for A.1.1 [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub u: Option<f64>,
    /// Driving point sigma for A.2.x as `re,im` [default: 1,0].
    #[arg(long, allow_hyphen_values = true)]
    pub sigma: Option<String>,
    /// Driving data as JSON (integrates the Loewner equation).
    #[arg(long, conflicts_with = "example")]
    pub driving: Option<String>,
    /// Stored lambda grid `start:end:step` for integrated sources [default: 0:1:0.01].
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct TimesArgs {
    /// `x` (dKP).
    #[arg(long, allow_hyphen_values = true)]
    pub x: Option<f64>,
    /// `t0` (dToda).
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// `n=value` (dKP) or `n=re,im` (dToda); repeatable.
    #[arg(long = "time", allow_hyphen_values = true)]
    pub times: Vec<String>,
    /// R(lambda) polynomial coefficients, constant first, comma separated [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub r: Option<String>,
    /// Search interval `lo,hi` for lambda [default: 0,10 for examples].
    #[arg(long, allow_hyphen_values = true)]
    pub bracket: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct VerifyArgs {
    /// Lax equations to check, comma separated [default: active times and 1].
    #[arg(long, allow_hyphen_values = true)]
    pub lax: Option<String>,
    /// Hydrodynamic equations to check [default: active times].
    #[arg(long, allow_hyphen_values = true)]
    pub hydro: Option<String>,
    /// Largest index in flow-symmetry triples, 0 to skip [default: 3].
    #[arg(long)]
    pub flow_max_index: Option<i32>,
    /// Negative control: `none`, `flip_xi` or `lambda_offset=<d>` [default: none].
    #[arg(long)]
    pub control: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct CoulombArgs {
    /// Curve: `real_line`, `half_ray[:angle]`, `arc:from:to`, or JSON.
    #[arg(long)]
    pub curve: Option<String>,
    /// Number of particles.
    #[arg(long = "N")]
    pub n: Option<usize>,
    /// `t0 = hbar N`.
    #[arg(long, allow_hyphen_values = true)]
    pub t0: Option<f64>,
    /// Couplings `n=re[,im]`, `n >= 1`; repeatable.
    #[arg(long = "times", allow_hyphen_values = true)]
    pub times: Vec<String>,
    /// Seed for the initial jitter [default: 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Iteration cap [default: 500].
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Gradient tolerance [default: 1e-9].
    #[arg(long)]
    pub tol: Option<f64>,
}
