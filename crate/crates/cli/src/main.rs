//! `mhs`: catalog listing, verification suites, symmetry scans, orbits,
//! Grad-Shafranov checks and grid export.
//!
//! Exit codes: 0 when every gate passes, 1 on a gate failure or a failed
//! construction, 2 on a usage or parse error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "mhs",
    version,
    about = "Magnetofluidostatic equilibrium catalog and verification suites"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Shorthand for `--format json`.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl OutputArgs {
    pub fn format(&self) -> Format {
        if self.json {
            Format::Json
        } else {
            self.format
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampler {
    Halton,
    Random,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    /// Number of sample points.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Sampler::Halton)]
    pub sampler: Sampler,
    /// Domain override, e.g. `box:-1,1,-1,1,-1,1` or `ball:0,0,0,1`.
    #[arg(long)]
    pub domain: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct FieldArgs {
    /// Catalog entry; see `mhs catalog`.
    pub name: Option<String>,
    /// Inline vector field, e.g. `[sin(z), cos(z), 0]`.
    #[arg(long)]
    pub field: Option<String>,
    /// Proportionality factor override (Beltrami suites).
    #[arg(long)]
    pub h: Option<String>,
    /// Pressure function override (force-balance suites).
    #[arg(long)]
    pub chi: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List built-in fields, or show one.
    Catalog {
        #[command(subcommand)]
        action: Option<CatalogAction>,
    },
    /// Run a field's residual suite.
    Verify {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Scan for continuous Euclidean symmetries.
    Symmetry {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        /// Relative singular value below which a direction is null.
        #[arg(long, default_value_t = mhs_core::symmetry::DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Gate: fail unless the null dimension equals this.
        #[arg(long)]
        expect: Option<usize>,
    },
    /// Repeated Lie transport of a Beltrami field along a Killing field.
    Orbit {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        sampling: SampleArgs,
        /// `trans-x|y|z`, `rot-x|y|z` or `ax,ay,az,bx,by,bz`.
        #[arg(long = "gen")]
        generator: String,
        /// Orbit depth.
        #[arg(long, default_value_t = 1)]
        n: usize,
    },
    /// Grad-Shafranov residual and reconstruction.
    Gs {
        #[arg(long, default_value = "translational")]
        chart: String,
        /// Flux function in x, y, z.
        #[arg(long)]
        theta: String,
        /// Pressure profile in T.
        #[arg(long, default_value = "0")]
        chi: String,
        /// Covariant ignorable component profile in T.
        #[arg(long, default_value = "0")]
        w3: String,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Generalized Grad-Shafranov check on the built-in Clebsch decomposition.
    Ggse {
        /// Integrate the potential along paths instead of using the closed form.
        #[arg(long)]
        integrate: bool,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Piecewise core-plus-shell assembly and its checks.
    Composite {
        #[arg(long, default_value = "w4_1")]
        core: String,
        #[arg(long, default_value = "exp_x3")]
        shell: String,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 0.4)]
        eps: f64,
        /// Samples per region.
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Field values on a regular grid over the domain's bounding box.
    Export {
        /// Catalog entry, or `composite` for the default assembly.
        name: String,
        /// Points per axis.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long)]
        domain: Option<String>,
    },
    /// Method-of-characteristics solves against closed forms.
    Characteristics {
        /// `w4_1`, `w4_2`, `w4_3`, `abc_minimal` or `cylindrical`.
        example: String,
        /// Initial data for the abc_minimal and cylindrical solves.
        #[arg(long, default_value = "sin(y) + z")]
        p: String,
        /// Profile in T for the cylindrical solve.
        #[arg(long, default_value = "-sin(T)")]
        g: String,
        #[arg(long, default_value_t = 60)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand, Debug)]
pub enum CatalogAction {
    /// Components, proportionality factor or pressure, and default domain.
    Show { name: String },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let format = cli.out.format();
    match commands::run(&cli.command, format) {
        Ok(outcome) => {
            if let Err(e) = output::emit(&outcome, format, cli.out.out.as_deref()) {
                eprintln!("error: {e:#}");
                return ExitCode::from(2);
            }
            ExitCode::from(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<commands::UsageError>() { 2 } else { 1 })
        }
    }
}
