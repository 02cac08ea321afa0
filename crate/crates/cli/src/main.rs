use std::path::{Path, PathBuf};
use std::process::ExitCode;

use blepi::commands::{self, ClosedForm, Make, ModelKind};
use blepi::{exit, format, CliError, Outcome, OutputFormat, RunConfig};
use blepi_core::{SearchBudget, SolverOptions};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "blepi", version, about = "Finiteness, Gaussian optimum and Monte Carlo checks for entropy-power / Brascamp-Lieb data")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Solver restarts, the first from the identity.
    #[arg(long, global = true, default_value_t = SolverOptions::default().starts)]
    starts: usize,
    /// Gradient-norm tolerance for the solver.
    #[arg(long, global = true, default_value_t = SolverOptions::default().tol)]
    tol: f64,
    #[arg(long, global = true, default_value_t = SearchBudget::default().max_profiles)]
    budget_profiles: usize,
    #[arg(long, global = true, default_value_t = SearchBudget::default().random_per_profile)]
    budget_random: usize,
    #[arg(long, global = true, default_value_t = RunConfig::default().samples)]
    samples: usize,
    #[arg(long, global = true, default_value_t = RunConfig::default().knn_k)]
    knn_k: usize,
    /// One-sided critical z for `verify`.
    #[arg(long, global = true, default_value_t = 3.0)]
    confidence: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report entropies in bits.
    #[arg(long, global = true)]
    bits: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Gaussian,
    Uniform,
    Laplace,
    Mixture,
}

#[derive(Subcommand)]
enum Command {
    /// Check a datum file for structural problems.
    Validate { datum: PathBuf },
    /// Decide whether the Gaussian optimum is finite.
    Check {
        datum: PathBuf,
        /// Attach a split certificate to a Finite verdict.
        #[arg(long)]
        certify: bool,
    },
    /// Compute the Gaussian optimum and an optimizer.
    Solve { datum: PathBuf },
    /// Estimate the entropy functional on sampled laws and compare with the optimum.
    Verify {
        datum: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Model::Uniform, Model::Laplace, Model::Mixture])]
        models: Vec<Model>,
        /// Use this value instead of solving. Meant for testing the harness.
        #[arg(long, allow_negative_numbers = true)]
        mg_override: Option<f64>,
    },
    /// Optimum of the entropy power datum, which is 0.
    Epi {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Squared column norms of a row-orthonormal matrix.
    ZfCoeffs {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// `log det(A Λ Aᵀ) − Σ α_j² log λ_j`.
    ZfF {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
    },
    /// Compare `det(B Bᵀ)` with its Cauchy-Binet expansion.
    CauchyBinet {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Closed-form constant for the dependent-components example.
    Section6 {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
    },
    /// Which of the four feasibility conditions hold.
    Section6Feasible {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
    },
    /// Direct numerical supremum for the dependent-components example.
    Section6Bruteforce {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta: f64,
    },
    /// The constant along the feasible line δ = α − 1 + β/2.
    Section6Sweep {
        #[arg(long)]
        beta: f64,
        #[arg(long, default_value_t = 1.0)]
        from: f64,
        #[arg(long, default_value_t = 2.0)]
        to: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
    },
    /// Write a standard datum file.
    #[command(subcommand)]
    Make(MakeCommand),
}

#[derive(Subcommand)]
enum MakeCommand {
    /// Two blocks of R^dim weighted λ and 1 − λ, one map onto their mix.
    Epi {
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// A row-orthonormal map on scalar blocks, weights α_j².
    Zf {
        #[arg(long)]
        matrix: PathBuf,
    },
    /// The dependent-components datum on R^2 x R.
    Section6 {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        delta1: f64,
        #[arg(long)]
        delta2: f64,
    },
    /// All coordinate projections of R^n with unit weights.
    Projections {
        #[arg(long)]
        n: usize,
    },
}

impl GlobalArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            seed: self.seed,
            solver: SolverOptions {
                starts: self.starts,
                tol: self.tol,
                seed: self.seed,
                ..SolverOptions::default()
            },
            budget: SearchBudget {
                max_profiles: self.budget_profiles,
                random_per_profile: self.budget_random,
            },
            samples: self.samples,
            knn_k: self.knn_k,
            confidence: self.confidence,
            out: self.out.clone(),
            format: match self.format {
                Format::Json => OutputFormat::Json,
                Format::Csv => OutputFormat::Csv,
            },
            bits: self.bits,
        }
    }
}

fn model_kind(m: Model) -> ModelKind {
    match m {
        Model::Gaussian => ModelKind::Gaussian,
        Model::Uniform => ModelKind::Uniform,
        Model::Laplace => ModelKind::Laplace,
        Model::Mixture => ModelKind::Mixture,
    }
}

fn run(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let cf = |f: ClosedForm| commands::closed_form(&f, cfg);
    let matrix = |p: &Path| format::load_matrix(p);
    match command {
        Command::Validate { datum } => commands::validate(&datum, cfg),
        Command::Check { datum, certify } => commands::check(&datum, cfg, certify),
        Command::Solve { datum } => commands::solve(&datum, cfg),
        Command::Verify {
            datum,
            models,
            mg_override,
        } => {
            let kinds: Vec<ModelKind> = models.into_iter().map(model_kind).collect();
            commands::verify(&datum, cfg, &kinds, mg_override)
        }
        Command::Epi { lambda, dim } => cf(ClosedForm::Epi { lambda, dim }),
        Command::ZfCoeffs { matrix: p } => cf(ClosedForm::ZfCoeffs { matrix: matrix(&p)? }),
        Command::ZfF { matrix: p, lambda } => cf(ClosedForm::ZfF {
            matrix: matrix(&p)?,
            lambda,
        }),
        Command::CauchyBinet { matrix: p } => cf(ClosedForm::CauchyBinet { matrix: matrix(&p)? }),
        Command::Section6 { alpha, beta, delta } => cf(ClosedForm::Section6 { alpha, beta, delta }),
        Command::Section6Feasible {
            alpha,
            beta,
            delta1,
            delta2,
        } => cf(ClosedForm::Section6Feasible {
            alpha,
            beta,
            delta1,
            delta2,
        }),
        Command::Section6Bruteforce { alpha, beta, delta } => cf(ClosedForm::Section6Bruteforce { alpha, beta, delta }),
        Command::Section6Sweep { beta, from, to, steps } => cf(ClosedForm::Section6Sweep { beta, from, to, steps }),
        Command::Make(m) => commands::make(&match m {
            MakeCommand::Epi { lambda, dim } => Make::Epi { lambda, dim },
            MakeCommand::Zf { matrix: p } => Make::ZamirFeder { matrix: matrix(&p)? },
            MakeCommand::Section6 {
                alpha,
                beta,
                delta1,
                delta2,
            } => Make::Section6 {
                alpha,
                beta,
                delta1,
                delta2,
            },
            MakeCommand::Projections { n } => Make::Projections { n },
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::IO as u8 } else { exit::OK as u8 });
        }
    };
    let cfg = cli.global.config();
    let outcome = match run(cli.command, &cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.body) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(exit::IO as u8);
            }
        }
        None => print!("{}", outcome.body),
    }
    ExitCode::from(outcome.code as u8)
}
