use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use lrsylv::io::{read_dense_matrix, read_low_rank_bundle, write_atomic, write_dense_matrix};
use lrsylv::kernels::{solve_sylvester_dense, solve_sylvester_kron_oracle, svd};
use lrsylv_cli::experiment::{read_operator_file, run_experiment};
use lrsylv_cli::spec::{ExperimentKind, ExperimentSpec, InputFiles};

#[derive(Parser)]
#[command(
    name = "lrsylv",
    version,
    about = "Low-rank solvers for Sylvester-type matrix and tensor equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark problem, solve it, and write CSV results.
    Bench(BenchArgs),
    /// Solve A·X + X·Bᵀ = C from files and write the factor bundle of X.
    Solve(SolveArgs),
    /// Direct dense reference solve, for test harnesses.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct BenchArgs {
    /// Problem family: poisson2d, poisson3d, random2d, random3d, from-files.
    kind: String,
    /// Per-mode grid size.
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Mode count; must match what the family implies.
    #[arg(long)]
    d: Option<usize>,
    /// Boundary handling for the Poisson families: dirichlet or periodic.
    #[arg(long, default_value = "dirichlet")]
    boundary: String,
    /// Target (multilinear) rank of the generated right-hand side.
    #[arg(long = "rhs-rank", default_value_t = 7)]
    rhs_rank: usize,
    /// Spectral gap of the random families.
    #[arg(long = "spec-dist", default_value_t = 10.0)]
    spec_dist: f64,
    /// Residual stopping tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Relative truncation factor of the adaptive driver.
    #[arg(long = "theta-rel", default_value_t = 1e-10)]
    theta_rel: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Driver: fixed or adaptive.
    #[arg(long, default_value = "adaptive")]
    mode: String,
    /// Output directory for CSV files, the solution bundle, and the manifest.
    #[arg(long)]
    out: PathBuf,
    /// Starting rank (defaults: 1 for adaptive, rhs-rank for fixed).
    #[arg(long)]
    rank: Option<usize>,
    /// Hard rank cap for the adaptive driver.
    #[arg(long = "max-rank")]
    max_rank: Option<usize>,
    /// Residual norm compared against the tolerance: fro or scaled.
    #[arg(long = "stop-norm", default_value = "scaled")]
    stop_norm: String,
    /// Per-side size limit for the direct oracle (hard maximum 2048).
    #[arg(long = "oracle-cap", default_value_t = 1024)]
    oracle_cap: usize,
    /// Take the truncation threshold from the direct solution's spectrum.
    #[arg(long = "theta-from-direct")]
    theta_from_direct: bool,
    /// Freeze the truncation threshold at its first-iteration value.
    #[arg(long = "freeze-theta")]
    freeze_theta: bool,
    /// Coefficient file A (from-files only; Matrix Market or dense text).
    #[arg(long)]
    a: Option<PathBuf>,
    /// Coefficient file B (from-files only).
    #[arg(long)]
    b: Option<PathBuf>,
    /// Right-hand-side low-rank bundle directory (from-files only).
    #[arg(long)]
    c: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Coefficient file A (Matrix Market or dense text).
    #[arg(long)]
    a: PathBuf,
    /// Coefficient file B.
    #[arg(long)]
    b: PathBuf,
    /// Right-hand-side low-rank bundle directory.
    #[arg(long)]
    c: PathBuf,
    /// Output directory; the solution bundle lands in `<out>/solution`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "theta-rel", default_value_t = 1e-10)]
    theta_rel: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Driver: fixed or adaptive.
    #[arg(long, default_value = "adaptive")]
    mode: String,
    /// Starting rank (defaults: 1 for adaptive, rhs rank for fixed).
    #[arg(long)]
    rank: Option<usize>,
    /// Residual norm compared against the tolerance: fro or scaled.
    #[arg(long = "stop-norm", default_value = "scaled")]
    stop_norm: String,
}

#[derive(Args)]
struct OracleArgs {
    /// Coefficient file A (Matrix Market or dense text).
    #[arg(long)]
    a: PathBuf,
    /// Coefficient file B.
    #[arg(long)]
    b: PathBuf,
    /// Right-hand side: dense matrix file, or a low-rank bundle directory.
    #[arg(long)]
    c: PathBuf,
    /// Output file for the dense solution.
    #[arg(long)]
    out: PathBuf,
    /// bartels-stewart (default) or kron (vectorized, small sizes only).
    #[arg(long, default_value = "bartels-stewart")]
    method: String,
    /// Also write the solution's singular values as CSV here.
    #[arg(long)]
    sv: Option<PathBuf>,
}

fn bench(args: BenchArgs) -> Result<()> {
    let kind: ExperimentKind = args.kind.parse().map_err(anyhow::Error::msg)?;
    let mut spec = ExperimentSpec::new(kind, &args.out);
    spec.n = args.n;
    if let Some(d) = args.d {
        spec.d = d;
    }
    spec.boundary = args.boundary.parse().map_err(anyhow::Error::msg)?;
    spec.rhs_rank = args.rhs_rank;
    spec.spec_dist = args.spec_dist;
    spec.tol = args.tol;
    spec.theta_rel = args.theta_rel;
    spec.max_iter = args.max_iter;
    spec.seed = args.seed;
    spec.mode = args.mode.parse().map_err(anyhow::Error::msg)?;
    spec.start_rank = args.rank;
    spec.max_rank = args.max_rank;
    spec.stop_norm = args.stop_norm.parse().map_err(anyhow::Error::msg)?;
    spec.oracle_cap = args.oracle_cap;
    spec.theta_from_direct = args.theta_from_direct;
    spec.freeze_theta = args.freeze_theta;
    if kind == ExperimentKind::FromFiles {
        match (args.a, args.b, args.c) {
            (Some(a), Some(b), Some(c)) => spec.inputs = Some(InputFiles { a, b, c }),
            _ => anyhow::bail!("from-files needs --a, --b, and --c"),
        }
    }
    let outcome = run_experiment(&spec).context("experiment failed")?;
    println!(
        "wrote {}: {} iterations, final scaled residual {:.3e}, ranks {:?}",
        spec.output_dir.display(),
        outcome.trace.iterations(),
        outcome.trace.final_scaled_residual().unwrap_or(f64::NAN),
        outcome.final_ranks
    );
    Ok(())
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(ExperimentKind::FromFiles, &args.out);
    spec.tol = args.tol;
    spec.theta_rel = args.theta_rel;
    spec.max_iter = args.max_iter;
    spec.seed = args.seed;
    spec.mode = args.mode.parse().map_err(anyhow::Error::msg)?;
    spec.start_rank = args.rank;
    spec.stop_norm = args.stop_norm.parse().map_err(anyhow::Error::msg)?;
    spec.inputs = Some(InputFiles {
        a: args.a,
        b: args.b,
        c: args.c,
    });
    let outcome = run_experiment(&spec).context("solve failed")?;
    println!(
        "wrote {}: {} iterations, final residual {:.3e}, rank {:?}",
        spec.output_dir.join("solution").display(),
        outcome.trace.iterations(),
        outcome.trace.final_residual().unwrap_or(f64::NAN),
        outcome.final_ranks
    );
    Ok(())
}

fn oracle(args: OracleArgs) -> Result<()> {
    let a = read_operator_file(&args.a)
        .with_context(|| format!("reading {}", args.a.display()))?
        .to_dense();
    let b = read_operator_file(&args.b)
        .with_context(|| format!("reading {}", args.b.display()))?
        .to_dense();
    let c = if args.c.is_dir() {
        read_low_rank_bundle::<f64>(&args.c)
            .with_context(|| format!("reading bundle {}", args.c.display()))?
            .to_dense()
    } else {
        read_dense_matrix(&args.c).with_context(|| format!("reading {}", args.c.display()))?
    };
    let x = match args.method.as_str() {
        "bartels-stewart" => solve_sylvester_dense(&a, &b, &c)?,
        "kron" => solve_sylvester_kron_oracle(&a, &b, &c)?,
        other => anyhow::bail!("unknown method {other:?}; expected bartels-stewart or kron"),
    };
    write_dense_matrix(&args.out, &x)?;
    if let Some(sv_path) = args.sv {
        let sigma = svd(&x)?.sigma;
        let mut text = String::from("index,sigma\n");
        for (i, s) in sigma.iter().enumerate() {
            text.push_str(&format!("{},{s:.16e}\n", i + 1));
        }
        write_atomic(&sv_path, &text)?;
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Bench(args) => bench(args),
        Command::Solve(args) => solve(args),
        Command::Oracle(args) => oracle(args),
    }
}
