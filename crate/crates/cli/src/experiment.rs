//! Runs one experiment end to end: builds the operators and the right-hand
//! side, runs the selected solver, cross-checks against a direct solution
//! when one is affordable, and writes the results as CSV plus a manifest.
//!
//! Output files (written into `ExperimentSpec::output_dir`):
//!
//! * `trace.csv` — per-iteration residuals and ranks;
//! * `sv_approx.csv` — singular-value spectrum of the final iterate;
//! * `sv_direct.csv`, `sv_distance.csv` — direct-solution spectrum and the
//!   per-index distance, when the oracle ran;
//! * `solution/` — the final iterate as a factor bundle;
//! * `manifest.txt` — the full spec, grid conventions, outcome summary,
//!   and coarse per-phase timers. Timers live only here, so the CSV files
//!   are byte-identical across reruns with the same seed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use lrsylv::io::{
    dense_matrix_from_string, matrix_market_from_string, read_low_rank_bundle, write_atomic,
    write_low_rank_bundle, write_tucker_bundle,
};
use lrsylv::kernels::svd;
use lrsylv::tucker::{
    hosvd_truncate, tensor_adaptive_solve, tensor_fixed_rank_solve, DenseTensor, TuckerTensor,
};
use lrsylv::{
    adaptive_solve, fixed_rank_solve, BugConfig, CoefficientOperator, ConvergenceTrace,
    DenseMatrix, Error, LowRankMatrix, Result, SeededRng, Termination, ThetaRule,
};

use crate::generators::{
    build_cosine_rhs_matrix, build_cosine_rhs_tensor, build_poisson_operator,
    build_random_low_rank_rhs, build_random_spectral_operator, build_random_tucker_rhs,
    grid_spacing, project_off_constant_matrix, project_off_constant_tensor,
};
use crate::oracle::{
    dense_singular_values, dirichlet_direct_tensor, matrix_direct_solution,
    matrix_oracle_allowed, mode_singular_values, periodic_direct_tensor,
    symmetric_pair_pinv_solution, tensor_oracle_allowed,
};
use crate::spec::{Boundary, ExperimentKind, ExperimentSpec, SolveMode, StopNorm};

/// Everything a caller might want to inspect after a run, mirroring the
/// files on disk.
#[derive(Debug)]
pub struct ExperimentOutcome {
    pub trace: ConvergenceTrace<f64>,
    pub final_ranks: Vec<usize>,
    /// Per-mode singular values of the final iterate (one entry for 2D).
    pub sigma_approx: Vec<Vec<f64>>,
    /// Per-mode singular values of the direct solution, when the oracle ran.
    pub sigma_direct: Option<Vec<Vec<f64>>>,
    /// `‖X − X_direct‖_F / ‖X_direct‖_F`, when the oracle ran.
    pub direct_relative_error: Option<f64>,
    /// Signed component removed from a periodic right-hand side.
    pub compatibility_residual: Option<f64>,
    /// Signed component along the constant direction removed from the
    /// computed solution of a singular periodic problem.
    pub nullspace_component: Option<f64>,
    pub output_dir: PathBuf,
}

enum Problem {
    Matrix {
        op_a: CoefficientOperator<f64>,
        op_b: CoefficientOperator<f64>,
        c: LowRankMatrix<f64>,
    },
    Tensor {
        ops: Vec<CoefficientOperator<f64>>,
        b: TuckerTensor<f64>,
    },
}

enum Solution {
    Matrix(LowRankMatrix<f64>),
    Tensor(TuckerTensor<f64>),
}

enum DirectSolution {
    Matrix(DenseMatrix<f64>),
    Tensor(DenseTensor<f64>),
}

#[derive(Default)]
struct Timers {
    build_ms: u128,
    solve_ms: u128,
    oracle_ms: u128,
    io_ms: u128,
}

/// Reads a coefficient matrix: Matrix Market when the file starts with a
/// `%` header (kept sparse), dense text otherwise.
pub fn read_operator_file(path: &Path) -> Result<CoefficientOperator<f64>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim_start().starts_with('%') {
        Ok(CoefficientOperator::from_csr(matrix_market_from_string(
            &text,
        )?))
    } else {
        CoefficientOperator::from_dense(dense_matrix_from_string(&text)?)
    }
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut text = String::with_capacity(header.len() + 1 + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    write_atomic(path, &text)
}

/// Checks that the eigenvalue-sum interval of the generated operators
/// stays away from zero, which guarantees unique solvability.
fn check_interval_solvability(spectra: &[Vec<f64>]) -> Result<()> {
    let mut lo = 0.0f64;
    let mut hi = 0.0f64;
    for lam in spectra {
        let (mut s_lo, mut s_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in lam {
            s_lo = s_lo.min(v);
            s_hi = s_hi.max(v);
        }
        lo += s_lo;
        hi += s_hi;
    }
    if lo <= 0.0 && hi >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "eigenvalue sums span [{lo:.3e}, {hi:.3e}], which contains zero; \
             increase the spectral distance"
        )));
    }
    Ok(())
}

fn build_problem(
    spec: &ExperimentSpec,
    rng_ops: &mut SeededRng,
    rng_rhs: &mut SeededRng,
) -> Result<(Problem, Option<f64>)> {
    match spec.kind {
        ExperimentKind::Poisson2d => {
            let op_a = build_poisson_operator(spec.n, spec.boundary)?;
            let op_b = build_poisson_operator(spec.n, spec.boundary)?;
            let c = build_cosine_rhs_matrix(spec.n, spec.boundary, spec.rhs_rank, rng_rhs)?;
            let (c, compat) = match spec.boundary {
                Boundary::Dirichlet => (c, None),
                Boundary::Periodic => {
                    let (projected, comp) = project_off_constant_matrix(&c)?;
                    (projected, Some(comp))
                }
            };
            Ok((Problem::Matrix { op_a, op_b, c }, compat))
        }
        ExperimentKind::Poisson3d => {
            let ops = (0..3)
                .map(|_| build_poisson_operator(spec.n, spec.boundary))
                .collect::<Result<Vec<_>>>()?;
            let b = build_cosine_rhs_tensor(spec.n, 3, spec.boundary, spec.rhs_rank, rng_rhs)?;
            let (b, compat) = match spec.boundary {
                Boundary::Dirichlet => (b, None),
                Boundary::Periodic => {
                    let (projected, comp) = project_off_constant_tensor(&b)?;
                    (projected, Some(comp))
                }
            };
            Ok((Problem::Tensor { ops, b }, compat))
        }
        ExperimentKind::Random2d => {
            let (op_a, lam_a) =
                build_random_spectral_operator(spec.n, 1, spec.spec_dist, rng_ops)?;
            let (op_b, lam_b) =
                build_random_spectral_operator(spec.n, 2, spec.spec_dist, rng_ops)?;
            check_interval_solvability(&[lam_a, lam_b])?;
            let c = build_random_low_rank_rhs(spec.n, spec.rhs_rank, rng_rhs)?;
            Ok((Problem::Matrix { op_a, op_b, c }, None))
        }
        ExperimentKind::Random3d => {
            let mut ops = Vec::with_capacity(3);
            let mut spectra = Vec::with_capacity(3);
            for i in 1..=3 {
                let (op, lam) =
                    build_random_spectral_operator(spec.n, i, spec.spec_dist, rng_ops)?;
                ops.push(op);
                spectra.push(lam);
            }
            check_interval_solvability(&spectra)?;
            let b = build_random_tucker_rhs(spec.n, 3, spec.rhs_rank, rng_rhs)?;
            Ok((Problem::Tensor { ops, b }, None))
        }
        ExperimentKind::FromFiles => {
            let inputs = spec
                .inputs
                .as_ref()
                .expect("validated: from-files carries input paths");
            let op_a = read_operator_file(&inputs.a)?;
            let op_b = read_operator_file(&inputs.b)?;
            let c = read_low_rank_bundle(&inputs.c)?;
            Ok((Problem::Matrix { op_a, op_b, c }, None))
        }
    }
}

/// Direct solution, when affordable for this problem family and size.
/// Returns the solution plus a label for the manifest, or a skip reason.
fn direct_solution(
    spec: &ExperimentSpec,
    problem: &Problem,
) -> Result<std::result::Result<(DirectSolution, &'static str), String>> {
    match problem {
        Problem::Matrix { op_a, op_b, c } => {
            let (m, n) = (op_a.dim(), op_b.dim());
            if !matrix_oracle_allowed(m, n, spec.oracle_cap) {
                return Ok(Err(format!(
                    "matrix oracle gated out at {m}x{n} with cap {}",
                    spec.oracle_cap
                )));
            }
            let dense_c = c.to_dense();
            if spec.kind == ExperimentKind::Poisson2d && spec.boundary == Boundary::Periodic {
                let x = symmetric_pair_pinv_solution(op_a, op_b, &dense_c)?;
                Ok(Ok((DirectSolution::Matrix(x), "eigen-pinv")))
            } else {
                match matrix_direct_solution(op_a, op_b, &dense_c) {
                    Ok(x) => Ok(Ok((DirectSolution::Matrix(x), "bartels-stewart"))),
                    Err(Error::Singular(msg)) => Ok(Err(format!(
                        "direct solve hit a singular system: {msg}"
                    ))),
                    Err(e) => Err(e),
                }
            }
        }
        Problem::Tensor { ops, b } => {
            let dims: Vec<usize> = ops.iter().map(|op| op.dim()).collect();
            if !tensor_oracle_allowed(&dims, spec.oracle_cap) {
                return Ok(Err(format!(
                    "tensor oracle gated out at {dims:?} with cap {}",
                    spec.oracle_cap
                )));
            }
            match spec.kind {
                ExperimentKind::Poisson3d => {
                    let dense_b = b.to_dense();
                    let x = match spec.boundary {
                        Boundary::Dirichlet => dirichlet_direct_tensor(spec.n, &dense_b)?,
                        Boundary::Periodic => periodic_direct_tensor(&ops[0], &dense_b)?,
                    };
                    Ok(Ok((DirectSolution::Tensor(x), "eigen-closed-form")))
                }
                _ => Ok(Err(
                    "no direct oracle for random tensor coefficients".into()
                )),
            }
        }
    }
}

fn theta_rule(
    spec: &ExperimentSpec,
    direct: &Option<(DirectSolution, &'static str)>,
) -> Result<(ThetaRule<f64>, String)> {
    if spec.theta_from_direct {
        let Some((direct, _)) = direct else {
            return Err(Error::InvalidArgument(
                "threshold-from-direct requested but the direct oracle did not run".into(),
            ));
        };
        let norm = match direct {
            DirectSolution::Matrix(x) => x.fro_norm(),
            DirectSolution::Tensor(x) => x.fro_norm(),
        };
        let theta = spec.theta_rel * norm;
        Ok((ThetaRule::Absolute(theta), format!("absolute({})", fmt_f(theta))))
    } else if spec.freeze_theta {
        Ok((
            ThetaRule::RelativeFrozen(spec.theta_rel),
            "relative-frozen".into(),
        ))
    } else {
        Ok((
            ThetaRule::RelativeToCurrent(spec.theta_rel),
            "relative-to-current".into(),
        ))
    }
}

fn make_config(spec: &ExperimentSpec, theta: ThetaRule<f64>) -> BugConfig<f64> {
    let mut config = BugConfig::new(spec.effective_start_rank());
    config.tol = spec.tol;
    config.max_iter = spec.max_iter;
    config.theta = theta;
    config.stop_on_scaled = matches!(spec.stop_norm, StopNorm::Scaled);
    config.seed = spec.seed;
    config.max_rank = spec.max_rank;
    config
}

fn termination_name(t: &Termination) -> &'static str {
    match t {
        Termination::ResidualBelowTol => "residual-below-tol",
        Termination::Stagnation => "stagnation",
        Termination::MaxIter => "max-iter",
    }
}

/// Runs the experiment described by `spec`; see the module docs for the
/// files it writes.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    std::fs::create_dir_all(&spec.output_dir)?;
    let mut timers = Timers::default();

    // Fixed fork order: operators first, right-hand side second, so adding
    // draws to one phase can never shift the other.
    let mut root = SeededRng::new(spec.seed);
    let mut rng_ops = root.fork();
    let mut rng_rhs = root.fork();

    let t0 = Instant::now();
    let (problem, compat) = build_problem(spec, &mut rng_ops, &mut rng_rhs)?;
    timers.build_ms = t0.elapsed().as_millis();

    let t0 = Instant::now();
    let direct_result = direct_solution(spec, &problem)?;
    timers.oracle_ms = t0.elapsed().as_millis();
    let (direct, oracle_note) = match direct_result {
        Ok((solution, label)) => (Some((solution, label)), None),
        Err(reason) => (None, Some(reason)),
    };

    let (theta, theta_label) = theta_rule(spec, &direct)?;
    let config = make_config(spec, theta);

    let t0 = Instant::now();
    let (solution, trace) = match &problem {
        Problem::Matrix { op_a, op_b, c } => {
            let (x, trace) = match spec.mode {
                SolveMode::Fixed => fixed_rank_solve(op_a, op_b, c, &config, None)?,
                SolveMode::Adaptive => adaptive_solve(op_a, op_b, c, &config, None)?,
            };
            (Solution::Matrix(x), trace)
        }
        Problem::Tensor { ops, b } => {
            let (x, trace) = match spec.mode {
                SolveMode::Fixed => tensor_fixed_rank_solve(ops, b, &config, None)?,
                SolveMode::Adaptive => tensor_adaptive_solve(ops, b, &config, None)?,
            };
            (Solution::Tensor(x), trace)
        }
    };
    timers.solve_ms = t0.elapsed().as_millis();

    // Periodic operators are singular, so the solution is determined only up
    // to the constant rank-one direction; the residual cannot see that
    // component. Canonicalize to the minimal-norm representative — the one
    // the pseudoinverse oracle produces — before reporting and writing.
    let periodic_singular = spec.boundary == Boundary::Periodic
        && matches!(
            spec.kind,
            ExperimentKind::Poisson2d | ExperimentKind::Poisson3d
        );
    let (solution, nullspace_component) = if periodic_singular {
        match solution {
            Solution::Matrix(x) => {
                let (projected, comp) = project_off_constant_matrix(&x)?;
                (Solution::Matrix(projected), Some(comp))
            }
            Solution::Tensor(x) => {
                let (projected, comp) = project_off_constant_tensor(&x)?;
                let theta = 1e-14 * projected.fro_norm();
                (Solution::Tensor(hosvd_truncate(&projected, theta)?), Some(comp))
            }
        }
    } else {
        (solution, None)
    };

    // Spectra of the final iterate, per mode.
    let sigma_approx: Vec<Vec<f64>> = match &solution {
        Solution::Matrix(x) => vec![svd(&x.s)?.sigma],
        Solution::Tensor(x) => mode_singular_values(&x.core)?,
    };
    let final_ranks: Vec<usize> = match &solution {
        Solution::Matrix(x) => vec![x.s.rows()],
        Solution::Tensor(x) => x.ranks(),
    };

    let t0 = Instant::now();
    let (sigma_direct, direct_relative_error) = match &direct {
        Some((DirectSolution::Matrix(xd), _)) => {
            let Solution::Matrix(x) = &solution else {
                unreachable!("matrix problems produce matrix solutions")
            };
            let diff = x.to_dense().sub(xd).fro_norm();
            (
                Some(vec![dense_singular_values(xd)?]),
                Some(diff / xd.fro_norm().max(f64::MIN_POSITIVE)),
            )
        }
        Some((DirectSolution::Tensor(xd), _)) => {
            let Solution::Tensor(x) = &solution else {
                unreachable!("tensor problems produce tensor solutions")
            };
            let diff = x.to_dense().sub(xd).fro_norm();
            (
                Some(mode_singular_values(xd)?),
                Some(diff / xd.fro_norm().max(f64::MIN_POSITIVE)),
            )
        }
        None => (None, None),
    };
    timers.oracle_ms += t0.elapsed().as_millis();

    let t0 = Instant::now();
    let rank_len = match &problem {
        Problem::Matrix { .. } => 1,
        Problem::Tensor { ops, .. } => ops.len(),
    };
    write_trace_csv(&spec.output_dir.join("trace.csv"), &trace, rank_len)?;
    write_sigma_csv(&spec.output_dir.join("sv_approx.csv"), &sigma_approx)?;
    if let Some(direct_sigma) = &sigma_direct {
        write_sigma_csv(&spec.output_dir.join("sv_direct.csv"), direct_sigma)?;
        write_distance_csv(
            &spec.output_dir.join("sv_distance.csv"),
            &sigma_approx,
            direct_sigma,
        )?;
    }
    match &solution {
        Solution::Matrix(x) => write_low_rank_bundle(&spec.output_dir.join("solution"), x)?,
        Solution::Tensor(x) => write_tucker_bundle(&spec.output_dir.join("solution"), x)?,
    }
    timers.io_ms = t0.elapsed().as_millis();

    let outcome = ExperimentOutcome {
        trace,
        final_ranks,
        sigma_approx,
        sigma_direct,
        direct_relative_error,
        compatibility_residual: compat,
        nullspace_component,
        output_dir: spec.output_dir.clone(),
    };
    let oracle_label = match (&direct, &oracle_note) {
        (Some((_, label)), _) => (*label).to_string(),
        (None, Some(reason)) => format!("skipped ({reason})"),
        (None, None) => "skipped".into(),
    };
    write_manifest(spec, &outcome, &theta_label, &oracle_label, &timers)?;
    Ok(outcome)
}

fn write_trace_csv(path: &Path, trace: &ConvergenceTrace<f64>, rank_len: usize) -> Result<()> {
    let mut header = String::from("iter,residual_fro,residual_scaled_fro");
    if rank_len == 1 {
        header.push_str(",rank");
    } else {
        for k in 0..rank_len {
            header.push_str(&format!(",rank_{k}"));
        }
    }
    let rows: Vec<String> = trace
        .records
        .iter()
        .map(|rec| {
            let mut row = format!(
                "{},{},{}",
                rec.iter,
                fmt_f(rec.residual),
                fmt_f(rec.residual_scaled)
            );
            for r in &rec.ranks {
                row.push_str(&format!(",{r}"));
            }
            row
        })
        .collect();
    write_csv(path, &header, &rows)
}

fn write_sigma_csv(path: &Path, sigma: &[Vec<f64>]) -> Result<()> {
    if sigma.len() == 1 {
        let rows: Vec<String> = sigma[0]
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{},{}", i + 1, fmt_f(*s)))
            .collect();
        write_csv(path, "index,sigma", &rows)
    } else {
        let mut rows = Vec::new();
        for (mode, list) in sigma.iter().enumerate() {
            for (i, s) in list.iter().enumerate() {
                rows.push(format!("{mode},{},{}", i + 1, fmt_f(*s)));
            }
        }
        write_csv(path, "mode,index,sigma", &rows)
    }
}

fn write_distance_csv(path: &Path, approx: &[Vec<f64>], direct: &[Vec<f64>]) -> Result<()> {
    if approx.len() == 1 {
        let mut rows = Vec::new();
        for (i, a) in approx[0].iter().enumerate() {
            let d = direct[0].get(i).copied().unwrap_or(0.0);
            rows.push(format!(
                "{},{},{},{}",
                i + 1,
                fmt_f(*a),
                fmt_f(d),
                fmt_f((a - d).abs())
            ));
        }
        write_csv(path, "index,sigma_approx,sigma_direct,distance", &rows)
    } else {
        let mut rows = Vec::new();
        for (mode, list) in approx.iter().enumerate() {
            for (i, a) in list.iter().enumerate() {
                let d = direct[mode].get(i).copied().unwrap_or(0.0);
                rows.push(format!(
                    "{mode},{},{},{},{}",
                    i + 1,
                    fmt_f(*a),
                    fmt_f(d),
                    fmt_f((a - d).abs())
                ));
            }
        }
        write_csv(path, "mode,index,sigma_approx,sigma_direct,distance", &rows)
    }
}

fn write_manifest(
    spec: &ExperimentSpec,
    outcome: &ExperimentOutcome,
    theta_label: &str,
    oracle_label: &str,
    timers: &Timers,
) -> Result<()> {
    let mut text = String::new();
    let grid_note = match spec.kind {
        ExperimentKind::Poisson2d | ExperimentKind::Poisson3d => format!(
            "grid = x_j = j*dx for j = 1..n on [0, 4*pi]; dx = {}\nboundary = {}\n",
            fmt_f(grid_spacing(spec.n, spec.boundary)),
            spec.boundary
        ),
        _ => String::new(),
    };
    text.push_str(&format!("kind = {}\n", spec.kind));
    if spec.kind != ExperimentKind::FromFiles {
        text.push_str(&format!("n = {}\n", spec.n));
    }
    text.push_str(&format!("d = {}\n", spec.d));
    text.push_str(&grid_note);
    text.push_str(&format!("rhs_rank = {}\n", spec.rhs_rank));
    if matches!(
        spec.kind,
        ExperimentKind::Random2d | ExperimentKind::Random3d
    ) {
        text.push_str(&format!("spec_dist = {}\n", spec.spec_dist));
    }
    text.push_str(&format!("tol = {}\n", fmt_f(spec.tol)));
    text.push_str(&format!("theta_rel = {}\n", fmt_f(spec.theta_rel)));
    text.push_str(&format!("theta_rule = {theta_label}\n"));
    text.push_str(&format!("max_iter = {}\n", spec.max_iter));
    text.push_str(&format!("seed = {}\n", spec.seed));
    text.push_str(&format!("mode = {}\n", spec.mode));
    text.push_str(&format!("stop_norm = {}\n", spec.stop_norm));
    text.push_str(&format!("start_rank = {}\n", spec.effective_start_rank()));
    match spec.max_rank {
        Some(r) => text.push_str(&format!("max_rank = {r}\n")),
        None => text.push_str("max_rank = ambient\n"),
    }
    text.push_str(&format!("oracle_cap = {}\n", spec.oracle_cap));
    text.push_str(&format!("oracle = {oracle_label}\n"));
    text.push_str(
        "rng = root seed -> fork(operators) -> fork(right-hand side); \
         the solver consumes the seed directly\n",
    );
    if let Some(c) = outcome.compatibility_residual {
        text.push_str(&format!("compatibility_residual = {}\n", fmt_f(c)));
    }
    if let Some(c) = outcome.nullspace_component {
        text.push_str(&format!("solution_nullspace_component_removed = {}\n", fmt_f(c)));
    }
    text.push_str(&format!(
        "termination = {}\n",
        termination_name(&outcome.trace.termination)
    ));
    text.push_str(&format!("iterations = {}\n", outcome.trace.iterations()));
    if let Some(r) = outcome.trace.final_residual() {
        text.push_str(&format!("final_residual_fro = {}\n", fmt_f(r)));
    }
    if let Some(r) = outcome.trace.final_scaled_residual() {
        text.push_str(&format!("final_residual_scaled = {}\n", fmt_f(r)));
    }
    text.push_str(&format!("final_ranks = {:?}\n", outcome.final_ranks));
    if let Some(err) = outcome.direct_relative_error {
        text.push_str(&format!("direct_relative_error = {}\n", fmt_f(err)));
    }
    text.push_str(&format!(
        "timings_ms = build {} / oracle {} / solve {} / io {}\n",
        timers.build_ms, timers.oracle_ms, timers.solve_ms, timers.io_ms
    ));
    write_atomic(&spec.output_dir.join("manifest.txt"), &text)
}
