//! Experiment descriptions: which problem family to build, at what size,
//! and how to run and report the solve.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lrsylv::{Error, Result};

/// Largest per-side dimension for which the dense direct oracle may ever
/// run, regardless of the configured cap.
pub const ORACLE_SIDE_LIMIT: usize = 2048;

/// Largest dense entry count the oracle is allowed to materialize.
pub const ORACLE_ENTRY_LIMIT: usize = 2048 * 2048;

/// Problem family of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// 2D discrete Laplacian with a trigonometric right-hand side.
    Poisson2d,
    /// 3D discrete Laplacian with a trigonometric right-hand side.
    Poisson3d,
    /// Random spectrally separated coefficients, 2D.
    Random2d,
    /// Random spectrally separated coefficients, 3D.
    Random3d,
    /// Coefficients and right-hand side loaded from files (2D only).
    FromFiles,
}

impl ExperimentKind {
    /// Mode count implied by the family.
    pub fn dimension(self) -> usize {
        match self {
            ExperimentKind::Poisson2d | ExperimentKind::Random2d | ExperimentKind::FromFiles => 2,
            ExperimentKind::Poisson3d | ExperimentKind::Random3d => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Poisson2d => "poisson2d",
            ExperimentKind::Poisson3d => "poisson3d",
            ExperimentKind::Random2d => "random2d",
            ExperimentKind::Random3d => "random3d",
            ExperimentKind::FromFiles => "from-files",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "poisson2d" => Ok(ExperimentKind::Poisson2d),
            "poisson3d" => Ok(ExperimentKind::Poisson3d),
            "random2d" => Ok(ExperimentKind::Random2d),
            "random3d" => Ok(ExperimentKind::Random3d),
            "from-files" => Ok(ExperimentKind::FromFiles),
            other => Err(format!(
                "unknown experiment kind {other:?}; expected poisson2d, poisson3d, \
                 random2d, random3d, or from-files"
            )),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Boundary handling for the discrete Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

impl FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "dirichlet" => Ok(Boundary::Dirichlet),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(format!(
                "unknown boundary {other:?}; expected dirichlet or periodic"
            )),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Dirichlet => "dirichlet",
            Boundary::Periodic => "periodic",
        })
    }
}

/// Which solver driver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    Fixed,
    Adaptive,
}

impl FromStr for SolveMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fixed" => Ok(SolveMode::Fixed),
            "adaptive" => Ok(SolveMode::Adaptive),
            other => Err(format!(
                "unknown solve mode {other:?}; expected fixed or adaptive"
            )),
        }
    }
}

impl fmt::Display for SolveMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMode::Fixed => "fixed",
            SolveMode::Adaptive => "adaptive",
        })
    }
}

/// Which residual norm the stopping test compares against the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopNorm {
    /// Plain Frobenius norm.
    Fro,
    /// Frobenius norm divided by the square root of the entry count.
    Scaled,
}

impl FromStr for StopNorm {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "fro" => Ok(StopNorm::Fro),
            "scaled" => Ok(StopNorm::Scaled),
            other => Err(format!(
                "unknown stop norm {other:?}; expected fro or scaled"
            )),
        }
    }
}

impl fmt::Display for StopNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopNorm::Fro => "fro",
            StopNorm::Scaled => "scaled",
        })
    }
}

/// File inputs for the `from-files` family: coefficient matrices `A` and
/// `B` (Matrix Market or dense text) and a low-rank bundle for `C`.
#[derive(Debug, Clone)]
pub struct InputFiles {
    pub a: PathBuf,
    pub b: PathBuf,
    pub c: PathBuf,
}

/// Full description of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    /// Per-mode grid size (ignored for `from-files`).
    pub n: usize,
    /// Mode count; must agree with what `kind` implies.
    pub d: usize,
    pub boundary: Boundary,
    /// Target (multilinear) rank of the generated right-hand side.
    pub rhs_rank: usize,
    /// Gap parameter of the random spectral families.
    pub spec_dist: f64,
    pub tol: f64,
    /// Relative truncation factor for the rank-adaptive driver.
    pub theta_rel: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub mode: SolveMode,
    pub output_dir: PathBuf,
    /// Starting rank: defaults to 1 for adaptive runs and to `rhs_rank`
    /// for fixed-rank runs.
    pub start_rank: Option<usize>,
    pub stop_norm: StopNorm,
    /// Per-side size limit below which the direct oracle runs.
    pub oracle_cap: usize,
    /// Set the truncation threshold from the direct solution's singular
    /// values instead of the iterate's (requires the oracle).
    pub theta_from_direct: bool,
    /// Freeze the truncation threshold at its first-iteration value.
    pub freeze_theta: bool,
    /// Hard rank cap for the adaptive driver.
    pub max_rank: Option<usize>,
    pub inputs: Option<InputFiles>,
}

impl ExperimentSpec {
    /// A spec with the documented defaults for the given family.
    pub fn new(kind: ExperimentKind, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            kind,
            n: 128,
            d: kind.dimension(),
            boundary: Boundary::Dirichlet,
            rhs_rank: 7,
            spec_dist: 10.0,
            tol: 1e-8,
            theta_rel: 1e-10,
            max_iter: 100,
            seed: 0,
            mode: SolveMode::Adaptive,
            output_dir: output_dir.into(),
            start_rank: None,
            stop_norm: StopNorm::Scaled,
            oracle_cap: 1024,
            theta_from_direct: false,
            freeze_theta: false,
            max_rank: None,
            inputs: None,
        }
    }

    /// Starting rank actually used by the drivers.
    pub fn effective_start_rank(&self) -> usize {
        self.start_rank.unwrap_or(match self.mode {
            SolveMode::Fixed => self.rhs_rank,
            SolveMode::Adaptive => 1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != ExperimentKind::FromFiles && self.n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid size must be at least 2, got {}",
                self.n
            )));
        }
        if self.d != self.kind.dimension() {
            return Err(Error::InvalidArgument(format!(
                "kind {} implies {} modes but d = {} was given",
                self.kind,
                self.kind.dimension(),
                self.d
            )));
        }
        if self.rhs_rank < 1 {
            return Err(Error::InvalidArgument(
                "right-hand-side rank must be at least 1".into(),
            ));
        }
        if !(self.theta_rel >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation factor must be non-negative, got {}",
                self.theta_rel
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument(
                "iteration budget must be at least 1".into(),
            ));
        }
        if self.oracle_cap > ORACLE_SIDE_LIMIT {
            return Err(Error::InvalidArgument(format!(
                "oracle cap {} exceeds the hard per-side limit {}",
                self.oracle_cap, ORACLE_SIDE_LIMIT
            )));
        }
        if self.kind == ExperimentKind::FromFiles && self.inputs.is_none() {
            return Err(Error::InvalidArgument(
                "from-files experiments need input paths for A, B, and C".into(),
            ));
        }
        if let Some(r) = self.start_rank {
            if r < 1 {
                return Err(Error::InvalidArgument(
                    "starting rank must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}
