//! Experiment layer on top of the `lrsylv` solvers: problem generators
//! (discrete Laplacians, trigonometric and random low-rank right-hand
//! sides, spectrally controlled random operators), direct-solution oracles
//! for cross-checking, and a driver that runs one experiment end to end and
//! writes its convergence trace and singular-value spectra as CSV.
//!
//! Everything is deterministic: a single `u64` seed fixes the operators,
//! the right-hand side, and the solver's internal randomness, so rerunning
//! an experiment reproduces its output files byte for byte.

pub mod experiment;
pub mod generators;
pub mod oracle;
pub mod spec;

pub use experiment::{run_experiment, ExperimentOutcome};
pub use spec::{Boundary, ExperimentKind, ExperimentSpec, InputFiles, SolveMode, StopNorm};
