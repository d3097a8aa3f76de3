//! Kinetic BGK relaxation of hyperbolic conservation laws, integrated in
//! time with explicit projective methods.

// `!(x > 0.0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod cli;
pub mod harness;
pub mod model;
pub mod problems;
pub mod solver;
pub mod space;
pub mod spectrum;
pub mod timeint;
pub mod velocity;

use cli::ConfigError;
use harness::HarnessError;
use model::ModelError;
use problems::ProblemError;
use solver::SolverError;
use space::SpaceError;
use spectrum::SpectrumError;
use timeint::StepError;
use velocity::VelocityError;

/// Any failure of the library, tagged by the module it came from.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("problems: {0}")]
    Problem(#[from] ProblemError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("harness: {0}")]
    Harness(#[from] HarnessError),
    #[error("spectrum: {0}")]
    Spectrum(#[from] SpectrumError),
    #[error("space: {0}")]
    Space(#[from] SpaceError),
    #[error("velocity: {0}")]
    Velocity(#[from] VelocityError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Process exit codes of the command-line tool.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const INSTABILITY: i32 = 3;
    pub const NON_PHYSICAL: i32 = 4;
}

fn model_code(e: &ModelError) -> i32 {
    match e {
        ModelError::NonPhysicalState { .. } => exit::NON_PHYSICAL,
        ModelError::InvalidParameter(_) => exit::CONFIG,
        _ => exit::OTHER,
    }
}

fn space_code(e: &SpaceError) -> i32 {
    match e {
        SpaceError::Model(m) => model_code(m),
        SpaceError::UnsupportedOrder(_) | SpaceError::InvalidMesh(_) | SpaceError::InvalidEps(_) => exit::CONFIG,
        SpaceError::ShapeMismatch { .. } => exit::OTHER,
    }
}

fn step_code(e: &StepError) -> i32 {
    match e {
        StepError::NonFinite { .. } => exit::INSTABILITY,
        StepError::InvalidScheme(_) | StepError::InvalidTableau(_) => exit::CONFIG,
        StepError::Space(s) => space_code(s),
    }
}

fn velocity_code(e: &VelocityError) -> i32 {
    match e {
        VelocityError::Model(m) => model_code(m),
        VelocityError::InvalidSigma(_) | VelocityError::InvalidGrid { .. } => exit::CONFIG,
        VelocityError::ShapeMismatch { .. } => exit::OTHER,
    }
}

fn solver_code(e: &SolverError) -> i32 {
    match e {
        SolverError::Step(s) => step_code(s),
        SolverError::Space(s) => space_code(s),
        SolverError::Velocity(v) => velocity_code(v),
        SolverError::Model(m) => model_code(m),
        SolverError::BadTarget { .. } => exit::CONFIG,
    }
}

fn problem_code(e: &ProblemError) -> i32 {
    match e {
        ProblemError::UnknownProblem(_) | ProblemError::WrongModel { .. } => exit::CONFIG,
        ProblemError::Space(s) => space_code(s),
        ProblemError::Solver(s) => solver_code(s),
        _ => exit::OTHER,
    }
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Exit code: 2 configuration, 3 numerical instability, 4 non-physical
    /// state, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => exit::CONFIG,
            Error::Problem(e) => problem_code(e),
            Error::Solver(e) => solver_code(e),
            Error::Harness(e) => match e {
                HarnessError::InvalidSweep(_) | HarnessError::NoReference(_) => exit::CONFIG,
                HarnessError::Run { source, .. } => solver_code(source),
                HarnessError::Problem(p) => problem_code(p),
                HarnessError::Solver(s) => solver_code(s),
                HarnessError::Space(s) => space_code(s),
                HarnessError::ShapeMismatch { .. } => exit::OTHER,
            },
            Error::Spectrum(e) => match e {
                SpectrumError::NoStableK { .. } => exit::INSTABILITY,
                SpectrumError::SubcharacteristicViolation { .. } | SpectrumError::InvalidInput(_) => exit::CONFIG,
                SpectrumError::Space(s) => space_code(s),
                SpectrumError::Model(m) => model_code(m),
            },
            Error::Space(e) => space_code(e),
            Error::Velocity(e) => velocity_code(e),
            Error::Io { .. } => exit::OTHER,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_innermost_cause() {
        let np = ModelError::NonPhysicalState {
            model: "euler1d",
            reason: "negative density",
            state: vec![-1.0, 0.0, 1.0],
        };
        let e = Error::Harness(HarnessError::Run {
            value: 0.1,
            source: SolverError::Step(StepError::Space(SpaceError::Model(np.clone()))),
        });
        assert_eq!(e.exit_code(), exit::NON_PHYSICAL);
        let e = Error::Problem(ProblemError::Solver(Box::new(SolverError::Model(np))));
        assert_eq!(e.exit_code(), exit::NON_PHYSICAL);
        let e = Error::Solver(SolverError::Step(StepError::NonFinite { outer: 3, step: 1 }));
        assert_eq!(e.exit_code(), exit::INSTABILITY);
        assert_eq!(Error::Spectrum(SpectrumError::NoStableK { max_k: 10 }).exit_code(), exit::INSTABILITY);
        assert_eq!(Error::Config(ConfigError::Validation(vec![])).exit_code(), exit::CONFIG);
        let e = Error::Problem(ProblemError::UnknownProblem("x".into()));
        assert!(e.to_string().starts_with("problems: "));
    }
}
