//! Scenario files, RNSF1 field dumps, CSV reports and the subcommands of the
//! `rotflow` tool, on top of `rotflow-core`.

pub mod commands;
pub mod dump;
pub mod report;
pub mod scenario;

use rotflow_core::propagator::CommutationReport;

/// Why a command stopped. Each variant maps to one exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Validation(String),
    #[error("{}", commutator_text(.0))]
    NonCommuting(CommutationReport),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    NotConverged(String),
}

fn commutator_text(r: &CommutationReport) -> String {
    let mut s = format!(
        "matrix family does not commute: worst relative commutator {:e} (tolerance {:e})",
        r.worst, r.tol
    );
    for (t, u, rel) in r.violations.iter().take(10) {
        s.push_str(&format!("\n  [M({t}), M({u})]: {rel:e}"));
    }
    if r.violations.len() > 10 {
        s.push_str(&format!("\n  ... {} more pairs", r.violations.len() - 10));
    }
    s
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
pub const EXIT_NOT_CONVERGED: u8 = 4;

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Validation(_) | Self::NonCommuting(_) => EXIT_VALIDATION,
            Self::Numerical(_) => EXIT_NUMERICAL,
            Self::NotConverged(_) => EXIT_NOT_CONVERGED,
        }
    }
}

impl From<rotflow_core::Error> for Failure {
    fn from(e: rotflow_core::Error) -> Self {
        use rotflow_core::Error as E;
        match e {
            E::NonFinite(_)
            | E::QuadratureDiverged { .. }
            | E::Singular(_)
            | E::NotSymmetric { .. }
            | E::NotPositiveDefinite
            | E::NonFiniteIterate { .. } => Self::Numerical(e.to_string()),
            E::DimensionMismatch { .. }
            | E::UnsupportedDimension(_)
            | E::InvalidGrid(_)
            | E::GridMismatch
            | E::InvalidArgument(_)
            | E::TimeOrder { .. }
            | E::NotSolenoidal { .. }
            | E::NonCommuting { .. } => Self::Validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::Validation(format!("csv: {e}"))
    }
}
