use alloc::boxed::Box;
use alloc::string::String;

use crate::affine::SolveReport;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("characteristic function vanishes at omega = {omega} (|cf| = {modulus:e})")]
    VanishingCf { omega: f64, modulus: f64 },

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {error:e})")]
    QuadratureNonConvergence { subdivisions: usize, error: f64 },

    #[error("missing assumption parameters: {0}")]
    MissingParameters(&'static str),

    #[error("empty sample")]
    EmptySample,

    #[error("empty bandwidth grid")]
    EmptyGrid,

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("({alpha}, {beta}) is not in the {expected} zone")]
    Zone {
        alpha: f64,
        beta: f64,
        expected: &'static str,
    },

    #[error("bin edges must be strictly increasing and at least one bin is required")]
    BinOrdering,

    #[error("every observation fell outside the binning range")]
    AllDropped,

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("nonpositive argument to logarithm in the affinity constraint")]
    NonpositiveArgument,

    #[error("solver did not converge (best objective {:.6e})", .0.s_bar)]
    NonConvergence(Box<SolveReport>),
}
