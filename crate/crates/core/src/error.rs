use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("domain error: {0}")]
    Domain(&'static str),

    /// Ratio propagation produced non-finite values.
    #[error("propagation overflow at r = {r}")]
    PropagationOverflow { r: f64 },

    /// The propagated solution matrix became numerically singular.
    #[error("singular solution matrix at r = {r}")]
    SingularSolution { r: f64 },

    /// `det W+` vanished: the evaluation point is itself an S-matrix pole.
    #[error("evaluation point is an S-matrix pole (|det W+| = {det_abs:e})")]
    AtPole { det_abs: f64 },

    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },

    /// An iterate entered the guard disk around `u = 0`, where `E(u)` has a pole.
    #[error("iterate approached the u = 0 singularity")]
    DivergedToOrigin,

    #[error("Jacobian is rank deficient")]
    RankDeficient,

    #[error("corrector diverged")]
    CorrectorDiverged,

    /// Branch switching was requested at a point whose Jacobian has full rank.
    #[error("not a branch point (sigma2/sigma1 = {ratio:e})")]
    NotABranchPoint { ratio: f64 },

    #[error("branch switching seed did not converge")]
    SeedNotConverged,

    #[error("eigensolver did not converge")]
    EigenNoConvergence,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
