//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Truncation interval carries no usable probability mass.
    #[error("degenerate truncation support: CDF mass {mass:.3e} on [{lower}, {upper}]")]
    DegenerateSupport { mass: f64, lower: f64, upper: f64 },

    /// Cholesky factorization of a posterior precision matrix failed.
    #[error(
        "precision matrix not positive definite (dim {dim}, eigenvalue range \
         [{min_eigen:.3e}, {max_eigen:.3e}])"
    )]
    NotPositiveDefinite {
        dim: usize,
        min_eigen: f64,
        max_eigen: f64,
    },

    /// No gamma in the search bracket satisfies the percentile constraint.
    #[error(
        "elicitation infeasible: best residual {residual:.3e} at gamma = {gamma:.6} \
         (feasibility requires |residual| < 0.05)"
    )]
    ElicitationInfeasible { gamma: f64, residual: f64 },

    /// The gamma search converged onto the near-uniform boundary gamma -> 1.
    #[error(
        "elicited prior degenerates to the gamma -> 1 boundary \
         (gamma = {gamma:.8}, lambda = {lambda:.8}, residual {residual:.3e}); \
         the requested spec has no interior-mode solution"
    )]
    GammaAtBoundary {
        gamma: f64,
        lambda: f64,
        residual: f64,
    },

    /// The count correction produced a nonpositive denominator.
    #[error(
        "site {site_id}: corrected denominator not positive \
         (N = {n_obs}, delta2 = {delta2}, delta3 = {delta3})"
    )]
    SiteDegenerate {
        site_id: String,
        n_obs: u64,
        delta2: u64,
        delta3: u64,
    },

    /// Convergence diagnostics are undefined (e.g. zero-variance chain).
    #[error("diagnostic undefined: {0}")]
    DiagnosticUndefined(String),

    /// Malformed or inconsistent user-supplied inputs.
    #[error("input error: {0}")]
    Input(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures of numerical machinery rather than of input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateSupport { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::ElicitationInfeasible { .. }
                | Error::GammaAtBoundary { .. }
                | Error::SiteDegenerate { .. }
                | Error::DiagnosticUndefined(_)
        )
    }
}
