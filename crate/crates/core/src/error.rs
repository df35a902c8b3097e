use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument {0} outside the open interval (-1, 1)")]
    Domain(f64),
    #[error("derivative order {0} is not supported")]
    UnsupportedOrder(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("boundary condition: {0}")]
    Boundary(String),
    #[error("neumann problem incompatible: mean {mean:e} exceeds tolerance for norm {norm:e}")]
    Compatibility { mean: f64, norm: f64 },
    #[error("nonpositive viscosity sample {0}")]
    NonpositiveViscosity(f64),
    #[error(
        "stokes solve did not converge after {outer} outer iterations \
         (momentum residual {mom_residual:e}, divergence {div_residual:e})"
    )]
    StokesNonConvergence { outer: usize, mom_residual: f64, div_residual: f64 },
    #[error("phase solve residual {0:e} above tolerance")]
    PhaseResidual(f64),
    #[error("picard iteration diverged after {iterations} iterations (last ratio {ratio}); reduce dt")]
    PicardDivergence { iterations: usize, ratio: f64 },
    #[error("phase field left the admissible range: max |phi + psi| = {value} >= {limit}")]
    LinfExcursion { value: f64, limit: f64 },
    #[error("step {step} (t = {t}): {source}")]
    AtStep {
        step: usize,
        t: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("newton iteration for the equilibrium profile failed: {0}")]
    Newton(String),
    #[error("scenario: {0}")]
    Scenario(String),
    #[error("snapshot format: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Innermost error, unwrapping step context.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
