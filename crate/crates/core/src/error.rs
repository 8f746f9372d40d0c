use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not in the se2(3) pattern (residual {residual:e})")]
    NotInAlgebra { residual: f64 },

    #[error("rotation angle {angle} rad is outside the logarithm chart (must be < pi)")]
    OutsideChart { angle: f64 },

    #[error("block is {distance:e} away from the nearest rotation")]
    NotARotation { distance: f64 },

    #[error("rotation block has negative determinant")]
    Reflection,

    #[error("singular linear system: {0}")]
    Singular(&'static str),

    #[error("pair (A, B) is not stabilizable: Hamiltonian has eigenvalues on the imaginary axis")]
    NotStabilizable,

    #[error("closed-loop matrix is not Hurwitz (max real part {max_real:e})")]
    NotHurwitz { max_real: f64 },

    #[error("all disturbance bounds are zero: the invariant set collapses to the origin, use a plain Lyapunov analysis instead")]
    ZeroDisturbance,

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("certification infeasible: {0}")]
    Infeasible(String),

    #[error("thrust vanishes (free fall) at t = {t} s")]
    FreeFall { t: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("{stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
}

impl Error {
    /// Tags an error with the pipeline stage that raised it.
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage { stage, source: Box::new(self) }
    }

    /// The innermost error, with stage tags removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    /// `true` for errors meaning no certificate exists for valid inputs.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self.root(),
            Error::NotStabilizable
                | Error::NotHurwitz { .. }
                | Error::ZeroDisturbance
                | Error::Infeasible(_)
                | Error::OutsideChart { .. }
                | Error::Singular(_)
                | Error::NotPositiveDefinite(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
