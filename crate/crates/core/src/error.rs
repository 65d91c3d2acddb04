use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// Rejected model parameters (zero hopping, wrong lengths, non-finite values).
    #[error("invalid sample: {0}")]
    InvalidSample(String),

    /// Rejected lead description.
    #[error("invalid lead: {0}")]
    InvalidLead(String),

    /// Argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Energy too close to a band edge, where the transfer eigendata degenerate.
    #[error("energy {energy} is within the band-edge window (|tr T_L| = {trace})")]
    BandEdge { energy: f64, trace: f64 },

    /// In-band energy where the upper-right transfer entry vanishes.
    #[error("degenerate pivot b(E) = {pivot} at energy {energy}")]
    DegeneratePivot { energy: f64, pivot: f64 },

    /// Energy is (numerically) an eigenvalue of the Dirichlet sample.
    #[error("energy {0} is an eigenvalue of the finite sample")]
    SampleEigenvalue(f64),

    /// Vanishing denominator or singular linear system at this energy.
    #[error("singular energy {0}")]
    SingularEnergy(f64),

    /// Linear solve residual above its bound.
    #[error("solver residual {residual:e} exceeds bound {bound:e} at energy {energy}")]
    Residual {
        energy: f64,
        residual: f64,
        bound: f64,
    },

    #[error("eigensolver did not converge")]
    Eigensolver,

    /// A transmittance left [0, 1] by more than the rounding allowance.
    #[error("transmittance {value} at energy {energy} is outside [0, 1]")]
    Clamp { energy: f64, value: f64 },

    /// Adaptive quadrature stopped before reaching its tolerance.
    #[error("quadrature did not converge: partial value {partial:?}, error estimate {error_estimate:e}")]
    Quadrature {
        partial: Vec<f64>,
        error_estimate: f64,
    },

    /// A computed quantity violated a guaranteed property.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Malformed tabulated input, with a 1-based line number.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
