use thiserror::Error;

pub type Result<T> = std::result::Result<T, WignerError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WignerError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error(
        "axis {axis}: domain extent {omega_extent:e} m exceeds half the coherence length \
         ({half_length:e} m); the state must vanish outside a domain no larger than L/2"
    )]
    DomainExceedsCoherence {
        axis: usize,
        omega_extent: f64,
        half_length: f64,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("imaginary residue {residue:e} exceeds tolerance {tolerance:e}")]
    ImaginaryResidue { residue: f64, tolerance: f64 },

    #[error("field sample requested at {point:?} outside the sampled window (axis {axis})")]
    FieldCoverage { point: [f64; 3], axis: usize },

    #[error("time step violates the advective limit: courant number {courant:.4} > {cap}")]
    Cfl { courant: f64, cap: f64 },

    #[error("instability at step {step}: norm grew by a factor {growth:.3e} in one step")]
    Unstable { step: usize, growth: f64 },

    #[error("resolvent series did not converge in {iterations} iterations (last residual {:e})", residuals.last().copied().unwrap_or(f64::NAN))]
    NotConverged {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl WignerError {
    pub(crate) fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        WignerError::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
