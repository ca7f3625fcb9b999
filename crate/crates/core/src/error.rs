use thiserror::Error;

pub type Result<T> = std::result::Result<T, PdcError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PdcError {
    #[error("photon-number expectation {mean:e} is below the vacuum floor; g2 is undefined")]
    VacuumStatistics { mean: f64 },

    #[error("pump carries no photons; the single-mode series is undefined")]
    VacuumPump,

    #[error("composite dimension {dim} exceeds the limit {limit} (set PDC_LAB_MAX_DIM to raise it)")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("mode index {index} is out of range for a layout of {modes} modes")]
    InvalidModeIndex { index: usize, modes: usize },

    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("series order {order} is not tabulated (maximum is 4)")]
    UnsupportedOrder { order: u32 },

    #[error("series normalization {norm:e} is not positive; theta is outside the series' validity")]
    NegativeNorm { norm: f64 },

    #[error("series expression diverged: {reason}")]
    SeriesDiverged { reason: String },

    #[error("operation needs a pure pump state; mixtures only support diagonal statistics")]
    MixedPumpUnsupported,

    #[error("operation is not defined for this process: {reason}")]
    ProcessMismatch { reason: String },

    #[error("eigensolver failed: {reason}")]
    Eigensolver { reason: String },

    #[error("value overflowed f64 range: {what}")]
    Overflow { what: String },

    #[error("density matrix is not physical: {reason}")]
    UnphysicalState { reason: String },

    #[error("shape mismatch: {reason}")]
    ShapeMismatch { reason: String },
}

impl PdcError {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            PdcError::NonPositiveParameter { .. }
                | PdcError::InvalidParameter { .. }
                | PdcError::UnsupportedOrder { .. }
                | PdcError::InvalidModeIndex { .. }
                | PdcError::DimensionOverflow { .. }
                | PdcError::MixedPumpUnsupported
                | PdcError::ProcessMismatch { .. }
                | PdcError::ShapeMismatch { .. }
        )
    }
}
