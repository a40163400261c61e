//! Error taxonomy shared by all modules.

use thiserror::Error;

/// Everything that can go wrong while building spectra, maps, or phases.
///
/// Domain failures (broken PT phase, degeneracies, coarse grids) are kept
/// distinct from malformed input so callers can map them to different exit
/// codes.
#[derive(Debug, Error)]
pub enum PtError {
    #[error("matrix entries must be finite: {context}")]
    NonFinite { context: String },

    #[error("dimension mismatch: {context}")]
    ShapeMismatch { context: String },

    #[error("eigensolver did not converge (residual {residual:.3e})")]
    NonConvergence { residual: f64 },

    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("matrix is singular or ill-conditioned (condition estimate {condition:.3e})")]
    SingularMatrix { condition: f64 },

    #[error("metric is not positive definite at {context} (smallest eigenvalue {min_eigenvalue:.3e})")]
    MetricNotPositive {
        context: String,
        min_eigenvalue: f64,
    },

    #[error("Hamiltonian is not pseudo-Hermitian with the supplied metric (relative residual {residual:.3e})")]
    NotPseudoHermitian { residual: f64 },

    #[error("spectrum is degenerate (level gap {gap:.3e} below threshold {threshold:.3e})")]
    DegenerateSpectrum { gap: f64, threshold: f64 },

    #[error("PT symmetry is broken at this parameter point: {detail}")]
    BrokenPTPhase { detail: String },

    #[error("level correspondence is ambiguous between samples {sample} and {next} (best overlap {overlap:.3e})")]
    LevelOrderSwap {
        sample: usize,
        next: usize,
        overlap: f64,
    },

    #[error("path sampling too coarse: {context} (residual {residual:.3e})")]
    StepTooCoarse { context: String, residual: f64 },

    #[error("near-zero overlap |<Phi_{level}(t_{sample})|Psi_{level}(t_{next})>| = {magnitude:.3e}")]
    ZeroOverlap {
        level: usize,
        sample: usize,
        next: usize,
        magnitude: f64,
    },

    #[error("no component of level {level} stays away from zero along the path (best minimum relative magnitude {magnitude:.3e}); a continuous phase reference cannot be chosen")]
    NoStableGauge { level: usize, magnitude: f64 },

    #[error("imaginary residual {residual:.3e} in a phase that must be real (non-proper map?)")]
    ImaginaryLeak { residual: f64 },

    #[error("adiabaticity breakdown: leaked population {leak:.3e} exceeds 0.01")]
    AdiabaticityBreakdown { leak: f64 },

    #[error("operation requires a two-level system, got dimension {dim}")]
    NotTwoLevel { dim: usize },

    #[error("closed-form result unavailable for these parameters: {context}")]
    UnsupportedParameters { context: String },

    #[error("invalid path: {context}")]
    InvalidPath { context: String },

    #[error("unknown model '{name}'")]
    UnknownModel { name: String },

    #[error("invalid model parameters: {context}")]
    InvalidParameters { context: String },

    #[error("invalid configuration: {context}")]
    InvalidConfig { context: String },
}

impl PtError {
    /// True for failures caused by the physics of the input (broken phase,
    /// degeneracy, coarse sampling) rather than malformed requests.
    pub fn is_domain_failure(&self) -> bool {
        !matches!(
            self,
            PtError::InvalidConfig { .. }
                | PtError::UnknownModel { .. }
                | PtError::InvalidParameters { .. }
                | PtError::InvalidPath { .. }
                | PtError::ShapeMismatch { .. }
                | PtError::NonFinite { .. }
        )
    }
}
