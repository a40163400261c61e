//! Numerical tolerances used by the spectral and phase machinery.
//!
//! Every threshold is relative to the norm of the matrix it guards unless
//! stated otherwise. Defaults are chosen for double precision at the small
//! matrix dimensions this crate targets; all of them can be overridden per
//! system.

/// Tolerance bundle carried by a [`crate::ptsystem::PTSystem`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Eigenpair residual bound for the general eigensolver, relative to the
    /// Frobenius norm of the input.
    pub eig_residual: f64,
    /// Hermiticity residual accepted by `hermitian_sqrt` and friends.
    pub hermiticity: f64,
    /// Smallest eigenvalue (relative) below which a metric counts as
    /// non-positive.
    pub positivity: f64,
    /// Pseudo-Hermiticity residual `|WH - H^dag W| / |H|` accepted lazily.
    pub pseudo_hermiticity: f64,
    /// Biorthonormality residual `max |<Phi_m|Psi_n> - delta_mn|`.
    pub biorthonormality: f64,
    /// Completeness residual `|sum_n |Psi_n><Phi_n| - 1|`.
    pub completeness: f64,
    /// Residual on the left-state relation `|Phi_n> = W |Psi_n>`.
    pub left_state: f64,
    /// Relative level gap below which the spectrum counts as degenerate.
    pub degeneracy: f64,
    /// Relative imaginary part above which an energy marks the broken phase.
    pub broken_phase: f64,
    /// Properness residual accepted for an ODE-corrected similarity map.
    pub properness: f64,
    /// Unitarity drift of the gauge rotor before re-unitarization kicks in.
    pub unitarity: f64,
    /// Wilson-segment overlap magnitude below which the loop is rejected.
    pub zero_overlap: f64,
    /// Imaginary residual accepted in phases that must come out real.
    pub imaginary_leak: f64,
    /// Overlap magnitude below which level matching counts as ambiguous.
    pub match_ambiguity: f64,
    /// Condition-number estimate above which `inverse` refuses to answer.
    pub condition_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eig_residual: 1e-10,
            hermiticity: 1e-10,
            positivity: 1e-12,
            pseudo_hermiticity: 1e-10,
            biorthonormality: 1e-10,
            completeness: 1e-9,
            left_state: 1e-9,
            degeneracy: 1e-8,
            broken_phase: 1e-8,
            properness: 1e-4,
            unitarity: 1e-8,
            zero_overlap: 1e-6,
            imaginary_leak: 1e-6,
            match_ambiguity: 0.5,
            condition_max: 1e12,
        }
    }
}
