//! Thermal ensembles and the interferometric geometric phase (IGP).
//!
//! A pseudo-Hermitian thermal state is carried by the biorthogonal projectors
//! `rho = sum_n w_n |Psi_n><Phi_n|` with Boltzmann weights `w_n`. Driving the
//! ensemble around a loop multiplies each level's projector by its complex
//! loop-phase factor `e^{i theta1_n}`; the IGP is the argument of the
//! weighted sum of those factors,
//!
//! ```text
//! theta_G = arg [ sum_n w_n e^{i theta1_n} ].
//! ```
//!
//! The imaginary parts of `theta1_n` re-weight the ensemble ("effective
//! thermal weights"); where the re-weighted sum passes through zero the IGP
//! jumps — a finite-temperature geometric phase transition.
//!
//! Open paths use the partial Wilson factors `e^{-L_n(t)}` together with the
//! return amplitudes `nu_n(t) = <Phi_n(0)|Psi_n(t)>`; the combination is
//! gauge-invariant sample by sample and reduces exactly to the loop formula
//! at closure.

use num_complex::Complex64;

use crate::error::PtError;
use crate::numkernel::{inner, ComplexMatrix, ComplexVector};
use crate::path::LoopPath;
use crate::ptsystem::{BiorthogonalSpectrum, PTSystem};
use crate::wilson::{cumulative_log_holonomy, wrap_to_two_pi};
use crate::Result;

/// Largest admissible inverse temperature; beyond this the ensemble is a
/// ground-state projector to round-off and the scan grids lose meaning.
pub const BETA_MAX: f64 = 1.0e4;

/// Ratio deadband around one inside which the effective-weight comparison is
/// declared critical.
pub const REGIME_DEADBAND: f64 = 1.0e-9;

/// Relative amplitude threshold under which the interferometric signal is
/// treated as extinguished (the phase is about to jump).
pub const CRITICAL_AMPLITUDE_RATIO: f64 = 1.0e-6;

/// Effective-temperature regime of a driven thermal ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// The effective weight of the top level stays below the bottom level's.
    EffectivePositiveT,
    /// Loop amplification inverts the effective population.
    EffectiveNegativeT,
    /// The interferometric amplitude is extinguished (or the effective
    /// weights balance exactly): the IGP is about to jump.
    Critical,
}

impl Regime {
    /// Stable lower-case label used by serializers.
    pub fn label(&self) -> &'static str {
        match self {
            Regime::EffectivePositiveT => "effective-positive-t",
            Regime::EffectiveNegativeT => "effective-negative-t",
            Regime::Critical => "critical",
        }
    }
}

/// A Boltzmann ensemble over one parameter point's biorthogonal spectrum.
#[derive(Debug, Clone)]
pub struct ThermalState {
    pub beta: f64,
    pub spectrum: BiorthogonalSpectrum,
    pub weights: Vec<f64>,
}

impl ThermalState {
    /// Density matrix `sum_n w_n |Psi_n><Phi_n|`.
    pub fn density_matrix(&self) -> ComplexMatrix {
        let dim = self.spectrum.right[0].dim();
        let mut rho = ComplexMatrix::zeros(dim);
        for (n, w) in self.weights.iter().enumerate() {
            let term = ComplexMatrix::outer(&self.spectrum.right[n], &self.spectrum.left[n]);
            rho = rho.add(&term.scale(Complex64::new(*w, 0.0)));
        }
        rho
    }

    /// Trace in the biorthogonal sense: `sum_n <Phi_n| rho |Psi_n>`.
    pub fn biorthogonal_trace(&self, rho: &ComplexMatrix) -> Complex64 {
        let mut tr = Complex64::new(0.0, 0.0);
        for n in 0..self.weights.len() {
            tr += inner(&self.spectrum.left[n], &rho.matvec(&self.spectrum.right[n]));
        }
        tr
    }
}

/// The IGP of one driven ensemble, with the quantities that explain it.
#[derive(Debug, Clone)]
pub struct IGPReport {
    /// `arg` of the amplitude, mapped to `[0, 2pi)`.
    pub theta_g: f64,
    /// The pre-arg weighted sum of per-level phase factors.
    pub amplitude: Complex64,
    /// Per-level complex loop-phase factors (thermal weights not included).
    pub level_factors: Vec<Complex64>,
    /// Normalized effective weights after loop amplification.
    pub effective_weights: Vec<f64>,
    /// Unnormalized logarithms of the effective weights
    /// (`-beta E_n + ln|factor_n|`), for effective-temperature extraction.
    pub log_weights: Vec<f64>,
    /// Regime classification; `Critical` exactly when `is_critical`.
    pub regime: Regime,
    /// True when the amplitude magnitude falls below
    /// `CRITICAL_AMPLITUDE_RATIO` times the sum of term magnitudes.
    pub is_critical: bool,
}

impl IGPReport {
    /// Effective weight of the top level over the bottom level, computed in
    /// log-space so it is exact even where one weight underflows.
    pub fn effective_ratio(&self) -> f64 {
        let last = self.log_weights.len() - 1;
        (self.log_weights[last] - self.log_weights[0]).exp()
    }
}

pub(crate) fn validate_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= 0.0 || beta > BETA_MAX {
        return Err(PtError::InvalidConfig {
            context: format!("beta must lie in (0, {BETA_MAX:.0}], got {beta}"),
        });
    }
    Ok(())
}

/// Boltzmann weights `e^{-beta E_n} / Z`, computed with a max-shift so that
/// arbitrarily large `beta * E` spreads cannot overflow.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Result<Vec<f64>> {
    validate_beta(beta)?;
    if energies.is_empty() {
        return Err(PtError::ShapeMismatch {
            context: "no energies to weight".into(),
        });
    }
    let e_min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = energies.iter().map(|e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = shifted.iter().sum();
    Ok(shifted.iter().map(|w| w / z).collect())
}

/// The thermal ensemble at one parameter point.
pub fn thermal_state(sys: &PTSystem, point: &[f64], beta: f64) -> Result<ThermalState> {
    let spectrum = sys.spectrum_at(point)?;
    let weights = boltzmann_weights(&spectrum.energies, beta)?;
    Ok(ThermalState {
        beta,
        spectrum,
        weights,
    })
}

/// Unwrapped complex loop phases of every level along a closed path, plus the
/// energies at the starting point. This is the minimal input the IGP needs,
/// kept separate so grid scans can sweep `beta` without recomputing spectra.
#[derive(Debug, Clone)]
pub struct LevelPhases {
    /// Unwrapped complex loop phase per level.
    pub theta1: Vec<Complex64>,
    /// Energies at the path's starting point, ascending.
    pub energies: Vec<f64>,
}

/// Computes the per-level loop phases of a closed path.
pub fn loop_level_phases(sys: &PTSystem, path: &LoopPath) -> Result<LevelPhases> {
    if !path.is_closed() {
        return Err(PtError::InvalidPath {
            context: "loop phases require a closed path".into(),
        });
    }
    let spectral = sys.spectrum_along(path)?;
    let zero_tol = sys.tolerances().zero_overlap;
    let mut theta1 = Vec::with_capacity(spectral.levels());
    for n in 0..spectral.levels() {
        let lefts: Vec<&ComplexVector> = (0..spectral.len()).map(|k| spectral.left(k, n)).collect();
        let rights: Vec<&ComplexVector> =
            (0..spectral.len()).map(|k| spectral.right(k, n)).collect();
        let log = crate::wilson::log_holonomy(&lefts, &rights, n, zero_tol)?;
        theta1.push(Complex64::new(0.0, 1.0) * log);
    }
    let energies = (0..spectral.levels()).map(|n| spectral.energy(0, n)).collect();
    Ok(LevelPhases { theta1, energies })
}

/// Assembles an IGP report from starting energies and per-level complex
/// phase factors (each factor is `e^{i theta1_n}` for loops, or the partial
/// `e^{-L_n(t)} nu_n(t)` for open paths).
pub fn assemble_igp(energies: &[f64], factors: &[Complex64], beta: f64) -> Result<IGPReport> {
    validate_beta(beta)?;
    if energies.len() != factors.len() || energies.is_empty() {
        return Err(PtError::ShapeMismatch {
            context: format!(
                "{} energies vs {} phase factors",
                energies.len(),
                factors.len()
            ),
        });
    }
    let weights = boltzmann_weights(energies, beta)?;
    let mut amplitude = Complex64::new(0.0, 0.0);
    let mut magnitude_sum = 0.0;
    let mut log_weights = Vec::with_capacity(energies.len());
    for n in 0..energies.len() {
        let term = weights[n] * factors[n];
        amplitude += term;
        magnitude_sum += term.norm();
        log_weights.push(-beta * energies[n] + factors[n].norm().max(f64::MIN_POSITIVE).ln());
    }

    let shift = log_weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let unnormalized: Vec<f64> = log_weights.iter().map(|lw| (lw - shift).exp()).collect();
    let total: f64 = unnormalized.iter().sum();
    let effective_weights: Vec<f64> = unnormalized.iter().map(|w| w / total).collect();

    let is_critical = amplitude.norm() < CRITICAL_AMPLITUDE_RATIO * magnitude_sum;
    let regime = if is_critical {
        Regime::Critical
    } else {
        let last = effective_weights.len() - 1;
        if effective_weights[last] > effective_weights[0] {
            Regime::EffectiveNegativeT
        } else {
            Regime::EffectivePositiveT
        }
    };

    Ok(IGPReport {
        theta_g: wrap_to_two_pi(amplitude.arg()),
        amplitude,
        level_factors: factors.to_vec(),
        effective_weights,
        log_weights,
        regime,
        is_critical,
    })
}

/// The IGP of a thermal ensemble driven around a closed loop.
pub fn igp_loop(sys: &PTSystem, path: &LoopPath, beta: f64) -> Result<IGPReport> {
    let phases = loop_level_phases(sys, path)?;
    igp_from_phases(&phases, beta)
}

/// The IGP from precomputed level phases (the cheap inner step of scans).
pub fn igp_from_phases(phases: &LevelPhases, beta: f64) -> Result<IGPReport> {
    let factors: Vec<Complex64> = phases
        .theta1
        .iter()
        .map(|t| (Complex64::new(0.0, 1.0) * t).exp())
        .collect();
    assemble_igp(&phases.energies, &factors, beta)
}

/// The IGP of a thermal ensemble driven along an arbitrary (typically open)
/// path: per level, the partial Wilson factor `e^{-L_n(t)}` times the return
/// amplitude `nu_n(t) = <Phi_n(0)|Psi_n(t)>`, evaluated at the path's end.
/// The product is invariant under per-sample rescalings of the sections, and
/// at closure it reproduces `igp_loop` exactly.
pub fn igp_open(sys: &PTSystem, path: &LoopPath, beta: f64) -> Result<IGPReport> {
    validate_beta(beta)?;
    let spectral = sys.spectrum_along(path)?;
    let zero_tol = sys.tolerances().zero_overlap;
    let last = spectral.len() - 1;
    let mut factors = Vec::with_capacity(spectral.levels());
    let mut energies = Vec::with_capacity(spectral.levels());
    for n in 0..spectral.levels() {
        let lefts: Vec<&ComplexVector> = (0..spectral.len()).map(|k| spectral.left(k, n)).collect();
        let rights: Vec<&ComplexVector> =
            (0..spectral.len()).map(|k| spectral.right(k, n)).collect();
        let partials = cumulative_log_holonomy(&lefts, &rights, n, zero_tol)?;
        let nu = inner(spectral.left(0, n), spectral.right(last, n));
        factors.push((-partials[last]).exp() * nu);
        energies.push(spectral.energy(0, n));
    }
    assemble_igp(&energies, &factors, beta)
}

/// Classifies the effective-temperature regime of a two-level ensemble by
/// comparing effective weights, with `deadband` the relative window around
/// balance that is declared critical.
pub fn regime_classify_with(
    sys: &PTSystem,
    path: &LoopPath,
    beta: f64,
    deadband: f64,
) -> Result<Regime> {
    if sys.dim() != 2 {
        return Err(PtError::NotTwoLevel { dim: sys.dim() });
    }
    validate_beta(beta)?;
    let phases = loop_level_phases(sys, path)?;
    // log of the effective-weight ratio (top level over bottom level).
    let log_ratio = -beta * (phases.energies[1] - phases.energies[0])
        - (phases.theta1[1].im - phases.theta1[0].im);
    if log_ratio.abs() <= deadband.ln_1p() {
        return Ok(Regime::Critical);
    }
    Ok(if log_ratio > 0.0 {
        Regime::EffectiveNegativeT
    } else {
        Regime::EffectivePositiveT
    })
}

/// `regime_classify_with` at the default deadband.
pub fn regime_classify(sys: &PTSystem, path: &LoopPath, beta: f64) -> Result<Regime> {
    regime_classify_with(sys, path, beta, REGIME_DEADBAND)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::latitude_circle;
    use crate::ptsystem::{build_model, default_two_level};
    use crate::wilson::wrap_symmetric;
    use std::collections::BTreeMap;

    const PI: f64 = std::f64::consts::PI;
    const TAU: f64 = 2.0 * PI;
    const SQRT5: f64 = 2.236_067_977_499_789_7;

    #[test]
    fn boltzmann_weights_match_direct_arithmetic() {
        let w = boltzmann_weights(&[-2.0, 2.0], 0.5).unwrap();
        let e = std::f64::consts::E;
        let expected_low = e / (e + 1.0 / e);
        assert!((w[0] - expected_low).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);

        let frozen = boltzmann_weights(&[-2.0, 2.0], 50.0).unwrap();
        assert!((frozen[0] - 1.0).abs() < 1e-40);
        assert!(frozen[1] < 1e-40);

        let flat = boltzmann_weights(&[1.7, 1.7, 1.7], 3.0).unwrap();
        for w in flat {
            assert!((w - 1.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn extreme_beta_is_shift_safe_and_capped() {
        let w = boltzmann_weights(&[-2.0, 2.0], 1.0e4).unwrap();
        assert!(w.iter().all(|x| x.is_finite()));
        assert!((w[0] - 1.0).abs() < 1e-300);
        assert!(matches!(
            boltzmann_weights(&[-2.0, 2.0], 1.0e4 + 1.0),
            Err(PtError::InvalidConfig { .. })
        ));
        assert!(matches!(
            boltzmann_weights(&[-2.0, 2.0], 0.0),
            Err(PtError::InvalidConfig { .. })
        ));
    }

    #[test]
    fn thermal_state_reconstructs_a_unit_trace_density_matrix() {
        let sys = default_two_level();
        let state = thermal_state(&sys, &[1.1, 0.4], 0.7).unwrap();
        assert!((state.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let rho = state.density_matrix();
        let tr = state.biorthogonal_trace(&rho);
        assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn broken_phase_propagates_from_the_spectrum() {
        let mut params = BTreeMap::new();
        params.insert("a".to_string(), 1.0);
        params.insert("b".to_string(), 2.0);
        let sys = build_model("two-level-pt", &params).unwrap();
        assert!(matches!(
            thermal_state(&sys, &[1.0, 0.0], 1.0),
            Err(PtError::BrokenPTPhase { .. })
        ));
    }

    #[test]
    fn low_temperature_igp_locks_to_the_ground_level_phase() {
        let sys = default_two_level();
        for &theta in &[0.9, PI / 2.0] {
            let path = latitude_circle(theta, 768, TAU).unwrap();
            let phases = loop_level_phases(&sys, &path).unwrap();
            let report = igp_from_phases(&phases, 50.0).unwrap();
            // Ground level is index 0 (energy -2); theta_G must equal its
            // real loop phase to round-off at this beta.
            let expected = wrap_to_two_pi(phases.theta1[0].re);
            assert!(
                wrap_symmetric(report.theta_g - expected).abs() < 1e-10,
                "theta={theta}: {} vs {expected}",
                report.theta_g
            );
            // And the parallel-transport closed form places the ground
            // level's angle at pi - (3 pi / 2) cos(theta) (grid accuracy).
            let closed = wrap_to_two_pi(PI - 1.5 * PI * theta.cos());
            assert!(wrap_symmetric(report.theta_g - closed).abs() < 2e-3);
            assert_eq!(report.regime, Regime::EffectivePositiveT);
            assert!(!report.is_critical);
        }
    }

    #[test]
    fn high_temperature_igp_approaches_the_amplified_level() {
        let sys = default_two_level();
        let theta: f64 = 0.9;
        let path = latitude_circle(theta, 768, TAU).unwrap();
        let report = igp_loop(&sys, &path, 0.001).unwrap();
        // At near-infinite temperature the loop amplification dominates: the
        // upper level carries e^{+(pi/2) sqrt5 sin(theta)} of relative gain.
        // The angle lands near (but measurably off) the upper level's
        // pi + (3 pi / 2) cos(theta).
        let upper = wrap_to_two_pi(PI + 1.5 * PI * theta.cos());
        assert!(wrap_symmetric(report.theta_g - upper).abs() < 5e-3);
        assert_eq!(report.regime, Regime::EffectiveNegativeT);
        let expected_ratio = (-4.0 * 0.001 + SQRT5 * PI * theta.sin()).exp();
        assert!(
            (report.effective_ratio() / expected_ratio - 1.0).abs() < 1e-3,
            "ratio {} vs {expected_ratio}",
            report.effective_ratio()
        );
    }

    #[test]
    fn open_path_igp_closes_onto_the_loop_value() {
        let sys = default_two_level();
        let path = latitude_circle(1.2, 512, TAU).unwrap();
        let via_loop = igp_loop(&sys, &path, 1.3).unwrap();
        let via_open = igp_open(&sys, &path, 1.3).unwrap();
        assert!(
            (via_loop.amplitude - via_open.amplitude).norm() < 1e-12,
            "loop {} open {}",
            via_loop.amplitude,
            via_open.amplitude
        );
        assert!((via_loop.theta_g - via_open.theta_g).abs() < 1e-12);
    }

    #[test]
    fn zero_length_evolution_has_unit_amplitude_and_no_phase() {
        let sys = default_two_level();
        let point = vec![0.9, 0.3];
        let path = LoopPath::new(vec![point.clone(), point], vec![0.0, 1.0]).unwrap();
        let report = igp_open(&sys, &path, 2.0).unwrap();
        assert!((report.amplitude - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        assert!(report.theta_g.abs() < 1e-12);
    }

    #[test]
    fn regime_classification_matches_the_balance_arc() {
        let sys = default_two_level();
        let path = latitude_circle(PI / 2.0, 512, TAU).unwrap();
        assert_eq!(
            regime_classify(&sys, &path, 2.0).unwrap(),
            Regime::EffectivePositiveT
        );
        assert_eq!(
            regime_classify(&sys, &path, 1.0).unwrap(),
            Regime::EffectiveNegativeT
        );
        // Exactly on the balance arc the discrete phases carry grid error,
        // so the critical call needs a deadband at the grid scale; the
        // contract default (1e-9) is intentionally far tighter.
        let arc_beta = SQRT5 * PI / 4.0;
        assert_eq!(
            regime_classify_with(&sys, &path, arc_beta, 1e-3).unwrap(),
            Regime::Critical
        );
    }

    #[test]
    fn non_two_level_systems_are_rejected_by_the_classifier() {
        let sys = PTSystem::new(
            3,
            2,
            Box::new(|_p: &[f64]| {
                let mut m = ComplexMatrix::zeros(3);
                m.set(0, 0, Complex64::new(-1.0, 0.0));
                m.set(2, 2, Complex64::new(1.0, 0.0));
                Ok(m)
            }),
            Box::new(|_p: &[f64]| Ok(ComplexMatrix::identity(3))),
        );
        let path = latitude_circle(1.0, 64, TAU).unwrap();
        assert!(matches!(
            regime_classify(&sys, &path, 1.0),
            Err(PtError::NotTwoLevel { dim: 3 })
        ));
    }
}
