//! Pure-state loop phases for pseudo-Hermitian systems.
//!
//! Three independent routes to the geometric content of a closed loop are
//! implemented and cross-checked against each other:
//!
//! * `theta1_loop` — the complex biorthogonal loop phase, computed as a
//!   discrete Wilson loop over the continuous biorthogonal sections. Its real
//!   part is an angle; its imaginary part is the log-amplitude gain a state
//!   picks up around the loop.
//! * `theta2_loop` — the real loop phase of the Hermitian-frame sections
//!   `v = S_proper^-1 Psi`, an open-chain Wilson sum whose final sample uses
//!   the ODE-integrated (generally non-periodic) proper map.
//! * `berry_w_formula` — the metric Berry form: trapezoidal integration of
//!   `i<Psi|W dPsi/dt> + (i/2)<Psi|dW/dt Psi>` with finite-difference
//!   derivatives. Its imaginary part must cancel by metric-norm conservation;
//!   the leftover is reported as an honest certificate, never discarded
//!   silently.
//!
//! Dynamic phases are split into the Hermitian-frame part `-∮E dt` and the
//! frame-correction integral `C = i∮<v|S^-1 dS/dt|v> dt`, which is purely
//! imaginary exactly when the map is proper; `|Re C|` is the properness leak.
//!
//! A parallel-transport operator assembled from the spectra and the partial
//! Wilson phases is differentiated numerically to verify that per-level
//! instantaneous phase accumulation vanishes.

use num_complex::Complex64;

use crate::error::PtError;
use crate::gaugemap::{matrix_derivative, proper_map_along, MapPath};
use crate::numkernel::{inner, ComplexMatrix, ComplexVector};
use crate::path::LoopPath;
use crate::ptsystem::{PTSystem, SpectralPath};
use crate::wilson::{cumulative_log_holonomy, log_holonomy, wrap_symmetric, wrap_to_two_pi};
use crate::Result;

const TAU: f64 = 2.0 * std::f64::consts::PI;

/// Per-level phase summary for one closed loop.
#[derive(Debug, Clone)]
pub struct PhaseReport {
    /// Level index (energies ascending).
    pub level: usize,
    /// Complex biorthogonal loop phase; real part wrapped to `[0, 2pi)`,
    /// imaginary part an (unwrapped) log-amplitude gain.
    pub theta1: Complex64,
    /// Hermitian-frame loop phase in `[0, 2pi)`.
    pub theta2: f64,
    /// Metric Berry form value in `[0, 2pi)`.
    pub theta_berry: f64,
    /// Complex dynamic phase in the original (non-Hermitian) frame:
    /// `theta_dyn_0` minus the frame correction.
    pub theta_dyn_tilde: Complex64,
    /// Hermitian-frame dynamic phase `-∮ E dt`.
    pub theta_dyn_0: f64,
    /// Full turns removed when wrapping `Re theta1`; the unwrapped value is
    /// `theta1.re + 2pi * branch`.
    pub branch: i64,
    /// `|theta2 - theta_berry|` as a wrapped angular distance: agreement of
    /// the two independent geometric-phase routes.
    pub residual_theta2_berry: f64,
    /// `|Re theta1 - theta2|` as a wrapped angular distance: the proper-frame
    /// consistency relation (the correction must carry no real part).
    pub residual_theta1_theta2: f64,
    /// `|Im|` of the complex metric Berry integral — the metric-norm
    /// conservation certificate for `berry_w_formula`.
    pub berry_imag_residual: f64,
    /// `|Re C|` of the frame correction — how far the map is from proper, as
    /// leaked into the phase value.
    pub frame_leak: f64,
}

/// All levels' phase reports for one loop, plus the certificate of the proper
/// map that produced the Hermitian-frame quantities.
#[derive(Debug, Clone)]
pub struct LoopPhases {
    pub reports: Vec<PhaseReport>,
    /// Properness residual of the similarity-map path used for `theta2` and
    /// the frame correction.
    pub properness: f64,
}

impl LoopPhases {
    /// The report for one level.
    pub fn report(&self, level: usize) -> &PhaseReport {
        &self.reports[level]
    }

    pub fn levels(&self) -> usize {
        self.reports.len()
    }
}

fn require_closed(path: &LoopPath, what: &str) -> Result<()> {
    if !path.is_closed() {
        return Err(PtError::InvalidPath {
            context: format!("{what} requires a closed path"),
        });
    }
    Ok(())
}

/// Unwrapped complex loop phase of one level from the continuous biorthogonal
/// sections: `theta1 = i * L` with `L` the total Wilson log.
fn theta1_unwrapped(spectral: &SpectralPath, level: usize, zero_tol: f64) -> Result<Complex64> {
    let lefts: Vec<&ComplexVector> = (0..spectral.len()).map(|k| spectral.left(k, level)).collect();
    let rights: Vec<&ComplexVector> =
        (0..spectral.len()).map(|k| spectral.right(k, level)).collect();
    let log = log_holonomy(&lefts, &rights, level, zero_tol)?;
    Ok(Complex64::new(0.0, 1.0) * log)
}

/// Hermitian-frame sections `v_k = S_k^-1 Psi_k` of one level, with the
/// worst deviation of their norms from one (they are unit vectors whenever
/// the maps factorize the metric and the sections are biorthonormal).
fn hermitian_frame_sections(
    spectral: &SpectralPath,
    maps: &MapPath,
    level: usize,
) -> (Vec<ComplexVector>, f64) {
    let mut sections = Vec::with_capacity(spectral.len());
    let mut drift: f64 = 0.0;
    for k in 0..spectral.len() {
        let v = maps.maps[k].s_inv.matvec(spectral.right(k, level));
        drift = drift.max((v.norm() - 1.0).abs());
        sections.push(v);
    }
    (sections, drift)
}

/// Open-chain Wilson sum over the Hermitian-frame sections. The chain is not
/// closed cyclically: the final sample carries the integrated map at the end
/// time, which on closed loops generally differs from the initial map by a
/// unitary, and the section's phase is pinned by the periodic biorthogonal
/// gauge. Returns the unwrapped real phase.
fn theta2_unwrapped(sections: &[ComplexVector], level: usize, zero_tol: f64) -> Result<f64> {
    let refs: Vec<&ComplexVector> = sections.iter().collect();
    let log = log_holonomy(&refs, &refs, level, zero_tol)?;
    // i * log of a product of overlaps of unit vectors: the symmetrized
    // increments are purely imaginary, so the phase is exactly real.
    Ok(-log.im)
}

/// Trapezoidal integral of sampled values against the path times.
fn trapezoid(values: &[Complex64], times: &[f64]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..values.len() - 1 {
        acc += 0.5 * (values[k] + values[k + 1]) * (times[k + 1] - times[k]);
    }
    acc
}

/// Frame-correction integral `C = i ∮ <v|S^-1 dS/dt|v> dt` over one level's
/// Hermitian-frame sections. Purely imaginary exactly when the map is proper.
fn frame_correction(
    sections: &[ComplexVector],
    maps: &MapPath,
    times: &[f64],
) -> Result<Complex64> {
    let s_samples: Vec<ComplexMatrix> = maps.maps.iter().map(|m| m.s.clone()).collect();
    let s_dot = matrix_derivative(&s_samples, times, false)?;
    let integrand: Vec<Complex64> = (0..sections.len())
        .map(|k| {
            let gen = maps.maps[k].s_inv.matmul(&s_dot[k]);
            inner(&sections[k], &gen.matvec(&sections[k]))
        })
        .collect();
    Ok(Complex64::new(0.0, 1.0) * trapezoid(&integrand, times))
}

/// Five-point finite-difference derivative of a sampled vector family,
/// delegating to the matrix stencils by packing each vector as a column.
fn vector_derivative(
    samples: &[&ComplexVector],
    times: &[f64],
    periodic: bool,
) -> Result<Vec<ComplexVector>> {
    let dim = samples[0].dim();
    let packed: Vec<ComplexMatrix> = samples
        .iter()
        .map(|v| {
            let mut m = ComplexMatrix::zeros(dim);
            for (i, &x) in v.data().iter().enumerate() {
                m.set(i, 0, x);
            }
            m
        })
        .collect();
    let derivs = matrix_derivative(&packed, times, periodic)?;
    Ok(derivs.iter().map(|m| m.column(0)).collect())
}

/// Complex metric Berry integral for one level:
/// `∮ [ i<Psi|W dPsi/dt> + (i/2)<Psi|dW/dt Psi> ] dt`
/// over the periodic continuous sections. The imaginary part must vanish by
/// conservation of the metric norm; it is returned for certification.
fn berry_complex(
    spectral: &SpectralPath,
    metric_dots: &[ComplexMatrix],
    level: usize,
) -> Result<Complex64> {
    let times = spectral.path().times();
    let rights: Vec<&ComplexVector> =
        (0..spectral.len()).map(|k| spectral.right(k, level)).collect();
    let psi_dots = vector_derivative(&rights, times, true)?;
    let i = Complex64::new(0.0, 1.0);
    let integrand: Vec<Complex64> = (0..spectral.len())
        .map(|k| {
            // <Psi|W dPsi> equals <Phi|dPsi> because Phi = W Psi.
            let connection = inner(spectral.left(k, level), &psi_dots[k]);
            let metric_flow = inner(rights[k], &metric_dots[k].matvec(rights[k]));
            i * connection + 0.5 * i * metric_flow
        })
        .collect();
    Ok(trapezoid(&integrand, times))
}

/// Metric samples along the path (periodic on closed paths because the final
/// sample point is an exact clone of the first).
fn metric_samples(sys: &PTSystem, path: &LoopPath) -> Result<Vec<ComplexMatrix>> {
    path.points().iter().map(|p| sys.metric_at(p)).collect()
}

/// Complex biorthogonal loop phase of one level. Real part in `[0, 2pi)`.
pub fn theta1_loop(sys: &PTSystem, path: &LoopPath, level: usize) -> Result<Complex64> {
    require_closed(path, "theta1_loop")?;
    let spectral = sys.spectrum_along(path)?;
    let raw = theta1_unwrapped(&spectral, level, sys.tolerances().zero_overlap)?;
    Ok(Complex64::new(wrap_to_two_pi(raw.re), raw.im))
}

/// Hermitian-frame loop phase of one level, in `[0, 2pi)`. Exactly real by
/// construction; fails with `ImaginaryLeak` when the frame correction leaks a
/// real part or the frame sections drift off unit norm, either of which means
/// the similarity map is not proper enough for the value to be trusted.
pub fn theta2_loop(sys: &PTSystem, path: &LoopPath, level: usize) -> Result<f64> {
    require_closed(path, "theta2_loop")?;
    let spectral = sys.spectrum_along(path)?;
    let maps = proper_map_along(sys, path)?;
    let (value, _) = theta2_in_frame(sys, &spectral, &maps, level)?;
    Ok(wrap_to_two_pi(value))
}

/// Shared worker: unwrapped Hermitian-frame phase plus its realness
/// certificate, gating on the leak tolerance.
fn theta2_in_frame(
    sys: &PTSystem,
    spectral: &SpectralPath,
    maps: &MapPath,
    level: usize,
) -> Result<(f64, f64)> {
    let (sections, drift) = hermitian_frame_sections(spectral, maps, level);
    let value = theta2_unwrapped(&sections, level, sys.tolerances().zero_overlap)?;
    let correction = frame_correction(&sections, maps, spectral.path().times())?;
    let leak = correction.re.abs().max(drift);
    if leak > sys.tolerances().imaginary_leak {
        return Err(PtError::ImaginaryLeak { residual: leak });
    }
    Ok((value, leak))
}

/// Metric Berry form value of one level, in `[0, 2pi)`.
pub fn berry_w_formula(sys: &PTSystem, path: &LoopPath, level: usize) -> Result<f64> {
    require_closed(path, "berry_w_formula")?;
    let spectral = sys.spectrum_along(path)?;
    let metrics = metric_samples(sys, path)?;
    let metric_dots = matrix_derivative(&metrics, path.times(), true)?;
    let value = berry_complex(&spectral, &metric_dots, level)?;
    Ok(wrap_to_two_pi(value.re))
}

/// Dynamic phases of one level: the complex original-frame value and the real
/// Hermitian-frame value `-∮ E dt`. Their difference is the frame-correction
/// integral, purely imaginary for a proper map.
pub fn dynamic_phases(sys: &PTSystem, path: &LoopPath, level: usize) -> Result<(Complex64, f64)> {
    require_closed(path, "dynamic_phases")?;
    let spectral = sys.spectrum_along(path)?;
    let maps = proper_map_along(sys, path)?;
    dynamic_in_frame(&spectral, &maps, level)
}

fn dynamic_in_frame(
    spectral: &SpectralPath,
    maps: &MapPath,
    level: usize,
) -> Result<(Complex64, f64)> {
    let times = spectral.path().times();
    let energies: Vec<Complex64> = (0..spectral.len())
        .map(|k| Complex64::new(spectral.energy(k, level), 0.0))
        .collect();
    let dyn_0 = -trapezoid(&energies, times).re;
    let (sections, _) = hermitian_frame_sections(spectral, maps, level);
    let correction = frame_correction(&sections, maps, times)?;
    Ok((Complex64::new(dyn_0, 0.0) - correction, dyn_0))
}

/// Full per-level phase assembly for a closed loop: one spectral pass, one
/// proper-map integration, all cross-checks recorded.
pub fn loop_phases(sys: &PTSystem, path: &LoopPath) -> Result<LoopPhases> {
    require_closed(path, "loop_phases")?;
    let spectral = sys.spectrum_along(path)?;
    let maps = proper_map_along(sys, path)?;
    let metrics = metric_samples(sys, path)?;
    let metric_dots = matrix_derivative(&metrics, path.times(), true)?;
    let zero_tol = sys.tolerances().zero_overlap;

    let mut reports = Vec::with_capacity(spectral.levels());
    for level in 0..spectral.levels() {
        let t1 = theta1_unwrapped(&spectral, level, zero_tol)?;
        let t1_wrapped = wrap_to_two_pi(t1.re);
        let branch = ((t1.re - t1_wrapped) / TAU).round() as i64;

        let (t2_raw, leak) = theta2_in_frame(sys, &spectral, &maps, level)?;
        let t2 = wrap_to_two_pi(t2_raw);

        let berry_c = berry_complex(&spectral, &metric_dots, level)?;
        let berry = wrap_to_two_pi(berry_c.re);

        let (dyn_tilde, dyn_0) = dynamic_in_frame(&spectral, &maps, level)?;

        reports.push(PhaseReport {
            level,
            theta1: Complex64::new(t1_wrapped, t1.im),
            theta2: t2,
            theta_berry: berry,
            theta_dyn_tilde: dyn_tilde,
            theta_dyn_0: dyn_0,
            branch,
            residual_theta2_berry: wrap_symmetric(t2 - berry).abs(),
            residual_theta1_theta2: wrap_symmetric(t1_wrapped - t2).abs(),
            berry_imag_residual: berry_c.im.abs(),
            frame_leak: leak,
        });
    }
    Ok(LoopPhases {
        reports,
        properness: maps.properness,
    })
}

/// Parallel-transport operators along a path, one per sample:
/// `U(t_k) = sum_n e^{-L_n(t_k)} |Psi_n(t_k)><Phi_n(0)|` built from the
/// smoothed sections and their cumulative Wilson logs, together with the
/// closed-form inverses `sum_n e^{+L_n(t_k)} |Psi_n(0)><Phi_n(t_k)|`.
#[derive(Debug, Clone)]
pub struct TransportPath {
    pub operators: Vec<ComplexMatrix>,
    pub inverses: Vec<ComplexMatrix>,
}

/// Assembles the transport operators; `with_phase_factor = false` drops the
/// `e^{∓L_n}` prefactors (the negative control that must violate the
/// transport condition).
fn assemble_transport(
    spectral: &SpectralPath,
    zero_tol: f64,
    with_phase_factor: bool,
) -> Result<TransportPath> {
    let samples = spectral.len();
    let levels = spectral.levels();
    let dim = spectral.right(0, 0).dim();

    let mut logs: Vec<Vec<Complex64>> = Vec::with_capacity(levels);
    for n in 0..levels {
        let lefts: Vec<&ComplexVector> = (0..samples).map(|k| spectral.smooth_left(k, n)).collect();
        let rights: Vec<&ComplexVector> =
            (0..samples).map(|k| spectral.smooth_right(k, n)).collect();
        logs.push(cumulative_log_holonomy(&lefts, &rights, n, zero_tol)?);
    }

    let mut operators = Vec::with_capacity(samples);
    let mut inverses = Vec::with_capacity(samples);
    for k in 0..samples {
        let mut u = ComplexMatrix::zeros(dim);
        let mut u_inv = ComplexMatrix::zeros(dim);
        for n in 0..levels {
            let (fwd, bwd) = if with_phase_factor {
                ((-logs[n][k]).exp(), (logs[n][k]).exp())
            } else {
                (Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
            };
            let term = ComplexMatrix::outer(spectral.smooth_right(k, n), spectral.smooth_left(0, n));
            let term_inv =
                ComplexMatrix::outer(spectral.smooth_right(0, n), spectral.smooth_left(k, n));
            u = u.add(&term.scale(fwd));
            u_inv = u_inv.add(&term_inv.scale(bwd));
        }
        operators.push(u);
        inverses.push(u_inv);
    }
    Ok(TransportPath {
        operators,
        inverses,
    })
}

/// Transport operators with the per-level phase prefactors (the construction
/// that satisfies the parallel-transport condition).
pub fn transport_operators(sys: &PTSystem, path: &LoopPath) -> Result<TransportPath> {
    let spectral = sys.spectrum_along(path)?;
    assemble_transport(&spectral, sys.tolerances().zero_overlap, true)
}

fn transport_residual_of(
    spectral: &SpectralPath,
    transport: &TransportPath,
) -> Result<f64> {
    let times = spectral.path().times();
    let u_dots = matrix_derivative(&transport.operators, times, false)?;
    let samples = spectral.len();
    if samples < 7 {
        return Err(PtError::InvalidPath {
            context: "transport residual needs >= 7 samples".into(),
        });
    }
    let mut worst: f64 = 0.0;
    // Interior samples only: the first/last two carry lower-order stencils.
    for k in 2..samples - 2 {
        let gen = u_dots[k].matmul(&transport.inverses[k]);
        for n in 0..spectral.levels() {
            let val = inner(
                spectral.smooth_left(k, n),
                &gen.matvec(spectral.smooth_right(k, n)),
            );
            worst = worst.max(val.norm());
        }
    }
    Ok(worst)
}

/// Worst per-level instantaneous phase accumulation of the transport
/// operator: `max_{n,t} |<Phi_n(t)| dU/dt U^-1 |Psi_n(t)>|`, which vanishes
/// for true parallel transport.
pub fn parallel_transport_residual(sys: &PTSystem, path: &LoopPath) -> Result<f64> {
    let spectral = sys.spectrum_along(path)?;
    let transport = assemble_transport(&spectral, sys.tolerances().zero_overlap, true)?;
    transport_residual_of(&spectral, &transport)
}

/// Negative control: the same residual with the phase prefactors dropped.
/// This must come out large (order one) — if it does not, the residual is
/// insensitive and the positive result above is meaningless.
pub fn parallel_transport_residual_control(sys: &PTSystem, path: &LoopPath) -> Result<f64> {
    let spectral = sys.spectrum_along(path)?;
    let transport = assemble_transport(&spectral, sys.tolerances().zero_overlap, false)?;
    transport_residual_of(&spectral, &transport)
}
