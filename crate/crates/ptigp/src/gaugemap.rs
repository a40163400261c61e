//! Similarity maps between the pseudo-Hermitian frame and its Hermitian
//! rotation, and the construction of *proper* maps along paths.
//!
//! Any factorization `W = (S^-1)^dag S^-1` gives `H = S H0 S^-1` with `H0`
//! Hermitian; `S` is defined up to a right unitary factor. A map path is
//! *proper* when `S^-1 dS/dt` is Hermitian along it — equivalently, when the
//! anti-Hermitian part of `d(S^-1)/dt S` vanishes. Proper maps make the
//! frame-change correction to dynamic phases purely imaginary and are the
//! frames in which adiabatic tracking is cleanest.
//!
//! Starting from the principal square-root map `S = (sqrt W)^-1`, the proper
//! map is `S u(t)` where the unitary `u` solves
//!
//! ```text
//! du/dt = antiherm[ d(S^-1)/dt S ] u,     u(0) = 1,
//! ```
//!
//! with `antiherm[A] = (A - A^dag)/2`. Derivatives are taken by high-order
//! finite differences of the sampled maps; the result is certified by
//! measuring its own properness residual.

use num_complex::Complex64;

use crate::error::PtError;
use crate::numkernel::{hermitian_sqrt_with, polar_unitary, ComplexMatrix};
use crate::path::LoopPath;
use crate::ptsystem::PTSystem;
use crate::tolerances::Tolerances;
use crate::Result;

/// One similarity factor `S` with its inverse, tied by `W = (S^-1)^dag S^-1`.
#[derive(Debug, Clone)]
pub struct SimilarityMap {
    pub s: ComplexMatrix,
    pub s_inv: ComplexMatrix,
}

impl SimilarityMap {
    /// Reconstructs the metric `(S^-1)^dag S^-1` this map factorizes.
    pub fn metric(&self) -> ComplexMatrix {
        self.s_inv.adjoint().matmul(&self.s_inv)
    }
}

/// A similarity map sampled along a path, with its measured properness.
#[derive(Debug, Clone)]
pub struct MapPath {
    pub maps: Vec<SimilarityMap>,
    pub times: Vec<f64>,
    /// Gauge rotations applied on top of the square-root map (`None` for the
    /// raw square-root path itself).
    pub unitaries: Option<Vec<ComplexMatrix>>,
    /// Max over samples of |antiherm part| / |herm scale| of `d(S^-1)/dt S`.
    pub properness: f64,
}

/// Principal square-root factorization at one point: `S = (sqrt W)^-1`,
/// `S^-1 = sqrt W`.
pub fn sqrt_metric_map(w: &ComplexMatrix, tol: &Tolerances) -> Result<SimilarityMap> {
    let root = hermitian_sqrt_with(w, tol.hermiticity, tol.positivity)?;
    let s = root.inverse_with(tol.condition_max)?;
    Ok(SimilarityMap { s, s_inv: root })
}

/// Uniform grid spacing, or an error for non-uniform grids (the finite
/// difference stencils require uniform sampling).
fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(PtError::InvalidPath {
            context: "derivative needs >= 2 samples".into(),
        });
    }
    let dt = times[1] - times[0];
    for w in times.windows(2) {
        if ((w[1] - w[0]) - dt).abs() > 1e-12 * dt.abs().max(1.0) {
            return Err(PtError::InvalidPath {
                context: "matrix derivatives require a uniform time grid".into(),
            });
        }
    }
    Ok(dt)
}

/// Time derivative of a sampled matrix family by central finite differences:
/// 4th-order 5-point stencils where possible, falling back to 2nd order near
/// open ends. `periodic` treats `samples[len-1]` as a repeat of `samples[0]`
/// (it must match to round-off) and uses wrapped stencils everywhere.
pub fn matrix_derivative(
    samples: &[ComplexMatrix],
    times: &[f64],
    periodic: bool,
) -> Result<Vec<ComplexMatrix>> {
    if samples.len() != times.len() {
        return Err(PtError::ShapeMismatch {
            context: format!("{} samples vs {} times", samples.len(), times.len()),
        });
    }
    let dt = uniform_step(times)?;
    let n = samples.len();
    let dim = samples[0].dim();

    if periodic {
        let m = n - 1; // distinct samples
        if m < 5 {
            return Err(PtError::InvalidPath {
                context: "periodic derivative needs >= 5 distinct samples".into(),
            });
        }
        let wrap_gap = samples[m].sub(&samples[0]).frobenius_norm();
        if wrap_gap > 1e-12 * samples[0].frobenius_norm().max(1.0) {
            return Err(PtError::InvalidPath {
                context: format!(
                    "periodic derivative requested but endpoints differ by {wrap_gap:.3e}"
                ),
            });
        }
        let at = |k: isize| -> &ComplexMatrix {
            let idx = k.rem_euclid(m as isize) as usize;
            &samples[idx]
        };
        let mut out = Vec::with_capacity(n);
        for k in 0..m {
            let ki = k as isize;
            // (-f[k+2] + 8 f[k+1] - 8 f[k-1] + f[k-2]) / (12 h)
            let mut d = ComplexMatrix::zeros(dim);
            d = d.add(&at(ki + 2).scale(Complex64::new(-1.0, 0.0)));
            d = d.add(&at(ki + 1).scale(Complex64::new(8.0, 0.0)));
            d = d.add(&at(ki - 1).scale(Complex64::new(-8.0, 0.0)));
            d = d.add(&at(ki - 2).scale(Complex64::new(1.0, 0.0)));
            out.push(d.scale(Complex64::new(1.0 / (12.0 * dt), 0.0)));
        }
        out.push(out[0].clone());
        return Ok(out);
    }

    if n < 3 {
        return Err(PtError::InvalidPath {
            context: "open derivative needs >= 3 samples".into(),
        });
    }
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let d = if k >= 2 && k + 2 < n {
            samples[k + 2]
                .scale(Complex64::new(-1.0, 0.0))
                .add(&samples[k + 1].scale(Complex64::new(8.0, 0.0)))
                .add(&samples[k - 1].scale(Complex64::new(-8.0, 0.0)))
                .add(&samples[k - 2])
                .scale(Complex64::new(1.0 / (12.0 * dt), 0.0))
        } else if k >= 1 && k + 1 < n {
            samples[k + 1]
                .sub(&samples[k - 1])
                .scale(Complex64::new(0.5 / dt, 0.0))
        } else if k == 0 {
            // (-3 f0 + 4 f1 - f2) / (2h)
            samples[0]
                .scale(Complex64::new(-3.0, 0.0))
                .add(&samples[1].scale(Complex64::new(4.0, 0.0)))
                .add(&samples[2].scale(Complex64::new(-1.0, 0.0)))
                .scale(Complex64::new(0.5 / dt, 0.0))
        } else {
            samples[n - 1]
                .scale(Complex64::new(3.0, 0.0))
                .add(&samples[n - 2].scale(Complex64::new(-4.0, 0.0)))
                .add(&samples[n - 3])
                .scale(Complex64::new(0.5 / dt, 0.0))
        };
        out.push(d);
    }
    Ok(out)
}

fn antihermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    a.sub(&a.adjoint()).scale(Complex64::new(0.5, 0.0))
}

/// Properness residual of a sampled map path: for each sample the
/// anti-Hermitian defect of `A = d(S^-1)/dt S`, normalized by the local
/// magnitude of `A` (with a floor of the inverse path duration, so exactly
/// static maps report zero).
///
/// Map families from closed parameter loops close only up to a constant end
/// rotation: `s_inv[n-1] = c s_inv[0]` with `c` unitary (the loop holonomy of
/// the gauge rotation). Such *twisted-periodic* families are auto-detected
/// (the end factor `s_inv[n-1] s[0]` is unitary exactly when the start and
/// end metrics coincide) and differentiated with ghost samples continued by
/// the twist, keeping full stencil order at the seam. Genuinely open families
/// are scored on interior 5-point-stencil samples only; the low-order
/// one-sided ends are not trusted.
pub fn properness_residual(maps: &[SimilarityMap], times: &[f64]) -> Result<f64> {
    if maps.len() != times.len() || maps.len() < 3 {
        return Err(PtError::ShapeMismatch {
            context: format!(
                "properness residual needs >= 3 aligned samples, got {} maps and {} times",
                maps.len(),
                times.len()
            ),
        });
    }
    let n = maps.len();
    let dim = maps[0].s.dim();
    let s_inv: Vec<ComplexMatrix> = maps.iter().map(|m| m.s_inv.clone()).collect();

    // End factor c with s_inv[n-1] = c s_inv[0]; unitary iff the family is
    // (twisted-)periodic.
    let end_factor = s_inv[n - 1].matmul(&maps[0].s);
    let unitary_defect = end_factor
        .adjoint()
        .matmul(&end_factor)
        .sub(&ComplexMatrix::identity(dim))
        .frobenius_norm();
    let twisted = n >= 6 && unitary_defect <= 1e-8;

    let duration = times[times.len() - 1] - times[0];
    let scale_floor = 1.0 / duration.max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;

    if twisted {
        let dt = uniform_step(times)?;
        let m = n - 1; // distinct samples
        let twist = polar_unitary(&end_factor)?;
        let twist_inv = twist.adjoint();
        // Ghost continuation: s_inv[m + j] = twist * s_inv[j],
        // s_inv[-j] = twist^dag * s_inv[m - j].
        let at = |k: isize| -> ComplexMatrix {
            if k < 0 {
                twist_inv.matmul(&s_inv[(k + m as isize) as usize])
            } else if (k as usize) >= m {
                twist.matmul(&s_inv[k as usize - m])
            } else {
                s_inv[k as usize].clone()
            }
        };
        for k in 0..m {
            let ki = k as isize;
            let d = at(ki + 2)
                .scale(Complex64::new(-1.0, 0.0))
                .add(&at(ki + 1).scale(Complex64::new(8.0, 0.0)))
                .add(&at(ki - 1).scale(Complex64::new(-8.0, 0.0)))
                .add(&at(ki - 2))
                .scale(Complex64::new(1.0 / (12.0 * dt), 0.0));
            let a = d.matmul(&maps[k].s);
            let defect = antihermitian_part(&a).frobenius_norm();
            let scale = a.frobenius_norm().max(scale_floor);
            worst = worst.max(defect / scale);
        }
        return Ok(worst);
    }

    let deriv = matrix_derivative(&s_inv, times, false)?;
    // With fewer than 5 samples no full-order stencil exists; fall back to
    // scoring the 2nd-order central samples rather than nothing.
    let lo = if n >= 5 { 2 } else { 1 };
    for (k, map) in maps.iter().enumerate() {
        if k < lo || k + lo >= n {
            continue; // below full stencil order near open ends
        }
        let a = deriv[k].matmul(&map.s);
        let defect = antihermitian_part(&a).frobenius_norm();
        let scale = a.frobenius_norm().max(scale_floor);
        worst = worst.max(defect / scale);
    }
    Ok(worst)
}

/// Square-root maps along a path, with measured properness.
pub fn raw_map_along(sys: &PTSystem, path: &LoopPath) -> Result<MapPath> {
    let tol = *sys.tolerances();
    let mut maps = Vec::with_capacity(path.len());
    for k in 0..path.len() {
        let w = sys.metric_at(path.point(k))?;
        maps.push(sqrt_metric_map(&w, &tol)?);
    }
    let properness = properness_residual(&maps, path.times())?;
    Ok(MapPath {
        maps,
        times: path.times().to_vec(),
        unitaries: None,
        properness,
    })
}

const REUNITARIZE_EVERY: usize = 100;

/// Proper similarity maps along a path: integrates the gauge rotation ODE on
/// top of the square-root maps and certifies the result by its measured
/// properness residual (`StepTooCoarse` if it exceeds the configured
/// tolerance).
pub fn proper_map_along(sys: &PTSystem, path: &LoopPath) -> Result<MapPath> {
    let tol = *sys.tolerances();
    let raw = raw_map_along(sys, path)?;
    let n = raw.maps.len();

    // Generators: antiherm[ d(S^-1)/dt S ] at every sample.
    let s_inv: Vec<ComplexMatrix> = raw.maps.iter().map(|m| m.s_inv.clone()).collect();
    let periodic = path.is_closed();
    let deriv = matrix_derivative(&s_inv, path.times(), periodic)?;
    let gens: Vec<ComplexMatrix> = (0..n)
        .map(|k| antihermitian_part(&deriv[k].matmul(&raw.maps[k].s)))
        .collect();

    // RK4 with the segment-averaged generator as midpoint value.
    let dim = sys.dim();
    let mut u = ComplexMatrix::identity(dim);
    let mut unitaries = Vec::with_capacity(n);
    unitaries.push(u.clone());
    for k in 0..n - 1 {
        let h = path.time(k + 1) - path.time(k);
        let g0 = &gens[k];
        let g1 = &gens[k + 1];
        let gm = g0.add(g1).scale(Complex64::new(0.5, 0.0));

        let k1 = g0.matmul(&u);
        let k2 = gm.matmul(&u.add(&k1.scale(Complex64::new(0.5 * h, 0.0))));
        let k3 = gm.matmul(&u.add(&k2.scale(Complex64::new(0.5 * h, 0.0))));
        let k4 = g1.matmul(&u.add(&k3.scale(Complex64::new(h, 0.0))));
        let step = k1
            .add(&k2.scale(Complex64::new(2.0, 0.0)))
            .add(&k3.scale(Complex64::new(2.0, 0.0)))
            .add(&k4)
            .scale(Complex64::new(h / 6.0, 0.0));
        u = u.add(&step);
        if (k + 1) % REUNITARIZE_EVERY == 0 {
            u = polar_unitary(&u)?;
        }
        unitaries.push(u.clone());
    }

    // Guard the accumulated drift before using the rotations.
    let last = unitaries.last().expect("non-empty");
    let drift = last
        .adjoint()
        .matmul(last)
        .sub(&ComplexMatrix::identity(dim))
        .frobenius_norm();
    if drift > tol.unitarity {
        return Err(PtError::NonConvergence { residual: drift });
    }

    let maps: Vec<SimilarityMap> = raw
        .maps
        .iter()
        .zip(&unitaries)
        .map(|(m, uk)| SimilarityMap {
            s: m.s.matmul(uk),
            s_inv: uk.adjoint().matmul(&m.s_inv),
        })
        .collect();

    let properness = properness_residual(&maps, path.times())?;
    if properness > tol.properness {
        return Err(PtError::StepTooCoarse {
            context: format!(
                "proper-map integration left properness residual {properness:.3e}; \
                 refine the path sampling"
            ),
            residual: properness,
        });
    }
    Ok(MapPath {
        maps,
        times: path.times().to_vec(),
        unitaries: Some(unitaries),
        properness,
    })
}
