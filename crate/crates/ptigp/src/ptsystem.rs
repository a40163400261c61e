//! Pseudo-Hermitian systems: a Hamiltonian family `H(x)` together with a
//! positive-definite metric `W(x)` satisfying `W H = H^dag W`.
//!
//! Spectra are computed through the Hermitian rotation `H0 = R H R^{-1}` with
//! `R = sqrt(W)`: eigenvalues come out exactly real and the biorthogonal
//! system `|psi_n> = R^{-1} v_n`, `|phi_n> = W |psi_n> = R v_n` is
//! biorthonormal by construction. Regions where `W` loses positivity are the
//! symmetry-broken phase and are rejected as such.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::PtError;
use crate::exec::par_map;
use crate::numkernel::{eig_hermitian, hermitian_sqrt_with, inner, ComplexMatrix, ComplexVector};
use crate::path::LoopPath;
use crate::tolerances::Tolerances;
use crate::Result;

type MatrixFn = Box<dyn Fn(&[f64]) -> Result<ComplexMatrix> + Send + Sync>;

/// A parametrized pseudo-Hermitian system.
pub struct PTSystem {
    dim: usize,
    coords: usize,
    hamiltonian: MatrixFn,
    metric: MatrixFn,
    tolerances: Tolerances,
}

/// The biorthogonal eigensystem at one parameter point.
///
/// Levels are sorted by ascending energy. For every `n`:
/// `H right[n] = energies[n] right[n]`, `left[n] = W right[n]`, and
/// `<left[m]|right[n]> = delta_mn`.
#[derive(Debug, Clone)]
pub struct BiorthogonalSpectrum {
    pub energies: Vec<f64>,
    pub right: Vec<ComplexVector>,
    pub left: Vec<ComplexVector>,
}

impl PTSystem {
    /// Wraps Hamiltonian and metric maps over a `coords`-dimensional
    /// parameter space into a system of Hilbert-space dimension `dim`.
    pub fn new(dim: usize, coords: usize, hamiltonian: MatrixFn, metric: MatrixFn) -> Self {
        Self {
            dim,
            coords,
            hamiltonian,
            metric,
            tolerances: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension of the parameter space.
    pub fn coords(&self) -> usize {
        self.coords
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    fn check_point(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.coords {
            return Err(PtError::InvalidPath {
                context: format!(
                    "parameter point has {} coordinates, system expects {}",
                    point.len(),
                    self.coords
                ),
            });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(PtError::NonFinite {
                context: "parameter point".into(),
            });
        }
        Ok(())
    }

    /// Evaluates `H(x)`, validating shape and finiteness.
    pub fn hamiltonian_at(&self, point: &[f64]) -> Result<ComplexMatrix> {
        self.check_point(point)?;
        let h = (self.hamiltonian)(point)?;
        if h.dim() != self.dim {
            return Err(PtError::ShapeMismatch {
                context: format!("hamiltonian is {}x{0}, system dim {}", h.dim(), self.dim),
            });
        }
        Ok(h)
    }

    /// Evaluates `W(x)`, validating shape and Hermiticity.
    pub fn metric_at(&self, point: &[f64]) -> Result<ComplexMatrix> {
        self.check_point(point)?;
        let w = (self.metric)(point)?;
        if w.dim() != self.dim {
            return Err(PtError::ShapeMismatch {
                context: format!("metric is {}x{0}, system dim {}", w.dim(), self.dim),
            });
        }
        let res = w.hermiticity_residual();
        if res > self.tolerances.hermiticity {
            return Err(PtError::NotHermitian { residual: res });
        }
        Ok(w)
    }

    /// Relative pseudo-Hermiticity defect `|W H - H^dag W| / |W H|` at a
    /// point. Zero (to round-off) certifies the defining intertwining
    /// relation.
    pub fn pseudo_hermiticity_residual(&self, point: &[f64]) -> Result<f64> {
        let h = self.hamiltonian_at(point)?;
        let w = self.metric_at(point)?;
        let wh = w.matmul(&h);
        let hw = h.adjoint().matmul(&w);
        let denom = wh.frobenius_norm().max(f64::MIN_POSITIVE);
        Ok(wh.sub(&hw).frobenius_norm() / denom)
    }

    /// Full biorthogonal eigensystem at one parameter point.
    ///
    /// Fails with `BrokenPTPhase` where the metric stops being positive
    /// definite (real spectrum is no longer guaranteed there) and with
    /// `NotPseudoHermitian` if `H` and `W` do not actually intertwine.
    pub fn spectrum_at(&self, point: &[f64]) -> Result<BiorthogonalSpectrum> {
        let tol = self.tolerances;
        let h = self.hamiltonian_at(point)?;
        let w = self.metric_at(point)?;

        let root = match hermitian_sqrt_with(&w, tol.hermiticity, tol.positivity) {
            Ok(r) => r,
            Err(PtError::NotPositiveDefinite { min_eigenvalue }) => {
                return Err(PtError::BrokenPTPhase {
                    detail: format!(
                        "metric has non-positive eigenvalue {min_eigenvalue:.6e} at point {point:?}"
                    ),
                })
            }
            Err(e) => return Err(e),
        };
        let root_inv = root.inverse_with(tol.condition_max)?;

        // Hermitian rotation: H0 = R H R^{-1} must be Hermitian.
        let h0 = root.matmul(&h).matmul(&root_inv);
        let h0_res = h0.hermiticity_residual();
        if h0_res > tol.pseudo_hermiticity {
            return Err(PtError::NotPseudoHermitian { residual: h0_res });
        }

        let (energies, basis) = eig_hermitian(&h0)?;

        let norm_h = h.frobenius_norm().max(f64::MIN_POSITIVE);
        for pair in energies.windows(2) {
            let gap = pair[1] - pair[0];
            let threshold = tol.degeneracy * norm_h;
            if gap < threshold {
                return Err(PtError::DegenerateSpectrum {
                    gap,
                    threshold,
                });
            }
        }

        let mut right = Vec::with_capacity(self.dim);
        let mut left = Vec::with_capacity(self.dim);
        for n in 0..self.dim {
            let v = basis.column(n);
            let mut r = root_inv.matvec(&v);
            let mut l = root.matvec(&v);
            // Deterministic gauge: largest-magnitude component of the right
            // vector is real positive. The same phase multiplies the left
            // vector so <l|r> is untouched.
            let z = r[r.argmax_magnitude()];
            if z.norm() > 0.0 {
                let phase = z.conj() / z.norm();
                r = r.scale(phase);
                l = l.scale(phase);
            }
            // Exact biorthonormalization (c is 1 up to round-off already).
            let c = inner(&l, &r);
            if c.re <= 0.0 || c.im.abs() > 1e-8 * c.re.abs().max(1.0) {
                return Err(PtError::NonConvergence {
                    residual: (c - Complex64::new(1.0, 0.0)).norm(),
                });
            }
            let rescale = Complex64::new(1.0 / c.re.sqrt(), 0.0);
            right.push(r.scale(rescale));
            left.push(l.scale(rescale));
        }

        let spectrum = BiorthogonalSpectrum {
            energies,
            right,
            left,
        };
        self.validate_spectrum(&h, &spectrum)?;
        Ok(spectrum)
    }

    /// Always-on invariant checks for a freshly computed spectrum.
    fn validate_spectrum(&self, h: &ComplexMatrix, s: &BiorthogonalSpectrum) -> Result<()> {
        let tol = self.tolerances;
        let norm_h = h.frobenius_norm().max(f64::MIN_POSITIVE);

        let mut bior = 0.0f64;
        for m in 0..self.dim {
            for n in 0..self.dim {
                let o = inner(&s.left[m], &s.right[n]);
                let target = if m == n { 1.0 } else { 0.0 };
                bior = bior.max((o - Complex64::new(target, 0.0)).norm());
            }
        }
        if bior > tol.biorthonormality {
            return Err(PtError::NonConvergence { residual: bior });
        }

        let mut completeness = ComplexMatrix::identity(self.dim);
        for n in 0..self.dim {
            completeness = completeness.sub(&ComplexMatrix::outer(&s.right[n], &s.left[n]));
        }
        let comp_res = completeness.frobenius_norm();
        if comp_res > tol.completeness {
            return Err(PtError::NonConvergence { residual: comp_res });
        }

        let h_adj = h.adjoint();
        for n in 0..self.dim {
            let e = Complex64::new(s.energies[n], 0.0);
            let r_res = h.matvec(&s.right[n]).sub(&s.right[n].scale(e)).norm()
                / (norm_h * s.right[n].norm().max(f64::MIN_POSITIVE));
            if r_res > tol.eig_residual {
                return Err(PtError::NonConvergence { residual: r_res });
            }
            let l_res = h_adj.matvec(&s.left[n]).sub(&s.left[n].scale(e)).norm()
                / (norm_h * s.left[n].norm().max(f64::MIN_POSITIVE));
            if l_res > tol.left_state {
                return Err(PtError::NonConvergence { residual: l_res });
            }
        }
        Ok(())
    }

    /// Spectra along a sampled path with continuous level identification.
    ///
    /// Levels are matched between consecutive samples by maximal
    /// left-to-right overlap; an ambiguous match (`< match_ambiguity`)
    /// reports `LevelOrderSwap`. On a closed path the final sample reuses the
    /// first sample's states verbatim, so every sampled section is exactly
    /// periodic in its raw (per-point) gauge.
    pub fn spectrum_along(&self, path: &LoopPath) -> Result<SpectralPath> {
        if path.len() < 2 {
            return Err(PtError::InvalidPath {
                context: "spectral path needs at least 2 samples".into(),
            });
        }
        let closed = path.is_closed();
        let distinct = if closed { path.len() - 1 } else { path.len() };

        let indices: Vec<usize> = (0..distinct).collect();
        let computed: Vec<Result<BiorthogonalSpectrum>> =
            par_map(&indices, |&k| self.spectrum_at(path.point(k)));
        let mut spectra = Vec::with_capacity(path.len());
        for s in computed {
            spectra.push(s?);
        }
        if closed {
            // Same point, same deterministic gauge: periodicity is exact.
            spectra.push(spectra[0].clone());
        }

        let tol = self.tolerances;
        let levels = self.dim;

        // Chain matching: permute each sample to follow the previous one.
        for k in 1..spectra.len() {
            let last = k == spectra.len() - 1 && closed;
            if last {
                // The closure sample must continue the chain with the
                // identity assignment, otherwise levels braided en route.
                for n in 0..levels {
                    let o = inner(&spectra[k - 1].left[n], &spectra[k].right[n]).norm();
                    if o < tol.match_ambiguity {
                        return Err(PtError::LevelOrderSwap {
                            sample: k - 1,
                            next: k,
                            overlap: o,
                        });
                    }
                }
                continue;
            }
            let mut perm = vec![usize::MAX; levels];
            let mut used = vec![false; levels];
            for n in 0..levels {
                let mut best = (0usize, -1.0f64);
                for (m, &taken) in used.iter().enumerate() {
                    if taken {
                        continue;
                    }
                    let o = inner(&spectra[k - 1].left[n], &spectra[k].right[m]).norm();
                    if o > best.1 {
                        best = (m, o);
                    }
                }
                if best.1 < tol.match_ambiguity {
                    return Err(PtError::LevelOrderSwap {
                        sample: k - 1,
                        next: k,
                        overlap: best.1,
                    });
                }
                perm[n] = best.0;
                used[best.0] = true;
            }
            if perm.iter().enumerate().any(|(n, &m)| n != m) {
                let src = spectra[k].clone();
                for (n, &m) in perm.iter().enumerate() {
                    spectra[k].energies[n] = src.energies[m];
                    spectra[k].right[n] = src.right[m].clone();
                    spectra[k].left[n] = src.left[m].clone();
                }
            }
        }

        // Continuous raw gauge: re-phase every sample of a level against one
        // fixed reference component (chosen to stay farthest from zero along
        // the whole path). Per-sample conventions such as the pointwise
        // argmax gauge can flip reference between neighboring samples, which
        // would inject O(1) phase jumps into segment overlaps and corrupt
        // unwrapped phase sums; a single path-wide reference cannot.
        for n in 0..levels {
            let mut best = (0usize, -1.0f64);
            for j in 0..self.dim {
                let min_mag = spectra
                    .iter()
                    .map(|s| s.right[n][j].norm() / s.right[n].norm().max(f64::MIN_POSITIVE))
                    .fold(f64::INFINITY, f64::min);
                if min_mag > best.1 {
                    best = (j, min_mag);
                }
            }
            let (reference, min_mag) = best;
            if min_mag < 1e-3 {
                return Err(PtError::NoStableGauge {
                    level: n,
                    magnitude: min_mag,
                });
            }
            for s in spectra.iter_mut() {
                let z = s.right[n][reference];
                let phase = z.conj() / z.norm();
                s.right[n] = s.right[n].scale(phase);
                s.left[n] = s.left[n].scale(phase);
            }
        }

        // Smoothed gauge: rotate each sample's phase so consecutive
        // left-right overlaps are real positive along every level.
        let mut smooth_right: Vec<Vec<ComplexVector>> =
            spectra.iter().map(|s| s.right.clone()).collect();
        let mut smooth_left: Vec<Vec<ComplexVector>> =
            spectra.iter().map(|s| s.left.clone()).collect();
        for k in 1..spectra.len() {
            for n in 0..levels {
                let o = inner(&smooth_left[k - 1][n], &smooth_right[k][n]);
                let mag = o.norm();
                if mag < tol.zero_overlap {
                    return Err(PtError::ZeroOverlap {
                        level: n,
                        sample: k - 1,
                        next: k,
                        magnitude: mag,
                    });
                }
                let phase = o.conj() / mag;
                smooth_right[k][n] = smooth_right[k][n].scale(phase);
                smooth_left[k][n] = smooth_left[k][n].scale(phase);
            }
        }

        Ok(SpectralPath {
            path: path.clone(),
            levels,
            energies: spectra.iter().map(|s| s.energies.clone()).collect(),
            raw_right: spectra.iter().map(|s| s.right.clone()).collect(),
            raw_left: spectra.into_iter().map(|s| s.left).collect(),
            smooth_right,
            smooth_left,
        })
    }
}

/// Biorthogonal spectra sampled along a path, with levels identified
/// continuously.
///
/// Two aligned gauges are kept for every sample and level:
/// - the *raw* gauge is the deterministic per-point gauge (exactly periodic
///   on closed paths), used for holonomy products;
/// - the *smooth* gauge has real-positive consecutive overlaps per level,
///   used for transport operators and open-path bookkeeping.
#[derive(Debug, Clone)]
pub struct SpectralPath {
    path: LoopPath,
    levels: usize,
    energies: Vec<Vec<f64>>,
    raw_right: Vec<Vec<ComplexVector>>,
    raw_left: Vec<Vec<ComplexVector>>,
    smooth_right: Vec<Vec<ComplexVector>>,
    smooth_left: Vec<Vec<ComplexVector>>,
}

impl SpectralPath {
    pub fn path(&self) -> &LoopPath {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn is_closed(&self) -> bool {
        self.path.is_closed()
    }

    pub fn energy(&self, sample: usize, level: usize) -> f64 {
        self.energies[sample][level]
    }

    /// Energies of one level along the path.
    pub fn level_energies(&self, level: usize) -> Vec<f64> {
        self.energies.iter().map(|e| e[level]).collect()
    }

    pub fn right(&self, sample: usize, level: usize) -> &ComplexVector {
        &self.raw_right[sample][level]
    }

    pub fn left(&self, sample: usize, level: usize) -> &ComplexVector {
        &self.raw_left[sample][level]
    }

    pub fn smooth_right(&self, sample: usize, level: usize) -> &ComplexVector {
        &self.smooth_right[sample][level]
    }

    pub fn smooth_left(&self, sample: usize, level: usize) -> &ComplexVector {
        &self.smooth_left[sample][level]
    }
}

/// Static description of a registered model.
#[derive(Debug, Clone)]
pub struct ModelInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub dim: usize,
    pub coordinates: &'static [&'static str],
    /// Parameter names with default values.
    pub parameters: &'static [(&'static str, f64)],
}

const TWO_LEVEL_PT: ModelInfo = ModelInfo {
    name: "two-level-pt",
    description: "two-level pseudo-Hermitian system: H = eps + (a nr + i b nt) . sigma, \
                  metric W = 1 - (b/a) np . sigma on the (theta, phi) sphere",
    dim: 2,
    coordinates: &["theta", "phi"],
    parameters: &[("a", 3.0), ("b", 2.2360679774997896), ("epsilon", 0.0)],
};

const HERMITIAN_SPIN_HALF: ModelInfo = ModelInfo {
    name: "hermitian-spin-half",
    description: "Hermitian control model: H = eps + (omega/2) nr . sigma with trivial \
                  metric W = 1",
    dim: 2,
    coordinates: &["theta", "phi"],
    parameters: &[("omega", 2.0), ("epsilon", 0.0)],
};

/// All registered models.
pub fn list_models() -> Vec<ModelInfo> {
    vec![TWO_LEVEL_PT, HERMITIAN_SPIN_HALF]
}

/// Unit vectors of the spherical frame at `(theta, phi)`.
fn spherical_frame(theta: f64, phi: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let nr = [st * cp, st * sp, ct];
    let nt = [ct * cp, ct * sp, -st];
    let np = [-sp, cp, 0.0];
    (nr, nt, np)
}

/// `v . sigma` for a complex coefficient vector.
fn dot_sigma(v: [Complex64; 3]) -> ComplexMatrix {
    let i = Complex64::new(0.0, 1.0);
    ComplexMatrix::from_rows(&[
        vec![v[2], v[0] - i * v[1]],
        vec![v[0] + i * v[1], -v[2]],
    ])
    .expect("2x2 pauli combination")
}

fn real_sigma(v: [f64; 3]) -> ComplexMatrix {
    dot_sigma([
        Complex64::new(v[0], 0.0),
        Complex64::new(v[1], 0.0),
        Complex64::new(v[2], 0.0),
    ])
}

/// Builds a registered model by name with parameter overrides.
pub fn build_model(name: &str, overrides: &BTreeMap<String, f64>) -> Result<PTSystem> {
    let info = list_models()
        .into_iter()
        .find(|m| m.name == name)
        .ok_or_else(|| PtError::UnknownModel {
            name: name.to_string(),
        })?;

    let mut params: BTreeMap<String, f64> = info
        .parameters
        .iter()
        .map(|&(k, v)| (k.to_string(), v))
        .collect();
    for (k, v) in overrides {
        if !params.contains_key(k) {
            return Err(PtError::InvalidParameters {
                context: format!(
                    "model `{name}` has no parameter `{k}` (available: {})",
                    info.parameters
                        .iter()
                        .map(|(p, _)| *p)
                        .collect::<Vec<_>>()
                        .join(", ")
                ),
            });
        }
        if !v.is_finite() {
            return Err(PtError::InvalidParameters {
                context: format!("parameter `{k}` is not finite"),
            });
        }
        params.insert(k.clone(), *v);
    }

    match name {
        "two-level-pt" => {
            let a = params["a"];
            let b = params["b"];
            let eps = params["epsilon"];
            if a <= 0.0 || b < 0.0 {
                return Err(PtError::InvalidParameters {
                    context: format!("two-level-pt needs a > 0 and b >= 0, got a={a} b={b}"),
                });
            }
            let ratio = b / a;
            let hamiltonian: MatrixFn = Box::new(move |x: &[f64]| {
                let (theta, phi) = (x[0], x[1]);
                let (nr, nt, _) = spherical_frame(theta, phi);
                let coeff = [
                    Complex64::new(a * nr[0], b * nt[0]),
                    Complex64::new(a * nr[1], b * nt[1]),
                    Complex64::new(a * nr[2], b * nt[2]),
                ];
                let mut h = dot_sigma(coeff);
                for d in 0..2 {
                    let v = h.get(d, d) + Complex64::new(eps, 0.0);
                    h.set(d, d, v);
                }
                Ok(h)
            });
            let metric: MatrixFn = Box::new(move |x: &[f64]| {
                let (_, phi) = (x[0], x[1]);
                let (_, _, np) = spherical_frame(x[0], phi);
                let mut w = real_sigma([-ratio * np[0], -ratio * np[1], -ratio * np[2]]);
                for d in 0..2 {
                    let v = w.get(d, d) + Complex64::new(1.0, 0.0);
                    w.set(d, d, v);
                }
                Ok(w)
            });
            Ok(PTSystem::new(2, 2, hamiltonian, metric))
        }
        "hermitian-spin-half" => {
            let omega = params["omega"];
            let eps = params["epsilon"];
            if omega <= 0.0 {
                return Err(PtError::InvalidParameters {
                    context: format!("hermitian-spin-half needs omega > 0, got {omega}"),
                });
            }
            let hamiltonian: MatrixFn = Box::new(move |x: &[f64]| {
                let (nr, _, _) = spherical_frame(x[0], x[1]);
                let half = 0.5 * omega;
                let mut h = real_sigma([half * nr[0], half * nr[1], half * nr[2]]);
                for d in 0..2 {
                    let v = h.get(d, d) + Complex64::new(eps, 0.0);
                    h.set(d, d, v);
                }
                Ok(h)
            });
            let metric: MatrixFn = Box::new(|_: &[f64]| Ok(ComplexMatrix::identity(2)));
            Ok(PTSystem::new(2, 2, hamiltonian, metric))
        }
        _ => unreachable!("registry covered above"),
    }
}

/// Convenience constructor for the default two-level system
/// (`a = 3`, `b = sqrt 5`, `epsilon = 0`).
pub fn default_two_level() -> PTSystem {
    build_model("two-level-pt", &BTreeMap::new()).expect("default model builds")
}
