//! Sampled parameter-space paths.
//!
//! A path is a sequence of parameter points with times; closed paths repeat
//! the first point exactly as the last so downstream consumers can rely on
//! periodicity of every sampled quantity.

use crate::error::PtError;
use crate::Result;

/// Tolerance for deciding whether first and last sample coincide.
pub const CLOSURE_TOL: f64 = 1e-14;

/// A discretized path through parameter space.
#[derive(Debug, Clone)]
pub struct LoopPath {
    points: Vec<Vec<f64>>,
    times: Vec<f64>,
    closed: bool,
    /// Unwrapped coordinates the final segment of a closed path runs toward.
    ///
    /// Closed paths repeat the first point verbatim as the last sample, which
    /// is right for sampled quantities but wrong for interpolating
    /// *coordinates* across the final segment (a latitude's azimuth must
    /// continue to `2*pi`, not jump back to `0`). Generators that know the
    /// continuation record it here; consumers that interpolate coordinates
    /// use it when present.
    closure_continuation: Option<Vec<f64>>,
}

impl LoopPath {
    /// Builds a path from explicit samples. `points[k]` is the parameter
    /// vector at `times[k]`; times must be strictly increasing. The path is
    /// marked closed when the first and last points agree to `CLOSURE_TOL`
    /// componentwise.
    pub fn new(points: Vec<Vec<f64>>, times: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(PtError::InvalidPath {
                context: format!("need at least 2 samples, got {}", points.len()),
            });
        }
        if points.len() != times.len() {
            return Err(PtError::InvalidPath {
                context: format!(
                    "{} points but {} times",
                    points.len(),
                    times.len()
                ),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(PtError::InvalidPath {
                context: "empty parameter vectors".into(),
            });
        }
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(PtError::InvalidPath {
                    context: format!("sample {k} has dimension {} != {dim}", p.len()),
                });
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(PtError::InvalidPath {
                    context: format!("non-finite coordinate at sample {k}"),
                });
            }
        }
        for k in 1..times.len() {
            if !(times[k] > times[k - 1]) || !times[k].is_finite() {
                return Err(PtError::InvalidPath {
                    context: format!(
                        "times must be strictly increasing: t[{}]={} t[{}]={}",
                        k - 1,
                        times[k - 1],
                        k,
                        times[k]
                    ),
                });
            }
        }
        let first = &points[0];
        let last = &points[points.len() - 1];
        let closed = first
            .iter()
            .zip(last.iter())
            .all(|(a, b)| (a - b).abs() <= CLOSURE_TOL);
        Ok(Self {
            points,
            times,
            closed,
            closure_continuation: None,
        })
    }

    /// Records the unwrapped coordinates of the closure sample (see the field
    /// docs). Rejected on open paths or on dimension mismatch.
    pub fn with_closure_continuation(mut self, point: Vec<f64>) -> Result<Self> {
        if !self.closed {
            return Err(PtError::InvalidPath {
                context: "closure continuation only applies to closed paths".into(),
            });
        }
        if point.len() != self.points[0].len() || point.iter().any(|x| !x.is_finite()) {
            return Err(PtError::InvalidPath {
                context: "closure continuation must be a finite point of the same dimension"
                    .into(),
            });
        }
        self.closure_continuation = Some(point);
        Ok(self)
    }

    /// Unwrapped coordinates of the final sample of a closed path, when the
    /// generator recorded them.
    pub fn closure_continuation(&self) -> Option<&[f64]> {
        self.closure_continuation.as_deref()
    }

    /// Number of samples, including the repeated closure sample on closed
    /// paths.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires >= 2 samples
    }

    /// Number of distinct samples: `len() - 1` on closed paths.
    pub fn segments(&self) -> usize {
        self.points.len() - 1
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.points[k]
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Total traversal time.
    pub fn duration(&self) -> f64 {
        self.times[self.times.len() - 1] - self.times[0]
    }

    /// Whether the time grid is uniform to relative accuracy 1e-12.
    pub fn is_uniform(&self) -> bool {
        let dt0 = self.times[1] - self.times[0];
        self.times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt0).abs() <= 1e-12 * dt0.abs().max(1.0))
    }

    /// Truncated copy containing samples `0..=k` (an open prefix of this
    /// path unless the prefix itself happens to close).
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k < 1 || k >= self.points.len() {
            return Err(PtError::InvalidPath {
                context: format!("prefix end {k} out of range 1..{}", self.points.len()),
            });
        }
        let mut p = LoopPath::new(
            self.points[..=k].to_vec(),
            self.times[..=k].to_vec(),
        )?;
        if k == self.points.len() - 1 {
            p.closure_continuation = self.closure_continuation.clone();
        }
        Ok(p)
    }
}

/// A circle of constant polar angle `theta`, swept once in azimuth over total
/// time `tau` with `samples` uniform segments. Coordinates are `[theta, phi]`.
///
/// The returned path has `samples + 1` points; the last point repeats the
/// first exactly (`phi = 0`), so the closure test holds to machine precision.
pub fn latitude_circle(theta: f64, samples: usize, tau: f64) -> Result<LoopPath> {
    if samples < 2 {
        return Err(PtError::InvalidPath {
            context: format!("latitude circle needs >= 2 segments, got {samples}"),
        });
    }
    if !(theta.is_finite() && tau.is_finite() && tau > 0.0) {
        return Err(PtError::InvalidPath {
            context: format!("bad latitude parameters theta={theta} tau={tau}"),
        });
    }
    let mut points = Vec::with_capacity(samples + 1);
    let mut times = Vec::with_capacity(samples + 1);
    for k in 0..samples {
        let frac = k as f64 / samples as f64;
        points.push(vec![theta, 2.0 * std::f64::consts::PI * frac]);
        times.push(tau * frac);
    }
    points.push(vec![theta, 0.0]); // exact closure
    times.push(tau);
    LoopPath::new(points, times)?
        .with_closure_continuation(vec![theta, 2.0 * std::f64::consts::PI])
}

/// An open meridian arc `phi = const`, `theta` from `theta0` to `theta1`.
pub fn meridian_arc(
    theta0: f64,
    theta1: f64,
    phi: f64,
    samples: usize,
    tau: f64,
) -> Result<LoopPath> {
    if samples < 2 {
        return Err(PtError::InvalidPath {
            context: format!("meridian arc needs >= 2 segments, got {samples}"),
        });
    }
    let mut points = Vec::with_capacity(samples + 1);
    let mut times = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let frac = k as f64 / samples as f64;
        points.push(vec![theta0 + (theta1 - theta0) * frac, phi]);
        times.push(tau * frac);
    }
    LoopPath::new(points, times)
}
