//! Discrete holonomy accumulation.
//!
//! The log-holonomy of a sampled section pair is accumulated from
//! symmetrized segment increments
//!
//! ```text
//! l_k = (1/2) [ Log <phi_k | psi_{k+1}>  -  Log <phi_{k+1} | psi_k> ]
//! ```
//!
//! Both factors expand around sample `k` with opposite first-order terms, so
//! the combination is a second-order-accurate quadrature of
//! `integral <phi | d/dt psi> dt`; a plain product of forward overlaps is
//! only first-order. Per-segment increments are tiny on resolved paths, so
//! their running sum is the *unwrapped* logarithm: real parts accumulate
//! magnitude decay, imaginary parts accumulate phase including full windings.

use num_complex::Complex64;

use crate::error::PtError;
use crate::numkernel::{inner, ComplexVector};
use crate::Result;

/// Symmetrized logarithmic increment for the segment `k -> k+1`.
///
/// Fails with `ZeroOverlap` when either cross-overlap magnitude falls below
/// `zero_tol` (the section is too coarse or passes through a node).
pub fn symmetric_increment(
    left_k: &ComplexVector,
    right_k: &ComplexVector,
    left_k1: &ComplexVector,
    right_k1: &ComplexVector,
    level: usize,
    segment: usize,
    zero_tol: f64,
) -> Result<Complex64> {
    let forward = inner(left_k, right_k1);
    let backward = inner(left_k1, right_k);
    for o in [forward, backward] {
        if o.norm() < zero_tol {
            return Err(PtError::ZeroOverlap {
                level,
                sample: segment,
                next: segment + 1,
                magnitude: o.norm(),
            });
        }
    }
    Ok(0.5 * (forward.ln() - backward.ln()))
}

/// Cumulative log-holonomy along a section: `out[k] = sum of l_j for j < k`,
/// so `out[0] = 0` and `out[last]` is the total unwrapped logarithm.
///
/// `left[k]` and `right[k]` must be the same level's sections on a common
/// sample grid; `level` only labels errors.
pub fn cumulative_log_holonomy(
    left: &[&ComplexVector],
    right: &[&ComplexVector],
    level: usize,
    zero_tol: f64,
) -> Result<Vec<Complex64>> {
    if left.len() != right.len() || left.len() < 2 {
        return Err(PtError::ShapeMismatch {
            context: format!(
                "log-holonomy needs matching sections with >= 2 samples, got {} and {}",
                left.len(),
                right.len()
            ),
        });
    }
    let mut partial = Vec::with_capacity(left.len());
    partial.push(Complex64::new(0.0, 0.0));
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..left.len() - 1 {
        acc += symmetric_increment(
            left[k],
            right[k],
            left[k + 1],
            right[k + 1],
            level,
            k,
            zero_tol,
        )?;
        partial.push(acc);
    }
    Ok(partial)
}

/// Total unwrapped log-holonomy (last entry of the cumulative sums).
pub fn log_holonomy(
    left: &[&ComplexVector],
    right: &[&ComplexVector],
    level: usize,
    zero_tol: f64,
) -> Result<Complex64> {
    Ok(*cumulative_log_holonomy(left, right, level, zero_tol)?
        .last()
        .expect("non-empty by construction"))
}

/// Wraps an angle into `[0, 2*pi)`.
pub fn wrap_to_two_pi(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = x % two_pi;
    if r < 0.0 {
        r += two_pi;
    }
    // Guard against -0.0 and the wrap of values within round-off of 2*pi.
    if r >= two_pi {
        r -= two_pi;
    }
    if r == 0.0 {
        r = 0.0;
    }
    r
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_symmetric(x: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut r = x % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

/// Winding number implied by an unwrapped angle: the integer `n` with
/// `x = wrap_symmetric(x) + 2*pi*n`.
pub fn branch_index(x: f64) -> i64 {
    ((x - wrap_symmetric(x)) / (2.0 * std::f64::consts::PI)).round() as i64
}
