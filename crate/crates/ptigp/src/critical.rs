//! Finite-temperature geometric phase transitions.
//!
//! Along a one-parameter family of loops, the IGP `theta_G(param, beta)`
//! jumps by `pi` wherever the interferometric amplitude passes through zero.
//! `critical_scan` finds those points in three stages:
//!
//! 1. **Grid pass** — per-level loop phases are computed once per `param`
//!    column (the expensive spectral work); sweeping `beta` is then pure
//!    arithmetic. Grid edges whose wrapped `theta_G` difference exceeds
//!    `pi/2` are flagged.
//! 2. **Refinement** — flagged points are clustered; each cluster is refined
//!    by bisection on the sign of the measured jump (the jump's sense
//!    reverses exactly at a zero of the amplitude), with the critical `beta`
//!    located per column by a golden-section minimization of `|amplitude|`.
//! 3. **Confirmation** — a refined candidate is kept only when its amplitude
//!    genuinely dips below `1e-3` of the neighboring values, which rejects
//!    the shallow minima a Hermitian (`b = 0`) system produces.

use std::collections::{HashMap, HashSet};

use crate::error::PtError;
use crate::exec::par_map;
use crate::path::LoopPath;
use crate::ptsystem::PTSystem;
use crate::thermal::{igp_from_phases, loop_level_phases, LevelPhases};
use crate::wilson::wrap_symmetric;
use crate::Result;

/// Wrapped `theta_G` change across one grid edge above which the edge is
/// flagged as a jump candidate.
pub const JUMP_FLAG_THRESHOLD: f64 = std::f64::consts::FRAC_PI_2;

/// Post-refinement confirmation: the candidate's amplitude must fall below
/// this fraction of the neighboring amplitudes.
pub const DIP_RATIO: f64 = 1.0e-3;

/// Offset in `beta` at which the jump is measured on either side of a
/// candidate.
pub const JUMP_PROBE_OFFSET: f64 = 1.0e-2;

/// Refinement target width in both axes.
const REFINE_WIDTH: f64 = 2.0e-6;

/// A located finite-temperature geometric phase transition.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    /// Refined loop-family parameter.
    pub param: f64,
    /// Refined inverse temperature.
    pub beta: f64,
    /// Magnitude of the wrapped `theta_G` change measured across the point.
    pub jump: f64,
}

fn validate_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(PtError::InvalidConfig {
            context: format!("{name} grid needs at least 2 points, got {}", grid.len()),
        });
    }
    for pair in grid.windows(2) {
        if !(pair[1] > pair[0]) || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(PtError::InvalidConfig {
                context: format!("{name} grid must be finite and strictly ascending"),
            });
        }
    }
    Ok(())
}

/// Interferometric amplitude and wrapped phase at one `(phases, beta)` cell.
fn cell(phases: &LevelPhases, beta: f64) -> Result<(f64, f64)> {
    let report = igp_from_phases(phases, beta)?;
    Ok((report.theta_g, report.amplitude.norm()))
}

/// Golden-section minimization of a unimodal function on `[a, b]`.
fn golden_min(mut a: f64, mut b: f64, width: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > width {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// The per-column critical data: the `beta` minimizing `|amplitude|`, the
/// signed jump measured `JUMP_PROBE_OFFSET` on either side of it, and the
/// amplitudes at the minimum and at the probes.
struct ColumnProbe {
    beta_star: f64,
    jump: f64,
    amp_min: f64,
    amp_neighbors: f64,
}

fn probe_column(phases: &LevelPhases, beta_lo: f64, beta_hi: f64) -> Result<ColumnProbe> {
    let beta_star = golden_min(beta_lo, beta_hi, REFINE_WIDTH, |beta| {
        Ok(cell(phases, beta)?.1)
    })?;
    let below = (beta_star - JUMP_PROBE_OFFSET).max(0.5 * beta_star);
    let above = beta_star + JUMP_PROBE_OFFSET;
    let (theta_below, amp_below) = cell(phases, below)?;
    let (theta_above, amp_above) = cell(phases, above)?;
    let (_, amp_min) = cell(phases, beta_star)?;
    Ok(ColumnProbe {
        beta_star,
        jump: wrap_symmetric(theta_above - theta_below),
        amp_min,
        amp_neighbors: amp_below.min(amp_above),
    })
}

/// Scans a loop family for finite-temperature geometric phase transitions.
///
/// `family` maps each `param_grid` value to a closed loop; `beta_grid` spans
/// the inverse temperatures. Detection completeness improves with grid
/// resolution (the flag stage needs a grid fine enough that some edge near
/// each transition sees a wrapped change above `pi/2`); `>= 100` points per
/// axis is a sound default. Returns the refined points sorted by parameter,
/// empty when nothing jumps.
pub fn critical_scan<F>(
    sys: &PTSystem,
    family: &F,
    param_grid: &[f64],
    beta_grid: &[f64],
) -> Result<Vec<CriticalPoint>>
where
    F: Fn(f64) -> Result<LoopPath> + Sync,
{
    validate_grid("param", param_grid)?;
    validate_grid("beta", beta_grid)?;
    crate::thermal::validate_beta(beta_grid[0])?;
    crate::thermal::validate_beta(beta_grid[beta_grid.len() - 1])?;

    // Stage 1: one spectral pass per column, arithmetic across beta.
    let columns: Vec<Result<LevelPhases>> = par_map(param_grid, |p| {
        let path = family(*p)?;
        loop_level_phases(sys, &path)
    });
    let mut phase_columns = Vec::with_capacity(columns.len());
    for column in columns {
        phase_columns.push(column?);
    }

    let np = param_grid.len();
    let nb = beta_grid.len();
    let mut theta = vec![vec![0.0f64; nb]; np];
    for i in 0..np {
        for j in 0..nb {
            theta[i][j] = cell(&phase_columns[i], beta_grid[j])?.0;
        }
    }

    let mut flagged: HashSet<(usize, usize)> = HashSet::new();
    for i in 0..np {
        for j in 0..nb {
            if i + 1 < np && wrap_symmetric(theta[i + 1][j] - theta[i][j]).abs() > JUMP_FLAG_THRESHOLD
            {
                flagged.insert((i, j));
                flagged.insert((i + 1, j));
            }
            if j + 1 < nb && wrap_symmetric(theta[i][j + 1] - theta[i][j]).abs() > JUMP_FLAG_THRESHOLD
            {
                flagged.insert((i, j));
                flagged.insert((i, j + 1));
            }
        }
    }
    if flagged.is_empty() {
        return Ok(Vec::new());
    }

    // Stage 2: cluster flagged points into 8-connected components.
    let clusters = connected_components(&flagged);

    let mut points = Vec::new();
    for cluster in clusters {
        let i_lo = cluster.iter().map(|c| c.0).min().unwrap();
        let i_hi = cluster.iter().map(|c| c.0).max().unwrap();
        let j_lo = cluster.iter().map(|c| c.1).min().unwrap();
        let j_hi = cluster.iter().map(|c| c.1).max().unwrap();
        let p_lo = param_grid[i_lo.saturating_sub(1)];
        let p_hi = param_grid[(i_hi + 1).min(np - 1)];
        let b_lo = beta_grid[j_lo.saturating_sub(1)];
        let b_hi = beta_grid[(j_hi + 1).min(nb - 1)];
        if let Some(point) = refine_cluster(sys, family, p_lo, p_hi, b_lo, b_hi)? {
            points.push(point);
        }
    }

    points.sort_by(|a, b| a.param.partial_cmp(&b.param).unwrap());
    points.dedup_by(|a, b| (a.param - b.param).abs() < 1e-3 && (a.beta - b.beta).abs() < 1e-3);
    Ok(points)
}

/// Bisection on the sign of the measured jump over `[p_lo, p_hi]`; the jump
/// reverses sense exactly where the amplitude has a zero.
fn refine_cluster<F>(
    sys: &PTSystem,
    family: &F,
    mut p_lo: f64,
    mut p_hi: f64,
    b_lo: f64,
    b_hi: f64,
) -> Result<Option<CriticalPoint>>
where
    F: Fn(f64) -> Result<LoopPath> + Sync,
{
    let mut memo: HashMap<u64, LevelPhases> = HashMap::new();
    let probe = |p: f64, memo: &mut HashMap<u64, LevelPhases>| -> Result<ColumnProbe> {
        let key = p.to_bits();
        if !memo.contains_key(&key) {
            let path = family(p)?;
            memo.insert(key, loop_level_phases(sys, &path)?);
        }
        probe_column(&memo[&key], b_lo, b_hi)
    };

    let mut lo = probe(p_lo, &mut memo)?;
    let hi = probe(p_hi, &mut memo)?;
    if lo.jump.signum() == hi.jump.signum() {
        return Ok(None);
    }
    while p_hi - p_lo > REFINE_WIDTH {
        let mid = 0.5 * (p_lo + p_hi);
        let m = probe(mid, &mut memo)?;
        if m.jump.signum() == lo.jump.signum() {
            p_lo = mid;
            lo = m;
        } else {
            p_hi = mid;
        }
    }
    let p_star = 0.5 * (p_lo + p_hi);
    let found = probe(p_star, &mut memo)?;

    // Stage 3: a genuine zero, not a shallow crease.
    if found.amp_min >= DIP_RATIO * found.amp_neighbors {
        return Ok(None);
    }
    Ok(Some(CriticalPoint {
        param: p_star,
        beta: found.beta_star,
        jump: found.jump.abs(),
    }))
}

fn connected_components(flagged: &HashSet<(usize, usize)>) -> Vec<Vec<(usize, usize)>> {
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut clusters = Vec::new();
    let mut nodes: Vec<(usize, usize)> = flagged.iter().cloned().collect();
    nodes.sort_unstable();
    for start in nodes {
        if seen.contains(&start) {
            continue;
        }
        let mut stack = vec![start];
        let mut cluster = Vec::new();
        seen.insert(start);
        while let Some((i, j)) = stack.pop() {
            cluster.push((i, j));
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = i as i64 + di;
                    let nj = j as i64 + dj;
                    if ni < 0 || nj < 0 {
                        continue;
                    }
                    let neighbor = (ni as usize, nj as usize);
                    if flagged.contains(&neighbor) && seen.insert(neighbor) {
                        stack.push(neighbor);
                    }
                }
            }
        }
        clusters.push(cluster);
    }
    clusters
}
