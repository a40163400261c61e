//! Geometric phases for finite-dimensional pseudo-Hermitian (PT-symmetric)
//! quantum systems.
//!
//! The crate builds biorthogonal spectra of Hamiltonians that are Hermitian
//! only with respect to a positive-definite metric `W`, constructs proper
//! similarity maps to the Hermitian counterpart by ODE integration, computes
//! the two pure-state geometric phases (`theta1` over biorthogonal sections,
//! `theta2` over Hermitian-counterpart sections) together with the metric
//! Berry form, and evaluates thermal-state interferometric geometric phases
//! (IGP) with a scan that locates finite-temperature phase jumps.

pub mod critical;
pub mod error;
mod exec;
pub mod evolve;
pub mod gaugemap;
pub mod numkernel;
pub mod path;
pub mod phase;
pub mod ptsystem;
pub mod thermal;
pub mod tolerances;
pub mod twolevel;
pub mod wilson;

pub use error::PtError;
pub use tolerances::Tolerances;

/// Convenient alias used across the crate.
pub type Result<T> = std::result::Result<T, PtError>;

/// Maps `f` over `items`, fanning out across threads when the `parallel`
/// feature (default) is enabled. Results keep the input order, so output is
/// identical to the sequential strategy.
pub fn scan_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    exec::par_map(items, f)
}

/// Always-sequential variant of [`scan_map`], for baselines and benchmarks.
pub fn scan_map_sequential<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Send + Sync,
{
    exec::seq_map(items, f)
}
