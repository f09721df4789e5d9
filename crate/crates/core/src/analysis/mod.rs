//! Weak-form residuals, vanishing-regularization sweeps and grid
//! convergence studies built on recorded trajectories.

mod convergence;
mod sweep;
mod weak;

pub use convergence::{manufactured_convergence, ConvergenceReport, ManufacturedCase};
pub use sweep::{epsilon_sweep, sweep_threads, SweepConfig, SweepResult, THREADS_ENV};
pub use weak::{
    pairwise_l2, weak_residual, weak_terms, Defeq4Sign, Equation, Mode, TestFunction, Trajectory,
    WeakTerms,
};
