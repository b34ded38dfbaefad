//! Itô integration of the phase-space equations and ensemble orchestration.

mod ensemble;
mod step;

pub use ensemble::{
    default_burn_in, run_critical_ensemble, run_ensemble, thread_cap, CriticalConfig, CriticalEstimate,
    EnsembleResult, IntegratorConfig, ObservablePlan, TrajectoryRecord,
};
pub use step::{gen_noise, step_critical, step_critical_with, step_plusp, step_wigner, NoiseBlock, NoiseKind, Scheme};
