//! Simulation and closed-form oracles for the nondegenerate optical parametric oscillator.
//!
//! Positive-P and truncated-Wigner trajectories are integrated in the frame where the
//! signal damping is one, reduced to output spectra, moments and triple correlations,
//! and compared with perturbative and critical-point formulas.

// `!(x > 0.0)` is how NaN gets rejected; quadrature nodes keep their published digits
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analytic;
pub mod epr;
pub mod error;
pub mod model;
pub mod quad;
pub mod sde;
pub mod spectra;
pub mod stats;

pub use error::{NopoError, Result};
pub use num_complex::Complex64;
pub use model::{
    classical_steady_state, critical_rescale, derive_scaled, quadratures_from_state, CriticalParams, PhaseState,
    PhysicalParams, QuadratureSample, Quadratures, Representation, ScaledParams,
};
pub use sde::{run_ensemble, EnsembleResult, IntegratorConfig, ObservablePlan, Scheme};
pub use spectra::{SpectralSettings, SpectrumEstimate, TripleSettings};
pub use stats::Estimate;
