//! Stationary quantum correlations of a rotating-mirror cavity.
//!
//! The crate models a driven optical cavity mode carrying orbital angular
//! momentum, coupled by radiation torque to the rotation of one mirror.
//! It computes the semiclassical steady state, linearizes the dynamics,
//! decides stability, solves the stationary Lyapunov equation by three
//! independent routes, and quantifies mirror-field entanglement through
//! the logarithmic negativity.

pub mod dynamics;
pub mod entanglement;
pub mod error;
pub mod lyapunov;
pub mod params;
pub mod steadystate;
pub mod sweeps;
pub mod verify;

pub use dynamics::{
    assess_stability, build_linear_model, effective_response, thermal_occupancy,
    EffectiveResponse, LinearModel, StabilityVerdict,
};
pub use entanglement::{
    check_physicality, eta_minus_partial_transpose, fit_low_temperature, log_negativity,
    symplectic_eigenvalues, two_mode_squeezed_covariance, EntanglementReport, LowTemperatureFit,
};
pub use error::{Error, Result};
pub use lyapunov::{
    covariance_quadrature_oracle, lyapunov_residual, solve_lyapunov_direct,
    solve_lyapunov_elimination, CovarianceMatrix,
};
pub use params::{
    derive_quantities, validate_parameters, DerivedQuantities, ParameterSet, PhysicalConstants,
    CONSTANTS,
};
pub use steadystate::{bistability_roots, steady_state, SteadyState};
pub use sweeps::{
    evaluate_point, find_threshold, parse_config, render_outputs, run_sweep, PointEvaluation,
    SweepAxis, SweepResult, SweepRow, SweepSpec,
};
pub use verify::{compare_solvers, run_verification, AgreementRecord, VerificationSummary};
