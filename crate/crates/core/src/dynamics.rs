//! Linearized fluctuation model, stability certification, and the
//! effective mechanical response of the driven mirror.
//!
//! The fluctuation vector is ordered (delta_phi, delta_Lz, delta_X, delta_Y)
//! throughout the crate.

use crate::error::{Error, Result};
use crate::params::{DerivedQuantities, ParameterSet, CONSTANTS};
use crate::steadystate::SteadyState;
use nalgebra::Matrix4;

/// Drift and diffusion matrices of the linearized Langevin dynamics,
/// together with the rates that built them.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// 4x4 drift matrix (rad/s).
    pub drift: Matrix4<f64>,
    /// 4x4 diagonal diffusion matrix.
    pub diffusion: Matrix4<f64>,
    /// Effective detuning (rad/s).
    pub detuning: f64,
    /// Effective coupling G (rad/s).
    pub coupling_eff: f64,
    /// Cavity decay rate (rad/s).
    pub gamma: f64,
    /// Mirror damping rate (rad/s).
    pub gamma_phi: f64,
    /// Mirror frequency (rad/s).
    pub omega_phi: f64,
    /// Mean thermal occupancy entering the diffusion matrix.
    pub nbar: f64,
}

impl LinearModel {
    /// Assemble the model directly from rates. Used by the randomized
    /// verification suite; the physical pipeline goes through
    /// [`build_linear_model`].
    pub fn from_rates(
        omega_phi: f64,
        gamma_phi: f64,
        coupling_eff: f64,
        detuning: f64,
        gamma: f64,
        nbar: f64,
    ) -> Self {
        let drift = Matrix4::new(
            0.0, omega_phi, 0.0, 0.0, //
            -omega_phi, -gamma_phi, coupling_eff, 0.0, //
            0.0, 0.0, -gamma / 2.0, detuning, //
            coupling_eff, 0.0, -detuning, -gamma / 2.0,
        );
        let diffusion = Matrix4::from_diagonal(&nalgebra::Vector4::new(
            0.0,
            gamma_phi * (2.0 * nbar + 1.0),
            gamma / 2.0,
            gamma / 2.0,
        ));
        LinearModel {
            drift,
            diffusion,
            detuning,
            coupling_eff,
            gamma,
            gamma_phi,
            omega_phi,
            nbar,
        }
    }
}

/// Build the drift/diffusion pair at an operating point. `nbar` is the
/// occupancy evaluated at the effective mirror frequency.
pub fn build_linear_model(
    ss: &SteadyState,
    p: &ParameterSet,
    d: &DerivedQuantities,
    nbar: f64,
) -> LinearModel {
    LinearModel::from_rates(
        p.omega_phi,
        d.gamma_phi,
        ss.coupling_eff,
        p.detuning,
        d.gamma,
        nbar,
    )
}

/// Routh-Hurwitz verdict cross-checked against the drift spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub routh_hurwitz_pass: bool,
    /// Signed left-hand sides of the two stability inequalities,
    /// with D_phi / I = gamma_phi substituted (divided through by I^3).
    pub inequality_values: [f64; 2],
    /// Max real part of the drift eigenvalues (rad/s).
    pub spectral_abscissa: f64,
    /// Whether the algebraic and spectral verdicts agree.
    pub consistent: bool,
}

/// Evaluate the two stability inequalities and the drift spectrum.
///
/// The eigenvalue check is authoritative for downstream gating; the
/// inequality values are reported alongside it.
pub fn assess_stability(m: &LinearModel) -> Result<StabilityVerdict> {
    let (w, gp, g2, dl, ga) = (
        m.omega_phi,
        m.gamma_phi,
        m.coupling_eff * m.coupling_eff,
        m.detuning,
        m.gamma,
    );
    let i1 = gp * ga
        * (16.0 * w.powi(4)
            + 32.0 * g2 * w * dl
            + 8.0 * w * w * (ga * ga - 4.0 * dl * dl)
            + (ga * ga + 4.0 * dl * dl).powi(2))
        + 16.0 * g2 * w * ga * ga * dl
        + 4.0 * gp.powi(3) * (ga.powi(3) + 4.0 * ga * dl * dl)
        + 4.0 * gp * gp * (4.0 * w * w * ga * ga + ga.powi(4) + 4.0 * g2 * w * dl + 4.0 * ga * ga * dl * dl);
    let i2 = w * (ga * ga + 4.0 * dl * dl) - 4.0 * g2 * dl;
    let pass = i1 > 0.0 && i2 > 0.0;

    let abscissa = spectral_abscissa(&m.drift)?;
    Ok(StabilityVerdict {
        routh_hurwitz_pass: pass,
        inequality_values: [i1, i2],
        spectral_abscissa: abscissa,
        consistent: pass == (abscissa < 0.0),
    })
}

/// Max real part of the eigenvalues, via the real Schur form.
pub fn spectral_abscissa(b: &Matrix4<f64>) -> Result<f64> {
    let schur = nalgebra::Schur::try_new(*b, 1e-14, 10_000)
        .or_else(|| nalgebra::Schur::try_new(*b, 1e-10, 100_000))
        .ok_or(Error::EigenSolver)?;
    let eigs = schur.complex_eigenvalues();
    Ok(eigs.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max))
}

/// Effective mechanical response of the mirror in the radiation field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveResponse {
    /// Self-consistent effective rotation frequency (rad/s).
    pub omega_eff: f64,
    /// Effective damping constant (J s).
    pub d_eff: f64,
    /// Effective mirror temperature (D_phi / D_eff) T (K).
    pub t_eff: f64,
    /// Crossover temperature hbar omega_eff / (4 kB) (K).
    pub t_crossover: f64,
    /// Thermal occupancy at omega_eff and ambient T.
    pub nbar: f64,
    /// Mirror phonon number kB T_eff / (hbar omega_eff).
    pub n_m: f64,
}

/// Squared effective frequency evaluated at response frequency `omega`.
fn omega_eff_sq(m_omega_phi: f64, g: f64, delta: f64, gamma: f64, omega: f64) -> f64 {
    let half2 = (gamma / 2.0).powi(2);
    let denom = (half2 + (omega - delta).powi(2)) * (half2 + (omega + delta).powi(2));
    m_omega_phi * m_omega_phi
        - g * g * m_omega_phi * delta * (half2 - omega * omega + delta * delta) / denom
}

/// Damping-rate correction at response frequency `omega`.
fn gamma_eff(gamma_phi: f64, omega_phi: f64, g: f64, delta: f64, gamma: f64, omega: f64) -> f64 {
    let half2 = (gamma / 2.0).powi(2);
    let denom = (half2 + (omega - delta).powi(2)) * (half2 + (omega + delta).powi(2));
    gamma_phi + g * g * omega_phi * delta * gamma / denom
}

/// Solve the self-consistency omega = omega_eff(omega) by fixed-point
/// iteration from omega_phi, then fill in the effective damping and
/// thermal quantities at the converged frequency.
pub fn effective_response(
    ss: &SteadyState,
    p: &ParameterSet,
    d: &DerivedQuantities,
) -> Result<EffectiveResponse> {
    let g = ss.coupling_eff;
    let tol = 1e-10;
    let mut last = p.omega_phi;
    let mut converged = None;
    // plain iteration first, then a 0.5-damped retry
    'attempts: for damping in [1.0, 0.5] {
        let mut w = p.omega_phi;
        for _ in 0..1000 {
            let w2 = omega_eff_sq(p.omega_phi, g, p.detuning, d.gamma, w);
            if !(w2 > 0.0) {
                last = w;
                continue 'attempts;
            }
            let next = (1.0 - damping) * w + damping * w2.sqrt();
            let done = (next - w).abs() <= tol * w.abs().max(p.omega_phi);
            w = next;
            last = w;
            if done {
                converged = Some(w);
                break 'attempts;
            }
        }
    }
    let omega_eff = converged.ok_or(Error::NonConvergence { last })?;

    let g_eff = gamma_eff(d.gamma_phi, p.omega_phi, g, p.detuning, d.gamma, omega_eff);
    let d_eff = g_eff * d.inertia;
    let t_eff = (d.d_phi / d_eff) * p.temperature;
    let nbar = thermal_occupancy(omega_eff, p.temperature);
    Ok(EffectiveResponse {
        omega_eff,
        d_eff,
        t_eff,
        t_crossover: CONSTANTS.hbar * omega_eff / (4.0 * CONSTANTS.kb),
        nbar,
        n_m: CONSTANTS.kb * t_eff / (CONSTANTS.hbar * omega_eff),
    })
}

/// Mean thermal phonon number 1 / (exp(hbar omega / kB T) - 1), continuously
/// extended to 0 at T = 0.
pub fn thermal_occupancy(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        return 0.0;
    }
    let x = CONSTANTS.hbar * omega / (CONSTANTS.kb * temperature);
    if x > 700.0 {
        0.0
    } else {
        1.0 / x.exp_m1()
    }
}
