//! Physical inputs and derived quantities.
//!
//! All angular frequencies are stored in rad/s; angles and quadratures are
//! dimensionless. The cavity/laser frequency is computed from the wavelength
//! rather than taken from a rounded tabulated value, and the cavity amplitude
//! decay rate follows the linear-cavity relation
//! `gamma = (free spectral range in angular frequency) / finesse = pi c / (L F)`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Fixed CODATA values, never user-supplied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Speed of light (m/s).
    pub c: f64,
    /// Reduced Planck constant (J s).
    pub hbar: f64,
    /// Boltzmann constant (J/K).
    pub kb: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    c: 299_792_458.0,
    hbar: 1.054_571_817e-34,
    kb: 1.380_649e-23,
};

/// The physical inputs of the model, in SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    /// Cavity length (m).
    #[serde(rename = "L")]
    pub cavity_length: f64,
    /// Laser wavelength (m).
    #[serde(rename = "lambda")]
    pub wavelength: f64,
    /// Mirror angular frequency (rad/s).
    pub omega_phi: f64,
    /// Mirror mass (kg).
    #[serde(rename = "M")]
    pub mass: f64,
    /// Mirror radius (m).
    #[serde(rename = "R")]
    pub radius: f64,
    /// Mechanical quality factor.
    #[serde(rename = "Q_phi")]
    pub quality: f64,
    /// Optical finesse.
    pub finesse: f64,
    /// Orbital angular momentum quantum number (integer >= 0).
    pub l: f64,
    /// Input laser power (W).
    #[serde(rename = "P_in")]
    pub power: f64,
    /// Effective detuning (rad/s), feedback-stabilized regime.
    #[serde(rename = "Delta")]
    pub detuning: f64,
    /// Ambient temperature (K).
    #[serde(rename = "T")]
    pub temperature: f64,
}

impl Default for ParameterSet {
    /// The tabulated operating point: 1 mm cavity, 810 nm laser,
    /// 2pi x 10 MHz mirror, 100 ng / 10 um mirror, Q = 2e6, F = 5e3,
    /// l = 100, 50 mW drive, Delta = omega_phi, and a 1 mK ambient bath.
    fn default() -> Self {
        let omega_phi = 2.0 * std::f64::consts::PI * 1.0e7;
        ParameterSet {
            cavity_length: 1.0e-3,
            wavelength: 810.0e-9,
            omega_phi,
            mass: 1.0e-10,
            radius: 1.0e-5,
            quality: 2.0e6,
            finesse: 5.0e3,
            l: 100.0,
            power: 0.05,
            detuning: omega_phi,
            temperature: 1.0e-3,
        }
    }
}

/// Everything computable from a [`ParameterSet`] alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedQuantities {
    /// Moment of inertia M R^2 / 2 (kg m^2).
    pub inertia: f64,
    /// Optorotational coupling g (rad/s).
    pub coupling: f64,
    /// Cavity amplitude decay rate gamma (rad/s).
    pub gamma: f64,
    /// Mirror damping rate gamma_phi = D_phi / I (rad/s).
    pub gamma_phi: f64,
    /// Mirror damping constant D_phi (J s).
    pub d_phi: f64,
    /// Torque per photon xi_phi = c l hbar / L (N m).
    pub xi_phi: f64,
    /// Cavity/laser angular frequency 2 pi c / lambda (rad/s).
    pub omega_c: f64,
    /// Input photon flux |a_in|^2 = P_in / (hbar omega_c) (photons/s).
    pub photon_flux: f64,
}

fn require_positive(value: f64, field: &'static str) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter {
            field,
            reason: format!("must be strictly positive, got {value}"),
        });
    }
    Ok(())
}

fn require_non_negative(value: f64, field: &'static str) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::InvalidParameter {
            field,
            reason: format!("must be non-negative, got {value}"),
        });
    }
    Ok(())
}

/// Check every domain invariant, reporting the first violated one by
/// field name. `Delta` may take any finite sign.
pub fn validate_parameters(p: &ParameterSet) -> Result<ParameterSet> {
    require_positive(p.cavity_length, "L")?;
    require_positive(p.wavelength, "lambda")?;
    require_positive(p.omega_phi, "omega_phi")?;
    require_positive(p.mass, "M")?;
    require_positive(p.radius, "R")?;
    require_positive(p.quality, "Q_phi")?;
    require_positive(p.finesse, "finesse")?;
    require_non_negative(p.l, "l")?;
    if p.l.fract() != 0.0 {
        return Err(Error::InvalidParameter {
            field: "l",
            reason: format!("must be a non-negative integer, got {}", p.l),
        });
    }
    require_non_negative(p.power, "P_in")?;
    if !p.detuning.is_finite() {
        return Err(Error::InvalidParameter {
            field: "Delta",
            reason: "must be finite".to_string(),
        });
    }
    require_non_negative(p.temperature, "T")?;
    Ok(*p)
}

/// Derive all secondary physical quantities. Assumes `p` validated.
pub fn derive_quantities(p: &ParameterSet, k: &PhysicalConstants) -> DerivedQuantities {
    let inertia = p.mass * p.radius * p.radius / 2.0;
    let gamma_phi = p.omega_phi / p.quality;
    let omega_c = 2.0 * std::f64::consts::PI * k.c / p.wavelength;
    DerivedQuantities {
        inertia,
        coupling: (k.c * p.l / p.cavity_length) * (k.hbar / (inertia * p.omega_phi)).sqrt(),
        gamma: std::f64::consts::PI * k.c / (p.cavity_length * p.finesse),
        gamma_phi,
        d_phi: gamma_phi * inertia,
        xi_phi: k.c * p.l * k.hbar / p.cavity_length,
        omega_c,
        photon_flux: p.power / (k.hbar * omega_c),
    }
}
