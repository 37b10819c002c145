//! Semiclassical steady state and the bistability cubic.

use crate::error::Result;
use crate::params::{DerivedQuantities, ParameterSet};

/// Steady state of the driven cavity and the linearized coupling strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    /// Intracavity field amplitude, real and non-negative (phase fixed).
    pub amplitude: f64,
    /// Equilibrium angular deflection phi_s = g a_s^2 / omega_phi.
    pub deflection: f64,
    /// Steady angular momentum, always zero.
    pub angular_momentum: f64,
    /// Effective optorotational coupling G = g a_s sqrt(2) (rad/s).
    pub coupling_eff: f64,
    /// Bare detuning delta = Delta + g phi_s (rad/s).
    pub delta_bare: f64,
}

/// Compute the steady state for a given effective detuning.
///
/// The pipeline is parameterized by the effective detuning Delta, assuming
/// a feedback-stabilized cavity; the bare detuning is reported back out.
pub fn steady_state(p: &ParameterSet, d: &DerivedQuantities) -> Result<SteadyState> {
    let denom = (d.gamma / 2.0).powi(2) + p.detuning * p.detuning;
    let amplitude = (d.gamma * d.photon_flux / denom).sqrt();
    let deflection = d.coupling * amplitude * amplitude / p.omega_phi;
    Ok(SteadyState {
        amplitude,
        deflection,
        angular_momentum: 0.0,
        coupling_eff: d.coupling * amplitude * 2.0_f64.sqrt(),
        delta_bare: p.detuning + d.coupling * deflection,
    })
}

/// All real roots phi_s of the bistability cubic, sorted ascending.
///
/// Substituting the intracavity intensity into phi_s = g a_s^2 / omega_phi
/// with Delta = delta - g phi_s gives
///
/// ```text
/// g^2 phi^3 - 2 delta g phi^2 + ((gamma/2)^2 + delta^2) phi - g gamma Phi / omega_phi = 0
/// ```
///
/// where Phi is the input photon flux. Near-coincident roots are collapsed,
/// so the returned count is 1 or 3.
pub fn bistability_roots(p: &ParameterSet, d: &DerivedQuantities, delta_bare: f64) -> Vec<f64> {
    let g = d.coupling;
    let half = d.gamma / 2.0;
    let a = g * g;
    let b = -2.0 * delta_bare * g;
    let c = half * half + delta_bare * delta_bare;
    let k = -g * d.gamma * d.photon_flux / p.omega_phi;
    let mut roots = cubic_real_roots(a, b, c, k);
    // polish with Newton on the original cubic
    for r in roots.iter_mut() {
        for _ in 0..3 {
            let f = ((a * *r + b) * *r + c) * *r + k;
            let df = (3.0 * a * *r + 2.0 * b) * *r + c;
            if df != 0.0 {
                let step = f / df;
                if step.is_finite() {
                    *r -= step;
                }
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // collapse multiplicities
    let scale = roots.iter().fold(1.0_f64, |m, r| m.max(r.abs()));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * scale);
    roots
}

/// Real roots of a x^3 + b x^2 + c x + d, degree-degenerate inputs allowed.
fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    if a == 0.0 {
        if b == 0.0 {
            if c == 0.0 {
                return vec![];
            }
            return vec![-d / c];
        }
        let disc = c * c - 4.0 * b * d;
        if disc < 0.0 {
            return vec![];
        }
        let s = disc.sqrt();
        return vec![(-c - s) / (2.0 * b), (-c + s) / (2.0 * b)];
    }
    // depressed cubic t^3 + p t + q with x = t - b/(3a)
    let shift = b / (3.0 * a);
    let p = c / a - shift * shift * 3.0;
    let q = 2.0 * shift.powi(3) - shift * c / a + d / a;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    if disc > 0.0 {
        // one real root (Cardano)
        let s = disc.sqrt();
        let u = (-q / 2.0 + s).cbrt();
        let v = (-q / 2.0 - s).cbrt();
        vec![u + v - shift]
    } else if p == 0.0 && q == 0.0 {
        vec![-shift]
    } else {
        // three real roots (trigonometric form)
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_quantities, ParameterSet, CONSTANTS};
    use approx::assert_relative_eq;

    fn table1() -> (ParameterSet, DerivedQuantities) {
        let p = ParameterSet::default();
        let d = derive_quantities(&p, &CONSTANTS);
        (p, d)
    }

    #[test]
    fn no_drive_means_empty_cavity() {
        let (mut p, _) = table1();
        p.power = 0.0;
        let d = derive_quantities(&p, &CONSTANTS);
        let ss = steady_state(&p, &d).unwrap();
        assert_eq!(ss.amplitude, 0.0);
        assert_eq!(ss.deflection, 0.0);
        assert_eq!(ss.coupling_eff, 0.0);
    }

    #[test]
    fn resonant_amplitude() {
        let (mut p, _) = table1();
        p.detuning = 0.0;
        let d = derive_quantities(&p, &CONSTANTS);
        let ss = steady_state(&p, &d).unwrap();
        assert_relative_eq!(
            ss.amplitude,
            2.0 * (d.photon_flux / d.gamma).sqrt(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn table_operating_point() {
        // hand arithmetic done before the build: a_s^2 ~ 3e9, G ~ 4e7 rad/s
        let (p, d) = table1();
        let ss = steady_state(&p, &d).unwrap();
        assert_relative_eq!(ss.amplitude * ss.amplitude, 3.0e9, max_relative = 0.05);
        assert_relative_eq!(ss.coupling_eff, 4.0e7, max_relative = 0.1);
    }

    #[test]
    fn uncoupled_cubic_has_single_zero_root() {
        let (mut p, _) = table1();
        p.l = 0.0;
        let d = derive_quantities(&p, &CONSTANTS);
        let roots = bistability_roots(&p, &d, p.detuning);
        assert_eq!(roots, vec![0.0]);
    }

    #[test]
    fn weak_drive_single_root_continuous() {
        let (mut p, _) = table1();
        let mut prev = None;
        for power in [1e-9, 2e-9, 4e-9] {
            p.power = power;
            let d = derive_quantities(&p, &CONSTANTS);
            let roots = bistability_roots(&p, &d, p.detuning);
            assert_eq!(roots.len(), 1);
            if let Some(prev) = prev {
                assert!(roots[0] > prev);
                assert!(roots[0] < 3.0 * prev);
            }
            prev = Some(roots[0]);
        }
    }

    #[test]
    fn roots_are_self_consistent() {
        // each root plugged back through the intensity relation reproduces itself
        let (p, d) = table1();
        let ss = steady_state(&p, &d).unwrap();
        let delta = ss.delta_bare;
        let roots = bistability_roots(&p, &d, delta);
        assert!(!roots.is_empty());
        for phi in &roots {
            let det = delta - d.coupling * phi;
            let a2 = d.gamma * d.photon_flux / ((d.gamma / 2.0).powi(2) + det * det);
            let phi_back = d.coupling * a2 / p.omega_phi;
            assert_relative_eq!(phi_back, *phi, max_relative = 1e-10);
        }
    }

    #[test]
    fn round_trip_matches_steady_state() {
        // steady_state(Delta) equals the bistability root at delta = Delta + g phi_s
        let (p, d) = table1();
        let ss = steady_state(&p, &d).unwrap();
        let roots = bistability_roots(&p, &d, ss.delta_bare);
        let closest = roots
            .iter()
            .cloned()
            .min_by(|a, b| {
                (a - ss.deflection)
                    .abs()
                    .partial_cmp(&(b - ss.deflection).abs())
                    .unwrap()
            })
            .unwrap();
        assert_relative_eq!(closest, ss.deflection, max_relative = 1e-10);
    }

    #[test]
    fn strong_drive_three_roots_match_bisection_oracle() {
        // drive the cavity hard enough for bistability, then cross-check every
        // root against a sign-change bisection on the explicit cubic
        let (mut p, _) = table1();
        p.power = 50.0;
        p.finesse = 5.0e4;
        let d = derive_quantities(&p, &CONSTANTS);
        let ss = steady_state(&p, &d).unwrap();
        let delta = ss.delta_bare;
        let roots = bistability_roots(&p, &d, delta);
        assert_eq!(roots.len(), 3, "expected a bistable instance, got {roots:?}");

        let g = d.coupling;
        let half = d.gamma / 2.0;
        let cubic = |x: f64| {
            ((g * g * x - 2.0 * delta * g) * x + half * half + delta * delta) * x
                - g * d.gamma * d.photon_flux / p.omega_phi
        };
        let oracle = bisection_roots(cubic, 0.0, 2.0 * roots[2].abs() + 1.0, 200_000);
        assert_eq!(oracle.len(), 3);
        for (r, o) in roots.iter().zip(oracle.iter()) {
            assert_relative_eq!(r, o, max_relative = 1e-9);
        }
    }

    /// Test-only root oracle: dense sampling plus bisection refinement.
    fn bisection_roots(f: impl Fn(f64) -> f64, lo: f64, hi: f64, samples: usize) -> Vec<f64> {
        let mut roots = Vec::new();
        let h = (hi - lo) / samples as f64;
        let mut x0 = lo;
        let mut f0 = f(x0);
        for i in 1..=samples {
            let x1 = lo + h * i as f64;
            let f1 = f(x1);
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() {
                let (mut a, mut b, mut fa) = (x0, x1, f0);
                for _ in 0..200 {
                    let m = 0.5 * (a + b);
                    let fm = f(m);
                    if fa.signum() == fm.signum() {
                        a = m;
                        fa = fm;
                    } else {
                        b = m;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            f0 = f1;
        }
        roots
    }
}
