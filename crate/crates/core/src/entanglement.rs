//! Logarithmic negativity and physicality diagnostics of the stationary
//! Gaussian state, plus the low-temperature linear fit.
//!
//! Vacuum normalization: quadrature variances are 1/2 in vacuum, so a
//! two-mode state is entangled iff the smaller partially-transposed
//! symplectic eigenvalue drops below 1/2.

use crate::error::{Error, Result};
use crate::lyapunov::CovarianceMatrix;
use nalgebra::Matrix4;

/// Entanglement figures of a 4x4 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntanglementReport {
    /// sigma = |R| + |S| - 2|F|.
    pub sigma: f64,
    /// Determinant of the full covariance matrix.
    pub det_c: f64,
    /// Smaller partially-transposed symplectic eigenvalue.
    pub eta_minus: f64,
    /// Logarithmic negativity max(0, -ln 2 eta-).
    pub log_negativity: f64,
    /// Minimum symplectic eigenvalue of C itself (uncertainty check).
    pub nu_min: f64,
}

/// Linear low-temperature model E_N = E0 - kappa nbar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LowTemperatureFit {
    pub e0: f64,
    pub kappa: f64,
    /// RMS residual of the fit.
    pub residual: f64,
}

const SIGN_FLIP_TOL: f64 = 1e-12;

/// Compute sigma, eta-, E_N and the minimum symplectic eigenvalue.
///
/// Errors if sigma^2 - 4|C| is negative beyond numerical noise
/// (the matrix cannot come from a physical two-mode Gaussian state);
/// values within -1e-12 are clamped to zero.
pub fn log_negativity(c: &CovarianceMatrix) -> Result<EntanglementReport> {
    let det_r = c.mirror_block().determinant();
    let det_s = c.field_block().determinant();
    let det_f = c.cross_block().determinant();
    let det_c = c.matrix.determinant();
    let sigma = det_r + det_s - 2.0 * det_f;

    let mut disc = sigma * sigma - 4.0 * det_c;
    let scale = (sigma * sigma).max(4.0 * det_c.abs()).max(1.0);
    if disc < 0.0 {
        if disc >= -SIGN_FLIP_TOL * scale {
            disc = 0.0;
        } else {
            return Err(Error::UnphysicalCovariance(format!(
                "sigma^2 - 4|C| = {disc:e} < 0"
            )));
        }
    }
    let inner = (sigma - disc.sqrt()) / 2.0;
    if inner <= 0.0 {
        return Err(Error::UnphysicalCovariance(format!(
            "non-positive eta^- candidate {inner:e}"
        )));
    }
    let eta_minus = inner.sqrt();
    let log_negativity = (-(2.0 * eta_minus).ln()).max(0.0);
    let nu_min = symplectic_eigenvalues(&c.matrix)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(EntanglementReport {
        sigma,
        det_c,
        eta_minus,
        log_negativity,
        nu_min,
    })
}

/// Symplectic eigenvalues of a 4x4 covariance matrix, with Omega the
/// two-mode symplectic form in (q1, p1, q2, p2) ordering.
///
/// The spectrum of i Omega C equals that of the antisymmetric matrix
/// A = C^(1/2) Omega C^(1/2), whose singular values are the symplectic
/// eigenvalues in +/- pairs; this route stays within symmetric
/// eigensolvers and the SVD, both unconditionally convergent.
pub fn symplectic_eigenvalues(c: &Matrix4<f64>) -> Result<Vec<f64>> {
    let omega = Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    );
    let sym = (c + c.transpose()) / 2.0;
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    if eig.eigenvalues.iter().any(|&v| v < -1e-12 * scale) {
        return Err(Error::UnphysicalCovariance(
            "covariance matrix is not positive semidefinite".into(),
        ));
    }
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let sqrt_c = eig.eigenvectors * Matrix4::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    let a = sqrt_c * omega * sqrt_c;
    let svd = a.svd(false, false);
    // descending singular values, doubly degenerate in +/- pairs
    let sv = svd.singular_values;
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenSolver);
    }
    Ok(vec![sv[2], sv[0]])
}

/// Smaller symplectic eigenvalue after partial transposition (momentum
/// sign flip on the field mode). Independent route to eta-.
pub fn eta_minus_partial_transpose(c: &CovarianceMatrix) -> Result<f64> {
    let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
    let transposed = flip * c.matrix * flip;
    Ok(symplectic_eigenvalues(&transposed)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Uncertainty-principle check: pass iff nu_min >= 1/2 - 1e-9.
pub fn check_physicality(c: &CovarianceMatrix) -> Result<(f64, bool)> {
    let nu_min = symplectic_eigenvalues(&c.matrix)?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok((nu_min, nu_min >= 0.5 - 1e-9))
}

/// Least-squares line E_N = E0 - kappa nbar through (nbar, E_N) points.
/// Needs at least 3 points with distinct occupancies, all entangled.
pub fn fit_low_temperature(points: &[(f64, f64)]) -> Result<LowTemperatureFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit);
    }
    if points.iter().any(|&(_, e)| e <= 0.0) {
        return Err(Error::DegenerateFit);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = points
        .iter()
        .map(|p| (p.0 - mean_x) * (p.1 - mean_y))
        .sum();
    let slope = sxy / sxx;
    let kappa = -slope;
    let e0 = mean_y + kappa * mean_x;
    let rss: f64 = points
        .iter()
        .map(|&(x, y)| (y - (e0 - kappa * x)).powi(2))
        .sum();
    Ok(LowTemperatureFit {
        e0,
        kappa,
        residual: (rss / n).sqrt(),
    })
}

/// Covariance of a two-mode squeezed vacuum with squeezing parameter r,
/// in the crate's (q1, p1, q2, p2) ordering. E_N of this state is 2r.
pub fn two_mode_squeezed_covariance(r: f64) -> CovarianceMatrix {
    let ch = (2.0 * r).cosh() / 2.0;
    let sh = (2.0 * r).sinh() / 2.0;
    CovarianceMatrix {
        matrix: Matrix4::new(
            ch, 0.0, sh, 0.0, //
            0.0, ch, 0.0, -sh, //
            sh, 0.0, ch, 0.0, //
            0.0, -sh, 0.0, ch,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag(v: [f64; 4]) -> CovarianceMatrix {
        CovarianceMatrix {
            matrix: Matrix4::from_diagonal(&nalgebra::Vector4::new(v[0], v[1], v[2], v[3])),
        }
    }

    #[test]
    fn decoupled_thermal_state_is_separable() {
        for nbar in [0.0, 0.5, 10.0, 1.0e4] {
            let c = diag([nbar + 0.5, nbar + 0.5, 0.5, 0.5]);
            let rep = log_negativity(&c).unwrap();
            assert_relative_eq!(rep.eta_minus, 0.5, max_relative = 1e-12);
            assert_eq!(rep.log_negativity, 0.0);
        }
    }

    #[test]
    fn two_mode_squeezed_identity() {
        for r in [0.1, 0.5, 1.0, 2.0] {
            let c = two_mode_squeezed_covariance(r);
            let rep = log_negativity(&c).unwrap();
            assert_relative_eq!(rep.log_negativity, 2.0 * r, max_relative = 1e-10);
            assert_relative_eq!(rep.eta_minus, (-2.0 * r).exp() / 2.0, max_relative = 1e-10);
            let pt = eta_minus_partial_transpose(&c).unwrap();
            assert_relative_eq!(rep.eta_minus, pt, max_relative = 1e-10);
        }
    }

    #[test]
    fn physicality_boundary_cases() {
        let (nu, pass) = check_physicality(&diag([0.5, 0.5, 0.5, 0.5])).unwrap();
        assert_relative_eq!(nu, 0.5, max_relative = 1e-12);
        assert!(pass);

        let nbar = 4.0;
        let (nu, pass) = check_physicality(&diag([nbar + 0.5, nbar + 0.5, 0.5, 0.5])).unwrap();
        assert_relative_eq!(nu, 0.5, max_relative = 1e-12);
        assert!(pass);
        let nus = symplectic_eigenvalues(&diag([nbar + 0.5, nbar + 0.5, 0.5, 0.5]).matrix).unwrap();
        assert_relative_eq!(nus[1], nbar + 0.5, max_relative = 1e-12);

        let (nu, pass) = check_physicality(&diag([0.25, 0.25, 0.25, 0.25])).unwrap();
        assert_relative_eq!(nu, 0.25, max_relative = 1e-12);
        assert!(!pass);
    }

    #[test]
    fn mode_swap_leaves_entanglement_unchanged() {
        let c = two_mode_squeezed_covariance(0.7);
        let mut swapped = Matrix4::zeros();
        // exchange the two 2x2 mode blocks
        let perm = [2, 3, 0, 1];
        for i in 0..4 {
            for j in 0..4 {
                swapped[(i, j)] = c.matrix[(perm[i], perm[j])];
            }
        }
        let a = log_negativity(&c).unwrap().log_negativity;
        let b = log_negativity(&CovarianceMatrix { matrix: swapped })
            .unwrap()
            .log_negativity;
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn exact_line_recovery() {
        let pts: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let nb = i as f64 * 100.0;
                (nb, 0.5 - 3.1e-6 * nb)
            })
            .collect();
        let fit = fit_low_temperature(&pts).unwrap();
        assert_relative_eq!(fit.e0, 0.5, max_relative = 1e-12);
        assert_relative_eq!(fit.kappa, 3.1e-6, max_relative = 1e-9);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn constant_data_gives_zero_slope() {
        let pts = [(0.0, 0.4), (1.0, 0.4), (2.0, 0.4)];
        let fit = fit_low_temperature(&pts).unwrap();
        assert_eq!(fit.kappa, 0.0);
        assert_relative_eq!(fit.e0, 0.4, max_relative = 1e-12);
    }

    #[test]
    fn degenerate_abscissas_rejected() {
        let pts = [(1.0, 0.4), (1.0, 0.3), (1.0, 0.2)];
        assert!(matches!(fit_low_temperature(&pts), Err(Error::DegenerateFit)));
    }

    #[test]
    fn unphysical_input_rejected() {
        // strongly negative discriminant
        let mut m = Matrix4::identity() * 0.5;
        m[(0, 2)] = 5.0;
        m[(2, 0)] = 5.0;
        m[(1, 3)] = 5.0;
        m[(3, 1)] = 5.0;
        let res = log_negativity(&CovarianceMatrix { matrix: m });
        assert!(res.is_err());
    }
}
