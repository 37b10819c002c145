//! Stationary covariance of the linearized model, computed three
//! independent ways: a direct linear solve of the Lyapunov equation,
//! the iterative-elimination procedure that expresses every off-diagonal
//! entry in the four diagonals, and a quadrature of the propagated noise
//! integral used as an oracle.

use crate::dynamics::{spectral_abscissa, LinearModel};
use crate::error::{Error, Result};
use nalgebra::{Matrix2, Matrix4, SMatrix, SVector};

/// 4x4 real symmetric stationary correlation matrix in the
/// (delta_phi, delta_Lz, delta_X, delta_Y) ordering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub matrix: Matrix4<f64>,
}

impl CovarianceMatrix {
    /// Mirror 2x2 block.
    pub fn mirror_block(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Field 2x2 block.
    pub fn field_block(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(2, 2).into_owned()
    }

    /// Mirror-field cross 2x2 block.
    pub fn cross_block(&self) -> Matrix2<f64> {
        self.matrix.fixed_view::<2, 2>(0, 2).into_owned()
    }
}

/// Index map for the 10 independent entries of a symmetric 4x4 matrix,
/// row-major upper triangle.
const SYM_INDEX: [(usize, usize); 10] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (0, 3),
    (1, 1),
    (1, 2),
    (1, 3),
    (2, 2),
    (2, 3),
    (3, 3),
];

fn sym_pos(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    SYM_INDEX.iter().position(|&(x, y)| (x, y) == (a, b)).unwrap()
}

/// Solve B C + C B^T = -D as a 10-unknown linear system over the
/// symmetric entries of C, with one step of iterative refinement.
pub fn solve_lyapunov_direct(m: &LinearModel) -> Result<CovarianceMatrix> {
    let b = &m.drift;
    let mut a = SMatrix::<f64, 10, 10>::zeros();
    let mut rhs = SVector::<f64, 10>::zeros();
    for (row, &(i, j)) in SYM_INDEX.iter().enumerate() {
        // (BC + CB^T)_{ij} = sum_k B_ik C_kj + B_jk C_ik
        for k in 0..4 {
            a[(row, sym_pos(k, j))] += b[(i, k)];
            a[(row, sym_pos(i, k))] += b[(j, k)];
        }
        rhs[row] = -m.diffusion[(i, j)];
    }
    let lu = a.lu();
    let mut x = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    // one refinement pass to push the residual toward machine precision
    for _ in 0..2 {
        let resid = rhs - a * x;
        if let Some(dx) = lu.solve(&resid) {
            x += dx;
        }
    }
    let mut c = Matrix4::zeros();
    for (idx, &(i, j)) in SYM_INDEX.iter().enumerate() {
        c[(i, j)] = x[idx];
        c[(j, i)] = x[idx];
    }
    Ok(CovarianceMatrix { matrix: c })
}

/// Affine expression a . (lambda_1..lambda_4) + k in the diagonal unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Affine {
    coeff: [f64; 4],
    constant: f64,
}

impl Affine {
    fn zero() -> Self {
        Affine { coeff: [0.0; 4], constant: 0.0 }
    }
    fn diagonal(i: usize) -> Self {
        let mut a = Self::zero();
        a.coeff[i] = 1.0;
        a
    }
    fn add_scaled(&mut self, other: &Affine, s: f64) {
        for i in 0..4 {
            self.coeff[i] += s * other.coeff[i];
        }
        self.constant += s * other.constant;
    }
    fn scale(&self, s: f64) -> Self {
        let mut a = *self;
        for c in a.coeff.iter_mut() {
            *c *= s;
        }
        a.constant *= s;
        a
    }
    fn eval(&self, lam: &[f64; 4]) -> f64 {
        self.coeff.iter().zip(lam).map(|(c, l)| c * l).sum::<f64>() + self.constant
    }
}

/// Solve the Lyapunov equation by the iterative-elimination procedure:
/// repeatedly locate an entry of C' = BC + CB^T + D containing a single
/// unsolved off-diagonal unknown, solve it, and substitute, until the six
/// off-diagonals are affine in the four diagonals; then solve the
/// remaining linear system for the diagonals.
///
/// Requires G != 0 and Delta != 0 (denominators of the closed form);
/// degenerate models should use [`solve_lyapunov_direct`].
pub fn solve_lyapunov_elimination(m: &LinearModel) -> Result<CovarianceMatrix> {
    if m.coupling_eff == 0.0 || m.detuning == 0.0 {
        return Err(Error::EliminationDegenerate);
    }
    let b = &m.drift;
    let mut c = eliminate(b, &m.diffusion)?;
    // refinement against the defining equation, reusing the same solver
    for _ in 0..2 {
        let r = b * c + c * b.transpose() + m.diffusion;
        let r = (r + r.transpose()) / 2.0;
        if let Ok(delta) = eliminate(b, &r) {
            c += delta;
        }
    }
    Ok(CovarianceMatrix { matrix: c })
}

/// One elimination pass: solve B X + X B^T + d = 0 for symmetric X.
fn eliminate(b: &Matrix4<f64>, d: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    // cells[sym index]: Some(expr) once known; diagonals start known.
    let mut cells: [Option<Affine>; 10] = [None; 10];
    for i in 0..4 {
        cells[sym_pos(i, i)] = Some(Affine::diagonal(i));
    }

    loop {
        let remaining = cells.iter().filter(|c| c.is_none()).count();
        if remaining == 0 {
            break;
        }
        let mut progressed = false;
        // row-major scan over C' entries; ties broken by scan order
        'scan: for i in 0..4 {
            for j in 0..4 {
                let mut known = Affine::zero();
                known.constant += d[(i, j)];
                let mut unknown: Option<(usize, f64)> = None;
                let mut ambiguous = false;
                let mut accumulate = |pos: usize, s: f64, known: &mut Affine| {
                    if s == 0.0 {
                        return;
                    }
                    match &cells[pos] {
                        Some(expr) => known.add_scaled(expr, s),
                        None => match &mut unknown {
                            None => unknown = Some((pos, s)),
                            Some((p, c)) if *p == pos => *c += s,
                            _ => ambiguous = true,
                        },
                    }
                };
                for k in 0..4 {
                    accumulate(sym_pos(k, j), b[(i, k)], &mut known);
                    accumulate(sym_pos(i, k), b[(j, k)], &mut known);
                }
                if ambiguous {
                    continue;
                }
                if let Some((pos, coef)) = unknown {
                    if coef != 0.0 {
                        cells[pos] = Some(known.scale(-1.0 / coef));
                        progressed = true;
                        break 'scan;
                    }
                }
            }
        }
        if !progressed {
            return Err(Error::EliminationStalled { remaining });
        }
    }

    // With every entry affine in the diagonals, C' = 0 gives a linear
    // system for lambda_1..lambda_4.
    let mut rows = SMatrix::<f64, 10, 4>::zeros();
    let mut rhs = SVector::<f64, 10>::zeros();
    for (row, &(i, j)) in SYM_INDEX.iter().enumerate() {
        let mut eq = Affine::zero();
        eq.constant += d[(i, j)];
        for k in 0..4 {
            eq.add_scaled(cells[sym_pos(k, j)].as_ref().unwrap(), b[(i, k)]);
            eq.add_scaled(cells[sym_pos(i, k)].as_ref().unwrap(), b[(j, k)]);
        }
        for c in 0..4 {
            rows[(row, c)] = eq.coeff[c];
        }
        rhs[row] = -eq.constant;
    }
    let svd = rows.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) || svd.singular_values.min() < 1e-12 * smax {
        return Err(Error::SingularSystem);
    }
    let lam_v = svd.solve(&rhs, 0.0).map_err(|_| Error::SingularSystem)?;
    let lam = [lam_v[0], lam_v[1], lam_v[2], lam_v[3]];

    let mut c = Matrix4::zeros();
    for &(i, j) in SYM_INDEX.iter() {
        let v = cells[sym_pos(i, j)].as_ref().unwrap().eval(&lam);
        c[(i, j)] = v;
        c[(j, i)] = v;
    }
    Ok(c)
}

/// Evaluate C = int_0^inf exp(Bs) D exp(B^T s) ds by composite Simpson
/// quadrature on a base interval, followed by exact tail accumulation
/// (the integral over [H, 2H] is exp(BH) C_H exp(B^T H)), doubling the
/// horizon until the result is invariant to 1e-9 relative.
///
/// `horizon` is the initial base interval (clamped below by resolving the
/// fastest rate) and `steps` the initial Simpson step count (>= 1e4
/// recommended by the caller; clamped to an even value >= 16).
pub fn covariance_quadrature_oracle(
    m: &LinearModel,
    horizon: f64,
    steps: usize,
) -> Result<CovarianceMatrix> {
    let abscissa = spectral_abscissa(&m.drift)?;
    if abscissa >= 0.0 {
        return Err(Error::Unstable { spectral_abscissa: abscissa });
    }
    let min_horizon = 20.0 / abscissa.abs();

    // keep the base interval short enough that Simpson resolves the
    // fastest decay and oscillation; the tail doubling covers the rest
    let fastest = m
        .drift
        .iter()
        .fold(0.0_f64, |a, &x| a.max(x.abs()))
        .max(abscissa.abs());
    let base_h = horizon.min(2.0 / fastest).max(f64::MIN_POSITIVE);

    let mut n = steps.max(16);
    let mut prev: Option<Matrix4<f64>> = None;
    let mut base = Matrix4::zeros();
    // refine the base quadrature until step-halving no longer moves it
    for _ in 0..16 {
        if n % 2 == 1 {
            n += 1;
        }
        base = simpson_base(m, base_h, n);
        if let Some(p) = prev {
            let scale = base.amax().max(f64::MIN_POSITIVE);
            if (base - p).amax() <= 1e-11 * scale {
                break;
            }
        }
        prev = Some(base);
        n *= 2;
    }

    // horizon doubling: C(2H) = C(H) + E C(H) E^T with E = exp(BH)
    let mut c = base;
    let mut propagator = (m.drift * base_h).exp();
    let mut h = base_h;
    let mut last_change = f64::INFINITY;
    for _ in 0..300 {
        let tail = propagator * c * propagator.transpose();
        let next = c + tail;
        last_change = (next - c).amax() / next.amax().max(f64::MIN_POSITIVE);
        c = next;
        h *= 2.0;
        propagator = propagator * propagator;
        if h >= min_horizon && last_change <= 1e-9 {
            let sym = (c + c.transpose()) / 2.0;
            return Ok(CovarianceMatrix { matrix: sym });
        }
    }
    Err(Error::QuadratureNotConverged { change: last_change })
}

fn simpson_base(m: &LinearModel, h: f64, n: usize) -> Matrix4<f64> {
    let dt = h / n as f64;
    let step = (m.drift * dt).exp();
    let mut propagator = Matrix4::identity();
    let integrand = |p: &Matrix4<f64>| p * m.diffusion * p.transpose();
    let mut acc = integrand(&propagator);
    for k in 1..n {
        propagator = step * propagator;
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += integrand(&propagator) * w;
    }
    propagator = step * propagator;
    acc += integrand(&propagator);
    acc * (dt / 3.0)
}

/// Max-norm residual of the Lyapunov equation, relative to the diffusion
/// matrix: ||BC + CB^T + D||_max / ||D||_max.
pub fn lyapunov_residual(m: &LinearModel, c: &CovarianceMatrix) -> f64 {
    let r = m.drift * c.matrix + c.matrix * m.drift.transpose() + m.diffusion;
    r.amax() / m.diffusion.amax()
}
