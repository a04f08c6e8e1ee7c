//! Continuous-time algebraic Riccati equations.
//!
//! The stabilizing solution is read off the stable invariant subspace of the
//! Hamiltonian, obtained with the scaled Newton iteration for the matrix sign
//! function, then polished with Newton–Kleinman steps so the residual sits at
//! rounding level.

use crate::error::{Error, Result};
use crate::linalg::{self, Mat};

/// Imaginary-axis proximity threshold for Hamiltonian eigenvalues, relative
/// to `1 + |λ|`.
pub const IMAG_AXIS_TOL: f64 = 1e-8;

const SIGN_MAX_ITER: usize = 200;
const NEWTON_MAX_ITER: usize = 20;

/// Returns `true` when some eigenvalue of `h` lies within the imaginary-axis
/// threshold.
pub fn has_imaginary_axis_eigenvalue(h: &Mat) -> Result<bool> {
    Ok(linalg::eigenvalues(h)?
        .iter()
        .any(|l| l.re.abs() <= IMAG_AXIS_TOL * (1.0 + l.norm())))
}

/// Matrix sign function by the determinant-scaled Newton iteration.
fn matrix_sign(h: &Mat) -> Result<Mat> {
    let n = h.nrows();
    let mut z = h.clone();
    for _ in 0..SIGN_MAX_ITER {
        let lu = z.clone().lu();
        let zi = lu.try_inverse().ok_or(Error::NoStabilizingSolution(
            "Hamiltonian has eigenvalues on or near the imaginary axis".into(),
        ))?;
        let det = z.clone().lu().determinant().abs();
        let c = if det.is_finite() && det > 0.0 {
            det.powf(-1.0 / n as f64)
        } else {
            1.0
        };
        let c = if c.is_finite() && c > 0.0 { c } else { 1.0 };
        let next = (&z * c + zi / c) * 0.5;
        let delta = (&next - &z).norm();
        let scale = next.norm();
        z = next;
        if !scale.is_finite() {
            break;
        }
        if delta <= 1e-13 * scale {
            return Ok(z);
        }
    }
    if z.iter().all(|v| v.is_finite()) {
        // Accept a nearly converged iterate; Newton polishing follows.
        let err = (&z * &z - Mat::identity(n, n)).norm();
        if err < 1e-6 * (n as f64) {
            return Ok(z);
        }
    }
    Err(Error::NoStabilizingSolution(
        "matrix sign iteration did not converge".into(),
    ))
}

/// `Ric(H)`: the matrix `X` whose graph `[I; X]` spans the stable invariant
/// subspace of the `2n × 2n` Hamiltonian `h`.
pub fn ric(h: &Mat) -> Result<Mat> {
    let nn = h.nrows();
    if !nn.is_multiple_of(2) || h.ncols() != nn {
        return Err(Error::Dimension(
            "Hamiltonian must be square with even order".into(),
        ));
    }
    let n = nn / 2;
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if has_imaginary_axis_eigenvalue(h)? {
        return Err(Error::NoStabilizingSolution(
            "Hamiltonian has eigenvalues on the imaginary axis".into(),
        ));
    }
    let w = matrix_sign(h)?;
    // (W + I) [I; X] = 0  =>  [W12; W22 + I] X = -[W11 + I; W21]
    let w11 = w.view((0, 0), (n, n)).into_owned();
    let w12 = w.view((0, n), (n, n)).into_owned();
    let w21 = w.view((n, 0), (n, n)).into_owned();
    let w22 = w.view((n, n), (n, n)).into_owned();
    let eye = Mat::identity(n, n);
    let lhs = linalg::vstack(&[&w12, &(w22 + &eye)]);
    let rhs = -linalg::vstack(&[&(w11 + &eye), &w21]);
    let svd = lhs.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-13 * smax) {
        return Err(Error::NoStabilizingSolution(
            "stable subspace is not complementary to [0; I]".into(),
        ));
    }
    let x = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::NoStabilizingSolution(e.to_string()))?;
    Ok(linalg::symmetrize(&x))
}

/// Residual `Aᵀ X + X A − X G X + Q`.
pub fn riccati_residual(a: &Mat, g: &Mat, q: &Mat, x: &Mat) -> Mat {
    a.transpose() * x + x * a - x * g * x + q
}

/// Stabilizing solution of `Aᵀ X + X A − X G X + Q = 0` with `G`, `Q`
/// symmetric (either may be indefinite). On success `A − G X` is Hurwitz.
pub fn solve_riccati(a: &Mat, g: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if g.shape() != (n, n) || q.shape() != (n, n) {
        return Err(Error::Dimension("Riccati blocks must all be n×n".into()));
    }
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let h = linalg::block2(a, &(-g), &(-q), &(-a.transpose()));
    let mut x = ric(&h)?;
    polish(a, g, q, &mut x);
    let closed = a - g * &x;
    let abscissa = linalg::spectral_abscissa(&closed)?;
    if !(abscissa < 0.0) {
        return Err(Error::NoStabilizingSolution(format!(
            "closed-loop Riccati matrix not Hurwitz (abscissa {abscissa:.3e})"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("Riccati solution".into()));
    }
    Ok(x)
}

/// Newton–Kleinman refinement; keeps the best iterate seen.
fn polish(a: &Mat, g: &Mat, q: &Mat, x: &mut Mat) {
    let mut best = riccati_residual(a, g, q, x).norm();
    for _ in 0..NEWTON_MAX_ITER {
        if best <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
        let res = riccati_residual(a, g, q, x);
        let ac = a - g * &*x;
        let Ok(delta) = linalg::solve_lyapunov(&ac, &res) else {
            break;
        };
        let cand = linalg::symmetrize(&(&*x + delta));
        let r = riccati_residual(a, g, q, &cand).norm();
        if r.is_finite() && r < best {
            let improvement = best / r.max(f64::MIN_POSITIVE);
            *x = cand;
            best = r;
            if improvement < 1.5 {
                break;
            }
        } else {
            break;
        }
    }
}

/// Stabilizing solution of `AᵀX + XA − X B R⁻¹ Bᵀ X + Q = 0`.
pub fn solve_care(a: &Mat, b: &Mat, q: &Mat, r: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let m = b.ncols();
    if a.ncols() != n || b.nrows() != n || q.shape() != (n, n) || r.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "CARE expects A {n}×{n}, B {n}×m, Q {n}×{n}, R m×m"
        )));
    }
    let rs = linalg::symmetrize(r);
    if m > 0 && rs.clone().cholesky().is_none() {
        return Err(Error::invalid("R must be symmetric positive definite"));
    }
    let g = linalg::symmetrize(&(b * linalg::inverse(&rs, "R")? * b.transpose()));
    solve_riccati(a, &g, &linalg::symmetrize(q))
}

/// Frobenius norm of the CARE residual for a candidate `x`.
pub fn care_residual(a: &Mat, b: &Mat, q: &Mat, r: &Mat, x: &Mat) -> Result<f64> {
    let g = b * linalg::inverse(r, "R")? * b.transpose();
    Ok(riccati_residual(a, &g, q, x).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m(r: usize, c: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(r, c, v)
    }

    #[test]
    fn identity_problem() {
        let eye = Mat::identity(2, 2);
        let x = solve_care(&Mat::zeros(2, 2), &eye, &eye, &eye).unwrap();
        assert!((x - eye).norm() < 1e-12);
    }

    #[test]
    fn scalar_unstable_plant() {
        let one = m(1, 1, &[1.0]);
        let x = solve_care(&one, &one, &one, &one).unwrap();
        assert_relative_eq!(x[(0, 0)], 1.0 + 2f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn stable_plant_zero_cost() {
        let a = m(1, 1, &[-1.0]);
        let one = m(1, 1, &[1.0]);
        let x = solve_care(&a, &one, &m(1, 1, &[0.0]), &one).unwrap();
        assert!(x[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn undetectable_mode_on_axis_is_rejected() {
        // a = 0, q = 0, b = 0: Hamiltonian eigenvalues {0, 0}
        let z = m(1, 1, &[0.0]);
        let one = m(1, 1, &[1.0]);
        assert!(solve_care(&z, &z, &z, &one).is_err());
    }

    #[test]
    fn rejects_indefinite_r() {
        let one = m(1, 1, &[1.0]);
        assert!(solve_care(&one, &one, &one, &m(1, 1, &[-1.0])).is_err());
    }

    #[test]
    fn indefinite_g_game_riccati() {
        // scalar: 2 a x - g x² + q = 0 with g < 0 (pure disturbance)
        let a = m(1, 1, &[-2.0]);
        let g = m(1, 1, &[-0.5]);
        let q = m(1, 1, &[1.0]);
        let x = solve_riccati(&a, &g, &q).unwrap();
        // roots of -g x² ... : 0.5 x² - 4 x + 1 = 0 -> x = 4 ± sqrt(14); stabilizing a - g x < 0
        let expect = 4.0 - 14f64.sqrt();
        assert_relative_eq!(x[(0, 0)], expect, epsilon = 1e-12);
    }
}
