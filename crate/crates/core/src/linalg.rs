//! Dense linear-algebra helpers shared by the LTI, Riccati and synthesis code.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex64>;

/// Block matrix `[a b; c d]`. Empty blocks are allowed as long as the
/// row/column counts line up.
pub fn block2(a: &Mat, b: &Mat, c: &Mat, d: &Mat) -> Mat {
    debug_assert_eq!(a.nrows(), b.nrows());
    debug_assert_eq!(c.nrows(), d.nrows());
    debug_assert_eq!(a.ncols(), c.ncols());
    debug_assert_eq!(b.ncols(), d.ncols());
    let (r1, c1) = a.shape();
    let (r2, c2) = d.shape();
    let mut m = Mat::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((0, c1), (r1, c2)).copy_from(b);
    m.view_mut((r1, 0), (r2, c1)).copy_from(c);
    m.view_mut((r1, c1), (r2, c2)).copy_from(d);
    m
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut m = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.nrows(), rows);
        m.view_mut((0, at), (rows, b.ncols())).copy_from(*b);
        at += b.ncols();
    }
    m
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut m = Mat::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        debug_assert_eq!(b.ncols(), cols);
        m.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    m
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn inverse(m: &Mat, what: &'static str) -> Result<Mat> {
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    m.clone().try_inverse().ok_or(Error::Singular(what))
}

pub fn solve(a: &Mat, b: &Mat, what: &'static str) -> Result<Mat> {
    if a.nrows() == 0 {
        return Ok(Mat::zeros(0, b.ncols()));
    }
    a.clone().lu().solve(b).ok_or(Error::Singular(what))
}

/// Diagonal similarity `D⁻¹ M D` with power-of-two scalings that roughly
/// equalises row and column norms (Parlett–Reinsch). Eigenvalues are
/// unchanged; accuracy of the QR iteration on badly scaled matrices improves.
pub fn balance(m: &Mat) -> Mat {
    let n = m.nrows();
    let mut a = m.clone();
    let radix = 2.0_f64;
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < 100 {
        converged = true;
        sweeps += 1;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut cc = c;
            let mut rr = r;
            while cc < rr / radix {
                cc *= radix;
                rr /= radix;
                f *= radix;
            }
            while cc >= rr * radix {
                cc /= radix;
                rr *= radix;
                f /= radix;
            }
            if (cc + rr) < 0.95 * s {
                converged = false;
                for j in 0..n {
                    a[(i, j)] /= f;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    a
}

const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix (balanced first). The shifted QR
/// iteration can stall on spectra symmetric about the imaginary axis, so
/// the transpose and a fixed orthogonal similarity are tried in turn.
pub fn eigenvalues(m: &Mat) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(Vec::new());
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(
            "matrix passed to eigenvalue solver".into(),
        ));
    }
    let b = balance(m);
    let v = DVector::from_fn(n, |i, _| (i + 1) as f64);
    let refl = Mat::identity(n, n) - &v * v.transpose() * (2.0 / v.norm_squared());
    let candidates = [b.clone(), b.transpose(), &refl * &b * &refl];
    candidates
        .into_iter()
        .find_map(|c| Schur::try_new(c, f64::EPSILON, SCHUR_MAX_ITER))
        .map(|s| s.complex_eigenvalues().iter().copied().collect())
        .ok_or(Error::NonFinite("Schur iteration did not converge".into()))
}

/// Largest real part over the spectrum; `-inf` for an empty matrix.
pub fn spectral_abscissa(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn spectral_radius(m: &Mat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|l| l.norm()).fold(0.0, f64::max))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_sym_eigenvalue(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    symmetrize(m).symmetric_eigenvalues().min()
}

pub fn max_singular_value(m: &Mat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn max_singular_value_c(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Solves the Lyapunov equation `Aᵀ X + X A + Q = 0` through its Kronecker
/// form. Intended for the small state dimensions used here (n ≲ 30).
pub fn solve_lyapunov(a: &Mat, q: &Mat) -> Result<Mat> {
    let n = a.nrows();
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let nn = n * n;
    // column-major vec: vec(AᵀX + XA) = (I ⊗ Aᵀ + Aᵀ ⊗ I) vec(X)
    let mut k = Mat::zeros(nn, nn);
    for col in 0..n {
        for row in 0..n {
            let r = col * n + row;
            for l in 0..n {
                // (AᵀX)[row, col] = Σ_l A[l,row] X[l,col]
                k[(r, col * n + l)] += a[(l, row)];
                // (XA)[row, col] = Σ_l X[row,l] A[l,col]
                k[(r, l * n + row)] += a[(l, col)];
            }
        }
    }
    let rhs = DVector::from_iterator(nn, q.iter().map(|v| -v));
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Lyapunov operator"))?;
    Ok(symmetrize(&Mat::from_column_slice(n, n, x.as_slice())))
}

pub fn frobenius(m: &Mat) -> f64 {
    m.norm()
}
