//! Robust symmetric eigendecomposition via cyclic Jacobi iteration.
//!
//! The QR-based symmetric eigensolver in the linear-algebra dependency can
//! return an orthogonal basis that does not actually diagonalize the input
//! on well-conditioned covariance matrices of 40+ modes (reconstruction
//! residuals around 1e-3 were observed). Every spectral routine in this
//! crate therefore goes through the classic cyclic Jacobi iteration below:
//! it is slower by a constant factor but converges unconditionally for
//! symmetric matrices, with reconstruction residuals at machine precision.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{GbsError, Result};

type C64 = Complex<f64>;

/// Eigendecomposition `A = Q diag(λ) Qᵀ` of a real symmetric matrix, with
/// `Q` orthogonal. Eigenvalues are sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

const MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. The input is
/// symmetrized first; asymmetry beyond roundoff is the caller's bug.
pub fn sym_eigen(a: &DMatrix<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(GbsError::Dimension(format!(
            "symmetric eigendecomposition needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut m = 0.5 * (a + a.transpose());
    let mut q = DMatrix::<f64>::identity(n, n);
    let frob = m.norm().max(f64::MIN_POSITIVE);
    let tol = 1e-15 * frob;
    for _sweep in 0..MAX_SWEEPS {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[(p, r)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // Rotation angle zeroing the (p, r) element.
                let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkr) = (m[(k, p)], m[(k, r)]);
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let (mpk, mrk) = (m[(p, k)], m[(r, k)]);
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let (qkp, qkr) = (q[(k, p)], q[(k, r)]);
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    // Sort ascending, permuting the eigenvector columns along.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let eigenvalues = DVector::from_iterator(n, order.iter().map(|&k| m[(k, k)]));
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &q.column(src));
    }
    Ok(SymEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn sym_eigenvalues(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    Ok(sym_eigen(a)?.eigenvalues)
}

/// Eigenvalues of a complex Hermitian matrix, ascending, computed through
/// the real embedding `H = X + iY → [[X, −Y], [Y, X]]` whose spectrum is
/// that of `H` with every eigenvalue doubled.
pub fn hermitian_eigenvalues(h: &DMatrix<C64>) -> Result<DVector<f64>> {
    let n = h.nrows();
    if h.ncols() != n {
        return Err(GbsError::Dimension(format!(
            "Hermitian eigenvalues need a square matrix, got {}x{}",
            n,
            h.ncols()
        )));
    }
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h[(i, j)];
            e[(i, j)] = z.re;
            e[(i, n + j)] = -z.im;
            e[(n + i, j)] = z.im;
            e[(n + i, n + j)] = z.re;
        }
    }
    let doubled = sym_eigenvalues(&e)?;
    // Take every other value of the doubled, sorted spectrum.
    Ok(DVector::from_iterator(
        n,
        (0..n).map(|k| doubled[2 * k]),
    ))
}
