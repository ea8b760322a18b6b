use nalgebra::{DMatrix, DVector};

use crate::error::{GbsError, Result};

/// Standard symplectic form `Ω = [[0, I], [-I, 0]]` in xxpp ordering.
pub fn symplectic_form(m: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        omega[(k, m + k)] = 1.0;
        omega[(m + k, k)] = -1.0;
    }
    omega
}

/// Result of a Williamson decomposition `V = S·diag(ν,ν)·Sᵀ` with `S`
/// symplectic and symplectic eigenvalues `ν` sorted descending.
#[derive(Debug, Clone)]
pub struct WilliamsonFactor {
    pub symplectic: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
}

impl WilliamsonFactor {
    /// `S·diag(ν,ν)·Sᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.eigenvalues.len();
        let mut d = DMatrix::zeros(2 * m, 2 * m);
        for k in 0..m {
            d[(k, k)] = self.eigenvalues[k];
            d[(m + k, m + k)] = self.eigenvalues[k];
        }
        &self.symplectic * d * self.symplectic.transpose()
    }
}

/// Symmetric matrix square root and inverse square root via eigendecomposition.
fn sym_sqrt_pair(v: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = crate::linalg::sym_eigen(v)?;
    let n = v.nrows();
    let scale = eig.eigenvalues.amax().max(1.0);
    let mut sq = DMatrix::zeros(n, n);
    let mut isq = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        if lam <= 1e-12 * scale {
            return Err(GbsError::Unphysical(format!(
                "covariance not positive definite (eigenvalue {lam:.3e})"
            )));
        }
        let root = lam.sqrt();
        let col = eig.eigenvectors.column(k);
        for i in 0..n {
            for j in 0..n {
                sq[(i, j)] += root * col[i] * col[j];
                isq[(i, j)] += col[i] * col[j] / root;
            }
        }
    }
    Ok((sq, isq))
}

/// Williamson decomposition of a physical covariance matrix.
///
/// Returns `S` and `ν` with `V = S·diag(ν,ν)·Sᵀ`, `S Ω Sᵀ = Ω`, `ν` sorted
/// descending. Construction: with `A = V^{-1/2} Ω V^{-1/2}` (antisymmetric),
/// the symmetric matrix `−A² = AᵀA` has eigenvalues `ω²` in doubled pairs;
/// each rotation plane is recovered by pairing an eigenvector `u₁` with
/// `u₂ = −A u₁/ω`, orthonormalized against the planes already extracted so
/// the assembled basis `L` is orthogonal to machine precision. Then
/// `ν = 1/ω` and `S = V^{1/2} L diag(ν,ν)^{-1/2}`.
pub fn williamson(v: &DMatrix<f64>) -> Result<WilliamsonFactor> {
    if v.nrows() != v.ncols() || v.nrows() % 2 != 0 {
        return Err(GbsError::Dimension(format!(
            "covariance must be square with even size, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let m = v.nrows() / 2;
    if m == 0 {
        return Ok(WilliamsonFactor {
            symplectic: DMatrix::zeros(0, 0),
            eigenvalues: DVector::zeros(0),
        });
    }
    let scale = v.amax().max(1.0);
    for i in 0..2 * m {
        for j in 0..i {
            if (v[(i, j)] - v[(j, i)]).abs() > 1e-8 * scale {
                return Err(GbsError::Unphysical(
                    "covariance not symmetric".to_string(),
                ));
            }
        }
    }
    let v_sym = 0.5 * (v + v.transpose());
    let (sqrt_v, inv_sqrt_v) = sym_sqrt_pair(&v_sym)?;
    let omega = symplectic_form(m);
    let a_raw = &inv_sqrt_v * &omega * &inv_sqrt_v;
    let a = 0.5 * (&a_raw - a_raw.transpose());

    // −A² = AᵀA is symmetric PSD with the squared rotation frequencies ω²
    // as doubled eigenvalues; its eigenbasis spans the rotation planes.
    let k_raw = a.transpose() * &a;
    let eig = crate::linalg::sym_eigen(&k_raw)?;
    let mut order: Vec<usize> = (0..2 * m).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    // Extract one plane per eigenvector not already covered by an earlier
    // plane's partner, orienting each so that A u1 = −ω u2, A u2 = ω u1
    // with ω > 0. Gram–Schmidt against everything accepted so far keeps the
    // assembled basis orthogonal even inside degenerate ω clusters.
    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(2 * m);
    let mut planes: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(m);
    for &col in &order {
        if planes.len() == m {
            break;
        }
        let mut u1 = eig.eigenvectors.column(col).into_owned();
        for c in &chosen {
            let p = c.dot(&u1);
            u1 -= c * p;
        }
        let n1 = u1.norm();
        if n1 < 0.5 {
            // This direction is (numerically) the partner of a plane that
            // was already extracted from the same eigenvalue cluster.
            continue;
        }
        u1 /= n1;
        let au1 = &a * &u1;
        let w = au1.norm();
        if w <= 1e-12 {
            return Err(GbsError::Unphysical(
                "degenerate symplectic spectrum: covariance is singular".to_string(),
            ));
        }
        let mut u2 = -au1 / w;
        for c in &chosen {
            let p = c.dot(&u2);
            u2 -= c * p;
        }
        let p = u1.dot(&u2);
        u2 -= &u1 * p;
        let n2 = u2.norm();
        if n2 < 0.5 {
            return Err(GbsError::Numerical(
                "rotation-plane pairing collapsed during Williamson decomposition".to_string(),
            ));
        }
        u2 /= n2;
        chosen.push(u1.clone());
        chosen.push(u2.clone());
        planes.push((w, u1, u2));
    }
    if planes.len() != m {
        return Err(GbsError::Numerical(format!(
            "Williamson decomposition extracted {} of {m} rotation planes",
            planes.len()
        )));
    }
    // ν = 1/ω, sorted descending.
    planes.sort_by(|p1, p2| p1.0.partial_cmp(&p2.0).unwrap());
    let mut l = DMatrix::zeros(2 * m, 2 * m);
    let mut nu = DVector::zeros(m);
    for (k, (w, u1, u2)) in planes.iter().enumerate() {
        nu[k] = 1.0 / w;
        l.set_column(k, u1);
        l.set_column(m + k, u2);
    }
    let mut dinv_sqrt = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        let s = 1.0 / nu[k].sqrt();
        dinv_sqrt[(k, k)] = s;
        dinv_sqrt[(m + k, m + k)] = s;
    }
    let s = &sqrt_v * &l * dinv_sqrt;
    Ok(WilliamsonFactor {
        symplectic: s,
        eigenvalues: nu,
    })
}
