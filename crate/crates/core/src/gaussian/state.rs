use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GbsError, Result};

use super::williamson::symplectic_form;

type C64 = Complex<f64>;

const SYMMETRY_RTOL: f64 = 1e-10;
const PHYSICALITY_ATOL: f64 = 1e-9;

/// A Gaussian state of `M` bosonic modes: a `2M×2M` real symmetric covariance
/// matrix plus a length-`2M` mean vector, quadrature ordering
/// `x_1..x_M, p_1..p_M`, vacuum covariance = identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    num_modes: usize,
    cov: DMatrix<f64>,
    mean: DVector<f64>,
}

impl GaussianState {
    /// Builds a state after checking symmetry and the uncertainty relation
    /// `V + iΩ ⪰ 0` (which also bounds every symplectic eigenvalue below
    /// by 1).
    pub fn new(cov: DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        if cov.nrows() != cov.ncols() || cov.nrows() % 2 != 0 {
            return Err(GbsError::Dimension(format!(
                "covariance must be square with even size, got {}x{}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        let num_modes = cov.nrows() / 2;
        if mean.len() != 2 * num_modes {
            return Err(GbsError::Dimension(format!(
                "mean length {} does not match 2M = {}",
                mean.len(),
                2 * num_modes
            )));
        }
        let scale = cov.amax().max(1.0);
        for i in 0..cov.nrows() {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_RTOL * scale {
                    return Err(GbsError::Unphysical(format!(
                        "covariance not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        // Hermitian matrix V + iΩ; its eigenvalues must be >= -tol.
        if num_modes > 0 {
            let omega = symplectic_form(num_modes);
            let mut herm = DMatrix::<C64>::zeros(2 * num_modes, 2 * num_modes);
            for i in 0..2 * num_modes {
                for j in 0..2 * num_modes {
                    herm[(i, j)] = C64::new(
                        0.5 * (cov[(i, j)] + cov[(j, i)]),
                        omega[(i, j)],
                    );
                }
            }
            let eig = crate::linalg::hermitian_eigenvalues(&herm)?;
            let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -PHYSICALITY_ATOL * scale.max(1.0) {
                return Err(GbsError::Unphysical(format!(
                    "V + iΩ has eigenvalue {min:.3e} < 0: state violates the uncertainty relation"
                )));
            }
        }
        Ok(Self {
            num_modes,
            cov,
            mean,
        })
    }

    /// Vacuum state of `m` modes.
    pub fn vacuum(m: usize) -> Self {
        Self {
            num_modes: m,
            cov: DMatrix::identity(2 * m, 2 * m),
            mean: DVector::zeros(2 * m),
        }
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn is_zero_mean(&self) -> bool {
        self.mean.iter().all(|x| x.abs() < 1e-12)
    }

    /// Total mean photon number, `(tr V − 2M)/4 + |mean|²/4`.
    pub fn mean_photon_total(&self) -> f64 {
        (self.cov.trace() - 2.0 * self.num_modes as f64) / 4.0 + self.mean.norm_squared() / 4.0
    }

    /// Restriction of the state to a subset of modes (partial trace over the
    /// rest). Indices must be unique and in range; order is preserved.
    pub fn reduced(&self, modes: &[usize]) -> Result<GaussianState> {
        let m = self.num_modes;
        let mut seen = vec![false; m];
        for &k in modes {
            if k >= m {
                return Err(GbsError::InvalidArgument(format!(
                    "mode index {k} out of range for {m}-mode state"
                )));
            }
            if seen[k] {
                return Err(GbsError::InvalidArgument(format!("duplicate mode index {k}")));
            }
            seen[k] = true;
        }
        let r = modes.len();
        let mut cov = DMatrix::zeros(2 * r, 2 * r);
        let mut mean = DVector::zeros(2 * r);
        let q = |local: usize, quad: usize, global: &[usize]| global[local] + quad * m;
        for (a, _) in modes.iter().enumerate() {
            mean[a] = self.mean[q(a, 0, modes)];
            mean[r + a] = self.mean[q(a, 1, modes)];
            for (b, _) in modes.iter().enumerate() {
                cov[(a, b)] = self.cov[(q(a, 0, modes), q(b, 0, modes))];
                cov[(a, r + b)] = self.cov[(q(a, 0, modes), q(b, 1, modes))];
                cov[(r + a, b)] = self.cov[(q(a, 1, modes), q(b, 0, modes))];
                cov[(r + a, r + b)] = self.cov[(q(a, 1, modes), q(b, 1, modes))];
            }
        }
        Ok(GaussianState {
            num_modes: r,
            cov,
            mean,
        })
    }
}

/// Per-input squeezing parameters and phases. `r = 0` means the source is off
/// (vacuum input).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezerBank {
    pub r: Vec<f64>,
    pub phi: Vec<f64>,
}

impl SqueezerBank {
    pub fn new(r: Vec<f64>, phi: Vec<f64>) -> Result<Self> {
        if r.len() != phi.len() {
            return Err(GbsError::Dimension(format!(
                "bank has {} squeezing parameters but {} phases",
                r.len(),
                phi.len()
            )));
        }
        if let Some(bad) = r.iter().find(|&&x| x < 0.0) {
            return Err(GbsError::InvalidArgument(format!(
                "negative squeezing parameter {bad}"
            )));
        }
        Ok(Self { r, phi })
    }

    /// Bank with all phases zero.
    pub fn from_r(r: Vec<f64>) -> Result<Self> {
        let phi = vec![0.0; r.len()];
        Self::new(r, phi)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Product of single-mode squeezed vacua: per-mode covariance
/// `R(φ) diag(e^{−2r}, e^{+2r}) R(φ)^T`, zero mean.
pub fn squeezed_vacuum(bank: &SqueezerBank) -> Result<GaussianState> {
    let m = bank.len();
    let mut cov = DMatrix::identity(2 * m, 2 * m);
    for k in 0..m {
        let (r, phi) = (bank.r[k], bank.phi[k]);
        let (c, s) = (phi.cos(), phi.sin());
        let (dm, dp) = ((-2.0 * r).exp(), (2.0 * r).exp());
        // R(φ) D R(φ)^T in the (x_k, p_k) subspace.
        cov[(k, k)] = c * c * dm + s * s * dp;
        cov[(m + k, m + k)] = s * s * dm + c * c * dp;
        cov[(k, m + k)] = c * s * (dm - dp);
        cov[(m + k, k)] = cov[(k, m + k)];
    }
    GaussianState::new(cov, DVector::zeros(2 * m))
}

/// Real `2M_out×2M_in` quadrature representation of a complex transfer matrix
/// `T = A + iB`: `S = [[A, −B], [B, A]]`.
pub fn real_embedding(t: &DMatrix<C64>) -> DMatrix<f64> {
    let (mo, mi) = (t.nrows(), t.ncols());
    let mut s = DMatrix::zeros(2 * mo, 2 * mi);
    for i in 0..mo {
        for j in 0..mi {
            let z = t[(i, j)];
            s[(i, j)] = z.re;
            s[(i, mi + j)] = -z.im;
            s[(mo + i, j)] = z.im;
            s[(mo + i, mi + j)] = z.re;
        }
    }
    s
}

/// Evolves a state through a sub-unitary transfer matrix:
/// `V' = S V Sᵀ + (I − S Sᵀ)`, `mean' = S·mean`. Input modes beyond the
/// state's size are treated as vacuum; super-unitary matrices are rejected.
pub fn apply_transfer(state: &GaussianState, t: &DMatrix<C64>) -> Result<GaussianState> {
    let (mo, mi) = (t.nrows(), t.ncols());
    if state.num_modes() > mi {
        return Err(GbsError::Dimension(format!(
            "state has {} modes but transfer matrix only accepts {}",
            state.num_modes(),
            mi
        )));
    }
    let smax = t
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max);
    if smax > 1.0 + 1e-9 {
        return Err(GbsError::Unphysical(format!(
            "transfer matrix has singular value {smax:.12} > 1: it would create energy"
        )));
    }
    // Pad trailing input modes with vacuum.
    let mut v_in = DMatrix::identity(2 * mi, 2 * mi);
    let mut mean_in = DVector::zeros(2 * mi);
    let ms = state.num_modes();
    for i in 0..ms {
        mean_in[i] = state.mean()[i];
        mean_in[mi + i] = state.mean()[ms + i];
        for j in 0..ms {
            v_in[(i, j)] = state.cov()[(i, j)];
            v_in[(i, mi + j)] = state.cov()[(i, ms + j)];
            v_in[(mi + i, j)] = state.cov()[(ms + i, j)];
            v_in[(mi + i, mi + j)] = state.cov()[(ms + i, ms + j)];
        }
    }
    let s = real_embedding(t);
    let mut v_out = &s * v_in * s.transpose();
    let g = &s * s.transpose();
    for i in 0..2 * mo {
        for j in 0..2 * mo {
            v_out[(i, j)] -= g[(i, j)];
        }
        v_out[(i, i)] += 1.0;
    }
    // Enforce exact symmetry against round-off.
    let v_sym = 0.5 * (&v_out + v_out.transpose());
    GaussianState::new(v_sym, &s * mean_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag_t(m: usize, z: C64) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_element(m, z))
    }

    #[test]
    fn zero_squeezing_is_vacuum() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![0.0, 0.0]).unwrap()).unwrap();
        assert_relative_eq!(st.cov(), &DMatrix::identity(4, 4), epsilon = 1e-14);
    }

    #[test]
    fn unit_squeezing_covariance() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.0]).unwrap()).unwrap();
        assert_relative_eq!(st.cov()[(0, 0)], 0.13534, epsilon = 1e-5);
        assert_relative_eq!(st.cov()[(1, 1)], 7.38906, epsilon = 1e-5);
        assert_relative_eq!(st.cov()[(0, 1)], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_photon_matches_sinh_squared() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.8]).unwrap()).unwrap();
        assert_relative_eq!(st.mean_photon_total(), 8.65639, epsilon = 1e-5);
        assert_relative_eq!(st.mean_photon_total(), 1.8f64.sinh().powi(2), epsilon = 1e-12);
    }

    #[test]
    fn negative_squeezing_rejected() {
        assert!(SqueezerBank::from_r(vec![-0.5]).is_err());
    }

    #[test]
    fn phase_rotates_squeezing_axis() {
        let st = squeezed_vacuum(
            &SqueezerBank::new(vec![1.0], vec![std::f64::consts::FRAC_PI_2]).unwrap(),
        )
        .unwrap();
        // At φ = π/2 the squeezed and anti-squeezed quadratures swap.
        assert_relative_eq!(st.cov()[(0, 0)], 2.0f64.exp(), epsilon = 1e-10);
        assert_relative_eq!(st.cov()[(1, 1)], (-2.0f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn identity_transfer_is_noop() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.0, 0.3]).unwrap()).unwrap();
        let out = apply_transfer(&st, &diag_t(2, C64::new(1.0, 0.0))).unwrap();
        assert_relative_eq!(out.cov(), st.cov(), epsilon = 1e-12);
    }

    #[test]
    fn uniform_loss_interpolates_to_vacuum() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.0]).unwrap()).unwrap();
        let eta: f64 = 0.5;
        let out = apply_transfer(&st, &diag_t(1, C64::new(eta.sqrt(), 0.0))).unwrap();
        assert_relative_eq!(out.cov()[(0, 0)], 0.56767, epsilon = 1e-5);
        assert_relative_eq!(out.cov()[(1, 1)], 4.19453, epsilon = 1e-5);
    }

    #[test]
    fn full_loss_gives_vacuum() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.5, 0.9]).unwrap()).unwrap();
        let out = apply_transfer(&st, &diag_t(2, C64::new(0.0, 0.0))).unwrap();
        assert_relative_eq!(out.cov(), &DMatrix::identity(4, 4), epsilon = 1e-12);
    }

    #[test]
    fn super_unitary_rejected() {
        let st = GaussianState::vacuum(1);
        assert!(apply_transfer(&st, &diag_t(1, C64::new(1.01, 0.0))).is_err());
    }

    #[test]
    fn energy_bookkeeping_under_diagonal_loss() {
        let bank = SqueezerBank::from_r(vec![1.0, 0.7, 1.3]).unwrap();
        let st = squeezed_vacuum(&bank).unwrap();
        let etas = [0.9, 0.5, 0.3];
        let t = DMatrix::from_diagonal(&DVector::from_iterator(
            3,
            etas.iter().map(|e: &f64| C64::new(e.sqrt(), 0.0)),
        ));
        let out = apply_transfer(&st, &t).unwrap();
        let expected: f64 = bank
            .r
            .iter()
            .zip(etas.iter())
            .map(|(r, e)| e * r.sinh().powi(2))
            .sum();
        assert_relative_eq!(out.mean_photon_total(), expected, epsilon = 1e-10);
    }

    #[test]
    fn beamsplitter_preserves_photons() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.0, 0.0]).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(-h, 0.0),
            ],
        );
        let out = apply_transfer(&st, &t).unwrap();
        assert_relative_eq!(
            out.mean_photon_total(),
            1.0f64.sinh().powi(2),
            epsilon = 1e-10
        );
    }

    #[test]
    fn reduced_full_subset_is_identity() {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![0.5, 1.0]).unwrap()).unwrap();
        let red = st.reduced(&[0, 1]).unwrap();
        assert_relative_eq!(red.cov(), st.cov(), epsilon = 1e-14);
    }

    #[test]
    fn tmss_marginal_is_thermal() {
        // Two-mode squeezed state from two SMSS on a 50/50 beamsplitter.
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![1.0, 1.0]).unwrap()).unwrap();
        // Rotate second squeezer to be anti-squeezed so the output is a TMSS.
        let st2 = squeezed_vacuum(
            &SqueezerBank::new(vec![1.0, 1.0], vec![0.0, std::f64::consts::FRAC_PI_2]).unwrap(),
        )
        .unwrap();
        let _ = st;
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let t = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(h, 0.0),
                C64::new(-h, 0.0),
            ],
        );
        let out = apply_transfer(&st2, &t).unwrap();
        let red = out.reduced(&[0]).unwrap();
        let nbar = 1.0f64.sinh().powi(2);
        assert_relative_eq!(red.mean_photon_total(), 1.38110, epsilon = 1e-4);
        assert_relative_eq!(red.cov()[(0, 0)], 2.0 * nbar + 1.0, epsilon = 1e-9);
        assert_relative_eq!(red.cov()[(1, 1)], 2.0 * nbar + 1.0, epsilon = 1e-9);
    }

    #[test]
    fn reduced_rejects_bad_indices() {
        let st = GaussianState::vacuum(2);
        assert!(st.reduced(&[0, 0]).is_err());
        assert!(st.reduced(&[2]).is_err());
    }

    #[test]
    fn empty_reduction_is_trivial_state() {
        let st = GaussianState::vacuum(2);
        let red = st.reduced(&[]).unwrap();
        assert_eq!(red.num_modes(), 0);
    }

    #[test]
    fn unphysical_covariance_rejected() {
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.5]));
        assert!(GaussianState::new(cov, DVector::zeros(2)).is_err());
    }
}
