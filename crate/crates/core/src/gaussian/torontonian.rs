use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::{Cholesky, Complex, DMatrix};

use crate::error::{GbsError, Result};

use super::state::GaussianState;

type C64 = Complex<f64>;

/// Exact torontonian of a complex Hermitian `2n×2n` matrix in `(a, a†)`
/// ordering (mode `i` occupies rows `i` and `n+i`):
///
/// `tor(O) = Σ_{Z ⊆ [n]} (−1)^{n−|Z|} / √det((I − O)_Z)`.
///
/// Requires `I − O` positive definite on every principal mode-submatrix;
/// a failed Cholesky names the offending subset.
pub fn torontonian(o: &DMatrix<C64>) -> Result<f64> {
    let dim = o.nrows();
    if o.ncols() != dim || dim % 2 != 0 {
        return Err(GbsError::Dimension(format!(
            "torontonian requires a square matrix of even size, got {}x{}",
            dim,
            o.ncols()
        )));
    }
    let n = dim / 2;
    if n > 20 {
        return Err(GbsError::ScaleLimit(format!(
            "torontonian over {n} modes exceeds the exact-evaluation budget (20)"
        )));
    }
    let mut id_minus_o = DMatrix::<C64>::identity(dim, dim) - o;
    // Exact Hermitization guards the Cholesky against round-off.
    let herm = id_minus_o.adjoint();
    id_minus_o = (id_minus_o + herm).scale(0.5);

    let mut total = 0.0;
    for subset in 0u64..(1u64 << n) {
        let modes: Vec<usize> = (0..n).filter(|k| subset >> k & 1 == 1).collect();
        let z = modes.len();
        let sqrt_det = if z == 0 {
            1.0
        } else {
            let mut sub = DMatrix::<C64>::zeros(2 * z, 2 * z);
            for (bi, &mi) in modes.iter().enumerate() {
                for (bj, &mj) in modes.iter().enumerate() {
                    sub[(bi, bj)] = id_minus_o[(mi, mj)];
                    sub[(bi, z + bj)] = id_minus_o[(mi, n + mj)];
                    sub[(z + bi, bj)] = id_minus_o[(n + mi, mj)];
                    sub[(z + bi, z + bj)] = id_minus_o[(n + mi, n + mj)];
                }
            }
            let chol = Cholesky::new(sub).ok_or_else(|| {
                GbsError::Numerical(format!(
                    "(I − O) restricted to mode subset {modes:?} is not positive definite"
                ))
            })?;
            let mut prod = 1.0;
            for k in 0..2 * z {
                prod *= chol.l_dirty()[(k, k)].re;
            }
            if prod.abs() < 1e-300 {
                return Err(GbsError::Numerical(format!(
                    "singular subdeterminant on mode subset {modes:?}"
                )));
            }
            prod
        };
        let sign = if (n - z) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign / sqrt_det;
    }
    Ok(total)
}

/// Builds the Hermitian `O = I − Σ_Q^{-1}` matrix of a zero-mean state, the
/// torontonian's argument for click probabilities.
pub fn o_matrix(state: &GaussianState) -> Result<DMatrix<C64>> {
    let q = super::fock::husimi_q(state);
    let dim = q.nrows();
    let q_inv = q.clone().try_inverse().ok_or_else(|| {
        GbsError::Numerical("Husimi covariance is singular".to_string())
    })?;
    Ok(DMatrix::identity(dim, dim) - q_inv)
}

/// Threshold-detector likelihood engine for one zero-mean Gaussian state.
///
/// Caches the "all-silent" probabilities `q(N) = 1/√det(Σ_N)` per mode subset
/// (`Σ = (V + I)/2` is the real Husimi covariance); every pattern or marginal
/// probability is an inclusion-exclusion sum over cached entries, so repeated
/// queries (chain-rule sampling, likelihood scans) amortize to table lookups.
/// Thread-safe and deterministic.
pub struct ClickKernel {
    num_modes: usize,
    sigma: DMatrix<f64>,
    cache: RwLock<HashMap<u64, f64>>,
}

impl ClickKernel {
    pub fn new(state: &GaussianState) -> Result<Self> {
        if !state.is_zero_mean() {
            return Err(GbsError::InvalidArgument(
                "click probabilities require a zero-mean state; displaced states are handled by the MPS sampling path".to_string(),
            ));
        }
        let m = state.num_modes();
        if m > 63 {
            return Err(GbsError::ScaleLimit(format!(
                "click kernel limited to 63 modes, got {m}"
            )));
        }
        let mut sigma = state.cov().clone();
        for i in 0..2 * m {
            for j in 0..2 * m {
                sigma[(i, j)] *= 0.5;
            }
            sigma[(i, i)] += 0.5;
        }
        Ok(Self {
            num_modes: m,
            sigma,
            cache: RwLock::new(HashMap::new()),
        })
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    /// Probability that every mode in `mask` registers no click, marginalized
    /// over the rest: `1/√det(Σ_mask)`.
    pub fn silent_probability(&self, mask: u64) -> Result<f64> {
        if let Some(&v) = self.cache.read().unwrap().get(&mask) {
            return Ok(v);
        }
        let modes: Vec<usize> = (0..self.num_modes).filter(|k| mask >> k & 1 == 1).collect();
        let z = modes.len();
        let value = if z == 0 {
            1.0
        } else {
            let m = self.num_modes;
            let mut sub = DMatrix::<f64>::zeros(2 * z, 2 * z);
            for (bi, &mi) in modes.iter().enumerate() {
                for (bj, &mj) in modes.iter().enumerate() {
                    sub[(bi, bj)] = self.sigma[(mi, mj)];
                    sub[(bi, z + bj)] = self.sigma[(mi, m + mj)];
                    sub[(z + bi, bj)] = self.sigma[(m + mi, mj)];
                    sub[(z + bi, z + bj)] = self.sigma[(m + mi, m + mj)];
                }
            }
            let chol = Cholesky::new(sub).ok_or_else(|| {
                GbsError::Numerical(format!(
                    "Husimi covariance restricted to modes {modes:?} is not positive definite"
                ))
            })?;
            let mut sqrt_det = 1.0;
            for k in 0..2 * z {
                sqrt_det *= chol.l_dirty()[(k, k)];
            }
            1.0 / sqrt_det
        };
        self.cache.write().unwrap().insert(mask, value);
        Ok(value)
    }

    /// Probability of a marginal click pattern: modes in `click_mask` click,
    /// modes in `silent_mask` do not, all others marginalized.
    pub fn marginal_probability(&self, click_mask: u64, silent_mask: u64) -> Result<f64> {
        debug_assert_eq!(click_mask & silent_mask, 0);
        // Inclusion-exclusion over subsets S of the clicked set:
        // P = Σ_S (−1)^{|S|} q(silent ∪ S).
        let mut p = 0.0;
        let mut sub = click_mask;
        loop {
            let sign = if (sub.count_ones() % 2) == 0 { 1.0 } else { -1.0 };
            p += sign * self.silent_probability(silent_mask | sub)?;
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & click_mask;
        }
        Ok(p.clamp(0.0, 1.0))
    }

    /// Probability of a full click pattern over all modes.
    pub fn pattern_probability(&self, pattern: &[bool]) -> Result<f64> {
        if pattern.len() != self.num_modes {
            return Err(GbsError::Dimension(format!(
                "pattern length {} does not match {} modes",
                pattern.len(),
                self.num_modes
            )));
        }
        let mut click = 0u64;
        let mut silent = 0u64;
        for (k, &bit) in pattern.iter().enumerate() {
            if bit {
                click |= 1 << k;
            } else {
                silent |= 1 << k;
            }
        }
        self.marginal_probability(click, silent)
    }
}

/// Probability that a zero-mean Gaussian state produces the given
/// threshold-detector click pattern.
pub fn click_probability(state: &GaussianState, pattern: &[bool]) -> Result<f64> {
    ClickKernel::new(state)?.pattern_probability(pattern)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{apply_transfer, squeezed_vacuum, GaussianState, SqueezerBank};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn thermal_state(nbar: f64) -> GaussianState {
        let v = DMatrix::from_diagonal(&DVector::from_vec(vec![
            2.0 * nbar + 1.0,
            2.0 * nbar + 1.0,
        ]));
        GaussianState::new(v, DVector::zeros(2)).unwrap()
    }

    #[test]
    fn empty_torontonian_is_one() {
        let o = DMatrix::<C64>::zeros(0, 0);
        assert_relative_eq!(torontonian(&o).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn thermal_click_probability_via_torontonian() {
        let st = thermal_state(1.0);
        let o = o_matrix(&st).unwrap();
        let q = crate::gaussian::husimi_q(&st);
        let sqrt_det_q = q.determinant().re.sqrt();
        let p_click = torontonian(&o).unwrap() / sqrt_det_q;
        assert_relative_eq!(p_click, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn vacuum_patterns() {
        let st = GaussianState::vacuum(3);
        assert_relative_eq!(
            click_probability(&st, &[false, false, false]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            click_probability(&st, &[true, false, false]).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pattern_length_mismatch_rejected() {
        let st = GaussianState::vacuum(2);
        assert!(click_probability(&st, &[true]).is_err());
    }

    fn smss_on_splitter(r: f64) -> GaussianState {
        let st = squeezed_vacuum(&SqueezerBank::from_r(vec![r, 0.0]).unwrap()).unwrap();
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
        apply_transfer(&st, &t).unwrap()
    }

    #[test]
    fn two_mode_probabilities_normalize() {
        let st = smss_on_splitter(1.0);
        let kernel = ClickKernel::new(&st).unwrap();
        let mut total = 0.0;
        for a in [false, true] {
            for b in [false, true] {
                total += kernel.pattern_probability(&[a, b]).unwrap();
            }
        }
        assert_relative_eq!(total, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn torontonian_route_matches_subset_route() {
        // Same pattern probability computed from the complex torontonian and
        // from the real subset-determinant kernel.
        let st = smss_on_splitter(0.8);
        let p_kernel = click_probability(&st, &[true, true]).unwrap();
        let o = o_matrix(&st).unwrap();
        let q = crate::gaussian::husimi_q(&st);
        let p_tor = torontonian(&o).unwrap() / q.determinant().re.sqrt();
        assert_relative_eq!(p_kernel, p_tor, epsilon = 1e-10);
    }

    #[test]
    fn smss_split_matches_fock_space_sum() {
        // P(click, no-click) for an r=1 SMSS on a 50/50 splitter, against a
        // brute-force Fock expansion: the SMSS has amplitude c_{2n} on |2n>,
        // each photon routes independently (single source), so
        // P(pattern 10) = Σ_n |c_2n|² (1/2^{2n}) (#routings with mode2 empty
        // minus vacuum)... assembled below as a direct binomial sum.
        let r: f64 = 1.0;
        let st = smss_on_splitter(r);
        let p = click_probability(&st, &[true, false]).unwrap();
        // Fock oracle: P(n1 photons in mode 1, 0 in mode 2) with n = 2k total:
        // amplitude of |2k,0> component... total probability that all photons
        // exit port 1 and at least one photon exists.
        let t = r.tanh();
        let c = r.cosh();
        let mut oracle = 0.0;
        for k in 1..40 {
            // |c_{2k}|² = (2k)! t^{2k} / (4^k (k!)² cosh r)
            let mut log_fact = 0.0;
            for i in 1..=2 * k {
                log_fact += (i as f64).ln();
            }
            let mut log_kfact = 0.0;
            for i in 1..=k {
                log_kfact += (i as f64).ln();
            }
            let log_p2k = log_fact + 2.0 * (k as f64) * t.abs().ln()
                - (k as f64) * 4.0f64.ln()
                - 2.0 * log_kfact
                - c.ln();
            // all 2k photons to port 1: (1/2)^{2k}
            oracle += log_p2k.exp() * 0.25f64.powi(k as i32);
        }
        assert_relative_eq!(p, oracle, epsilon = 1e-8);
    }
}
