use nalgebra::{Complex, DMatrix};

use crate::error::{GbsError, Result};

use super::hafnian::hafnian;
use super::state::GaussianState;
use super::williamson::williamson;

type C64 = Complex<f64>;

const PURITY_TOL: f64 = 1e-6;

/// Complex Husimi covariance `Σ_Q` of a state, in `(a_1..a_M, a†_1..a†_M)`
/// ordering. With `m_ij = ⟨a_i a_j⟩` and `n_ij = ⟨a†_i a_j⟩` extracted from
/// the quadrature covariance,
///
/// `Σ_Q = [[nᵀ + I, m], [m̄, n + I]]`.
pub fn husimi_q(state: &GaussianState) -> DMatrix<C64> {
    let m = state.num_modes();
    let v = state.cov();
    let mut q = DMatrix::<C64>::zeros(2 * m, 2 * m);
    for i in 0..m {
        for j in 0..m {
            let vxx = v[(i, j)];
            let vpp = v[(m + i, m + j)];
            let vxp = v[(i, m + j)];
            let vpx = v[(m + i, j)];
            // m = (Vxx − Vpp)/4 + i(Vxp + Vxpᵀ)/4, n = (Vxx + Vpp − 2I)/4 + i(Vxp − Vxpᵀ)/4
            let pair = C64::new((vxx - vpp) / 4.0, (vxp + vpx) / 4.0);
            let del = if i == j { 1.0 } else { 0.0 };
            let therm = C64::new((vxx + vpp - 2.0 * del) / 4.0, (vxp - vpx) / 4.0);
            q[(i, j)] += therm.conj(); // (nᵀ)_ij = n_ji = n̄_ij
            q[(m + i, m + j)] += therm;
            q[(i, m + j)] = pair;
            q[(m + i, j)] = pair.conj();
        }
        q[(i, i)] += C64::new(1.0, 0.0);
        q[(m + i, m + i)] += C64::new(1.0, 0.0);
    }
    q
}

fn check_pure(state: &GaussianState) -> Result<()> {
    let wf = williamson(state.cov())?;
    for k in 0..state.num_modes() {
        if (wf.eigenvalues[k] - 1.0).abs() > PURITY_TOL {
            return Err(GbsError::Unphysical(format!(
                "state is mixed: symplectic eigenvalue {:.8} differs from 1",
                wf.eigenvalues[k]
            )));
        }
    }
    Ok(())
}

/// Pair matrix `B` and vacuum amplitude of a zero-mean *pure* Gaussian state:
/// the state is `|ψ⟩ = c₀ · exp(½ Σ B_ij a†_i a†_j)|0⟩` with
/// `c₀ = det(Σ_Q)^{-1/4}`. In the `(a, a†)` ordering used by [`husimi_q`],
/// `B` is the upper-right `M×M` block of `I − Σ_Q^{-1}`; this is the block
/// for which the reconstructed state satisfies `⟨a_i a_j⟩ = m_ij` (the other
/// off-diagonal block is its complex conjugate and would yield the conjugate
/// state, which has identical photon statistics but the wrong phase under
/// displacement).
pub fn pure_pair_matrix(state: &GaussianState) -> Result<(DMatrix<C64>, f64)> {
    if !state.is_zero_mean() {
        return Err(GbsError::InvalidArgument(
            "pair matrix requires a zero-mean state".to_string(),
        ));
    }
    check_pure(state)?;
    let m = state.num_modes();
    let q = husimi_q(state);
    let det = q.determinant();
    let q_inv = q
        .try_inverse()
        .ok_or_else(|| GbsError::Numerical("Husimi covariance is singular".to_string()))?;
    // Upper-right M×M block of I − Σ_Q^{-1}; the identity contributes nothing
    // off the diagonal blocks.
    let mut b = DMatrix::<C64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            b[(i, j)] = -q_inv[(i, m + j)];
        }
    }
    // Symmetrize against round-off.
    let bt = b.transpose();
    let b = (b + bt).scale(0.5);
    let vac = det.re.powf(-0.25);
    Ok((b, vac))
}

/// Fock amplitude `⟨n|ψ⟩` of a zero-mean pure Gaussian state, via the hafnian
/// of the pair matrix with rows/columns repeated per occupation.
pub fn fock_amplitude(state: &GaussianState, n: &[usize]) -> Result<C64> {
    let m = state.num_modes();
    if n.len() != m {
        return Err(GbsError::Dimension(format!(
            "occupation vector length {} does not match {m} modes",
            n.len()
        )));
    }
    let total: usize = n.iter().sum();
    if total > super::hafnian::MAX_HAFNIAN_SIZE {
        return Err(GbsError::ScaleLimit(format!(
            "total photon number {total} exceeds the hafnian budget"
        )));
    }
    let (b, vac) = pure_pair_matrix(state)?;
    let mut idx = Vec::with_capacity(total);
    for (mode, &cnt) in n.iter().enumerate() {
        idx.extend(std::iter::repeat(mode).take(cnt));
    }
    let mut bn = DMatrix::<C64>::zeros(total, total);
    for (a, &ia) in idx.iter().enumerate() {
        for (c, &ic) in idx.iter().enumerate() {
            bn[(a, c)] = b[(ia, ic)];
        }
    }
    let h = hafnian(&bn)?;
    let mut norm = 1.0;
    for &cnt in n {
        for k in 1..=cnt {
            norm *= k as f64;
        }
    }
    Ok(h * C64::new(vac / norm.sqrt(), 0.0))
}

/// Dense Fock-box statevector of a zero-mean pure Gaussian state with local
/// cutoff `d` per mode, index convention `idx = Σ_k n_k d^{M−1−k}` (mode 0
/// slowest). Amplitudes inside the box are exact; the missing norm is the
/// Fock tail above the cutoff.
///
/// Built by expanding `exp(½ Σ B_ij a†_i a†_j)|0⟩` as a power series; each
/// application of the pair operator adds two photons, so the series
/// terminates inside the box.
pub fn pure_statevector(state: &GaussianState, d: usize) -> Result<Vec<C64>> {
    let m = state.num_modes();
    if d == 0 {
        return Err(GbsError::InvalidArgument("local cutoff d must be ≥ 1".to_string()));
    }
    let dim = (d as u128).checked_pow(m as u32).ok_or_else(|| {
        GbsError::ScaleLimit(format!("statevector dimension {d}^{m} overflows"))
    })?;
    if dim > (1u128 << 26) {
        return Err(GbsError::ScaleLimit(format!(
            "statevector dimension {d}^{m} = {dim} exceeds the memory budget (2^26)"
        )));
    }
    let dim = dim as usize;
    let (b, vac) = pure_pair_matrix(state)?;

    let strides: Vec<usize> = (0..m).map(|k| d.pow((m - 1 - k) as u32)).collect();
    let mut psi = vec![C64::new(0.0, 0.0); dim];
    psi[0] = C64::new(1.0, 0.0);
    let mut term = psi.clone();
    let max_apps = m * (d - 1) / 2 + 1;
    for app in 1..=max_apps {
        let mut next = vec![C64::new(0.0, 0.0); dim];
        // next = G·term / app, G = Σ_{i<j} B_ij a†_i a†_j + ½ Σ_i B_ii a†_i².
        let mut occ = vec![0usize; m];
        for (idx, &c) in term.iter().enumerate() {
            if c.norm_sqr() == 0.0 {
                continue;
            }
            let mut rem = idx;
            for k in 0..m {
                occ[k] = rem / strides[k];
                rem %= strides[k];
            }
            for i in 0..m {
                if occ[i] + 1 >= d {
                    continue;
                }
                for j in i..m {
                    let (coeff, factor, tgt) = if i == j {
                        if occ[i] + 2 >= d {
                            continue;
                        }
                        (
                            0.5 * b[(i, i)],
                            (((occ[i] + 1) * (occ[i] + 2)) as f64).sqrt(),
                            idx + 2 * strides[i],
                        )
                    } else {
                        if occ[j] + 1 >= d {
                            continue;
                        }
                        (
                            b[(i, j)],
                            (((occ[i] + 1) * (occ[j] + 1)) as f64).sqrt(),
                            idx + strides[i] + strides[j],
                        )
                    };
                    next[tgt] += coeff * c * C64::new(factor, 0.0);
                }
            }
        }
        let inv_app = 1.0 / app as f64;
        let mut norm = 0.0;
        for (t, n) in term.iter_mut().zip(next.iter()) {
            *t = n * C64::new(inv_app, 0.0);
            norm += t.norm_sqr();
        }
        for (p, t) in psi.iter_mut().zip(term.iter()) {
            *p += t;
        }
        if norm < 1e-32 {
            break;
        }
    }
    for p in psi.iter_mut() {
        *p *= C64::new(vac, 0.0);
    }
    Ok(psi)
}
