//! Matrix-product-state simulation of lossy GBS: splitting the output
//! covariance into a pure quantum part and a classical displacement part,
//! effective photon number, analytic entanglement spectra and truncation
//! errors, Fock-basis tensor construction, displaced sampling, and the
//! transmission-rescaling transform.

use std::collections::{BinaryHeap, HashSet};
use std::io::{Read, Write};

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

use crate::error::{GbsError, Result};
use crate::gaussian::{pure_statevector, williamson, GaussianState, SqueezerBank};
use crate::rng::sample_rng;
use crate::samplers::{classical_gaussian_sampler, SampleBatch};

type C64 = Complex<f64>;

const PURITY_TOL: f64 = 1e-6;

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    let at = a.transpose();
    (a + at).scale(0.5)
}

/// Split of a covariance into `V = V_p + W`: a pure quantum part and a
/// positive-semidefinite classical part realized as random displacement.
#[derive(Debug, Clone)]
pub struct PureDecomposition {
    pub v_p: DMatrix<f64>,
    pub w: DMatrix<f64>,
    /// Mean photon number of the pure part, `(tr V_p − 2M)/4`.
    pub n_eff: f64,
}

impl PureDecomposition {
    pub fn num_modes(&self) -> usize {
        self.v_p.nrows() / 2
    }
}

/// Williamson clamp decomposition: with `V = S·diag(ν,ν)·Sᵀ`, the pure part
/// is `V_p = S·Sᵀ` (all symplectic eigenvalues clamped to 1) and the
/// classical remainder `W = S·diag(ν−1,ν−1)·Sᵀ` is PSD because `ν ≥ 1`.
/// This is the minimal-noise split realizing `V` as a displaced pure state.
pub fn decompose(v: &DMatrix<f64>) -> Result<PureDecomposition> {
    let wf = williamson(v)?;
    let m = wf.eigenvalues.len();
    let s = &wf.symplectic;
    let v_p = symmetrize(s * s.transpose());
    let mut excess = DMatrix::zeros(2 * m, 2 * m);
    for k in 0..m {
        let e = (wf.eigenvalues[k] - 1.0).max(0.0);
        excess[(k, k)] = e;
        excess[(m + k, m + k)] = e;
    }
    let w = symmetrize(s * excess * s.transpose());
    let n_eff = (v_p.trace() - 2.0 * m as f64) / 4.0;
    Ok(PureDecomposition { v_p, w, n_eff })
}

/// Effective squeezed photon number of a decomposition — the exponent driver
/// of the simulation cost.
pub fn effective_photon_number(decomp: &PureDecomposition) -> f64 {
    decomp.n_eff
}

fn check_pure_cov(v_p: &DMatrix<f64>) -> Result<()> {
    let wf = williamson(v_p)?;
    for k in 0..wf.eigenvalues.len() {
        if (wf.eigenvalues[k] - 1.0).abs() > PURITY_TOL {
            return Err(GbsError::Unphysical(format!(
                "covariance is mixed: symplectic eigenvalue {:.8} differs from 1",
                wf.eigenvalues[k]
            )));
        }
    }
    Ok(())
}

/// Schmidt spectrum across one bond of a pure Gaussian state: the reduced
/// covariance's symplectic eigenvalues `ν'_k` give geometric ratios
/// `λ_k = (ν'_k − 1)/(ν'_k + 1)`, and the Schmidt probabilities are the
/// product of geometric distributions `∏_k (1−λ_k) λ_k^{m_k}`.
#[derive(Debug, Clone)]
pub struct EntanglementSpectrum {
    /// Bond index: the cut separates modes `0..cut` from `cut..M`.
    pub cut: usize,
    /// Geometric ratios, descending; exact zeros are dropped.
    pub lambda: Vec<f64>,
}

/// Heap entry for best-first enumeration: largest probability first, ties
/// broken toward the lexicographically smallest occupation vector.
struct SpectrumEntry {
    prob: f64,
    occ: Vec<u32>,
}

impl PartialEq for SpectrumEntry {
    fn eq(&self, other: &Self) -> bool {
        self.prob == other.prob && self.occ == other.occ
    }
}
impl Eq for SpectrumEntry {}
impl PartialOrd for SpectrumEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for SpectrumEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.prob
            .partial_cmp(&other.prob)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.occ.cmp(&self.occ))
    }
}

impl EntanglementSpectrum {
    /// The `k` largest Schmidt probabilities in descending order, enumerated
    /// best-first over the product of geometrics without materializing the
    /// full spectrum.
    pub fn top(&self, k: usize) -> Vec<f64> {
        if self.lambda.is_empty() {
            // Product state across this cut: a single Schmidt value of 1.
            return if k == 0 { Vec::new() } else { vec![1.0] };
        }
        let norm: f64 = self.lambda.iter().map(|l| 1.0 - l).product();
        let n = self.lambda.len();
        let mut heap = BinaryHeap::new();
        let mut visited: HashSet<Vec<u32>> = HashSet::new();
        let root = vec![0u32; n];
        visited.insert(root.clone());
        heap.push(SpectrumEntry {
            prob: norm,
            occ: root,
        });
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let Some(entry) = heap.pop() else { break };
            out.push(entry.prob);
            for j in 0..n {
                let mut occ = entry.occ.clone();
                occ[j] += 1;
                if visited.insert(occ.clone()) {
                    heap.push(SpectrumEntry {
                        prob: entry.prob * self.lambda[j],
                        occ,
                    });
                }
            }
        }
        out
    }

    /// Total Schmidt weight captured by the `chi` largest values.
    pub fn retained_weight(&self, chi: usize) -> f64 {
        self.top(chi).iter().sum::<f64>().min(1.0)
    }
}

/// Entanglement spectrum of the pure covariance `v_p` across the bond between
/// modes `0..cut` and `cut..M`.
pub fn entanglement_spectrum(v_p: &DMatrix<f64>, cut: usize) -> Result<EntanglementSpectrum> {
    let m = v_p.nrows() / 2;
    if cut == 0 || cut >= m {
        return Err(GbsError::InvalidArgument(format!(
            "cut {cut} is not an interior bond of {m} modes"
        )));
    }
    check_pure_cov(v_p)?;
    let state = GaussianState::new(v_p.clone(), DVector::zeros(2 * m))?;
    let left: Vec<usize> = (0..cut).collect();
    let reduced = state.reduced(&left)?;
    let wf = williamson(reduced.cov())?;
    let mut lambda: Vec<f64> = wf
        .eigenvalues
        .iter()
        .map(|nu| ((nu - 1.0) / (nu + 1.0)).max(0.0))
        .filter(|&l| l > 1e-12)
        .collect();
    lambda.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(EntanglementSpectrum { cut, lambda })
}

/// Truncation error of keeping `chi` Schmidt values, per interior bond and
/// in two aggregates: the worst cut and the combined `1 − ∏(1 − ε_cut)`.
/// Both aggregates are reported because a single scalar does not determine
/// the aggregation rule.
#[derive(Debug, Clone)]
pub struct TruncationError {
    /// `ε_cut(χ)` for bonds `1..M`.
    pub per_cut: Vec<f64>,
    pub max_cut: f64,
    pub combined: f64,
}

/// Analytic truncation error of the pure covariance at bond dimension `chi`.
pub fn truncation_error(v_p: &DMatrix<f64>, chi: usize) -> Result<TruncationError> {
    if chi == 0 {
        return Err(GbsError::InvalidArgument(
            "bond dimension must be at least 1".to_string(),
        ));
    }
    let m = v_p.nrows() / 2;
    let mut per_cut = Vec::new();
    for cut in 1..m {
        let spectrum = entanglement_spectrum(v_p, cut)?;
        per_cut.push((1.0 - spectrum.retained_weight(chi)).clamp(0.0, 1.0));
    }
    let max_cut = per_cut.iter().cloned().fold(0.0, f64::max);
    let combined = 1.0 - per_cut.iter().map(|e| 1.0 - e).product::<f64>();
    Ok(TruncationError {
        per_cut,
        max_cut,
        combined,
    })
}

/// Matrix product state over `M` modes with a uniform local Fock cutoff.
#[derive(Debug, Clone)]
pub struct MPSState {
    pub num_modes: usize,
    pub local_dim: usize,
    /// `tensors[k][n]` is the `χ_k × χ_{k+1}` matrix for occupation `n` at
    /// site `k`; boundary bonds have dimension 1.
    pub tensors: Vec<Vec<DMatrix<C64>>>,
    /// Retained weight fraction at each interior bond, in build order.
    pub retained: Vec<f64>,
    /// `1 − ∏ retained` — discarded weight relative to the in-box state.
    pub truncation_error: f64,
}

impl MPSState {
    /// Bond dimensions, length `M + 1` with 1 at both ends.
    pub fn bond_dims(&self) -> Vec<usize> {
        let mut dims = vec![1];
        for site in &self.tensors {
            dims.push(site[0].ncols());
        }
        dims
    }

    /// Dense statevector reconstruction (test-scale only), same index
    /// convention as [`pure_statevector`].
    pub fn contract(&self) -> Result<Vec<C64>> {
        let (m, d) = (self.num_modes, self.local_dim);
        let dim = (d as u128).checked_pow(m as u32).filter(|&x| x <= 1 << 26).ok_or_else(
            || GbsError::ScaleLimit(format!("contraction of {d}^{m} amplitudes is too large")),
        )?;
        let mut psi = Vec::with_capacity(dim as usize);
        let mut occ = vec![0usize; m];
        for idx in 0..dim as usize {
            let mut rem = idx;
            for k in (0..m).rev() {
                occ[k] = rem % d;
                rem /= d;
            }
            let mut v = DMatrix::<C64>::identity(1, 1);
            for k in 0..m {
                v *= &self.tensors[k][occ[k]];
            }
            psi.push(v[(0, 0)]);
        }
        Ok(psi)
    }
}

/// Sequential left-to-right singular-value factorization of a dense
/// statevector into an MPS, truncating each bond to `chi_max` (and dropping
/// numerically zero singular values). The recorded truncation error is the
/// discarded squared weight relative to the input vector.
pub fn mps_from_statevector(
    psi: &[C64],
    num_modes: usize,
    local_dim: usize,
    chi_max: usize,
) -> Result<MPSState> {
    let (m, d) = (num_modes, local_dim);
    if chi_max == 0 {
        return Err(GbsError::InvalidArgument(
            "bond dimension must be at least 1".to_string(),
        ));
    }
    let expected = (d as u128).pow(m as u32);
    if psi.len() as u128 != expected {
        return Err(GbsError::Dimension(format!(
            "statevector has {} amplitudes, expected {d}^{m}",
            psi.len()
        )));
    }
    let mut tensors = Vec::with_capacity(m);
    let mut retained = Vec::new();
    let mut current = DMatrix::from_row_slice(1, psi.len(), psi);
    for _ in 0..m.saturating_sub(1) {
        let chi_l = current.nrows();
        let cols = current.ncols() / d;
        let mut mat = DMatrix::zeros(chi_l * d, cols);
        for a in 0..chi_l {
            for n in 0..d {
                for c in 0..cols {
                    mat[(a * d + n, c)] = current[(a, n * cols + c)];
                }
            }
        }
        let svd = mat.svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let s = svd.singular_values;
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap());
        let total: f64 = s.iter().map(|x| x * x).sum();
        let floor = total.sqrt() * 1e-14;
        let mut keep = Vec::new();
        let mut kept_weight = 0.0;
        for &i in &order {
            if keep.len() >= chi_max || (!keep.is_empty() && s[i] <= floor) {
                break;
            }
            keep.push(i);
            kept_weight += s[i] * s[i];
        }
        retained.push(if total > 0.0 { kept_weight / total } else { 1.0 });
        let chi_r = keep.len();
        let mut site = vec![DMatrix::<C64>::zeros(chi_l, chi_r); d];
        for (b, &i) in keep.iter().enumerate() {
            for a in 0..chi_l {
                for n in 0..d {
                    site[n][(a, b)] = u[(a * d + n, i)];
                }
            }
        }
        tensors.push(site);
        let mut carry = DMatrix::<C64>::zeros(chi_r, cols);
        for (b, &i) in keep.iter().enumerate() {
            for c in 0..cols {
                carry[(b, c)] = vt[(i, c)] * C64::new(s[i], 0.0);
            }
        }
        current = carry;
    }
    let chi_l = current.nrows();
    let mut site = vec![DMatrix::<C64>::zeros(chi_l, 1); d];
    for a in 0..chi_l {
        for n in 0..d {
            site[n][(a, 0)] = current[(a, n)];
        }
    }
    tensors.push(site);
    let truncation_error = 1.0 - retained.iter().product::<f64>();
    Ok(MPSState {
        num_modes: m,
        local_dim: d,
        tensors,
        retained,
        truncation_error: truncation_error.clamp(0.0, 1.0),
    })
}

/// Builds the Fock-basis MPS of a pure covariance at local cutoff `d` and
/// bond cap `chi_max`, via the dense statevector (desk scale only; the memory
/// guard is the point where this construction stops being possible).
pub fn build_mps(v_p: &DMatrix<f64>, d: usize, chi_max: usize) -> Result<MPSState> {
    let m = v_p.nrows() / 2;
    let state = GaussianState::new(v_p.clone(), DVector::zeros(2 * m))?;
    let psi = pure_statevector(&state, d)?;
    mps_from_statevector(&psi, m, d, chi_max)
}

/// Truncated matrix elements `⟨m|D(α)|n⟩` of the displacement operator, via
/// the stable recurrence `√m·D_{m,n} = α·D_{m−1,n} + √n·D_{m−1,n−1}` seeded
/// from the coherent-state column `D_{m,0} = e^{−|α|²/2} α^m/√m!`.
pub fn displacement_matrix(alpha: C64, d: usize) -> DMatrix<C64> {
    let mut mat = DMatrix::<C64>::zeros(d, d);
    let pref = (-0.5 * alpha.norm_sqr()).exp();
    mat[(0, 0)] = C64::new(pref, 0.0);
    for n in 1..d {
        mat[(0, n)] = mat[(0, n - 1)] * (-alpha.conj()) / C64::new((n as f64).sqrt(), 0.0);
    }
    for m in 1..d {
        let inv = 1.0 / (m as f64).sqrt();
        for n in 0..d {
            let mut x = alpha * mat[(m - 1, n)];
            if n > 0 {
                x += C64::new((n as f64).sqrt(), 0.0) * mat[(m - 1, n - 1)];
            }
            mat[(m, n)] = x * C64::new(inv, 0.0);
        }
    }
    mat
}

/// A sampled batch plus diagnostics from the displaced-MPS path.
#[derive(Debug, Clone)]
pub struct MpsRun {
    pub batch: SampleBatch,
    /// Number of (sample, mode) events whose displacement pushed the mean
    /// photon number above `d/3`, where the local cutoff becomes unreliable.
    pub cutoff_warnings: u64,
}

/// Samples click patterns from the full lossy model: per sample, a random
/// quadrature displacement is drawn from the zero-mean Gaussian with
/// covariance `W`, folded into the site tensors as truncated single-mode
/// displacement operators, and photon numbers are then chain-rule sampled
/// site by site against right environments.
pub fn mps_sample(mps: &MPSState, w: &DMatrix<f64>, n: usize, seed: u64) -> Result<MpsRun> {
    let (m, d) = (mps.num_modes, mps.local_dim);
    if w.nrows() != 2 * m || w.ncols() != 2 * m {
        return Err(GbsError::Dimension(format!(
            "classical covariance is {}x{}, expected {}x{}",
            w.nrows(),
            w.ncols(),
            2 * m,
            2 * m
        )));
    }
    let eig = nalgebra::SymmetricEigen::new(symmetrize(w.clone()));
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 * w.amax().max(1.0) {
        return Err(GbsError::Unphysical(format!(
            "classical part is not PSD (eigenvalue {min:.3e})"
        )));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    let factor = &eig.eigenvectors * sqrt;

    let mut digest = Sha256::new();
    digest.update(b"mps");
    digest.update((m as u64).to_le_bytes());
    digest.update((d as u64).to_le_bytes());
    digest.update(mps.truncation_error.to_bits().to_le_bytes());
    for v in w.iter() {
        digest.update(v.to_bits().to_le_bytes());
    }
    let digest = hex::encode(&digest.finalize()[..8]);

    let mut cutoff_warnings = 0u64;
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "mps-sampler", idx);
        let z = DVector::from_fn(2 * m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let delta = &factor * z;
        // Displace each site: B_k[n'] = Σ_n D^{(k)}_{n',n} A_k[n].
        let mut displaced: Vec<Vec<DMatrix<C64>>> = Vec::with_capacity(m);
        for k in 0..m {
            let alpha = C64::new(delta[k] / 2.0, delta[m + k] / 2.0);
            if alpha.norm_sqr() > d as f64 / 3.0 {
                cutoff_warnings += 1;
            }
            let dmat = displacement_matrix(alpha, d);
            let site: Vec<DMatrix<C64>> = (0..d)
                .map(|np| {
                    let mut acc = DMatrix::<C64>::zeros(
                        mps.tensors[k][0].nrows(),
                        mps.tensors[k][0].ncols(),
                    );
                    for nn in 0..d {
                        let c = dmat[(np, nn)];
                        if c.norm_sqr() > 0.0 {
                            acc += &mps.tensors[k][nn] * c;
                        }
                    }
                    acc
                })
                .collect();
            displaced.push(site);
        }
        // Right environments E_k = Σ_n B_k[n]·E_{k+1}·B_k[n]†.
        let mut envs: Vec<DMatrix<C64>> = vec![DMatrix::identity(1, 1); m + 1];
        for k in (0..m).rev() {
            let chi = displaced[k][0].nrows();
            let mut e = DMatrix::<C64>::zeros(chi, chi);
            for site in &displaced[k] {
                e += site * &envs[k + 1] * site.adjoint();
            }
            envs[k] = e;
        }
        // Chain-rule site sampling against the environments.
        let mut v = DMatrix::<C64>::identity(1, 1);
        let mut pattern = vec![false; m];
        for k in 0..m {
            let branches: Vec<DMatrix<C64>> = displaced[k].iter().map(|b| &v * b).collect();
            let probs: Vec<f64> = branches
                .iter()
                .map(|u| {
                    let p = (u * &envs[k + 1] * u.adjoint())[(0, 0)].re;
                    p.max(0.0)
                })
                .collect();
            let total: f64 = probs.iter().sum();
            let pick = if total <= 0.0 {
                0
            } else {
                let u = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = d - 1;
                for (i, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        pick = i;
                        break;
                    }
                }
                pick
            };
            pattern[k] = pick > 0;
            v = branches[pick].clone();
            let norm = v.norm();
            if norm > 0.0 {
                v.unscale_mut(norm);
            }
        }
        patterns.push(pattern);
    }
    let batch = SampleBatch::new("mps", seed, m, digest, patterns)?;
    Ok(MpsRun {
        batch,
        cutoff_warnings,
    })
}

/// Displaced-thermal baseline that drops the quantum part entirely — the
/// χ = 0 limit of the pipeline: clicks come from the classical covariance
/// `W` alone.
pub fn chi_zero_baseline_sampler(w: &DMatrix<f64>, n: usize, seed: u64) -> Result<SampleBatch> {
    let dim = w.nrows();
    let state = GaussianState::new(
        symmetrize(w.clone()) + DMatrix::identity(dim, dim),
        DVector::zeros(dim),
    )?;
    let mut batch = classical_gaussian_sampler(&state, n, seed)?;
    batch.sampler_id = "chi0".to_string();
    Ok(batch)
}

/// Rescales the circuit transmission by `scale` while raising every squeezing
/// parameter so each input's transmitted mean photon number is unchanged:
/// `T' = √scale·T`, `r' = asinh(sinh r / √scale)`.
pub fn adapt_transmission(
    bank: &SqueezerBank,
    t: &DMatrix<C64>,
    scale: f64,
) -> Result<(SqueezerBank, DMatrix<C64>)> {
    if !(scale > 0.0 && scale <= 1.0) {
        return Err(GbsError::InvalidArgument(format!(
            "transmission scale {scale} outside (0, 1]"
        )));
    }
    let root = scale.sqrt();
    let r: Vec<f64> = bank.r.iter().map(|&r| (r.sinh() / root).asinh()).collect();
    let bank = SqueezerBank::new(r, bank.phi.clone())?;
    let t = t.map(|z| z * root);
    Ok((bank, t))
}

/// Smallest possible `‖V_p − I‖` (spectral norm) over *all* splits
/// `V = V_p + W` with `W` positive semidefinite — a decomposition-independent
/// measure of how far the state is from a classical mixture of coherent
/// states. Equals `max(0, 1 − λ_min(V))`: a state is classical exactly when
/// `V ⪰ I`, and along the eigenvector of `λ_min(V)` any admissible `V_p`
/// must dip at least that far below vacuum.
///
/// Note the Williamson clamp of [`decompose`] does *not* minimise this
/// quantity: a classical but non-thermal covariance `I + C` (rank-deficient
/// `C ⪰ 0`) keeps a squeezed quantum part under the clamp even though its
/// gap is zero. Use this function, not `‖decompose(V).v_p − I‖`, to test
/// convergence to the classical (squashed-like) regime.
pub fn classicality_gap(v: &DMatrix<f64>) -> Result<f64> {
    if v.nrows() != v.ncols() || v.nrows() % 2 != 0 {
        return Err(GbsError::Dimension(format!(
            "covariance is {}×{}, expected even square",
            v.nrows(),
            v.ncols()
        )));
    }
    let sym = symmetrize(v.clone());
    let lam_min = crate::linalg::sym_eigenvalues(&sym)?[0];
    Ok((1.0 - lam_min).max(0.0))
}

/// Heuristic local cutoff: smallest `d` whose per-mode geometric tail bound
/// `λ^d/(1−λ)` drops below 1e-4, with `λ = (μ−1)/(μ+1)` from the largest
/// per-mode quadrature variance `μ`. Every consumer accepts an explicit
/// override.
pub fn default_cutoff(v_p: &DMatrix<f64>) -> usize {
    let m = v_p.nrows() / 2;
    let mut d = 2usize;
    for k in 0..m {
        let (a, b, c) = (v_p[(k, k)], v_p[(m + k, m + k)], v_p[(k, m + k)]);
        let mu = 0.5 * (a + b) + (0.25 * (a - b) * (a - b) + c * c).sqrt();
        if mu <= 1.0 + 1e-12 {
            continue;
        }
        let lam = ((mu - 1.0) / (mu + 1.0)).min(1.0 - 1e-12);
        let needed = ((1e-4 * (1.0 - lam)).ln() / lam.ln()).ceil() as usize;
        d = d.max(needed.clamp(2, 30));
    }
    d
}

const MPS_MAGIC: &[u8; 8] = b"GBSMPS1\0";

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

/// Writes an MPS checkpoint. Byte layout, all integers and floats
/// little-endian 8-byte values:
///
/// 1. magic `"GBSMPS1\0"`;
/// 2. `M` (site count), `d` (local dimension);
/// 3. `M + 1` bond dimensions;
/// 4. the recorded truncation error, then `M − 1` retained-weight fractions;
/// 5. per site `k`, per occupation `n = 0..d`, the `χ_k × χ_{k+1}` matrix in
///    row-major order as `(re, im)` pairs.
pub fn write_mps_checkpoint<W: Write>(mps: &MPSState, w: &mut W) -> Result<()> {
    w.write_all(MPS_MAGIC)?;
    write_u64(w, mps.num_modes as u64)?;
    write_u64(w, mps.local_dim as u64)?;
    for dim in mps.bond_dims() {
        write_u64(w, dim as u64)?;
    }
    write_f64(w, mps.truncation_error)?;
    for &f in &mps.retained {
        write_f64(w, f)?;
    }
    for site in &mps.tensors {
        for mat in site {
            for i in 0..mat.nrows() {
                for j in 0..mat.ncols() {
                    write_f64(w, mat[(i, j)].re)?;
                    write_f64(w, mat[(i, j)].im)?;
                }
            }
        }
    }
    Ok(())
}

/// Reads a checkpoint written by [`write_mps_checkpoint`].
pub fn read_mps_checkpoint<R: Read>(r: &mut R) -> Result<MPSState> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MPS_MAGIC {
        return Err(GbsError::Format("not an MPS checkpoint".to_string()));
    }
    let m = read_u64(r)? as usize;
    let d = read_u64(r)? as usize;
    if m == 0 || m > 64 || d == 0 || d > 1024 {
        return Err(GbsError::Format(format!(
            "implausible checkpoint header: {m} sites, local dimension {d}"
        )));
    }
    let mut dims = Vec::with_capacity(m + 1);
    for _ in 0..=m {
        let dim = read_u64(r)? as usize;
        if dim == 0 || dim > 1 << 20 {
            return Err(GbsError::Format(format!("implausible bond dimension {dim}")));
        }
        dims.push(dim);
    }
    if dims[0] != 1 || dims[m] != 1 {
        return Err(GbsError::Format("boundary bonds must have dimension 1".to_string()));
    }
    let truncation_error = read_f64(r)?;
    let mut retained = Vec::with_capacity(m.saturating_sub(1));
    for _ in 0..m.saturating_sub(1) {
        retained.push(read_f64(r)?);
    }
    let mut tensors = Vec::with_capacity(m);
    for k in 0..m {
        let (chi_l, chi_r) = (dims[k], dims[k + 1]);
        let mut site = Vec::with_capacity(d);
        for _ in 0..d {
            let mut mat = DMatrix::<C64>::zeros(chi_l, chi_r);
            for i in 0..chi_l {
                for j in 0..chi_r {
                    let re = read_f64(r)?;
                    let im = read_f64(r)?;
                    mat[(i, j)] = C64::new(re, im);
                }
            }
            site.push(mat);
        }
        tensors.push(site);
    }
    Ok(MPSState {
        num_modes: m,
        local_dim: d,
        tensors,
        retained,
        truncation_error,
    })
}
