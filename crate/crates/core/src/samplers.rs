//! Click-pattern samplers: the exact chain-rule sampler, a brute-force
//! distribution oracle, and the classical mockup family (squashed, thermal,
//! distinguishable photons, independent pairs and singles, greedy marginal
//! matching).
//!
//! All samplers draw every sample from its own counter-based random stream
//! (see [`crate::rng::sample_rng`]), so a batch is a pure function of
//! `(inputs, seed, count)` regardless of thread schedule or chunking.

use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::{Complex, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use sha2::{Digest, Sha256};

use crate::error::{GbsError, Result};
use crate::gaussian::{
    apply_transfer, husimi_q, squeezed_vacuum, ClickKernel, GaussianState, SqueezerBank,
};
use crate::rng::sample_rng;

type C64 = Complex<f64>;

/// Largest mode count accepted by the chain-rule exact sampler; the
/// conditional-probability sums cost `O(2^clicks)` per mode.
pub const MAX_EXACT_SAMPLER_MODES: usize = 25;

/// Largest mode count for full `2^M` pattern enumeration.
pub const MAX_BRUTE_FORCE_MODES: usize = 14;

/// An ordered batch of detector click patterns with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub sampler_id: String,
    pub seed: u64,
    pub num_modes: usize,
    /// Content hash of the generating configuration; samplers fill in a hash
    /// of their direct inputs, orchestration layers may overwrite it with the
    /// experiment-config digest before persisting.
    pub config_digest: String,
    pub patterns: Vec<Vec<bool>>,
}

impl SampleBatch {
    pub fn new(
        sampler_id: impl Into<String>,
        seed: u64,
        num_modes: usize,
        config_digest: impl Into<String>,
        patterns: Vec<Vec<bool>>,
    ) -> Result<Self> {
        if let Some(bad) = patterns.iter().position(|p| p.len() != num_modes) {
            return Err(GbsError::Dimension(format!(
                "pattern {bad} has length {} but the batch is over {num_modes} modes",
                patterns[bad].len()
            )));
        }
        Ok(Self {
            sampler_id: sampler_id.into(),
            seed,
            num_modes,
            config_digest: config_digest.into(),
            patterns,
        })
    }

    pub fn count(&self) -> usize {
        self.patterns.len()
    }

    /// Fraction of samples in which `mode` clicked.
    pub fn click_frequency(&self, mode: usize) -> f64 {
        if self.patterns.is_empty() {
            return 0.0;
        }
        let hits = self.patterns.iter().filter(|p| p[mode]).count();
        hits as f64 / self.patterns.len() as f64
    }

    /// Fraction of samples in which both modes clicked.
    pub fn joint_click_frequency(&self, a: usize, b: usize) -> f64 {
        if self.patterns.is_empty() {
            return 0.0;
        }
        let hits = self.patterns.iter().filter(|p| p[a] && p[b]).count();
        hits as f64 / self.patterns.len() as f64
    }
}

/// The classical mockup samplers under test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MockupKind {
    Squashed,
    Thermal,
    Distinguishable,
    Ips,
    Greedy,
}

impl MockupKind {
    pub const ALL: [MockupKind; 5] = [
        MockupKind::Squashed,
        MockupKind::Thermal,
        MockupKind::Distinguishable,
        MockupKind::Ips,
        MockupKind::Greedy,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            MockupKind::Squashed => "squashed",
            MockupKind::Thermal => "thermal",
            MockupKind::Distinguishable => "distinguishable",
            MockupKind::Ips => "ips",
            MockupKind::Greedy => "greedy",
        }
    }
}

impl std::fmt::Display for MockupKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for MockupKind {
    type Err = GbsError;

    fn from_str(s: &str) -> Result<Self> {
        MockupKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| GbsError::InvalidArgument(format!("unknown mockup sampler '{s}'")))
    }
}

fn digest_state(state: &GaussianState, label: &str) -> String {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    h.update((state.num_modes() as u64).to_le_bytes());
    for v in state.cov().iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    for v in state.mean().iter() {
        h.update(v.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

fn digest_circuit(bank: &SqueezerBank, t: &DMatrix<C64>, label: &str) -> String {
    let mut h = Sha256::new();
    h.update(label.as_bytes());
    for (&r, &phi) in bank.r.iter().zip(&bank.phi) {
        h.update(r.to_bits().to_le_bytes());
        h.update(phi.to_bits().to_le_bytes());
    }
    h.update((t.nrows() as u64).to_le_bytes());
    for z in t.iter() {
        h.update(z.re.to_bits().to_le_bytes());
        h.update(z.im.to_bits().to_le_bytes());
    }
    hex::encode(&h.finalize()[..8])
}

/// Exact i.i.d. sampling via the chain rule over modes: for each mode the
/// conditional no-click probability given the already-decided prefix is a
/// ratio of marginal pattern probabilities, both reduced to inclusion–
/// exclusion sums over the cached subset determinants of [`ClickKernel`].
pub fn exact_sampler(state: &GaussianState, n: usize, seed: u64) -> Result<SampleBatch> {
    let m = state.num_modes();
    if m > MAX_EXACT_SAMPLER_MODES {
        return Err(GbsError::ScaleLimit(format!(
            "exact sampler limited to {MAX_EXACT_SAMPLER_MODES} modes, got {m}"
        )));
    }
    let kernel = ClickKernel::new(state)?;
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "exact-sampler", idx);
        let mut pattern = vec![false; m];
        let mut click_mask = 0u64;
        let mut silent_mask = 0u64;
        let mut p_prefix = 1.0;
        for i in 0..m {
            // P(prefix ∧ mode i silent), marginal over all undecided modes.
            let p_silent = kernel.marginal_probability(click_mask, silent_mask | 1 << i)?;
            let p_click = ((p_prefix - p_silent) / p_prefix).clamp(0.0, 1.0);
            if rng.gen::<f64>() < p_click {
                pattern[i] = true;
                click_mask |= 1 << i;
                p_prefix = (p_prefix - p_silent).max(f64::MIN_POSITIVE);
            } else {
                silent_mask |= 1 << i;
                p_prefix = p_silent.max(f64::MIN_POSITIVE);
            }
        }
        patterns.push(pattern);
    }
    SampleBatch::new("exact", seed, m, digest_state(state, "exact"), patterns)
}

/// Exact probability of every click pattern, indexed by the bitmask with bit
/// `k` set when mode `k` clicks. Probabilities sum to 1 within numerical
/// error.
pub fn brute_force_distribution(state: &GaussianState) -> Result<Vec<f64>> {
    let m = state.num_modes();
    if m > MAX_BRUTE_FORCE_MODES {
        return Err(GbsError::ScaleLimit(format!(
            "brute-force enumeration limited to {MAX_BRUTE_FORCE_MODES} modes, got {m}"
        )));
    }
    let kernel = ClickKernel::new(state)?;
    let full = (1u64 << m) - 1;
    (0..=full)
        .map(|bits| kernel.marginal_probability(bits, !bits & full))
        .collect()
}

/// The squashed classical surrogate: at each source the squeezed quadrature
/// is clamped to the vacuum variance while the anti-squeezed quadrature keeps
/// its `e^{2r}` variance, then the result is evolved through the transfer
/// matrix. The input is P-representable by construction (`V ⪰ I`).
pub fn squashed_state_of(bank: &SqueezerBank, t: &DMatrix<C64>) -> Result<GaussianState> {
    let m = bank.len();
    let mut cov = DMatrix::identity(2 * m, 2 * m);
    for k in 0..m {
        let (r, phi) = (bank.r[k], bank.phi[k]);
        let (c, s) = (phi.cos(), phi.sin());
        let (dm, dp) = (1.0, (2.0 * r).exp());
        cov[(k, k)] = c * c * dm + s * s * dp;
        cov[(m + k, m + k)] = s * s * dm + c * c * dp;
        cov[(k, m + k)] = c * s * (dm - dp);
        cov[(m + k, k)] = cov[(k, m + k)];
    }
    let input = GaussianState::new(cov, DVector::zeros(2 * m))?;
    apply_transfer(&input, t)
}

/// The thermal surrogate: each source replaced by a thermal state with the
/// same mean photon number `sinh²r`, evolved through the transfer matrix.
pub fn thermal_state_of(bank: &SqueezerBank, t: &DMatrix<C64>) -> Result<GaussianState> {
    let m = bank.len();
    let mut cov = DMatrix::identity(2 * m, 2 * m);
    for k in 0..m {
        let nbar = bank.r[k].sinh().powi(2);
        cov[(k, k)] = 2.0 * nbar + 1.0;
        cov[(m + k, m + k)] = 2.0 * nbar + 1.0;
    }
    let input = GaussianState::new(cov, DVector::zeros(2 * m))?;
    apply_transfer(&input, t)
}

/// Samples any classical (`V ⪰ I`) Gaussian state: draw the quadrature means
/// of a random coherent state from the Gaussian with covariance `V − I`, then
/// click each mode independently with probability `1 − e^{−|α_i|²}`,
/// `α_i = (m_{x,i} + i·m_{p,i})/2`. Scales to any mode count.
pub fn classical_gaussian_sampler(
    state: &GaussianState,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    classical_sampler_with_id(state, n, seed, "classical")
}

fn classical_sampler_with_id(
    state: &GaussianState,
    n: usize,
    seed: u64,
    id: &str,
) -> Result<SampleBatch> {
    let m = state.num_modes();
    let dim = 2 * m;
    let c = state.cov() - DMatrix::<f64>::identity(dim, dim);
    let eig = nalgebra::SymmetricEigen::new(c);
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-9 {
        return Err(GbsError::Unphysical(format!(
            "state is not classical: min eigenvalue of V − I is {min:.3e}"
        )));
    }
    let sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| e.max(0.0).sqrt()));
    let factor = &eig.eigenvectors * sqrt;
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "classical-sampler", idx);
        let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = &factor * z + state.mean();
        let mut pattern = vec![false; m];
        for (i, slot) in pattern.iter_mut().enumerate() {
            let alpha_sq = (mean[i] * mean[i] + mean[m + i] * mean[m + i]) / 4.0;
            *slot = rng.gen::<f64>() < 1.0 - (-alpha_sq).exp();
        }
        patterns.push(pattern);
    }
    SampleBatch::new(id, seed, m, digest_state(state, id), patterns)
}

/// Mockup of fully distinguishable sources: each source's photon number is
/// drawn from the lossless squeezed-vacuum distribution, then every photon is
/// routed independently to output `j` with probability `|T_{jk}|²` (lost with
/// the remaining probability); a mode clicks when it receives any photon.
/// Cross-source interference is absent by construction.
pub fn distinguishable_sampler(
    bank: &SqueezerBank,
    t: &DMatrix<C64>,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    if bank.len() > t.ncols() {
        return Err(GbsError::Dimension(format!(
            "{} sources but the transfer matrix has {} input columns",
            bank.len(),
            t.ncols()
        )));
    }
    let m_out = t.nrows();
    struct Source {
        /// CDF over photon-pair count (photon number = 2·index).
        pair_cdf: Vec<f64>,
        /// CDF over output destinations; remaining mass is loss.
        route_cdf: Vec<f64>,
    }
    let mut sources = Vec::new();
    for k in 0..bank.len() {
        let r = bank.r[k];
        if r == 0.0 {
            continue;
        }
        // P(2m) = (2m)!/(4^m m!²) · tanh^{2m}r / cosh r, built by the term
        // ratio (2m+1)/(2m+2) · tanh²r.
        let tanh_sq = r.tanh().powi(2);
        let mut p = 1.0 / r.cosh();
        let mut cum = p;
        let mut pair_cdf = vec![cum];
        let mut pairs = 0usize;
        while 1.0 - cum > 1e-12 && pairs < 500 {
            p *= tanh_sq * (2 * pairs + 1) as f64 / (2 * pairs + 2) as f64;
            cum += p;
            pair_cdf.push(cum);
            pairs += 1;
        }
        let mut acc = 0.0;
        let route_cdf = (0..m_out)
            .map(|j| {
                acc += t[(j, k)].norm_sqr();
                acc
            })
            .collect();
        sources.push(Source {
            pair_cdf,
            route_cdf,
        });
    }
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "distinguishable-sampler", idx);
        let mut occupancy = vec![0u32; m_out];
        for src in &sources {
            let u = rng.gen::<f64>();
            let pairs = src.pair_cdf.partition_point(|&c| c < u);
            for _ in 0..2 * pairs {
                let u = rng.gen::<f64>();
                let dest = src.route_cdf.partition_point(|&c| c < u);
                if dest < m_out {
                    occupancy[dest] += 1;
                }
            }
        }
        patterns.push(occupancy.iter().map(|&o| o > 0).collect());
    }
    SampleBatch::new(
        "distinguishable",
        seed,
        m_out,
        digest_circuit(bank, t, "distinguishable"),
        patterns,
    )
}

/// Mockup of limited quantum interference: independent Poisson photon-pair
/// events with rates `|m_ij|²` taken from the phase-sensitive block
/// `m_ij = ⟨a_i a_j⟩` (self-pairs at half rate, contributing two photons),
/// plus independent singles making up the remaining per-mode mean photon
/// number `⟨a†_i a_i⟩` where that remainder is non-negative. First-order
/// photon marginals match the target exactly when no clamping occurs; higher
/// orders factorize. This rate choice is an approximation of the published
/// design, which names the sampler without formulas.
pub fn ips_sampler(state: &GaussianState, n: usize, seed: u64) -> Result<SampleBatch> {
    if !state.is_zero_mean() {
        return Err(GbsError::InvalidArgument(
            "independent-pairs-and-singles sampling requires a zero-mean state".to_string(),
        ));
    }
    let m = state.num_modes();
    let q = husimi_q(state);
    let mut pair_events: Vec<(usize, usize, f64)> = Vec::new();
    let mut pair_load = vec![0.0; m];
    for i in 0..m {
        for j in i..m {
            let amp = q[(i, m + j)].norm_sqr();
            let rate = if i == j { amp / 2.0 } else { amp };
            if rate > 1e-15 {
                if i == j {
                    pair_load[i] += 2.0 * rate;
                } else {
                    pair_load[i] += rate;
                    pair_load[j] += rate;
                }
                pair_events.push((i, j, rate));
            }
        }
    }
    let mut single_events: Vec<(usize, f64)> = Vec::new();
    for i in 0..m {
        let nbar = q[(m + i, m + i)].re - 1.0;
        let rate = (nbar - pair_load[i]).max(0.0);
        if rate > 1e-15 {
            single_events.push((i, rate));
        }
    }
    let pair_dists: Vec<(usize, usize, Poisson<f64>)> = pair_events
        .iter()
        .map(|&(i, j, r)| {
            Poisson::new(r)
                .map(|d| (i, j, d))
                .map_err(|e| GbsError::Numerical(format!("bad pair rate {r}: {e}")))
        })
        .collect::<Result<_>>()?;
    let single_dists: Vec<(usize, Poisson<f64>)> = single_events
        .iter()
        .map(|&(i, r)| {
            Poisson::new(r)
                .map(|d| (i, d))
                .map_err(|e| GbsError::Numerical(format!("bad single rate {r}: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "ips-sampler", idx);
        let mut occupancy = vec![0u32; m];
        for (i, j, dist) in &pair_dists {
            let events = dist.sample(&mut rng) as u32;
            occupancy[*i] += events;
            occupancy[*j] += events;
        }
        for (i, dist) in &single_dists {
            occupancy[*i] += dist.sample(&mut rng) as u32;
        }
        patterns.push(occupancy.iter().map(|&o| o > 0).collect());
    }
    SampleBatch::new("ips", seed, m, digest_state(state, "ips"), patterns)
}

/// Target click marginals for the greedy sampler: `first[i] = P(click_i)`,
/// `second[(i,j)] = P(click_i ∧ click_j)` for `i ≠ j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyTargets {
    pub first: Vec<f64>,
    pub second: DMatrix<f64>,
}

impl GreedyTargets {
    pub fn validate(&self) -> Result<()> {
        let m = self.first.len();
        if self.second.nrows() != m || self.second.ncols() != m {
            return Err(GbsError::Dimension(format!(
                "second-order table is {}x{} for {m} modes",
                self.second.nrows(),
                self.second.ncols()
            )));
        }
        let ok = |p: f64| (0.0..=1.0).contains(&p);
        if let Some(bad) = self.first.iter().find(|&&p| !ok(p)) {
            return Err(GbsError::InvalidArgument(format!(
                "infeasible first-order marginal {bad}"
            )));
        }
        if let Some(bad) = self.second.iter().find(|&&p| !ok(p)) {
            return Err(GbsError::InvalidArgument(format!(
                "infeasible second-order marginal {bad}"
            )));
        }
        Ok(())
    }
}

/// Exact low-order click marginals of a zero-mean state, the natural greedy
/// targets.
pub fn greedy_targets_of(state: &GaussianState) -> Result<GreedyTargets> {
    let m = state.num_modes();
    let kernel = ClickKernel::new(state)?;
    let mut first = Vec::with_capacity(m);
    for i in 0..m {
        first.push(kernel.marginal_probability(1 << i, 0)?);
    }
    let mut second = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let p = kernel.marginal_probability(1 << i | 1 << j, 0)?;
            second[(i, j)] = p;
            second[(j, i)] = p;
        }
    }
    Ok(GreedyTargets { first, second })
}

/// Greedy marginal-matching mockup: within each sample, modes are decided in
/// index order, choosing click or no-click to minimize the total absolute
/// discrepancy between the running batch marginals (first order over all
/// modes, second order over the pairs already decided in the current sample)
/// and the targets. Near-ties fall back to a seeded Bernoulli draw on the
/// first-order target, so the batch is still a pure function of
/// `(targets, seed, n)`.
pub fn greedy_sampler(targets: &GreedyTargets, n: usize, seed: u64) -> Result<SampleBatch> {
    targets.validate()?;
    let m = targets.first.len();
    let mut ones = vec![0u64; m];
    let mut joint = DMatrix::<u64>::zeros(m, m);
    let mut patterns = Vec::with_capacity(n);
    for idx in 0..n as u64 {
        let mut rng = sample_rng(seed, "greedy-sampler", idx);
        let denom = (idx + 1) as f64;
        let mut pattern = vec![false; m];
        for i in 0..m {
            let p1 = targets.first[i];
            let mut d_click = ((ones[i] + 1) as f64 / denom - p1).abs();
            let mut d_keep = (ones[i] as f64 / denom - p1).abs();
            for j in 0..i {
                let base = joint[(j, i)];
                let p2 = targets.second[(j, i)];
                let bump = u64::from(pattern[j]);
                d_click += ((base + bump) as f64 / denom - p2).abs();
                d_keep += (base as f64 / denom - p2).abs();
            }
            pattern[i] = if (d_click - d_keep).abs() < 1e-12 {
                rng.gen::<f64>() < p1
            } else {
                d_click < d_keep
            };
        }
        for i in 0..m {
            if pattern[i] {
                ones[i] += 1;
                for j in i + 1..m {
                    if pattern[j] {
                        joint[(i, j)] += 1;
                    }
                }
            }
        }
        patterns.push(pattern);
    }
    let mut h = Sha256::new();
    h.update(b"greedy");
    for &p in &targets.first {
        h.update(p.to_bits().to_le_bytes());
    }
    for &p in targets.second.iter() {
        h.update(p.to_bits().to_le_bytes());
    }
    let digest = hex::encode(&h.finalize()[..8]);
    SampleBatch::new("greedy", seed, m, digest, patterns)
}

/// Runs the requested mockup against the circuit `(bank, T)`. Squashed and
/// thermal surrogates go through the classical Gaussian sampler; the greedy
/// mockup targets the exact low-order marginals of the ground truth.
pub fn mockup_sampler(
    kind: MockupKind,
    bank: &SqueezerBank,
    t: &DMatrix<C64>,
    n: usize,
    seed: u64,
) -> Result<SampleBatch> {
    match kind {
        MockupKind::Squashed => {
            let state = squashed_state_of(bank, t)?;
            classical_sampler_with_id(&state, n, seed, "squashed")
        }
        MockupKind::Thermal => {
            let state = thermal_state_of(bank, t)?;
            classical_sampler_with_id(&state, n, seed, "thermal")
        }
        MockupKind::Distinguishable => distinguishable_sampler(bank, t, n, seed),
        MockupKind::Ips => {
            let state = apply_transfer(&squeezed_vacuum(bank)?, t)?;
            ips_sampler(&state, n, seed)
        }
        MockupKind::Greedy => {
            let state = apply_transfer(&squeezed_vacuum(bank)?, t)?;
            let targets = greedy_targets_of(&state)?;
            greedy_sampler(&targets, n, seed)
        }
    }
}

const SAMPLE_FILE_MAGIC: &str = "#gbs-samples v1";

/// Writes a batch in the bit-exact line format: a header block followed by
/// one `0`/`1` string per pattern.
pub fn write_samples<W: Write>(batch: &SampleBatch, w: &mut W) -> Result<()> {
    writeln!(w, "{SAMPLE_FILE_MAGIC}")?;
    writeln!(w, "#sampler {}", batch.sampler_id)?;
    writeln!(w, "#seed {}", batch.seed)?;
    writeln!(w, "#modes {}", batch.num_modes)?;
    writeln!(w, "#count {}", batch.count())?;
    writeln!(w, "#config {}", batch.config_digest)?;
    for pattern in &batch.patterns {
        let line: String = pattern.iter().map(|&b| if b { '1' } else { '0' }).collect();
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// Reads a batch back; any structural problem is reported with its line
/// number.
pub fn read_samples<R: BufRead>(r: &mut R) -> Result<SampleBatch> {
    let mut lines = r.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(line))) => Ok((i + 1, line)),
            Some((i, Err(e))) => Err(GbsError::Format(format!("line {}: {e}", i + 1))),
            None => Err(GbsError::Format(format!("unexpected end of file, wanted {what}"))),
        }
    };
    let (ln, magic) = next("magic header")?;
    if magic != SAMPLE_FILE_MAGIC {
        return Err(GbsError::Format(format!("line {ln}: not a sample file")));
    }
    let mut field = |name: &str| -> Result<String> {
        let (ln, line) = next(name)?;
        line.strip_prefix(&format!("#{name} "))
            .map(str::to_string)
            .ok_or_else(|| GbsError::Format(format!("line {ln}: expected '#{name} ...'")))
    };
    let sampler_id = field("sampler")?;
    let seed: u64 = field("seed")?
        .parse()
        .map_err(|e| GbsError::Format(format!("bad seed: {e}")))?;
    let num_modes: usize = field("modes")?
        .parse()
        .map_err(|e| GbsError::Format(format!("bad mode count: {e}")))?;
    let count: usize = field("count")?
        .parse()
        .map_err(|e| GbsError::Format(format!("bad count: {e}")))?;
    let config_digest = field("config")?;
    let mut patterns = Vec::with_capacity(count);
    for _ in 0..count {
        let (ln, line) = next("pattern line")?;
        if line.len() != num_modes {
            return Err(GbsError::Format(format!(
                "line {ln}: pattern has {} characters, expected {num_modes}",
                line.len()
            )));
        }
        let pattern: Vec<bool> = line
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(GbsError::Format(format!("line {ln}: bad character '{other}'"))),
            })
            .collect::<Result<_>>()?;
        patterns.push(pattern);
    }
    SampleBatch::new(sampler_id, seed, num_modes, config_digest, patterns)
}
