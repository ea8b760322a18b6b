//! Statistical test battery for sampler batches: click-number distributions,
//! k-th-order click-correlation benchmarking (slope `K`, deviation `ΔK`,
//! weighted distance), and Bayesian hypothesis scoring with bootstrap error
//! bars.

use std::collections::HashSet;
use std::io::Write;

use rand::Rng;
use serde::Serialize;

use crate::error::{GbsError, Result};
use crate::gaussian::{ClickKernel, GaussianState};
use crate::rng::{sample_rng, stage_rng};
use crate::samplers::{brute_force_distribution, SampleBatch};

/// Largest subsystem accepted for exact likelihood evaluation.
pub const MAX_BAYESIAN_MODES: usize = 14;

/// Number of unordered mode tuples retained per order when the full set is
/// too large to enumerate.
pub const MAX_CORRELATION_TUPLES: usize = 10_000;

/// Mode count up to which every unordered tuple is used; above it a seeded
/// uniform subsample of [`MAX_CORRELATION_TUPLES`] tuples is drawn.
pub const FULL_TUPLE_MODE_LIMIT: usize = 20;

// ---------------------------------------------------------------------------
// Click-number distribution
// ---------------------------------------------------------------------------

/// Histogram of the total number of clicks per sample.
#[derive(Debug, Clone)]
pub struct ClickDistribution {
    /// `histogram[c]` is the fraction of samples with exactly `c` clicks;
    /// length is `num_modes + 1` and the entries sum to 1.
    pub histogram: Vec<f64>,
    pub total_samples: usize,
    /// Optional exact curve for the same statistic, aligned with `histogram`.
    pub theory: Option<Vec<f64>>,
}

impl ClickDistribution {
    /// Total-variation distance between two click-number histograms.
    pub fn tvd(&self, other: &ClickDistribution) -> Result<f64> {
        if self.histogram.len() != other.histogram.len() {
            return Err(GbsError::Dimension(format!(
                "histograms over {} and {} click counts are not comparable",
                self.histogram.len(),
                other.histogram.len()
            )));
        }
        Ok(0.5
            * self
                .histogram
                .iter()
                .zip(&other.histogram)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

/// Empirical distribution of total clicks per sample.
pub fn click_number_distribution(batch: &SampleBatch) -> Result<ClickDistribution> {
    if batch.patterns.is_empty() {
        return Err(GbsError::InvalidArgument(
            "cannot build a click-number distribution from an empty batch".to_string(),
        ));
    }
    let mut histogram = vec![0.0; batch.num_modes + 1];
    for p in &batch.patterns {
        histogram[p.iter().filter(|&&b| b).count()] += 1.0;
    }
    let n = batch.patterns.len() as f64;
    for h in &mut histogram {
        *h /= n;
    }
    Ok(ClickDistribution {
        histogram,
        total_samples: batch.patterns.len(),
        theory: None,
    })
}

/// Exact click-number curve of a zero-mean state by full pattern enumeration
/// (brute-force scale only).
pub fn theoretical_click_number(state: &GaussianState) -> Result<Vec<f64>> {
    let probs = brute_force_distribution(state)?;
    let m = state.num_modes();
    let mut curve = vec![0.0; m + 1];
    for (idx, p) in probs.iter().enumerate() {
        curve[idx.count_ones() as usize] += p;
    }
    Ok(curve)
}

// ---------------------------------------------------------------------------
// Click correlations
// ---------------------------------------------------------------------------

fn check_tuple(modes: &[usize], num_modes: usize) -> Result<()> {
    if !(2..=3).contains(&modes.len()) {
        return Err(GbsError::InvalidArgument(format!(
            "correlation order {} unsupported, expected 2 or 3",
            modes.len()
        )));
    }
    let mut seen = HashSet::new();
    for &k in modes {
        if k >= num_modes {
            return Err(GbsError::InvalidArgument(format!(
                "mode index {k} out of range for {num_modes} modes"
            )));
        }
        if !seen.insert(k) {
            return Err(GbsError::InvalidArgument(format!(
                "duplicate mode index {k} in correlation tuple"
            )));
        }
    }
    Ok(())
}

fn mask_of(modes: &[usize]) -> u64 {
    modes.iter().fold(0u64, |m, &k| m | 1 << k)
}

/// `k`-th order central correlation (joint cumulant for k ≤ 3) of the click
/// indicators on `modes`, computed exactly from marginal click probabilities.
pub fn theoretical_click_correlation(state: &GaussianState, modes: &[usize]) -> Result<f64> {
    check_tuple(modes, state.num_modes())?;
    let kernel = ClickKernel::new(state)?;
    correlation_from_kernel(&kernel, modes)
}

/// Same as [`theoretical_click_correlation`] but reusing a caller-held kernel
/// so the subset-determinant cache is shared across many tuples.
pub fn correlation_from_kernel(kernel: &ClickKernel, modes: &[usize]) -> Result<f64> {
    check_tuple(modes, kernel.num_modes())?;
    // E[∏ z_S] is the marginal probability that every mode in S clicks.
    let e = |s: &[usize]| kernel.marginal_probability(mask_of(s), 0);
    match modes {
        [i, j] => Ok(e(&[*i, *j])? - e(&[*i])? * e(&[*j])?),
        [i, j, k] => {
            let (pi, pj, pk) = (e(&[*i])?, e(&[*j])?, e(&[*k])?);
            Ok(e(&[*i, *j, *k])? - pi * e(&[*j, *k])? - pj * e(&[*i, *k])? - pk * e(&[*i, *j])?
                + 2.0 * pi * pj * pk)
        }
        _ => unreachable!(),
    }
}

/// Unbiased empirical estimate of the same central correlation from a batch:
/// the k-statistic of the click indicators (`k₂`, `k₃`).
pub fn empirical_click_correlation(batch: &SampleBatch, modes: &[usize]) -> Result<f64> {
    check_tuple(modes, batch.num_modes)?;
    let n = batch.patterns.len();
    if n < modes.len() + 1 {
        return Err(GbsError::InvalidArgument(format!(
            "{n} samples are too few for an unbiased order-{} estimate",
            modes.len()
        )));
    }
    let nf = n as f64;
    let means: Vec<f64> = modes.iter().map(|&k| batch.click_frequency(k)).collect();
    let mut acc = 0.0;
    for p in &batch.patterns {
        acc += modes
            .iter()
            .zip(&means)
            .map(|(&k, &mean)| f64::from(p[k]) - mean)
            .product::<f64>();
    }
    Ok(match modes.len() {
        2 => acc / (nf - 1.0),
        3 => acc * nf / ((nf - 1.0) * (nf - 2.0)),
        _ => unreachable!(),
    })
}

// ---------------------------------------------------------------------------
// Linear fit and distances
// ---------------------------------------------------------------------------

/// Least-squares fit of empirical against theoretical correlation values.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KFit {
    /// Slope of the fit through the origin — the primary statistic.
    pub k: f64,
    /// `|K − 1|`.
    pub delta_k: f64,
    /// Slope of the ordinary fit with a free intercept, for comparison.
    pub k_affine: f64,
    pub intercept: f64,
}

/// Fits `empirical ≈ K · theory` (origin-pinned least squares) and the
/// free-intercept variant over `(theory, empirical)` points.
pub fn fit_delta_k(points: &[(f64, f64)]) -> Result<KFit> {
    let mut distinct: Vec<f64> = Vec::new();
    for &(t, e) in points {
        if !t.is_finite() || !e.is_finite() {
            return Err(GbsError::InvalidArgument(
                "non-finite correlation point".to_string(),
            ));
        }
        if !distinct.iter().any(|&d| d == t) {
            distinct.push(t);
        }
    }
    if distinct.len() < 2 {
        return Err(GbsError::InvalidArgument(format!(
            "degenerate abscissae: {} distinct theoretical value(s), need at least 2",
            distinct.len()
        )));
    }
    let n = points.len() as f64;
    let (mut st2, mut ste, mut sum_t, mut sum_e) = (0.0, 0.0, 0.0, 0.0);
    for &(t, e) in points {
        st2 += t * t;
        ste += t * e;
        sum_t += t;
        sum_e += e;
    }
    let k = ste / st2;
    let var_t = st2 - sum_t * sum_t / n;
    let k_affine = (ste - sum_t * sum_e / n) / var_t;
    let intercept = (sum_e - k_affine * sum_t) / n;
    Ok(KFit {
        k,
        delta_k: (k - 1.0).abs(),
        k_affine,
        intercept,
    })
}

/// Weighted distance `√(Σ w_i (e_i − t_i)² / Σ w_i)` with weights
/// `w_i = |t_i|`.
pub fn weighted_distance(points: &[(f64, f64)]) -> Result<f64> {
    if points.is_empty() {
        return Err(GbsError::InvalidArgument(
            "weighted distance of an empty point set".to_string(),
        ));
    }
    let total_weight: f64 = points.iter().map(|&(t, _)| t.abs()).sum();
    if total_weight == 0.0 {
        return Err(GbsError::InvalidArgument(
            "all theoretical values are zero: weighted distance undefined".to_string(),
        ));
    }
    let num: f64 = points
        .iter()
        .map(|&(t, e)| t.abs() * (e - t) * (e - t))
        .sum();
    Ok((num / total_weight).sqrt())
}

/// Normalized deviation `ΔK / ΔK₀` against the classical (quantum-part-free)
/// baseline.
pub fn normalized_delta_k(delta_k: f64, delta_k0: f64) -> Result<f64> {
    if !(delta_k0 > 0.0) {
        return Err(GbsError::InvalidArgument(format!(
            "baseline ΔK₀ = {delta_k0} must be positive"
        )));
    }
    Ok(delta_k / delta_k0)
}

// ---------------------------------------------------------------------------
// Correlation report
// ---------------------------------------------------------------------------

/// One scatter point of the correlation benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationPoint {
    pub modes: Vec<usize>,
    pub theory: f64,
    pub empirical: f64,
}

/// Correlation benchmark of one batch against one ground-truth state.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    /// Correlation order (2 or 3).
    pub order: usize,
    pub points: Vec<CorrelationPoint>,
    pub fit: KFit,
    /// Weighted distance over the same points.
    pub wd: f64,
}

/// The set of unordered `order`-tuples used for the benchmark: exhaustive up
/// to [`FULL_TUPLE_MODE_LIMIT`] modes, a seeded uniform subsample of
/// [`MAX_CORRELATION_TUPLES`] distinct tuples above that.
pub fn correlation_tuples(num_modes: usize, order: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if !(2..=3).contains(&order) {
        return Err(GbsError::InvalidArgument(format!(
            "correlation order {order} unsupported, expected 2 or 3"
        )));
    }
    if num_modes < order {
        return Err(GbsError::InvalidArgument(format!(
            "{num_modes} modes cannot form {order}-tuples"
        )));
    }
    if num_modes <= FULL_TUPLE_MODE_LIMIT {
        let mut out = Vec::new();
        for i in 0..num_modes {
            for j in i + 1..num_modes {
                if order == 2 {
                    out.push(vec![i, j]);
                } else {
                    for k in j + 1..num_modes {
                        out.push(vec![i, j, k]);
                    }
                }
            }
        }
        return Ok(out);
    }
    // Cap the subsample at the number of tuples that exist.
    let m = num_modes as u64;
    let total = if order == 2 {
        m * (m - 1) / 2
    } else {
        m * (m - 1) * (m - 2) / 6
    };
    let target = (MAX_CORRELATION_TUPLES as u64).min(total) as usize;
    let mut rng = stage_rng(seed, "correlation-subsample");
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(target);
    while out.len() < target {
        let mut tuple: Vec<usize> = (0..order).map(|_| rng.gen_range(0..num_modes)).collect();
        tuple.sort_unstable();
        tuple.dedup();
        if tuple.len() == order && seen.insert(tuple.clone()) {
            out.push(tuple);
        }
    }
    out.sort();
    Ok(out)
}

/// Benchmarks a batch against the ground-truth state at the given correlation
/// order: per-tuple theoretical and empirical values, the K fit, and the
/// weighted distance.
pub fn correlation_report(
    state: &GaussianState,
    batch: &SampleBatch,
    order: usize,
    seed: u64,
) -> Result<CorrelationReport> {
    if state.num_modes() != batch.num_modes {
        return Err(GbsError::Dimension(format!(
            "state has {} modes but the batch has {}",
            state.num_modes(),
            batch.num_modes
        )));
    }
    let kernel = ClickKernel::new(state)?;
    let tuples = correlation_tuples(state.num_modes(), order, seed)?;
    let mut points = Vec::with_capacity(tuples.len());
    for modes in tuples {
        let theory = correlation_from_kernel(&kernel, &modes)?;
        let empirical = empirical_click_correlation(batch, &modes)?;
        points.push(CorrelationPoint {
            modes,
            theory,
            empirical,
        });
    }
    let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.theory, p.empirical)).collect();
    let fit = fit_delta_k(&pairs)?;
    let wd = weighted_distance(&pairs)?;
    Ok(CorrelationReport {
        order,
        points,
        fit,
        wd,
    })
}

/// Writes a correlation report as CSV: one row per point, then one summary
/// row per metric.
pub fn write_correlation_csv<W: Write>(report: &CorrelationReport, w: &mut W) -> Result<()> {
    writeln!(w, "row,order,modes,theory,empirical")?;
    for p in &report.points {
        let modes = p
            .modes
            .iter()
            .map(|m| m.to_string())
            .collect::<Vec<_>>()
            .join("-");
        writeln!(
            w,
            "point,{},{},{:.17e},{:.17e}",
            report.order, modes, p.theory, p.empirical
        )?;
    }
    for (name, value) in [
        ("K", report.fit.k),
        ("deltaK", report.fit.delta_k),
        ("K_affine", report.fit.k_affine),
        ("intercept", report.fit.intercept),
        ("WD", report.wd),
    ] {
        writeln!(w, "metric,{},{},{:.17e},", report.order, name, value)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Bayesian scoring
// ---------------------------------------------------------------------------

/// Number of bootstrap resamples behind the reported standard deviation.
pub const BOOTSTRAP_RESAMPLES: usize = 100;

/// Bayesian model-comparison score of a batch between two hypotheses.
#[derive(Debug, Clone, Serialize)]
pub struct BayesianReport {
    /// Mean per-sample log-likelihood ratio `log P_H0 / P_H1` on the
    /// restricted patterns; positive values favor `H0`.
    pub delta_h: f64,
    /// Bootstrap standard deviation over [`BOOTSTRAP_RESAMPLES`] resamples.
    pub sigma: f64,
    pub subsystem: Vec<usize>,
}

/// Scores `batch` between ground-truth hypothesis `h0` and adversary `h1` on
/// the given subsystem, using true marginal likelihoods (states and patterns
/// both restricted before evaluation). The bootstrap resampling stream is
/// derived from the batch's own seed, so the report is deterministic.
pub fn bayesian_score(
    batch: &SampleBatch,
    h0: &GaussianState,
    h1: &GaussianState,
    subsystem: &[usize],
) -> Result<BayesianReport> {
    if batch.patterns.is_empty() {
        return Err(GbsError::InvalidArgument(
            "cannot score an empty batch".to_string(),
        ));
    }
    if subsystem.is_empty() {
        return Err(GbsError::InvalidArgument(
            "empty subsystem in Bayesian score".to_string(),
        ));
    }
    if subsystem.len() > MAX_BAYESIAN_MODES {
        return Err(GbsError::ScaleLimit(format!(
            "subsystem of {} modes exceeds the exact-likelihood limit {MAX_BAYESIAN_MODES}",
            subsystem.len()
        )));
    }
    for &k in subsystem {
        if k >= batch.num_modes {
            return Err(GbsError::InvalidArgument(format!(
                "subsystem mode {k} out of range for a {}-mode batch",
                batch.num_modes
            )));
        }
    }
    let k0 = ClickKernel::new(&h0.reduced(subsystem)?)?;
    let k1 = ClickKernel::new(&h1.reduced(subsystem)?)?;
    let r = subsystem.len();
    let mut cache: Vec<Option<f64>> = vec![None; 1 << r];
    let mut log_ratios = Vec::with_capacity(batch.patterns.len());
    for pattern in &batch.patterns {
        let idx: usize = subsystem
            .iter()
            .enumerate()
            .map(|(b, &k)| usize::from(pattern[k]) << b)
            .sum();
        let lr = match cache[idx] {
            Some(v) => v,
            None => {
                let restricted: Vec<bool> = subsystem.iter().map(|&k| pattern[k]).collect();
                let p0 = k0.pattern_probability(&restricted)?;
                let p1 = k1.pattern_probability(&restricted)?;
                for (p, name) in [(p0, "H0"), (p1, "H1")] {
                    if p <= 0.0 {
                        return Err(GbsError::Numerical(format!(
                            "restricted pattern {restricted:?} has zero probability under {name}"
                        )));
                    }
                }
                let v = p0.ln() - p1.ln();
                cache[idx] = Some(v);
                v
            }
        };
        log_ratios.push(lr);
    }
    let n = log_ratios.len();
    let delta_h = log_ratios.iter().sum::<f64>() / n as f64;
    let mut resample_means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for b in 0..BOOTSTRAP_RESAMPLES {
        let mut rng = sample_rng(batch.seed, "bayesian-bootstrap", b as u64);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += log_ratios[rng.gen_range(0..n)];
        }
        resample_means.push(acc / n as f64);
    }
    let mean_of_means = resample_means.iter().sum::<f64>() / BOOTSTRAP_RESAMPLES as f64;
    let var = resample_means
        .iter()
        .map(|m| (m - mean_of_means) * (m - mean_of_means))
        .sum::<f64>()
        / (BOOTSTRAP_RESAMPLES as f64 - 1.0);
    Ok(BayesianReport {
        delta_h,
        sigma: var.sqrt(),
        subsystem: subsystem.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Summary emission
// ---------------------------------------------------------------------------

/// Aggregated metrics of one experiment run, for the JSON summary artifact.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationSummary {
    pub experiment_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_eff: Option<f64>,
}

/// Serializes a summary as pretty-printed JSON.
pub fn write_summary_json<W: Write>(summary: &ValidationSummary, w: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, summary)
        .map_err(|e| GbsError::Format(format!("summary serialization failed: {e}")))?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::random_interferometer;
    use crate::gaussian::{apply_transfer, squeezed_vacuum, SqueezerBank};
    use crate::samplers::{exact_sampler, mockup_sampler, MockupKind};
    use approx::assert_relative_eq;
    use nalgebra::{Complex, DMatrix, DVector};

    type C64 = Complex<f64>;

    fn lossy_instance(r: &[f64], eta: f64, seed: u64) -> (SqueezerBank, DMatrix<C64>) {
        let bank = SqueezerBank::from_r(r.to_vec()).unwrap();
        let mut t = random_interferometer(r.len(), seed);
        t.scale_mut(eta.sqrt());
        (bank, t)
    }

    fn output_state(bank: &SqueezerBank, t: &DMatrix<C64>) -> GaussianState {
        apply_transfer(&squeezed_vacuum(bank).unwrap(), t).unwrap()
    }

    #[test]
    fn click_distribution_point_mass_for_vacuum_batch() {
        let batch = SampleBatch::new("test", 0, 3, "d", vec![vec![false; 3]; 10]).unwrap();
        let dist = click_number_distribution(&batch).unwrap();
        assert_eq!(dist.histogram, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(dist.total_samples, 10);
        let empty = SampleBatch::new("test", 0, 3, "d", vec![]).unwrap();
        assert!(click_number_distribution(&empty).is_err());
    }

    #[test]
    fn click_distribution_matches_theory_and_separates_thermal() {
        let (bank, t) = lossy_instance(&[1.0, 0.8, 0.6], 0.55, 5);
        let state = output_state(&bank, &t);
        let n = 100_000;
        let exact = exact_sampler(&state, n, 11).unwrap();
        let dist = click_number_distribution(&exact).unwrap();
        let theory = theoretical_click_number(&state).unwrap();
        assert_relative_eq!(theory.iter().sum::<f64>(), 1.0, epsilon = 1e-10);
        // Multinomial 3σ agreement per bin.
        for (h, th) in dist.histogram.iter().zip(&theory) {
            let sigma = (th * (1.0 - th) / n as f64).sqrt();
            assert!((h - th).abs() <= 3.5 * sigma + 1e-9, "{h} vs {th}");
        }
        let thermal = mockup_sampler(MockupKind::Thermal, &bank, &t, n, 11).unwrap();
        let tdist = click_number_distribution(&thermal).unwrap();
        assert!(dist.tvd(&tdist).unwrap() > 0.05);
    }

    #[test]
    fn theoretical_correlation_trivial_cases() {
        // Vacuum and any product state: all central correlations vanish.
        let vac = GaussianState::vacuum(3);
        let sq = squeezed_vacuum(&SqueezerBank::from_r(vec![0.9, 0.5, 0.2]).unwrap()).unwrap();
        for st in [&vac, &sq] {
            for modes in [[0usize, 1].as_slice(), &[0, 2], &[1, 2], &[0, 1, 2]] {
                assert_relative_eq!(
                    theoretical_click_correlation(st, modes).unwrap(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
        assert!(theoretical_click_correlation(&vac, &[0, 0]).is_err());
        assert!(theoretical_click_correlation(&vac, &[0]).is_err());
        assert!(theoretical_click_correlation(&vac, &[0, 1, 2, 1]).is_err());
    }

    #[test]
    fn theoretical_correlation_matches_enumeration() {
        // Lossless TMSS pair and a lossy 3-mode instance against brute force.
        let (bank, t) = lossy_instance(&[1.0, 0.7, 0.4], 0.6, 23);
        let tmss = {
            // Orthogonal squeezing axes: the 50/50 splitter then produces a
            // genuine two-mode squeezed state (identical axes would leave
            // a product state with zero correlation).
            let b =
                SqueezerBank::new(vec![1.0, 1.0], vec![0.0, std::f64::consts::FRAC_PI_2]).unwrap();
            let half = std::f64::consts::FRAC_1_SQRT_2;
            let bs = DMatrix::from_row_slice(
                2,
                2,
                &[
                    C64::new(half, 0.0),
                    C64::new(half, 0.0),
                    C64::new(half, 0.0),
                    C64::new(-half, 0.0),
                ],
            );
            apply_transfer(&squeezed_vacuum(&b).unwrap(), &bs).unwrap()
        };
        let lossy = output_state(&bank, &t);
        for st in [&tmss, &lossy] {
            let probs = brute_force_distribution(st).unwrap();
            let m = st.num_modes();
            let moment = |modes: &[usize]| -> f64 {
                probs
                    .iter()
                    .enumerate()
                    .filter(|(idx, _)| modes.iter().all(|&k| idx >> k & 1 == 1))
                    .map(|(_, p)| p)
                    .sum()
            };
            for modes in correlation_tuples(m, 2, 0).unwrap() {
                let expect =
                    moment(&modes) - moment(&[modes[0]]) * moment(&[modes[1]]);
                assert_relative_eq!(
                    theoretical_click_correlation(st, &modes).unwrap(),
                    expect,
                    epsilon = 1e-10
                );
            }
            if m >= 3 {
                for modes in correlation_tuples(m, 3, 0).unwrap() {
                    let (i, j, k) = (modes[0], modes[1], modes[2]);
                    let (pi, pj, pk) = (moment(&[i]), moment(&[j]), moment(&[k]));
                    let expect = moment(&modes)
                        - pi * moment(&[j, k])
                        - pj * moment(&[i, k])
                        - pk * moment(&[i, j])
                        + 2.0 * pi * pj * pk;
                    assert_relative_eq!(
                        theoretical_click_correlation(st, &modes).unwrap(),
                        expect,
                        epsilon = 1e-10
                    );
                }
            }
        }
        // TMSS on the splitter shows strictly positive pair correlation.
        assert!(theoretical_click_correlation(&tmss, &[0, 1]).unwrap() > 0.01);
    }

    #[test]
    fn empirical_correlation_hand_cases() {
        // Constant batch → 0.
        let constant = SampleBatch::new("t", 0, 2, "d", vec![vec![true, false]; 50]).unwrap();
        assert_eq!(empirical_click_correlation(&constant, &[0, 1]).unwrap(), 0.0);
        // Alternating (1,0),(0,1): covariance → −0.25 (n/(n−1) correction).
        let n = 2_000;
        let alt: Vec<Vec<bool>> = (0..n)
            .map(|i| {
                if i % 2 == 0 {
                    vec![true, false]
                } else {
                    vec![false, true]
                }
            })
            .collect();
        let batch = SampleBatch::new("t", 0, 2, "d", alt).unwrap();
        let c = empirical_click_correlation(&batch, &[0, 1]).unwrap();
        assert_relative_eq!(c, -0.25 * n as f64 / (n as f64 - 1.0), epsilon = 1e-12);
        assert!((c + 0.25).abs() < 1e-3);
        let tiny = SampleBatch::new("t", 0, 2, "d", vec![vec![true, false]; 2]).unwrap();
        assert!(empirical_click_correlation(&tiny, &[0, 1]).is_err());
    }

    #[test]
    fn empirical_matches_theory_within_multinomial_error() {
        let (bank, t) = lossy_instance(&[1.0, 0.8, 0.6], 0.55, 5);
        let state = output_state(&bank, &t);
        let n = 100_000;
        let batch = exact_sampler(&state, n, 3).unwrap();
        for order in [2usize, 3] {
            for modes in correlation_tuples(3, order, 0).unwrap() {
                let th = theoretical_click_correlation(&state, &modes).unwrap();
                let em = empirical_click_correlation(&batch, &modes).unwrap();
                // Loose normal bound: indicator products have variance ≤ 1/4.
                let sigma = 0.5 / (n as f64).sqrt();
                assert!((em - th).abs() < 4.0 * sigma, "{modes:?}: {em} vs {th}");
            }
        }
    }

    #[test]
    fn fit_delta_k_closed_forms() {
        let exact: Vec<(f64, f64)> = vec![(0.1, 0.1), (0.2, 0.2), (0.5, 0.5)];
        let fit = fit_delta_k(&exact).unwrap();
        assert_relative_eq!(fit.k, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.delta_k, 0.0, epsilon = 1e-12);
        assert_relative_eq!(fit.k_affine, 1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 0.0, epsilon = 1e-12);

        let zero: Vec<(f64, f64)> = vec![(0.1, 0.0), (0.2, 0.0), (0.5, 0.0)];
        let fit = fit_delta_k(&zero).unwrap();
        assert_eq!(fit.k, 0.0);
        assert_eq!(fit.delta_k, 1.0);

        let mut rng = stage_rng(17, "fit-test");
        let noisy: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let t = 0.01 * (i as f64 + 1.0);
                let eps: f64 = rng.gen_range(-1e-6..1e-6);
                (t, 0.66 * t + eps)
            })
            .collect();
        let fit = fit_delta_k(&noisy).unwrap();
        assert!((fit.k - 0.66).abs() < 1e-4);

        assert!(fit_delta_k(&[(0.3, 0.1), (0.3, 0.2)]).is_err());
        assert!(fit_delta_k(&[(0.3, 0.1)]).is_err());
    }

    #[test]
    fn fit_is_scale_equivariant() {
        let pts: Vec<(f64, f64)> = vec![(0.1, 0.07), (0.25, 0.2), (0.4, 0.43), (0.8, 0.7)];
        let base = fit_delta_k(&pts).unwrap();
        for c in [0.1, 2.0, -3.0] {
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(t, e)| (t, c * e)).collect();
            let fit = fit_delta_k(&scaled).unwrap();
            assert_relative_eq!(fit.k, c * base.k, epsilon = 1e-12);
        }
    }

    #[test]
    fn weighted_distance_closed_forms() {
        assert_eq!(weighted_distance(&[(0.4, 0.4), (0.2, 0.2)]).unwrap(), 0.0);
        assert_relative_eq!(weighted_distance(&[(1.0, 0.0)]).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            weighted_distance(&[(1.0, 0.9), (4.0, 4.1)]).unwrap(),
            0.1,
            epsilon = 1e-12
        );
        assert!(weighted_distance(&[]).is_err());
        assert!(weighted_distance(&[(0.0, 0.5)]).is_err());
        // Zero iff exact agreement (nonzero weights).
        assert!(weighted_distance(&[(0.4, 0.4000001)]).unwrap() > 0.0);
    }

    #[test]
    fn normalized_delta_k_cases() {
        assert_eq!(normalized_delta_k(0.3, 0.3).unwrap(), 1.0);
        assert_eq!(normalized_delta_k(0.0, 0.5).unwrap(), 0.0);
        assert!(normalized_delta_k(0.1, 0.0).is_err());
    }

    #[test]
    fn correlation_tuples_enumeration_and_subsample() {
        assert_eq!(correlation_tuples(4, 2, 0).unwrap().len(), 6);
        assert_eq!(correlation_tuples(5, 3, 0).unwrap().len(), 10);
        // Above the exhaustive limit but with fewer tuples than the cap:
        // the subsample covers every pair exactly once.
        let pairs = correlation_tuples(60, 2, 9).unwrap();
        assert_eq!(pairs.len(), 60 * 59 / 2);
        // C(60,3) = 34220 > the cap: a seeded distinct subsample.
        let sub = correlation_tuples(60, 3, 9).unwrap();
        assert_eq!(sub.len(), MAX_CORRELATION_TUPLES);
        let unique: HashSet<&Vec<usize>> = sub.iter().collect();
        assert_eq!(unique.len(), sub.len());
        assert_eq!(sub, correlation_tuples(60, 3, 9).unwrap());
        assert!(correlation_tuples(1, 2, 0).is_err());
        assert!(correlation_tuples(4, 4, 0).is_err());
    }

    #[test]
    fn correlation_report_round_trip() {
        let (bank, t) = lossy_instance(&[1.0, 0.8, 0.6], 0.55, 5);
        let state = output_state(&bank, &t);
        let batch = exact_sampler(&state, 20_000, 3).unwrap();
        let report = correlation_report(&state, &batch, 2, 0).unwrap();
        assert_eq!(report.points.len(), 3);
        assert!(report.fit.delta_k < 0.25);
        let mut csv = Vec::new();
        write_correlation_csv(&report, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("row,order,modes,theory,empirical\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("point,")).count(), 3);
        assert_eq!(text.lines().filter(|l| l.starts_with("metric,")).count(), 5);
    }

    #[test]
    fn bayesian_identical_hypotheses_score_zero() {
        let (bank, t) = lossy_instance(&[1.0, 0.8, 0.6], 0.55, 5);
        let state = output_state(&bank, &t);
        let batch = exact_sampler(&state, 500, 3).unwrap();
        let report = bayesian_score(&batch, &state, &state, &[0, 1, 2]).unwrap();
        assert_eq!(report.delta_h, 0.0);
        assert_eq!(report.sigma, 0.0);
    }

    #[test]
    fn bayesian_favors_ground_truth_with_growing_subsystems() {
        let (bank, t) = lossy_instance(&[1.0, 0.8, 0.6], 0.55, 5);
        let state = output_state(&bank, &t);
        let squashed = crate::samplers::squashed_state_of(&bank, &t).unwrap();
        let batch = exact_sampler(&state, 10_000, 21).unwrap();
        let mut last = 0.0;
        for sub in [[0usize].as_slice(), &[0, 1], &[0, 1, 2]] {
            let rep = bayesian_score(&batch, &state, &squashed, sub).unwrap();
            assert!(rep.delta_h >= last - 3.0 * rep.sigma, "subsystem {sub:?}");
            last = rep.delta_h;
        }
        let full = bayesian_score(&batch, &state, &squashed, &[0, 1, 2]).unwrap();
        assert!(full.delta_h > 0.0);
        assert!(full.delta_h / full.sigma > 3.0, "{} / {}", full.delta_h, full.sigma);
    }

    #[test]
    fn bayesian_delta_h_converges_to_kl() {
        let (bank, t) = lossy_instance(&[1.0, 0.7], 0.6, 13);
        let state = output_state(&bank, &t);
        let squashed = crate::samplers::squashed_state_of(&bank, &t).unwrap();
        let p0 = brute_force_distribution(&state).unwrap();
        let p1 = brute_force_distribution(&squashed).unwrap();
        let kl: f64 = p0
            .iter()
            .zip(&p1)
            .filter(|(a, _)| **a > 0.0)
            .map(|(a, b)| a * (a / b).ln())
            .sum();
        let batch = exact_sampler(&state, 100_000, 7).unwrap();
        let rep = bayesian_score(&batch, &state, &squashed, &[0, 1]).unwrap();
        assert!((rep.delta_h - kl).abs() < 3.0 * rep.sigma + 1e-4, "{} vs {kl}", rep.delta_h);
    }

    #[test]
    fn bayesian_error_paths() {
        let state = GaussianState::vacuum(2);
        let batch = SampleBatch::new("t", 0, 2, "d", vec![vec![true, false]]).unwrap();
        // Vacuum gives zero probability to any clicking pattern under H0.
        let err = bayesian_score(&batch, &state, &state, &[0]).unwrap_err();
        assert!(err.to_string().contains("zero probability"));
        assert!(bayesian_score(&batch, &state, &state, &[]).is_err());
        assert!(bayesian_score(&batch, &state, &state, &[5]).is_err());
        let empty = SampleBatch::new("t", 0, 2, "d", vec![]).unwrap();
        assert!(bayesian_score(&empty, &state, &state, &[0]).is_err());
    }

    #[test]
    fn summary_json_emission() {
        let summary = ValidationSummary {
            experiment_id: "ref-3".to_string(),
            k: Some(0.98),
            delta_k: Some(0.02),
            wd: Some(0.01),
            delta_h: Some(0.4),
            sigma: Some(0.05),
            epsilon: None,
            n_eff: Some(1.2),
        };
        let mut out = Vec::new();
        write_summary_json(&summary, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["experiment_id"], "ref-3");
        assert_eq!(parsed["delta_k"], 0.02);
        assert!(parsed.get("epsilon").is_none());
    }

    #[test]
    fn mean_needed_for_kernel() {
        let displaced =
            GaussianState::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, 0.0]))
                .unwrap();
        assert!(theoretical_click_correlation(&displaced, &[0, 1]).is_err());
    }
}
