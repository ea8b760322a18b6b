//! Classical-simulation cost model: fitting and extrapolating the bond
//! dimension required for a target truncation error, evaluating the MPS
//! runtime law `T ∝ M·d·χ²·2^{N_eff/2}`, and speedup ratios against
//! configurable machine baselines. All large-number arithmetic is carried in
//! log10 space; nothing here can overflow.

use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{GbsError, Result};

/// Exact unit conversion used in every report.
pub const SECONDS_PER_YEAR: f64 = 3.15576e7;

/// Default quantum sampling time per event, in seconds.
pub const QUANTUM_SAMPLE_TIME: f64 = 25.6e-6;

// ---------------------------------------------------------------------------
// χ(ε) fit
// ---------------------------------------------------------------------------

/// Power-law-of-logarithm fit `χ(ε) = A·(ln(1/ε))^n`.
#[derive(Debug, Clone, Serialize)]
pub struct ChiFit {
    pub a: f64,
    pub n: f64,
    /// Root-mean-square residual of `log10 χ` over the fit window; always
    /// reported next to any extrapolation.
    pub residual: f64,
    /// (min, max) of the fitted ε values.
    pub eps_window: (f64, f64),
    /// (min, max) of the fitted χ values.
    pub chi_window: (f64, f64),
}

/// Least squares on `log χ = log A + n · log ln(1/ε)` over `(ε, χ)` points.
pub fn fit_chi(points: &[(f64, f64)]) -> Result<ChiFit> {
    if points.len() < 3 {
        return Err(GbsError::InvalidArgument(format!(
            "χ(ε) fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(eps, chi) in points {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(GbsError::InvalidArgument(format!(
                "truncation error {eps} outside (0, 1)"
            )));
        }
        if !(chi > 0.0 && chi.is_finite()) {
            return Err(GbsError::InvalidArgument(format!(
                "bond dimension {chi} must be positive and finite"
            )));
        }
        xs.push((1.0 / eps).ln().ln());
        ys.push(chi.ln());
    }
    let n = points.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    if sxx < 1e-24 {
        return Err(GbsError::InvalidArgument(
            "degenerate fit: all points share the same ln(1/ε)".to_string(),
        ));
    }
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let rss: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let residual = (rss / n).sqrt() / std::f64::consts::LN_10;
    let eps_window = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(e, _)| {
        (lo.min(e), hi.max(e))
    });
    let chi_window = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, c)| {
        (lo.min(c), hi.max(c))
    });
    Ok(ChiFit {
        a: intercept.exp(),
        n: slope,
        residual,
        eps_window,
        chi_window,
    })
}

/// Extrapolated bond dimension with its log-space uncertainty band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiExtrapolation {
    pub log10_chi: f64,
    /// `log10_chi ∓ residual` — the band is never omitted from reports.
    pub log10_lower: f64,
    pub log10_upper: f64,
}

impl ChiExtrapolation {
    /// Point estimate as a plain number; may overflow to infinity for
    /// frontier-scale values, which is why reports use `log10_chi`.
    pub fn chi(&self) -> f64 {
        10f64.powf(self.log10_chi)
    }
}

/// Evaluates the fit at a target truncation error `ε_T`.
pub fn extrapolate_chi(fit: &ChiFit, eps_t: f64) -> Result<ChiExtrapolation> {
    if !(eps_t > 0.0 && eps_t < 1.0) {
        return Err(GbsError::InvalidArgument(format!(
            "target truncation error {eps_t} outside (0, 1)"
        )));
    }
    // log10 χ = log10 A + n·log10(ln(1/ε_T))
    let value = fit.a.log10() + fit.n * (1.0 / eps_t).ln().log10();
    Ok(ChiExtrapolation {
        log10_chi: value,
        log10_lower: value - fit.residual,
        log10_upper: value + fit.residual,
    })
}

// ---------------------------------------------------------------------------
// Runtime estimate
// ---------------------------------------------------------------------------

/// A machine the classical simulation is priced against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub ops_per_second: f64,
    /// Informal memory note; the runtime law assumes unlimited memory.
    #[serde(default)]
    pub memory: Option<String>,
    #[serde(default)]
    pub citation: String,
}

/// Built-in registry used when no baseline file is supplied.
pub fn default_baselines() -> Vec<Baseline> {
    vec![
        Baseline {
            name: "exascale".to_string(),
            ops_per_second: 1.0e18,
            memory: Some("unlimited (by assumption)".to_string()),
            citation: "generic exascale system, 10^18 ops/s".to_string(),
        },
        Baseline {
            name: "petascale".to_string(),
            ops_per_second: 1.0e15,
            memory: Some("unlimited (by assumption)".to_string()),
            citation: "generic petascale system, 10^15 ops/s".to_string(),
        },
        Baseline {
            name: "workstation".to_string(),
            ops_per_second: 1.0e12,
            memory: Some("unlimited (by assumption)".to_string()),
            citation: "single node, 10^12 ops/s".to_string(),
        },
    ]
}

/// Reads a JSON baseline registry (array of [`Baseline`] objects).
pub fn read_baselines<R: Read>(r: &mut R) -> Result<Vec<Baseline>> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let list: Vec<Baseline> = serde_json::from_str(&text)
        .map_err(|e| GbsError::Format(format!("baseline registry: {e}")))?;
    for b in &list {
        if !(b.ops_per_second > 0.0) {
            return Err(GbsError::Format(format!(
                "baseline '{}' has non-positive throughput",
                b.name
            )));
        }
    }
    Ok(list)
}

/// Writes a JSON baseline registry.
pub fn write_baselines<W: Write>(baselines: &[Baseline], w: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, baselines)
        .map_err(|e| GbsError::Format(format!("baseline registry: {e}")))?;
    writeln!(w)?;
    Ok(())
}

/// Runtime estimate for the MPS law `ops = prefactor · M·d·χ²·2^{N_eff/2}`,
/// carried entirely in log10 space.
#[derive(Debug, Clone, Serialize)]
pub struct CostEstimate {
    pub log10_ops: f64,
    pub log10_ops_per_second: f64,
    pub log10_seconds: f64,
    pub log10_years: f64,
    /// Calibrated constant in front of the asymptotic law; reported with
    /// every estimate.
    pub prefactor: f64,
    pub baseline: String,
}

impl CostEstimate {
    /// Wall time in seconds; infinity when it exceeds f64 range (use
    /// `log10_seconds` for reporting).
    pub fn seconds(&self) -> f64 {
        10f64.powf(self.log10_seconds)
    }

    pub fn years(&self) -> f64 {
        10f64.powf(self.log10_years)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(GbsError::InvalidArgument(format!(
            "{name} = {v} must be positive and finite"
        )));
    }
    Ok(())
}

/// Runtime estimate with the bond dimension given in log10 (safe for
/// frontier-scale extrapolations beyond f64 range).
pub fn runtime_estimate_log(
    m: f64,
    d: f64,
    log10_chi: f64,
    n_eff: f64,
    baseline: &Baseline,
    prefactor: f64,
) -> Result<CostEstimate> {
    check_positive("M", m)?;
    check_positive("d", d)?;
    check_positive("prefactor", prefactor)?;
    check_positive("baseline throughput", baseline.ops_per_second)?;
    if !log10_chi.is_finite() || !n_eff.is_finite() || n_eff < 0.0 {
        return Err(GbsError::InvalidArgument(format!(
            "log10 χ = {log10_chi}, N_eff = {n_eff} must be finite (N_eff ≥ 0)"
        )));
    }
    let log10_ops = prefactor.log10()
        + m.log10()
        + d.log10()
        + 2.0 * log10_chi
        + 0.5 * n_eff * std::f64::consts::LOG10_2;
    let log10_throughput = baseline.ops_per_second.log10();
    let log10_seconds = log10_ops - log10_throughput;
    Ok(CostEstimate {
        log10_ops,
        log10_ops_per_second: log10_throughput,
        log10_seconds,
        log10_years: log10_seconds - SECONDS_PER_YEAR.log10(),
        prefactor,
        baseline: baseline.name.clone(),
    })
}

/// Runtime estimate with the bond dimension as a plain number.
pub fn runtime_estimate(
    m: f64,
    d: f64,
    chi: f64,
    n_eff: f64,
    baseline: &Baseline,
    prefactor: f64,
) -> Result<CostEstimate> {
    check_positive("χ", chi)?;
    runtime_estimate_log(m, d, chi.log10(), n_eff, baseline, prefactor)
}

/// Speedup of the quantum sampler over the classical estimate, in log10.
pub fn speedup_ratio(classical: &CostEstimate, quantum_sample_time: f64) -> Result<f64> {
    check_positive("quantum sample time", quantum_sample_time)?;
    Ok(classical.log10_seconds - quantum_sample_time.log10())
}

/// Measures the constant in front of the asymptotic law by timing
/// `build_mps` plus `samples` draws of `mps_sample` on a tractable instance
/// and dividing the wall time by `M·d·χ²·2^{N_eff/2}`.
pub fn calibrate_prefactor(
    v_p: &nalgebra::DMatrix<f64>,
    w: &nalgebra::DMatrix<f64>,
    d: usize,
    chi: usize,
    samples: usize,
) -> Result<f64> {
    let m = v_p.nrows() as f64 / 2.0;
    let start = Instant::now();
    let mps = crate::mps::build_mps(v_p, d, chi)?;
    crate::mps::mps_sample(&mps, w, samples.max(1), 0)?;
    let elapsed = start.elapsed().as_secs_f64();
    let n_eff = (v_p.trace() - 2.0 * m) / 4.0;
    let chi_actual = mps.bond_dims().into_iter().max().unwrap_or(1).max(1) as f64;
    let ops = m * d as f64 * chi_actual * chi_actual * (0.5 * n_eff * std::f64::consts::LN_2).exp();
    Ok(elapsed / ops)
}
