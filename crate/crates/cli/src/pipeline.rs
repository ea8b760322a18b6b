//! Pipeline execution: unroll → simulate → sample → mps → validate → cost,
//! with persisted artifacts, a manifest, and a verification path for
//! persisted sample files.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use serde_json::{json, Value};

use gbs_core::circuit::{unroll, CircuitSpec, TransferMatrix};
use gbs_core::cost::{
    default_baselines, extrapolate_chi, fit_chi, read_baselines, runtime_estimate_log,
    speedup_ratio, Baseline, QUANTUM_SAMPLE_TIME,
};
use gbs_core::gaussian::{apply_transfer, squeezed_vacuum, GaussianState, SqueezerBank};
use gbs_core::mps::{
    adapt_transmission, build_mps, chi_zero_baseline_sampler, classicality_gap, decompose,
    default_cutoff, mps_sample, truncation_error, write_mps_checkpoint,
};
use gbs_core::samplers::{
    exact_sampler, mockup_sampler, read_samples, squashed_state_of, thermal_state_of,
    write_samples, MockupKind, SampleBatch,
};
use gbs_core::validation::{
    bayesian_score, click_number_distribution, correlation_report, write_correlation_csv,
    BayesianReport, CorrelationReport,
};
use gbs_core::{GbsError, Result};

use crate::config::LoadedConfig;

/// Version stamp embedded in every JSON/CSV artifact.
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Pipeline stages in execution order; a run executes every configured stage
/// up to and including the requested one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Unroll,
    Simulate,
    Sample,
    Mps,
    Validate,
    Cost,
    Report,
}

/// Result of a pipeline run: what was written and the aggregated summary.
#[derive(Debug)]
pub struct RunOutput {
    pub digest: String,
    pub artifacts: Vec<PathBuf>,
    pub summary: Value,
}

fn complex_matrix_json(m: &DMatrix<Complex<f64>>) -> Value {
    let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            entries.push(json!([m[(i, j)].re, m[(i, j)].im]));
        }
    }
    json!({"rows": m.nrows(), "cols": m.ncols(), "entries": entries})
}

fn real_matrix_json(m: &DMatrix<f64>) -> Value {
    let mut entries = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            entries.push(json!(m[(i, j)]));
        }
    }
    json!({"rows": m.nrows(), "cols": m.ncols(), "entries": entries})
}

struct Runner<'a> {
    loaded: &'a LoadedConfig,
    digest: String,
    out_dir: PathBuf,
    artifacts: Vec<PathBuf>,
    stages_completed: Vec<String>,
    threads: Option<usize>,
    // computed state
    circuit: Option<CircuitSpec>,
    transfer: Option<TransferMatrix>,
    bank: Option<SqueezerBank>,
    state: Option<GaussianState>,
    batches: Vec<SampleBatch>,
    mps_epsilon: Option<f64>,
    mps_n_eff: Option<f64>,
    summary_sections: BTreeMap<String, Value>,
}

impl<'a> Runner<'a> {
    fn new(loaded: &'a LoadedConfig, threads: Option<usize>) -> Result<Self> {
        let out_dir = loaded.output_dir();
        fs::create_dir_all(&out_dir)?;
        Ok(Self {
            loaded,
            digest: loaded.config.digest(),
            out_dir,
            artifacts: Vec::new(),
            stages_completed: Vec::new(),
            threads,
            circuit: None,
            transfer: None,
            bank: None,
            state: None,
            batches: Vec::new(),
            mps_epsilon: None,
            mps_n_eff: None,
            summary_sections: BTreeMap::new(),
        })
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<PathBuf> {
        let path = self.out_dir.join(name);
        let mut f = fs::File::create(&path)?;
        serde_json::to_writer_pretty(&mut f, value)
            .map_err(|e| GbsError::Format(format!("{name}: {e}")))?;
        writeln!(f)?;
        self.artifacts.push(path.clone());
        Ok(path)
    }

    fn stamp(&self) -> Value {
        json!({"config_digest": self.digest, "tool_version": TOOL_VERSION})
    }

    fn unroll(&mut self) -> Result<()> {
        let spec = self.loaded.circuit()?;
        let transfer = unroll(&spec)?;
        let (bins, m_out, m_in) = spec.output_geometry();
        let value = json!({
            "stamp": self.stamp(),
            "geometry": {
                "spatial_modes": spec.spatial_modes,
                "output_time_bins": bins,
                "num_outputs": m_out,
                "num_inputs": m_in,
            },
            "matrix": complex_matrix_json(&transfer.matrix),
        });
        self.write_json("transfer.json", &value)?;
        self.circuit = Some(spec);
        self.transfer = Some(transfer);
        self.stages_completed.push("unroll".to_string());
        Ok(())
    }

    fn simulate(&mut self) -> Result<()> {
        let spec = self.circuit.as_ref().expect("unroll ran");
        let transfer = self.transfer.as_ref().expect("unroll ran");
        let bank = spec.input_bank();
        let state = apply_transfer(&squeezed_vacuum(&bank)?, &transfer.matrix)?;
        let dec = decompose(state.cov())?;
        let gap = classicality_gap(state.cov())?;
        let value = json!({
            "stamp": self.stamp(),
            "num_modes": state.num_modes(),
            "cov": real_matrix_json(state.cov()),
            "mean_photon_total": state.mean_photon_total(),
            "n_eff": dec.n_eff,
            "classicality_gap": gap,
        });
        self.write_json("state.json", &value)?;
        self.summary_sections.insert(
            "instance".to_string(),
            json!({
                "num_modes": state.num_modes(),
                "mean_photon_total": state.mean_photon_total(),
                "n_eff": dec.n_eff,
                "classicality_gap": gap,
            }),
        );
        self.bank = Some(bank);
        self.state = Some(state);
        self.stages_completed.push("simulate".to_string());
        Ok(())
    }

    fn persist_batch(&mut self, mut batch: SampleBatch) -> Result<()> {
        batch.config_digest = self.digest.clone();
        let path = self.out_dir.join(format!("samples-{}.txt", batch.sampler_id));
        let mut f = fs::File::create(&path)?;
        write_samples(&batch, &mut f)?;
        self.artifacts.push(path);
        self.batches.push(batch);
        Ok(())
    }

    fn sample(&mut self) -> Result<()> {
        let jobs = self.loaded.config.samplers.clone();
        for job in &jobs {
            let batch = if job.sampler == "exact" {
                let state = self.state.as_ref().expect("simulate ran");
                exact_sampler(state, job.count, self.loaded.config.seed)?
            } else {
                let kind = MockupKind::from_str(&job.sampler)?;
                let bank = self.bank.as_ref().expect("simulate ran");
                let t = &self.transfer.as_ref().expect("unroll ran").matrix;
                mockup_sampler(kind, bank, t, job.count, self.loaded.config.seed)?
            };
            self.persist_batch(batch)?;
        }
        self.stages_completed.push("sample".to_string());
        Ok(())
    }

    fn mps(&mut self) -> Result<()> {
        let Some(job) = self.loaded.config.mps.clone() else {
            return Ok(());
        };
        let bank = self.bank.as_ref().expect("simulate ran").clone();
        let t = self.transfer.as_ref().expect("unroll ran").matrix.clone();
        let scale = job.transmission_scale.unwrap_or(1.0);
        let (bank, t) = if scale < 1.0 {
            adapt_transmission(&bank, &t, scale)?
        } else {
            (bank, t)
        };
        let state = apply_transfer(&squeezed_vacuum(&bank)?, &t)?;
        let dec = decompose(state.cov())?;
        let d = job.local_dim.unwrap_or_else(|| default_cutoff(&dec.v_p));
        let mps = build_mps(&dec.v_p, d, job.chi)?;
        let trunc = truncation_error(&dec.v_p, job.chi)?;
        let run = mps_sample(&mps, &dec.w, job.samples, self.loaded.config.seed)?;

        let ckpt_path = self.out_dir.join("mps.bin");
        let mut f = fs::File::create(&ckpt_path)?;
        write_mps_checkpoint(&mps, &mut f)?;
        self.artifacts.push(ckpt_path);

        let value = json!({
            "stamp": self.stamp(),
            "chi": job.chi,
            "local_dim": d,
            "transmission_scale": scale,
            "bond_dims": mps.bond_dims(),
            "recorded_truncation_error": mps.truncation_error,
            "analytic_truncation_error": {
                "per_cut": trunc.per_cut,
                "max_cut": trunc.max_cut,
                "combined": trunc.combined,
            },
            "n_eff": dec.n_eff,
            "classicality_gap": classicality_gap(state.cov())?,
            "cutoff_warnings": run.cutoff_warnings,
        });
        self.write_json("mps.json", &value)?;
        self.mps_epsilon = Some(trunc.max_cut);
        self.mps_n_eff = Some(dec.n_eff);
        self.persist_batch(run.batch)?;
        if job.baseline {
            self.persist_batch(chi_zero_baseline_sampler(
                &dec.w,
                job.samples,
                self.loaded.config.seed,
            )?)?;
        }
        self.stages_completed.push("mps".to_string());
        Ok(())
    }

    fn adversary_state(&self, name: &str) -> Result<GaussianState> {
        let bank = self.bank.as_ref().expect("simulate ran");
        let t = &self.transfer.as_ref().expect("unroll ran").matrix;
        match name {
            "squashed" => squashed_state_of(bank, t),
            "thermal" => thermal_state_of(bank, t),
            other => Err(GbsError::InvalidArgument(format!(
                "unknown adversary '{other}'"
            ))),
        }
    }

    fn validate(&mut self) -> Result<()> {
        let Some(job) = self.loaded.config.validation.clone() else {
            return Ok(());
        };
        let state = self.state.as_ref().expect("simulate ran").clone();
        let adversary = self.adversary_state(&job.adversary)?;
        let subsystem: Vec<usize> = job
            .bayesian_subsystem
            .clone()
            .unwrap_or_else(|| (0..state.num_modes()).collect());
        let batches = self.batches.clone();
        let mut per_sampler = BTreeMap::new();
        for batch in &batches {
            let metrics = self.validate_batch(
                &state,
                &adversary,
                &subsystem,
                &job.orders,
                batch,
                true,
            )?;
            per_sampler.insert(batch.sampler_id.clone(), metrics);
        }
        let value = json!({
            "stamp": self.stamp(),
            "experiment_id": self.loaded.config.experiment_id,
            "adversary": job.adversary,
            "epsilon": self.mps_epsilon,
            "n_eff": self.mps_n_eff,
            "samplers": per_sampler,
        });
        self.write_json("validation-summary.json", &value)?;
        self.summary_sections
            .insert("validation".to_string(), value);
        self.stages_completed.push("validate".to_string());
        Ok(())
    }

    /// Full battery on one batch; optionally persists the correlation CSVs.
    fn validate_batch(
        &mut self,
        state: &GaussianState,
        adversary: &GaussianState,
        subsystem: &[usize],
        orders: &[usize],
        batch: &SampleBatch,
        persist: bool,
    ) -> Result<Value> {
        let mut metrics = serde_json::Map::new();
        let clicks = click_number_distribution(batch)?;
        metrics.insert("click_histogram".to_string(), json!(clicks.histogram));
        for &order in orders {
            let report: CorrelationReport =
                correlation_report(state, batch, order, self.loaded.config.seed)?;
            if persist {
                let name = format!("correlation-{}-k{}.csv", batch.sampler_id, order);
                let path = self.out_dir.join(&name);
                let mut f = fs::File::create(&path)?;
                writeln!(f, "# config_digest {}", self.digest)?;
                writeln!(f, "# tool_version {TOOL_VERSION}")?;
                write_correlation_csv(&report, &mut f)?;
                self.artifacts.push(path);
            }
            metrics.insert(
                format!("k{order}"),
                json!({
                    "K": report.fit.k,
                    "delta_k": report.fit.delta_k,
                    "K_affine": report.fit.k_affine,
                    "intercept": report.fit.intercept,
                    "wd": report.wd,
                    "points": report.points.len(),
                }),
            );
        }
        let bayes: BayesianReport = bayesian_score(batch, state, adversary, subsystem)?;
        metrics.insert(
            "bayesian".to_string(),
            json!({"delta_h": bayes.delta_h, "sigma": bayes.sigma, "subsystem": bayes.subsystem}),
        );
        Ok(Value::Object(metrics))
    }

    fn cost(&mut self) -> Result<()> {
        let Some(job) = self.loaded.config.cost.clone() else {
            return Ok(());
        };
        let state = self.state.as_ref().expect("simulate ran");
        let dec = decompose(state.cov())?;
        let mut points = Vec::new();
        for &chi in &job.chi_sweep {
            let e = truncation_error(&dec.v_p, chi)?.max_cut;
            if e > 1e-14 && e < 1.0 {
                points.push((e, chi as f64));
            }
        }
        let fit = fit_chi(&points)?;
        let extra = extrapolate_chi(&fit, job.eps_target)?;
        let baselines: Vec<Baseline> = match &job.baselines_path {
            Some(p) => {
                let mut f = fs::File::open(self.loaded.resolve(p))?;
                read_baselines(&mut f)?
            }
            None => default_baselines(),
        };
        let baseline = baselines
            .iter()
            .find(|b| b.name == job.baseline)
            .ok_or_else(|| {
                GbsError::InvalidArgument(format!("baseline '{}' not in registry", job.baseline))
            })?;
        let (m, log10_chi, n_eff) = match &job.anchor {
            Some(a) => (a.num_modes, a.log10_chi, a.n_eff),
            None => (
                state.num_modes() as f64,
                extra.log10_chi.max(0.0),
                dec.n_eff,
            ),
        };
        let est = runtime_estimate_log(
            m,
            job.local_dim as f64,
            log10_chi,
            n_eff,
            baseline,
            job.prefactor,
        )?;
        let speedup = speedup_ratio(&est, QUANTUM_SAMPLE_TIME)?;
        let value = json!({
            "stamp": self.stamp(),
            "fit": {"a": fit.a, "n": fit.n, "residual": fit.residual,
                     "eps_window": fit.eps_window, "chi_window": fit.chi_window},
            "extrapolation": {"eps_target": job.eps_target,
                               "log10_chi": extra.log10_chi,
                               "log10_band": [extra.log10_lower, extra.log10_upper]},
            "estimate": {"num_modes": m, "local_dim": job.local_dim,
                          "log10_chi": log10_chi, "n_eff": n_eff,
                          "baseline": est.baseline, "prefactor": est.prefactor,
                          "log10_ops": est.log10_ops,
                          "log10_seconds": est.log10_seconds,
                          "log10_years": est.log10_years,
                          "log10_speedup": speedup},
        });
        self.write_json("cost.json", &value)?;
        self.summary_sections.insert("cost".to_string(), value);
        self.stages_completed.push("cost".to_string());
        Ok(())
    }

    fn manifest(&mut self) -> Result<()> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let artifacts: Vec<String> = self
            .artifacts
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        // The manifest is the only artifact carrying wall-clock information.
        let value = json!({
            "stamp": self.stamp(),
            "experiment_id": self.loaded.config.experiment_id,
            "created_unix_seconds": created,
            "threads": self.threads,
            "stages_completed": self.stages_completed,
            "artifacts": artifacts,
        });
        self.write_json("manifest.json", &value)?;
        Ok(())
    }
}

/// Executes every configured stage up to `upto`, writes artifacts and the
/// manifest, and returns the aggregated summary.
pub fn run(loaded: &LoadedConfig, upto: Stage, threads: Option<usize>) -> Result<RunOutput> {
    let mut runner = Runner::new(loaded, threads)?;
    let has_circuit =
        loaded.config.circuit.is_some() || loaded.config.circuit_path.is_some();
    if has_circuit {
        runner.unroll()?;
        if upto >= Stage::Simulate {
            runner.simulate()?;
        }
        if upto >= Stage::Sample {
            runner.sample()?;
        }
        if upto >= Stage::Mps {
            runner.mps()?;
        }
        if upto >= Stage::Validate {
            runner.validate()?;
        }
        if upto >= Stage::Cost {
            runner.cost()?;
        }
    }
    if upto >= Stage::Report {
        let report = json!({
            "stamp": runner.stamp(),
            "experiment_id": loaded.config.experiment_id,
            "sections": runner.summary_sections,
        });
        runner.write_json("report.json", &report)?;
    }
    runner.manifest()?;
    let summary = json!({
        "experiment_id": loaded.config.experiment_id,
        "config_digest": runner.digest,
        "artifacts": runner.artifacts.len(),
    });
    Ok(RunOutput {
        digest: runner.digest,
        artifacts: runner.artifacts,
        summary,
    })
}

/// Validation report recomputed from a persisted sample file.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub sampler_id: String,
    /// `"run"` when the sampler is one this config declares (or the MPS
    /// pipeline's own ids), `"external"` otherwise.
    pub provenance: String,
    pub metrics: Value,
}

/// Recomputes the validation battery on a persisted sample file after
/// checking its header digest against the config.
pub fn verify(loaded: &LoadedConfig, samples_path: &std::path::Path) -> Result<VerifyReport> {
    let file = fs::File::open(samples_path)?;
    let mut reader = std::io::BufReader::new(file);
    let batch = read_samples(&mut reader)?;
    let digest = loaded.config.digest();
    if batch.config_digest != digest {
        return Err(GbsError::Format(format!(
            "config digest mismatch: sample file has {}, config is {digest}",
            batch.config_digest
        )));
    }
    let mut runner = Runner::new(loaded, None)?;
    runner.unroll()?;
    runner.simulate()?;
    let state = runner.state.clone().expect("simulate ran");
    let job = loaded.config.validation.clone().unwrap_or(
        crate::config::ValidationJob {
            orders: vec![2],
            bayesian_subsystem: None,
            adversary: "squashed".to_string(),
        },
    );
    let adversary = runner.adversary_state(&job.adversary)?;
    let subsystem: Vec<usize> = job
        .bayesian_subsystem
        .clone()
        .unwrap_or_else(|| (0..state.num_modes()).collect());
    let metrics =
        runner.validate_batch(&state, &adversary, &subsystem, &job.orders, &batch, false)?;
    let declared = loaded
        .config
        .samplers
        .iter()
        .map(|j| j.sampler.as_str())
        .chain(["mps", "chi0"])
        .any(|id| id == batch.sampler_id);
    Ok(VerifyReport {
        sampler_id: batch.sampler_id.clone(),
        provenance: if declared { "run" } else { "external" }.to_string(),
        metrics,
    })
}

/// Maps an error to the documented process exit code: 2 for configuration
/// and I/O problems, 3 for numerical or physicality failures, 4 for
/// scale-limit refusals.
pub fn exit_code(err: &GbsError) -> i32 {
    match err {
        GbsError::Format(_) | GbsError::InvalidArgument(_) | GbsError::Io(_) => 2,
        GbsError::Unphysical(_) | GbsError::Numerical(_) | GbsError::Dimension(_) => 3,
        GbsError::ScaleLimit(_) => 4,
    }
}
