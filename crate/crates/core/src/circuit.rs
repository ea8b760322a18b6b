//! Compilation of the spatial-temporal loop circuit into an explicit complex
//! transfer matrix over time-bin-expanded modes.
//!
//! The circuit is three `s×s` interferometers `U1, U2, U3` connected by two
//! arrays of fiber delay loops. A qumode is a `(spatial channel, time bin)`
//! pair; unrolling lifts each stage to the time-bin-expanded space:
//! interferometers act per bin, loop `i` maps `(i, t) → (i, t + delay_i)`
//! with a per-loop transmission and phase on the delayed path.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{GbsError, Result};
use crate::rng::stage_rng;

type C64 = Complex<f64>;

/// Where an interferometer matrix comes from: explicit row-major complex
/// entries, or a Haar-random draw from a seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum UnitarySpec {
    /// Row-major `[re, im]` pairs, `s·s` of them.
    Inline { rows: Vec<Vec<[f64; 2]>> },
    /// Haar-random unitary generated deterministically from a seed.
    Haar { seed: u64 },
    /// Identity matrix.
    Identity,
}

impl UnitarySpec {
    pub fn materialize(&self, s: usize) -> Result<DMatrix<C64>> {
        match self {
            UnitarySpec::Identity => Ok(DMatrix::identity(s, s)),
            UnitarySpec::Haar { seed } => Ok(random_interferometer(s, *seed)),
            UnitarySpec::Inline { rows } => {
                if rows.len() != s || rows.iter().any(|r| r.len() != s) {
                    return Err(GbsError::Dimension(format!(
                        "inline unitary must be {s}x{s}"
                    )));
                }
                let mut u = DMatrix::<C64>::zeros(s, s);
                for (i, row) in rows.iter().enumerate() {
                    for (j, z) in row.iter().enumerate() {
                        u[(i, j)] = C64::new(z[0], z[1]);
                    }
                }
                let gram = u.adjoint() * &u;
                if (gram - DMatrix::<C64>::identity(s, s)).camax() > 1e-10 {
                    return Err(GbsError::Unphysical(
                        "inline interferometer is not unitary within 1e-10".to_string(),
                    ));
                }
                Ok(u)
            }
        }
    }
}

/// One delay-loop array: per spatial channel, a delay in units of τ plus the
/// transmission and phase picked up on the delayed path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopArray {
    /// Delay per spatial channel, non-negative integers (units of τ).
    pub delays: Vec<usize>,
    /// Amplitude transmission of each loop, applied only when `delay > 0`.
    #[serde(default = "default_ones")]
    pub transmission: Vec<f64>,
    /// Phase (radians) of each loop, applied only when `delay > 0`.
    #[serde(default)]
    pub phases: Vec<f64>,
}

fn default_ones() -> Vec<f64> {
    Vec::new()
}

impl LoopArray {
    /// Lossless, phase-free array with the given delays.
    pub fn lossless(delays: Vec<usize>) -> Self {
        Self {
            delays,
            transmission: Vec::new(),
            phases: Vec::new(),
        }
    }

    /// The experiment-style short array: delays `0, 1, ..., s−1`.
    pub fn short_array(s: usize) -> Self {
        Self::lossless((0..s).collect())
    }

    /// The experiment-style long array: delays `0, s, ..., (s−1)·s`.
    pub fn long_array(s: usize) -> Self {
        Self::lossless((0..s).map(|i| i * s).collect())
    }

    fn validate(&self, s: usize, name: &str) -> Result<()> {
        if self.delays.len() != s {
            return Err(GbsError::Dimension(format!(
                "{name}: expected {s} delays, got {}",
                self.delays.len()
            )));
        }
        for arr in [&self.transmission, &self.phases] {
            if !arr.is_empty() && arr.len() != s {
                return Err(GbsError::Dimension(format!(
                    "{name}: per-loop parameter length must be {s} (or empty for defaults)"
                )));
            }
        }
        if self.transmission.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
            return Err(GbsError::InvalidArgument(format!(
                "{name}: loop transmission outside [0,1]"
            )));
        }
        Ok(())
    }

    fn factor(&self, channel: usize) -> C64 {
        if self.delays[channel] == 0 {
            return C64::new(1.0, 0.0);
        }
        let t = self.transmission.get(channel).copied().unwrap_or(1.0);
        let phi = self.phases.get(channel).copied().unwrap_or(0.0);
        C64::new(0.0, phi).exp() * C64::new(t, 0.0)
    }

    fn max_delay(&self) -> usize {
        self.delays.iter().copied().max().unwrap_or(0)
    }
}

/// Declarative description of the spatial-temporal hybrid circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitSpec {
    pub schema_version: u32,
    /// Number of spatial channels.
    pub spatial_modes: usize,
    /// Number of input time bins.
    pub input_time_bins: usize,
    /// Input squeezing schedule, `input_time_bins × spatial_modes`;
    /// 0 means the source is off for that qumode.
    pub input_squeezing: Vec<Vec<f64>>,
    pub u1: UnitarySpec,
    pub u2: UnitarySpec,
    pub u3: UnitarySpec,
    pub loop_array_1: LoopArray,
    pub loop_array_2: LoopArray,
    /// Source, circuit, and detection intensity efficiencies, each in [0,1].
    pub efficiency_source: f64,
    pub efficiency_circuit: f64,
    pub efficiency_detection: f64,
    /// Time-bin interval in seconds (50 ns in the experiments this models).
    pub tau_seconds: f64,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        let s = self.spatial_modes;
        if s == 0 || self.input_time_bins == 0 {
            return Err(GbsError::InvalidArgument(
                "spatial_modes and input_time_bins must be ≥ 1".to_string(),
            ));
        }
        if self.input_squeezing.len() != self.input_time_bins
            || self.input_squeezing.iter().any(|r| r.len() != s)
        {
            return Err(GbsError::Dimension(format!(
                "input_squeezing must be {}x{s}",
                self.input_time_bins
            )));
        }
        if self.input_squeezing.iter().flatten().any(|&r| r < 0.0) {
            return Err(GbsError::InvalidArgument(
                "negative squeezing in input schedule".to_string(),
            ));
        }
        self.loop_array_1.validate(s, "loop_array_1")?;
        self.loop_array_2.validate(s, "loop_array_2")?;
        for (name, eta) in [
            ("efficiency_source", self.efficiency_source),
            ("efficiency_circuit", self.efficiency_circuit),
            ("efficiency_detection", self.efficiency_detection),
        ] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(GbsError::InvalidArgument(format!("{name} outside [0,1]")));
            }
        }
        if self.tau_seconds <= 0.0 {
            return Err(GbsError::InvalidArgument("tau must be positive".to_string()));
        }
        Ok(())
    }

    /// `(output_time_bins, M_out, M_in)`.
    pub fn output_geometry(&self) -> (usize, usize, usize) {
        let out_bins = self.input_time_bins
            + self.loop_array_1.max_delay()
            + self.loop_array_2.max_delay();
        (
            out_bins,
            self.spatial_modes * out_bins,
            self.spatial_modes * self.input_time_bins,
        )
    }

    /// Flattened per-qumode squeezing parameters, input-labeling order.
    pub fn input_bank(&self) -> crate::gaussian::SqueezerBank {
        let mut r = Vec::with_capacity(self.spatial_modes * self.input_time_bins);
        for bin in 0..self.input_time_bins {
            for ch in 0..self.spatial_modes {
                r.push(self.input_squeezing[bin][ch]);
            }
        }
        crate::gaussian::SqueezerBank::from_r(r).expect("validated schedule")
    }
}

/// The unrolled transfer matrix with its qumode labeling.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    pub matrix: DMatrix<C64>,
    pub spatial_modes: usize,
    pub input_time_bins: usize,
    pub output_time_bins: usize,
}

impl TransferMatrix {
    /// Flat index of `(spatial, bin)` under the bin-major labeling used for
    /// both input and output sides.
    pub fn flat_index(&self, spatial: usize, bin: usize) -> usize {
        bin * self.spatial_modes + spatial
    }

    /// Inverse of [`flat_index`](Self::flat_index).
    pub fn mode_label(&self, flat: usize) -> (usize, usize) {
        (flat % self.spatial_modes, flat / self.spatial_modes)
    }

    pub fn num_outputs(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn num_inputs(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Unrolls a circuit spec into its explicit transfer matrix:
/// `U3 ∘ L2 ∘ U2 ∘ L1 ∘ U1` lifted to time-bin-expanded modes, with the
/// per-stage scalar efficiencies folded in.
pub fn unroll(spec: &CircuitSpec) -> Result<TransferMatrix> {
    spec.validate()?;
    let s = spec.spatial_modes;
    let (out_bins, m_out, m_in) = spec.output_geometry();
    let u1 = spec.u1.materialize(s)?;
    let u2 = spec.u2.materialize(s)?;
    let u3 = spec.u3.materialize(s)?;

    // Working matrix over the full output window; input bin b sits at output
    // bin b before any delay.
    let mut w = DMatrix::<C64>::zeros(m_out, m_in);
    for bin in 0..spec.input_time_bins {
        for i in 0..s {
            for j in 0..s {
                w[(bin * s + i, bin * s + j)] = u1[(i, j)];
            }
        }
    }
    apply_loop(&mut w, &spec.loop_array_1, s, out_bins);
    apply_interferometer(&mut w, &u2, s, out_bins);
    apply_loop(&mut w, &spec.loop_array_2, s, out_bins);
    apply_interferometer(&mut w, &u3, s, out_bins);

    let eta = spec.efficiency_source * spec.efficiency_circuit * spec.efficiency_detection;
    let amp = C64::new(eta.sqrt(), 0.0);
    for z in w.iter_mut() {
        *z *= amp;
    }
    Ok(TransferMatrix {
        matrix: w,
        spatial_modes: s,
        input_time_bins: spec.input_time_bins,
        output_time_bins: out_bins,
    })
}

/// Shifts channel rows forward in time by the loop delays, scaling delayed
/// paths by the loop factor. Rows are moved within the preallocated window.
fn apply_loop(w: &mut DMatrix<C64>, array: &LoopArray, s: usize, out_bins: usize) {
    for ch in 0..s {
        let d = array.delays[ch];
        if d == 0 {
            continue;
        }
        let f = array.factor(ch);
        // Move from latest bin backwards so rows are not overwritten.
        for bin in (0..out_bins).rev() {
            let src = bin * s + ch;
            if bin + d < out_bins {
                let dst = (bin + d) * s + ch;
                for col in 0..w.ncols() {
                    w[(dst, col)] = f * w[(src, col)];
                }
            }
            for col in 0..w.ncols() {
                w[(src, col)] = C64::new(0.0, 0.0);
            }
        }
    }
}

fn apply_interferometer(w: &mut DMatrix<C64>, u: &DMatrix<C64>, s: usize, out_bins: usize) {
    let mut scratch = vec![C64::new(0.0, 0.0); s];
    for bin in 0..out_bins {
        for col in 0..w.ncols() {
            for (i, slot) in scratch.iter_mut().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..s {
                    acc += u[(i, j)] * w[(bin * s + j, col)];
                }
                *slot = acc;
            }
            for (i, slot) in scratch.iter().enumerate() {
                w[(bin * s + i, col)] = *slot;
            }
        }
    }
}

/// Number of output modes structurally reachable from one input mode: the
/// count of non-negligible entries in that transfer-matrix column.
pub fn connectivity_count(spec: &CircuitSpec, spatial: usize, bin: usize) -> Result<usize> {
    let t = unroll(spec)?;
    let col = t.flat_index(spatial, bin);
    if col >= t.num_inputs() {
        return Err(GbsError::InvalidArgument(format!(
            "input mode ({spatial},{bin}) out of range"
        )));
    }
    let cmax = t.matrix.column(col).camax();
    Ok(t.matrix
        .column(col)
        .iter()
        .filter(|z| z.norm() > 1e-12 * cmax.max(1e-300))
        .count())
}

/// Haar-distributed `s×s` random unitary, deterministic per seed (QR of a
/// complex Ginibre matrix with the phase convention fixed).
pub fn random_interferometer(s: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = stage_rng(seed, "haar-interferometer");
    let mut g = DMatrix::<C64>::zeros(s, s);
    for z in g.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z = C64::new(re, im);
    }
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // Fix the phase ambiguity: make diag(R) real positive.
    for j in 0..s {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / C64::new(d.norm(), 0.0);
            for i in 0..s {
                q[(i, j)] *= phase.conj();
            }
        }
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn basic_spec(s: usize, bins: usize) -> CircuitSpec {
        CircuitSpec {
            schema_version: 1,
            spatial_modes: s,
            input_time_bins: bins,
            input_squeezing: vec![vec![0.5; s]; bins],
            u1: UnitarySpec::Identity,
            u2: UnitarySpec::Identity,
            u3: UnitarySpec::Identity,
            loop_array_1: LoopArray::lossless(vec![0; s]),
            loop_array_2: LoopArray::lossless(vec![0; s]),
            efficiency_source: 1.0,
            efficiency_circuit: 1.0,
            efficiency_detection: 1.0,
            tau_seconds: 50e-9,
        }
    }

    #[test]
    fn trivial_circuit_is_identity() {
        let t = unroll(&basic_spec(1, 1)).unwrap();
        assert_eq!(t.num_outputs(), 1);
        assert_relative_eq!(t.matrix[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn single_delay_shifts_one_bin() {
        let mut spec = basic_spec(2, 1);
        spec.loop_array_1 = LoopArray::lossless(vec![0, 1]);
        let t = unroll(&spec).unwrap();
        assert_eq!(t.output_time_bins, 2);
        // Photon entering spatial 1 (second channel) exits one bin late.
        assert_relative_eq!(t.matrix[(t.flat_index(0, 0), 0)].re, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            t.matrix[(t.flat_index(1, 1), t.flat_index(1, 0))].re,
            1.0,
            epsilon = 1e-12
        );
        // Nothing exits spatial 1 in bin 0.
        assert_relative_eq!(
            t.matrix[(t.flat_index(1, 0), t.flat_index(1, 0))].norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn frontier_geometry_counts() {
        let s = 16;
        let mut spec = basic_spec(s, 16);
        spec.loop_array_1 = LoopArray::short_array(s);
        spec.loop_array_2 = LoopArray::long_array(s);
        let (bins, m_out, m_in) = spec.output_geometry();
        assert_eq!(bins, 16 + 15 + 15 * 16);
        assert_eq!(m_out, 4336);
        assert_eq!(m_in, 256);

        spec.input_time_bins = 64;
        spec.input_squeezing = vec![vec![0.5; s]; 64];
        let (_, _, m_in) = spec.output_geometry();
        assert_eq!(m_in, 1024);
    }

    #[test]
    fn lossless_unroll_is_unitary_on_columns() {
        let mut spec = basic_spec(3, 2);
        spec.u1 = UnitarySpec::Haar { seed: 1 };
        spec.u2 = UnitarySpec::Haar { seed: 2 };
        spec.u3 = UnitarySpec::Haar { seed: 3 };
        spec.loop_array_1 = LoopArray::short_array(3);
        spec.loop_array_2 = LoopArray::long_array(3);
        let t = unroll(&spec).unwrap();
        let gram = t.matrix.adjoint() * &t.matrix;
        let id = DMatrix::<C64>::identity(t.num_inputs(), t.num_inputs());
        assert!((gram - id).camax() < 1e-9);
    }

    #[test]
    fn composition_matches_manual_lift() {
        // U2 = U3 = I, no loop 2: result is the lift of U1 followed by the
        // loop-1 permutation with its factors.
        let s = 3;
        let mut spec = basic_spec(s, 2);
        spec.u1 = UnitarySpec::Haar { seed: 9 };
        spec.loop_array_1 = LoopArray {
            delays: vec![0, 2, 1],
            transmission: vec![1.0, 0.9, 0.8],
            phases: vec![0.0, 0.3, -0.2],
        };
        let t = unroll(&spec).unwrap();
        let u1 = spec.u1.materialize(s).unwrap();
        for in_bin in 0..2 {
            for j in 0..s {
                for i in 0..s {
                    let d = spec.loop_array_1.delays[i];
                    let f = spec.loop_array_1.factor(i);
                    let got = t.matrix[(t.flat_index(i, in_bin + d), t.flat_index(j, in_bin))];
                    let want = f * u1[(i, j)];
                    assert_relative_eq!(got.re, want.re, epsilon = 1e-12);
                    assert_relative_eq!(got.im, want.im, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn connectivity_cubic_scaling_small() {
        let s = 2;
        let mut spec = basic_spec(s, 1);
        spec.u1 = UnitarySpec::Haar { seed: 4 };
        spec.u2 = UnitarySpec::Haar { seed: 5 };
        spec.u3 = UnitarySpec::Haar { seed: 6 };
        spec.loop_array_1 = LoopArray::lossless(vec![0, 1]);
        spec.loop_array_2 = LoopArray::lossless(vec![0, 2]);
        assert_eq!(connectivity_count(&spec, 0, 0).unwrap(), 8);
    }

    #[test]
    fn connectivity_cubic_scaling_frontier() {
        let s = 16;
        let mut spec = basic_spec(s, 1);
        spec.u1 = UnitarySpec::Haar { seed: 10 };
        spec.u2 = UnitarySpec::Haar { seed: 11 };
        spec.u3 = UnitarySpec::Haar { seed: 12 };
        spec.loop_array_1 = LoopArray::short_array(s);
        spec.loop_array_2 = LoopArray::long_array(s);
        assert_eq!(connectivity_count(&spec, 0, 0).unwrap(), 4096);
    }

    #[test]
    fn haar_unitary_properties() {
        let u = random_interferometer(1, 42);
        assert_relative_eq!(u[(0, 0)].norm(), 1.0, epsilon = 1e-12);

        let u8a = random_interferometer(8, 1);
        let gram = u8a.adjoint() * &u8a;
        assert!((gram - DMatrix::<C64>::identity(8, 8)).camax() < 1e-12);

        assert_eq!(random_interferometer(4, 7), random_interferometer(4, 7));
    }

    #[test]
    fn haar_first_moment() {
        // mean |U_00|^2 over draws should be 1/s within 3σ.
        let s = 8;
        let n = 10_000;
        let mut acc = 0.0;
        for seed in 0..n {
            acc += random_interferometer(s, seed as u64)[(0, 0)].norm_sqr();
        }
        let mean = acc / n as f64;
        // Var(|U_00|²) = 1/s² · (s−1)/(s+1) approximately; 3σ band.
        let sigma = (1.0 / (s * s) as f64 / n as f64).sqrt();
        assert!((mean - 1.0 / s as f64).abs() < 3.5 * sigma, "mean {mean}");
    }

    #[test]
    fn labeling_round_trip() {
        let t = unroll(&basic_spec(3, 2)).unwrap();
        for flat in 0..t.num_inputs() {
            let (sp, bin) = t.mode_label(flat);
            assert_eq!(t.flat_index(sp, bin), flat);
        }
    }
}
