//! Shared fixtures for the CLI integration tests.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};

/// The 3-mode golden experiment: one time bin, three squeezed channels, a
/// seeded Haar interferometer, uniform efficiencies, every pipeline stage on.
pub fn golden_config() -> Value {
    json!({
        "schema_version": 1,
        "experiment_id": "golden-3mode",
        "seed": 4242,
        "circuit": {
            "schema_version": 1,
            "spatial_modes": 3,
            "input_time_bins": 1,
            "input_squeezing": [[1.0, 0.8, 0.6]],
            "u1": {"source": "haar", "seed": 7},
            "u2": {"source": "identity"},
            "u3": {"source": "identity"},
            "loop_array_1": {"delays": [0, 0, 0]},
            "loop_array_2": {"delays": [0, 0, 0]},
            "efficiency_source": 0.9,
            "efficiency_circuit": 0.85,
            "efficiency_detection": 0.8,
            "tau_seconds": 50e-9
        },
        "samplers": [
            {"sampler": "exact", "count": 3000},
            {"sampler": "squashed", "count": 3000}
        ],
        "mps": {"chi": 8, "samples": 3000, "baseline": true},
        "validation": {"orders": [2], "adversary": "squashed"},
        "cost": {"chi_sweep": [1, 2, 3, 4, 6, 8], "eps_target": 1e-3, "local_dim": 10},
        "output_dir": "out"
    })
}

/// Writes a config value to `dir/config.json` and returns its path.
pub fn write_config(dir: &Path, config: &Value) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path
}

/// All files in a directory as (name, bytes), sorted by name.
pub fn dir_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
