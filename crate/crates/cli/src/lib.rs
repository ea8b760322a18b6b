//! Experiment orchestration for the desk-scale GBS laboratory.
//!
//! The library exposes the configuration schema ([`config`]) and the staged
//! pipeline ([`pipeline`]); the `gbs-cli` binary is a thin command-line
//! front-end over [`pipeline::run`] and [`pipeline::verify`].
//!
//! Determinism contract: given a config file (which fixes the root seed),
//! every emitted byte is reproducible except the wall-clock timestamp, which
//! is confined to `manifest.json`. All randomness is derived from the root
//! seed through labeled counter-based streams, so results do not depend on
//! thread count or scheduling.

pub mod config;
pub mod pipeline;

pub use config::{load_config, ExperimentConfig, LoadedConfig};
pub use pipeline::{exit_code, run, verify, RunOutput, Stage, VerifyReport};
