//! Config-driven experiment orchestration.

pub mod config;
pub mod ensemble;
pub mod offline;
pub mod study;
pub mod sweep;
pub mod table;
pub mod visual;

use std::path::PathBuf;

use crate::error::Result;
use crate::flow::write_snapshot_file;

pub use config::{Case, Component, ExperimentConfig, Problem};
pub use ensemble::{build_ensemble, Ensemble};
pub use offline::{run_offline, Manifest, OfflineArtifacts};
pub use study::{depth_vs_gridsize_study, run_param_study, DepthRow, ParamRow};
pub use sweep::{run_shot_sweep, single_readout, SweepResult};
pub use visual::{emit_visual_comparison, stream_function, MethodReports};

/// Build the ensemble and write it as snapshot files under `snapshots/`.
pub fn run_solve(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let e = build_ensemble(cfg)?;
    let dir = cfg.output_dir.join("snapshots");
    std::fs::create_dir_all(&dir)?;
    let files = [
        (dir.join("ensemble_ux.pods"), e.ux),
        (dir.join("ensemble_uy.pods"), e.uy),
        (dir.join("target_ux.pods"), vec![e.target_ux]),
        (dir.join("target_uy.pods"), vec![e.target_uy]),
    ];
    let mut out = Vec::new();
    for (path, fields) in files {
        write_snapshot_file(&fields, &path)?;
        out.push(path);
    }
    Ok(out)
}

/// One readout per configured method of both components at `readout_shots`, first seed.
pub fn run_readouts(cfg: &ExperimentConfig, art: &OfflineArtifacts) -> Result<Vec<MethodReports>> {
    let seed = cfg.seeds[0];
    cfg.methods
        .iter()
        .map(|&method| {
            Ok(MethodReports {
                method,
                ux: single_readout(cfg, art, method, Component::Ux, cfg.readout_shots, seed)?,
                uy: single_readout(cfg, art, method, Component::Uy, cfg.readout_shots, seed)?,
            })
        })
        .collect()
}
