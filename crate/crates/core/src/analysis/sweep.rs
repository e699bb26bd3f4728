//! Online readouts: single reports and the full methods x shots x seeds sweep.

use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result, StageContext};
use crate::linalg::{median, scaled};
use crate::readout::{fsr_readout, podr_readout, rsr_readout, Method, ReadoutReport, Sampling};
use crate::rng::cell_seed;

use super::config::{Component, ExperimentConfig};
use super::offline::OfflineArtifacts;
use super::table::{fmt_f64, fmt_opt, fmt_opt_f64, Table};

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Least common multiple of the basis counts.
pub fn shot_quantum(n_bs: &[usize]) -> u64 {
    n_bs.iter().fold(1u64, |acc, &n| {
        let n = n.max(1) as u64;
        acc / gcd(acc, n) * n
    })
}

/// Largest multiple of `quantum` not above `requested`, or `None` when there is none.
pub fn round_shots(requested: u64, quantum: u64) -> Option<u64> {
    let used = requested - requested % quantum;
    (used > 0).then_some(used)
}

/// Unit-norm target vector for a component.
pub fn target_vector(art: &OfflineArtifacts, c: Component) -> Result<Vec<f64>> {
    let f = art.ensemble.target(c);
    let n = f.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector).stage(&format!("{} target", c.name()));
    }
    Ok(scaled(f.values(), 1.0 / n))
}

/// Seed for one readout cell.
pub fn readout_seed(base: u64, method: Method, component: Component, n_shot_total: u64) -> u64 {
    let m = Method::ALL.iter().position(|&x| x == method).expect("listed") as u64;
    cell_seed(base, &[m, component.index(), n_shot_total])
}

/// One readout of `component` with `method`. PODR budgets that do not divide
/// by `n_b` are rounded down with a logged note.
pub fn single_readout(
    cfg: &ExperimentConfig,
    art: &OfflineArtifacts,
    method: Method,
    component: Component,
    n_shot_total: u64,
    seed: u64,
) -> Result<ReadoutReport> {
    let x = target_vector(art, component)?;
    let sampling = Sampling::shots(n_shot_total, readout_seed(seed, method, component, n_shot_total));
    let stage = format!("{method} readout of {}", component.name());
    match method {
        Method::Podr => {
            let a = art.component(component)?;
            let n_b = a.approximants.len();
            let used = round_shots(n_shot_total, n_b as u64)
                .ok_or(Error::IndivisibleShots { total: n_shot_total, n_b })
                .stage(&stage)?;
            if used != n_shot_total {
                log::info!("PODR budget {n_shot_total} rounded down to {used} (multiple of n_b = {n_b})");
            }
            let sampling = Sampling { n_shot_total: used, ..sampling };
            podr_readout(&x, &a.basis, &a.approximants, sampling, cfg.beta, None).stage(&stage)
        }
        Method::Rsr => rsr_readout(&x, sampling, cfg.sign_oracle).stage(&stage),
        Method::Fsr => fsr_readout(&x, cfg.grid.nx, cfg.grid.ny, cfg.fsr_cutoff, sampling).stage(&stage),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub component: Component,
    pub n: usize,
    pub seed: u64,
    pub report: ReadoutReport,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub method: Method,
    pub component: Component,
    pub n_shot_total: u64,
    pub median_epsilon: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub medians: Vec<MedianRow>,
}

impl SweepResult {
    /// `(n_shot_total, median epsilon)` points of one curve.
    pub fn curve(&self, method: Method, component: Component) -> Vec<(u64, f64)> {
        self.medians
            .iter()
            .filter(|m| m.method == method && m.component == component)
            .map(|m| (m.n_shot_total, m.median_epsilon))
            .collect()
    }

    pub fn rows_table(&self) -> Table {
        let mut t = Table::new(&[
            "method",
            "component",
            "N",
            "n_shot_total",
            "n_b",
            "seed",
            "epsilon",
            "e_proj",
            "e_enc",
            "e_sam_bound",
            "kept_modes",
            "wall_ms",
        ]);
        for r in &self.rows {
            let b = r.report.budget;
            t.push(vec![
                r.method.to_string(),
                r.component.name().to_string(),
                r.n.to_string(),
                r.report.n_shot_total.to_string(),
                fmt_opt(r.report.n_b),
                r.seed.to_string(),
                fmt_f64(r.report.epsilon),
                fmt_opt_f64(b.map(|b| b.e_proj)),
                fmt_opt_f64(b.map(|b| b.e_enc)),
                fmt_opt_f64(b.map(|b| b.e_sam_bound)),
                fmt_opt(r.report.kept_modes),
                fmt_f64(r.wall_ms),
            ]);
        }
        t
    }

    pub fn medians_table(&self) -> Table {
        let mut t = Table::new(&["method", "component", "n_shot_total", "median_epsilon", "samples"]);
        for m in &self.medians {
            t.push(vec![
                m.method.to_string(),
                m.component.name().to_string(),
                m.n_shot_total.to_string(),
                fmt_f64(m.median_epsilon),
                m.samples.to_string(),
            ]);
        }
        t
    }
}

/// Shot budgets actually used for each requested grid value: the largest
/// multiple of the LCM of the components' `n_b`, so every method and component
/// shares the same total and PODR splits it evenly.
pub fn shot_schedule(cfg: &ExperimentConfig, art: &OfflineArtifacts) -> Result<Vec<u64>> {
    let n_bs: Vec<usize> = cfg
        .components
        .iter()
        .map(|&c| art.component(c).map(|a| a.approximants.len()))
        .collect::<Result<_>>()?;
    let q = if cfg.methods.contains(&Method::Podr) { shot_quantum(&n_bs) } else { 1 };
    cfg.shot_grid
        .iter()
        .map(|&s| {
            let used = round_shots(s, q).ok_or(Error::IndivisibleShots { total: s, n_b: q as usize })?;
            if used != s {
                log::info!("shot budget {s} rounded down to {used} (multiple of {q})");
            }
            Ok(used)
        })
        .collect()
}

pub fn run_shot_sweep(cfg: &ExperimentConfig, art: &OfflineArtifacts) -> Result<SweepResult> {
    let shots = shot_schedule(cfg, art)?;
    let mut cells = Vec::new();
    for &method in &cfg.methods {
        for &component in &cfg.components {
            for &s in &shots {
                for &seed in &cfg.seeds {
                    cells.push((method, component, s, seed));
                }
            }
        }
    }
    let rows = cells
        .par_iter()
        .map(|&(method, component, s, seed)| {
            let start = Instant::now();
            let report = single_readout(cfg, art, method, component, s, seed)?;
            let wall_ms = if cfg.record_timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
            Ok(SweepRow { method, component, n: cfg.grid.n(), seed, report, wall_ms })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut medians = Vec::new();
    for chunk in rows.chunks(cfg.seeds.len()) {
        let eps: Vec<f64> = chunk.iter().map(|r| r.report.epsilon).collect();
        let first = &chunk[0];
        medians.push(MedianRow {
            method: first.method,
            component: first.component,
            n_shot_total: first.report.n_shot_total,
            median_epsilon: median(&eps),
            samples: eps.len(),
        });
    }
    Ok(SweepResult { rows, medians })
}

/// Write `sweep.csv` and `sweep_medians.csv` under the output directory.
pub fn write_sweep(cfg: &ExperimentConfig, result: &SweepResult) -> Result<(PathBuf, PathBuf)> {
    let hash = cfg.config_hash();
    let rows = cfg.output_dir.join("sweep.csv");
    let med = cfg.output_dir.join("sweep_medians.csv");
    result.rows_table().write(&rows, &hash)?;
    result.medians_table().write(&med, &hash)?;
    Ok((rows, med))
}
