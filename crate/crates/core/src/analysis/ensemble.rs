//! Builds the training ensemble and the target field for a config.

use crate::error::{Error, Result, StageContext};
use crate::flow::{read_snapshot_csv, read_snapshot_file, solve_cavity_sweep, Field2D, TransientGenerator};

use super::config::{Component, ComponentFiles, EnsembleSpec, ExperimentConfig, TargetSpec};

/// Training fields and the held-out target, both components.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub labels: Vec<f64>,
    pub ux: Vec<Field2D>,
    pub uy: Vec<Field2D>,
    pub target_label: f64,
    pub target_ux: Field2D,
    pub target_uy: Field2D,
}

impl Ensemble {
    pub fn fields(&self, c: Component) -> &[Field2D] {
        match c {
            Component::Ux => &self.ux,
            Component::Uy => &self.uy,
        }
    }

    pub fn target(&self, c: Component) -> &Field2D {
        match c {
            Component::Ux => &self.target_ux,
            Component::Uy => &self.target_uy,
        }
    }
}

pub fn build_ensemble(cfg: &ExperimentConfig) -> Result<Ensemble> {
    let labels = cfg.ensemble_labels();
    let target_label = cfg.target.label();
    let (nx, ny) = (cfg.grid.nx, cfg.grid.ny);
    match (&cfg.ensemble, &cfg.target) {
        (EnsembleSpec::Reynolds(_), TargetSpec::Reynolds(_)) => {
            let mut all = labels.clone();
            all.push(target_label);
            let (ux, uy) = solve_cavity_fields(&all, nx, ny, cfg)?;
            let (mut ux, mut uy) = (ux, uy);
            let (target_ux, target_uy) = (ux.pop().expect("target"), uy.pop().expect("target"));
            Ok(Ensemble { labels, ux, uy, target_label, target_ux, target_uy })
        }
        (EnsembleSpec::Steps(w), TargetSpec::Step(t)) => {
            let gen = TransientGenerator::new(nx, ny, cfg.transient.period, cfg.transient.seed)?;
            let (ux, uy) = w.steps().into_iter().map(|s| gen.field_at(s)).unzip();
            let (target_ux, target_uy) = gen.field_at(*t);
            Ok(Ensemble { labels, ux, uy, target_label, target_ux, target_uy })
        }
        (EnsembleSpec::Files { files, .. }, TargetSpec::Files { files: tf, .. }) => {
            let ux = load_fields(&files.ux).stage("loading ux ensemble")?;
            let uy = load_fields(&files.uy).stage("loading uy ensemble")?;
            if ux.len() != labels.len() || uy.len() != labels.len() {
                return Err(Error::Config(format!(
                    "{} labels for {} ux and {} uy snapshots",
                    labels.len(),
                    ux.len(),
                    uy.len()
                )));
            }
            let (target_ux, target_uy) = load_target(tf)?;
            let e = Ensemble { labels, ux, uy, target_label, target_ux, target_uy };
            check_shapes(&e, nx, ny)?;
            Ok(e)
        }
        _ => Err(Error::Config("ensemble and target kinds do not match".into())),
    }
}

/// Steady cavity fields for `reynolds`, solved in ascending order with warm
/// starts and returned in input order.
pub fn solve_cavity_fields(
    reynolds: &[f64],
    nx: usize,
    ny: usize,
    cfg: &ExperimentConfig,
) -> Result<(Vec<Field2D>, Vec<Field2D>)> {
    let mut order: Vec<usize> = (0..reynolds.len()).collect();
    order.sort_by(|&a, &b| reynolds[a].total_cmp(&reynolds[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| reynolds[i]).collect();
    let sols = solve_cavity_sweep(&sorted, nx, ny, cfg.solver.tol, cfg.solver.max_iters).stage("cavity solve")?;
    let mut ux = vec![Field2D::zeros(nx, ny); reynolds.len()];
    let mut uy = ux.clone();
    for (sol, &i) in sols.into_iter().zip(&order) {
        ux[i] = sol.ux;
        uy[i] = sol.uy;
    }
    Ok((ux, uy))
}

fn load_fields(paths: &[std::path::PathBuf]) -> Result<Vec<Field2D>> {
    let mut out = Vec::new();
    for p in paths {
        let stage = format!("reading {}", p.display());
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            out.push(read_snapshot_csv(p).stage(&stage)?);
        } else {
            out.extend(read_snapshot_file(p).stage(&stage)?);
        }
    }
    Ok(out)
}

fn load_target(files: &ComponentFiles) -> Result<(Field2D, Field2D)> {
    let mut ux = load_fields(&files.ux).stage("loading ux target")?;
    let mut uy = load_fields(&files.uy).stage("loading uy target")?;
    if ux.len() != 1 || uy.len() != 1 {
        return Err(Error::Config("target files must hold exactly one snapshot per component".into()));
    }
    Ok((ux.remove(0), uy.remove(0)))
}

fn check_shapes(e: &Ensemble, nx: usize, ny: usize) -> Result<()> {
    let all = e.ux.iter().chain(&e.uy).chain([&e.target_ux, &e.target_uy]);
    for f in all {
        if f.nx() != nx || f.ny() != ny {
            return Err(Error::Config(format!(
                "ingested field is {}x{}, config grid is {nx}x{ny}",
                f.nx(),
                f.ny()
            )));
        }
    }
    Ok(())
}
