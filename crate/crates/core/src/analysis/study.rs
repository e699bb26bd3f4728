//! Parameter studies: projection error across a parameter sweep, and circuit
//! depth across grid sizes.

use std::path::PathBuf;

use rayon::prelude::*;

use crate::circuit::{circuit_cost, CircuitCost};
use crate::error::{Error, Result, StageContext};
use crate::flow::{Field2D, TransientGenerator};
use crate::linalg::scaled;
use crate::pod::{exact_projection_error, select_nb};

use super::config::{Case, Component, EnsembleSpec, ExperimentConfig, Grid, Problem};
use super::ensemble::{build_ensemble, solve_cavity_fields};
use super::offline::{build_component, OfflineArtifacts};
use super::table::{fmt_f64, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct ParamRow {
    pub component: Component,
    pub parameter: f64,
    pub in_ensemble: bool,
    pub n_b_case1: usize,
    pub e_proj_case1: f64,
    pub n_b_case2: usize,
    pub e_proj_case2: f64,
}

/// Parameters studied when the config gives none: Re 50..=1050 in steps of 50
/// for the cavity, the training window plus 100 later steps for the transient.
pub fn default_param_sweep(cfg: &ExperimentConfig) -> Result<Vec<f64>> {
    if let Some(p) = &cfg.param_sweep {
        return Ok(p.clone());
    }
    match &cfg.ensemble {
        EnsembleSpec::Reynolds(_) => Ok((1..=21).map(|k| 50.0 * k as f64).collect()),
        EnsembleSpec::Steps(w) => Ok((w.start..=w.end + 100).map(|s| s as f64).collect()),
        EnsembleSpec::Files { .. } => {
            Err(Error::Config("ingested problems have no generator; the parameter study needs one".into()))
        }
    }
}

/// Fields at `params`, reusing training snapshots for in-ensemble parameters.
fn study_fields(
    cfg: &ExperimentConfig,
    art: &OfflineArtifacts,
    params: &[f64],
) -> Result<Vec<(bool, Field2D, Field2D)>> {
    let labels = &art.ensemble.labels;
    let position = |p: f64| labels.iter().position(|&l| l == p);
    let fresh: Vec<f64> = params.iter().copied().filter(|&p| position(p).is_none()).collect();
    let (fux, fuy) = match cfg.problem {
        Problem::Cavity => solve_cavity_fields(&fresh, cfg.grid.nx, cfg.grid.ny, cfg)?,
        Problem::Transient => {
            let gen = TransientGenerator::new(cfg.grid.nx, cfg.grid.ny, cfg.transient.period, cfg.transient.seed)?;
            let mut ux = Vec::new();
            let mut uy = Vec::new();
            for &p in &fresh {
                if p < 0.0 || p.fract() != 0.0 {
                    return Err(Error::Config(format!("time step {p} is not a nonnegative integer")));
                }
                let (a, b) = gen.field_at(p as u64);
                ux.push(a);
                uy.push(b);
            }
            (ux, uy)
        }
        Problem::Ingested => return Err(Error::Config("ingested problems have no generator".into())),
    };
    let (mut fux, mut fuy) = (fux.into_iter(), fuy.into_iter());
    Ok(params
        .iter()
        .map(|&p| match position(p) {
            Some(j) => (true, art.ensemble.ux[j].clone(), art.ensemble.uy[j].clone()),
            None => (false, fux.next().expect("one per fresh"), fuy.next().expect("one per fresh")),
        })
        .collect())
}

/// Exact projection error at the Case-1 and Case-2 `n_b` for every parameter.
pub fn run_param_study(cfg: &ExperimentConfig, art: &OfflineArtifacts, params: &[f64]) -> Result<Vec<ParamRow>> {
    let fields = study_fields(cfg, art, params).stage("parameter study fields")?;
    let mut rows = Vec::new();
    for &c in &cfg.components {
        let basis = &art.component(c)?.basis;
        let nb1 = select_nb(&basis.sigma, basis.m(), Case::Case1.thresholds().proj);
        let nb2 = select_nb(&basis.sigma, basis.m(), Case::Case2.thresholds().proj);
        for (&p, (in_ensemble, ux, uy)) in params.iter().zip(&fields) {
            let f = if c == Component::Ux { ux } else { uy };
            let norm = f.norm();
            if norm == 0.0 {
                return Err(Error::ZeroVector).stage(&format!("{} field at parameter {p}", c.name()));
            }
            let x = scaled(f.values(), 1.0 / norm);
            rows.push(ParamRow {
                component: c,
                parameter: p,
                in_ensemble: *in_ensemble,
                n_b_case1: nb1,
                e_proj_case1: exact_projection_error(&x, basis, nb1)?,
                n_b_case2: nb2,
                e_proj_case2: exact_projection_error(&x, basis, nb2)?,
            });
        }
    }
    Ok(rows)
}

pub fn param_table(rows: &[ParamRow]) -> Table {
    let mut t = Table::new(&[
        "component",
        "parameter",
        "in_ensemble",
        "n_b_case1",
        "e_proj_case1",
        "n_b_case2",
        "e_proj_case2",
    ]);
    for r in rows {
        t.push(vec![
            r.component.name().to_string(),
            fmt_f64(r.parameter),
            r.in_ensemble.to_string(),
            r.n_b_case1.to_string(),
            fmt_f64(r.e_proj_case1),
            r.n_b_case2.to_string(),
            fmt_f64(r.e_proj_case2),
        ]);
    }
    t
}

pub fn write_param_study(cfg: &ExperimentConfig, rows: &[ParamRow]) -> Result<PathBuf> {
    let path = cfg.output_dir.join("param_study.csv");
    param_table(rows).write(&path, &cfg.config_hash())?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthRow {
    /// Grid points `N`.
    pub n: usize,
    pub component: Component,
    pub n_b: usize,
    pub chis: Vec<usize>,
    /// Cost of the `n_b`-th basis.
    pub cost: CircuitCost,
    /// Largest depth over all selected bases.
    pub max_depth: u64,
}

/// Offline pipeline at Case-2 thresholds on `side x side` grids, reporting the
/// circuit cost of the `n_b`-th basis of each component.
pub fn depth_vs_gridsize_study(cfg: &ExperimentConfig, sides: &[usize]) -> Result<Vec<DepthRow>> {
    if cfg.problem == Problem::Ingested {
        return Err(Error::Config("the depth study regenerates the ensemble and needs a generator".into()));
    }
    let th = Case::Case2.thresholds();
    let per_grid = sides
        .par_iter()
        .map(|&side| {
            let mut grid_cfg = cfg.clone();
            grid_cfg.grid = Grid { nx: side, ny: side };
            let stage = format!("depth study at {side}x{side}");
            let ensemble = build_ensemble(&grid_cfg).stage(&stage)?;
            let mut rows = Vec::new();
            for &c in &cfg.components {
                let a = build_component(ensemble.fields(c), &ensemble.labels, th.proj, th.enc, cfg.chi_cap, c)
                    .stage(&stage)?;
                let costs: Vec<CircuitCost> = a.approximants.iter().map(circuit_cost).collect();
                let max_depth = costs.iter().map(|k| k.depth).max().unwrap_or(0);
                rows.push(DepthRow {
                    n: side * side,
                    component: c,
                    n_b: a.basis.n_b,
                    chis: a.plan.chis.clone(),
                    cost: costs.last().cloned().expect("n_b >= 1"),
                    max_depth,
                });
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_grid.into_iter().flatten().collect())
}

pub fn depth_table(rows: &[DepthRow]) -> Table {
    let mut t = Table::new(&["N", "component", "n_b", "chi_list", "two_qubit_gates", "depth", "max_depth"]);
    for r in rows {
        let chis: Vec<String> = r.chis.iter().map(|c| c.to_string()).collect();
        t.push(vec![
            r.n.to_string(),
            r.component.name().to_string(),
            r.n_b.to_string(),
            chis.join(";"),
            r.cost.two_qubit_gates.to_string(),
            r.cost.depth.to_string(),
            r.max_depth.to_string(),
        ]);
    }
    t
}

pub fn write_depth_study(cfg: &ExperimentConfig, rows: &[DepthRow]) -> Result<PathBuf> {
    let path = cfg.output_dir.join("depth_study.csv");
    depth_table(rows).write(&path, &cfg.config_hash())?;
    Ok(path)
}
