//! Experiment configuration: a single JSON document, unknown keys rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::readout::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Cavity,
    Transient,
    Ingested,
}

/// Threshold pair for the projection and encoding estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Case1,
    Case2,
}

impl Case {
    pub fn thresholds(self) -> Thresholds {
        match self {
            Case::Case1 => Thresholds { proj: 5e-3, enc: 5e-3 },
            Case::Case2 => Thresholds { proj: 1e-3, enc: 1e-3 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub proj: f64,
    pub enc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Ux,
    Uy,
}

impl Component {
    pub const BOTH: [Component; 2] = [Component::Ux, Component::Uy];

    pub fn name(self) -> &'static str {
        match self {
            Component::Ux => "ux",
            Component::Uy => "uy",
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Component::Ux => 0,
            Component::Uy => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn n(&self) -> usize {
        self.nx * self.ny
    }
}

/// Inclusive step window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepWindow {
    pub start: u64,
    pub end: u64,
}

impl StepWindow {
    pub fn steps(&self) -> Vec<u64> {
        (self.start..=self.end).collect()
    }
}

/// Snapshot files for the two velocity components. `.pods` files hold many
/// snapshots; `.csv` files hold one each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFiles {
    pub ux: Vec<PathBuf>,
    pub uy: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleSpec {
    Reynolds(Vec<f64>),
    Steps(StepWindow),
    Files { files: ComponentFiles, labels: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Reynolds(f64),
    Step(u64),
    Files { files: ComponentFiles, label: f64 },
}

impl TargetSpec {
    pub fn label(&self) -> f64 {
        match self {
            TargetSpec::Reynolds(r) => *r,
            TargetSpec::Step(s) => *s as f64,
            TargetSpec::Files { label, .. } => *label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self { tol: 1e-6, max_iters: 200_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransientSettings {
    pub period: u64,
    pub seed: u64,
}

impl Default for TransientSettings {
    fn default() -> Self {
        Self { period: 50, seed: 7 }
    }
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_shot_grid() -> Vec<u64> {
    vec![1_000, 10_000, 100_000, 1_000_000]
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

fn default_components() -> Vec<Component> {
    Component::BOTH.to_vec()
}

fn default_beta() -> f64 {
    2.0
}

fn default_chi_cap() -> usize {
    16
}

fn default_fsr_cutoff() -> f64 {
    1e-3
}

fn default_true() -> bool {
    true
}

fn default_readout_shots() -> u64 {
    10_000
}

fn default_depth_grids() -> Vec<usize> {
    vec![32, 64, 128]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    pub grid: Grid,
    pub ensemble: EnsembleSpec,
    pub target: TargetSpec,
    pub case: Case,
    #[serde(default = "default_components")]
    pub components: Vec<Component>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_shot_grid")]
    pub shot_grid: Vec<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Largest bond dimension the search may assign.
    #[serde(default = "default_chi_cap")]
    pub chi_cap: usize,
    #[serde(default = "default_fsr_cutoff")]
    pub fsr_cutoff: f64,
    #[serde(default = "default_true")]
    pub sign_oracle: bool,
    /// Shot budget for single readouts and the visual comparison.
    #[serde(default = "default_readout_shots")]
    pub readout_shots: u64,
    /// Parameters for the projection-error study; defaults depend on the problem.
    #[serde(default)]
    pub param_sweep: Option<Vec<f64>>,
    /// Grid sides for the depth study.
    #[serde(default = "default_depth_grids")]
    pub depth_grids: Vec<usize>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub transient: TransientSettings,
    /// Record wall-clock times in sweep CSVs. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn thresholds(&self) -> Thresholds {
        self.case.thresholds()
    }

    /// Labels of the training ensemble.
    pub fn ensemble_labels(&self) -> Vec<f64> {
        match &self.ensemble {
            EnsembleSpec::Reynolds(r) => r.clone(),
            EnsembleSpec::Steps(w) => w.steps().iter().map(|&s| s as f64).collect(),
            EnsembleSpec::Files { labels, .. } => labels.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        for d in [self.grid.nx, self.grid.ny] {
            if !d.is_power_of_two() || d < 4 {
                return bad(format!("grid side {d} must be a power of two of at least 4"));
            }
        }
        match (&self.problem, &self.ensemble, &self.target) {
            (Problem::Cavity, EnsembleSpec::Reynolds(r), TargetSpec::Reynolds(t)) => {
                if r.is_empty() || r.iter().chain([t]).any(|v| !(1.0..=5000.0).contains(v)) {
                    return bad("cavity Reynolds numbers must lie in [1, 5000]".into());
                }
                if self.grid.nx < 16 || self.grid.ny < 16 {
                    return bad("cavity grid must be at least 16x16".into());
                }
            }
            (Problem::Transient, EnsembleSpec::Steps(w), TargetSpec::Step(_)) => {
                if w.end < w.start {
                    return bad(format!("step window {}..{} is empty", w.start, w.end));
                }
                if self.transient.period < 2 {
                    return bad("transient period must be at least 2".into());
                }
            }
            (Problem::Ingested, EnsembleSpec::Files { files, labels }, TargetSpec::Files { files: tf, .. }) => {
                if files.ux.is_empty() || files.uy.is_empty() || labels.is_empty() {
                    return bad("ingested ensemble needs files for both components and labels".into());
                }
                if tf.ux.len() != 1 || tf.uy.len() != 1 {
                    return bad("ingested target needs exactly one file per component".into());
                }
            }
            (p, _, _) => return bad(format!("ensemble and target kinds do not match problem {p:?}")),
        }
        let labels = self.ensemble_labels();
        if labels.contains(&self.target.label()) {
            return bad(format!("target {} is part of the training ensemble", self.target.label()));
        }
        if self.components.is_empty() || self.methods.is_empty() {
            return bad("components and methods must not be empty".into());
        }
        if self.shot_grid.is_empty() || self.shot_grid.contains(&0) || self.readout_shots == 0 {
            return bad("shot budgets must be positive".into());
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(self.beta >= 2.0) || !self.beta.is_finite() {
            return bad(format!("beta must be at least 2, got {}", self.beta));
        }
        if !self.chi_cap.is_power_of_two() {
            return bad(format!("chi_cap {} is not a power of two", self.chi_cap));
        }
        let n_qubits = self.grid.n().trailing_zeros() as usize;
        if self.chi_cap > 1 << (n_qubits / 2) {
            return bad(format!("chi_cap {} exceeds the largest bond of a {n_qubits}-qubit state", self.chi_cap));
        }
        if !(self.fsr_cutoff > 0.0 && self.fsr_cutoff < 1.0) {
            return bad(format!("fsr_cutoff {} outside (0, 1)", self.fsr_cutoff));
        }
        if self.depth_grids.iter().any(|d| !d.is_power_of_two() || *d < 16) {
            return bad("depth grids must be powers of two of at least 16".into());
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iters == 0 {
            return bad("solver tol and max_iters must be positive".into());
        }
        Ok(())
    }

    /// Canonical JSON of the parsed config, without the output directory.
    pub fn canonical_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("output_dir");
        }
        v.to_string()
    }

    /// Short content hash of the whole config, stamped on every CSV row.
    pub fn config_hash(&self) -> String {
        short_hash(self.canonical_json().as_bytes())
    }

    /// Hash of the fields that determine the offline artifacts.
    pub fn offline_hash(&self) -> String {
        let key = serde_json::json!({
            "problem": self.problem,
            "grid": self.grid,
            "ensemble": self.ensemble,
            "target": self.target,
            "case": self.case,
            "components": self.components,
            "chi_cap": self.chi_cap,
            "solver": self.solver,
            "transient": self.transient,
        });
        short_hash(key.to_string().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn short_hash(bytes: &[u8]) -> String {
    sha256_hex(bytes)[..16].to_string()
}
