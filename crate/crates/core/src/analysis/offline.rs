//! Offline stage: ensemble, POD, bond search and compression, persisted with a
//! content-hashed manifest so an identical rerun loads instead of recomputing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::binio::write_atomic;
use crate::error::{Error, Result, StageContext};
use crate::flow::io::{decode_snapshots, encode_snapshots};
use crate::mps::{decode_mps, encode_mps, search_bond_plan, BondPlan, MpsVector};
use crate::pod::{decode_basis, encode_basis, pod_decompose, PodBasisSet, SnapshotMatrix};

use super::config::{sha256_hex, Component, ExperimentConfig, Grid};
use super::ensemble::{build_ensemble, Ensemble};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentManifest {
    pub n_b: usize,
    pub chis: Vec<usize>,
    pub e_proj_estimate: f64,
    pub e_enc_estimate: f64,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub offline_hash: String,
    pub grid: Grid,
    pub labels: Vec<f64>,
    pub target_label: f64,
    pub components: BTreeMap<Component, ComponentManifest>,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

/// Basis, bond plan and approximants for one velocity component.
#[derive(Debug, Clone)]
pub struct ComponentArtifacts {
    pub component: Component,
    pub basis: PodBasisSet,
    pub plan: BondPlan,
    pub approximants: Vec<MpsVector>,
}

#[derive(Debug, Clone)]
pub struct OfflineArtifacts {
    pub manifest: Manifest,
    pub ensemble: Ensemble,
    pub components: Vec<ComponentArtifacts>,
    /// True when everything was loaded from an earlier identical run.
    pub reused: bool,
}

impl OfflineArtifacts {
    pub fn component(&self, c: Component) -> Result<&ComponentArtifacts> {
        self.components
            .iter()
            .find(|a| a.component == c)
            .ok_or_else(|| Error::Config(format!("component {} was not built offline", c.name())))
    }
}

pub fn offline_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir.join("offline")
}

fn ensemble_file(c: Component) -> String {
    format!("ensemble_{}.pods", c.name())
}

const TARGET_FILE: &str = "target.pods";

fn basis_file(c: Component) -> String {
    format!("basis_{}.podb", c.name())
}

fn mps_file(c: Component, i: usize) -> String {
    format!("mps_{}_{i}.podm", c.name())
}

/// POD, `n_b` selection, bond search and compression for one component.
pub fn build_component(
    fields: &[crate::flow::Field2D],
    labels: &[f64],
    proj_threshold: f64,
    enc_threshold: f64,
    chi_cap: usize,
    component: Component,
) -> Result<ComponentArtifacts> {
    let name = component.name();
    let s = SnapshotMatrix::build(fields, labels).stage(&format!("{name} snapshot matrix"))?;
    let mut basis = pod_decompose(&s).stage(&format!("{name} POD"))?;
    let n_b = basis.select(proj_threshold);
    let (plan, approximants) =
        search_bond_plan(&basis, enc_threshold, chi_cap).stage(&format!("{name} bond search"))?;
    log::info!("{name}: n_b = {n_b}, chis = {:?}, encoding estimate {:e}", plan.chis, plan.estimated_error);
    Ok(ComponentArtifacts { component, basis, plan, approximants })
}

/// Run the offline stage, or load its artifacts when a manifest with the same
/// offline hash exists and every listed file still matches its hash.
pub fn run_offline(cfg: &ExperimentConfig) -> Result<OfflineArtifacts> {
    let dir = offline_dir(cfg);
    if let Some(found) = try_reuse(cfg, &dir)? {
        log::info!("offline artifacts in {} match; reusing", dir.display());
        return Ok(found);
    }
    let ensemble = build_ensemble(cfg).stage("ensemble")?;
    let th = cfg.thresholds();
    let mut components = Vec::new();
    for &c in &cfg.components {
        components.push(build_component(ensemble.fields(c), &ensemble.labels, th.proj, th.enc, cfg.chi_cap, c)?);
    }
    persist(cfg, &dir, ensemble, components)
}

fn persist(
    cfg: &ExperimentConfig,
    dir: &Path,
    ensemble: Ensemble,
    components: Vec<ComponentArtifacts>,
) -> Result<OfflineArtifacts> {
    std::fs::create_dir_all(dir)?;
    let mut payloads: Vec<(String, Vec<u8>)> = vec![
        (ensemble_file(Component::Ux), encode_snapshots(&ensemble.ux)?),
        (ensemble_file(Component::Uy), encode_snapshots(&ensemble.uy)?),
        (TARGET_FILE.to_string(), encode_snapshots(&[ensemble.target_ux.clone(), ensemble.target_uy.clone()])?),
    ];
    let mut comp_manifests = BTreeMap::new();
    for a in &components {
        payloads.push((basis_file(a.component), encode_basis(&a.basis)?));
        for (i, m) in a.approximants.iter().enumerate() {
            payloads.push((mps_file(a.component, i), encode_mps(m)?));
        }
        comp_manifests.insert(
            a.component,
            ComponentManifest {
                n_b: a.basis.n_b,
                chis: a.plan.chis.clone(),
                e_proj_estimate: a.basis.estimator(),
                e_enc_estimate: a.plan.estimated_error,
                sigma: a.basis.sigma.clone(),
            },
        );
    }
    let mut files = BTreeMap::new();
    for (name, bytes) in &payloads {
        write_atomic(&dir.join(name), bytes)?;
        files.insert(name.clone(), sha256_hex(bytes));
    }
    let manifest = Manifest {
        offline_hash: cfg.offline_hash(),
        grid: cfg.grid,
        labels: ensemble.labels.clone(),
        target_label: ensemble.target_label,
        components: comp_manifests,
        files,
    };
    let text = serde_json::to_string_pretty(&manifest)?;
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(OfflineArtifacts { manifest, ensemble, components, reused: false })
}

fn try_reuse(cfg: &ExperimentConfig, dir: &Path) -> Result<Option<OfflineArtifacts>> {
    let Ok(text) = std::fs::read_to_string(dir.join(MANIFEST_FILE)) else {
        return Ok(None);
    };
    let Ok(manifest) = serde_json::from_str::<Manifest>(&text) else {
        log::warn!("unreadable manifest in {}; rebuilding", dir.display());
        return Ok(None);
    };
    if manifest.offline_hash != cfg.offline_hash() {
        return Ok(None);
    }
    let mut bytes = BTreeMap::new();
    for (name, hash) in &manifest.files {
        match std::fs::read(dir.join(name)) {
            Ok(b) if sha256_hex(&b) == *hash => {
                bytes.insert(name.clone(), b);
            }
            _ => {
                log::warn!("offline artifact {name} is missing or modified; rebuilding");
                return Ok(None);
            }
        }
    }
    let get = |name: &str| -> Result<&Vec<u8>> {
        bytes.get(name).ok_or_else(|| Error::Parse(format!("manifest does not list {name}")))
    };
    let ux = decode_snapshots(get(&ensemble_file(Component::Ux))?)?;
    let uy = decode_snapshots(get(&ensemble_file(Component::Uy))?)?;
    let mut target = decode_snapshots(get(TARGET_FILE)?)?;
    if target.len() != 2 {
        return Err(Error::Parse(format!("{TARGET_FILE} holds {} fields, expected 2", target.len())));
    }
    let target_uy = target.pop().expect("two fields");
    let target_ux = target.pop().expect("two fields");
    let ensemble = Ensemble {
        labels: manifest.labels.clone(),
        ux,
        uy,
        target_label: manifest.target_label,
        target_ux,
        target_uy,
    };
    let mut components = Vec::new();
    for &c in &cfg.components {
        let Some(cm) = manifest.components.get(&c) else {
            return Ok(None);
        };
        let basis = decode_basis(get(&basis_file(c))?)?;
        let approximants = cm
            .chis
            .iter()
            .enumerate()
            .map(|(i, &chi)| decode_mps(get(&mps_file(c, i))?, chi))
            .collect::<Result<Vec<_>>>()?;
        let plan = BondPlan { chis: cm.chis.clone(), estimated_error: cm.e_enc_estimate };
        components.push(ComponentArtifacts { component: c, basis, plan, approximants });
    }
    Ok(Some(OfflineArtifacts { manifest, ensemble, components, reused: true }))
}
