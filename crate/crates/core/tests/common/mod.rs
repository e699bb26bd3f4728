#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use podr_core::analysis::{run_offline, ExperimentConfig, OfflineArtifacts};
use tempfile::TempDir;

pub const CAVITY_CASE1: &str = include_str!("../../../../configs/cavity_case1.json");
pub const CAVITY_CASE2: &str = include_str!("../../../../configs/cavity_case2.json");
pub const TRANSIENT_CASE2: &str = include_str!("../../../../configs/transient_case2.json");

fn scratch_root() -> &'static Path {
    static DIR: OnceLock<TempDir> = OnceLock::new();
    DIR.get_or_init(|| TempDir::new().expect("temp dir")).path()
}

/// Fresh directory under this process's scratch root.
pub fn scratch(name: &str) -> PathBuf {
    let p = scratch_root().join(name);
    std::fs::create_dir_all(&p).expect("scratch dir");
    p
}

pub fn config(json: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::from_json(json).expect("shipped config is valid");
    cfg.output_dir = out.to_path_buf();
    cfg
}

/// 64x64 cavity, Re 100..1000 ensemble, target Re 950, Case-1.
pub fn cavity_case1() -> &'static (ExperimentConfig, OfflineArtifacts) {
    static CELL: OnceLock<(ExperimentConfig, OfflineArtifacts)> = OnceLock::new();
    CELL.get_or_init(|| {
        let cfg = config(CAVITY_CASE1, &scratch("cavity_case1"));
        let art = run_offline(&cfg).expect("cavity offline stage");
        (cfg, art)
    })
}

/// Whether `ys` never increases from one entry to the next.
pub fn non_increasing(ys: &[f64]) -> bool {
    ys.windows(2).all(|w| w[1] <= w[0])
}

/// Independent truncation oracle: starting from `x`, at every cut `k`
/// reshape the current vector into `2^k x 2^(n-k)` (bit `k` and above vary
/// slowest), project onto its leading `chi` left singular vectors, and move on.
/// Returns the normalized result.
pub fn schmidt_truncate(x: &[f64], chi: usize) -> Vec<f64> {
    let n = x.len().trailing_zeros() as usize;
    let mut v = x.to_vec();
    for k in 1..n {
        let rows = 1usize << k;
        let cols = x.len() / rows;
        // Row index = low k bits, column index = high bits.
        let m = nalgebra::DMatrix::from_fn(rows, cols, |r, c| v[c * rows + r]);
        // Leading left singular vectors as the top eigenvectors of M M^T.
        let eig = nalgebra::SymmetricEigen::new(&m * m.transpose());
        let mut order: Vec<usize> = (0..rows).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let keep: Vec<usize> = order.into_iter().take(chi).collect();
        let uk = nalgebra::DMatrix::from_fn(rows, keep.len(), |r, c| eig.eigenvectors[(r, keep[c])]);
        let proj = &uk * (uk.transpose() * &m);
        for c in 0..cols {
            for r in 0..rows {
                v[c * rows + r] = proj[(r, c)];
            }
        }
    }
    let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    v.iter().map(|a| a / nrm).collect()
}
