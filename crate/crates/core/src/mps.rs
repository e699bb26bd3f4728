//! Tensor-train (MPS) compression of POD bases and the bond-dimension search.
//!
//! Core `k` carries bit `k` of the flat grid index (least significant first),
//! so the x bits precede the y bits for row-major fields with x fastest. Core
//! `k` is stored as a column-major `(2 * left) x right` matrix whose row index
//! is `a + left * bit`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::binio::{to_u32, write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::pod::PodBasisSet;

/// Singular values below this fraction of the largest are treated as zero.
const RANK_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct MpsCore {
    pub left: usize,
    pub right: usize,
    /// Column-major `(2 * left) x right`.
    pub data: Vec<f64>,
}

impl MpsCore {
    pub fn get(&self, a: usize, bit: usize, b: usize) -> f64 {
        self.data[a + self.left * bit + 2 * self.left * b]
    }

    fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(2 * self.left, self.right, &self.data)
    }
}

/// A tensor train together with its normalized dense contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct MpsVector {
    cores: Vec<MpsCore>,
    chi_max: usize,
    dense: Vec<f64>,
}

impl MpsVector {
    /// Validate bond structure and contract. The dense vector is normalized.
    pub fn from_cores(cores: Vec<MpsCore>, chi_max: usize) -> Result<Self> {
        let n = cores.len();
        if n == 0 {
            return Err(Error::InvalidArgument("MPS needs at least one core".into()));
        }
        if cores[0].left != 1 || cores[n - 1].right != 1 {
            return Err(Error::DimensionMismatch("boundary bonds must be 1".into()));
        }
        for (k, c) in cores.iter().enumerate() {
            if c.data.len() != 2 * c.left * c.right {
                return Err(Error::DimensionMismatch(format!("core {k} payload has wrong length")));
            }
            if k + 1 < n && c.right != cores[k + 1].left {
                return Err(Error::DimensionMismatch(format!("bond {k} mismatch: {} vs {}", c.right, cores[k + 1].left)));
            }
            if k + 1 < n && c.right > chi_max {
                return Err(Error::DimensionMismatch(format!("bond {k} = {} exceeds chi_max {chi_max}", c.right)));
            }
        }
        let mut dense = contract_cores(&cores);
        let norm = crate::linalg::norm(&dense);
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        dense.iter_mut().for_each(|v| *v /= norm);
        Ok(Self { cores, chi_max, dense })
    }

    pub fn n_qubits(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[MpsCore] {
        &self.cores
    }

    pub fn chi_max(&self) -> usize {
        self.chi_max
    }

    /// Internal bond dimensions, `n_qubits - 1` of them.
    pub fn bonds(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.right).collect()
    }

    /// Largest bond touching core `k`.
    pub fn core_chi(&self, k: usize) -> usize {
        self.cores[k].left.max(self.cores[k].right)
    }

    /// The cached unit-norm contraction.
    pub fn contract(&self) -> &[f64] {
        &self.dense
    }
}

/// Dense contraction of the cores without normalization.
fn contract_cores(cores: &[MpsCore]) -> Vec<f64> {
    // `acc` is (2^k) x bond, column-major.
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for core in cores {
        let c = core.matrix();
        let rows = acc.nrows();
        let mut next = DMatrix::zeros(2 * rows, core.right);
        for bit in 0..2 {
            let block = &acc * c.rows(bit * core.left, core.left);
            next.rows_mut(bit * rows, rows).copy_from(&block);
        }
        acc = next;
    }
    acc.as_slice().to_vec()
}

/// `log2` of a power-of-two length.
pub fn qubit_count(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(len));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Left-to-right TT-SVD with every bond truncated to at most `chi_max`.
pub fn tt_svd(x: &[f64], chi_max: usize) -> Result<MpsVector> {
    let n = qubit_count(x.len())?;
    if chi_max == 0 {
        return Err(Error::InvalidArgument("chi_max must be positive".into()));
    }
    if x.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let mut cores = Vec::with_capacity(n);
    let mut rem = x.to_vec();
    let mut left = 1;
    for _ in 0..n - 1 {
        let rows = 2 * left;
        let cols = rem.len() / rows;
        let mat = DMatrix::from_column_slice(rows, cols, &rem);
        let (u, s, vt) = crate::linalg::thin_svd(&mat)?;
        let kept = s.iter().take_while(|&&v| v > RANK_CUTOFF * s[0]).count().max(1);
        let r = kept.min(chi_max);
        let core = u.columns(0, r).into_owned();
        let mut next = vt.rows(0, r).into_owned();
        for (mut row, &sk) in next.row_iter_mut().zip(&s) {
            row *= sk;
        }
        cores.push(MpsCore { left, right: r, data: core.as_slice().to_vec() });
        rem = next.as_slice().to_vec();
        left = r;
    }
    let norm = crate::linalg::norm(&rem);
    rem.iter_mut().for_each(|v| *v /= norm);
    cores.push(MpsCore { left, right: 1, data: rem });
    MpsVector::from_cores(cores, chi_max)
}

/// Overlap matrix `O[i][j] = <u~_i, u_j>` over the first `n_b` bases.
pub fn overlap_matrix(basis: &PodBasisSet, approximants: &[MpsVector]) -> Result<Vec<Vec<f64>>> {
    let n_b = approximants.len();
    if n_b > basis.m() {
        return Err(Error::DimensionMismatch(format!("{n_b} approximants for {} bases", basis.m())));
    }
    approximants
        .iter()
        .map(|a| {
            if a.contract().len() != basis.n() {
                return Err(Error::DimensionMismatch(format!(
                    "approximant length {} vs basis length {}",
                    a.contract().len(),
                    basis.n()
                )));
            }
            Ok((0..n_b).map(|j| dot(a.contract(), basis.basis(j))).collect())
        })
        .collect()
}

fn estimator_from_overlaps(sigma: &[f64], m: usize, rows: &[&[f64]]) -> f64 {
    let w: Vec<f64> = sigma[..rows.len()].iter().map(|s| s * s / m as f64).collect();
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let mixed: f64 = row.iter().zip(&w).map(|(o, wj)| wj * o).sum();
            (w[i] - mixed).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

/// `sqrt(sum_i | sigma_i^2/M - sum_j (sigma_j^2/M) <u~_i, u_j> |^2)` over the
/// first `approximants.len()` bases.
pub fn enc_error_estimator(basis: &PodBasisSet, approximants: &[MpsVector]) -> Result<f64> {
    let o = overlap_matrix(basis, approximants)?;
    let rows: Vec<&[f64]> = o.iter().map(|r| r.as_slice()).collect();
    Ok(estimator_from_overlaps(&basis.sigma, basis.m(), &rows))
}

/// Exact encoding error `sqrt(sum_i <x, u_i - u~_i>^2)` for a target vector.
pub fn exact_encoding_error(x: &[f64], basis: &PodBasisSet, approximants: &[MpsVector]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, a) in approximants.iter().enumerate() {
        let d = dot(x, basis.basis(i)) - dot(x, a.contract());
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// Per-basis maximum bond dimensions.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct BondPlan {
    pub chis: Vec<usize>,
    pub estimated_error: f64,
}

/// Smallest power of two at least `chi`.
pub fn effective_bond_dimension(chi: usize) -> usize {
    chi.max(1).next_power_of_two()
}

struct Compressed {
    mps: MpsVector,
    /// `<u~_i, u_j>` for `j < n_b`.
    overlaps: Vec<f64>,
}

fn compress_memo(
    memo: &mut HashMap<(usize, usize), Compressed>,
    basis: &PodBasisSet,
    i: usize,
    chi: usize,
) -> Result<()> {
    if let std::collections::hash_map::Entry::Vacant(e) = memo.entry((i, chi)) {
        let mps = tt_svd(basis.basis(i), chi)?;
        let overlaps = (0..basis.n_b).map(|j| dot(mps.contract(), basis.basis(j))).collect();
        e.insert(Compressed { mps, overlaps });
    }
    Ok(())
}

/// Distance below which a compressed basis counts as exact.
const EXACT_TOLERANCE: f64 = 1e-12;

/// True when a larger cap cannot change the approximant: either no bond
/// reached `chi`, or the approximant already equals the basis.
fn saturated(mps: &MpsVector, chi: usize, u: &[f64]) -> bool {
    mps.bonds().iter().all(|&b| b < chi) || crate::linalg::distance(mps.contract(), u) <= EXACT_TOLERANCE
}

/// Greedy ascent over power-of-two bond dimensions.
///
/// Every chi starts at 1. While the encoding estimator exceeds `threshold`,
/// the chi whose doubling yields the lowest estimator is doubled (ties go to
/// the lowest basis index). A basis whose compression is already exact at its
/// current chi is not a candidate, since doubling it cannot change the
/// estimator. Fails once no candidate remains.
pub fn search_bond_plan(basis: &PodBasisSet, threshold: f64, chi_cap: usize) -> Result<(BondPlan, Vec<MpsVector>)> {
    let n_b = basis.n_b;
    let n = qubit_count(basis.n())?;
    if !chi_cap.is_power_of_two() || chi_cap > 1 << (n / 2) {
        return Err(Error::InvalidArgument(format!(
            "chi cap {chi_cap} must be a power of two no larger than {}",
            1usize << (n / 2)
        )));
    }
    if !(threshold >= 0.0) {
        return Err(Error::InvalidArgument(format!("threshold must be nonnegative, got {threshold}")));
    }

    let mut memo: HashMap<(usize, usize), Compressed> = HashMap::new();
    let mut chis = vec![1usize; n_b];
    for i in 0..n_b {
        compress_memo(&mut memo, basis, i, 1)?;
    }
    let estimate = |chis: &[usize], memo: &HashMap<(usize, usize), Compressed>| {
        let rows: Vec<&[f64]> = chis.iter().enumerate().map(|(i, &c)| memo[&(i, c)].overlaps.as_slice()).collect();
        estimator_from_overlaps(&basis.sigma, basis.m(), &rows)
    };
    let mut current = estimate(&chis, &memo);
    while current > threshold {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n_b {
            if chis[i] >= chi_cap || saturated(&memo[&(i, chis[i])].mps, chis[i], basis.basis(i)) {
                continue;
            }
            compress_memo(&mut memo, basis, i, chis[i] * 2)?;
            let mut trial = chis.clone();
            trial[i] *= 2;
            let e = estimate(&trial, &memo);
            if best.is_none_or(|(_, b)| e < b) {
                best = Some((i, e));
            }
        }
        match best {
            Some((i, e)) => {
                chis[i] *= 2;
                current = e;
                log::debug!("bond search: chi[{i}] -> {} (estimator {e:e})", chis[i]);
            }
            None => return Err(Error::ThresholdUnreachable { threshold, chi_cap, best: current }),
        }
    }
    let mps = chis.iter().enumerate().map(|(i, &c)| memo.remove(&(i, c)).expect("memoized").mps).collect();
    Ok((BondPlan { chis, estimated_error: current }, mps))
}

/// Compress the first `chis.len()` bases at the given bonds.
pub fn compress_bases(basis: &PodBasisSet, chis: &[usize]) -> Result<Vec<MpsVector>> {
    chis.iter().enumerate().map(|(i, &c)| tt_svd(basis.basis(i), c)).collect()
}

pub const MPS_MAGIC: &[u8; 4] = b"PODM";
pub const MPS_VERSION: u32 = 1;

/// Encode one MPS. The declared chi cap is written as the largest internal bond.
pub fn encode_mps(m: &MpsVector) -> Result<Vec<u8>> {
    let mut e = Encoder::with_magic(MPS_MAGIC, MPS_VERSION);
    e.u32(to_u32(m.n_qubits(), "qubit count")?);
    e.u32(to_u32(m.cores.len(), "core count")?);
    for c in &m.cores {
        e.u32(to_u32(c.left, "bond")?);
        e.u32(to_u32(c.right, "bond")?);
        e.f64s(&c.data);
    }
    Ok(e.into_bytes())
}

pub fn decode_mps(bytes: &[u8], chi_max: usize) -> Result<MpsVector> {
    let mut d = Decoder::open(bytes, MPS_MAGIC, MPS_VERSION)?;
    let n = d.u32()? as usize;
    let count = d.u32()? as usize;
    if count != n {
        return Err(Error::DimensionMismatch(format!("{count} cores for {n} qubits")));
    }
    let mut cores = Vec::with_capacity(count);
    for _ in 0..count {
        let left = d.u32()? as usize;
        let right = d.u32()? as usize;
        let data = d.f64s(2 * left * right)?;
        cores.push(MpsCore { left, right, data });
    }
    d.finish()?;
    MpsVector::from_cores(cores, chi_max)
}

pub fn write_mps_file(m: &MpsVector, path: &Path) -> Result<()> {
    write_atomic(path, &encode_mps(m)?)
}

pub fn read_mps_file(path: &Path, chi_max: usize) -> Result<MpsVector> {
    decode_mps(&fs::read(path)?, chi_max)
}

/// `|<x, u - u~>|` for one basis and its approximant.
pub fn basis_error_overlap(x: &[f64], u: &[f64], approx: &MpsVector) -> f64 {
    (dot(x, u) - dot(x, approx.contract())).abs()
}
