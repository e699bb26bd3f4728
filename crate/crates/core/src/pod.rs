//! Snapshot matrices, POD via thin SVD, and the projection-error estimator.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::binio::{to_u32, write_atomic, Decoder, Encoder};
use crate::error::{Error, Result};
use crate::flow::field::Field2D;

/// Column stack of unit-norm flattened snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: DMatrix<f64>,
    labels: Vec<f64>,
}

impl SnapshotMatrix {
    /// Flatten each field row-major and scale it to unit L2 norm.
    pub fn build(fields: &[Field2D], labels: &[f64]) -> Result<Self> {
        let first = fields.first().ok_or_else(|| Error::InvalidArgument("no snapshots".into()))?;
        if labels.len() != fields.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} snapshots",
                labels.len(),
                fields.len()
            )));
        }
        let n = first.len();
        let m = fields.len();
        let mut data = DMatrix::zeros(n, m);
        for (j, f) in fields.iter().enumerate() {
            if !f.same_shape(first) {
                return Err(Error::DimensionMismatch(format!(
                    "snapshot {j} is {}x{}, expected {}x{}",
                    f.nx(),
                    f.ny(),
                    first.nx(),
                    first.ny()
                )));
            }
            if !f.is_finite() {
                return Err(Error::NonFinite { index: j });
            }
            let norm = f.norm();
            if norm == 0.0 {
                return Err(Error::ZeroSnapshot { index: j });
            }
            for (dst, v) in data.column_mut(j).iter_mut().zip(f.values()) {
                *dst = v / norm;
            }
        }
        if m >= n {
            return Err(Error::InvalidArgument(format!("snapshot count {m} must be below the grid size {n}")));
        }
        let mut seen = labels.to_vec();
        seen.sort_by(f64::total_cmp);
        if seen.windows(2).any(|w| w[0] == w[1]) {
            log::warn!("snapshot matrix has duplicate labels");
        }
        Ok(Self { data, labels: labels.to_vec() })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn m(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }
}

/// Thin SVD of a snapshot matrix plus the selected basis count.
#[derive(Debug, Clone, PartialEq)]
pub struct PodBasisSet {
    /// `n x m`, orthonormal columns.
    pub u: DMatrix<f64>,
    /// Non-increasing.
    pub sigma: Vec<f64>,
    /// `m x m`, orthonormal columns.
    pub v: DMatrix<f64>,
    pub n_b: usize,
}

impl PodBasisSet {
    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn m(&self) -> usize {
        self.sigma.len()
    }

    /// The `i`-th basis vector (0-based).
    pub fn basis(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.u.as_slice()[i * n..(i + 1) * n]
    }

    /// Set `n_b` to the smallest count whose estimator meets `threshold`.
    pub fn select(&mut self, threshold: f64) -> usize {
        self.n_b = select_nb(&self.sigma, self.m(), threshold);
        self.n_b
    }

    pub fn estimator(&self) -> f64 {
        proj_error_estimator(&self.sigma, self.m(), self.n_b)
    }

    /// Coefficients `<u_i, x>` for the first `count` bases.
    pub fn coefficients(&self, x: &[f64], count: usize) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok((0..count).map(|i| crate::linalg::dot(self.basis(i), x)).collect())
    }

    /// `sum_i c_i u_i`.
    pub fn combine(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (i, ci) in c.iter().enumerate() {
            crate::linalg::axpy(*ci, self.basis(i), &mut out);
        }
        out
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch(format!("vector of length {len}, bases have length {}", self.n())));
        }
        Ok(())
    }
}

/// Thin SVD with singular values sorted non-increasing and a fixed sign rule:
/// the largest-magnitude entry of every left singular vector is positive
/// (first such entry on ties). The right singular vector flips with it.
pub fn pod_decompose(s: &SnapshotMatrix) -> Result<PodBasisSet> {
    let m = s.m();
    let (u_raw, sv, vt_raw) = crate::linalg::thin_svd(s.matrix())?;
    let n = s.n();
    let mut u = DMatrix::zeros(n, m);
    let mut v = DMatrix::zeros(m, m);
    let mut sigma = Vec::with_capacity(m);
    for (k, &sk) in sv.iter().enumerate() {
        let col = u_raw.column(k);
        // First entry of largest magnitude.
        let pivot = col.iter().fold(0.0_f64, |best, &x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        u.column_mut(k).copy_from(&(col * sign));
        v.column_mut(k).copy_from(&(vt_raw.row(k).transpose() * sign));
        sigma.push(sk);
    }
    Ok(PodBasisSet { u, sigma, v, n_b: m })
}

/// `sqrt((1/m) sum_{i > n_b} sigma_i^2)`, with `n_b` counted from 1.
///
/// # Panics
/// If `n_b` is 0 or exceeds `sigma.len()`.
pub fn proj_error_estimator(sigma: &[f64], m: usize, n_b: usize) -> f64 {
    assert!(n_b >= 1 && n_b <= sigma.len(), "n_b {n_b} outside 1..={}", sigma.len());
    let tail: f64 = sigma[n_b..].iter().map(|s| s * s).sum();
    (tail / m as f64).sqrt()
}

/// Smallest `n_b` whose estimator is at most `threshold`; `m` if none is.
pub fn select_nb(sigma: &[f64], m: usize, threshold: f64) -> usize {
    (1..=sigma.len()).find(|&nb| proj_error_estimator(sigma, m, nb) <= threshold).unwrap_or(sigma.len())
}

/// `|| x - U_nb U_nb^T x ||` for a unit vector `x`.
pub fn exact_projection_error(x: &[f64], basis: &PodBasisSet, n_b: usize) -> Result<f64> {
    if n_b > basis.m() {
        return Err(Error::InvalidArgument(format!("n_b {n_b} exceeds basis count {}", basis.m())));
    }
    let c = basis.coefficients(x, n_b)?;
    let p = basis.combine(&c);
    Ok(crate::linalg::distance(x, &p))
}

pub const BASIS_MAGIC: &[u8; 4] = b"PODB";
pub const BASIS_VERSION: u32 = 1;

pub fn encode_basis(b: &PodBasisSet) -> Result<Vec<u8>> {
    let mut e = Encoder::with_magic(BASIS_MAGIC, BASIS_VERSION);
    e.u32(to_u32(b.n(), "n")?);
    e.u32(to_u32(b.m(), "m")?);
    e.u32(to_u32(b.n_b, "n_b")?);
    e.f64s(&b.sigma);
    e.f64s(b.u.as_slice());
    e.f64s(b.v.as_slice());
    Ok(e.into_bytes())
}

pub fn decode_basis(bytes: &[u8]) -> Result<PodBasisSet> {
    let mut d = Decoder::open(bytes, BASIS_MAGIC, BASIS_VERSION)?;
    let n = d.u32()? as usize;
    let m = d.u32()? as usize;
    let n_b = d.u32()? as usize;
    if n_b == 0 || n_b > m {
        return Err(Error::DimensionMismatch(format!("n_b {n_b} outside 1..={m}")));
    }
    let sigma = d.f64s(m)?;
    let u = DMatrix::from_vec(n, m, d.f64s(n * m)?);
    let v = DMatrix::from_vec(m, m, d.f64s(m * m)?);
    d.finish()?;
    Ok(PodBasisSet { u, sigma, v, n_b })
}

pub fn write_basis_file(b: &PodBasisSet, path: &Path) -> Result<()> {
    write_atomic(path, &encode_basis(b)?)
}

pub fn read_basis_file(path: &Path) -> Result<PodBasisSet> {
    decode_basis(&fs::read(path)?)
}

/// `u diag(sigma) v^T`.
pub fn reconstruct(b: &PodBasisSet) -> DMatrix<f64> {
    &b.u * DMatrix::from_diagonal(&DVector::from_column_slice(&b.sigma)) * b.v.transpose()
}
