use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A real scalar field on an `nx` x `ny` uniform grid over the unit square.
///
/// Values are stored row-major with x varying fastest: the value at column
/// `i` (x) and row `j` (y) lives at `j * nx + i`. Row 0 is the bottom wall.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2D {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl Field2D {
    pub fn new(nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("empty grid {nx}x{ny}")));
        }
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} grid needs {} values, got {}",
                nx,
                ny,
                nx * ny,
                values.len()
            )));
        }
        Ok(Self { nx, ny, values })
    }

    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self { nx, ny, values: vec![0.0; nx * ny] }
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(f(i, j));
            }
        }
        Self { nx, ny, values }
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[j * self.nx + i] = v;
    }

    /// Grid spacing in x on the unit square (nodes include both walls).
    pub fn hx(&self) -> f64 {
        1.0 / (self.nx as f64 - 1.0)
    }

    pub fn hy(&self) -> f64 {
        1.0 / (self.ny as f64 - 1.0)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn same_shape(&self, other: &Field2D) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    /// Number of qubits addressing this grid, if both sides are powers of two.
    pub fn qubits(&self) -> Result<(u32, u32)> {
        for d in [self.nx, self.ny] {
            if !d.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(d));
            }
        }
        Ok((self.nx.trailing_zeros(), self.ny.trailing_zeros()))
    }

    /// Bilinear interpolation at physical coordinates `(x, y)` in the unit square.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x / self.hx()).clamp(0.0, (self.nx - 1) as f64);
        let fy = (y / self.hy()).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx - 2);
        let j0 = (fy.floor() as usize).min(self.ny - 2);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let v00 = self.get(i0, j0);
        let v10 = self.get(i0 + 1, j0);
        let v01 = self.get(i0, j0 + 1);
        let v11 = self.get(i0 + 1, j0 + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// Resample onto another node grid over the unit square by bilinear interpolation.
    pub fn resample(&self, nx: usize, ny: usize) -> Field2D {
        let hx = 1.0 / (nx as f64 - 1.0);
        let hy = 1.0 / (ny as f64 - 1.0);
        Field2D::from_fn(nx, ny, |i, j| self.sample(i as f64 * hx, j as f64 * hy))
    }
}

/// Check every field for NaN/Inf, naming the first offending snapshot.
pub fn ensure_finite(fields: &[Field2D]) -> Result<()> {
    match fields.iter().position(|f| !f.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Which kind of flow produced a snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    CavitySteady,
    SyntheticTransient,
    Ingested,
}

/// Physical parameters of one snapshot in an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCase {
    pub kind: FlowKind,
    /// Reynolds number (cavity cases only).
    pub reynolds: Option<f64>,
    /// Time-step index (transient cases only).
    pub step: Option<u64>,
    pub lid_speed: f64,
}

impl FlowCase {
    pub fn cavity(reynolds: f64) -> Result<Self> {
        if !(reynolds > 0.0) {
            return Err(Error::InvalidArgument(format!("reynolds must be positive, got {reynolds}")));
        }
        Ok(Self { kind: FlowKind::CavitySteady, reynolds: Some(reynolds), step: None, lid_speed: 1.0 })
    }

    pub fn transient(step: u64) -> Self {
        Self { kind: FlowKind::SyntheticTransient, reynolds: None, step: Some(step), lid_speed: 1.0 }
    }

    pub fn ingested() -> Self {
        Self { kind: FlowKind::Ingested, reynolds: None, step: None, lid_speed: 1.0 }
    }

    /// Hyperparameter value used as the snapshot label.
    pub fn label(&self) -> f64 {
        self.reynolds.or(self.step.map(|s| s as f64)).unwrap_or(0.0)
    }
}

/// Maximum magnitude of the central-difference divergence over interior nodes.
pub fn max_interior_divergence(ux: &Field2D, uy: &Field2D) -> f64 {
    let (nx, ny) = (ux.nx(), ux.ny());
    let (hx, hy) = (ux.hx(), ux.hy());
    let mut worst = 0.0_f64;
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let d = (ux.get(i + 1, j) - ux.get(i - 1, j)) / (2.0 * hx)
                + (uy.get(i, j + 1) - uy.get(i, j - 1)) / (2.0 * hy);
            worst = worst.max(d.abs());
        }
    }
    worst
}
