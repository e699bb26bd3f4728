//! Synthetic time-periodic flow ensemble.
//!
//! The streamfunction is a uniform stream plus four traveling vortex modes,
//!
//! `psi(x, y, t) = U0 y + sum_k a_k sin(pi q_k y) cos(2 pi kappa_k x - 2 pi ((m_k t) mod P) / P + phi_k)`,
//!
//! with incommensurate `kappa_k`, integer `q_k`, `m_k` and a common period `P`.
//! The phase uses integer arithmetic modulo `P`, so step `t` and `t + P` give
//! bitwise-identical fields. Velocities are central differences of `psi`
//! sampled on a grid with one ghost layer, which makes the discrete
//! divergence vanish up to rounding. `u_y` is zero on the bottom and top rows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::flow::field::Field2D;

pub const MODE_COUNT: usize = 4;

/// Spatial wavenumbers in x; pairwise ratios are irrational.
const KAPPA: [f64; MODE_COUNT] = [
    0.75,
    std::f64::consts::SQRT_2,
    1.0 + std::f64::consts::FRAC_1_SQRT_2 * 1.5,
    std::f64::consts::E * 0.8,
];
/// Vertical mode numbers.
const Q: [u32; MODE_COUNT] = [1, 2, 1, 3];
/// Temporal harmonics of the common period.
const HARMONIC: [u64; MODE_COUNT] = [1, 2, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Mode {
    amplitude: f64,
    phase: f64,
    kappa: f64,
    q: f64,
    harmonic: u64,
}

/// Deterministic generator of the periodic ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientGenerator {
    nx: usize,
    ny: usize,
    period: u64,
    base_speed: f64,
    modes: [Mode; MODE_COUNT],
}

impl TransientGenerator {
    pub fn new(nx: usize, ny: usize, period: u64, seed: u64) -> Result<Self> {
        if period < 2 {
            return Err(Error::InvalidArgument(format!("period must be at least 2, got {period}")));
        }
        for d in [nx, ny] {
            if !d.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(d));
            }
            if d < 4 {
                return Err(Error::InvalidArgument(format!("grid side {d} is too small")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let modes = std::array::from_fn(|k| {
            // Decaying amplitudes keep the spectrum energy-ranked like a wake.
            let scale = 0.3 / (1u32 << k) as f64;
            Mode {
                amplitude: scale * rng.random_range(0.5..1.0),
                phase: rng.random_range(0.0..std::f64::consts::TAU),
                kappa: KAPPA[k],
                q: Q[k] as f64,
                harmonic: HARMONIC[k],
            }
        });
        Ok(Self { nx, ny, period, base_speed: 1.0, modes })
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    fn psi(&self, x: f64, y: f64, step: u64) -> f64 {
        let mut v = self.base_speed * y;
        for m in &self.modes {
            let tphase = ((m.harmonic * step) % self.period) as f64 / self.period as f64;
            let arg = std::f64::consts::TAU * (m.kappa * x - tphase) + m.phase;
            v += m.amplitude * (std::f64::consts::PI * m.q * y).sin() * arg.cos();
        }
        v
    }

    /// Streamfunction sampled on the node grid.
    pub fn stream_function_at(&self, step: u64) -> Field2D {
        let (hx, hy) = (1.0 / (self.nx as f64 - 1.0), 1.0 / (self.ny as f64 - 1.0));
        Field2D::from_fn(self.nx, self.ny, |i, j| self.psi(i as f64 * hx, j as f64 * hy, step))
    }

    /// `(u_x, u_y)` at a time step.
    pub fn field_at(&self, step: u64) -> (Field2D, Field2D) {
        let (nx, ny) = (self.nx, self.ny);
        let (hx, hy) = (1.0 / (nx as f64 - 1.0), 1.0 / (ny as f64 - 1.0));
        // Ghost-padded samples: index (i + 1, j + 1) holds node (i, j).
        let gx = nx + 2;
        let mut g = vec![0.0; gx * (ny + 2)];
        for jj in 0..ny + 2 {
            let y = (jj as f64 - 1.0) * hy;
            for ii in 0..gx {
                g[jj * gx + ii] = self.psi((ii as f64 - 1.0) * hx, y, step);
            }
        }
        let at = |i: usize, j: usize| g[j * gx + i];
        let ux = Field2D::from_fn(nx, ny, |i, j| (at(i + 1, j + 2) - at(i + 1, j)) / (2.0 * hy));
        let uy = Field2D::from_fn(nx, ny, |i, j| {
            if j == 0 || j == ny - 1 {
                0.0
            } else {
                -(at(i + 2, j + 1) - at(i, j + 1)) / (2.0 * hx)
            }
        });
        (ux, uy)
    }
}

/// Generate steps `0..n_steps` of the periodic ensemble.
pub fn generate_transient(
    n_steps: usize,
    period: u64,
    nx: usize,
    ny: usize,
    seed: u64,
) -> Result<Vec<(Field2D, Field2D)>> {
    if (n_steps as u64) < period {
        return Err(Error::InvalidArgument(format!("n_steps {n_steps} is shorter than the period {period}")));
    }
    let gen = TransientGenerator::new(nx, ny, period, seed)?;
    Ok((0..n_steps as u64).map(|t| gen.field_at(t)).collect())
}
