//! Shot-noise simulation of the online readout stage and the two baselines.
//!
//! PODR estimates each POD coefficient from a Hadamard test against the
//! compressed basis `u~_i` and reconstructs with the exact bases `u_i`. RSR
//! samples grid indices from `|x_j|^2`. FSR (idealized) samples Fourier modes
//! from the unitary 2D DFT, keeps the modes whose estimated probability
//! exceeds a cutoff, and takes their phases from the exact transform.

use std::fmt;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, dot, norm};
use crate::mps::{exact_encoding_error, MpsVector};
use crate::pod::{exact_projection_error, PodBasisSet};
use crate::rng::stream_rng;

/// Allowed deviation from unit norm for state vectors.
pub const NORM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PODR")]
    Podr,
    #[serde(rename = "RSR")]
    Rsr,
    #[serde(rename = "FSR")]
    Fsr,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Podr, Method::Rsr, Method::Fsr];

    pub fn label(self) -> &'static str {
        match self {
            Method::Podr => "PODR",
            Method::Rsr => "RSR",
            Method::Fsr => "FSR (idealized)",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Podr => "PODR",
            Method::Rsr => "RSR",
            Method::Fsr => "FSR",
        })
    }
}

/// Shot budget and sampling switches shared by all methods.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampling {
    pub n_shot_total: u64,
    pub seed: u64,
    /// Replace every sampled frequency by its exact probability.
    pub analytic: bool,
}

impl Sampling {
    pub fn shots(n_shot_total: u64, seed: u64) -> Self {
        Self { n_shot_total, seed, analytic: false }
    }

    pub fn analytic() -> Self {
        Self { n_shot_total: 0, seed: 0, analytic: true }
    }
}

/// The three terms bounding the PODR error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub e_proj: f64,
    pub e_enc: f64,
    /// `beta * sqrt(n_b / N_shot^basis)`; zero in analytic mode.
    pub e_sam_bound: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadoutReport {
    pub method: Method,
    pub n_shot_total: u64,
    pub analytic: bool,
    /// PODR: the `n_b` coefficients. RSR: per-point amplitudes. FSR: real parts of kept modes.
    pub coefficients: Vec<f64>,
    pub reconstruction: Vec<f64>,
    pub epsilon: f64,
    pub n_b: Option<usize>,
    pub budget: Option<ErrorBudget>,
    pub kept_modes: Option<usize>,
    pub seed: u64,
}

fn check_unit(v: &[f64]) -> Result<()> {
    let n = norm(v);
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm: n });
    }
    Ok(())
}

/// Probability of measuring the ancilla in `|0>`: `(1 + <x, u~>) / 2`.
pub fn hadamard_p0(x: &[f64], u_tilde: &[f64]) -> Result<f64> {
    if x.len() != u_tilde.len() {
        return Err(Error::DimensionMismatch(format!("lengths {} and {}", x.len(), u_tilde.len())));
    }
    check_unit(x)?;
    check_unit(u_tilde)?;
    Ok(((1.0 + dot(x, u_tilde)) / 2.0).clamp(0.0, 1.0))
}

/// `2 Z / shots - 1` with `Z ~ Binomial(shots, p0)`.
pub fn sample_coefficient_with<R: Rng + ?Sized>(p0: f64, shots: u64, rng: &mut R) -> f64 {
    let z = binomial(shots, p0, rng);
    2.0 * z as f64 / shots as f64 - 1.0
}

/// Seeded form of [`sample_coefficient_with`].
pub fn sample_coefficient(p0: f64, shots: u64, seed: u64) -> f64 {
    sample_coefficient_with(p0, shots, &mut stream_rng(seed, 0))
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Multinomial counts by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; probs.len()];
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&p| p > 0.0);
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if p <= 0.0 {
            continue;
        }
        if Some(k) == last {
            counts[k] = left;
            break;
        }
        let c = binomial(left, (p / mass).min(1.0), rng);
        counts[k] = c;
        left -= c;
        mass -= p;
    }
    counts
}

/// PODR with equal shot allocation over the `approximants.len()` bases.
///
/// With `subregion`, only those grid indices are reconstructed and `epsilon`
/// is measured on them. The budget terms always refer to the full vector.
pub fn podr_readout(
    x: &[f64],
    basis: &PodBasisSet,
    approximants: &[MpsVector],
    sampling: Sampling,
    beta: f64,
    subregion: Option<&[usize]>,
) -> Result<ReadoutReport> {
    let n_b = approximants.len();
    if n_b == 0 || n_b > basis.m() {
        return Err(Error::DimensionMismatch(format!("{n_b} approximants for {} bases", basis.m())));
    }
    if x.len() != basis.n() {
        return Err(Error::DimensionMismatch(format!("target length {} vs basis length {}", x.len(), basis.n())));
    }
    check_unit(x)?;
    let per_basis = if sampling.analytic {
        0
    } else {
        if sampling.n_shot_total == 0 || !sampling.n_shot_total.is_multiple_of(n_b as u64) {
            return Err(Error::IndivisibleShots { total: sampling.n_shot_total, n_b });
        }
        sampling.n_shot_total / n_b as u64
    };

    let mut coefficients = Vec::with_capacity(n_b);
    for (i, a) in approximants.iter().enumerate() {
        let p0 = hadamard_p0(x, a.contract())?;
        coefficients.push(if sampling.analytic {
            2.0 * p0 - 1.0
        } else {
            sample_coefficient_with(p0, per_basis, &mut stream_rng(sampling.seed, i as u64))
        });
    }

    let (reconstruction, epsilon) = match subregion {
        None => {
            let r = basis.combine(&coefficients);
            let e = distance(x, &r);
            (r, e)
        }
        Some(idx) => {
            let mut r = vec![0.0; idx.len()];
            for (i, c) in coefficients.iter().enumerate() {
                let u = basis.basis(i);
                for (dst, &j) in r.iter_mut().zip(idx) {
                    *dst += c * u[j];
                }
            }
            let truth: Vec<f64> = idx.iter().map(|&j| x[j]).collect();
            let e = distance(&truth, &r);
            (r, e)
        }
    };

    let budget = ErrorBudget {
        e_proj: exact_projection_error(x, basis, n_b)?,
        e_enc: exact_encoding_error(x, basis, approximants)?,
        e_sam_bound: if sampling.analytic { 0.0 } else { sampling_bound(beta, n_b, per_basis) },
        beta,
    };
    Ok(ReadoutReport {
        method: Method::Podr,
        n_shot_total: sampling.n_shot_total,
        analytic: sampling.analytic,
        coefficients,
        reconstruction,
        epsilon,
        n_b: Some(n_b),
        budget: Some(budget),
        kept_modes: None,
        seed: sampling.seed,
    })
}

/// `beta * sqrt(n_b / shots_per_basis)`.
pub fn sampling_bound(beta: f64, n_b: usize, shots_per_basis: u64) -> f64 {
    beta * (n_b as f64 / shots_per_basis as f64).sqrt()
}

/// `epsilon <= E_proj + E_enc + beta sqrt(n_b / N_shot^basis)` for a PODR report.
pub fn error_budget_check(report: &ReadoutReport, beta: f64) -> Result<bool> {
    let (Some(b), Some(n_b)) = (report.budget, report.n_b) else {
        return Err(Error::InvalidArgument(format!("{} report carries no error budget", report.method)));
    };
    let sam = if report.analytic { 0.0 } else { sampling_bound(beta, n_b, report.n_shot_total / n_b as u64) };
    Ok(report.epsilon <= b.e_proj + b.e_enc + sam)
}

/// Real-space readout: magnitudes from Z-basis counts. With `sign_oracle`
/// the signs are copied from `x`; otherwise every amplitude is taken positive.
pub fn rsr_readout(x: &[f64], sampling: Sampling, sign_oracle: bool) -> Result<ReadoutReport> {
    check_unit(x)?;
    let magnitudes: Vec<f64> = if sampling.analytic {
        x.iter().map(|v| v.abs()).collect()
    } else {
        if sampling.n_shot_total == 0 {
            return Err(Error::InvalidArgument("RSR needs at least one shot".into()));
        }
        let probs: Vec<f64> = x.iter().map(|v| v * v).collect();
        let counts = multinomial(sampling.n_shot_total, &probs, &mut stream_rng(sampling.seed, 0));
        counts.iter().map(|&c| (c as f64 / sampling.n_shot_total as f64).sqrt()).collect()
    };
    let reconstruction: Vec<f64> = magnitudes
        .iter()
        .zip(x)
        .map(|(m, v)| if sign_oracle && *v < 0.0 { -m } else { *m })
        .collect();
    let epsilon = distance(x, &reconstruction);
    Ok(ReadoutReport {
        method: Method::Rsr,
        n_shot_total: sampling.n_shot_total,
        analytic: sampling.analytic,
        coefficients: magnitudes,
        reconstruction,
        epsilon,
        n_b: None,
        budget: None,
        kept_modes: None,
        seed: sampling.seed,
    })
}

/// Unitary 2D DFT of a row-major `nx x ny` array (x fastest), in place.
pub fn dft2(data: &mut [Complex64], nx: usize, ny: usize, inverse: bool) {
    assert_eq!(data.len(), nx * ny);
    let mut planner = FftPlanner::new();
    let (fx, fy) = if inverse {
        (planner.plan_fft_inverse(nx), planner.plan_fft_inverse(ny))
    } else {
        (planner.plan_fft_forward(nx), planner.plan_fft_forward(ny))
    };
    fx.process(data);
    let mut column = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for (j, c) in column.iter_mut().enumerate() {
            *c = data[j * nx + i];
        }
        fy.process(&mut column);
        for (j, c) in column.iter().enumerate() {
            data[j * nx + i] = *c;
        }
    }
    let scale = 1.0 / ((nx * ny) as f64).sqrt();
    data.iter_mut().for_each(|v| *v *= scale);
}

/// Idealized Fourier-space readout on an `nx x ny` grid.
pub fn fsr_readout(x: &[f64], nx: usize, ny: usize, cutoff: f64, sampling: Sampling) -> Result<ReadoutReport> {
    if x.len() != nx * ny {
        return Err(Error::DimensionMismatch(format!("length {} on a {nx}x{ny} grid", x.len())));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidArgument(format!("cutoff {cutoff} outside (0, 1)")));
    }
    check_unit(x)?;
    let mut spectrum: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    dft2(&mut spectrum, nx, ny, false);
    let probs: Vec<f64> = spectrum.iter().map(|c| c.norm_sqr()).collect();
    let estimated: Vec<f64> = if sampling.analytic {
        probs.clone()
    } else {
        if sampling.n_shot_total == 0 {
            return Err(Error::InvalidArgument("FSR needs at least one shot".into()));
        }
        let counts = multinomial(sampling.n_shot_total, &probs, &mut stream_rng(sampling.seed, 0));
        counts.iter().map(|&c| c as f64 / sampling.n_shot_total as f64).collect()
    };

    let mut kept = 0;
    let mut coefficients = Vec::new();
    let mut modes: Vec<Complex64> = spectrum
        .iter()
        .zip(&estimated)
        .map(|(exact, &p)| {
            if p > cutoff {
                kept += 1;
                let amp = Complex64::from_polar(p.sqrt(), exact.arg());
                coefficients.push(amp.re);
                amp
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    dft2(&mut modes, nx, ny, true);
    let reconstruction: Vec<f64> = modes.iter().map(|c| c.re).collect();
    let epsilon = distance(x, &reconstruction);
    Ok(ReadoutReport {
        method: Method::Fsr,
        n_shot_total: sampling.n_shot_total,
        analytic: sampling.analytic,
        coefficients,
        reconstruction,
        epsilon,
        n_b: None,
        budget: None,
        kept_modes: Some(kept),
        seed: sampling.seed,
    })
}
