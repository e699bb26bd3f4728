//! Steady lid-driven cavity flow in the vorticity-streamfunction formulation.
//!
//! The unit square is discretized with `nx` x `ny` nodes, walls included.
//! Vorticity is marched in pseudo-time with a Peaceman-Rachford ADI step
//! (second-order central differences for convection and diffusion); the
//! streamfunction Poisson equation is relaxed with lexicographic SOR after
//! every step, warm-started from the previous iterate. Wall vorticity comes
//! from Thom's formula.
//!
//! Sign conventions: `u_x = dpsi/dy`, `u_y = -dpsi/dx`, `omega = -lap(psi)`.

use crate::error::{Error, Result};
use crate::flow::field::Field2D;

#[derive(Debug, Clone, PartialEq)]
pub struct CavityParams {
    pub reynolds: f64,
    pub nx: usize,
    pub ny: usize,
    /// Convergence threshold on the max-norm pseudo-time residual `|d omega / dt|`.
    pub tol: f64,
    pub max_iters: usize,
    pub lid_speed: f64,
    /// Reject grids that cannot be addressed by qubit registers.
    pub encode_bound: bool,
    /// Uniform pseudo-time step. `None` uses local stepping: the largest step
    /// that keeps the ADI tridiagonal systems diagonally dominant (capped at
    /// `MAX_DT`) in the interior, and a step that also keeps the explicit wall
    /// coupling stable inside the near-wall band. The steady state does not
    /// depend on the step.
    pub dt: Option<f64>,
    /// SOR sweeps on the streamfunction per pseudo-time step.
    pub poisson_sweeps: usize,
    /// Width (in nodes) of the near-wall band that uses the wall-limited step.
    pub wall_band: usize,
}

const MAX_DT: f64 = 0.05;
/// Thom's wall vorticity is applied explicitly, which bounds `nu dt / h^2`.
const WALL_DIFFUSION_NUMBER: f64 = 0.8;

impl CavityParams {
    pub fn new(reynolds: f64, nx: usize, ny: usize) -> Self {
        Self {
            reynolds,
            nx,
            ny,
            tol: 1e-6,
            max_iters: 200_000,
            lid_speed: 1.0,
            encode_bound: true,
            dt: None,
            poisson_sweeps: 2,
            wall_band: 2,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(1.0..=5000.0).contains(&self.reynolds) {
            return Err(Error::InvalidArgument(format!(
                "reynolds {} outside [1, 5000]",
                self.reynolds
            )));
        }
        if self.nx < 16 || self.ny < 16 {
            return Err(Error::InvalidArgument(format!(
                "cavity grid {}x{} is smaller than 16x16",
                self.nx, self.ny
            )));
        }
        if self.encode_bound {
            for d in [self.nx, self.ny] {
                if !d.is_power_of_two() {
                    return Err(Error::NotPowerOfTwo(d));
                }
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iters == 0 || self.poisson_sweeps == 0 {
            return Err(Error::InvalidArgument("max_iters and poisson_sweeps must be positive".into()));
        }
        Ok(())
    }

    /// Pseudo-time steps `(interior, near-wall)`.
    fn time_steps(&self) -> (f64, f64) {
        if let Some(dt) = self.dt {
            return (dt, dt);
        }
        let nu = 1.0 / self.reynolds;
        let u = self.lid_speed.abs().max(1e-12);
        let mut dt = MAX_DT;
        let mut wall = f64::INFINITY;
        for n in [self.nx, self.ny] {
            let h = 1.0 / (n as f64 - 1.0);
            wall = wall.min(WALL_DIFFUSION_NUMBER * h * h / nu);
            // |b| >= |a| + |c| in the ADI half-step systems.
            let excess = u / (2.0 * h) - nu / (h * h);
            if excess > 0.0 {
                dt = dt.min(0.9 / excess);
            }
        }
        (dt, wall.min(dt))
    }
}

/// Converged cavity state plus solver diagnostics.
#[derive(Debug, Clone)]
pub struct CavitySolution {
    pub ux: Field2D,
    pub uy: Field2D,
    pub psi: Field2D,
    pub omega: Field2D,
    pub iterations: usize,
    pub residual: f64,
    /// Pseudo-time residual after every iteration.
    pub residual_history: Vec<f64>,
}

/// Solve the steady cavity and return `(u_x, u_y)`.
pub fn solve_cavity(re: f64, nx: usize, ny: usize, tol: f64, max_iters: usize) -> Result<(Field2D, Field2D)> {
    let sol = CavityParams::new(re, nx, ny).with_tol(tol).with_max_iters(max_iters).solve()?;
    Ok((sol.ux, sol.uy))
}

impl CavityParams {
    pub fn solve(&self) -> Result<CavitySolution> {
        self.validate()?;
        Solver::new(self).run()
    }

    /// Solve starting from another (typically coarser) solution, interpolated
    /// onto this grid. Converges to the same discrete steady state as `solve`.
    pub fn solve_from(&self, guess: &CavitySolution) -> Result<CavitySolution> {
        self.validate()?;
        let mut solver = Solver::new(self);
        solver.psi = guess.psi.resample(self.nx, self.ny).into_values();
        solver.omega = guess.omega.resample(self.nx, self.ny).into_values();
        solver.apply_vorticity_walls();
        solver.recover_velocity();
        solver.run()
    }

    /// Solve by grid sequencing: converge on successively halved grids first
    /// (down to `coarsest` nodes per side) and warm-start each finer level.
    pub fn solve_sequenced(&self, coarsest: usize) -> Result<CavitySolution> {
        self.validate()?;
        let mut levels = vec![(self.nx, self.ny)];
        while levels.last().is_some_and(|&(a, b)| a / 2 >= coarsest && b / 2 >= coarsest) {
            let &(a, b) = levels.last().unwrap();
            levels.push((a / 2, b / 2));
        }
        levels.reverse();
        let mut current: Option<CavitySolution> = None;
        for (nx, ny) in levels {
            let mut p = self.clone();
            p.nx = nx;
            p.ny = ny;
            current = Some(match &current {
                None => p.solve()?,
                Some(prev) => p.solve_from(prev)?,
            });
        }
        Ok(current.expect("at least one level"))
    }
}

/// Solve a Reynolds sweep in the given order, warm-starting each case from the
/// previous converged state. Each result is a converged steady state of its
/// own Reynolds number; warm starts change only the iteration count.
pub fn solve_cavity_sweep(
    reynolds: &[f64],
    nx: usize,
    ny: usize,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<CavitySolution>> {
    let mut out: Vec<CavitySolution> = Vec::with_capacity(reynolds.len());
    for (index, &re) in reynolds.iter().enumerate() {
        let p = CavityParams::new(re, nx, ny).with_tol(tol).with_max_iters(max_iters);
        let sol = match out.last() {
            None => p.solve(),
            Some(prev) => p.solve_from(prev),
        }
        .map_err(|e| e.in_stage(format!("cavity Re={re} (sweep index {index})")))?;
        log::debug!("cavity Re={re} {nx}x{ny}: {} iterations", sol.iterations);
        out.push(sol);
    }
    Ok(out)
}

struct Solver<'a> {
    p: &'a CavityParams,
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    nu: f64,
    /// Local pseudo-time step per node.
    dt: Vec<f64>,
    sor: f64,
    psi: Vec<f64>,
    omega: Vec<f64>,
    ux: Vec<f64>,
    uy: Vec<f64>,
}

impl<'a> Solver<'a> {
    fn new(p: &'a CavityParams) -> Self {
        let (nx, ny) = (p.nx, p.ny);
        let hx = 1.0 / (nx as f64 - 1.0);
        let hy = 1.0 / (ny as f64 - 1.0);
        let hmax = hx.max(hy);
        let sor = 2.0 / (1.0 + (std::f64::consts::PI * hmax).sin());
        let n = nx * ny;
        let (dt_interior, dt_wall) = p.time_steps();
        let band = p.wall_band;
        let mut dt = vec![dt_interior; n];
        for j in 0..ny {
            for i in 0..nx {
                let d = i.min(j).min(nx - 1 - i).min(ny - 1 - j);
                if d <= band {
                    dt[j * nx + i] = dt_wall;
                }
            }
        }
        let mut s = Self {
            p,
            nx,
            ny,
            hx,
            hy,
            nu: 1.0 / p.reynolds,
            dt,
            sor,
            psi: vec![0.0; n],
            omega: vec![0.0; n],
            ux: vec![0.0; n],
            uy: vec![0.0; n],
        };
        s.apply_velocity_walls();
        s.apply_vorticity_walls();
        s
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    fn apply_velocity_walls(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        for i in 0..nx {
            let b = self.at(i, 0);
            let t = self.at(i, ny - 1);
            self.ux[b] = 0.0;
            self.uy[b] = 0.0;
            self.ux[t] = if i == 0 || i == nx - 1 { 0.0 } else { self.p.lid_speed };
            self.uy[t] = 0.0;
        }
        for j in 0..ny {
            let l = self.at(0, j);
            let r = self.at(nx - 1, j);
            self.ux[l] = 0.0;
            self.uy[l] = 0.0;
            self.ux[r] = 0.0;
            self.uy[r] = 0.0;
        }
        // Lid corners belong to the side walls.
        let tl = self.at(0, ny - 1);
        let tr = self.at(nx - 1, ny - 1);
        self.ux[tl] = 0.0;
        self.ux[tr] = 0.0;
    }

    /// Thom's second-order-accurate wall vorticity.
    fn apply_vorticity_walls(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        let (hx2, hy2) = (self.hx * self.hx, self.hy * self.hy);
        let lid = self.p.lid_speed;
        for i in 1..nx - 1 {
            let b = self.at(i, 0);
            self.omega[b] = -2.0 * self.psi[self.at(i, 1)] / hy2;
            let t = self.at(i, ny - 1);
            self.omega[t] = -2.0 * self.psi[self.at(i, ny - 2)] / hy2 - 2.0 * lid / self.hy;
        }
        for j in 1..ny - 1 {
            let l = self.at(0, j);
            self.omega[l] = -2.0 * self.psi[self.at(1, j)] / hx2;
            let r = self.at(nx - 1, j);
            self.omega[r] = -2.0 * self.psi[self.at(nx - 2, j)] / hx2;
        }
        // Corners never enter the five-point stencils; keep them as the mean of their neighbours.
        for (c, a, b) in [
            (self.at(0, 0), self.at(1, 0), self.at(0, 1)),
            (self.at(nx - 1, 0), self.at(nx - 2, 0), self.at(nx - 1, 1)),
            (self.at(0, ny - 1), self.at(1, ny - 1), self.at(0, ny - 2)),
            (self.at(nx - 1, ny - 1), self.at(nx - 2, ny - 1), self.at(nx - 1, ny - 2)),
        ] {
            self.omega[c] = 0.5 * (self.omega[a] + self.omega[b]);
        }
    }

    fn recover_velocity(&mut self) {
        let (nx, ny) = (self.nx, self.ny);
        for j in 1..ny - 1 {
            for i in 1..nx - 1 {
                let k = self.at(i, j);
                self.ux[k] = (self.psi[k + nx] - self.psi[k - nx]) / (2.0 * self.hy);
                self.uy[k] = -(self.psi[k + 1] - self.psi[k - 1]) / (2.0 * self.hx);
            }
        }
    }

    fn poisson_sweeps(&mut self, sweeps: usize) {
        let (nx, ny) = (self.nx, self.ny);
        let (ax, ay) = (1.0 / (self.hx * self.hx), 1.0 / (self.hy * self.hy));
        let diag = 2.0 * (ax + ay);
        let w = self.sor;
        for _ in 0..sweeps {
            for j in 1..ny - 1 {
                for i in 1..nx - 1 {
                    let k = j * nx + i;
                    let gs = (ax * (self.psi[k + 1] + self.psi[k - 1])
                        + ay * (self.psi[k + nx] + self.psi[k - nx])
                        + self.omega[k])
                        / diag;
                    self.psi[k] += w * (gs - self.psi[k]);
                }
            }
        }
    }

    /// One Peaceman-Rachford step for the interior vorticity with frozen velocity and wall values.
    fn adi_step(&self, omega_half: &mut [f64], omega_new: &mut [f64], scratch: &mut Tridiag) {
        let (nx, ny) = (self.nx, self.ny);
        let (cx0, cy0) = (0.25 / self.hx, 0.25 / self.hy);
        let (dx0, dy0) = (0.5 * self.nu / (self.hx * self.hx), 0.5 * self.nu / (self.hy * self.hy));
        let w = &self.omega;
        omega_half.copy_from_slice(w);
        omega_new.copy_from_slice(w);

        // Implicit in x, explicit in y.
        for j in 1..ny - 1 {
            scratch.clear();
            for i in 1..nx - 1 {
                let k = j * nx + i;
                let dt = self.dt[k];
                let (cu, cv) = (dt * cx0 * self.ux[k], dt * cy0 * self.uy[k]);
                let (dx, dy) = (dt * dx0, dt * dy0);
                let explicit_y = -cv * (w[k + nx] - w[k - nx]) + dy * (w[k + nx] - 2.0 * w[k] + w[k - nx]);
                let lo = -(cu + dx);
                let up = cu - dx;
                let mut rhs = w[k] + explicit_y;
                if i == 1 {
                    rhs -= lo * w[k - 1];
                }
                if i == nx - 2 {
                    rhs -= up * w[k + 1];
                }
                scratch.push(lo, 1.0 + 2.0 * dx, up, rhs);
            }
            let sol = scratch.solve();
            omega_half[j * nx + 1..j * nx + nx - 1].copy_from_slice(sol);
        }

        // Implicit in y, explicit in x.
        let wh = &*omega_half;
        for i in 1..nx - 1 {
            scratch.clear();
            for j in 1..ny - 1 {
                let k = j * nx + i;
                let dt = self.dt[k];
                let (cu, cv) = (dt * cx0 * self.ux[k], dt * cy0 * self.uy[k]);
                let (dx, dy) = (dt * dx0, dt * dy0);
                let explicit_x = -cu * (wh[k + 1] - wh[k - 1]) + dx * (wh[k + 1] - 2.0 * wh[k] + wh[k - 1]);
                let lo = -(cv + dy);
                let up = cv - dy;
                let mut rhs = wh[k] + explicit_x;
                if j == 1 {
                    rhs -= lo * wh[k - nx];
                }
                if j == ny - 2 {
                    rhs -= up * wh[k + nx];
                }
                scratch.push(lo, 1.0 + 2.0 * dy, up, rhs);
            }
            let sol = scratch.solve();
            for (jj, value) in sol.iter().enumerate() {
                omega_new[(jj + 1) * nx + i] = *value;
            }
        }
    }

    fn run(mut self) -> Result<CavitySolution> {
        let n = self.nx * self.ny;
        let mut omega_half = vec![0.0; n];
        let mut omega_new = vec![0.0; n];
        let mut scratch = Tridiag::with_capacity(self.nx.max(self.ny));
        let mut history = Vec::new();
        let mut residual = f64::INFINITY;

        for iter in 1..=self.p.max_iters {
            self.adi_step(&mut omega_half, &mut omega_new, &mut scratch);
            std::mem::swap(&mut self.omega, &mut omega_new);
            // `omega_new` now holds the previous iterate.
            self.poisson_sweeps(self.p.poisson_sweeps);
            self.apply_vorticity_walls();
            self.recover_velocity();

            residual = self
                .omega
                .iter()
                .zip(&omega_new)
                .zip(&self.dt)
                .fold(0.0_f64, |m, ((a, b), dt)| m.max((a - b).abs() / dt));
            history.push(residual);
            if !residual.is_finite() {
                return Err(Error::NonConvergence { iterations: iter, residual });
            }
            if residual <= self.p.tol {
                return Ok(self.finish(iter, residual, history));
            }
        }
        Err(Error::NonConvergence { iterations: self.p.max_iters, residual })
    }

    fn finish(mut self, iterations: usize, residual: f64, residual_history: Vec<f64>) -> CavitySolution {
        self.recover_velocity();
        self.apply_velocity_walls();
        let (nx, ny) = (self.nx, self.ny);
        let mk = |v: Vec<f64>| Field2D::new(nx, ny, v).expect("solver arrays match the grid");
        CavitySolution {
            ux: mk(self.ux),
            uy: mk(self.uy),
            psi: mk(self.psi),
            omega: mk(self.omega),
            iterations,
            residual,
            residual_history,
        }
    }
}

/// Thomas-algorithm workspace for the ADI line solves.
struct Tridiag {
    lo: Vec<f64>,
    di: Vec<f64>,
    up: Vec<f64>,
    rhs: Vec<f64>,
}

impl Tridiag {
    fn with_capacity(n: usize) -> Self {
        Self {
            lo: Vec::with_capacity(n),
            di: Vec::with_capacity(n),
            up: Vec::with_capacity(n),
            rhs: Vec::with_capacity(n),
        }
    }

    fn clear(&mut self) {
        self.lo.clear();
        self.di.clear();
        self.up.clear();
        self.rhs.clear();
    }

    fn push(&mut self, lo: f64, di: f64, up: f64, rhs: f64) {
        self.lo.push(lo);
        self.di.push(di);
        self.up.push(up);
        self.rhs.push(rhs);
    }

    /// Solve in place; returns the solution stored in `rhs`.
    fn solve(&mut self) -> &[f64] {
        let n = self.di.len();
        for k in 1..n {
            let m = self.lo[k] / self.di[k - 1];
            self.di[k] -= m * self.up[k - 1];
            self.rhs[k] -= m * self.rhs[k - 1];
        }
        self.rhs[n - 1] /= self.di[n - 1];
        for k in (0..n - 1).rev() {
            self.rhs[k] = (self.rhs[k] - self.up[k] * self.rhs[k + 1]) / self.di[k];
        }
        &self.rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_solves_a_small_system() {
        let mut t = Tridiag::with_capacity(3);
        // [2 1 0; 1 2 1; 0 1 2] x = [3 4 3] -> x = [1 1 1]
        t.push(0.0, 2.0, 1.0, 3.0);
        t.push(1.0, 2.0, 1.0, 4.0);
        t.push(1.0, 2.0, 0.0, 3.0);
        let x = t.solve().to_vec();
        for v in x {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(CavityParams::new(0.5, 32, 32).solve(), Err(Error::InvalidArgument(_))));
        assert!(matches!(CavityParams::new(100.0, 8, 8).solve(), Err(Error::InvalidArgument(_))));
        assert!(matches!(CavityParams::new(100.0, 48, 32).solve(), Err(Error::NotPowerOfTwo(48))));
        let mut p = CavityParams::new(100.0, 48, 32);
        p.encode_bound = false;
        p.max_iters = 1;
        assert!(matches!(p.solve(), Err(Error::NonConvergence { iterations: 1, .. })));
    }

    #[test]
    fn reports_final_residual_on_non_convergence() {
        let err = CavityParams::new(100.0, 16, 16).with_max_iters(5).solve().unwrap_err();
        match err {
            Error::NonConvergence { iterations, residual } => {
                assert_eq!(iterations, 5);
                assert!(residual.is_finite() && residual > 0.0);
            }
            e => panic!("unexpected error {e}"),
        }
    }
}
