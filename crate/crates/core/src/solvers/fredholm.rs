//! Deterministic solution of the integral form along free-flight
//! trajectories, with the non-advective continuum operator as the kernel.

use rayon::prelude::*;

use super::config::{FredholmMethod, SolverConfig};
use super::interpolation::shift_plane_2d;
use super::operator::LinearOperator;
use crate::error::{Result, WignerError};
use crate::phasespace::{LinearEMField, PhaseSpaceGrid};
use crate::transform::WignerState;

/// Diagnostics of a resolvent solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FredholmReport {
    pub method: FredholmMethod,
    pub gamma0: f64,
    pub steps: usize,
    /// Total fixed-point sweeps (summed over levels when marching).
    pub iterations: usize,
    /// Largest final relative change over all levels.
    pub final_residual: f64,
}

/// Auxiliary rate used when `config.gamma0` is unset: the kernel l1 bound,
/// or `1/max(t_end, dt)` for a vanishing kernel.
pub fn default_gamma0(kernel: &LinearOperator, config: &SolverConfig) -> f64 {
    let g = kernel.max_l1();
    if g > 0.0 {
        g
    } else {
        1.0 / config.t_end.max(config.dt)
    }
}

struct Integrator<'a> {
    kernel: &'a LinearOperator,
    grid: &'a PhaseSpaceGrid,
    config: &'a SolverConfig,
    gamma: f64,
    /// Velocities of every momentum plane.
    velocity: Vec<[f64; 2]>,
}

impl Integrator<'_> {
    /// `(K + γ)f` as a flat array.
    fn source(&self, f: &[f64], time: f64) -> Result<Vec<f64>> {
        let state = WignerState::from_values(self.grid, f.to_vec(), time)?;
        let mut g = self.kernel.apply(&state)?.values;
        g.par_iter_mut().zip(f).for_each(|(g, f)| *g += self.gamma * f);
        Ok(g)
    }

    /// Adds `w·plane(x − v·τ)` for every momentum plane of `src` into `out`.
    fn add_shifted(&self, src: &[f64], tau: f64, w: f64, out: &mut [f64]) {
        let n_space = self.grid.n_space();
        let (boundary, kind) = (self.config.boundary, self.config.interpolation);
        out.par_chunks_mut(n_space)
            .zip(src.par_chunks(n_space))
            .enumerate()
            .for_each_init(
                || (Vec::new(), vec![0.0; n_space]),
                |(scratch, buf), (mf, (o, s))| {
                    let v = self.velocity[mf];
                    shift_plane_2d(s, self.grid, [v[0] * tau, v[1] * tau], boundary, kind, scratch, buf);
                    for (o, b) in o.iter_mut().zip(buf.iter()) {
                        *o += w * b;
                    }
                },
            );
    }

    /// Everything in level `n` except its own `(dt/2)·g_n` term.
    fn history(&self, f0: &[f64], g: &[Vec<f64>], n: usize) -> Vec<f64> {
        let dt = self.config.dt;
        let t = n as f64 * dt;
        let mut h = vec![0.0; f0.len()];
        self.add_shifted(f0, t, (-self.gamma * t).exp(), &mut h);
        for (l, gl) in g.iter().enumerate().take(n) {
            let tau = (n - l) as f64 * dt;
            let w = if l == 0 { 0.5 } else { 1.0 };
            self.add_shifted(gl, tau, w * dt * (-self.gamma * tau).exp(), &mut h);
        }
        h
    }
}

fn relative_change(new: &[f64], old: &[f64]) -> f64 {
    let (mut d, mut n) = (0.0, 0.0);
    for (a, b) in new.iter().zip(old) {
        d += (a - b) * (a - b);
        n += a * a;
    }
    if n > 0.0 {
        (d / n).sqrt()
    } else {
        d.sqrt()
    }
}

/// Solves the integral equation on the levels `t_n = n·dt` up to
/// `config.t_end` and returns the final level.
///
/// The time integral is the composite trapezoid rule and the kernel source
/// is shifted along each momentum plane's trajectory by separable Lagrange
/// interpolation.
pub fn solve_fredholm_resolvent(
    f0: &WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<(WignerState, FredholmReport)> {
    config.validate(grid)?;
    f0.check_grid(grid)?;
    let kernel = LinearOperator::continuum_kernel(field, grid, config)?;
    let gamma = config.gamma0.unwrap_or_else(|| default_gamma0(&kernel, config));
    let m = grid.constants().mass_m;
    let velocity = (0..grid.n_momentum())
        .map(|mf| {
            let p = grid.momentum(mf);
            [p[0] / m, p[1] / m]
        })
        .collect();
    let it = Integrator { kernel: &kernel, grid, config, gamma, velocity };
    let steps = config.n_steps()?;
    let half = 0.5 * config.dt;
    let (levels, iterations, final_residual) = match config.fredholm_method {
        FredholmMethod::Marching => march(&it, &f0.values, steps, half)?,
        FredholmMethod::GlobalNeumann => global(&it, &f0.values, steps, half)?,
    };
    let f = WignerState::from_values(grid, levels, steps as f64 * config.dt)?;
    let report = FredholmReport {
        method: config.fredholm_method,
        gamma0: gamma,
        steps,
        iterations,
        final_residual,
    };
    Ok((f, report))
}

fn march(it: &Integrator, f0: &[f64], steps: usize, half: f64) -> Result<(Vec<f64>, usize, f64)> {
    let cfg = it.config;
    let mut g = vec![it.source(f0, 0.0)?];
    let mut f = f0.to_vec();
    let mut iterations = 0;
    let mut worst = 0.0f64;
    for n in 1..=steps {
        let t = n as f64 * cfg.dt;
        let h = it.history(f0, &g, n);
        // start from the previous level's source
        let mut cur: Vec<f64> = h.iter().zip(&g[n - 1]).map(|(h, g)| h + half * g).collect();
        let mut residuals = Vec::new();
        let mut gn;
        loop {
            gn = it.source(&cur, t)?;
            let next: Vec<f64> = h.iter().zip(&gn).map(|(h, g)| h + half * g).collect();
            let r = relative_change(&next, &cur);
            residuals.push(r);
            iterations += 1;
            cur = next;
            if r < cfg.fredholm_tolerance {
                break;
            }
            if residuals.len() >= cfg.max_iterations {
                return Err(WignerError::NotConverged {
                    iterations: residuals.len(),
                    residuals,
                });
            }
        }
        worst = worst.max(*residuals.last().unwrap_or(&0.0));
        g.push(it.source(&cur, t)?);
        f = cur;
    }
    Ok((f, iterations, worst))
}

fn global(it: &Integrator, f0: &[f64], steps: usize, half: f64) -> Result<(Vec<f64>, usize, f64)> {
    let cfg = it.config;
    // the zeroth iterate is attenuated free flight of f0
    let mut levels: Vec<Vec<f64>> = (0..=steps).map(|n| it.history(f0, &[], n)).collect();
    let mut residuals = Vec::new();
    loop {
        let g = levels
            .iter()
            .enumerate()
            .map(|(n, f)| it.source(f, n as f64 * cfg.dt))
            .collect::<Result<Vec<_>>>()?;
        let mut next = Vec::with_capacity(steps + 1);
        next.push(f0.to_vec());
        for n in 1..=steps {
            let mut h = it.history(f0, &g, n);
            h.iter_mut().zip(&g[n]).for_each(|(h, g)| *h += half * g);
            next.push(h);
        }
        let (mut d, mut s) = (0.0, 0.0);
        for (a, b) in next.iter().flatten().zip(levels.iter().flatten()) {
            d += (a - b) * (a - b);
            s += a * a;
        }
        let r = if s > 0.0 { (d / s).sqrt() } else { d.sqrt() };
        residuals.push(r);
        levels = next;
        if r < cfg.fredholm_tolerance {
            let n = residuals.len();
            return Ok((levels.pop().unwrap_or_default(), n, r));
        }
        if residuals.len() >= cfg.max_iterations {
            return Err(WignerError::NotConverged {
                iterations: residuals.len(),
                residuals,
            });
        }
    }
}
