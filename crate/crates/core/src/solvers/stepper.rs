//! Classical four-stage Runge–Kutta time stepping.

use rayon::prelude::*;

use super::config::SolverConfig;
use super::operator::{LinearOperator, Model};
use crate::error::{Result, WignerError};
use crate::kernels::LinearKernelCoefficients;
use crate::phasespace::{LinearEMField, PhaseSpaceGrid};
use crate::transform::WignerState;

/// Growth of the l2 norm over one step that aborts a run.
pub const INSTABILITY_GROWTH: f64 = 10.0;

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.par_iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// One RK4 step of `df/dt = op(f)`.
pub fn rk4_step(op: &LinearOperator, f: &WignerState, dt: f64) -> Result<WignerState> {
    let grid = op.grid();
    let k1 = op.apply(f)?;
    let s2 = WignerState::from_values(grid, axpy(&f.values, 0.5 * dt, &k1.values), f.time + 0.5 * dt)?;
    let k2 = op.apply(&s2)?;
    let s3 = WignerState::from_values(grid, axpy(&f.values, 0.5 * dt, &k2.values), f.time + 0.5 * dt)?;
    let k3 = op.apply(&s3)?;
    let s4 = WignerState::from_values(grid, axpy(&f.values, dt, &k3.values), f.time + dt)?;
    let k4 = op.apply(&s4)?;
    let values = f
        .values
        .par_iter()
        .enumerate()
        .map(|(i, v)| v + dt / 6.0 * (k1.values[i] + 2.0 * k2.values[i] + 2.0 * k3.values[i] + k4.values[i]))
        .collect();
    WignerState::from_values(grid, values, f.time + dt)
}

/// Diagnostics gathered along a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveReport {
    pub steps: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    /// Largest share of `Σ|f|` found on the outermost momentum shell.
    pub max_boundary_fraction: f64,
    /// Set when that share exceeded the configured threshold.
    pub boundary_flagged: bool,
}

/// Share of `Σ|f|` sitting on cells with some `|M_d| = n_p`.
pub fn boundary_fraction(f: &WignerState, grid: &PhaseSpaceGrid) -> f64 {
    let n_space = grid.n_space();
    let mut edge = 0.0;
    let mut total = 0.0;
    for mf in 0..grid.n_momentum() {
        let m = grid.momentum_indices(mf);
        let on_edge = (0..grid.dim()).any(|d| m[d].unsigned_abs() as usize == grid.axis(d).n_p);
        let s: f64 = f.values[mf * n_space..(mf + 1) * n_space].iter().map(|v| v.abs()).sum();
        total += s;
        if on_edge {
            edge += s;
        }
    }
    if total > 0.0 {
        edge / total
    } else {
        0.0
    }
}

/// Advances `f0` to `config.t_end`, calling `observer` after every step.
pub fn evolve(
    op: &LinearOperator,
    f0: &WignerState,
    config: &SolverConfig,
    mut observer: impl FnMut(usize, &WignerState),
) -> Result<(WignerState, EvolveReport)> {
    let grid = op.grid();
    config.validate(grid)?;
    f0.check_grid(grid)?;
    let steps = config.n_steps()?;
    let initial_mass = f0.mass(grid);
    let mut f = f0.clone();
    let mut norm = f.l2_norm();
    let mut max_boundary_fraction = boundary_fraction(&f, grid);
    for step in 1..=steps {
        let next = rk4_step(op, &f, config.dt)?;
        let n = next.l2_norm();
        let growth = if norm > 0.0 { n / norm } else { 1.0 };
        if !n.is_finite() || growth > INSTABILITY_GROWTH {
            return Err(WignerError::Unstable { step, growth });
        }
        norm = n;
        f = next;
        max_boundary_fraction = max_boundary_fraction.max(boundary_fraction(&f, grid));
        observer(step, &f);
    }
    let report = EvolveReport {
        steps,
        initial_mass,
        final_mass: f.mass(grid),
        max_boundary_fraction,
        boundary_flagged: max_boundary_fraction > config.boundary_mass_threshold,
    };
    Ok((f, report))
}

/// One step of the finite-coherence-length equation.
pub fn step_semidiscrete(
    f: &WignerState,
    coeffs: &LinearKernelCoefficients,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<WignerState> {
    config.validate(grid)?;
    let op = LinearOperator::semidiscrete(coeffs, grid, config)?;
    rk4_step(&op, f, config.dt)
}

/// One step of the long-coherence-length equation.
pub fn step_continuum(
    f: &WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<WignerState> {
    config.validate(grid)?;
    let op = LinearOperator::continuum(field, grid, config)?;
    debug_assert_eq!(op.model(), Model::Continuum);
    rk4_step(&op, f, config.dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{linear_coefficients, B1Convention};
    use crate::phasespace::make_grid;
    use crate::phasespace::PhysicalConstants;
    use crate::solvers::config::{AdvectionScheme, Boundary};

    const NM: f64 = 1e-9;
    const FS: f64 = 1e-15;

    fn setup() -> (PhaseSpaceGrid, WignerState) {
        let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 48.0 * NM, 24, 6).unwrap();
        let dp = g.axis(0).dp;
        let f = WignerState::phase_space_gaussian(&g, [0.0; 3], 6.0 * NM, [2.0 * dp, -dp, 0.0], 1.5 * dp);
        (g, f)
    }

    #[test]
    fn one_step_moves_the_packet_centre() {
        let (g, _) = setup();
        let dp = g.axis(0).dp;
        // narrow enough that the periodic wrap carries no weight
        let f = WignerState::phase_space_gaussian(&g, [0.0; 3], 4.0 * NM, [2.0 * dp, -dp, 0.0], 1.5 * dp);
        let cfg = SolverConfig {
            dt: 5.0 * FS,
            t_end: 5.0 * FS,
            boundary: Boundary::Periodic,
            ..SolverConfig::default()
        };
        let coeffs = linear_coefficients(&LinearEMField::default(), &g, B1Convention::Derived, None).unwrap();
        let next = step_semidiscrete(&f, &coeffs, &g, &cfg).unwrap();
        let m = g.constants().mass_m;
        let slot = g.momentum_slot([2, -1, 0]).unwrap();
        let centroid = |s: &WignerState| {
            let plane = s.plane(slot);
            let tot: f64 = plane.iter().sum();
            let mut c = [0.0; 2];
            for (ix, v) in plane.iter().enumerate() {
                let x = g.position(ix);
                c[0] += x[0] * v / tot;
                c[1] += x[1] * v / tot;
            }
            c
        };
        let (a, b) = (centroid(&f), centroid(&next));
        let v = [2.0 * g.axis(0).dp / m, -g.axis(1).dp / m];
        for d in 0..2 {
            assert!((b[d] - a[d] - v[d] * cfg.dt).abs() < 1e-3 * (v[d] * cfg.dt).abs());
        }
    }

    #[test]
    fn halving_dt_shows_fourth_order() {
        let (g, f) = setup();
        let field = LinearEMField::magnetic_only(1.0, 1e7);
        let base = SolverConfig {
            boundary: Boundary::Periodic,
            advection: AdvectionScheme::Central4,
            ..SolverConfig::default()
        };
        let run = |dt: f64| {
            let cfg = SolverConfig { dt, t_end: 40.0 * FS, ..base.clone() };
            let op = LinearOperator::continuum(&field, &g, &cfg).unwrap();
            evolve(&op, &f, &cfg, |_, _| {}).unwrap().0
        };
        let a = run(10.0 * FS);
        let b = run(5.0 * FS);
        let c = run(2.5 * FS);
        let e1 = a.relative_l2(&c).unwrap();
        let e2 = b.relative_l2(&c).unwrap();
        // e(dt) − e(dt/4) over e(dt/2) − e(dt/4) is 16·(1 − 1/16)/(1 − 1/4)·(1/4)… ≈ 17 for order four
        let ratio = e1 / e2;
        assert!(ratio > 12.0 && ratio < 22.0, "ratio {ratio}");
    }

    #[test]
    fn blow_up_is_detected() {
        let (g, f) = setup();
        let cfg = SolverConfig {
            dt: 10.0 * FS,
            t_end: 100.0 * FS,
            boundary: Boundary::Periodic,
            ..SolverConfig::default()
        };
        // an absurd field gradient makes the explicit scheme explode
        let field = LinearEMField { e_grad_x: 1e24, ..LinearEMField::default() };
        let op = LinearOperator::continuum(&field, &g, &cfg).unwrap();
        assert!(matches!(evolve(&op, &f, &cfg, |_, _| {}), Err(WignerError::Unstable { .. })));
    }
}
