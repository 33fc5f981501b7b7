use serde::{Deserialize, Serialize};

use crate::error::{Result, WignerError};
use crate::kernels::B1Convention;
use crate::phasespace::PhaseSpaceGrid;

/// Spatial boundary policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `f = 0` outside Ω.
    #[default]
    ZeroOutside,
    Periodic,
}

/// Spatial discretisation of the advection term in the steppers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvectionScheme {
    Central2,
    #[default]
    Central4,
    Upwind1,
}

/// Lagrange interpolation used for off-grid lookups along trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    #[default]
    Cubic,
    Quintic,
}

impl Interpolation {
    pub fn points(self) -> usize {
        match self {
            Interpolation::Linear => 2,
            Interpolation::Cubic => 4,
            Interpolation::Quintic => 6,
        }
    }
}

/// How the discretised integral equation is driven to its fixed point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FredholmMethod {
    /// Level-by-level: every time level is converged before the next one.
    #[default]
    Marching,
    /// Whole-history Neumann iteration.
    GlobalNeumann,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Symmetric cutoff on ladder offsets; `None` uses the lattice half-range.
    pub m_truncation: Option<usize>,
    /// Auxiliary out-scattering rate; `None` uses the kernel l1 bound.
    pub gamma0: Option<f64>,
    /// Order of the momentum finite differences (2 or 4).
    pub stencil_order: usize,
    pub boundary: Boundary,
    pub advection: AdvectionScheme,
    pub interpolation: Interpolation,
    pub b1_convention: B1Convention,
    pub fredholm_method: FredholmMethod,
    pub fredholm_tolerance: f64,
    pub max_iterations: usize,
    pub rng_seed: u64,
    pub n_particles: usize,
    pub weight_cap: f64,
    /// Fraction of the state's l1 norm on the outermost momentum shell
    /// that triggers a diagnostic flag.
    pub boundary_mass_threshold: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: 1e-15,
            t_end: 1e-13,
            m_truncation: None,
            gamma0: None,
            stencil_order: 2,
            boundary: Boundary::ZeroOutside,
            advection: AdvectionScheme::Central4,
            interpolation: Interpolation::Cubic,
            b1_convention: B1Convention::Derived,
            fredholm_method: FredholmMethod::Marching,
            fredholm_tolerance: 1e-12,
            max_iterations: 200,
            rng_seed: 0,
            n_particles: 10_000,
            weight_cap: 1e6,
            boundary_mass_threshold: 1e-3,
        }
    }
}

/// Largest per-axis Courant number `dt·(n_p·ΔP/m)/dx`.
pub fn courant_number(grid: &PhaseSpaceGrid, dt: f64) -> f64 {
    let m = grid.constants().mass_m;
    grid.axes()
        .iter()
        .map(|a| dt * (a.n_p as f64 * a.dp / m) / a.dx)
        .fold(0.0, f64::max)
}

/// Advective stability cap on the Courant number.
pub const CFL_CAP: f64 = 0.5;

impl SolverConfig {
    /// Number of `dt` steps to reach `t_end`, requiring an integer ratio.
    pub fn n_steps(&self) -> Result<usize> {
        let r = self.t_end / self.dt;
        let n = r.round();
        if (r - n).abs() > 1e-9 * r.max(1.0) {
            return Err(WignerError::invalid(
                "t_end",
                format!("must be a whole number of steps of dt (got {r})"),
            ));
        }
        Ok(n as usize)
    }

    pub fn validate(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(WignerError::invalid("dt", "must be positive"));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(WignerError::invalid("t_end", "must be non-negative"));
        }
        self.n_steps()?;
        if let Some(g) = self.gamma0 {
            if !(g.is_finite() && g > 0.0) {
                return Err(WignerError::invalid("gamma0", "must be positive"));
            }
        }
        if self.stencil_order != 2 && self.stencil_order != 4 {
            return Err(WignerError::invalid("stencil_order", "must be 2 or 4"));
        }
        if self.m_truncation == Some(0) {
            return Err(WignerError::invalid("m_truncation", "must be positive"));
        }
        if !(self.fredholm_tolerance > 0.0) {
            return Err(WignerError::invalid("fredholm_tolerance", "must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(WignerError::invalid("max_iterations", "must be positive"));
        }
        if self.n_particles == 0 {
            return Err(WignerError::invalid("n_particles", "must be at least 1"));
        }
        if !(self.weight_cap > 1.0) {
            return Err(WignerError::invalid("weight_cap", "must exceed 1"));
        }
        let courant = courant_number(grid, self.dt);
        if courant > CFL_CAP * (1.0 + 1e-12) {
            return Err(WignerError::Cfl {
                courant,
                cap: CFL_CAP,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{make_grid, PhysicalConstants};

    #[test]
    fn cfl_is_enforced() {
        let g = make_grid(PhysicalConstants::default(), 2, 100e-9, 48e-9, 24, 8).unwrap();
        let mut c = SolverConfig {
            dt: 10e-15,
            t_end: 500e-15,
            ..SolverConfig::default()
        };
        c.validate(&g).unwrap();
        c.dt = 40e-15;
        c.t_end = 400e-15;
        assert!(matches!(c.validate(&g), Err(WignerError::Cfl { .. })));
    }

    #[test]
    fn horizon_must_be_whole_steps() {
        let c = SolverConfig {
            dt: 3.0,
            t_end: 10.0,
            ..SolverConfig::default()
        };
        assert!(c.n_steps().is_err());
        let c = SolverConfig {
            dt: 2.5e-15,
            t_end: 250e-15,
            ..SolverConfig::default()
        };
        assert_eq!(c.n_steps().unwrap(), 100);
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = make_grid(PhysicalConstants::default(), 2, 100e-9, 48e-9, 24, 8).unwrap();
        let base = SolverConfig {
            dt: 1e-15,
            t_end: 1e-14,
            ..SolverConfig::default()
        };
        for bad in [
            SolverConfig { gamma0: Some(0.0), ..base.clone() },
            SolverConfig { stencil_order: 3, ..base.clone() },
            SolverConfig { n_particles: 0, ..base.clone() },
            SolverConfig { dt: -1.0, ..base.clone() },
        ] {
            assert!(bad.validate(&g).is_err());
        }
    }
}
