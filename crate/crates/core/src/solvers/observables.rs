//! Moments of a Wigner state over momentum.

use crate::error::Result;
use crate::phasespace::PhaseSpaceGrid;
use crate::transform::WignerState;

/// Default density floor below which the mean momentum is not reported.
pub const DEFAULT_DENSITY_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    /// `n(x) = Σ_M f(M, x)`.
    pub density: Vec<f64>,
    /// `⟨P⟩(x) = Σ_M P_M f / n`, absent where `|n|` is below the floor.
    pub mean_momentum: Vec<Option<[f64; 3]>>,
    /// `Σ_{M,x} f·dV`.
    pub total_mass: f64,
    /// `Σ_{M,x} P_M f·dV / total_mass`.
    pub global_mean_momentum: Option<[f64; 3]>,
}

/// Moments with the floor taken relative to the largest `|n(x)|`.
pub fn observables(f: &WignerState, grid: &PhaseSpaceGrid) -> Result<Observables> {
    observables_with_floor(f, grid, DEFAULT_DENSITY_FLOOR)
}

pub fn observables_with_floor(f: &WignerState, grid: &PhaseSpaceGrid, floor: f64) -> Result<Observables> {
    f.check_grid(grid)?;
    let n_space = grid.n_space();
    let dim = grid.dim();
    let mut density = vec![0.0; n_space];
    let mut flux = vec![[0.0; 3]; n_space];
    for mf in 0..grid.n_momentum() {
        let p = grid.momentum(mf);
        for (ix, v) in f.plane(mf).iter().enumerate() {
            density[ix] += v;
            for d in 0..dim {
                flux[ix][d] += p[d] * v;
            }
        }
    }
    let peak = density.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let cut = floor * peak;
    let mean_momentum = density
        .iter()
        .zip(&flux)
        .map(|(n, j)| {
            (n.abs() > cut && *n != 0.0).then(|| [j[0] / n, j[1] / n, j[2] / n])
        })
        .collect();
    let dv = grid.cell_volume();
    let total_mass = density.iter().sum::<f64>() * dv;
    let mut total_flux = [0.0; 3];
    for j in &flux {
        for d in 0..3 {
            total_flux[d] += j[d] * dv;
        }
    }
    let global_mean_momentum = (total_mass != 0.0).then(|| {
        [
            total_flux[0] / total_mass,
            total_flux[1] / total_mass,
            total_flux[2] / total_mass,
        ]
    });
    Ok(Observables {
        density,
        mean_momentum,
        total_mass,
        global_mean_momentum,
    })
}
