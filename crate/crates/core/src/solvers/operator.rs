//! Right-hand sides of the linear-field semi-discrete equation and of its
//! long-coherence-length limit, sharing one ladder-based engine.

use rayon::prelude::*;

use super::config::{AdvectionScheme, Boundary, SolverConfig};
use super::stencil::{add_derivative, spatial_derivative, Difference, Ladder};
use crate::error::{Result, WignerError};
use crate::kernels::{c1, c2, B1Convention, LinearKernelCoefficients};
use crate::phasespace::{LinearEMField, PhaseSpaceGrid};
use crate::transform::WignerState;

/// Which model equation an operator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    SemiDiscrete(B1Convention),
    Continuum,
}

/// A spatial-derivative term `coef·(L_1 ∘ … ∘ L_k)(∂f/∂x_axis)`.
#[derive(Debug, Clone)]
struct DerivativeTerm {
    axis: usize,
    coef: f64,
    ladders: Vec<Ladder>,
}

/// One phase-space stencil entry: `coef·f(momentum, position)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilEntry {
    pub momentum: [i64; 3],
    pub position: [f64; 3],
    pub coef: f64,
}

/// Linear evolution operator on 2D Wigner states.
#[derive(Debug, Clone)]
pub struct LinearOperator {
    grid: PhaseSpaceGrid,
    field: LinearEMField,
    model: Model,
    boundary: Boundary,
    advection: Option<AdvectionScheme>,
    force: [Option<Ladder>; 2],
    derivative_terms: Vec<DerivativeTerm>,
    positions: Vec<[f64; 3]>,
}

fn require_2d(grid: &PhaseSpaceGrid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(WignerError::Unsupported(format!(
            "evolution is implemented in 2D, got {}D",
            grid.dim()
        )));
    }
    Ok(())
}

fn force_active(field: &LinearEMField, axis: usize) -> bool {
    let magnetic = field.b0 != 0.0 || field.b1 != 0.0;
    let electric = if axis == 0 { field.e_grad_x } else { field.e_grad_y } != 0.0;
    magnetic || electric
}

impl LinearOperator {
    /// Finite-coherence-length equation with the closed-form coefficients.
    pub fn semidiscrete(
        coeffs: &LinearKernelCoefficients,
        grid: &PhaseSpaceGrid,
        config: &SolverConfig,
    ) -> Result<Self> {
        require_2d(grid)?;
        if coeffs.n_p != [grid.axis(0).n_p, grid.axis(1).n_p]
            || coeffs.dp != [grid.axis(0).dp, grid.axis(1).dp]
        {
            return Err(WignerError::ShapeMismatch {
                expected: "coefficients assembled for this grid".into(),
                found: format!("n_p {:?}", coeffs.n_p),
            });
        }
        let field = coeffs.field;
        let trunc = config.m_truncation.unwrap_or(coeffs.truncation);
        let ladder = |axis: usize| {
            let dp = grid.axis(axis).dp;
            Ladder::new(grid, axis, trunc, move |m| c1(m, dp))
        };
        let force = [
            force_active(&field, 0).then(|| ladder(0)),
            force_active(&field, 1).then(|| ladder(1)),
        ];
        let mut derivative_terms = Vec::new();
        if field.b1 != 0.0 {
            let pre = coeffs.b1_ladder_prefactor();
            let hbar2 = coeffs.hbar * coeffs.hbar;
            let ly2 = coeffs.coherence_length[1].powi(2);
            let dpy = grid.axis(1).dp;
            // `FT(s_y²)/ħ²` ladder including its zero mode
            let quad = |scale: f64| {
                Ladder::new(grid, 1, trunc, move |m| {
                    if m == 0 {
                        ly2 / (12.0 * hbar2)
                    } else {
                        scale * c2(m, dpy)
                    }
                })
            };
            match coeffs.convention {
                B1Convention::Derived => {
                    derivative_terms.push(DerivativeTerm {
                        axis: 0,
                        coef: pre,
                        ladders: vec![quad(1.0)],
                    });
                    derivative_terms.push(DerivativeTerm {
                        axis: 1,
                        coef: pre,
                        ladders: vec![ladder(0), ladder(1)],
                    });
                }
                B1Convention::AsPrinted => {
                    derivative_terms.push(DerivativeTerm {
                        axis: 0,
                        coef: pre,
                        ladders: vec![ladder(0), ladder(1)],
                    });
                    derivative_terms.push(DerivativeTerm {
                        axis: 1,
                        coef: pre,
                        ladders: vec![quad(2.0)],
                    });
                }
            }
        }
        Ok(Self::assemble(
            grid,
            field,
            Model::SemiDiscrete(coeffs.convention),
            config,
            Some(config.advection),
            force,
            derivative_terms,
        ))
    }

    /// Long-coherence-length limit with finite-difference momentum derivatives.
    pub fn continuum(field: &LinearEMField, grid: &PhaseSpaceGrid, config: &SolverConfig) -> Result<Self> {
        Self::continuum_with_advection(field, grid, config, Some(config.advection))
    }

    /// The continuum operator without its advection term: the kernel of the
    /// integral form.
    pub fn continuum_kernel(field: &LinearEMField, grid: &PhaseSpaceGrid, config: &SolverConfig) -> Result<Self> {
        Self::continuum_with_advection(field, grid, config, None)
    }

    fn continuum_with_advection(
        field: &LinearEMField,
        grid: &PhaseSpaceGrid,
        config: &SolverConfig,
        advection: Option<AdvectionScheme>,
    ) -> Result<Self> {
        require_2d(grid)?;
        let order = config.stencil_order;
        if order != 2 && order != 4 {
            return Err(WignerError::invalid("stencil_order", "must be 2 or 4"));
        }
        let force = [
            force_active(field, 0).then(|| Ladder::first_difference(grid, 0, order)),
            force_active(field, 1).then(|| Ladder::first_difference(grid, 1, order)),
        ];
        let mut derivative_terms = Vec::new();
        if field.b1 != 0.0 {
            let c = grid.constants();
            let c3 = field.b1 * c.hbar * c.hbar * c.charge_e / (12.0 * c.mass_m);
            derivative_terms.push(DerivativeTerm {
                axis: 0,
                coef: c3,
                ladders: vec![Ladder::second_difference(grid, 1, order)],
            });
            derivative_terms.push(DerivativeTerm {
                axis: 1,
                coef: -c3,
                ladders: vec![
                    Ladder::first_difference(grid, 0, order),
                    Ladder::first_difference(grid, 1, order),
                ],
            });
        }
        Ok(Self::assemble(
            grid,
            *field,
            Model::Continuum,
            config,
            advection,
            force,
            derivative_terms,
        ))
    }

    fn assemble(
        grid: &PhaseSpaceGrid,
        field: LinearEMField,
        model: Model,
        config: &SolverConfig,
        advection: Option<AdvectionScheme>,
        force: [Option<Ladder>; 2],
        derivative_terms: Vec<DerivativeTerm>,
    ) -> Self {
        Self {
            grid: grid.clone(),
            field,
            model,
            boundary: config.boundary,
            advection,
            force,
            derivative_terms,
            positions: (0..grid.n_space()).map(|i| grid.position(i)).collect(),
        }
    }

    pub fn grid(&self) -> &PhaseSpaceGrid {
        &self.grid
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn field(&self) -> &LinearEMField {
        &self.field
    }

    /// `−e[E + P/m × B]` component `axis` at momentum `p` and position `x`.
    #[inline]
    pub fn lorentz(&self, axis: usize, p: [f64; 3], x: [f64; 3]) -> f64 {
        let c = self.grid.constants();
        let b = self.field.bz(x[1]);
        if axis == 0 {
            -c.charge_e * (self.field.e_grad_x * x[0] + p[1] * b / c.mass_m)
        } else {
            -c.charge_e * (self.field.e_grad_y * x[1] - p[0] * b / c.mass_m)
        }
    }

    /// Time derivative of `f`.
    pub fn apply(&self, f: &WignerState) -> Result<WignerState> {
        f.check_grid(&self.grid)?;
        let grid = &self.grid;
        let n_space = grid.n_space();
        let shape = grid.space_shape();
        let m = grid.constants().mass_m;
        let mut out = vec![0.0; f.values.len()];

        if let Some(scheme) = self.advection {
            let boundary = self.boundary;
            out.par_chunks_mut(n_space).enumerate().for_each(|(mf, o)| {
                let p = grid.momentum(mf);
                let plane = f.plane(mf);
                for d in 0..2 {
                    let v = p[d] / m;
                    if v == 0.0 {
                        continue;
                    }
                    let diff = Difference::for_advection(scheme, v);
                    add_derivative(plane, &shape, d, grid.axis(d).dx, boundary, diff, -v, o);
                }
            });
        }

        for (axis, ladder) in self.force.iter().enumerate() {
            let Some(ladder) = ladder else { continue };
            let g = ladder.apply(&f.values, grid);
            out.par_chunks_mut(n_space).enumerate().for_each(|(mf, o)| {
                let p = grid.momentum(mf);
                let gp = &g[mf * n_space..(mf + 1) * n_space];
                for ((v, gx), x) in o.iter_mut().zip(gp).zip(&self.positions) {
                    *v += self.lorentz(axis, p, *x) * gx;
                }
            });
        }

        for term in &self.derivative_terms {
            let mut d = spatial_derivative(&f.values, grid, term.axis, self.boundary);
            for ladder in &term.ladders {
                d = ladder.apply(&d, grid);
            }
            out.par_iter_mut().zip(&d).for_each(|(o, v)| *o += term.coef * v);
        }
        WignerState::from_values(grid, out, f.time)
    }

    /// Stencil of the non-advective part at an arbitrary position, in the
    /// same form as [`LinearOperator::apply`] with second-order spatial
    /// differences on `x ± dx`. Entries reaching outside Ω under
    /// [`Boundary::ZeroOutside`] are dropped; periodic positions are wrapped.
    pub fn stencil_at(&self, momentum: [i64; 3], x: [f64; 3], out: &mut Vec<StencilEntry>) {
        out.clear();
        let grid = &self.grid;
        let slot = |d: usize, m: i64| (m + grid.axis(d).n_p as i64) as usize;
        let mut p = [0.0; 3];
        for d in 0..2 {
            p[d] = momentum[d] as f64 * grid.axis(d).dp;
        }
        for (axis, ladder) in self.force.iter().enumerate() {
            let Some(ladder) = ladder else { continue };
            let pref = self.lorentz(axis, p, x);
            if pref == 0.0 {
                continue;
            }
            for e in ladder.groups[slot(axis, momentum[axis])].iter().flatten() {
                let mut mm = momentum;
                mm[axis] -= e.offset;
                out.push(StencilEntry {
                    momentum: mm,
                    position: x,
                    coef: pref * e.coef,
                });
            }
        }
        for term in &self.derivative_terms {
            // compose the ladders (each acts on its own axis)
            let mut partial: Vec<([i64; 3], f64)> = vec![(momentum, term.coef)];
            for ladder in term.ladders.iter().rev() {
                let mut next = Vec::new();
                for (mm, c) in &partial {
                    for e in ladder.groups[slot(ladder.axis, mm[ladder.axis])].iter().flatten() {
                        let mut src = *mm;
                        src[ladder.axis] -= e.offset;
                        next.push((src, c * e.coef));
                    }
                }
                partial = next;
            }
            let dx = grid.axis(term.axis).dx;
            for (sign, w) in [(1.0, 0.5 / dx), (-1.0, -0.5 / dx)] {
                let mut pos = x;
                pos[term.axis] += sign * dx;
                let Some(pos) = self.wrap(pos) else { continue };
                for (mm, c) in &partial {
                    out.push(StencilEntry {
                        momentum: *mm,
                        position: pos,
                        coef: c * w,
                    });
                }
            }
        }
    }

    /// Maps a position into Ω according to the boundary policy; `None` when
    /// it lies outside under [`Boundary::ZeroOutside`].
    pub fn wrap(&self, mut x: [f64; 3]) -> Option<[f64; 3]> {
        for d in 0..2 {
            let a = self.grid.axis(d);
            let half = 0.5 * a.omega_extent;
            match self.boundary {
                Boundary::Periodic => {
                    x[d] = (x[d] + half).rem_euclid(a.omega_extent) - half;
                }
                Boundary::ZeroOutside => {
                    if x[d].abs() > half {
                        return None;
                    }
                }
            }
        }
        Some(x)
    }

    /// Largest l1 norm of the non-advective stencil over all grid cells.
    pub fn max_l1(&self) -> f64 {
        let grid = &self.grid;
        let mut best = 0.0f64;
        let mut buf = Vec::new();
        for mf in 0..grid.n_momentum() {
            let m = grid.momentum_indices(mf);
            for x in &self.positions {
                self.stencil_at(m, *x, &mut buf);
                best = best.max(buf.iter().map(|e| e.coef.abs()).sum());
            }
        }
        best
    }
}

/// `∂f/∂t` of the finite-coherence-length linear-field equation.
pub fn rhs_semidiscrete(
    f: &WignerState,
    coeffs: &LinearKernelCoefficients,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<WignerState> {
    LinearOperator::semidiscrete(coeffs, grid, config)?.apply(f)
}

/// `∂f/∂t` of the long-coherence-length equation with finite-difference
/// momentum derivatives.
pub fn rhs_continuum_fd(
    f: &WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<WignerState> {
    LinearOperator::continuum(field, grid, config)?.apply(f)
}
