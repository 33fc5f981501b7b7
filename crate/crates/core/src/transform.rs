//! Discrete Weyl–Stratonovich transform, its inverse, the Wigner potential
//! and gauge changes of density matrices.
//!
//! The relative coordinate lives on a lattice with one point per momentum
//! index, so the `s`-trapezoid and the momentum sum form an exact DFT pair.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, WignerError};
use crate::phasespace::{GaugeFunction, GaugeSpec, PhaseSpaceGrid};
use crate::quadrature::GaussLegendre;

/// Default order of the Gauss–Legendre rule for the vector-potential line integral.
pub const DEFAULT_N_TAU: usize = 16;
/// Default bound on `max|Im| / max|Re|` accepted by [`wst_discrete`].
pub const DEFAULT_IMAG_TOLERANCE: f64 = 1e-10;

/// Density matrix in centre-of-mass coordinates, `ρ(x + s/2, x − s/2)`, with
/// `x` on the spatial grid and `s` on the relative-coordinate lattice.
/// Layout: `values[s_flat * n_space + x_flat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub values: Vec<Complex64>,
    pub time: f64,
    n_space: usize,
    n_s: usize,
}

impl DensityMatrix {
    /// Tabulates `rho(r1, r2)`, forcing zero whenever an endpoint leaves Ω.
    pub fn from_fn(
        grid: &PhaseSpaceGrid,
        rho: impl Fn([f64; 3], [f64; 3]) -> Complex64 + Sync,
    ) -> Self {
        let n_space = grid.n_space();
        let n_s = grid.n_momentum();
        let dim = grid.dim();
        let values = (0..n_s * n_space)
            .into_par_iter()
            .map(|idx| {
                let x = grid.position(idx % n_space);
                let s = grid.s_point(idx / n_space);
                let mut r1 = [0.0; 3];
                let mut r2 = [0.0; 3];
                for d in 0..dim {
                    r1[d] = x[d] + 0.5 * s[d];
                    r2[d] = x[d] - 0.5 * s[d];
                }
                if grid.inside(r1) && grid.inside(r2) {
                    rho(r1, r2)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        Self {
            values,
            time: 0.0,
            n_space,
            n_s,
        }
    }

    /// `ρ(r1, r2) = ψ(r1)·ψ*(r2)`.
    pub fn from_pure_state(
        grid: &PhaseSpaceGrid,
        psi: impl Fn([f64; 3]) -> Complex64 + Sync,
    ) -> Self {
        Self::from_fn(grid, |r1, r2| psi(r1) * psi(r2).conj())
    }

    pub fn n_space(&self) -> usize {
        self.n_space
    }

    pub fn n_s(&self) -> usize {
        self.n_s
    }

    #[inline]
    pub fn get(&self, s_flat: usize, x_flat: usize) -> Complex64 {
        self.values[s_flat * self.n_space + x_flat]
    }

    /// Largest `|ρ(x, s) − ρ*(x, −s)|`. The lattice is symmetric, so `−s`
    /// is the mirrored flat index.
    pub fn hermiticity_error(&self) -> f64 {
        let mut worst = 0.0f64;
        for s in 0..self.n_s {
            let mirror = self.n_s - 1 - s;
            for x in 0..self.n_space {
                let d = (self.get(s, x) - self.get(mirror, x).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    fn check_grid(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        if self.n_space != grid.n_space() || self.n_s != grid.n_momentum() {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{} x {}", grid.n_momentum(), grid.n_space()),
                found: format!("{} x {}", self.n_s, self.n_space),
            });
        }
        Ok(())
    }
}

/// Real Wigner function over `(M, x)`. Layout: `values[m_flat * n_space + x_flat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerState {
    pub values: Vec<f64>,
    pub time: f64,
    momentum_shape: Vec<usize>,
    space_shape: Vec<usize>,
}

impl WignerState {
    pub fn zeros(grid: &PhaseSpaceGrid) -> Self {
        Self {
            values: vec![0.0; grid.n_cells()],
            time: 0.0,
            momentum_shape: grid.momentum_shape(),
            space_shape: grid.space_shape(),
        }
    }

    pub fn from_values(grid: &PhaseSpaceGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.n_cells() {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{} values", grid.n_cells()),
                found: format!("{} values", values.len()),
            });
        }
        Ok(Self {
            values,
            time,
            momentum_shape: grid.momentum_shape(),
            space_shape: grid.space_shape(),
        })
    }

    /// Tabulates `f(M, x)` with `M` the signed index vector.
    pub fn from_fn(
        grid: &PhaseSpaceGrid,
        f: impl Fn([i64; 3], [f64; 3]) -> f64 + Sync,
    ) -> Self {
        let n_space = grid.n_space();
        let values = (0..grid.n_cells())
            .into_par_iter()
            .map(|idx| f(grid.momentum_indices(idx / n_space), grid.position(idx % n_space)))
            .collect();
        Self {
            values,
            time: 0.0,
            momentum_shape: grid.momentum_shape(),
            space_shape: grid.space_shape(),
        }
    }

    /// Classical Gaussian in phase space with independent position and
    /// momentum widths, normalised to unit mass.
    pub fn phase_space_gaussian(
        grid: &PhaseSpaceGrid,
        center: [f64; 3],
        sigma_x: f64,
        momentum: [f64; 3],
        sigma_p: f64,
    ) -> Self {
        let dim = grid.dim();
        let mut state = Self::from_fn(grid, |m, x| {
            let mut arg = 0.0;
            for d in 0..dim {
                let dp = m[d] as f64 * grid.axis(d).dp - momentum[d];
                let dx = x[d] - center[d];
                arg += dx * dx / (2.0 * sigma_x * sigma_x) + dp * dp / (2.0 * sigma_p * sigma_p);
            }
            (-arg).exp()
        });
        let mass = state.mass(grid);
        if mass > 0.0 {
            state.scale(1.0 / mass);
        }
        state
    }

    pub fn momentum_shape(&self) -> &[usize] {
        &self.momentum_shape
    }

    pub fn space_shape(&self) -> &[usize] {
        &self.space_shape
    }

    pub fn n_space(&self) -> usize {
        self.space_shape.iter().product()
    }

    pub fn n_momentum(&self) -> usize {
        self.momentum_shape.iter().product()
    }

    #[inline]
    pub fn get(&self, m_flat: usize, x_flat: usize) -> f64 {
        self.values[m_flat * self.n_space() + x_flat]
    }

    pub fn plane(&self, m_flat: usize) -> &[f64] {
        let n = self.n_space();
        &self.values[m_flat * n..(m_flat + 1) * n]
    }

    pub fn matches(&self, grid: &PhaseSpaceGrid) -> bool {
        self.momentum_shape == grid.momentum_shape() && self.space_shape == grid.space_shape()
    }

    pub fn check_grid(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        if !self.matches(grid) {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{:?} x {:?}", grid.momentum_shape(), grid.space_shape()),
                found: format!("{:?} x {:?}", self.momentum_shape, self.space_shape),
            });
        }
        Ok(())
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.momentum_shape != other.momentum_shape || self.space_shape != other.space_shape {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{:?} x {:?}", self.momentum_shape, self.space_shape),
                found: format!("{:?} x {:?}", other.momentum_shape, other.space_shape),
            });
        }
        Ok(())
    }

    /// `Σ_{M,x} f·dV`.
    pub fn mass(&self, grid: &PhaseSpaceGrid) -> f64 {
        self.values.iter().sum::<f64>() * grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }

    /// `‖self − reference‖₂ / ‖reference‖₂`.
    pub fn relative_l2(&self, reference: &Self) -> Result<f64> {
        self.same_shape(reference)?;
        let num: f64 = self
            .values
            .iter()
            .zip(&reference.values)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let den: f64 = reference.values.iter().map(|b| b * b).sum();
        Ok(if den > 0.0 {
            (num / den).sqrt()
        } else {
            num.sqrt()
        })
    }
}

/// Minimum-uncertainty pure state
/// `ψ(x) ∝ Π exp(−(x − x0)²/(4σ²) + i·p0·x/ħ)`, normalised in the continuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub center: [f64; 3],
    pub sigma: [f64; 3],
    pub momentum: [f64; 3],
}

impl GaussianPacket {
    pub fn wavefunction(&self, hbar: f64, dim: usize, r: [f64; 3]) -> Complex64 {
        let mut log_amp = 0.0;
        let mut phase = 0.0;
        for d in 0..dim {
            let sigma = self.sigma[d];
            let dx = r[d] - self.center[d];
            log_amp += -dx * dx / (4.0 * sigma * sigma) - 0.25 * (2.0 * PI * sigma * sigma).ln();
            phase += self.momentum[d] * r[d] / hbar;
        }
        Complex64::from_polar(log_amp.exp(), phase)
    }

    pub fn density_matrix(&self, grid: &PhaseSpaceGrid) -> DensityMatrix {
        let hbar = grid.constants().hbar;
        let dim = grid.dim();
        let packet = *self;
        DensityMatrix::from_pure_state(grid, move |r| packet.wavefunction(hbar, dim, r))
    }
}

/// Per-axis DFT matrices `T[M][k] = exp(−i2πM(k − n_p)/n)/n` (or the
/// unnormalised inverse with `+i` when `inverse` is set).
fn twiddles(grid: &PhaseSpaceGrid, inverse: bool) -> Vec<Vec<Complex64>> {
    grid.axes()
        .iter()
        .map(|a| {
            let n = a.n_m();
            let sign = if inverse { 1.0 } else { -1.0 };
            let norm = if inverse { 1.0 } else { 1.0 / n as f64 };
            let mut t = Vec::with_capacity(n * n);
            for row in 0..n {
                let m = a.m_index(row);
                for k in 0..n {
                    let j = a.m_index(k);
                    // reduce the product before scaling to keep the angle small
                    let r = (m * j).rem_euclid(n as i64) as f64;
                    t.push(Complex64::from_polar(norm, sign * 2.0 * PI * r / n as f64));
                }
            }
            t
        })
        .collect()
}

/// Applies a dense matrix along each axis of a row-major block.
fn apply_separable(data: &mut [Complex64], shape: &[usize], mats: &[Vec<Complex64>]) {
    let mut scratch = vec![Complex64::new(0.0, 0.0); shape.iter().copied().max().unwrap_or(0)];
    for (axis, mat) in mats.iter().enumerate() {
        let n = shape[axis];
        let inner: usize = shape[axis + 1..].iter().product();
        let outer: usize = shape[..axis].iter().product();
        for o in 0..outer {
            for i in 0..inner {
                let base = o * n * inner + i;
                for (row, out) in scratch[..n].iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for k in 0..n {
                        acc += mat[row * n + k] * data[base + k * inner];
                    }
                    *out = acc;
                }
                for k in 0..n {
                    data[base + k * inner] = scratch[k];
                }
            }
        }
    }
}

/// Stratonovich phase `exp(−(i/ħ)(e/2)·s·∫A(x + sτ/2)dτ)` for every `s`.
fn stratonovich_phases(
    grid: &PhaseSpaceGrid,
    gauge: &GaugeSpec,
    rule: &GaussLegendre,
    x: [f64; 3],
    conjugate: bool,
) -> Vec<Complex64> {
    let c = grid.constants();
    let dim = grid.dim();
    (0..grid.n_momentum())
        .map(|k| {
            let s = grid.s_point(k);
            let mut line = 0.0;
            for (tau, w) in rule.nodes.iter().zip(&rule.weights) {
                let mut p = x;
                for d in 0..dim {
                    p[d] += 0.5 * s[d] * tau;
                }
                let a = gauge.a(p);
                for d in 0..dim {
                    line += w * s[d] * a[d];
                }
            }
            let angle = -0.5 * c.charge_e * line / c.hbar;
            Complex64::from_polar(1.0, if conjugate { -angle } else { angle })
        })
        .collect()
}

/// Discrete Weyl–Stratonovich transform with the default realness tolerance.
pub fn wst_discrete(
    rho: &DensityMatrix,
    gauge: &GaugeSpec,
    grid: &PhaseSpaceGrid,
    n_tau: usize,
) -> Result<WignerState> {
    wst_discrete_with_tolerance(rho, gauge, grid, n_tau, DEFAULT_IMAG_TOLERANCE)
}

/// Discrete Weyl–Stratonovich transform. Fails if the imaginary residue
/// `max|Im f| / max|Re f|` exceeds `imag_tolerance`.
pub fn wst_discrete_with_tolerance(
    rho: &DensityMatrix,
    gauge: &GaugeSpec,
    grid: &PhaseSpaceGrid,
    n_tau: usize,
    imag_tolerance: f64,
) -> Result<WignerState> {
    rho.check_grid(grid)?;
    if n_tau < 2 {
        return Err(WignerError::invalid("n_tau", "must be at least 2"));
    }
    let rule = GaussLegendre::new(n_tau);
    let fwd = twiddles(grid, false);
    let shape = grid.momentum_shape();
    let n_space = grid.n_space();
    let n_m = grid.n_momentum();
    let columns: Vec<Vec<Complex64>> = (0..n_space)
        .into_par_iter()
        .map(|ix| {
            let x = grid.position(ix);
            let phases = stratonovich_phases(grid, gauge, &rule, x, false);
            let mut col: Vec<Complex64> = (0..n_m).map(|k| phases[k] * rho.get(k, ix)).collect();
            apply_separable(&mut col, &shape, &fwd);
            col
        })
        .collect();

    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    let mut values = vec![0.0; n_m * n_space];
    for (ix, col) in columns.iter().enumerate() {
        for (m, v) in col.iter().enumerate() {
            max_re = max_re.max(v.re.abs());
            max_im = max_im.max(v.im.abs());
            values[m * n_space + ix] = v.re;
        }
    }
    let residue = if max_re > 0.0 { max_im / max_re } else { max_im };
    if residue > imag_tolerance {
        return Err(WignerError::ImaginaryResidue {
            residue,
            tolerance: imag_tolerance,
        });
    }
    let mut out = WignerState::from_values(grid, values, rho.time)?;
    out.time = rho.time;
    Ok(out)
}

/// Electrostatic Weyl transform: the same path with a vanishing vector potential.
pub fn weyl_discrete(rho: &DensityMatrix, grid: &PhaseSpaceGrid) -> Result<WignerState> {
    wst_discrete(rho, &GaugeSpec::zero(), grid, DEFAULT_N_TAU)
}

/// Inverse transform: rebuilds `ρ(x + s/2, x − s/2)` on the lattice.
pub fn wst_inverse(
    f: &WignerState,
    gauge: &GaugeSpec,
    grid: &PhaseSpaceGrid,
    n_tau: usize,
) -> Result<DensityMatrix> {
    f.check_grid(grid)?;
    if n_tau < 2 {
        return Err(WignerError::invalid("n_tau", "must be at least 2"));
    }
    let rule = GaussLegendre::new(n_tau);
    let inv = twiddles(grid, true);
    let shape = grid.momentum_shape();
    let n_space = grid.n_space();
    let n_m = grid.n_momentum();
    let columns: Vec<Vec<Complex64>> = (0..n_space)
        .into_par_iter()
        .map(|ix| {
            let x = grid.position(ix);
            let phases = stratonovich_phases(grid, gauge, &rule, x, true);
            let mut col: Vec<Complex64> =
                (0..n_m).map(|m| Complex64::new(f.get(m, ix), 0.0)).collect();
            apply_separable(&mut col, &shape, &inv);
            col.iter_mut().zip(&phases).for_each(|(v, p)| *v *= p);
            col
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n_m * n_space];
    for (ix, col) in columns.iter().enumerate() {
        for (k, v) in col.iter().enumerate() {
            values[k * n_space + ix] = *v;
        }
    }
    Ok(DensityMatrix {
        values,
        time: f.time,
        n_space,
        n_s: n_m,
    })
}

/// Gauge change of a density matrix matching `A → A + ∇χ` in the transform
/// above: `ρ'(r1, r2) = exp(+ieχ(r1)/ħ)·ρ(r1, r2)·exp(−ieχ(r2)/ħ)`.
pub fn gauge_transform_rho(
    rho: &DensityMatrix,
    chi: &GaugeFunction,
    grid: &PhaseSpaceGrid,
) -> Result<DensityMatrix> {
    rho.check_grid(grid)?;
    let c = grid.constants();
    let dim = grid.dim();
    let n_space = grid.n_space();
    let values = rho
        .values
        .par_iter()
        .enumerate()
        .map(|(idx, v)| {
            let x = grid.position(idx % n_space);
            let s = grid.s_point(idx / n_space);
            let mut r1 = [0.0; 3];
            let mut r2 = [0.0; 3];
            for d in 0..dim {
                r1[d] = x[d] + 0.5 * s[d];
                r2[d] = x[d] - 0.5 * s[d];
            }
            let angle = c.charge_e * ((chi.value)(r1) - (chi.value)(r2)) / c.hbar;
            v * Complex64::from_polar(1.0, angle)
        })
        .collect();
    Ok(DensityMatrix {
        values,
        time: rho.time,
        n_space: rho.n_space,
        n_s: rho.n_s,
    })
}

/// Wigner potential over `(m, x)`, with `m` on the grid's momentum lattice.
/// Layout: `values[m_flat * n_space + x_flat]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerPotentialTable {
    pub values: Vec<Complex64>,
    n_space: usize,
}

impl WignerPotentialTable {
    #[inline]
    pub fn get(&self, m_flat: usize, x_flat: usize) -> Complex64 {
        self.values[m_flat * self.n_space + x_flat]
    }

    /// Largest `|V_w(−m, x) + V_w(m, x)|`.
    pub fn antisymmetry_error(&self) -> f64 {
        let n_m = self.values.len() / self.n_space;
        let mut worst = 0.0f64;
        for m in 0..n_m {
            for x in 0..self.n_space {
                worst = worst.max((self.get(m, x) + self.get(n_m - 1 - m, x)).norm());
            }
        }
        worst
    }
}

/// `V_w(m, x) = (1/(iħL))·Σ_s ds·(V(x − s/2) − V(x + s/2))·exp(−(i/ħ)mΔP·s)`
/// for a potential energy `v` defined on the reachable neighbourhood of Ω.
pub fn wigner_potential(
    v: impl Fn([f64; 3]) -> f64 + Sync,
    grid: &PhaseSpaceGrid,
) -> WignerPotentialTable {
    let hbar = grid.constants().hbar;
    let fwd = twiddles(grid, false);
    let shape = grid.momentum_shape();
    let n_space = grid.n_space();
    let n_m = grid.n_momentum();
    let dim = grid.dim();
    let scale = Complex64::new(0.0, -1.0 / hbar);
    let columns: Vec<Vec<Complex64>> = (0..n_space)
        .into_par_iter()
        .map(|ix| {
            let x = grid.position(ix);
            let mut col: Vec<Complex64> = (0..n_m)
                .map(|k| {
                    let s = grid.s_point(k);
                    let mut lo = x;
                    let mut hi = x;
                    for d in 0..dim {
                        lo[d] -= 0.5 * s[d];
                        hi[d] += 0.5 * s[d];
                    }
                    Complex64::new(v(lo) - v(hi), 0.0)
                })
                .collect();
            apply_separable(&mut col, &shape, &fwd);
            col.iter_mut().for_each(|z| *z *= scale);
            col
        })
        .collect();
    let mut values = vec![Complex64::new(0.0, 0.0); n_m * n_space];
    for (ix, col) in columns.iter().enumerate() {
        for (m, z) in col.iter().enumerate() {
            values[m * n_space + ix] = *z;
        }
    }
    WignerPotentialTable { values, n_space }
}
