//! Gauge-invariant kernels `D^F`, `H^F`, `I^F` for sampled fields, the
//! closed-form coefficients of the linear-field equation, and the term
//! magnitude estimate.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WignerError};
use crate::phasespace::{LinearEMField, PhaseSpaceGrid, SampledEMField};
use crate::quadrature::GaussLegendre;
use crate::transform::WignerState;

/// Default Gauss–Legendre order for the `τ` and `η` integrals.
pub const DEFAULT_KERNEL_NODES: usize = 8;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Rule for the finite-window integral over `s`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum SQuadrature {
    /// Periodic trapezoid on the grid's own `s` lattice. Products of
    /// transforms become exact circular convolutions.
    #[default]
    Lattice,
    /// Endpoint trapezoid on `panels·2^k` intervals per axis, `k < levels`,
    /// followed by Richardson extrapolation.
    Romberg { panels: usize, levels: usize },
}

/// Per-axis Fourier weights for one trapezoid level: `rows` output indices
/// by `cols` nodes.
struct AxisWeights {
    rows: usize,
    cols: usize,
    mat: Vec<Complex64>,
    nodes: Vec<f64>,
}

fn lattice_weights(grid: &PhaseSpaceGrid, axis: usize, m_max: usize) -> AxisWeights {
    let a = grid.axis(axis);
    let n = a.n_m();
    let rows = 2 * m_max + 1;
    let mut mat = Vec::with_capacity(rows * n);
    for r in 0..rows {
        let m = r as i64 - m_max as i64;
        for k in 0..n {
            let j = a.m_index(k);
            let red = (m * j).rem_euclid(n as i64) as f64;
            mat.push(Complex64::from_polar(1.0 / n as f64, -2.0 * PI * red / n as f64));
        }
    }
    AxisWeights {
        rows,
        cols: n,
        mat,
        nodes: (0..n).map(|k| a.s(k)).collect(),
    }
}

fn trapezoid_weights(grid: &PhaseSpaceGrid, axis: usize, m_max: usize, intervals: usize) -> AxisWeights {
    let a = grid.axis(axis);
    let l = a.coherence_length;
    let h = l / intervals as f64;
    let hbar = grid.constants().hbar;
    let rows = 2 * m_max + 1;
    let cols = intervals + 1;
    let nodes: Vec<f64> = (0..cols).map(|j| -0.5 * l + j as f64 * h).collect();
    let mut mat = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let k = (r as i64 - m_max as i64) as f64 * a.dp / hbar;
        for (j, s) in nodes.iter().enumerate() {
            let w = if j == 0 || j == intervals { 0.5 * h } else { h } / l;
            mat.push(Complex64::from_polar(w, -k * s));
        }
    }
    AxisWeights {
        rows,
        cols,
        mat,
        nodes,
    }
}

/// Contracts node samples (row-major over `cols`) against the per-axis
/// weights, giving values row-major over `rows`.
fn contract(samples: &[Complex64], axes: &[AxisWeights]) -> Vec<Complex64> {
    let mut shape: Vec<usize> = axes.iter().map(|a| a.cols).collect();
    let mut data = samples.to_vec();
    for (d, w) in axes.iter().enumerate() {
        let inner: usize = shape[d + 1..].iter().product();
        let outer: usize = shape[..d].iter().product();
        let mut out = vec![ZERO; outer * w.rows * inner];
        for o in 0..outer {
            for r in 0..w.rows {
                let row = &w.mat[r * w.cols..(r + 1) * w.cols];
                for i in 0..inner {
                    let mut acc = ZERO;
                    for (k, c) in row.iter().enumerate() {
                        acc += c * data[(o * w.cols + k) * inner + i];
                    }
                    out[(o * w.rows + r) * inner + i] = acc;
                }
            }
        }
        shape[d] = w.rows;
        data = out;
    }
    data
}

/// `(1/L)∫ ds e^{−i mΔP·s/ħ} g(s)` for every `m` in `−m_max..=m_max` per
/// axis and every component of `g`. Output: `[m_flat][component]`.
fn fourier_window<const K: usize>(
    grid: &PhaseSpaceGrid,
    m_max: usize,
    quad: SQuadrature,
    g: &dyn Fn([f64; 3]) -> Result<[f64; K]>,
) -> Result<Vec<[Complex64; K]>> {
    let dim = grid.dim();
    let levels: Vec<Vec<AxisWeights>> = match quad {
        SQuadrature::Lattice => vec![(0..dim).map(|d| lattice_weights(grid, d, m_max)).collect()],
        SQuadrature::Romberg { panels, levels } => {
            if panels == 0 || levels == 0 {
                return Err(WignerError::invalid(
                    "s_quadrature",
                    "Romberg needs at least one panel and one level",
                ));
            }
            (0..levels)
                .map(|k| {
                    (0..dim)
                        .map(|d| trapezoid_weights(grid, d, m_max, panels << k))
                        .collect()
                })
                .collect()
        }
    };
    let n_out = (2 * m_max + 1).pow(dim as u32);
    let mut tables: Vec<Vec<[Complex64; K]>> = Vec::with_capacity(levels.len());
    for axes in &levels {
        let shape: Vec<usize> = axes.iter().map(|a| a.cols).collect();
        let total: usize = shape.iter().product();
        let mut samples = vec![vec![ZERO; total]; K];
        for flat in 0..total {
            let idx = PhaseSpaceGrid::unravel(&shape, flat);
            let mut s = [0.0; 3];
            for d in 0..dim {
                s[d] = axes[d].nodes[idx[d]];
            }
            let v = g(s)?;
            for c in 0..K {
                samples[c][flat] = Complex64::new(v[c], 0.0);
            }
        }
        let comps: Vec<Vec<Complex64>> = samples.iter().map(|s| contract(s, axes)).collect();
        let mut table = vec![[ZERO; K]; n_out];
        for (m, entry) in table.iter_mut().enumerate() {
            for c in 0..K {
                entry[c] = comps[c][m];
            }
        }
        tables.push(table);
    }
    // Richardson on the h² error expansion of the trapezoid rule
    let mut prev: Vec<Vec<[Complex64; K]>> = Vec::new();
    for (k, table) in tables.into_iter().enumerate() {
        let mut row = vec![table];
        for j in 1..=k {
            let factor = 4f64.powi(j as i32) - 1.0;
            let fine = &row[j - 1];
            let coarse = &prev[j - 1];
            let next: Vec<[Complex64; K]> = fine
                .iter()
                .zip(coarse)
                .map(|(a, b)| {
                    let mut out = [ZERO; K];
                    for c in 0..K {
                        out[c] = a[c] + (a[c] - b[c]) / factor;
                    }
                    out
                })
                .collect();
            row.push(next);
        }
        prev = row;
    }
    Ok(prev.pop().expect("at least one level"))
}

#[inline]
fn shifted(x: [f64; 3], s: [f64; 3], tau: f64, dim: usize) -> [f64; 3] {
    let mut p = x;
    for d in 0..dim {
        p[d] += 0.5 * s[d] * tau;
    }
    p
}

#[inline]
fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn check_field(field: &SampledEMField, grid: &PhaseSpaceGrid) -> Result<()> {
    field.check_coverage(grid)
}

/// `H^F(x, m, τ) = (1/L)∫ ds e^{−i mΔP·s/ħ} [s × B(x + sτ/2)]`.
/// Layout: `[m_flat * n_tau + tau]`.
pub fn compute_hf(
    field: &SampledEMField,
    x: [f64; 3],
    grid: &PhaseSpaceGrid,
    tau: &GaussLegendre,
    m_max: usize,
    quad: SQuadrature,
) -> Result<Vec<[Complex64; 3]>> {
    check_field(field, grid)?;
    let dim = grid.dim();
    let nt = tau.len();
    let mut out = vec![[ZERO; 3]; (2 * m_max + 1).pow(dim as u32) * nt];
    for (t, &node) in tau.nodes.iter().enumerate() {
        let g = |s: [f64; 3]| -> Result<[f64; 3]> {
            Ok(cross(s, field.magnetic_at(shifted(x, s, node, dim))?))
        };
        let table = fourier_window::<3>(grid, m_max, quad, &g)?;
        for (m, v) in table.into_iter().enumerate() {
            out[m * nt + t] = v;
        }
    }
    Ok(out)
}

/// `D^F(x, m, τ) = −(1/L)∫ ds e^{−i mΔP·s/ħ} s·E(x + sτ/2)`.
/// Layout: `[m_flat * n_tau + tau]`.
pub fn compute_df(
    field: &SampledEMField,
    x: [f64; 3],
    grid: &PhaseSpaceGrid,
    tau: &GaussLegendre,
    m_max: usize,
    quad: SQuadrature,
) -> Result<Vec<Complex64>> {
    check_field(field, grid)?;
    let dim = grid.dim();
    let nt = tau.len();
    let mut out = vec![ZERO; (2 * m_max + 1).pow(dim as u32) * nt];
    for (t, &node) in tau.nodes.iter().enumerate() {
        let g = |s: [f64; 3]| -> Result<[f64; 1]> {
            let e = field.electric_at(shifted(x, s, node, dim))?;
            Ok([-(s[0] * e[0] + s[1] * e[1] + s[2] * e[2])])
        };
        let table = fourier_window::<1>(grid, m_max, quad, &g)?;
        for (m, v) in table.into_iter().enumerate() {
            out[m * nt + t] = v[0];
        }
    }
    Ok(out)
}

/// Direct `I^F(x, m, η, τ) = (1/L)∫ ds e^{−i mΔP·s/ħ} (s × B(x + sη/2))·(s × B(x + sτ/2))`.
/// Layout: `[(m_flat * n_eta + eta) * n_tau + tau]`.
pub fn compute_if(
    field: &SampledEMField,
    x: [f64; 3],
    grid: &PhaseSpaceGrid,
    tau: &GaussLegendre,
    eta: &GaussLegendre,
    m_max: usize,
    quad: SQuadrature,
) -> Result<Vec<Complex64>> {
    check_field(field, grid)?;
    let dim = grid.dim();
    let nt = tau.len();
    let ne = eta.len();
    let mut out = vec![ZERO; (2 * m_max + 1).pow(dim as u32) * ne * nt];
    for (e, &en) in eta.nodes.iter().enumerate() {
        for (t, &tn) in tau.nodes.iter().enumerate() {
            let g = |s: [f64; 3]| -> Result<[f64; 1]> {
                let a = cross(s, field.magnetic_at(shifted(x, s, en, dim))?);
                let b = cross(s, field.magnetic_at(shifted(x, s, tn, dim))?);
                Ok([a[0] * b[0] + a[1] * b[1] + a[2] * b[2]])
            };
            let table = fourier_window::<1>(grid, m_max, quad, &g)?;
            for (m, v) in table.into_iter().enumerate() {
                out[(m * ne + e) * nt + t] = v[0];
            }
        }
    }
    Ok(out)
}

/// `I^F(m) = Σ_{m'} H^F(m', η)·H^F(m − m', τ)` over the momentum lattice,
/// with indices taken modulo the lattice size. Both inputs are single
/// node slices over `m_flat` with `m_max = n_p`. Exact against
/// [`compute_if`] under [`SQuadrature::Lattice`].
pub fn if_by_convolution(
    hf_eta: &[[Complex64; 3]],
    hf_tau: &[[Complex64; 3]],
    grid: &PhaseSpaceGrid,
) -> Result<Vec<Complex64>> {
    let n_m = grid.n_momentum();
    if hf_eta.len() != n_m || hf_tau.len() != n_m {
        return Err(WignerError::ShapeMismatch {
            expected: format!("{n_m} momentum entries"),
            found: format!("{} and {}", hf_eta.len(), hf_tau.len()),
        });
    }
    let dim = grid.dim();
    let shape = grid.momentum_shape();
    let mut out = vec![ZERO; n_m];
    for (m, slot) in out.iter_mut().enumerate() {
        let mi = PhaseSpaceGrid::unravel(&shape, m);
        let mut acc = ZERO;
        for (mp, a) in hf_eta.iter().enumerate() {
            let mpi = PhaseSpaceGrid::unravel(&shape, mp);
            let mut flat = 0usize;
            for d in 0..dim {
                let n = shape[d];
                let k = (mi[d] + n - mpi[d] + grid.axis(d).n_p) % n;
                flat = flat * n + k;
            }
            let b = hf_tau[flat];
            acc += a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        }
        *slot = acc;
    }
    Ok(out)
}

/// Precomputed kernels on every spatial point of a grid.
#[derive(Debug, Clone)]
pub struct KernelSet {
    pub m_max: usize,
    pub tau: GaussLegendre,
    pub eta: GaussLegendre,
    /// `[(x_flat * n_mk + m) * n_tau + tau]`
    pub df: Vec<Complex64>,
    /// `[(x_flat * n_mk + m) * n_tau + tau]`
    pub hf: Vec<[Complex64; 3]>,
    /// `[((x_flat * n_mk + m) * n_eta + eta) * n_tau + tau]`, empty unless requested.
    pub if_: Vec<Complex64>,
    n_mk: usize,
    dim: usize,
}

impl KernelSet {
    pub fn compute(
        field: &SampledEMField,
        grid: &PhaseSpaceGrid,
        n_tau: usize,
        m_max: usize,
        quad: SQuadrature,
        with_quadratic: bool,
    ) -> Result<Self> {
        check_field(field, grid)?;
        if n_tau < 1 {
            return Err(WignerError::invalid("n_tau", "must be positive"));
        }
        let tau = GaussLegendre::new(n_tau);
        let eta = GaussLegendre::new(n_tau);
        let dim = grid.dim();
        let n_mk = (2 * m_max + 1).pow(dim as u32);
        let per_x: Vec<Result<(Vec<Complex64>, Vec<[Complex64; 3]>, Vec<Complex64>)>> = (0..grid
            .n_space())
            .into_par_iter()
            .map(|ix| {
                let x = grid.position(ix);
                let d = compute_df(field, x, grid, &tau, m_max, quad)?;
                let h = compute_hf(field, x, grid, &tau, m_max, quad)?;
                let i = if with_quadratic {
                    compute_if(field, x, grid, &tau, &eta, m_max, quad)?
                } else {
                    Vec::new()
                };
                Ok((d, h, i))
            })
            .collect();
        let mut df = Vec::new();
        let mut hf = Vec::new();
        let mut if_ = Vec::new();
        for r in per_x {
            let (d, h, i) = r?;
            df.extend(d);
            hf.extend(h);
            if_.extend(i);
        }
        Ok(Self {
            m_max,
            tau,
            eta,
            df,
            hf,
            if_,
            n_mk,
            dim,
        })
    }

    pub fn n_m(&self) -> usize {
        self.n_mk
    }

    /// Flat kernel index of a signed `m` vector.
    pub fn m_slot(&self, m: [i64; 3]) -> Option<usize> {
        let w = 2 * self.m_max as i64 + 1;
        let mut flat = 0usize;
        for d in 0..self.dim {
            let k = m[d] + self.m_max as i64;
            if k < 0 || k >= w {
                return None;
            }
            flat = flat * w as usize + k as usize;
        }
        Some(flat)
    }

    #[inline]
    pub fn hf_at(&self, x_flat: usize, m: usize, tau: usize) -> [Complex64; 3] {
        self.hf[(x_flat * self.n_mk + m) * self.tau.len() + tau]
    }

    #[inline]
    pub fn df_at(&self, x_flat: usize, m: usize, tau: usize) -> Complex64 {
        self.df[(x_flat * self.n_mk + m) * self.tau.len() + tau]
    }

    #[inline]
    pub fn if_at(&self, x_flat: usize, m: usize, eta: usize, tau: usize) -> Complex64 {
        let ne = self.eta.len();
        self.if_[((x_flat * self.n_mk + m) * ne + eta) * self.tau.len() + tau]
    }

    /// Largest deviation from `K(−m) = K(m)*` across all three kernels.
    pub fn conjugate_symmetry_error(&self, n_space: usize) -> f64 {
        let nt = self.tau.len();
        let ne = self.eta.len();
        let mut worst = 0.0f64;
        for x in 0..n_space {
            for m in 0..self.n_mk {
                let mirror = self.n_mk - 1 - m;
                for t in 0..nt {
                    worst = worst.max((self.df_at(x, m, t) - self.df_at(x, mirror, t).conj()).norm());
                    let a = self.hf_at(x, m, t);
                    let b = self.hf_at(x, mirror, t);
                    for c in 0..3 {
                        worst = worst.max((a[c] - b[c].conj()).norm());
                    }
                    if !self.if_.is_empty() {
                        for e in 0..ne {
                            let d = self.if_at(x, m, e, t) - self.if_at(x, mirror, e, t).conj();
                            worst = worst.max(d.norm());
                        }
                    }
                }
            }
        }
        worst
    }
}

/// Gather `f(M − m)` is admissible when both `M − m` and `M − 2m` lie on the
/// lattice. Every source cell then sees a symmetric set of offsets, so odd
/// ladders cancel exactly in the total mass.
#[inline]
pub fn ladder_admissible(m_index: i64, offset: i64, n_p: usize) -> bool {
    let n = n_p as i64;
    (m_index - offset).abs() <= n && (m_index - 2 * offset).abs() <= n
}

/// Periodic central difference of one momentum plane along `axis`.
fn central_difference(plane: &[f64], shape: &[usize], axis: usize, dx: f64, out: &mut [f64]) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    for o in 0..outer {
        for i in 0..n {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            for k in 0..inner {
                let base = o * n * inner;
                out[base + i * inner + k] =
                    (plane[base + ip * inner + k] - plane[base + im * inner + k]) / (2.0 * dx);
            }
        }
    }
}

/// Right-hand side of the general semi-discrete equation built from a
/// [`KernelSet`]: advection, the electric and both linear magnetic kernel
/// terms, and optionally the quadratic magnetic term. Periodic spatial
/// differences of second order; the `m` sum is truncated source-symmetrically.
pub fn assemble_general_rhs(
    f: &WignerState,
    kernels: &KernelSet,
    grid: &PhaseSpaceGrid,
    include_quadratic: bool,
) -> Result<WignerState> {
    f.check_grid(grid)?;
    if include_quadratic && kernels.if_.is_empty() {
        return Err(WignerError::invalid(
            "kernels",
            "quadratic term requested but I^F was not computed",
        ));
    }
    if kernels.hf.len() != grid.n_space() * kernels.n_m() * kernels.tau.len() {
        return Err(WignerError::ShapeMismatch {
            expected: "kernels computed on this grid".into(),
            found: format!("{} H^F entries", kernels.hf.len()),
        });
    }
    let c = grid.constants();
    let dim = grid.dim();
    let n_space = grid.n_space();
    let n_m = grid.n_momentum();
    let shape = grid.space_shape();

    // gradients of every momentum plane
    let grads: Vec<Vec<Vec<f64>>> = (0..n_m)
        .into_par_iter()
        .map(|m| {
            (0..dim)
                .map(|d| {
                    let mut out = vec![0.0; n_space];
                    central_difference(f.plane(m), &shape, d, grid.axis(d).dx, &mut out);
                    out
                })
                .collect()
        })
        .collect();

    let tau = &kernels.tau;
    let eta = &kernels.eta;
    // τ-weighted reductions of the kernels per (x, m)
    let i_unit = Complex64::new(0.0, 1.0);
    let width = 2 * kernels.m_max + 1;
    let offsets: Vec<[i64; 3]> = (0..kernels.n_m())
        .map(|km| {
            let off = PhaseSpaceGrid::unravel(&vec![width; dim], km);
            let mut m = [0i64; 3];
            for d in 0..dim {
                m[d] = off[d] as i64 - kernels.m_max as i64;
            }
            m
        })
        .collect();
    let values: Vec<f64> = (0..n_m * n_space)
        .into_par_iter()
        .map(|idx| {
            let mf = idx / n_space;
            let ix = idx % n_space;
            let big_m = grid.momentum_indices(mf);
            let p = grid.momentum(mf);
            let mut acc = 0.0;
            for d in 0..dim {
                acc -= p[d] / c.mass_m * grads[mf][d][ix];
            }
            for (km, m) in offsets.iter().enumerate() {
                let mut ok = true;
                for d in 0..dim {
                    ok &= ladder_admissible(big_m[d], m[d], grid.axis(d).n_p);
                }
                if !ok {
                    continue;
                }
                let mut src = big_m;
                for d in 0..dim {
                    src[d] -= m[d];
                }
                let sf = grid.momentum_slot(src).expect("admissible source on lattice");
                let fv = f.get(sf, ix);
                let mut term = ZERO;
                for t in 0..tau.len() {
                    let w = tau.weights[t];
                    let tn = tau.nodes[t];
                    let h = kernels.hf_at(ix, km, t);
                    let dfk = kernels.df_at(ix, km, t);
                    term += w * c.charge_e / (2.0 * i_unit * c.hbar) * dfk * fv;
                    let mut hp = ZERO;
                    let mut hg = ZERO;
                    for d in 0..dim {
                        hp += h[d] * p[d] / c.mass_m;
                        hg += h[d] * grads[sf][d][ix];
                    }
                    term += w * c.charge_e / (2.0 * i_unit * c.hbar) * hp * fv;
                    term -= w * c.charge_e / (2.0 * c.mass_m) * 0.5 * tn * hg;
                    if include_quadratic {
                        for e in 0..eta.len() {
                            let ik = kernels.if_at(ix, km, e, t);
                            term += w * eta.weights[e] * 0.5 * tn * c.charge_e * c.charge_e
                                / (4.0 * c.mass_m * i_unit * c.hbar)
                                * ik
                                * fv;
                        }
                    }
                }
                acc += term.re;
            }
            acc
        })
        .collect();
    WignerState::from_values(grid, values, f.time)
}

/// `c¹(m) = (−1)^m/(mΔP)`, zero at `m = 0`.
#[inline]
pub fn c1(m: i64, dp: f64) -> f64 {
    if m == 0 {
        0.0
    } else {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        sign / (m as f64 * dp)
    }
}

/// `c²(m) = 2(−1)^m/(mΔP)²`, zero at `m = 0`.
#[inline]
pub fn c2(m: i64, dp: f64) -> f64 {
    if m == 0 {
        0.0
    } else {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        2.0 * sign / (m as f64 * dp).powi(2)
    }
}

/// `(1/L)∫ s·e^{−imΔP·s/ħ} ds = iħ·c¹(m)`.
pub fn fourier_s(m: i64, dp: f64, hbar: f64) -> Complex64 {
    Complex64::new(0.0, hbar * c1(m, dp))
}

/// `(1/L)∫ s²·e^{−imΔP·s/ħ} ds`: `ħ²·c²(m)` for `m ≠ 0`, `L²/12` at `m = 0`.
pub fn fourier_s2(m: i64, dp: f64, hbar: f64, coherence_length: f64) -> f64 {
    if m == 0 {
        coherence_length * coherence_length / 12.0
    } else {
        hbar * hbar * c2(m, dp)
    }
}

/// How the `B1` spatial-derivative terms of the linear-field equation are
/// arranged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum B1Convention {
    /// Obtained by transforming `−(B1e/12m)(s_y², −s_y·s_x)·∇` term by term:
    /// the `c²(m_y)` ladder and the `m = 0` moment act on `∂/∂x`, the
    /// `c¹(m_x)c¹(m_y)` ladder on `∂/∂y`.
    #[default]
    Derived,
    /// The printed component form: derivatives swapped, an extra
    /// `−(B1ħ²e/6m)·c²(m_y)/2` ladder on `∂/∂y`, and the `m = 0` moment on `∂/∂y`.
    AsPrinted,
}

/// Closed-form coefficients of the 2D linear-field semi-discrete equation.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearKernelCoefficients {
    pub field: LinearEMField,
    pub convention: B1Convention,
    pub charge_e: f64,
    pub mass_m: f64,
    pub hbar: f64,
    pub dp: [f64; 2],
    pub n_p: [usize; 2],
    pub coherence_length: [f64; 2],
    /// Symmetric cutoff `|m_d| ≤ truncation` on the ladder sums.
    pub truncation: usize,
    /// `c¹(m)` per axis for `m ∈ −2n_p..=2n_p`, indexed by `m + 2n_p`.
    pub c1: [Vec<f64>; 2],
    /// `c²(m_y)` for `m ∈ −2n_p..=2n_p`, indexed by `m + 2n_p`.
    pub c2_y: Vec<f64>,
}

impl LinearKernelCoefficients {
    #[inline]
    pub fn c1_at(&self, axis: usize, m: i64) -> f64 {
        self.c1[axis][(m + 2 * self.n_p[axis] as i64) as usize]
    }

    #[inline]
    pub fn c2_y_at(&self, m: i64) -> f64 {
        self.c2_y[(m + 2 * self.n_p[1] as i64) as usize]
    }

    /// `−e[E + P_M/m × B]_x` at position `x` for momentum `p`.
    #[inline]
    pub fn lorentz_x(&self, p: [f64; 3], x: [f64; 3]) -> f64 {
        -self.charge_e * (self.field.e_grad_x * x[0] + p[1] * self.field.bz(x[1]) / self.mass_m)
    }

    /// `−e[E + P_M/m × B]_y` at position `x` for momentum `p`.
    #[inline]
    pub fn lorentz_y(&self, p: [f64; 3], x: [f64; 3]) -> f64 {
        -self.charge_e * (self.field.e_grad_y * x[1] - p[0] * self.field.bz(x[1]) / self.mass_m)
    }

    /// `−B1ħ²e/(12m)`.
    #[inline]
    pub fn b1_ladder_prefactor(&self) -> f64 {
        -self.field.b1 * self.hbar * self.hbar * self.charge_e / (12.0 * self.mass_m)
    }

    /// `−(B1e/12m)(L_y²/12)`.
    #[inline]
    pub fn b1_zero_mode(&self) -> f64 {
        -self.field.b1 * self.charge_e / (12.0 * self.mass_m) * self.coherence_length[1].powi(2)
            / 12.0
    }

    /// Coefficients `(a_x, a_y)` multiplying `∂f(M − m)/∂x` and `∂f(M − m)/∂y`.
    pub fn b1_derivative_coefficients(&self, m: [i64; 2]) -> (f64, f64) {
        if self.field.b1 == 0.0 {
            return (0.0, 0.0);
        }
        let pre = self.b1_ladder_prefactor();
        let [mx, my] = m;
        match self.convention {
            B1Convention::Derived => {
                if mx == 0 && my == 0 {
                    (self.b1_zero_mode(), 0.0)
                } else if mx == 0 {
                    (pre * self.c2_y_at(my), 0.0)
                } else if my == 0 {
                    (0.0, 0.0)
                } else {
                    (0.0, pre * self.c1_at(0, mx) * self.c1_at(1, my))
                }
            }
            B1Convention::AsPrinted => {
                if mx == 0 && my == 0 {
                    (0.0, self.b1_zero_mode())
                } else {
                    let ax = pre * self.c1_at(0, mx) * self.c1_at(1, my);
                    let mut ay = 0.0;
                    if mx == 0 && my != 0 {
                        ay += pre * self.c2_y_at(my);
                        ay += 2.0 * pre * 0.5 * self.c2_y_at(my);
                    }
                    (ax, ay)
                }
            }
        }
    }
}

/// Tabulates the closed-form coefficients for a 2D grid.
pub fn linear_coefficients(
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    convention: B1Convention,
    truncation: Option<usize>,
) -> Result<LinearKernelCoefficients> {
    if grid.dim() != 2 {
        return Err(WignerError::Unsupported(format!(
            "linear-field coefficients need a 2D grid, got {}D",
            grid.dim()
        )));
    }
    let c = grid.constants();
    let ax = grid.axis(0);
    let ay = grid.axis(1);
    let n_p = [ax.n_p, ay.n_p];
    let dp = [ax.dp, ay.dp];
    let table = |axis: usize, f: &dyn Fn(i64, f64) -> f64| -> Vec<f64> {
        let n = 2 * n_p[axis] as i64;
        (-n..=n).map(|m| f(m, dp[axis])).collect()
    };
    let truncation = truncation.unwrap_or(n_p[0].max(n_p[1]));
    Ok(LinearKernelCoefficients {
        field: *field,
        convention,
        charge_e: c.charge_e,
        mass_m: c.mass_m,
        hbar: c.hbar,
        dp,
        n_p,
        coherence_length: [ax.coherence_length, ay.coherence_length],
        truncation,
        c1: [table(0, &c1), table(1, &c1)],
        c2_y: table(1, &c2),
    })
}

/// Heuristic rates of the kinetic and magnetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermMagnitudeReport {
    pub kinetic_rate: f64,
    pub first_magnetic_rate: f64,
    pub second_magnetic_rate: f64,
    pub third_magnetic_rate: f64,
    pub ratio_factor_i: f64,
}

/// Rates for a typical momentum index, relative displacement and mesh
/// spacing. The magnetic rates use `|B0|` and `|B1|` of `field`:
/// `I = eB·s·dx/ħ`, first = kinetic·I, second = `eB1·s²/(12m·dx)`,
/// third = second·I.
pub fn term_magnitudes(
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    m_typical: f64,
    s_typical: f64,
    dx: f64,
) -> Result<TermMagnitudeReport> {
    for (name, v) in [("m_typical", m_typical), ("s_typical", s_typical), ("dx", dx)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(WignerError::invalid(name, "must be positive"));
        }
    }
    let c = grid.constants();
    let dp = grid.axis(0).dp;
    let kinetic_rate = m_typical * dp / (c.mass_m * dx);
    let ratio_factor_i = c.charge_e * field.b0.abs() / c.hbar * s_typical * dx;
    let first_magnetic_rate = kinetic_rate * ratio_factor_i;
    let second_magnetic_rate =
        c.charge_e * field.b1.abs() * s_typical * s_typical / (12.0 * c.mass_m * dx);
    let third_magnetic_rate = second_magnetic_rate * ratio_factor_i;
    Ok(TermMagnitudeReport {
        kinetic_rate,
        first_magnetic_rate,
        second_magnetic_rate,
        third_magnetic_rate,
        ratio_factor_i,
    })
}
