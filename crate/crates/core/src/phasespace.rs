//! Bounded domain, momentum lattice, physical constants and field/gauge
//! representations shared by the rest of the crate.
//!
//! Positions use a centered convention: the physical domain Ω occupies
//! `(−Ω/2, Ω/2)` on every axis and the relative coordinate `s` spans
//! `(−L/2, L/2)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, WignerError};

/// ħ, electron charge magnitude and (effective) mass. SI units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub charge_e: f64,
    pub mass_m: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar: 1.054_571_817e-34,
            charge_e: 1.602_176_634e-19,
            mass_m: 9.109_383_701_5e-31,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, charge_e: f64, mass_m: f64) -> Result<Self> {
        for (name, v) in [("hbar", hbar), ("charge_e", charge_e), ("mass_m", mass_m)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(WignerError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        Ok(Self {
            hbar,
            charge_e,
            mass_m,
        })
    }
}

/// User-facing description of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub coherence_length: f64,
    pub omega_extent: f64,
    pub n_x: usize,
    pub n_p: usize,
}

/// One axis of a [`PhaseSpaceGrid`] with its derived spacings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub coherence_length: f64,
    pub omega_extent: f64,
    pub n_x: usize,
    pub dx: f64,
    pub n_p: usize,
    pub dp: f64,
}

impl Axis {
    /// Number of momentum indices `−n_p..=n_p`.
    #[inline]
    pub fn n_m(&self) -> usize {
        2 * self.n_p + 1
    }

    /// Cell-centred spatial coordinate of point `i`.
    #[inline]
    pub fn position(&self, i: usize) -> f64 {
        -0.5 * self.omega_extent + (i as f64 + 0.5) * self.dx
    }

    /// Signed momentum index for lattice slot `k`.
    #[inline]
    pub fn m_index(&self, k: usize) -> i64 {
        k as i64 - self.n_p as i64
    }

    #[inline]
    pub fn momentum(&self, k: usize) -> f64 {
        self.m_index(k) as f64 * self.dp
    }

    /// Spacing of the relative-coordinate lattice. It carries as many points
    /// as there are momentum indices, so the transform pair is an exact DFT.
    #[inline]
    pub fn ds(&self) -> f64 {
        self.coherence_length / self.n_m() as f64
    }

    #[inline]
    pub fn s(&self, k: usize) -> f64 {
        self.m_index(k) as f64 * self.ds()
    }

    #[inline]
    pub fn inside(&self, x: f64) -> bool {
        x.abs() <= 0.5 * self.omega_extent
    }
}

/// Bounded spatial domain plus the discrete momentum lattice tied to it by
/// `ΔP = 2πħ/L` on every axis.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    constants: PhysicalConstants,
    axes: Vec<Axis>,
}

impl PhaseSpaceGrid {
    pub fn new(constants: PhysicalConstants, specs: &[AxisSpec]) -> Result<Self> {
        if specs.is_empty() || specs.len() > 3 {
            return Err(WignerError::invalid(
                "dim",
                format!("must be 1, 2 or 3, got {}", specs.len()),
            ));
        }
        let mut axes = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            if !(spec.coherence_length.is_finite() && spec.coherence_length > 0.0) {
                return Err(WignerError::invalid(
                    format!("coherence_length[{i}]"),
                    "must be positive",
                ));
            }
            if !(spec.omega_extent.is_finite() && spec.omega_extent > 0.0) {
                return Err(WignerError::invalid(
                    format!("omega_extent[{i}]"),
                    "must be positive",
                ));
            }
            if spec.n_x == 0 {
                return Err(WignerError::invalid(format!("n_x[{i}]"), "must be positive"));
            }
            if spec.n_p == 0 {
                return Err(WignerError::invalid(format!("n_p[{i}]"), "must be positive"));
            }
            let half = 0.5 * spec.coherence_length;
            if spec.omega_extent > half * (1.0 + 1e-12) {
                return Err(WignerError::DomainExceedsCoherence {
                    axis: i,
                    omega_extent: spec.omega_extent,
                    half_length: half,
                });
            }
            axes.push(Axis {
                coherence_length: spec.coherence_length,
                omega_extent: spec.omega_extent,
                n_x: spec.n_x,
                dx: spec.omega_extent / spec.n_x as f64,
                n_p: spec.n_p,
                dp: 2.0 * PI * constants.hbar / spec.coherence_length,
            });
        }
        Ok(Self { constants, axes })
    }

    pub fn constants(&self) -> &PhysicalConstants {
        &self.constants
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn specs(&self) -> Vec<AxisSpec> {
        self.axes
            .iter()
            .map(|a| AxisSpec {
                coherence_length: a.coherence_length,
                omega_extent: a.omega_extent,
                n_x: a.n_x,
                n_p: a.n_p,
            })
            .collect()
    }

    pub fn space_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_x).collect()
    }

    pub fn momentum_shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n_m()).collect()
    }

    pub fn n_space(&self) -> usize {
        self.axes.iter().map(|a| a.n_x).product()
    }

    pub fn n_momentum(&self) -> usize {
        self.axes.iter().map(|a| a.n_m()).product()
    }

    /// Number of cells of a full Wigner state.
    pub fn n_cells(&self) -> usize {
        self.n_space() * self.n_momentum()
    }

    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.dx).product()
    }

    /// Splits a row-major flat index into per-axis indices.
    pub fn unravel(shape: &[usize], mut flat: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for d in (0..shape.len()).rev() {
            out[d] = flat % shape[d];
            flat /= shape[d];
        }
        out
    }

    pub fn position(&self, x_flat: usize) -> [f64; 3] {
        let idx = Self::unravel(&self.space_shape(), x_flat);
        let mut p = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = a.position(idx[d]);
        }
        p
    }

    pub fn momentum_indices(&self, m_flat: usize) -> [i64; 3] {
        let idx = Self::unravel(&self.momentum_shape(), m_flat);
        let mut m = [0i64; 3];
        for (d, a) in self.axes.iter().enumerate() {
            m[d] = a.m_index(idx[d]);
        }
        m
    }

    pub fn momentum(&self, m_flat: usize) -> [f64; 3] {
        let m = self.momentum_indices(m_flat);
        let mut p = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            p[d] = m[d] as f64 * a.dp;
        }
        p
    }

    /// Flat momentum slot of a signed index vector, if it lies on the lattice.
    pub fn momentum_slot(&self, m: [i64; 3]) -> Option<usize> {
        let mut flat = 0usize;
        for (d, a) in self.axes.iter().enumerate() {
            let k = m[d] + a.n_p as i64;
            if k < 0 || k >= a.n_m() as i64 {
                return None;
            }
            flat = flat * a.n_m() + k as usize;
        }
        Some(flat)
    }

    /// Relative coordinate of flat lattice point `s_flat`.
    pub fn s_point(&self, s_flat: usize) -> [f64; 3] {
        let idx = Self::unravel(&self.momentum_shape(), s_flat);
        let mut s = [0.0; 3];
        for (d, a) in self.axes.iter().enumerate() {
            s[d] = a.s(idx[d]);
        }
        s
    }

    pub fn inside(&self, p: [f64; 3]) -> bool {
        self.axes.iter().enumerate().all(|(d, a)| a.inside(p[d]))
    }
}

/// Builds a grid with identical parameters on every axis.
pub fn make_grid(
    constants: PhysicalConstants,
    dim: usize,
    coherence_length: f64,
    omega_extent: f64,
    n_x: usize,
    n_p: usize,
) -> Result<PhaseSpaceGrid> {
    let spec = AxisSpec {
        coherence_length,
        omega_extent,
        n_x,
        n_p,
    };
    PhaseSpaceGrid::new(constants, &vec![spec; dim])
}

/// Planar linear field: `E = (E_x·x, E_y·y, 0)`, `B = (0, 0, B0 + B1·y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearEMField {
    pub e_grad_x: f64,
    pub e_grad_y: f64,
    pub b0: f64,
    pub b1: f64,
}

impl LinearEMField {
    pub fn magnetic_only(b0: f64, b1: f64) -> Self {
        Self {
            b0,
            b1,
            ..Self::default()
        }
    }

    #[inline]
    pub fn bz(&self, y: f64) -> f64 {
        self.b0 + self.b1 * y
    }

    #[inline]
    pub fn electric(&self, p: [f64; 3]) -> [f64; 3] {
        [self.e_grad_x * p[0], self.e_grad_y * p[1], 0.0]
    }

    #[inline]
    pub fn magnetic(&self, p: [f64; 3]) -> [f64; 3] {
        [0.0, 0.0, self.bz(p[1])]
    }

    pub fn is_zero(&self) -> bool {
        self.e_grad_x == 0.0 && self.e_grad_y == 0.0 && self.b0 == 0.0 && self.b1 == 0.0
    }

    /// Samples the field on the window required by the kernels of `grid`.
    pub fn sample(&self, grid: &PhaseSpaceGrid) -> SampledEMField {
        let f = *self;
        SampledEMField::from_fn(grid, 1, move |p| f.magnetic(p), move |p| f.electric(p))
    }
}

/// Magnetic and electric fields sampled on a uniform mesh, evaluated by
/// multilinear interpolation. Requests outside the mesh are errors.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEMField {
    dim: usize,
    origin: [f64; 3],
    spacing: [f64; 3],
    counts: [usize; 3],
    b: Vec<[f64; 3]>,
    e: Vec<[f64; 3]>,
}

impl SampledEMField {
    /// Samples `b_fn`, `e_fn` over `(−Ω/2 − L/2, Ω/2 + L/2)` per axis at the
    /// grid's spatial resolution divided by `refine`.
    pub fn from_fn(
        grid: &PhaseSpaceGrid,
        refine: usize,
        b_fn: impl Fn([f64; 3]) -> [f64; 3],
        e_fn: impl Fn([f64; 3]) -> [f64; 3],
    ) -> Self {
        let refine = refine.max(1);
        let dim = grid.dim();
        let mut origin = [0.0; 3];
        let mut spacing = [1.0; 3];
        let mut counts = [1usize; 3];
        for (d, a) in grid.axes().iter().enumerate() {
            let half = 0.5 * (a.omega_extent + a.coherence_length);
            let cells = ((2.0 * half) / (a.dx / refine as f64)).ceil().max(1.0) as usize;
            origin[d] = -half;
            spacing[d] = 2.0 * half / cells as f64;
            counts[d] = cells + 1;
        }
        let total: usize = counts[..dim].iter().product();
        let mut b = Vec::with_capacity(total);
        let mut e = Vec::with_capacity(total);
        for flat in 0..total {
            let idx = PhaseSpaceGrid::unravel(&counts[..dim], flat);
            let mut p = [0.0; 3];
            for d in 0..dim {
                p[d] = origin[d] + idx[d] as f64 * spacing[d];
            }
            b.push(b_fn(p));
            e.push(e_fn(p));
        }
        Self {
            dim,
            origin,
            spacing,
            counts,
            b,
            e,
        }
    }

    /// Builds a field from explicit samples laid out row-major over `counts`.
    pub fn from_samples(
        origin: &[f64],
        spacing: &[f64],
        counts: &[usize],
        b: Vec<[f64; 3]>,
        e: Vec<[f64; 3]>,
    ) -> Result<Self> {
        let dim = counts.len();
        if dim == 0 || dim > 3 || origin.len() != dim || spacing.len() != dim {
            return Err(WignerError::ShapeMismatch {
                expected: "1..=3 axes with matching origin/spacing".into(),
                found: format!("{} axes", dim),
            });
        }
        let total: usize = counts.iter().product();
        if b.len() != total || e.len() != total {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{total} samples"),
                found: format!("{} magnetic, {} electric", b.len(), e.len()),
            });
        }
        let mut o = [0.0; 3];
        let mut sp = [1.0; 3];
        let mut c = [1usize; 3];
        for d in 0..dim {
            if counts[d] < 2 || !(spacing[d] > 0.0) {
                return Err(WignerError::invalid(
                    format!("field.axis[{d}]"),
                    "needs at least two samples and positive spacing",
                ));
            }
            o[d] = origin[d];
            sp[d] = spacing[d];
            c[d] = counts[d];
        }
        Ok(Self {
            dim,
            origin: o,
            spacing: sp,
            counts: c,
            b,
            e,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Verifies that every argument `x + sτ/2` needed by the kernels of
    /// `grid` lies inside the sampled window.
    pub fn check_coverage(&self, grid: &PhaseSpaceGrid) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(WignerError::ShapeMismatch {
                expected: format!("{}D field", grid.dim()),
                found: format!("{}D field", self.dim),
            });
        }
        for (d, a) in grid.axes().iter().enumerate() {
            let reach = 0.5 * a.omega_extent + 0.5 * a.coherence_length;
            let lo = self.origin[d];
            let hi = lo + (self.counts[d] - 1) as f64 * self.spacing[d];
            let tol = 1e-9 * self.spacing[d];
            if lo > -reach + tol || hi < reach - tol {
                let mut point = [0.0; 3];
                point[d] = if lo > -reach + tol { -reach } else { reach };
                return Err(WignerError::FieldCoverage { point, axis: d });
            }
        }
        Ok(())
    }

    pub fn magnetic_at(&self, p: [f64; 3]) -> Result<[f64; 3]> {
        self.interpolate(&self.b, p)
    }

    pub fn electric_at(&self, p: [f64; 3]) -> Result<[f64; 3]> {
        self.interpolate(&self.e, p)
    }

    fn interpolate(&self, data: &[[f64; 3]], p: [f64; 3]) -> Result<[f64; 3]> {
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for d in 0..self.dim {
            let u = (p[d] - self.origin[d]) / self.spacing[d];
            let last = (self.counts[d] - 1) as f64;
            let eps = 1e-9;
            if !(u >= -eps && u <= last + eps) {
                return Err(WignerError::FieldCoverage { point: p, axis: d });
            }
            let u = u.clamp(0.0, last);
            let i = (u.floor() as usize).min(self.counts[d] - 2);
            base[d] = i;
            frac[d] = u - i as f64;
        }
        let mut out = [0.0; 3];
        for corner in 0..(1usize << self.dim) {
            let mut w = 1.0;
            let mut flat = 0usize;
            for d in 0..self.dim {
                let bit = (corner >> d) & 1;
                w *= if bit == 1 { frac[d] } else { 1.0 - frac[d] };
                flat = flat * self.counts[d] + base[d] + bit;
            }
            if w != 0.0 {
                let v = data[flat];
                out[0] += w * v[0];
                out[1] += w * v[1];
                out[2] += w * v[2];
            }
        }
        Ok(out)
    }
}

type VectorMap = Arc<dyn Fn([f64; 3]) -> [f64; 3] + Send + Sync>;
type ScalarMap = Arc<dyn Fn([f64; 3]) -> f64 + Send + Sync>;

/// A static gauge function χ with its gradient.
#[derive(Clone)]
pub struct GaugeFunction {
    pub value: ScalarMap,
    pub gradient: VectorMap,
}

impl GaugeFunction {
    pub fn new(
        value: impl Fn([f64; 3]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static,
    ) -> Self {
        Self {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    /// `χ = −B0·x·y/2`, which maps the symmetric gauge onto the Landau gauge.
    pub fn symmetric_to_landau(b0: f64) -> Self {
        Self::new(
            move |p| -0.5 * b0 * p[0] * p[1],
            move |p| [-0.5 * b0 * p[1], -0.5 * b0 * p[0], 0.0],
        )
    }
}

impl fmt::Debug for GaugeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GaugeFunction")
    }
}

/// Vector and scalar potentials describing one gauge of a field.
#[derive(Clone)]
pub struct GaugeSpec {
    pub label: String,
    pub vector_potential: VectorMap,
    pub scalar_potential: ScalarMap,
    pub gauge_function: Option<GaugeFunction>,
    zero_vector_potential: bool,
}

impl fmt::Debug for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GaugeSpec")
            .field("label", &self.label)
            .field("zero_vector_potential", &self.zero_vector_potential)
            .finish()
    }
}

impl GaugeSpec {
    pub fn new(
        label: impl Into<String>,
        vector_potential: impl Fn([f64; 3]) -> [f64; 3] + Send + Sync + 'static,
        scalar_potential: impl Fn([f64; 3]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            vector_potential: Arc::new(vector_potential),
            scalar_potential: Arc::new(scalar_potential),
            gauge_function: None,
            zero_vector_potential: false,
        }
    }

    /// `A = 0`, `φ = 0`: the electrostatic limit.
    pub fn zero() -> Self {
        let mut g = Self::new("zero", |_| [0.0; 3], |_| 0.0);
        g.zero_vector_potential = true;
        g
    }

    pub fn is_zero_vector_potential(&self) -> bool {
        self.zero_vector_potential
    }

    #[inline]
    pub fn a(&self, p: [f64; 3]) -> [f64; 3] {
        (self.vector_potential)(p)
    }

    /// Applies `A → A + ∇χ`; the scalar potential is unchanged for static χ.
    pub fn regauge(&self, chi: &GaugeFunction) -> Self {
        let a = self.vector_potential.clone();
        let grad = chi.gradient.clone();
        Self {
            label: format!("{}+chi", self.label),
            vector_potential: Arc::new(move |p| {
                let a0 = a(p);
                let g = grad(p);
                [a0[0] + g[0], a0[1] + g[1], a0[2] + g[2]]
            }),
            scalar_potential: self.scalar_potential.clone(),
            gauge_function: Some(chi.clone()),
            zero_vector_potential: false,
        }
    }

    /// `∇ × A` by central differences with step `h`.
    pub fn curl_fd(&self, p: [f64; 3], h: f64) -> [f64; 3] {
        let d = |axis: usize, comp: usize| {
            let mut lo = p;
            let mut hi = p;
            lo[axis] -= h;
            hi[axis] += h;
            (self.a(hi)[comp] - self.a(lo)[comp]) / (2.0 * h)
        };
        [d(1, 2) - d(2, 1), d(2, 0) - d(0, 2), d(0, 1) - d(1, 0)]
    }
}

/// Landau gauge `A = (−B0·y, 0, 0)` for a uniform `B = B0·ẑ`.
pub fn landau_gauge(b0: f64) -> GaugeSpec {
    GaugeSpec::new("landau", move |p| [-b0 * p[1], 0.0, 0.0], |_| 0.0)
}

/// Symmetric gauge `A = (−B0·y/2, B0·x/2, 0)` for a uniform `B = B0·ẑ`.
pub fn symmetric_gauge(b0: f64) -> GaugeSpec {
    GaugeSpec::new(
        "symmetric",
        move |p| [-0.5 * b0 * p[1], 0.5 * b0 * p[0], 0.0],
        |_| 0.0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const NM: f64 = 1e-9;

    #[test]
    fn momentum_spacing_from_coherence_length() {
        let c = PhysicalConstants::default();
        let g = make_grid(c, 1, 100.0 * NM, 50.0 * NM, 50, 50).unwrap();
        let dp = g.axis(0).dp;
        assert!((dp - 6.626_070_15e-27).abs() / dp < 1e-9);
        assert!((dp - 7e-27).abs() / 7e-27 < 0.1);
        assert!((dp * 100.0 * NM - 2.0 * PI * c.hbar).abs() <= 1e-15 * 2.0 * PI * c.hbar);

        let half = make_grid(c, 1, 50.0 * NM, 25.0 * NM, 25, 10).unwrap();
        assert_eq!(half.axis(0).dp, 2.0 * PI * c.hbar / (50.0 * NM));
        assert!((half.axis(0).dp / dp - 2.0).abs() < 1e-15);
    }

    #[test]
    fn natural_units_give_unit_spacing() {
        let c = PhysicalConstants::new(1.0, 1.0, 1.0).unwrap();
        let g = make_grid(c, 2, 2.0 * PI, 1.0, 4, 3).unwrap();
        assert!((g.axis(0).dp - 1.0).abs() < 1e-15);
        assert!((g.axis(1).dp - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_domain_larger_than_half_window() {
        let c = PhysicalConstants::default();
        let err = make_grid(c, 1, 100.0 * NM, 60.0 * NM, 10, 5).unwrap_err();
        assert!(matches!(err, WignerError::DomainExceedsCoherence { axis: 0, .. }));
        assert!(make_grid(c, 1, 100.0 * NM, 50.0 * NM, 10, 5).is_ok());
        assert!(make_grid(c, 1, 100.0 * NM, 50.0 * NM, 0, 5).is_err());
        assert!(make_grid(c, 1, 100.0 * NM, 50.0 * NM, 4, 0).is_err());
        assert!(make_grid(c, 1, -1.0, 50.0 * NM, 4, 2).is_err());
        assert!(make_grid(c, 4, 100.0 * NM, 50.0 * NM, 4, 2).is_err());
        assert!(PhysicalConstants::new(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn spatial_cells_tile_the_domain() {
        let g = make_grid(PhysicalConstants::default(), 1, 100.0 * NM, 40.0 * NM, 8, 4).unwrap();
        let a = g.axis(0);
        assert!((a.n_x as f64 * a.dx - a.omega_extent).abs() < 1e-24);
        assert!((a.position(0) + 20.0 * NM - 0.5 * a.dx).abs() < 1e-20);
        assert!((a.position(7) - 20.0 * NM + 0.5 * a.dx).abs() < 1e-20);
        assert!((a.s(0) + a.s(a.n_m() - 1)).abs() < 1e-24);
        assert_eq!(a.s(a.n_p), 0.0);
    }

    #[test]
    fn landau_gauge_value() {
        let a = landau_gauge(1.0).a([1.0 * NM, 2.0 * NM, 0.0]);
        assert_eq!(a, [-2e-9, 0.0, 0.0]);
    }

    #[test]
    fn both_gauges_have_the_same_curl() {
        for gauge in [landau_gauge(1.0), symmetric_gauge(1.0)] {
            for p in [[0.0, 0.0, 0.0], [3.0 * NM, -7.0 * NM, 0.0], [20.0 * NM, 11.0 * NM, 0.0]] {
                let b = gauge.curl_fd(p, 0.1 * NM);
                assert!((b[2] - 1.0).abs() < 1e-9, "{}: {:?}", gauge.label, b);
                assert!(b[0].abs() < 1e-9 && b[1].abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gauge_function_maps_symmetric_onto_landau() {
        let b0 = 0.7;
        let chi = GaugeFunction::symmetric_to_landau(b0);
        let h = 1e-3 * NM;
        let regauged = symmetric_gauge(b0).regauge(&chi);
        let landau = landau_gauge(b0);
        for p in [[1.0 * NM, 2.0 * NM, 0.0], [-13.0 * NM, 5.0 * NM, 0.0]] {
            // finite-difference gradient of χ against the supplied gradient
            let grad = chi.gradient.as_ref()(p);
            for d in 0..2 {
                let mut lo = p;
                let mut hi = p;
                lo[d] -= h;
                hi[d] += h;
                let fd = (chi.value.as_ref()(hi) - chi.value.as_ref()(lo)) / (2.0 * h);
                assert!((fd - grad[d]).abs() <= 1e-9 * grad[d].abs().max(1e-12));
            }
            let a1 = regauged.a(p);
            let a2 = landau.a(p);
            for d in 0..3 {
                assert!((a1[d] - a2[d]).abs() <= 1e-24);
            }
        }
    }

    #[test]
    fn sampled_linear_field_is_exact_and_bounded() {
        let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 40.0 * NM, 8, 3).unwrap();
        let field = LinearEMField {
            e_grad_x: 2e15,
            e_grad_y: -1e15,
            b0: 1.0,
            b1: 1e7,
        };
        let s = field.sample(&g);
        s.check_coverage(&g).unwrap();
        let p = [13.3 * NM, -47.1 * NM, 0.0];
        let b = s.magnetic_at(p).unwrap();
        let e = s.electric_at(p).unwrap();
        assert!((b[2] - field.bz(p[1])).abs() < 1e-14);
        assert!((e[0] - field.electric(p)[0]).abs() < 1e-6);
        assert!((e[1] - field.electric(p)[1]).abs() < 1e-6);
        assert!(matches!(
            s.magnetic_at([80.0 * NM, 0.0, 0.0]),
            Err(WignerError::FieldCoverage { axis: 0, .. })
        ));
    }

    #[test]
    fn coverage_check_rejects_small_window() {
        let g = make_grid(PhysicalConstants::default(), 1, 100.0 * NM, 40.0 * NM, 8, 3).unwrap();
        let f = SampledEMField::from_samples(
            &[-20.0 * NM],
            &[10.0 * NM],
            &[5],
            vec![[0.0; 3]; 5],
            vec![[0.0; 3]; 5],
        )
        .unwrap();
        assert!(matches!(f.check_coverage(&g), Err(WignerError::FieldCoverage { .. })));
    }
}
