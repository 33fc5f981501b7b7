//! Spatial difference operators and momentum ladders.

use rayon::prelude::*;

use super::config::{AdvectionScheme, Boundary};
use crate::kernels::ladder_admissible;
use crate::phasespace::PhaseSpaceGrid;

/// Spatial difference scheme for a single derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Difference {
    Central2,
    Central4,
    /// One-sided difference using the upstream neighbour for a positive velocity.
    BackwardUpwind,
    /// One-sided difference using the downstream neighbour (negative velocity).
    ForwardUpwind,
}

impl Difference {
    pub fn for_advection(scheme: AdvectionScheme, velocity: f64) -> Self {
        match scheme {
            AdvectionScheme::Central2 => Difference::Central2,
            AdvectionScheme::Central4 => Difference::Central4,
            AdvectionScheme::Upwind1 => {
                if velocity >= 0.0 {
                    Difference::BackwardUpwind
                } else {
                    Difference::ForwardUpwind
                }
            }
        }
    }

    fn taps(self) -> &'static [(isize, f64)] {
        match self {
            Difference::Central2 => &[(-1, -0.5), (1, 0.5)],
            Difference::Central4 => &[
                (-2, 1.0 / 12.0),
                (-1, -8.0 / 12.0),
                (1, 8.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
            Difference::BackwardUpwind => &[(-1, -1.0), (0, 1.0)],
            Difference::ForwardUpwind => &[(0, -1.0), (1, 1.0)],
        }
    }
}

/// Accumulates `scale·∂plane/∂x_axis` into `out`.
pub fn add_derivative(
    plane: &[f64],
    shape: &[usize],
    axis: usize,
    dx: f64,
    boundary: Boundary,
    scheme: Difference,
    scale: f64,
    out: &mut [f64],
) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let taps = scheme.taps();
    let s = scale / dx;
    for o in 0..outer {
        let base = o * n * inner;
        for i in 0..n {
            let row = base + i * inner;
            for &(off, w) in taps {
                let j = i as isize + off;
                let j = match boundary {
                    Boundary::Periodic => j.rem_euclid(n as isize) as usize,
                    Boundary::ZeroOutside => {
                        if j < 0 || j >= n as isize {
                            continue;
                        }
                        j as usize
                    }
                };
                let src = base + j * inner;
                let c = s * w;
                for k in 0..inner {
                    out[row + k] += c * plane[src + k];
                }
            }
        }
    }
}

/// Central second-order derivative of every momentum plane along `axis`.
pub fn spatial_derivative(
    values: &[f64],
    grid: &PhaseSpaceGrid,
    axis: usize,
    boundary: Boundary,
) -> Vec<f64> {
    let n_space = grid.n_space();
    let shape = grid.space_shape();
    let dx = grid.axis(axis).dx;
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(n_space)
        .zip(values.par_chunks(n_space))
        .for_each(|(o, p)| add_derivative(p, &shape, axis, dx, boundary, Difference::Central2, 1.0, o));
    out
}

/// One gather entry `coef·f(source)` along a momentum axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderEntry {
    /// Signed offset `m` of the gather `f(M − m)`.
    pub offset: i64,
    /// Lattice slot of the source along the axis.
    pub source: usize,
    pub coef: f64,
}

/// Linear map along one momentum axis, `out(M) = Σ_m c(m)·f(M − m)`,
/// restricted to source-symmetric admissible offsets. Entries for `m` and
/// `−m` are grouped so that pairs are combined before accumulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub axis: usize,
    /// `groups[k]` holds, for target slot `k`, groups of one or two entries
    /// ordered by `|m|`.
    pub groups: Vec<Vec<Vec<LadderEntry>>>,
}

impl Ladder {
    /// Builds a ladder from `coef(m)` for `|m| ≤ max_offset`, skipping zeros.
    pub fn new(grid: &PhaseSpaceGrid, axis: usize, max_offset: usize, coef: impl Fn(i64) -> f64) -> Self {
        let a = grid.axis(axis);
        let n_p = a.n_p;
        let groups = (0..a.n_m())
            .map(|k| {
                let target = a.m_index(k);
                let mut out = Vec::new();
                for mag in 0..=max_offset as i64 {
                    let mut group = Vec::new();
                    let signs: &[i64] = if mag == 0 { &[1] } else { &[1, -1] };
                    for &sg in signs {
                        let m = sg * mag;
                        let c = coef(m);
                        if c == 0.0 || !ladder_admissible(target, m, n_p) {
                            continue;
                        }
                        group.push(LadderEntry {
                            offset: m,
                            source: (target - m + n_p as i64) as usize,
                            coef: c,
                        });
                    }
                    if !group.is_empty() {
                        out.push(group);
                    }
                }
                out
            })
            .collect();
        Self { axis, groups }
    }

    /// Central first difference in momentum of order 2 or 4.
    pub fn first_difference(grid: &PhaseSpaceGrid, axis: usize, order: usize) -> Self {
        let dp = grid.axis(axis).dp;
        // gather f(M − m): f(M + 1) is m = −1
        let coef = move |m: i64| -> f64 {
            match (order, m) {
                (2, -1) => 0.5 / dp,
                (2, 1) => -0.5 / dp,
                (4, -1) => 8.0 / (12.0 * dp),
                (4, 1) => -8.0 / (12.0 * dp),
                (4, -2) => -1.0 / (12.0 * dp),
                (4, 2) => 1.0 / (12.0 * dp),
                _ => 0.0,
            }
        };
        Self::new(grid, axis, order / 2, coef)
    }

    /// Central second difference in momentum of order 2 or 4.
    pub fn second_difference(grid: &PhaseSpaceGrid, axis: usize, order: usize) -> Self {
        let dp2 = grid.axis(axis).dp.powi(2);
        let coef = move |m: i64| -> f64 {
            match (order, m.abs()) {
                (2, 0) => -2.0 / dp2,
                (2, 1) => 1.0 / dp2,
                (4, 0) => -30.0 / (12.0 * dp2),
                (4, 1) => 16.0 / (12.0 * dp2),
                (4, 2) => -1.0 / (12.0 * dp2),
                _ => 0.0,
            }
        };
        Self::new(grid, axis, order / 2, coef)
    }

    /// Returns `self` with every coefficient multiplied by `a`.
    pub fn scaled(mut self, a: f64) -> Self {
        for row in &mut self.groups {
            for g in row {
                for e in g {
                    e.coef *= a;
                }
            }
        }
        self
    }

    /// Largest l1 norm of a row.
    pub fn max_row_l1(&self) -> f64 {
        self.groups
            .iter()
            .map(|row| row.iter().flatten().map(|e| e.coef.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn row_l1(&self, k: usize) -> f64 {
        self.groups[k].iter().flatten().map(|e| e.coef.abs()).sum()
    }

    /// Applies the ladder to a full state array (`[m_flat][x_flat]`).
    pub fn apply(&self, values: &[f64], grid: &PhaseSpaceGrid) -> Vec<f64> {
        let n_space = grid.n_space();
        let shape = grid.momentum_shape();
        let stride: usize = shape[self.axis + 1..].iter().product();
        let n_axis = shape[self.axis];
        let mut out = vec![0.0; values.len()];
        out.par_chunks_mut(n_space).enumerate().for_each(|(mf, o)| {
            let k = (mf / stride) % n_axis;
            let base = mf - k * stride;
            for group in &self.groups[k] {
                match group.as_slice() {
                    [a] => {
                        let pa = &values[(base + a.source * stride) * n_space..][..n_space];
                        for (v, x) in o.iter_mut().zip(pa) {
                            *v += a.coef * x;
                        }
                    }
                    [a, b] => {
                        let pa = &values[(base + a.source * stride) * n_space..][..n_space];
                        let pb = &values[(base + b.source * stride) * n_space..][..n_space];
                        for ((v, x), y) in o.iter_mut().zip(pa).zip(pb) {
                            *v += a.coef * x + b.coef * y;
                        }
                    }
                    _ => unreachable!("ladder groups hold one or two entries"),
                }
            }
        });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{make_grid, PhysicalConstants};

    fn grid() -> PhaseSpaceGrid {
        let c = PhysicalConstants::new(1.0, 1.0, 1.0).unwrap();
        make_grid(c, 2, 2.0 * std::f64::consts::PI, 2.0, 16, 6).unwrap()
    }

    #[test]
    fn central_differences_are_exact_for_low_polynomials() {
        let shape = [9usize];
        let dx = 0.3;
        let plane: Vec<f64> = (0..9).map(|i| (i as f64 * dx).powi(3)).collect();
        for scheme in [Difference::Central2, Difference::Central4] {
            let mut out = vec![0.0; 9];
            add_derivative(&plane, &shape, 0, dx, Boundary::ZeroOutside, scheme, 1.0, &mut out);
            let i = 4;
            let x = i as f64 * dx;
            let expect = 3.0 * x * x;
            let tol = if scheme == Difference::Central2 { dx * dx * 1.01 } else { 1e-12 };
            assert!((out[i] - expect).abs() <= tol, "{scheme:?}");
        }
    }

    #[test]
    fn periodic_differences_sum_to_zero() {
        let shape = [5usize, 7usize];
        let plane: Vec<f64> = (0..35).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        for scheme in [
            Difference::Central2,
            Difference::Central4,
            Difference::BackwardUpwind,
            Difference::ForwardUpwind,
        ] {
            for axis in 0..2 {
                let mut out = vec![0.0; 35];
                add_derivative(&plane, &shape, axis, 0.1, Boundary::Periodic, scheme, 1.0, &mut out);
                assert!(out.iter().sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_difference_ladder_differentiates_linear_data() {
        let g = grid();
        let n_space = g.n_space();
        let values: Vec<f64> = (0..g.n_cells())
            .map(|i| 2.0 * g.momentum(i / n_space)[0] - g.momentum(i / n_space)[1])
            .collect();
        for order in [2, 4] {
            let dx = Ladder::first_difference(&g, 0, order).apply(&values, &g);
            let dy = Ladder::first_difference(&g, 1, order).apply(&values, &g);
            for mf in 0..g.n_momentum() {
                let m = g.momentum_indices(mf);
                let interior = |k: i64| k.abs() + order as i64 <= g.axis(0).n_p as i64;
                if interior(m[0]) && interior(m[1]) {
                    assert!((dx[mf * n_space] - 2.0).abs() < 1e-12);
                    assert!((dy[mf * n_space] + 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn odd_ladders_preserve_the_total() {
        let g = grid();
        let values: Vec<f64> = (0..g.n_cells()).map(|i| ((i * 7919) % 13) as f64).collect();
        let odd = Ladder::new(&g, 1, 6, |m| if m == 0 { 0.0 } else { (m as f64).powi(-3) });
        for ladder in [
            Ladder::first_difference(&g, 0, 2),
            Ladder::first_difference(&g, 1, 4),
            odd,
        ] {
            let out = ladder.apply(&values, &g);
            let scale: f64 = values.iter().map(|v| v.abs()).sum();
            assert!(out.iter().sum::<f64>().abs() < 1e-13 * scale);
        }
    }
}
