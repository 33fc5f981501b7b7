//! Lagrange interpolation on the cell-centred spatial mesh.

use super::config::{Boundary, Interpolation};
use crate::phasespace::PhaseSpaceGrid;

/// Stencil start index and weights for evaluating at continuous index `u`
/// (grid point `i` sits at `u = i`).
#[inline]
pub fn lagrange_weights(kind: Interpolation, u: f64, weights: &mut [f64; 6]) -> (i64, usize) {
    let n = kind.points();
    let base = u.floor();
    let start = base as i64 - (n as i64 / 2 - 1);
    let t = u - start as f64;
    for (j, w) in weights.iter_mut().enumerate().take(n) {
        let mut acc = 1.0;
        for k in 0..n {
            if k != j {
                acc *= (t - k as f64) / (j as f64 - k as f64);
            }
        }
        *w = acc;
    }
    (start, n)
}

#[inline]
fn fetch(i: i64, n: usize, boundary: Boundary) -> Option<usize> {
    match boundary {
        Boundary::Periodic => Some(i.rem_euclid(n as i64) as usize),
        Boundary::ZeroOutside => (i >= 0 && i < n as i64).then_some(i as usize),
    }
}

/// Continuous cell index of coordinate `x` on `axis`.
#[inline]
pub fn continuous_index(grid: &PhaseSpaceGrid, axis: usize, x: f64) -> f64 {
    let a = grid.axis(axis);
    (x + 0.5 * a.omega_extent) / a.dx - 0.5
}

/// Interpolates one spatial plane at a point. Under
/// [`Boundary::ZeroOutside`] points outside Ω give zero and missing
/// neighbours count as zero; periodic points are wrapped.
pub fn interpolate_plane(
    plane: &[f64],
    grid: &PhaseSpaceGrid,
    x: [f64; 3],
    boundary: Boundary,
    kind: Interpolation,
) -> f64 {
    let dim = grid.dim();
    let mut starts = [0i64; 3];
    let mut counts = [1usize; 3];
    let mut w = [[0.0; 6]; 3];
    for d in 0..dim {
        let a = grid.axis(d);
        if boundary == Boundary::ZeroOutside && x[d].abs() > 0.5 * a.omega_extent {
            return 0.0;
        }
        let u = continuous_index(grid, d, x[d]);
        let (s, n) = lagrange_weights(kind, u, &mut w[d]);
        starts[d] = s;
        counts[d] = n;
    }
    let shape = grid.space_shape();
    let mut acc = 0.0;
    match dim {
        1 => {
            for i in 0..counts[0] {
                if let Some(ii) = fetch(starts[0] + i as i64, shape[0], boundary) {
                    acc += w[0][i] * plane[ii];
                }
            }
        }
        2 => {
            for i in 0..counts[0] {
                let Some(ii) = fetch(starts[0] + i as i64, shape[0], boundary) else { continue };
                let mut row = 0.0;
                for j in 0..counts[1] {
                    if let Some(jj) = fetch(starts[1] + j as i64, shape[1], boundary) {
                        row += w[1][j] * plane[ii * shape[1] + jj];
                    }
                }
                acc += w[0][i] * row;
            }
        }
        _ => {
            for i in 0..counts[0] {
                let Some(ii) = fetch(starts[0] + i as i64, shape[0], boundary) else { continue };
                for j in 0..counts[1] {
                    let Some(jj) = fetch(starts[1] + j as i64, shape[1], boundary) else { continue };
                    for k in 0..counts[2] {
                        if let Some(kk) = fetch(starts[2] + k as i64, shape[2], boundary) {
                            acc += w[0][i] * w[1][j] * w[2][k] * plane[(ii * shape[1] + jj) * shape[2] + kk];
                        }
                    }
                }
            }
        }
    }
    acc
}

/// Evaluates `plane(x − shift)` at every grid point, separably, for a 2D
/// plane. `shift` is in metres per axis.
pub fn shift_plane_2d(
    plane: &[f64],
    grid: &PhaseSpaceGrid,
    shift: [f64; 2],
    boundary: Boundary,
    kind: Interpolation,
    scratch: &mut Vec<f64>,
    out: &mut [f64],
) {
    let (nx, ny) = (grid.axis(0).n_x, grid.axis(1).n_x);
    scratch.clear();
    scratch.resize(nx * ny, 0.0);
    let mut w = [0.0; 6];
    // pass along y: scratch[i, j] = plane[i, j − sy]
    let uy = -shift[1] / grid.axis(1).dx;
    let (sy, ny_pts) = lagrange_weights(kind, uy, &mut w);
    let wy = w;
    for i in 0..nx {
        let row = &plane[i * ny..(i + 1) * ny];
        let dst = &mut scratch[i * ny..(i + 1) * ny];
        for (j, v) in dst.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (k, wk) in wy.iter().enumerate().take(ny_pts) {
                if let Some(jj) = fetch(j as i64 + sy + k as i64, ny, boundary) {
                    acc += wk * row[jj];
                }
            }
            *v = acc;
        }
    }
    // pass along x
    let ux = -shift[0] / grid.axis(0).dx;
    let (sx, nx_pts) = lagrange_weights(kind, ux, &mut w);
    for i in 0..nx {
        let dst = &mut out[i * ny..(i + 1) * ny];
        dst.iter_mut().for_each(|v| *v = 0.0);
        for (k, wk) in w.iter().enumerate().take(nx_pts) {
            if let Some(ii) = fetch(i as i64 + sx + k as i64, nx, boundary) {
                let src = &scratch[ii * ny..(ii + 1) * ny];
                for (v, s) in dst.iter_mut().zip(src) {
                    *v += wk * s;
                }
            }
        }
    }
    if boundary == Boundary::ZeroOutside {
        // targets whose source point lies outside Ω read zero
        for d in 0..2 {
            let a = grid.axis(d);
            for idx in 0..nx * ny {
                let i = if d == 0 { idx / ny } else { idx % ny };
                if (a.position(i) - shift[d]).abs() > 0.5 * a.omega_extent {
                    out[idx] = 0.0;
                }
            }
        }
    }
}
