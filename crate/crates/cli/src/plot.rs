//! Plot-data emission from a run record.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use wigner_core::{PhaseSpaceGrid, WignerState};

use crate::output::{position_columns, Cell, Table, TableWriter};
use crate::run::{
    DENSITY_FILE, FINAL_STATE_FILE, MAGNITUDES_FILE, MEAN_MOMENTUM_FILE, OBSERVABLES_FILE,
    SNAPSHOTS_FILE,
};
use crate::state_io::load_state;

/// What to extract from a record.
#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    /// `n(x, t)` over all snapshots.
    Density,
    /// Local mean momentum over all snapshots.
    MeanMomentum,
    /// Global mass and mean momentum against time.
    Observables,
    /// Term-magnitude table.
    Magnitudes,
    /// `Σ f` over the other axes, as `(M_axis, x_axis)` heatmap.
    Marginal { axis: usize, snapshot: Option<usize> },
    /// `f(M_x, M_y = m_y, x, y ≈ y)` over `(M_x, x)`.
    Slice { y: f64, m_y: i64, snapshot: Option<usize> },
}

impl Selection {
    fn file_name(&self) -> String {
        match self {
            Selection::Density => "plot_density.tsv".into(),
            Selection::MeanMomentum => "plot_mean_momentum.tsv".into(),
            Selection::Observables => "plot_observables.tsv".into(),
            Selection::Magnitudes => "plot_magnitudes.tsv".into(),
            Selection::Marginal { axis, .. } => format!("plot_marginal_{}.tsv", ["x", "y", "z"][*axis]),
            Selection::Slice { m_y, .. } => format!("plot_slice_my{m_y}.tsv"),
        }
    }
}

/// Writes the selection as a delimited table into `out_dir` and returns its path.
pub fn emit_plot_data(record: &Path, selection: &Selection, out_dir: &Path) -> Result<PathBuf> {
    if !record.is_dir() {
        bail!("record {} does not exist", record.display());
    }
    fs::create_dir_all(out_dir)?;
    let dest = out_dir.join(selection.file_name());
    match selection {
        Selection::Density => copy_table(record, DENSITY_FILE, "density", &dest)?,
        Selection::MeanMomentum => copy_table(record, MEAN_MOMENTUM_FILE, "mean momentum", &dest)?,
        Selection::Observables => copy_table(record, OBSERVABLES_FILE, "observables", &dest)?,
        Selection::Magnitudes => copy_table(record, MAGNITUDES_FILE, "magnitude report", &dest)?,
        Selection::Marginal { axis, snapshot } => {
            let (grid, state, hash) = snapshot_state(record, *snapshot)?;
            if *axis >= grid.dim() {
                bail!("marginal along axis {axis} is absent from a {}D record", grid.dim());
            }
            write_marginal(&grid, &state, *axis, &hash, &dest)?;
        }
        Selection::Slice { y, m_y, snapshot } => {
            let (grid, state, hash) = snapshot_state(record, *snapshot)?;
            write_slice(&grid, &state, *y, *m_y, &hash, &dest)?;
        }
    }
    Ok(dest)
}

fn copy_table(record: &Path, name: &str, what: &str, dest: &Path) -> Result<()> {
    let src = record.join(name);
    if !src.exists() {
        bail!("the record holds no {what} ({name} is absent)");
    }
    // parse to make sure the table is well formed before re-emitting it
    Table::read(&src)?;
    fs::copy(&src, dest)?;
    Ok(())
}

fn snapshot_state(record: &Path, snapshot: Option<usize>) -> Result<(PhaseSpaceGrid, WignerState, String)> {
    let table = Table::read(&record.join(SNAPSHOTS_FILE)).context("the record holds no snapshots")?;
    if table.rows.is_empty() {
        bail!("the record holds no snapshots");
    }
    let file_col = table.column("state_file")?;
    let (index, file) = match snapshot {
        None => {
            let last = table.rows.len() - 1;
            let f = &table.rows[last][file_col];
            (last, if f == "-" { FINAL_STATE_FILE.to_string() } else { f.clone() })
        }
        Some(i) if i < table.rows.len() => (i, table.rows[i][file_col].clone()),
        Some(i) => bail!("snapshot {i} is absent (the record holds {})", table.rows.len()),
    };
    let path = record.join(&file);
    if file == "-" || !path.exists() {
        bail!("snapshot {index} has no stored state (output.states was off)");
    }
    let stored = load_state(&path)?;
    Ok((stored.grid, stored.state, table.config_hash))
}

fn write_marginal(grid: &PhaseSpaceGrid, f: &WignerState, axis: usize, hash: &str, dest: &Path) -> Result<()> {
    let dim = grid.dim();
    let a = grid.axis(axis);
    let space = grid.space_shape();
    let dv_other: f64 = (0..dim).filter(|&d| d != axis).map(|d| grid.axis(d).dx).product();
    let mut table = vec![0.0; a.n_m() * a.n_x];
    for mf in 0..grid.n_momentum() {
        let k = (grid.momentum_indices(mf)[axis] + a.n_p as i64) as usize;
        for (ix, v) in f.plane(mf).iter().enumerate() {
            let i = PhaseSpaceGrid::unravel(&space, ix)[axis];
            table[k * a.n_x + i] += v * dv_other;
        }
    }
    let name = ["x", "y", "z"][axis];
    let m_col = format!("m_{name}");
    let p_col = format!("p_{name}_kg_m_per_s");
    let x_col = position_columns(dim)[axis];
    let mut w = TableWriter::create(dest, hash, &[&m_col, &p_col, x_col, "marginal_per_m", "t_s"])?;
    for k in 0..a.n_m() {
        for i in 0..a.n_x {
            w.row(&[
                Cell::I(a.m_index(k)),
                Cell::F(a.momentum(k)),
                Cell::F(a.position(i)),
                Cell::F(table[k * a.n_x + i]),
                Cell::F(f.time),
            ])?;
        }
    }
    w.finish()?;
    Ok(())
}

fn write_slice(grid: &PhaseSpaceGrid, f: &WignerState, y: f64, m_y: i64, hash: &str, dest: &Path) -> Result<()> {
    if grid.dim() != 2 {
        bail!("a slice at fixed y needs a 2D record, this one is {}D", grid.dim());
    }
    let (ax, ay) = (grid.axis(0), grid.axis(1));
    if m_y.unsigned_abs() as usize > ay.n_p {
        bail!("M_y = {m_y} is absent from the lattice (n_p = {})", ay.n_p);
    }
    if !ay.inside(y) {
        bail!("y = {y:e} m lies outside Ω");
    }
    let j = (0..ay.n_x)
        .min_by(|&a, &b| (ay.position(a) - y).abs().total_cmp(&(ay.position(b) - y).abs()))
        .expect("non-empty axis");
    let mut w = TableWriter::create(
        dest,
        hash,
        &["m_x", "p_x_kg_m_per_s", "x_m", "y_m", "f_w_per_m2", "t_s"],
    )?;
    for k in 0..ax.n_m() {
        let mx = ax.m_index(k);
        let mf = grid.momentum_slot([mx, m_y, 0]).expect("index inside the lattice");
        let plane = f.plane(mf);
        for i in 0..ax.n_x {
            w.row(&[
                Cell::I(mx),
                Cell::F(ax.momentum(k)),
                Cell::F(ax.position(i)),
                Cell::F(ay.position(j)),
                Cell::F(plane[i * ay.n_x + j]),
                Cell::F(f.time),
            ])?;
        }
    }
    w.finish()?;
    Ok(())
}
