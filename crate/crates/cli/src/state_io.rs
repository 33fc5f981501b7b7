//! Binary persistence of full Wigner states.
//!
//! Layout (all little-endian):
//!
//! | field | type |
//! |---|---|
//! | magic `WGNS` | 4 bytes |
//! | format version (1) | u32 |
//! | dim | u32 |
//! | per axis: `n_x`, `n_p`, `L` (m), `Ω` (m) | u32, u32, f64, f64 |
//! | ħ (J·s), e (C), m (kg) | 3 × f64 |
//! | time (s) | f64 |
//! | config SHA-256 | 32 bytes |
//! | value count | u64 |
//! | values, `[m_flat][x_flat]` row-major | count × f64 |

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use wigner_core::{AxisSpec, PhaseSpaceGrid, PhysicalConstants, WignerState};

pub const MAGIC: &[u8; 4] = b"WGNS";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StateIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a state file (bad magic)")]
    BadMagic,
    #[error("unsupported state format version {0}")]
    Version(u32),
    #[error("corrupt state header: {0}")]
    Header(String),
}

/// A state file: the grid it lives on, the values and the producing config hash.
#[derive(Debug, Clone)]
pub struct StoredState {
    pub grid: PhaseSpaceGrid,
    pub state: WignerState,
    pub config_hash: [u8; 32],
}

pub fn write_state<W: Write>(
    mut w: W,
    grid: &PhaseSpaceGrid,
    state: &WignerState,
    config_hash: &[u8; 32],
) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    for a in grid.axes() {
        w.write_all(&(a.n_x as u32).to_le_bytes())?;
        w.write_all(&(a.n_p as u32).to_le_bytes())?;
        w.write_all(&a.coherence_length.to_le_bytes())?;
        w.write_all(&a.omega_extent.to_le_bytes())?;
    }
    let c = grid.constants();
    for v in [c.hbar, c.charge_e, c.mass_m, state.time] {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(config_hash)?;
    w.write_all(&(state.values.len() as u64).to_le_bytes())?;
    for v in &state.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()
}

pub fn save_state(path: &Path, grid: &PhaseSpaceGrid, state: &WignerState, config_hash: &[u8; 32]) -> io::Result<()> {
    write_state(BufWriter::new(File::create(path)?), grid, state, config_hash)
}

fn u32_of<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn u64_of<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn f64_of<R: Read>(r: &mut R) -> io::Result<f64> {
    Ok(f64::from_bits(u64_of(r)?))
}

pub fn read_state<R: Read>(mut r: R) -> Result<StoredState, StateIoError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(StateIoError::BadMagic);
    }
    let version = u32_of(&mut r)?;
    if version != VERSION {
        return Err(StateIoError::Version(version));
    }
    let dim = u32_of(&mut r)? as usize;
    if !(1..=3).contains(&dim) {
        return Err(StateIoError::Header(format!("dim = {dim}")));
    }
    let mut specs = Vec::with_capacity(dim);
    for _ in 0..dim {
        let n_x = u32_of(&mut r)? as usize;
        let n_p = u32_of(&mut r)? as usize;
        let coherence_length = f64_of(&mut r)?;
        let omega_extent = f64_of(&mut r)?;
        specs.push(AxisSpec { coherence_length, omega_extent, n_x, n_p });
    }
    let constants = PhysicalConstants::new(f64_of(&mut r)?, f64_of(&mut r)?, f64_of(&mut r)?)
        .map_err(|e| StateIoError::Header(e.to_string()))?;
    let time = f64_of(&mut r)?;
    let mut config_hash = [0u8; 32];
    r.read_exact(&mut config_hash)?;
    let grid = PhaseSpaceGrid::new(constants, &specs).map_err(|e| StateIoError::Header(e.to_string()))?;
    let count = u64_of(&mut r)? as usize;
    if count != grid.n_cells() {
        return Err(StateIoError::Header(format!(
            "value count {count} does not match the grid ({} cells)",
            grid.n_cells()
        )));
    }
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    let state = WignerState::from_values(&grid, values, time).map_err(|e| StateIoError::Header(e.to_string()))?;
    Ok(StoredState { grid, state, config_hash })
}

pub fn load_state(path: &Path) -> Result<StoredState, StateIoError> {
    read_state(BufReader::new(File::open(path)?))
}
