//! Run configuration: the TOML schema, unit conversion and validation.
//!
//! Keys carry their unit as a suffix (`_nm`, `_fs`, `_t`, `_t_per_nm`,
//! `_v_per_nm2`, `_per_s`); momenta are given in lattice units of ΔP.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use wigner_core::kernels::B1Convention;
use wigner_core::solvers::{AdvectionScheme, Boundary, FredholmMethod, Interpolation, SolverConfig};
use wigner_core::{make_grid, LinearEMField, PhaseSpaceGrid, PhysicalConstants};

const NM: f64 = 1e-9;
const FS: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
}

fn invalid(path: &str, message: impl fmt::Display) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub grid: GridSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSection>,
    #[serde(default)]
    pub field: FieldSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<Vec<ProbeSection>>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub magnitudes: Option<MagnitudeSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub coherence_length_nm: f64,
    pub omega_extent_nm: f64,
    pub n_x: usize,
    pub n_p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSection {
    /// Effective mass in units of the free-electron mass.
    pub mass_ratio: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    #[serde(default)]
    pub b0_t: f64,
    #[serde(default)]
    pub b1_t_per_nm: f64,
    #[serde(default)]
    pub e_grad_x_v_per_nm2: f64,
    #[serde(default)]
    pub e_grad_y_v_per_nm2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSection {
    /// Phase-space Gaussian normalised to unit mass.
    Gaussian {
        center_nm: Vec<f64>,
        sigma_nm: f64,
        momentum_dp: Vec<f64>,
        sigma_p_dp: f64,
    },
    /// Uniform in position, Gaussian in momentum.
    Homogeneous {
        momentum_dp: Vec<f64>,
        sigma_p_dp: f64,
    },
    /// A state previously written in the binary state format.
    StateFile { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Semidiscrete,
    Continuum,
    Fredholm,
    Mc,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Semidiscrete => "semidiscrete",
            SolverKind::Continuum => "continuum",
            SolverKind::Fredholm => "fredholm",
            SolverKind::Mc => "mc",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub kind: SolverKind,
    pub dt_fs: f64,
    pub t_end_fs: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_truncation: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0_per_s: Option<f64>,
    #[serde(default = "defaults::stencil_order")]
    pub stencil_order: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub advection: AdvectionScheme,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default)]
    pub b1_convention: B1Convention,
    #[serde(default)]
    pub fredholm_method: FredholmMethod,
    #[serde(default = "defaults::fredholm_tolerance")]
    pub fredholm_tolerance: f64,
    #[serde(default = "defaults::max_iterations")]
    pub max_iterations: usize,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "defaults::n_particles")]
    pub n_particles: usize,
    #[serde(default = "defaults::weight_cap")]
    pub weight_cap: f64,
}

mod defaults {
    use wigner_core::solvers::SolverConfig;

    pub fn stencil_order() -> usize {
        SolverConfig::default().stencil_order
    }
    pub fn fredholm_tolerance() -> f64 {
        SolverConfig::default().fredholm_tolerance
    }
    pub fn max_iterations() -> usize {
        SolverConfig::default().max_iterations
    }
    pub fn n_particles() -> usize {
        SolverConfig::default().n_particles
    }
    pub fn weight_cap() -> f64 {
        SolverConfig::default().weight_cap
    }
    pub fn observables() -> Vec<super::Observable> {
        vec![super::Observable::Density, super::Observable::MeanMomentum]
    }
    pub fn states() -> bool {
        true
    }
}

/// Monte Carlo target; the time is the solver horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSection {
    pub momentum: Vec<i64>,
    pub position_nm: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Density,
    MeanMomentum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directory: Option<PathBuf>,
    /// Snapshot every `cadence` steps; 0 keeps only the first and last.
    #[serde(default)]
    pub cadence: usize,
    /// Spatially resolved tables written per snapshot. The global mass and
    /// mean momentum are always recorded.
    #[serde(default = "defaults::observables")]
    pub observables: Vec<Observable>,
    /// Write binary states alongside each snapshot.
    #[serde(default = "defaults::states")]
    pub states: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: None,
            cadence: 0,
            observables: defaults::observables(),
            states: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MagnitudeSection {
    pub m_typical: f64,
    pub s_typical_nm: f64,
    /// Mesh spacing; defaults to the spatial step of axis 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx_nm: Option<f64>,
}

/// The configuration with every quantity in SI units.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub grid: PhaseSpaceGrid,
    pub field: LinearEMField,
    pub initial: Option<ResolvedInitial>,
    pub solver: Option<(SolverKind, SolverConfig)>,
    /// `(momentum index, position in m)`.
    pub probes: Vec<([i64; 3], [f64; 3])>,
    pub magnitudes: Option<ResolvedMagnitudes>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedInitial {
    Gaussian {
        center: [f64; 3],
        sigma_x: f64,
        momentum: [f64; 3],
        sigma_p: f64,
    },
    Homogeneous {
        momentum: [f64; 3],
        sigma_p: f64,
    },
    StateFile(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedMagnitudes {
    pub m_typical: f64,
    pub s_typical: f64,
    pub dx: f64,
}

fn positive(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(invalid(path, format!("must be a positive number, got {v}")))
    }
}

fn finite(path: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(invalid(path, format!("must be finite, got {v}")))
    }
}

fn vector(path: &str, v: &[f64], dim: usize, scale: f64) -> Result<[f64; 3], ConfigError> {
    if v.len() != dim {
        return Err(invalid(path, format!("expected {dim} components, got {}", v.len())));
    }
    let mut out = [0.0; 3];
    for (d, x) in v.iter().enumerate() {
        out[d] = finite(&format!("{path}[{d}]"), *x)? * scale;
    }
    Ok(out)
}

impl SimulationConfig {
    /// Validates every field and converts to SI.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(invalid("grid.dim", format!("must be 1, 2 or 3, got {}", g.dim)));
        }
        let l = positive("grid.coherence_length_nm", g.coherence_length_nm)? * NM;
        let omega = positive("grid.omega_extent_nm", g.omega_extent_nm)? * NM;
        if omega > 0.5 * l * (1.0 + 1e-12) {
            return Err(invalid(
                "grid.omega_extent_nm",
                format!(
                    "bounded-domain constraint violated: Ω = {} nm exceeds L/2 = {} nm",
                    g.omega_extent_nm,
                    0.5 * g.coherence_length_nm
                ),
            ));
        }
        if g.n_x == 0 {
            return Err(invalid("grid.n_x", "must be at least 1"));
        }
        if g.n_p == 0 {
            return Err(invalid("grid.n_p", "must be at least 1"));
        }
        let mut constants = PhysicalConstants::default();
        if let Some(c) = &self.constants {
            constants.mass_m *= positive("constants.mass_ratio", c.mass_ratio)?;
        }
        let grid = make_grid(constants, g.dim, l, omega, g.n_x, g.n_p)
            .map_err(|e| invalid("grid", e))?;
        let dim = g.dim;
        let dp = grid.axis(0).dp;

        let f = &self.field;
        let field = LinearEMField {
            e_grad_x: finite("field.e_grad_x_v_per_nm2", f.e_grad_x_v_per_nm2)? / (NM * NM),
            e_grad_y: finite("field.e_grad_y_v_per_nm2", f.e_grad_y_v_per_nm2)? / (NM * NM),
            b0: finite("field.b0_t", f.b0_t)?,
            b1: finite("field.b1_t_per_nm", f.b1_t_per_nm)? / NM,
        };

        let initial = match &self.initial {
            None => None,
            Some(InitialSection::Gaussian { center_nm, sigma_nm, momentum_dp, sigma_p_dp }) => {
                Some(ResolvedInitial::Gaussian {
                    center: vector("initial.center_nm", center_nm, dim, NM)?,
                    sigma_x: positive("initial.sigma_nm", *sigma_nm)? * NM,
                    momentum: vector("initial.momentum_dp", momentum_dp, dim, dp)?,
                    sigma_p: positive("initial.sigma_p_dp", *sigma_p_dp)? * dp,
                })
            }
            Some(InitialSection::Homogeneous { momentum_dp, sigma_p_dp }) => Some(ResolvedInitial::Homogeneous {
                momentum: vector("initial.momentum_dp", momentum_dp, dim, dp)?,
                sigma_p: positive("initial.sigma_p_dp", *sigma_p_dp)? * dp,
            }),
            Some(InitialSection::StateFile { path }) => Some(ResolvedInitial::StateFile(path.clone())),
        };

        let solver = match &self.solver {
            None => None,
            Some(s) => {
                if dim != 2 {
                    return Err(invalid("grid.dim", "the evolution solvers require dim = 2"));
                }
                if initial.is_none() {
                    return Err(invalid("initial", "required when a solver is selected"));
                }
                let cfg = SolverConfig {
                    dt: positive("solver.dt_fs", s.dt_fs)? * FS,
                    t_end: finite("solver.t_end_fs", s.t_end_fs)? * FS,
                    m_truncation: s.m_truncation,
                    gamma0: s.gamma0_per_s,
                    stencil_order: s.stencil_order,
                    boundary: s.boundary,
                    advection: s.advection,
                    interpolation: s.interpolation,
                    b1_convention: s.b1_convention,
                    fredholm_method: s.fredholm_method,
                    fredholm_tolerance: s.fredholm_tolerance,
                    max_iterations: s.max_iterations,
                    rng_seed: s.rng_seed,
                    n_particles: s.n_particles,
                    weight_cap: s.weight_cap,
                    ..SolverConfig::default()
                };
                cfg.validate(&grid).map_err(|e| invalid("solver", e))?;
                if s.rng_seed > i64::MAX as u64 {
                    return Err(invalid("solver.rng_seed", format!("must not exceed {} (TOML integers are signed)", i64::MAX)));
                }
                if let Some(m) = s.m_truncation {
                    if m > g.n_p {
                        return Err(invalid("solver.m_truncation", format!("must not exceed grid.n_p = {}", g.n_p)));
                    }
                }
                Some((s.kind, cfg))
            }
        };

        let mut probes = Vec::new();
        match (&self.probes, solver.as_ref().map(|s| s.0)) {
            (Some(list), Some(SolverKind::Mc)) => {
                if list.is_empty() {
                    return Err(invalid("probes", "the mc solver needs at least one probe"));
                }
                for (i, p) in list.iter().enumerate() {
                    let path = format!("probes[{i}]");
                    if p.momentum.len() != dim {
                        return Err(invalid(&format!("{path}.momentum"), format!("expected {dim} components")));
                    }
                    let mut m = [0i64; 3];
                    m[..dim].copy_from_slice(&p.momentum);
                    if grid.momentum_slot(m).is_none() {
                        return Err(invalid(&format!("{path}.momentum"), "outside the momentum lattice"));
                    }
                    let x = vector(&format!("{path}.position_nm"), &p.position_nm, dim, NM)?;
                    if !grid.inside(x) {
                        return Err(invalid(&format!("{path}.position_nm"), "outside the domain Ω"));
                    }
                    probes.push((m, x));
                }
            }
            (None, Some(SolverKind::Mc)) => return Err(invalid("probes", "the mc solver needs at least one probe")),
            (Some(_), _) => return Err(invalid("probes", "only used by the mc solver")),
            (None, _) => {}
        }

        let magnitudes = match &self.magnitudes {
            None => None,
            Some(m) => Some(ResolvedMagnitudes {
                m_typical: positive("magnitudes.m_typical", m.m_typical)?,
                s_typical: positive("magnitudes.s_typical_nm", m.s_typical_nm)? * NM,
                dx: match m.dx_nm {
                    Some(dx) => positive("magnitudes.dx_nm", dx)? * NM,
                    None => grid.axis(0).dx,
                },
            }),
        };
        if solver.is_none() && magnitudes.is_none() {
            return Err(invalid("solver", "a config needs a [solver] or a [magnitudes] section"));
        }
        Ok(ResolvedConfig { grid, field, initial, solver, probes, magnitudes })
    }

    /// SHA-256 of the canonical serialisation.
    pub fn hash_bytes(&self) -> [u8; 32] {
        Sha256::digest(write_config(self).as_bytes()).into()
    }

    /// Hex form of [`hash_bytes`](Self::hash_bytes).
    pub fn hash(&self) -> String {
        hex::encode(self.hash_bytes())
    }
}

/// Parses and validates a config file.
pub fn load_config(path: &Path) -> Result<SimulationConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg = parse_config(&text).map_err(|e| match e {
        ConfigError::Parse { message, .. } => ConfigError::Parse { path: path.to_path_buf(), message },
        other => other,
    })?;
    Ok(cfg)
}

/// Parses and validates config text.
pub fn parse_config(text: &str) -> Result<SimulationConfig, ConfigError> {
    let cfg: SimulationConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
        path: PathBuf::from("<string>"),
        message: e.to_string(),
    })?;
    cfg.resolve()?;
    Ok(cfg)
}

/// Canonical TOML text of a config.
pub fn write_config(cfg: &SimulationConfig) -> String {
    toml::to_string(cfg).expect("config serialises to TOML")
}
