//! Run orchestration: builds the initial state, drives the selected solver
//! and writes the run record.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use wigner_core::kernels::{linear_coefficients, term_magnitudes, TermMagnitudeReport};
use wigner_core::solvers::{
    evolve, mc_estimate_point, observables, solve_fredholm_resolvent, LinearOperator, McTarget, Observables,
};
use wigner_core::{PhaseSpaceGrid, WignerState};

use crate::config::{load_config, write_config, Observable, ResolvedConfig, ResolvedInitial, SimulationConfig, SolverKind};
use crate::output::{position_columns, Cell, TableWriter};
use crate::state_io::{load_state, save_state};

pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";
pub const CONFIG_FILE: &str = "config.toml";
pub const METADATA_FILE: &str = "metadata.toml";
pub const OBSERVABLES_FILE: &str = "observables.tsv";
pub const DENSITY_FILE: &str = "density.tsv";
pub const MEAN_MOMENTUM_FILE: &str = "mean_momentum.tsv";
pub const SNAPSHOTS_FILE: &str = "snapshots.tsv";
pub const MAGNITUDES_FILE: &str = "magnitudes.tsv";
pub const MC_FILE: &str = "mc_estimates.tsv";
pub const FINAL_STATE_FILE: &str = "state_final.wgns";

/// Command-line overrides of a config.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_sha256: String,
    pub code_version: String,
    pub started_unix_s: u64,
    pub finished_unix_s: u64,
    pub status: String,
    pub solver: Option<String>,
    pub snapshots: usize,
    /// Ω is the centred interval `(−Ω/2, Ω/2)` per axis.
    pub domain_convention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub directory: PathBuf,
    pub config_hash: String,
    pub snapshots: usize,
    pub magnitudes: Option<TermMagnitudeReport>,
}

/// Applies the overrides, then resolves.
pub fn effective_config(path: &Path, opts: &RunOptions) -> Result<(SimulationConfig, ResolvedConfig)> {
    let mut cfg = load_config(path)?;
    if let Some(seed) = opts.seed {
        match cfg.solver.as_mut() {
            Some(s) => s.rng_seed = seed,
            None => bail!("--seed given but the config has no [solver] section"),
        }
    }
    let resolved = cfg.resolve()?;
    Ok((cfg, resolved))
}

fn output_dir(path: &Path, cfg: &SimulationConfig, opts: &RunOptions) -> PathBuf {
    if let Some(d) = &opts.out {
        return d.clone();
    }
    if let Some(d) = &cfg.output.directory {
        return d.clone();
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    PathBuf::from("runs").join(stem)
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Runs a config file and writes its record.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let (cfg, resolved) = effective_config(path, opts)?;
    let dir = output_dir(path, &cfg, opts);
    let pool = match opts.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(n) => Some(rayon::ThreadPoolBuilder::new().num_threads(n).build()?),
        None => None,
    };
    match pool {
        Some(p) => p.install(|| run_resolved(&cfg, &resolved, &dir)),
        None => run_resolved(&cfg, &resolved, &dir),
    }
}

/// Runs an already validated config into `dir`.
pub fn run_resolved(cfg: &SimulationConfig, resolved: &ResolvedConfig, dir: &Path) -> Result<RunSummary> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let marker = dir.join(INCOMPLETE_MARKER);
    fs::write(&marker, "run in progress or failed\n")?;
    let hash = cfg.hash();
    fs::write(dir.join(CONFIG_FILE), format!("# config_sha256={hash}\n{}", write_config(cfg)))?;
    let started = unix_now();
    let mut meta = Metadata {
        config_sha256: hash.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix_s: started,
        finished_unix_s: started,
        status: "running".into(),
        solver: resolved.solver.as_ref().map(|(k, _)| k.to_string()),
        snapshots: 0,
        domain_convention: "centred".into(),
        error: None,
        notes: Vec::new(),
    };
    let result = execute(cfg, resolved, dir, &mut meta);
    meta.finished_unix_s = unix_now();
    match &result {
        Ok(_) => meta.status = "complete".into(),
        Err(e) => {
            meta.status = "failed".into();
            meta.error = Some(format!("{e:#}"));
        }
    }
    fs::write(dir.join(METADATA_FILE), toml::to_string(&meta)?)?;
    let magnitudes = result.with_context(|| format!("run into {} failed", dir.display()))?;
    fs::remove_file(&marker)?;
    Ok(RunSummary {
        directory: dir.to_path_buf(),
        config_hash: hash,
        snapshots: meta.snapshots,
        magnitudes,
    })
}

fn execute(
    cfg: &SimulationConfig,
    resolved: &ResolvedConfig,
    dir: &Path,
    meta: &mut Metadata,
) -> Result<Option<TermMagnitudeReport>> {
    let hash = cfg.hash();
    let magnitudes = match &resolved.magnitudes {
        Some(m) => {
            let report = term_magnitudes(&resolved.field, &resolved.grid, m.m_typical, m.s_typical, m.dx)?;
            write_magnitudes(&dir.join(MAGNITUDES_FILE), &hash, &report)?;
            Some(report)
        }
        None => None,
    };
    let Some((kind, sc)) = &resolved.solver else {
        return Ok(magnitudes);
    };
    let grid = &resolved.grid;
    let f0 = initial_state(resolved)?;
    let mut rec = Recorder::new(cfg, grid, dir, &hash)?;
    rec.snapshot(0, &f0)?;
    match kind {
        SolverKind::Semidiscrete | SolverKind::Continuum => {
            let op = if *kind == SolverKind::Semidiscrete {
                let coeffs = linear_coefficients(&resolved.field, grid, sc.b1_convention, sc.m_truncation)?;
                LinearOperator::semidiscrete(&coeffs, grid, sc)?
            } else {
                LinearOperator::continuum(&resolved.field, grid, sc)?
            };
            let n_steps = sc.n_steps()?;
            let cadence = cfg.output.cadence;
            let mut failure = None;
            let (fin, report) = evolve(&op, &f0, sc, |step, f| {
                let due = step == n_steps || (cadence > 0 && step % cadence == 0);
                if due && failure.is_none() {
                    failure = rec.snapshot(step, f).err();
                }
            })?;
            if let Some(e) = failure {
                return Err(e);
            }
            if report.boundary_flagged {
                meta.notes.push(format!(
                    "momentum-boundary share reached {:.3e}; the lattice may be too small",
                    report.max_boundary_fraction
                ));
            }
            save_state(&dir.join(FINAL_STATE_FILE), grid, &fin, &cfg.hash_bytes())?;
        }
        SolverKind::Fredholm => {
            let (fin, report) = solve_fredholm_resolvent(&f0, &resolved.field, grid, sc)?;
            meta.notes.push(format!(
                "resolvent: gamma0 = {:e} 1/s, {} sweeps, final residual {:e}",
                report.gamma0, report.iterations, report.final_residual
            ));
            rec.snapshot(report.steps, &fin)?;
            save_state(&dir.join(FINAL_STATE_FILE), grid, &fin, &cfg.hash_bytes())?;
        }
        SolverKind::Mc => {
            let mut t = TableWriter::create(
                &dir.join(MC_FILE),
                &hash,
                &[
                    "probe", "m_x", "m_y", "x_m", "y_m", "t_s", "estimate_per_m2", "std_error_per_m2", "walks",
                    "capped_walks", "lost_walks", "mean_events", "gamma0_per_s",
                ],
            )?;
            for (i, (m, x)) in resolved.probes.iter().enumerate() {
                let target = McTarget { momentum: *m, position: *x, time: sc.t_end };
                let e = mc_estimate_point(&target, &f0, &resolved.field, grid, sc)
                    .with_context(|| format!("probe {i}"))?;
                t.row(&[
                    Cell::U(i),
                    Cell::I(m[0]),
                    Cell::I(m[1]),
                    Cell::F(x[0]),
                    Cell::F(x[1]),
                    Cell::F(sc.t_end),
                    Cell::F(e.mean),
                    Cell::F(e.std_error),
                    Cell::U(e.n_walks),
                    Cell::U(e.capped_walks),
                    Cell::U(e.lost_walks),
                    Cell::F(e.mean_events),
                    Cell::F(e.gamma0),
                ])?;
            }
            t.finish()?;
        }
    }
    meta.snapshots = rec.finish()?;
    Ok(magnitudes)
}

fn initial_state(resolved: &ResolvedConfig) -> Result<WignerState> {
    let grid = &resolved.grid;
    let dim = grid.dim();
    Ok(match resolved.initial.as_ref().context("initial: missing")? {
        ResolvedInitial::Gaussian { center, sigma_x, momentum, sigma_p } => {
            WignerState::phase_space_gaussian(grid, *center, *sigma_x, *momentum, *sigma_p)
        }
        ResolvedInitial::Homogeneous { momentum, sigma_p } => {
            let mut s = WignerState::from_fn(grid, |m, _| {
                let arg: f64 = (0..dim)
                    .map(|d| (m[d] as f64 * grid.axis(d).dp - momentum[d]).powi(2))
                    .sum();
                (-arg / (2.0 * sigma_p * sigma_p)).exp()
            });
            let mass = s.mass(grid);
            s.scale(1.0 / mass);
            s
        }
        ResolvedInitial::StateFile(path) => {
            let stored = load_state(path).with_context(|| format!("initial.path {}", path.display()))?;
            if &stored.grid != grid {
                bail!("initial.path: state file grid does not match [grid]");
            }
            let mut s = stored.state;
            s.time = 0.0;
            s
        }
    })
}

fn write_magnitudes(path: &Path, hash: &str, r: &TermMagnitudeReport) -> Result<()> {
    let mut t = TableWriter::create(path, hash, &["term", "value", "unit"])?;
    for (name, v, unit) in [
        ("kinetic", r.kinetic_rate, "1/s"),
        ("first_magnetic", r.first_magnetic_rate, "1/s"),
        ("second_magnetic", r.second_magnetic_rate, "1/s"),
        ("third_magnetic", r.third_magnetic_rate, "1/s"),
        ("ratio_factor_I", r.ratio_factor_i, "1"),
    ] {
        t.row(&[Cell::S(name.into()), Cell::F(v), Cell::S(unit.into())])?;
    }
    t.finish()?;
    Ok(())
}

/// Writes snapshot tables as the run advances.
struct Recorder<'a> {
    grid: &'a PhaseSpaceGrid,
    dir: &'a Path,
    hash_bytes: [u8; 32],
    states: bool,
    observables: TableWriter,
    density: Option<TableWriter>,
    mean_momentum: Option<TableWriter>,
    snapshots: TableWriter,
    count: usize,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &SimulationConfig, grid: &'a PhaseSpaceGrid, dir: &'a Path, hash: &str) -> Result<Self> {
        let pos = position_columns(grid.dim());
        let mom = &["mean_px_kg_m_per_s", "mean_py_kg_m_per_s", "mean_pz_kg_m_per_s"][..grid.dim()];
        let mut obs_cols = vec!["step", "t_s", "total_mass"];
        obs_cols.extend_from_slice(mom);
        let want = |o| cfg.output.observables.contains(&o);
        let density = if want(Observable::Density) {
            let mut c = vec!["t_s"];
            c.extend_from_slice(pos);
            c.push(density_column(grid.dim()));
            Some(TableWriter::create(&dir.join(DENSITY_FILE), hash, &c)?)
        } else {
            None
        };
        let mean_momentum = if want(Observable::MeanMomentum) {
            let mut c = vec!["t_s"];
            c.extend_from_slice(pos);
            c.extend_from_slice(mom);
            Some(TableWriter::create(&dir.join(MEAN_MOMENTUM_FILE), hash, &c)?)
        } else {
            None
        };
        Ok(Self {
            grid,
            dir,
            hash_bytes: cfg.hash_bytes(),
            states: cfg.output.states,
            observables: TableWriter::create(&dir.join(OBSERVABLES_FILE), hash, &obs_cols)?,
            density,
            mean_momentum,
            snapshots: TableWriter::create(&dir.join(SNAPSHOTS_FILE), hash, &["index", "step", "t_s", "state_file"])?,
            count: 0,
        })
    }

    fn snapshot(&mut self, step: usize, f: &WignerState) -> Result<()> {
        let grid = self.grid;
        let dim = grid.dim();
        let o: Observables = observables(f, grid)?;
        let mut row = vec![Cell::U(step), Cell::F(f.time), Cell::F(o.total_mass)];
        let gm = o.global_mean_momentum.unwrap_or([f64::NAN; 3]);
        row.extend((0..dim).map(|d| Cell::F(gm[d])));
        self.observables.row(&row)?;
        for ix in 0..grid.n_space() {
            let x = grid.position(ix);
            if let Some(t) = self.density.as_mut() {
                let mut r = vec![Cell::F(f.time)];
                r.extend((0..dim).map(|d| Cell::F(x[d])));
                r.push(Cell::F(o.density[ix]));
                t.row(&r)?;
            }
            if let Some(t) = self.mean_momentum.as_mut() {
                let p = o.mean_momentum[ix].unwrap_or([f64::NAN; 3]);
                let mut r = vec![Cell::F(f.time)];
                r.extend((0..dim).map(|d| Cell::F(x[d])));
                r.extend((0..dim).map(|d| Cell::F(p[d])));
                t.row(&r)?;
            }
        }
        let file = if self.states {
            let name = format!("state_{:05}.wgns", self.count);
            save_state(&self.dir.join(&name), grid, f, &self.hash_bytes)?;
            name
        } else {
            "-".to_string()
        };
        self.snapshots
            .row(&[Cell::U(self.count), Cell::U(step), Cell::F(f.time), Cell::S(file)])?;
        self.count += 1;
        Ok(())
    }

    fn finish(self) -> Result<usize> {
        self.observables.finish()?;
        self.snapshots.finish()?;
        if let Some(t) = self.density {
            t.finish()?;
        }
        if let Some(t) = self.mean_momentum {
            t.finish()?;
        }
        Ok(self.count)
    }
}

/// Column name of a spatial density in `dim` dimensions.
pub fn density_column(dim: usize) -> &'static str {
    ["n_per_m", "n_per_m2", "n_per_m3"][dim - 1]
}
