use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use wigner_cli::config::load_config;
use wigner_cli::plot::{emit_plot_data, Selection};
use wigner_cli::run::{effective_config, run, RunOptions};
use wigner_cli::state_io::load_state;
use wigner_core::kernels::term_magnitudes;

#[derive(Parser)]
#[command(name = "wigner", version, about = "Gauge-invariant Wigner transport in linear electromagnetic fields")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write its record.
    Run {
        config: PathBuf,
        /// Output directory (overrides the config).
        #[arg(long, env = "WIGNER_OUT_DIR")]
        out: Option<PathBuf>,
        /// RNG seed (overrides solver.rng_seed).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads for the solvers.
        #[arg(long, env = "WIGNER_WORKERS")]
        workers: Option<usize>,
    },
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Print the term-magnitude report of a config.
    Magnitudes { config: PathBuf },
    /// Relative L2 difference of two state files, `‖a − b‖ / ‖b‖`.
    Diff { a: PathBuf, b: PathBuf },
    /// Extract plot tables from a run record.
    EmitPlot {
        record: PathBuf,
        #[arg(long, value_enum)]
        select: SelectKind,
        /// Snapshot index for state-based selections; defaults to the last.
        #[arg(long)]
        snapshot: Option<usize>,
        /// Slice position along y.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        y_nm: f64,
        /// Slice momentum index along y.
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        m_y: i64,
        /// Destination directory; defaults to `<record>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectKind {
    Density,
    MeanMomentum,
    Observables,
    Magnitudes,
    MarginalX,
    MarginalY,
    Slice,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, out, seed, workers } => {
            let s = run(&config, &RunOptions { out, seed, workers })?;
            println!("wrote {} ({} snapshots, config {})", s.directory.display(), s.snapshots, s.config_hash);
        }
        Command::Validate { config } => {
            let (cfg, r) = effective_config(&config, &RunOptions::default())?;
            let g = &r.grid;
            println!("config ok: {}", config.display());
            println!("  sha256      {}", cfg.hash());
            for (d, a) in g.axes().iter().enumerate() {
                println!(
                    "  axis {d}      L = {:e} m, Ω = {:e} m, n_x = {}, n_p = {}, ΔP = {:e} kg·m/s",
                    a.coherence_length, a.omega_extent, a.n_x, a.n_p, a.dp
                );
            }
            if let Some((kind, sc)) = &r.solver {
                println!("  solver      {kind}, {} steps of {:e} s", sc.n_steps()?, sc.dt);
            }
            if r.magnitudes.is_some() {
                println!("  magnitudes  requested");
            }
        }
        Command::Magnitudes { config } => {
            let cfg = load_config(&config)?;
            let r = cfg.resolve()?;
            let Some(m) = r.magnitudes else {
                bail!("{} has no [magnitudes] section", config.display());
            };
            let rep = term_magnitudes(&r.field, &r.grid, m.m_typical, m.s_typical, m.dx)?;
            println!("term\tvalue\tunit");
            println!("kinetic\t{:e}\t1/s", rep.kinetic_rate);
            println!("first_magnetic\t{:e}\t1/s", rep.first_magnetic_rate);
            println!("second_magnetic\t{:e}\t1/s", rep.second_magnetic_rate);
            println!("third_magnetic\t{:e}\t1/s", rep.third_magnetic_rate);
            println!("ratio_factor_I\t{:e}\t1", rep.ratio_factor_i);
        }
        Command::Diff { a, b } => {
            let sa = load_state(&a).with_context(|| a.display().to_string())?;
            let sb = load_state(&b).with_context(|| b.display().to_string())?;
            if sa.grid != sb.grid {
                bail!("the two states live on different grids");
            }
            println!("{:e}", sa.state.relative_l2(&sb.state)?);
        }
        Command::EmitPlot { record, select, snapshot, y_nm, m_y, out } => {
            let selection = match select {
                SelectKind::Density => Selection::Density,
                SelectKind::MeanMomentum => Selection::MeanMomentum,
                SelectKind::Observables => Selection::Observables,
                SelectKind::Magnitudes => Selection::Magnitudes,
                SelectKind::MarginalX => Selection::Marginal { axis: 0, snapshot },
                SelectKind::MarginalY => Selection::Marginal { axis: 1, snapshot },
                SelectKind::Slice => Selection::Slice { y: y_nm * 1e-9, m_y, snapshot },
            };
            let out = out.unwrap_or_else(|| record.join("plots"));
            let path = emit_plot_data(&record, &selection, &out)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
