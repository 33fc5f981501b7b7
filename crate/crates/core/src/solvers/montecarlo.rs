//! Backward signed-particle estimator of the integral form.
//!
//! Each walk starts at the target phase-space point and moves backwards in
//! time. Interaction times are exponential with rate γ. At an interaction
//! the walk jumps to one entry of the `(K + γ)` stencil, picked with
//! probability proportional to its magnitude, and the weight absorbs the
//! sign and normalisation. A walk whose next interaction would precede
//! `t = 0` scores the initial state at its free-flight endpoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::config::{Boundary, SolverConfig};
use super::fredholm::default_gamma0;
use super::interpolation::interpolate_plane;
use super::operator::{LinearOperator, StencilEntry};
use super::trajectory::free_flight;
use crate::error::{Result, WignerError};
use crate::phasespace::{LinearEMField, PhaseSpaceGrid};
use crate::transform::WignerState;

/// Walks per deterministic reduction chunk.
pub const CHUNK: usize = 4096;

/// A phase-space point at a given time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McTarget {
    pub momentum: [i64; 3],
    pub position: [f64; 3],
    pub time: f64,
}

/// One signed-weight walker.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub momentum: [i64; 3],
    pub position: [f64; 3],
    pub weight: f64,
    /// Time at which the walker was created at its current state.
    pub birth_time: f64,
}

/// Running mean and variance, mergeable in a fixed order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Statistics {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl Statistics {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Statistics) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.count as f64 * other.count as f64) / n as f64;
        self.count = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count > 1 {
            self.m2 / (self.count - 1) as f64
        } else {
            0.0
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count > 0 {
            (self.variance() / self.count as f64).sqrt()
        } else {
            0.0
        }
    }
}

/// Walkers that reached `t = 0`, together with the score statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<Particle>,
    pub statistics: Statistics,
    pub capped_walks: usize,
    pub lost_walks: usize,
    pub events: usize,
}

impl ParticleEnsemble {
    fn merge(&mut self, other: ParticleEnsemble) {
        self.particles.extend(other.particles);
        self.statistics.merge(&other.statistics);
        self.capped_walks += other.capped_walks;
        self.lost_walks += other.lost_walks;
        self.events += other.events;
    }
}

/// Result of [`mc_estimate_point`].
#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_walks: usize,
    pub gamma0: f64,
    /// Walks stopped by the weight cap (scored zero).
    pub capped_walks: usize,
    /// Walks that left Ω under a zero-outside boundary (scored zero).
    pub lost_walks: usize,
    /// Mean number of interactions per walk.
    pub mean_events: f64,
}

enum Outcome {
    Scored(Particle, f64),
    Capped,
    Lost,
}

struct Walker<'a> {
    op: LinearOperator,
    f0: &'a WignerState,
    config: &'a SolverConfig,
    gamma: f64,
}

impl Walker<'_> {
    fn walk(&self, target: &McTarget, rng: &mut ChaCha8Rng, buf: &mut Vec<StencilEntry>, events: &mut usize) -> Outcome {
        let grid = self.op.grid();
        let mass = grid.constants().mass_m;
        let exp = Exp::new(self.gamma).expect("gamma validated positive");
        let (mut m, mut x, mut t, mut w) = (target.momentum, target.position, target.time, 1.0f64);
        loop {
            let p = [m[0] as f64 * grid.axis(0).dp, m[1] as f64 * grid.axis(1).dp, 0.0];
            let t_next = t - exp.sample(rng);
            let t_stop = t_next.max(0.0);
            let Some(pos) = self.op.wrap(free_flight(p, x, t, t_stop, mass)) else {
                return Outcome::Lost;
            };
            x = pos;
            if t_next < 0.0 {
                let slot = grid.momentum_slot(m).expect("walk stays on the lattice");
                let v = interpolate_plane(self.f0.plane(slot), grid, x, self.config.boundary, self.config.interpolation);
                let particle = Particle { momentum: m, position: x, weight: w, birth_time: 0.0 };
                return Outcome::Scored(particle, w * v);
            }
            t = t_next;
            *events += 1;
            self.op.stencil_at(m, x, buf);
            let total: f64 = buf.iter().map(|e| e.coef.abs()).sum::<f64>() + self.gamma;
            let norm = total / self.gamma;
            let mut u = rng.gen::<f64>() * total;
            let mut chosen = None;
            for e in buf.iter() {
                u -= e.coef.abs();
                if u < 0.0 {
                    chosen = Some(*e);
                    break;
                }
            }
            if let Some(e) = chosen {
                w *= e.coef.signum() * norm;
                m = e.momentum;
                x = e.position;
            } else {
                w *= norm;
            }
            if w.abs() > self.config.weight_cap {
                return Outcome::Capped;
            }
        }
    }

    fn run(&self, target: &McTarget, n: usize, keep_particles: bool) -> ParticleEnsemble {
        let seed = self.config.rng_seed;
        let chunks: Vec<ParticleEnsemble> = (0..n.div_ceil(CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = ParticleEnsemble::default();
                let mut buf = Vec::new();
                for walk in c * CHUNK..((c + 1) * CHUNK).min(n) {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(walk as u64);
                    match self.walk(target, &mut rng, &mut buf, &mut acc.events) {
                        Outcome::Scored(p, s) => {
                            acc.statistics.push(s);
                            if keep_particles {
                                acc.particles.push(p);
                            }
                        }
                        Outcome::Capped => {
                            acc.statistics.push(0.0);
                            acc.capped_walks += 1;
                        }
                        Outcome::Lost => {
                            acc.statistics.push(0.0);
                            acc.lost_walks += 1;
                        }
                    }
                }
                acc
            })
            .collect();
        let mut out = ParticleEnsemble::default();
        for c in chunks {
            out.merge(c);
        }
        out
    }
}

fn walker<'a>(
    target: &McTarget,
    f0: &'a WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &'a SolverConfig,
) -> Result<Walker<'a>> {
    f0.check_grid(grid)?;
    if config.n_particles == 0 {
        return Err(WignerError::invalid("n_particles", "must be at least 1"));
    }
    if !(config.weight_cap > 1.0) {
        return Err(WignerError::invalid("weight_cap", "must exceed 1"));
    }
    if !(target.time.is_finite() && target.time >= 0.0) {
        return Err(WignerError::invalid("target.time", "must be non-negative"));
    }
    if grid.momentum_slot(target.momentum).is_none() {
        return Err(WignerError::invalid("target.momentum", "outside the momentum lattice"));
    }
    let op = LinearOperator::continuum_kernel(field, grid, config)?;
    if config.boundary == Boundary::ZeroOutside && op.wrap(target.position).is_none() {
        return Err(WignerError::invalid("target.position", "outside the domain"));
    }
    let gamma = match config.gamma0 {
        Some(g) if g.is_finite() && g > 0.0 => g,
        Some(_) => return Err(WignerError::invalid("gamma0", "must be positive")),
        None => {
            let horizon = SolverConfig { t_end: target.time, ..config.clone() };
            default_gamma0(&op, &horizon)
        }
    };
    Ok(Walker { op, f0, config, gamma })
}

/// Estimates `f(target)` from `config.n_particles` independent walks.
///
/// Walk `i` draws from its own ChaCha8 stream of `config.rng_seed`, and
/// chunks of [`CHUNK`] walks are reduced in index order, so results are
/// reproducible for any thread count.
pub fn mc_estimate_point(
    target: &McTarget,
    f0: &WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<McEstimate> {
    let w = walker(target, f0, field, grid, config)?;
    let ens = w.run(target, config.n_particles, false);
    let n = ens.statistics.count;
    Ok(McEstimate {
        mean: ens.statistics.mean,
        std_error: ens.statistics.std_error(),
        n_walks: n,
        gamma0: w.gamma,
        capped_walks: ens.capped_walks,
        lost_walks: ens.lost_walks,
        mean_events: ens.events as f64 / n as f64,
    })
}

/// Runs the same walks as [`mc_estimate_point`] and keeps every walker
/// that reached `t = 0`.
pub fn mc_ensemble(
    target: &McTarget,
    f0: &WignerState,
    field: &LinearEMField,
    grid: &PhaseSpaceGrid,
    config: &SolverConfig,
) -> Result<ParticleEnsemble> {
    let w = walker(target, f0, field, grid, config)?;
    Ok(w.run(target, config.n_particles, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phasespace::{make_grid, PhysicalConstants};

    const NM: f64 = 1e-9;
    const FS: f64 = 1e-15;

    fn setup() -> (PhaseSpaceGrid, WignerState) {
        let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 48.0 * NM, 16, 5).unwrap();
        let dp = g.axis(0).dp;
        let f = WignerState::phase_space_gaussian(&g, [0.0; 3], 8.0 * NM, [dp, 0.0, 0.0], 1.5 * dp);
        (g, f)
    }

    fn target(g: &PhaseSpaceGrid) -> McTarget {
        McTarget { momentum: [1, 0, 0], position: g.position(5 * 16 + 7), time: 50.0 * FS }
    }

    #[test]
    fn statistics_merge_matches_sequential_push() {
        let xs: Vec<f64> = (0..100).map(|i| ((i * 37) % 11) as f64 - 4.5).collect();
        let mut all = Statistics::default();
        xs.iter().for_each(|x| all.push(*x));
        let mut a = Statistics::default();
        let mut b = Statistics::default();
        xs[..37].iter().for_each(|x| a.push(*x));
        xs[37..].iter().for_each(|x| b.push(*x));
        a.merge(&b);
        assert!((a.mean - all.mean).abs() < 1e-12);
        assert!((a.variance() - all.variance()).abs() < 1e-10);
    }

    #[test]
    fn zero_kernel_gives_exact_free_flight_without_variance() {
        let (g, f) = setup();
        let cfg = SolverConfig { n_particles: 500, boundary: Boundary::Periodic, ..SolverConfig::default() };
        let t = target(&g);
        let est = mc_estimate_point(&t, &f, &LinearEMField::default(), &g, &cfg).unwrap();
        let p = [g.axis(0).dp, 0.0, 0.0];
        let end = free_flight(p, t.position, t.time, 0.0, g.constants().mass_m);
        let slot = g.momentum_slot([1, 0, 0]).unwrap();
        let exact = interpolate_plane(f.plane(slot), &g, end, Boundary::Periodic, cfg.interpolation);
        assert!((est.mean - exact).abs() <= 1e-12 * exact.abs());
        assert!(est.std_error <= 1e-12 * exact.abs());
    }

    #[test]
    fn estimates_are_reproducible() {
        let (g, f) = setup();
        let field = LinearEMField::magnetic_only(1.0, 0.0);
        let cfg = SolverConfig { n_particles: 5000, rng_seed: 7, ..SolverConfig::default() };
        let a = mc_estimate_point(&target(&g), &f, &field, &g, &cfg).unwrap();
        let b = mc_estimate_point(&target(&g), &f, &field, &g, &cfg).unwrap();
        assert_eq!(a, b);
        let c = mc_estimate_point(&target(&g), &f, &field, &g, &SolverConfig { rng_seed: 8, ..cfg }).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn ensemble_weights_reproduce_the_mean() {
        let (g, f) = setup();
        let field = LinearEMField::magnetic_only(1.0, 0.0);
        let cfg = SolverConfig { n_particles: 3000, rng_seed: 3, ..SolverConfig::default() };
        let t = target(&g);
        let est = mc_estimate_point(&t, &f, &field, &g, &cfg).unwrap();
        let ens = mc_ensemble(&t, &f, &field, &g, &cfg).unwrap();
        let sum: f64 = ens
            .particles
            .iter()
            .map(|p| {
                let slot = g.momentum_slot(p.momentum).unwrap();
                p.weight * interpolate_plane(f.plane(slot), &g, p.position, cfg.boundary, cfg.interpolation)
            })
            .sum();
        assert!((sum / cfg.n_particles as f64 - est.mean).abs() <= 1e-12 * est.mean.abs().max(1e-300));
        assert!(ens.particles.iter().all(|p| p.birth_time == 0.0));
    }
}
