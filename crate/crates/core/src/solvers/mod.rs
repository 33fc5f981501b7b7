//! Time evolution of Wigner states: explicit steppers for the
//! finite-coherence and continuum equations, and deterministic and Monte
//! Carlo solvers for the integral form.

pub mod config;
pub mod fredholm;
pub mod interpolation;
pub mod montecarlo;
pub mod observables;
pub mod operator;
pub mod stencil;
pub mod stepper;
pub mod trajectory;

pub use config::{AdvectionScheme, Boundary, FredholmMethod, Interpolation, SolverConfig};
pub use fredholm::{solve_fredholm_resolvent, FredholmReport};
pub use montecarlo::{mc_ensemble, mc_estimate_point, McEstimate, McTarget, Particle, ParticleEnsemble};
pub use observables::{observables, Observables};
pub use operator::{rhs_continuum_fd, rhs_semidiscrete, LinearOperator, Model};
pub use stepper::{evolve, rk4_step, step_continuum, step_semidiscrete, EvolveReport};
pub use trajectory::free_flight;
