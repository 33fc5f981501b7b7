use proptest::prelude::*;

use wigner_cli::config::{
    parse_config, write_config, FieldSection, GridSection, InitialSection, MagnitudeSection, Observable, OutputSection,
    ProbeSection, SimulationConfig, SolverKind, SolverSection,
};
use wigner_core::kernels::B1Convention;
use wigner_core::solvers::{AdvectionScheme, Boundary, FredholmMethod, Interpolation};

fn grid() -> impl Strategy<Value = GridSection> {
    (40.0f64..400.0, 0.1f64..0.5, 2usize..40, 1usize..12).prop_map(|(l, frac, n_x, n_p)| GridSection {
        dim: 2,
        coherence_length_nm: l,
        omega_extent_nm: l * frac,
        n_x,
        n_p,
    })
}

fn solver() -> impl Strategy<Value = SolverSection> {
    (
        prop_oneof![
            Just(SolverKind::Semidiscrete),
            Just(SolverKind::Continuum),
            Just(SolverKind::Fredholm)
        ],
        1u32..20,
        proptest::option::of(1e10f64..1e14),
        prop_oneof![Just(2usize), Just(4)],
        prop_oneof![Just(Boundary::Periodic), Just(Boundary::ZeroOutside)],
        prop_oneof![Just(AdvectionScheme::Central2), Just(AdvectionScheme::Central4), Just(AdvectionScheme::Upwind1)],
        prop_oneof![Just(Interpolation::Linear), Just(Interpolation::Cubic), Just(Interpolation::Quintic)],
        prop_oneof![Just(B1Convention::Derived), Just(B1Convention::AsPrinted)],
        prop_oneof![Just(FredholmMethod::Marching), Just(FredholmMethod::GlobalNeumann)],
        0..=i64::MAX as u64,
    )
        .prop_map(|(kind, steps, gamma, order, boundary, advection, interpolation, conv, method, seed)| {
            SolverSection {
                kind,
                dt_fs: 0.01,
                t_end_fs: 0.01 * steps as f64,
                m_truncation: None,
                gamma0_per_s: gamma,
                stencil_order: order,
                boundary,
                advection,
                interpolation,
                b1_convention: conv,
                fredholm_method: method,
                fredholm_tolerance: 1e-10,
                max_iterations: 50,
                rng_seed: seed,
                n_particles: 100,
                weight_cap: 1e4,
            }
        })
}

fn config() -> impl Strategy<Value = SimulationConfig> {
    (
        grid(),
        (-2.0f64..2.0, -0.1f64..0.1, -1e-3f64..1e-3, -1e-3f64..1e-3),
        (-0.4f64..0.4, -0.4f64..0.4, 0.05f64..0.3, -1.0f64..1.0, 0.5f64..3.0),
        solver(),
        (0usize..5, any::<bool>(), any::<bool>()),
        proptest::option::of((1.0f64..40.0, 1.0f64..30.0, proptest::option::of(0.1f64..2.0))),
    )
        .prop_map(|(grid, f, init, solver, out, mag)| {
            let half = grid.omega_extent_nm / 2.0;
            let initial = InitialSection::Gaussian {
                center_nm: vec![init.0 * half, init.1 * half],
                sigma_nm: init.2 * grid.omega_extent_nm,
                momentum_dp: vec![init.3, -init.3],
                sigma_p_dp: init.4,
            };
            let mut observables = Vec::new();
            if out.1 {
                observables.push(Observable::Density);
            }
            if out.2 {
                observables.push(Observable::MeanMomentum);
            }
            SimulationConfig {
                grid,
                constants: None,
                field: FieldSection {
                    b0_t: f.0,
                    b1_t_per_nm: f.1,
                    e_grad_x_v_per_nm2: f.2,
                    e_grad_y_v_per_nm2: f.3,
                },
                initial: Some(initial),
                solver: Some(solver),
                probes: None,
                output: OutputSection {
                    directory: None,
                    cadence: out.0,
                    observables,
                    states: out.1,
                },
                magnitudes: mag.map(|(m, s, dx)| MagnitudeSection {
                    m_typical: m,
                    s_typical_nm: s,
                    dx_nm: dx,
                }),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn write_then_load_is_identity(cfg in config()) {
        cfg.resolve().unwrap();
        let text = write_config(&cfg);
        let back = parse_config(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }
}

#[test]
fn monte_carlo_probes_round_trip() {
    let text = r#"
[grid]
dim = 2
coherence_length_nm = 100.0
omega_extent_nm = 40.0
n_x = 8
n_p = 4

[initial]
kind = "homogeneous"
momentum_dp = [1.0, 0.0]
sigma_p_dp = 1.0

[solver]
kind = "mc"
dt_fs = 1.0
t_end_fs = 5.0

[[probes]]
momentum = [1, -2]
position_nm = [3.5, -1.0]
"#;
    let cfg = parse_config(text).unwrap();
    assert_eq!(
        cfg.probes,
        Some(vec![ProbeSection { momentum: vec![1, -2], position_nm: vec![3.5, -1.0] }])
    );
    assert_eq!(parse_config(&write_config(&cfg)).unwrap(), cfg);
    let bad = text.replace("momentum = [1, -2]", "momentum = [1, -5]");
    assert!(parse_config(&bad).unwrap_err().to_string().starts_with("probes[0].momentum"));
}
