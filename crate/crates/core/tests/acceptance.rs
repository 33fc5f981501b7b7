//! Acceptance checks 1–11. Runs as a plain binary under `cargo test` and
//! prints one PASS/FAIL line per check; exits non-zero if any fails.

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use wigner_core::kernels::{
    c1, c2, compute_hf, compute_if, fourier_s2, if_by_convolution, term_magnitudes, B1Convention,
    SQuadrature,
};
use wigner_core::quadrature::GaussLegendre;
use wigner_core::solvers::{
    evolve, mc_estimate_point, observables, solve_fredholm_resolvent, Boundary, LinearOperator, McTarget,
    SolverConfig,
};
use wigner_core::transform::{gauge_transform_rho, wst_discrete};
use wigner_core::{
    kernels::linear_coefficients, make_grid, phasespace::landau_gauge, phasespace::symmetric_gauge,
    GaugeFunction, GaussianPacket, LinearEMField, PhaseSpaceGrid, PhysicalConstants, WignerState,
};

const NM: f64 = 1e-9;
const FS: f64 = 1e-15;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------- fixtures

/// Periodic sum of a phase-space Gaussian over the neighbouring images of Ω.
fn periodic_gaussian(
    g: &PhaseSpaceGrid,
    centre: [f64; 2],
    sigma_x: f64,
    p0: [f64; 2],
    sigma_p: f64,
) -> WignerState {
    WignerState::from_fn(g, |m, x| {
        let mut pos = 0.0;
        let mut arg_p = 0.0;
        for d in 0..2 {
            let dp = m[d] as f64 * g.axis(d).dp - p0[d];
            arg_p += dp * dp / (2.0 * sigma_p * sigma_p);
        }
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                let sx = x[0] - centre[0] - i as f64 * g.axis(0).omega_extent;
                let sy = x[1] - centre[1] - j as f64 * g.axis(1).omega_extent;
                pos += (-(sx * sx + sy * sy) / (2.0 * sigma_x * sigma_x)).exp();
            }
        }
        pos * (-arg_p).exp()
    })
}

struct Desk {
    grid: PhaseSpaceGrid,
    f0: WignerState,
    config: SolverConfig,
}

/// 24×24 spatial, 17×17 momentum, L = 100 nm, Ω = 48 nm, 50 steps of 10 fs.
fn desk() -> &'static Desk {
    static D: OnceLock<Desk> = OnceLock::new();
    D.get_or_init(|| {
        let grid = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 48.0 * NM, 24, 8).unwrap();
        let dp = grid.axis(0).dp;
        let f0 = periodic_gaussian(&grid, [0.0, 0.0], 8.0 * NM, [2.0 * dp, dp], 1.5 * dp);
        let config = SolverConfig {
            dt: 10.0 * FS,
            t_end: 500.0 * FS,
            boundary: Boundary::Periodic,
            ..SolverConfig::default()
        };
        Desk { grid, f0, config }
    })
}

fn full_field() -> LinearEMField {
    LinearEMField::magnetic_only(1.0, 1e7)
}

fn fredholm(field: LinearEMField, gamma0: Option<f64>) -> (WignerState, f64) {
    let d = desk();
    let cfg = SolverConfig { gamma0, ..d.config.clone() };
    let (f, rep) = solve_fredholm_resolvent(&d.f0, &field, &d.grid, &cfg).unwrap();
    (f, rep.gamma0)
}

fn fredholm_full() -> &'static (WignerState, f64) {
    static F: OnceLock<(WignerState, f64)> = OnceLock::new();
    F.get_or_init(|| fredholm(full_field(), None))
}

fn fredholm_b0() -> &'static (WignerState, f64) {
    static F: OnceLock<(WignerState, f64)> = OnceLock::new();
    F.get_or_init(|| fredholm(LinearEMField::magnetic_only(1.0, 0.0), None))
}

// ------------------------------------------------------------------ oracles

/// Romberg extrapolation of the composite trapezoid rule for
/// `(1/L)∫_{−L/2}^{L/2} s^power·e^{−i·k·s} ds`.
fn romberg_moment(power: i32, k: f64, l: f64) -> Complex64 {
    let f = |s: f64| Complex64::from_polar(s.powi(power), -k * s);
    let levels = 8;
    let mut table: Vec<Vec<Complex64>> = Vec::new();
    for lev in 0..levels {
        let n = 1usize << (10 + lev);
        let h = l / n as f64;
        let mut acc = 0.5 * (f(-0.5 * l) + f(0.5 * l));
        for i in 1..n {
            acc += f(-0.5 * l + i as f64 * h);
        }
        let mut row = vec![acc * h / l];
        for j in 1..=lev {
            let q = 4f64.powi(j as i32);
            let prev = table[lev - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / (q - 1.0));
        }
        table.push(row);
    }
    table[levels - 1][levels - 1]
}

// ----------------------------------------------------------------- criteria

fn momentum_spacing() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 1, 100.0 * NM, 50.0 * NM, 10, 4).unwrap();
    let dp = g.axis(0).dp;
    let exact = 2.0 * PI * g.constants().hbar / (100.0 * NM);
    let within = ((dp - 7e-27) / 7e-27).abs() <= 0.1;
    let identity = ((dp - exact) / exact).abs() <= 1e-15;
    outcome(within && identity, format!("ΔP = {dp:.4e} kg·m/s (2πħ/L = {exact:.4e})"))
}

fn magnitude_table() -> Outcome {
    // B0 ≈ B1·L ≈ 1 T, s ≈ 20 nm, M = 25, dx = 1 nm
    let g = make_grid(PhysicalConstants::default(), 1, 100.0 * NM, 50.0 * NM, 50, 50).unwrap();
    let field = LinearEMField::magnetic_only(1.0, 1.0 / (100.0 * NM));
    let r = term_magnitudes(&field, &g, 25.0, 20.0 * NM, 1.0 * NM).unwrap();
    let ratio = r.first_magnetic_rate / r.kinetic_rate;
    let kinetic_ok = (1e14..=1e15).contains(&r.kinetic_rate);
    let ratio_ok = (1e-3..=1e-1).contains(&ratio);
    let third_ok = (1e8..=1e10).contains(&r.third_magnetic_rate);
    outcome(
        kinetic_ok && ratio_ok && third_ok,
        format!(
            "kinetic {:.3e} s⁻¹, first/kinetic {:.3e}, third {:.3e} s⁻¹",
            r.kinetic_rate, ratio, r.third_magnetic_rate
        ),
    )
}

fn gauge_invariance() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 2, 160.0 * NM, 80.0 * NM, 12, 12).unwrap();
    let dp = g.axis(0).dp;
    let packet = GaussianPacket {
        center: [3.0 * NM, -2.0 * NM, 0.0],
        sigma: [10.0 * NM, 10.0 * NM, 0.0],
        momentum: [2.0 * dp, -dp, 0.0],
    };
    let b0 = 1.0;
    let rho_sym = packet.density_matrix(&g);
    let rho_landau = gauge_transform_rho(&rho_sym, &GaugeFunction::symmetric_to_landau(b0), &g).unwrap();
    let f_sym = wst_discrete(&rho_sym, &symmetric_gauge(b0), &g, 16).unwrap();
    let f_landau = wst_discrete(&rho_landau, &landau_gauge(b0), &g, 16).unwrap();
    let err = f_landau.relative_l2(&f_sym).unwrap();
    outcome(err <= 1e-8, format!("relative L2 {err:.3e} (n_tau = 16)"))
}

fn closed_form_coefficients() -> Outcome {
    let l = 100.0 * NM;
    let g = make_grid(PhysicalConstants::default(), 1, l, 50.0 * NM, 10, 50).unwrap();
    let (dp, hbar) = (g.axis(0).dp, g.constants().hbar);
    let mut worst: f64 = 0.0;
    for m in -50i64..=50 {
        let k = m as f64 * dp / hbar;
        let s1 = romberg_moment(1, k, l);
        let s2 = romberg_moment(2, k, l);
        if m == 0 {
            // the first moment vanishes; measure it against L/2
            worst = worst.max(s1.norm() / (0.5 * l));
            let q = fourier_s2(0, dp, hbar, l);
            worst = worst.max((s2.re - l * l / 12.0).abs() / (l * l / 12.0));
            worst = worst.max((q - l * l / 12.0).abs() / (l * l / 12.0));
            worst = worst.max(s2.im.abs() / (l * l / 12.0));
            continue;
        }
        let e1 = Complex64::new(0.0, hbar * c1(m, dp));
        let e2 = Complex64::new(hbar * hbar * c2(m, dp), 0.0);
        worst = worst.max((s1 - e1).norm() / e1.norm());
        worst = worst.max((s2 - e2).norm() / e2.norm());
    }
    outcome(worst <= 1e-10, format!("max relative deviation {worst:.3e} over |m| ≤ 50"))
}

fn boltzmann_reduction() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 50.0 * NM, 64, 20).unwrap();
    let dp = g.axis(0).dp;
    let p0 = [3.0 * dp, 2.0 * dp];
    let (sx, sp) = (5.0 * NM, 1.5 * dp);
    let cfg = SolverConfig {
        dt: 2.5 * FS,
        t_end: 250.0 * FS,
        boundary: Boundary::Periodic,
        ..SolverConfig::default()
    };
    let f0 = periodic_gaussian(&g, [0.0, 0.0], sx, p0, sp);
    let m = g.constants().mass_m;
    // each momentum plane translates rigidly with its own velocity
    let exact = WignerState::from_fn(&g, |mm, x| {
        let mut pos = 0.0;
        let v = [mm[0] as f64 * dp / m, mm[1] as f64 * g.axis(1).dp / m];
        for i in -2i32..=2 {
            for j in -2i32..=2 {
                let a = x[0] - v[0] * cfg.t_end - i as f64 * g.axis(0).omega_extent;
                let b = x[1] - v[1] * cfg.t_end - j as f64 * g.axis(1).omega_extent;
                pos += (-(a * a + b * b) / (2.0 * sx * sx)).exp();
            }
        }
        let mut arg_p = 0.0;
        for d in 0..2 {
            let q = mm[d] as f64 * g.axis(d).dp - p0[d];
            arg_p += q * q / (2.0 * sp * sp);
        }
        pos * (-arg_p).exp()
    });
    let field = LinearEMField::default();
    let coeffs = linear_coefficients(&field, &g, B1Convention::Derived, None).unwrap();
    let semi = LinearOperator::semidiscrete(&coeffs, &g, &cfg).unwrap();
    let (fs, _) = evolve(&semi, &f0, &cfg, |_, _| {}).unwrap();
    let es = fs.relative_l2(&exact).unwrap();
    drop(fs);
    let cont = LinearOperator::continuum(&field, &g, &cfg).unwrap();
    let (fc, _) = evolve(&cont, &f0, &cfg, |_, _| {}).unwrap();
    let ec = fc.relative_l2(&exact).unwrap();
    outcome(
        es <= 1e-3 && ec <= 1e-3,
        format!("relative L2 after 100 steps: semi-discrete {es:.3e}, continuum {ec:.3e}"),
    )
}

fn cyclotron_period() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 48.0 * NM, 4, 20).unwrap();
    let c = *g.constants();
    let b0 = 1.0;
    let period = 2.0 * PI * c.mass_m / (c.charge_e * b0);
    let steps = 1250;
    let cfg = SolverConfig {
        dt: period / 1000.0,
        t_end: 1.25 * period,
        boundary: Boundary::Periodic,
        ..SolverConfig::default()
    };
    let f0 = WignerState::from_fn(&g, |m, _| {
        let a = m[0] as f64 - 8.0;
        let b = m[1] as f64;
        (-(a * a + b * b) / (2.0 * 1.5 * 1.5)).exp()
    });
    let op = LinearOperator::continuum(&LinearEMField::magnetic_only(b0, 0.0), &g, &cfg).unwrap();
    let angle = |f: &WignerState| {
        let p = observables(f, &g).unwrap().global_mean_momentum.unwrap();
        p[1].atan2(p[0])
    };
    let mut samples = vec![(0.0, angle(&f0))];
    let res = evolve(&op, &f0, &cfg, |step, f| samples.push((step as f64 * cfg.dt, angle(f))));
    if let Err(e) = res {
        return outcome(false, format!("evolution failed: {e}"));
    }
    // unwrap the phase and fit a line through it
    let mut unwrapped = Vec::with_capacity(samples.len());
    let mut offset = 0.0;
    let mut prev = samples[0].1;
    for &(t, a) in &samples {
        let mut d = a - prev;
        while d > PI {
            d -= 2.0 * PI;
            offset -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
            offset += 2.0 * PI;
        }
        prev = a;
        unwrapped.push((t, a + offset));
    }
    let n = unwrapped.len() as f64;
    let (st, sa) = unwrapped.iter().fold((0.0, 0.0), |(x, y), (t, a)| (x + t, y + a));
    let (mt, ma) = (st / n, sa / n);
    let (mut num, mut den) = (0.0, 0.0);
    for (t, a) in &unwrapped {
        num += (t - mt) * (a - ma);
        den += (t - mt) * (t - mt);
    }
    let omega = num / den;
    let measured = 2.0 * PI / omega.abs();
    let rel = (measured - period).abs() / period;
    outcome(
        rel <= 0.01 && samples.len() == steps + 1,
        format!("period {measured:.6e} s vs 2πm/(eB0) = {period:.6e} s (relative {rel:.2e})"),
    )
}

fn mass_conservation() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 48.0 * NM, 16, 8).unwrap();
    let dp = g.axis(0).dp;
    let f0 = periodic_gaussian(&g, [2.0 * NM, -1.0 * NM], 8.0 * NM, [dp, -dp], 1.5 * dp);
    let cfg = SolverConfig {
        dt: 10.0 * FS,
        t_end: 1000.0 * FS,
        boundary: Boundary::Periodic,
        ..SolverConfig::default()
    };
    let fields = [
        LinearEMField::magnetic_only(1.0, 0.0),
        LinearEMField::magnetic_only(1.0, 1e7),
        LinearEMField { e_grad_x: 2e12, e_grad_y: -1e12, b0: 0.0, b1: 0.0 },
        LinearEMField { e_grad_x: 1e12, e_grad_y: 1e12, b0: -0.5, b1: 2e7 },
    ];
    let m0 = f0.mass(&g);
    let mut worst: f64 = 0.0;
    for field in fields {
        let coeffs = linear_coefficients(&field, &g, B1Convention::Derived, None).unwrap();
        let ops = [
            LinearOperator::semidiscrete(&coeffs, &g, &cfg).unwrap(),
            LinearOperator::continuum(&field, &g, &cfg).unwrap(),
        ];
        for op in &ops {
            match evolve(op, &f0, &cfg, |_, _| {}) {
                Ok((f, _)) => worst = worst.max(((f.mass(&g) - m0) / m0).abs()),
                Err(e) => return outcome(false, format!("evolution failed: {e}")),
            }
        }
    }
    outcome(worst <= 1e-6, format!("largest relative drift over 100 steps {worst:.3e} (4 fields × 2 solvers)"))
}

fn fredholm_equivalence() -> Outcome {
    let d = desk();
    let op = LinearOperator::continuum(&full_field(), &d.grid, &d.config).unwrap();
    let (stepped, _) = evolve(&op, &d.f0, &d.config, |_, _| {}).unwrap();
    let (resolvent, _) = fredholm_full();
    let err = resolvent.relative_l2(&stepped).unwrap();
    outcome(err <= 1e-2, format!("relative L2 {err:.3e} (B0 = 1 T, B1 = 1e7 T/m, 50 steps)"))
}

fn mc_consistency() -> Outcome {
    let d = desk();
    let field = LinearEMField::magnetic_only(1.0, 0.0);
    let (reference, _) = fredholm_b0();
    let g = &d.grid;
    // the ten largest cells of the deterministic solution, one per momentum plane
    let mut planes: Vec<(usize, usize, f64)> = (0..g.n_momentum())
        .map(|mf| {
            let (ix, v) = reference
                .plane(mf)
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (i, v)| if *v > acc.1 { (i, *v) } else { acc });
            (mf, ix, v)
        })
        .collect();
    planes.sort_by(|a, b| b.2.total_cmp(&a.2));
    let cfg = SolverConfig { n_particles: 100_000, rng_seed: 20_261_015, ..d.config.clone() };
    let mut worst_z: f64 = 0.0;
    for &(mf, ix, v) in planes.iter().take(10) {
        let target = McTarget { momentum: g.momentum_indices(mf), position: g.position(ix), time: d.config.t_end };
        let est = mc_estimate_point(&target, &d.f0, &field, g, &cfg).unwrap();
        worst_z = worst_z.max((est.mean - v).abs() / est.std_error);
    }
    let (mf, ix, _) = planes[0];
    let target = McTarget { momentum: g.momentum_indices(mf), position: g.position(ix), time: d.config.t_end };
    let ns = [10_000usize, 40_000, 160_000];
    let se: Vec<f64> = ns
        .iter()
        .map(|&n| {
            let c = SolverConfig { n_particles: n, ..cfg.clone() };
            mc_estimate_point(&target, &d.f0, &field, g, &c).unwrap().std_error
        })
        .collect();
    let lx: Vec<f64> = ns.iter().map(|n| (*n as f64).ln()).collect();
    let ly: Vec<f64> = se.iter().map(|s| s.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 3.0, ly.iter().sum::<f64>() / 3.0);
    let slope = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / lx.iter().map(|x| (x - mx) * (x - mx)).sum::<f64>();
    outcome(
        worst_z <= 3.0 && (-0.6..=-0.4).contains(&slope),
        format!("max |z| over 10 probes {worst_z:.2} (n = 1e5); standard-error slope {slope:.3}"),
    )
}

fn gamma_independence() -> Outcome {
    let (base, gamma) = fredholm_full();
    let (doubled, _) = fredholm(full_field(), Some(2.0 * gamma));
    let err = doubled.relative_l2(base).unwrap();
    outcome(err <= 1e-3, format!("relative L2 {err:.3e} (γ0 = {gamma:.3e} s⁻¹ vs 2γ0)"))
}

fn quadratic_kernel_forms() -> Outcome {
    let g = make_grid(PhysicalConstants::default(), 2, 100.0 * NM, 40.0 * NM, 4, 6).unwrap();
    let tau = GaussLegendre::new(4);
    let n_p = g.axis(0).n_p;
    let n_m = g.n_momentum();
    let mut worst: f64 = 0.0;
    for field in [LinearEMField::magnetic_only(1.0, 0.0), LinearEMField::magnetic_only(1.0, 1e7)] {
        let sampled = field.sample(&g);
        for ix in [0, 5, 10, 15] {
            let x = g.position(ix);
            let hf = compute_hf(&sampled, x, &g, &tau, n_p, SQuadrature::Lattice).unwrap();
            let direct = compute_if(&sampled, x, &g, &tau, &tau, n_p, SQuadrature::Lattice).unwrap();
            let slice = |t: usize| -> Vec<[Complex64; 3]> { (0..n_m).map(|m| hf[m * tau.len() + t]).collect() };
            for e in 0..tau.len() {
                for t in 0..tau.len() {
                    let conv = if_by_convolution(&slice(e), &slice(t), &g).unwrap();
                    let scale = conv.iter().map(|v| v.norm()).fold(0.0, f64::max);
                    for (m, c) in conv.iter().enumerate() {
                        let d = direct[(m * tau.len() + e) * tau.len() + t];
                        worst = worst.max((d - c).norm() / scale);
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max deviation {worst:.3e} relative to the kernel peak"))
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 11] = [
        ("momentum spacing", momentum_spacing),
        ("term magnitude table", magnitude_table),
        ("gauge invariance", gauge_invariance),
        ("closed-form kernel coefficients", closed_form_coefficients),
        ("Boltzmann reduction", boltzmann_reduction),
        ("cyclotron period", cyclotron_period),
        ("mass conservation", mass_conservation),
        ("Fredholm/differential equivalence", fredholm_equivalence),
        ("Monte Carlo consistency", mc_consistency),
        ("γ-independence", gamma_independence),
        ("I^F direct vs convolution", quadratic_kernel_forms),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("[{:>2}] {status} {name}: {} ({:.1} s)", i + 1, o.detail, start.elapsed().as_secs_f64());
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance check(s) failed");
        std::process::exit(1);
    }
}
