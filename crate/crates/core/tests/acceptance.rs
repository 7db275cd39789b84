//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use shrira_core::decay::{decay_report, two_box_drift, DecayOptions};
use shrira_core::evolution::{cfl_dt, evolve, EvolveConfig, Reference};
use shrira_core::functionals::PhysicsParams;
use shrira_core::kernels::{
    h_nu_point, lizorkin_sample, two_box_oracle, y_axis_limit, KernelSpec, LizorkinMultiplier,
    Normalization, OracleKernel,
};
use shrira_core::solver::{
    align_profiles, nehari_descent, petviashvili, rescale_speed, spectral_residual, zero_x_mode_defect,
    Method, SolveReport, SolverConfig,
};
use shrira_core::{Field, Grid, Result};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn ground_state(n: usize, l: f64) -> Result<(Field, SolveReport)> {
    petviashvili(&SolverConfig::default(), &PhysicsParams::default(), &Grid::square(n, l)?)
}

fn criterion_1(state: &(Field, SolveReport), wall: f64) -> Result<Outcome> {
    let r = &state.1;
    let m_last = *r.m_factor_history.last().unwrap_or(&f64::NAN);
    let pass = r.converged
        && r.iterations <= 500
        && r.final_residual <= 1e-10
        && (m_last - 1.0).abs() <= 1e-8
        && wall <= 60.0;
    outcome(
        pass,
        format!(
            "iterations {} residual {:.2e} |M-1| {:.2e} wall {:.1} s",
            r.iterations,
            r.final_residual,
            (m_last - 1.0).abs(),
            wall
        ),
    )
}

fn criterion_2(coarse: &SolveReport) -> Result<Outcome> {
    let (_, r) = ground_state(512, 16.0 * PI)?;
    let f = &r.functionals;
    let z = f.z_norm_sq;
    let (i, sg, r1, r2) = (f.i.abs() / z, (f.s - f.g).abs() / f.s.abs(), f.pohozaev_r1.abs() / z, f.pohozaev_r2.abs() / z);
    let pass = r.converged && i <= 1e-8 && sg <= 1e-8 && r1 <= 1e-6 && r2 <= 1e-6;
    outcome(
        pass,
        format!(
            "512^2 on [-8pi,8pi]^2: |I|/z {i:.1e} |S-G|/|S| {sg:.1e} |r1|/z {r1:.1e} |r2|/z {r2:.1e} \
             (256^2 on [-32pi,32pi]^2: |r2|/z {:.1e})",
            coarse.functionals.pohozaev_r2.abs() / coarse.functionals.z_norm_sq
        ),
    )
}

fn criterion_3(state: &(Field, SolveReport)) -> Result<Outcome> {
    let cfg = SolverConfig { method: Method::NehariDescent, ..Default::default() };
    let (u, r) = nehari_descent(&cfg, &PhysicsParams::default(), state.0.grid())?;
    let dp = state.1.mountain_pass_level;
    let dn = r.mountain_pass_level;
    let rel_d = (dp - dn).abs() / dp.abs();
    let (_, rel_u) = align_profiles(&state.0, &u)?;
    outcome(
        r.converged && rel_d <= 1e-6 && rel_u <= 1e-4,
        format!("descent iterations {} d_P {dp:.10} d_N {dn:.10} rel {rel_d:.1e} profile L2 rel {rel_u:.1e}", r.iterations),
    )
}

fn criterion_4(phi: &Field) -> Result<Outcome> {
    let mapped = rescale_speed(phi, 1.0, 4.0, 2.0)?;
    let res = spectral_residual(&mapped, &PhysicsParams::new(4.0, 2.0)?)?;
    let amp = mapped.max_abs() / phi.max_abs();
    let box_ratio = phi.grid().lx() / mapped.grid().lx();
    outcome(res <= 1e-10, format!("residual at c=4 {res:.2e} amplitude x{amp:.6} box /{box_ratio:.6}"))
}

fn criterion_5() -> Result<Outcome> {
    let opts = DecayOptions::default();
    let (small, _) = ground_state(512, 128.0 * PI)?;
    let (big, _) = ground_state(1024, 256.0 * PI)?;
    let a = decay_report(&small, 2.0, &opts)?;
    let b = decay_report(&big, 2.0, &opts)?;
    let (dy, dx) = two_box_drift(&a, &b);
    let (ey, ex) = (a.exponent_y.unwrap_or(f64::NAN), a.exponent_x.unwrap_or(f64::NAN));
    let pass = (2.5..=3.5).contains(&ey) && (1.2..=1.8).contains(&ex) && dy <= 0.1 && dx <= 0.1;
    outcome(
        pass,
        format!(
            "exponent_y {ey:.3} exponent_x {ex:.3} sup drift y {:.1}% x {:.1}% (lemma35 drift {:.1}%)",
            100.0 * dy,
            100.0 * dx,
            100.0 * (a.lemma35_seminorm - b.lemma35_seminorm).abs() / a.lemma35_seminorm.max(b.lemma35_seminorm)
        ),
    )
}

fn criterion_6(phi: &Field) -> Result<Outcome> {
    let defect = zero_x_mode_defect(phi);
    let both = phi.min() < 0.0 && phi.max() > 0.0;
    outcome(
        defect <= 1e-12 && both,
        format!("xi=0 defect {defect:.1e} min {:.4} max {:.4}", phi.min(), phi.max()),
    )
}

fn criterion_7() -> Result<Outcome> {
    let points = [
        (1.0, 0.5),
        (2.0, 1.0),
        (1.0, 2.0),
        (0.5, 0.5),
        (-2.0, -1.5),
        (-1.0, 2.5),
        (3.0, 1.0),
        (4.0, 3.0),
        (0.5, 4.0),
        (1.5, -3.0),
    ];
    let spec = KernelSpec { normalization: Normalization::Fourier, ..Default::default() };
    let oracle = two_box_oracle(OracleKernel::HNu(0.0), 2048, 128.0, &points);
    let mut worst = 0.0f64;
    for (&(x, y), o) in points.iter().zip(&oracle) {
        let q = h_nu_point(&spec, x, y)?.value;
        worst = worst.max((q - o).abs() / q.abs().max(o.abs()));
    }
    let y = 100.0f64;
    let scaled = y.powi(3) * h_nu_point(&KernelSpec::default(), 0.0, y)?.value;
    let gap = (scaled - y_axis_limit(0.0)).abs() / PI.sqrt();
    outcome(
        worst <= 1e-2 && gap <= 0.02,
        format!("worst oracle rel diff {worst:.1e} over 10 points; y^3 R(0,100) = {scaled:.5} vs sqrt(pi) ({:.2}%)", 100.0 * gap),
    )
}

fn criterion_8(phi: &Field) -> Result<Outcome> {
    let params = PhysicsParams::default();
    let reference = Reference { profile: phi.clone(), speed: 1.0 };
    let run = evolve(phi, &EvolveConfig::default(), &params, Some(&reference))?;
    let shape = run.shape_error_series.as_ref().and_then(|s| s.last().copied()).unwrap_or(f64::NAN);

    let coarse_dt = cfl_dt(phi);
    let at = |dt: f64| evolve(phi, &EvolveConfig { dt: Some(dt), ..Default::default() }, &params, None);
    let (a, b) = (at(coarse_dt)?, at(0.5 * coarse_dt)?);
    let order = (a.energy_drift / b.energy_drift).log2();

    let pass = shape <= 1e-4 && run.mass_drift <= 1e-8 && run.energy_drift <= 1e-8 && order >= 3.5;
    outcome(
        pass,
        format!(
            "dt {:.2e} ({} steps): shape {shape:.1e} mass drift {:.1e} energy drift {:.1e}; \
             dt {coarse_dt:.3} -> {:.3}: energy drift {:.1e} -> {:.1e} (x{:.1}, order {order:.2})",
            run.dt,
            run.steps,
            run.mass_drift,
            run.energy_drift,
            0.5 * coarse_dt,
            a.energy_drift,
            b.energy_drift,
            a.energy_drift / b.energy_drift
        ),
    )
}

fn criterion_9() -> Result<Outcome> {
    let failures: Vec<String> = (0..128u64)
        .filter_map(|seed| common::all_invariants(0x5eed_0000 + seed).err().map(|e| format!("seed {seed}: {e}")))
        .collect();
    outcome(
        failures.is_empty(),
        if failures.is_empty() {
            "128 randomized fields, all invariants hold".into()
        } else {
            format!("{} of 128 failed; first: {}", failures.len(), failures[0])
        },
    )
}

fn criterion_10() -> Result<Outcome> {
    let range = (1e-6, 1e6);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in LizorkinMultiplier::ALL {
        let coarse = lizorkin_sample(m, range, 121)?;
        let fine = lizorkin_sample(m, range, 241)?;
        let mut worst = 0.0f64;
        for (c, f) in coarse.entries.iter().zip(&fine.entries) {
            pass &= c.max.is_finite() && f.max.is_finite();
            worst = worst.max((f.max - c.max).abs() / f.max);
        }
        let k0 = fine.entry(0, 0).max;
        pass &= worst <= 0.05 && k0 <= 1.0;
        parts.push(format!("{} k0 {k0:.4} refinement {:.2}%", m.name(), 100.0 * worst));
    }
    outcome(pass, parts.join("; "))
}

fn report_line(n: usize, name: &str, result: Result<Outcome>) -> bool {
    match result {
        Ok(o) => {
            println!("criterion {n:2} {} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
            o.pass
        }
        Err(e) => {
            println!("criterion {n:2} FAIL {name}: error: {e}");
            false
        }
    }
}

fn main() {
    let mut all = true;
    let start = Instant::now();
    let state = ground_state(256, 64.0 * PI);
    let wall = start.elapsed().as_secs_f64();
    match &state {
        Ok(state) => {
            let phi = &state.0;
            all &= report_line(1, "ground state", criterion_1(state, wall));
            all &= report_line(2, "variational identities", criterion_2(&state.1));
            all &= report_line(3, "method agreement", criterion_3(state));
            all &= report_line(4, "speed scaling", criterion_4(phi));
            all &= report_line(5, "decay rates", criterion_5());
            all &= report_line(6, "zero-x modes and sign", criterion_6(phi));
            all &= report_line(7, "kernel cross-validation", criterion_7());
            all &= report_line(8, "traveling wave", criterion_8(phi));
        }
        Err(e) => {
            for (n, name) in [
                (1, "ground state"),
                (2, "variational identities"),
                (3, "method agreement"),
                (4, "speed scaling"),
                (5, "decay rates"),
                (6, "zero-x modes and sign"),
                (7, "kernel cross-validation"),
                (8, "traveling wave"),
            ] {
                println!("criterion {n:2} FAIL {name}: ground state failed: {e}");
            }
            all = false;
        }
    }
    all &= report_line(9, "invariant suites", criterion_9());
    all &= report_line(10, "Lizorkin sampler", criterion_10());
    if !all {
        std::process::exit(1);
    }
}
