use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde_json::json;

use shrira_core::decay::{decay_report, tail_profile, DecayOptions};
use shrira_core::evolution::{evolve_with, Reference};
use shrira_core::functionals::{self, PhysicsParams};
use shrira_core::io::{read_field, write_field, FieldHeader, RunConfig};
use shrira_core::kernels::{
    h_nu_point, hk_point, two_box_oracle, Axis, KernelSpec, LizorkinMultiplier, Normalization, OracleKernel,
};
use shrira_core::solver::{self, build_report, symmetry_defects, zero_x_mode_defect, SweepParam};
use shrira_core::{Error, Field};

const PRODUCER: &str = concat!("shrira ", env!("CARGO_PKG_VERSION"));

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> anyhow::Result<PathBuf> {
    let dir = flag
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| Error::config("output.dir", "no output directory: pass --out or set output.dir"))?;
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn store(path: &Path, field: &Field, params: &PhysicsParams) -> anyhow::Result<()> {
    write_field(path, field, &FieldHeader::for_field(field, params.c, params.m, PRODUCER))
        .with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn solve(config: &Path, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(out, &cfg)?;
    let grid = cfg.grid.build()?;
    let params = cfg.physics;
    let start = Instant::now();
    let (field, report, code) = match solver::solve(&cfg.solver, &params, &grid) {
        Ok((f, r)) => (f, r, 0),
        Err(Error::NonConvergence { history, last }) => {
            let r = build_report(
                cfg.solver.method,
                &last,
                &params,
                history,
                false,
                cfg.solver.gamma_for(&params),
                cfg.solver.dealias_for(&params),
                start,
            )?;
            eprintln!("warning: no convergence after {} iterations; writing the last iterate", r.iterations);
            (*last, r, 3)
        }
        Err(e) => return Err(e.into()),
    };
    store(&dir.join("phi.field"), &field, &params)?;
    write_json(&dir.join("solve_report.json"), &report)?;
    write_json(&dir.join("functionals.json"), &report.functionals)?;
    println!(
        "{} after {} iterations: residual {:.3e}, d = {:.12}",
        if report.converged { "converged" } else { "stopped" },
        report.iterations,
        report.final_residual,
        report.mountain_pass_level
    );
    Ok(code)
}

fn write_tail(path: &Path, field: &Field, axis: Axis) -> anyhow::Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["offset", "coordinate", "value", "abs_value"])?;
    for s in tail_profile(field, axis) {
        w.write_record([num(s.offset), num(s.coordinate), num(s.value), num(s.value.abs())])?;
    }
    w.flush()?;
    Ok(())
}

pub fn verify(field_path: &Path, config: Option<&Path>, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let (field, header) = read_field(field_path)?;
    let (params, rule, decay_opts) = match config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            let rule = cfg.solver.dealias_for(&cfg.physics);
            (cfg.physics, rule, cfg.decay)
        }
        None => {
            let p = PhysicsParams::new(header.c, header.m)?;
            (p, shrira_core::DealiasRule::for_exponent(p.m), DecayOptions::default())
        }
    };
    let dir = match out {
        Some(d) => d,
        None => field_path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(".")),
    };
    fs::create_dir_all(&dir)?;

    let residual = solver::spectral_residual_with(&field, &params, rule)?;
    let f = functionals::report(&field, &params)?;
    let t_u = match functionals::nehari_scale(&field, &params) {
        Ok(t) => Some(t),
        Err(Error::NoScaling(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let decay = decay_report(&field, params.m, &decay_opts)?;
    let report = json!({
        "field": field_path.display().to_string(),
        "producer": header.producer,
        "params": params,
        "grid": { "nx": header.nx, "ny": header.ny, "lx": header.lx, "ly": header.ly },
        "dealias": rule,
        "spectral_residual": residual,
        "functionals": f,
        "nehari": {
            "relative_I": f.i.abs() / f.z_norm_sq,
            "relative_S_minus_G": (f.s - f.g).abs() / f.s.abs(),
            "t_u": t_u,
        },
        "pohozaev": {
            "relative_r1": f.pohozaev_r1.abs() / f.z_norm_sq,
            "relative_r2": f.pohozaev_r2.abs() / f.z_norm_sq,
        },
        "symmetry_defects": symmetry_defects(&field),
        "zero_x_mode_defect": zero_x_mode_defect(&field),
    });
    write_json(&dir.join("verify_report.json"), &report)?;
    write_json(&dir.join("decay_report.json"), &decay)?;
    write_tail(&dir.join("tail_y.csv"), &field, Axis::Y)?;
    write_tail(&dir.join("tail_x.csv"), &field, Axis::X)?;
    println!("residual {residual:.3e}, |I|/z {:.2e}, |r2|/z {:.2e}", f.i.abs() / f.z_norm_sq, f.pohozaev_r2.abs() / f.z_norm_sq);
    Ok(0)
}

pub fn evolve(field_path: &Path, config: &Path, out: Option<PathBuf>, reference_speed: Option<f64>) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(out, &cfg)?;
    let (initial, _) = read_field(field_path)?;
    let params = cfg.physics;
    let reference = match reference_speed {
        Some(c) if !(c.is_finite()) => {
            return Err(Error::arg(format!("reference speed must be finite, got {c}")).into());
        }
        Some(c) => Some(Reference { profile: initial.clone(), speed: c }),
        None => None,
    };
    let snap_dir = dir.join("snapshots");
    if cfg.output.snapshots {
        fs::create_dir_all(&snap_dir)?;
    }
    let result = evolve_with(&initial, &cfg.evolve, &params, reference.as_ref(), |step, _, u| {
        if cfg.output.snapshots {
            let header = FieldHeader::for_field(u, params.c, params.m, PRODUCER);
            write_field(snap_dir.join(format!("step_{step:08}.field")), u, &header)?;
        }
        Ok(())
    });
    let report = match result {
        Ok(r) => r,
        Err(Error::BlowUp { step, time, last_good }) => {
            store(&dir.join("last_good.field"), &last_good, &params)?;
            return Err(Error::BlowUp { step, time, last_good }.into());
        }
        Err(e) => return Err(e.into()),
    };
    let mut w = csv_writer(&dir.join("conservation.csv"))?;
    w.write_record(["t", "mass", "energy", "shape_error"])?;
    for i in 0..report.times.len() {
        let shape = report.shape_error_series.as_ref().map(|s| s[i]);
        w.write_record([num(report.times[i]), num(report.mass_series[i]), num(report.energy_series[i]), opt(shape)])?;
    }
    w.flush()?;
    write_json(&dir.join("evolve_report.json"), &report)?;
    store(&dir.join("final.field"), &report.final_field, &params)?;
    println!(
        "{} steps of dt = {:.3e}: mass drift {:.2e}, energy drift {:.2e}",
        report.steps, report.dt, report.mass_drift, report.energy_drift
    );
    Ok(0)
}

pub struct KernelArgs {
    pub nu: f64,
    pub points: PathBuf,
    pub out: PathBuf,
    pub hk: bool,
    pub fourier: bool,
    pub quad_tol: f64,
    pub oracle: Option<(usize, f64)>,
}

fn read_points(path: &Path) -> anyhow::Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::config(path.display().to_string(), format!("missing column {name:?}")))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> anyhow::Result<f64> {
            let raw = rec.get(i).unwrap_or("").trim();
            raw.parse().map_err(|_| {
                Error::config(format!("{} row {}", path.display(), line + 2), format!("not a number: {raw:?}")).into()
            })
        };
        out.push((parse(ix)?, parse(iy)?));
    }
    Ok(out)
}

pub fn kernel(args: &KernelArgs) -> anyhow::Result<u8> {
    let points = read_points(&args.points)?;
    let normalization = if args.fourier { Normalization::Fourier } else { Normalization::IntegralForm };
    let spec = KernelSpec { nu: if args.hk { 0.0 } else { args.nu }, quad_tol: args.quad_tol, t_cutoff: None, normalization };
    spec.validate()?;
    let mut samples = Vec::with_capacity(points.len());
    for &(x, y) in &points {
        samples.push(if args.hk { hk_point(&spec, x, y)? } else { h_nu_point(&spec, x, y)? });
    }
    // the oracle inverts the symbol, i.e. the Fourier normalization; the
    // integral form is that kernel at (x, 2y) times 4 pi^2 / sqrt(pi)
    let oracle = args.oracle.map(|(n, l)| {
        let kind = if args.hk { OracleKernel::Hk } else { OracleKernel::HNu(args.nu) };
        if args.fourier {
            two_box_oracle(kind, n, l, &points)
        } else {
            let stretched: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x, 2.0 * y)).collect();
            let factor = 4.0 * PI * PI / PI.sqrt();
            two_box_oracle(kind, n, l, &stretched).into_iter().map(|v| factor * v).collect()
        }
    });
    let mut w = csv_writer(&args.out)?;
    w.write_record(["x", "y", "value", "est_error", "oracle", "rel_diff"])?;
    for (i, s) in samples.iter().enumerate() {
        let (o, rel) = match &oracle {
            Some(o) => {
                let scale = s.value.abs().max(o[i].abs());
                let rel = if scale > 0.0 { (s.value - o[i]).abs() / scale } else { 0.0 };
                (num(o[i]), num(rel))
            }
            None => (String::new(), String::new()),
        };
        w.write_record([num(s.x), num(s.y), num(s.value), num(s.est_error), o, rel])?;
    }
    w.flush()?;
    println!("{} kernel samples written to {}", samples.len(), args.out.display());
    Ok(0)
}

pub fn sweep(param: SweepParam, values: &[f64], config: &Path, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(out, &cfg)?;
    let grid = cfg.grid.build()?;
    let rows = solver::sweep(param, values, &cfg.solver, &cfg.physics, &grid, &cfg.decay)?;
    let mut w = csv_writer(&dir.join("sweep.csv"))?;
    w.write_record(["value", "converged", "iterations", "d", "mass", "exponent_y", "exponent_x", "lx", "ly"])?;
    for r in &rows {
        w.write_record([
            num(r.value),
            r.converged.to_string(),
            r.iterations.to_string(),
            num(r.d),
            num(r.mass),
            opt(r.exponent_y),
            opt(r.exponent_x),
            num(r.lx),
            num(r.ly),
        ])?;
    }
    w.flush()?;
    let failed = rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} sweep points did not converge", rows.len());
        return Ok(3);
    }
    println!("{} sweep points written to {}", rows.len(), dir.join("sweep.csv").display());
    Ok(0)
}

pub fn lizorkin(out: &Path, n_samples: usize, range: (f64, f64)) -> anyhow::Result<u8> {
    let mut w = csv_writer(out)?;
    w.write_record(["multiplier", "k1", "k2", "max", "arg_xi", "arg_eta", "n_samples", "lo", "hi"])?;
    for m in LizorkinMultiplier::ALL {
        let report = shrira_core::kernels::lizorkin_sample(m, range, n_samples)?;
        for e in &report.entries {
            w.write_record([
                m.name().to_string(),
                e.k1.to_string(),
                e.k2.to_string(),
                num(e.max),
                num(e.arg_xi),
                num(e.arg_eta),
                n_samples.to_string(),
                num(range.0),
                num(range.1),
            ])?;
        }
    }
    w.flush()?;
    Ok(0)
}
