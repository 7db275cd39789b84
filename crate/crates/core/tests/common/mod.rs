//! Random fields and invariant checks shared by the property suites and
//! the acceptance run.

#![allow(dead_code)]

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shrira_core::decay::{mixed_norm, NormOrder};
use shrira_core::functionals::{self, gn_ratio, nehari_scale, parts, PhysicsParams};
use shrira_core::grid::{apply_multiplier, dx_half, forward, inverse, lp_norm, project_zero_x};
use shrira_core::{Field, Grid};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn random_grid(rng: &mut ChaCha8Rng) -> Arc<Grid> {
    let nx = 2 * rng.gen_range(4..=32);
    let ny = 2 * rng.gen_range(4..=32);
    Grid::new(nx, ny, rng.gen_range(2.0..40.0), rng.gen_range(2.0..40.0)).unwrap()
}

/// A few Gaussian bumps of either sign plus white noise.
pub fn random_field_on(rng: &mut ChaCha8Rng, grid: Arc<Grid>) -> Field {
    let bumps: Vec<(f64, f64, f64, f64, f64)> = (0..rng.gen_range(1..=4))
        .map(|_| {
            (
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-0.3..0.3) * grid.lx(),
                rng.gen_range(-0.3..0.3) * grid.ly(),
                rng.gen_range(0.05..0.3) * grid.lx(),
                rng.gen_range(0.05..0.3) * grid.ly(),
            )
        })
        .collect();
    let smooth = Field::from_fn(grid.clone(), |x, y| {
        bumps
            .iter()
            .map(|&(a, cx, cy, sx, sy)| a * (-((x - cx) / sx).powi(2) - ((y - cy) / sy).powi(2)).exp())
            .sum()
    });
    let noise: Vec<f64> = smooth.values().iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
    Field::new(grid, noise).unwrap()
}

pub fn random_field(seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_grid(&mut rng);
    random_field_on(&mut rng, g)
}

/// `symbol(D)` applied to a real field.
pub fn mult(f: &Field, symbol: impl Fn(f64, f64) -> Complex64) -> Field {
    inverse(&apply_multiplier(&forward(f), symbol).unwrap())
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn round_trip(f: &Field) -> Check {
    let back = inverse(&forward(f));
    let e = rel_l2(back.values(), f.values());
    ensure(e < 1e-13, || format!("round-trip error {e:e}"))
}

pub fn parseval(f: &Field) -> Check {
    let g = f.grid();
    let phys: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * g.cell_area();
    let raw: f64 = forward(f).coeffs().iter().map(|c| c.norm_sqr()).sum();
    let spec = raw * g.lx() * g.ly() / (g.len() as f64).powi(2);
    let e = (phys - spec).abs() / phys;
    ensure(e <= 1e-12, || format!("Parseval mismatch {e:e}"))
}

pub fn conjugate_symmetry(f: &Field) -> Check {
    let s = forward(f);
    let g = f.grid();
    let top = s.max_abs();
    let mut worst = 0.0f64;
    for k in 0..g.ny() {
        for j in 0..g.nx() {
            let a = s.coeffs()[g.index(j, k)];
            let b = s.coeffs()[g.index((g.nx() - j) % g.nx(), (g.ny() - k) % g.ny())];
            worst = worst.max((a - b.conj()).norm() / top);
        }
    }
    ensure(worst <= 1e-12, || format!("conjugate symmetry defect {worst:e}"))
}

pub fn multiplier_linearity(f: &Field, g: &Field, alpha: f64, beta: f64) -> Check {
    let sym = |xi: f64, eta: f64| Complex64::new(xi.abs().sqrt() - 0.3 * eta * eta, 0.7 * xi);
    let combo = f.axpby(alpha, g, beta).unwrap();
    let lhs = mult(&combo, sym);
    let rhs = mult(f, sym).axpby(alpha, &mult(g, sym), beta).unwrap();
    let scale = lp_norm(&lhs, 2.0).max(lp_norm(&rhs, 2.0));
    let e = lp_norm(&lhs.axpby(1.0, &rhs, -1.0).unwrap(), 2.0) / scale;
    ensure(e <= 1e-13, || format!("multiplier linearity defect {e:e}"))
}

pub fn dx_half_squared(f: &Field) -> Check {
    let twice = dx_half(&dx_half(f));
    let direct = mult(f, |xi, _| Complex64::new(xi.abs(), 0.0));
    let e = rel_l2(twice.values(), direct.values());
    ensure(e <= 1e-12, || format!("dx_half^2 vs |xi| defect {e:e}"))
}

pub fn projection(f: &Field) -> Check {
    let p = project_zero_x(f);
    let pp = project_zero_x(&p);
    let e = rel_l2(pp.values(), p.values());
    ensure(e <= 1e-13, || format!("projection not idempotent: {e:e}"))?;
    let g = f.grid();
    let bound = 1e-12 * f.max_abs() * g.nx() as f64;
    for k in 0..g.ny() {
        let row: f64 = (0..g.nx()).map(|j| p.at(j, k)).sum();
        ensure(row.abs() <= bound, || format!("row {k} sums to {row:e} > {bound:e}"))?;
    }
    Ok(())
}

/// Makes `int u f(u)` positive for `m = 2` by a sign flip.
pub fn positive_cubic(f: &Field) -> Field {
    let cubic: f64 = f.values().iter().map(|v| v * v * v).sum();
    if cubic < 0.0 {
        f.scale(-1.0)
    } else {
        f.clone()
    }
}

pub fn r1_is_minus_nehari(f: &Field, params: &PhysicsParams) -> Check {
    let (r1, _) = functionals::pohozaev_residuals(f, params).unwrap();
    let i = functionals::nehari_i(f, params).unwrap();
    let e = (r1 + i).abs();
    let bound = 1e-12 * (r1.abs() + i.abs() + 1.0);
    ensure(e <= bound, || format!("r1 + I = {e:e} > {bound:e}"))
}

pub fn action_decomposition(f: &Field, params: &PhysicsParams) -> Check {
    let p = parts(f, params).unwrap();
    let z = functionals::z_norm_sq(f, params).unwrap();
    let by_parts = params.c * p.mass + p.a + p.b;
    let e = (z - by_parts).abs() / z;
    ensure(e <= 1e-12, || format!("z decomposition defect {e:e}"))?;
    let s = functionals::action_s(f, params).unwrap();
    let e = (s - (0.5 * by_parts - p.f_int)).abs() / (s.abs() + p.f_int.abs());
    ensure(e <= 1e-12, || format!("S decomposition defect {e:e}"))
}

pub fn gn_amplitude_invariance(f: &Field, a: f64) -> Check {
    let q1 = gn_ratio(f, 1.0).unwrap();
    let q2 = gn_ratio(&f.scale(a), 1.0).unwrap();
    let e = (q1 - q2).abs() / q1.abs();
    ensure(e <= 1e-10, || format!("GN ratio changes by {e:e} under scaling by {a}"))
}

pub fn nehari_maximality(f: &Field, params: &PhysicsParams, ts: &[f64]) -> Check {
    let t_u = nehari_scale(f, params).unwrap();
    let s_max = functionals::action_s(&f.scale(t_u), params).unwrap();
    for &t in ts {
        let s = functionals::action_s(&f.scale(t), params).unwrap();
        ensure(s_max - s >= -1e-12, || format!("S(t u) exceeds S(t_u u) by {:e} at t = {t}", s - s_max))?;
    }
    let on = f.scale(t_u);
    let z = functionals::z_norm_sq(&on, params).unwrap();
    let m = params.m;
    let e = (s_max - (0.5 - 1.0 / (m + 1.0)) * z).abs() / s_max.abs();
    ensure(e <= 1e-12, || format!("S on the Nehari manifold off by {e:e}"))
}

pub fn mixed_norm_l2(f: &Field) -> Check {
    let l2 = lp_norm(f, 2.0);
    for order in [NormOrder::YOuter, NormOrder::XOuter] {
        let v = mixed_norm(f, 2.0, 2.0, order).unwrap();
        let e = (v - l2).abs() / l2;
        ensure(e <= 1e-12, || format!("mixed L2 norm ({order:?}) off by {e:e}"))?;
    }
    Ok(())
}

/// Runs every algebraic invariant on the field derived from `seed`.
pub fn all_invariants(seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = random_grid(&mut rng);
    let f = random_field_on(&mut rng, grid.clone());
    let g = random_field_on(&mut rng, grid);
    let params = PhysicsParams::default();
    round_trip(&f)?;
    parseval(&f)?;
    conjugate_symmetry(&f)?;
    multiplier_linearity(&f, &g, rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0))?;
    dx_half_squared(&f)?;
    projection(&f)?;
    r1_is_minus_nehari(&f, &params)?;
    action_decomposition(&f, &params)?;
    gn_amplitude_invariance(&f, rng.gen_range(0.01..100.0))?;
    let u = positive_cubic(&f);
    let ts: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..5.0)).collect();
    let t_u = nehari_scale(&u, &params).unwrap();
    let near: Vec<f64> = ts.iter().map(|t| t_u * (0.8 + 0.05 * t)).chain(ts.iter().map(|t| t_u * t)).collect();
    nehari_maximality(&u, &params, &near)?;
    mixed_norm_l2(&f)
}
