//! Ground states of the profile equation `s(xi, eta) phi_hat = P f_hat(phi)`
//! with `s = c + (xi^2 + eta^2)/|xi|` on `xi != 0` and `P` the dealiasing
//! projection that also removes `xi = 0` modes.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decay::{decay_report, DecayOptions};
use crate::error::{Error, History, Result};
use crate::functionals::{self, FunctionalReport, PhysicsParams};
use crate::grid::{forward, inverse, lp_norm, DealiasRule, Field, Grid, Spectrum};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Petviashvili,
    NehariDescent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialGuess {
    /// `amplitude * exp(-x^2/sigma_x^2 - y^2/sigma_y^2)`
    Gaussian { amplitude: f64, sigma_x: f64, sigma_y: f64 },
    /// A stored field; its sample counts must match the grid.
    File { path: PathBuf },
}

impl Default for InitialGuess {
    fn default() -> Self {
        InitialGuess::Gaussian { amplitude: 1.0, sigma_x: 2.0, sigma_y: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    pub tol_residual: f64,
    pub tol_delta: f64,
    pub max_iter: usize,
    /// Petviashvili exponent; `m/(m-1)` when absent.
    pub gamma: Option<f64>,
    pub init: InitialGuess,
    /// Step of the preconditioned descent, in units of the Z-gradient.
    pub descent_step: f64,
    /// Dealiasing rule; 2/3 for `m <= 2`, 1/2 beyond, when absent.
    pub dealias: Option<DealiasRule>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Petviashvili,
            tol_residual: 1e-10,
            tol_delta: 1e-11,
            max_iter: 2000,
            gamma: None,
            init: InitialGuess::default(),
            descent_step: 0.5,
            dealias: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("tol_residual", self.tol_residual), ("tol_delta", self.tol_delta)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("solver.{key}"), format!("must be positive, got {v}")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::config("solver.max_iter", "must be at least 1"));
        }
        if let Some(g) = self.gamma {
            if !(g > 1.0 && g <= 3.0) {
                return Err(Error::config("solver.gamma", format!("must lie in (1, 3], got {g}")));
            }
        }
        if !(self.descent_step > 0.0 && self.descent_step.is_finite()) {
            return Err(Error::config(
                "solver.descent_step",
                format!("must be positive, got {}", self.descent_step),
            ));
        }
        if let InitialGuess::Gaussian { amplitude, sigma_x, sigma_y } = self.init {
            if !(amplitude.is_finite() && amplitude != 0.0 && sigma_x > 0.0 && sigma_y > 0.0) {
                return Err(Error::config(
                    "solver.init",
                    "gaussian needs a nonzero amplitude and positive widths",
                ));
            }
        }
        Ok(())
    }

    pub fn gamma_for(&self, params: &PhysicsParams) -> f64 {
        self.gamma.unwrap_or(params.m / (params.m - 1.0))
    }

    pub fn dealias_for(&self, params: &PhysicsParams) -> DealiasRule {
        self.dealias.unwrap_or_else(|| DealiasRule::for_exponent(params.m))
    }

    /// Initial field on `grid` (file guesses bring their own box lengths).
    pub fn initial_field(&self, grid: &Arc<Grid>) -> Result<Field> {
        match &self.init {
            InitialGuess::Gaussian { amplitude, sigma_x, sigma_y } => {
                let (a, sx, sy) = (*amplitude, *sigma_x, *sigma_y);
                Ok(Field::from_fn(grid.clone(), move |x, y| {
                    a * (-(x * x) / (sx * sx) - (y * y) / (sy * sy)).exp()
                }))
            }
            InitialGuess::File { path } => {
                let (f, _) = crate::io::read_field(path)?;
                if f.grid().nx() != grid.nx() || f.grid().ny() != grid.ny() {
                    return Err(Error::config(
                        "solver.init.path",
                        format!(
                            "stored field is {}x{}, grid is {}x{}",
                            f.grid().nx(),
                            f.grid().ny(),
                            grid.nx(),
                            grid.ny()
                        ),
                    ));
                }
                Ok(f)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryDefects {
    pub even_x: f64,
    pub even_y: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: Method,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    /// Petviashvili: the normalization factor `M_n`; descent: the Nehari
    /// rescaling `t_u` applied at each step.
    pub m_factor_history: Vec<f64>,
    pub functionals: FunctionalReport,
    /// `d = S(phi*)`
    pub mountain_pass_level: f64,
    pub symmetry_defects: SymmetryDefects,
    pub zero_x_mean_defect: f64,
    /// Location of `max |phi|`.
    pub peak: (f64, f64),
    pub max: f64,
    pub min: f64,
    pub gamma: f64,
    pub dealias: DealiasRule,
    pub params: PhysicsParams,
    pub grid: GridInfo,
    pub elapsed_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
}

impl From<&Grid> for GridInfo {
    fn from(g: &Grid) -> Self {
        GridInfo { nx: g.nx(), ny: g.ny(), lx: g.lx(), ly: g.ly() }
    }
}

/// Symbol tables shared by both iterations.
struct Operator {
    grid: Arc<Grid>,
    params: PhysicsParams,
    /// `s` on `xi != 0`, zero on `xi = 0`.
    s: Vec<f64>,
    /// Dealiased and `xi != 0`.
    keep: Vec<bool>,
    weight: f64,
}

impl Operator {
    fn new(grid: &Arc<Grid>, params: &PhysicsParams, rule: DealiasRule) -> Self {
        let mask = rule.mask(grid);
        let mut s = vec![0.0; grid.len()];
        let mut keep = vec![false; grid.len()];
        for k in 0..grid.ny() {
            let eta = grid.eta()[k];
            for j in 1..grid.nx() {
                let xi = grid.xi()[j];
                let i = grid.index(j, k);
                s[i] = params.c + (xi * xi + eta * eta) / xi.abs();
                keep[i] = mask[i];
            }
        }
        Operator { grid: grid.clone(), params: *params, s, keep, weight: grid.spectral_weight() }
    }

    /// `(u, f(u), P f_hat(u))` for coefficients `uh`.
    fn nonlinear(&self, uh: &[Complex64]) -> Result<(Field, Field, Vec<Complex64>)> {
        let u = inverse(&Spectrum::from_raw(self.grid.clone(), uh.to_vec()));
        let f = self.params.apply_f(&u)?;
        let mut fh = forward(&f).into_coeffs();
        fh.par_iter_mut().zip(&self.keep).for_each(|(c, &k)| {
            if !k {
                *c = Complex64::new(0.0, 0.0);
            }
        });
        Ok((u, f, fh))
    }

    fn residual(&self, uh: &[Complex64], fh: &[Complex64]) -> Result<f64> {
        let (num, den) = uh
            .par_iter()
            .zip(fh)
            .zip(&self.s)
            .filter(|(_, &s)| s != 0.0)
            .map(|((&u, &f), &s)| ((u * s - f).norm_sqr(), (u * s).norm_sqr()))
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        if !(den > 0.0) {
            return Err(Error::UndefinedResidual);
        }
        Ok((num / den).sqrt())
    }

    /// `sum s |uh|^2` and `sum Re(fh conj(uh))` over `xi != 0`.
    fn quadratic_forms(&self, uh: &[Complex64], fh: &[Complex64]) -> (f64, f64) {
        uh.par_iter()
            .zip(fh)
            .zip(&self.s)
            .filter(|(_, &s)| s != 0.0)
            .map(|((&u, &f), &s)| (s * u.norm_sqr(), (f * u.conj()).re))
            .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
    }
}

fn rel_change(new: &[Complex64], old: &[Complex64]) -> f64 {
    let (d, n) = new
        .par_iter()
        .zip(old)
        .map(|(a, b)| ((a - b).norm_sqr(), a.norm_sqr()))
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    (d / n).sqrt()
}

/// `||s phi_hat - P f_hat(phi)|| / ||s phi_hat||` over `xi != 0`, with the
/// default dealiasing rule for `m`. Any `xi = 0` content is ignored.
pub fn spectral_residual(field: &Field, params: &PhysicsParams) -> Result<f64> {
    spectral_residual_with(field, params, DealiasRule::for_exponent(params.m))
}

pub fn spectral_residual_with(field: &Field, params: &PhysicsParams, rule: DealiasRule) -> Result<f64> {
    params.validate()?;
    let op = Operator::new(field.grid(), params, rule);
    let uh = forward(field).into_coeffs();
    let (_, _, fh) = op.nonlinear(&uh)?;
    op.residual(&uh, &fh)
}

/// Solves with the configured method and initial guess.
pub fn solve(config: &SolverConfig, params: &PhysicsParams, grid: &Arc<Grid>) -> Result<(Field, SolveReport)> {
    config.validate()?;
    let u0 = config.initial_field(grid)?;
    solve_from(config, params, &u0)
}

/// Solves starting from `initial`, on its grid.
pub fn solve_from(config: &SolverConfig, params: &PhysicsParams, initial: &Field) -> Result<(Field, SolveReport)> {
    match config.method {
        Method::Petviashvili => petviashvili_from(config, params, initial),
        Method::NehariDescent => nehari_descent_from(config, params, initial),
    }
}

pub fn petviashvili(config: &SolverConfig, params: &PhysicsParams, grid: &Arc<Grid>) -> Result<(Field, SolveReport)> {
    config.validate()?;
    let u0 = config.initial_field(grid)?;
    petviashvili_from(config, params, &u0)
}

/// `phi_hat <- M^gamma P f_hat(phi) / s`, `M = <s phi_hat, phi_hat> / <P f_hat, phi_hat>`.
/// Stops once the residual at the current iterate is below `tol_residual`
/// and the last update changed it by less than `tol_delta` (relative).
pub fn petviashvili_from(config: &SolverConfig, params: &PhysicsParams, initial: &Field) -> Result<(Field, SolveReport)> {
    config.validate()?;
    params.validate()?;
    let start = Instant::now();
    let grid = initial.grid().clone();
    let rule = config.dealias_for(params);
    let gamma = config.gamma_for(params);
    let op = Operator::new(&grid, params, rule);
    let mut uh = forward(initial).into_coeffs();
    let mut hist = History::default();
    let mut delta = f64::INFINITY;
    for n in 0..=config.max_iter {
        let (u, _, fh) = op.nonlinear(&uh)?;
        let (num, den) = op.quadratic_forms(&uh, &fh);
        let m = num / den;
        let res = op.residual(&uh, &fh)?;
        hist.iterations = n;
        hist.residuals.push(res);
        hist.m_factors.push(m);
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Collapse { iteration: n, m_factor: m, history: hist });
        }
        if res <= config.tol_residual && delta <= config.tol_delta {
            let report = build_report(Method::Petviashvili, &u, params, hist, true, gamma, rule, start)?;
            return Ok((u, report));
        }
        if n == config.max_iter {
            return Err(Error::NonConvergence { history: hist, last: Box::new(u) });
        }
        let scale = m.powf(gamma);
        let new: Vec<Complex64> = fh
            .par_iter()
            .zip(&op.s)
            .zip(&op.keep)
            .map(|((&f, &s), &k)| if k { f * (scale / s) } else { Complex64::new(0.0, 0.0) })
            .collect();
        delta = rel_change(&new, &uh);
        uh = new;
    }
    unreachable!("loop returns on its last pass")
}

pub fn nehari_descent(config: &SolverConfig, params: &PhysicsParams, grid: &Arc<Grid>) -> Result<(Field, SolveReport)> {
    config.validate()?;
    let u0 = config.initial_field(grid)?;
    nehari_descent_from(config, params, &u0)
}

/// Descent on `S` constrained to the Nehari manifold. Each step rescales
/// onto the manifold by `t_u`, then moves along the Z-preconditioned
/// gradient `g = u_hat - P f_hat / s` (the Z-Riesz representative of
/// `S'(u)`): `u_hat <- u_hat - step * g`. Stops when the spectral residual is
/// below `tol_residual` and `S` changed by less than `tol_delta` (relative).
pub fn nehari_descent_from(config: &SolverConfig, params: &PhysicsParams, initial: &Field) -> Result<(Field, SolveReport)> {
    config.validate()?;
    params.validate()?;
    let start = Instant::now();
    let grid = initial.grid().clone();
    let rule = config.dealias_for(params);
    let op = Operator::new(&grid, params, rule);
    let mut uh = forward(initial).into_coeffs();
    for (c, &k) in uh.iter_mut().zip(&op.keep) {
        if !k {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    let mut hist = History::default();
    let mut s_prev = f64::NAN;
    let area = grid.cell_area();
    let m = params.m;
    for n in 0..=config.max_iter {
        let (u, f, fh) = op.nonlinear(&uh)?;
        let (z_sum, _) = op.quadratic_forms(&uh, &fh);
        let z = z_sum * op.weight;
        let uf: f64 = u.values().iter().zip(f.values()).map(|(a, b)| a * b).sum::<f64>() * area;
        if !(uf > 0.0) {
            return Err(Error::NoScaling(uf));
        }
        let t = (z / uf).powf(1.0 / (m - 1.0));
        uh.par_iter_mut().for_each(|c| *c *= t);
        let tm = t.powf(m);
        let fh: Vec<Complex64> = fh.into_iter().map(|c| c * tm).collect();
        let res = op.residual(&uh, &fh)?;
        let action = 0.5 * z * t * t - t.powf(m + 1.0) * uf / (m + 1.0);
        hist.iterations = n;
        hist.residuals.push(res);
        hist.m_factors.push(t);
        let stagnant = (action - s_prev).abs() <= config.tol_delta * action.abs();
        if res <= config.tol_residual && stagnant {
            let u = inverse(&Spectrum::from_raw(grid.clone(), uh));
            let report = build_report(
                Method::NehariDescent,
                &u,
                params,
                hist,
                true,
                config.gamma_for(params),
                rule,
                start,
            )?;
            return Ok((u, report));
        }
        if n == config.max_iter {
            let u = inverse(&Spectrum::from_raw(grid.clone(), uh));
            return Err(Error::NonConvergence { history: hist, last: Box::new(u) });
        }
        s_prev = action;
        let tau = config.descent_step;
        uh.par_iter_mut()
            .zip(&fh)
            .zip(&op.s)
            .zip(&op.keep)
            .for_each(|(((u, &f), &s), &k)| {
                if k {
                    *u -= tau * (*u - f / s);
                }
            });
    }
    unreachable!("loop returns on its last pass")
}

pub fn symmetry_defects(u: &Field) -> SymmetryDefects {
    let norm = lp_norm(u, 2.0);
    let d = |v: Field| lp_norm(&u.axpby(1.0, &v, -1.0).expect("same grid"), 2.0) / norm;
    SymmetryDefects { even_x: d(u.reflect_x()), even_y: d(u.reflect_y()) }
}

/// `max_eta |phi_hat(0, eta)| / max |phi_hat|`.
pub fn zero_x_mode_defect(u: &Field) -> f64 {
    let s = forward(u);
    let g = u.grid();
    let top = s.max_abs();
    let zero = (0..g.ny()).map(|k| s.coeffs()[g.index(0, k)].norm()).fold(0.0, f64::max);
    if top == 0.0 {
        0.0
    } else {
        zero / top
    }
}

/// Assembles the diagnostics for a final (or last) iterate.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    method: Method,
    u: &Field,
    params: &PhysicsParams,
    hist: History,
    converged: bool,
    gamma: f64,
    dealias: DealiasRule,
    start: Instant,
) -> Result<SolveReport> {
    let functionals = functionals::report(u, params)?;
    let (pj, pk) = u.argmax_abs();
    let g = u.grid();
    Ok(SolveReport {
        method,
        converged,
        iterations: hist.iterations,
        final_residual: hist.residuals.last().copied().unwrap_or(f64::NAN),
        residual_history: hist.residuals,
        m_factor_history: hist.m_factors,
        mountain_pass_level: functionals.s,
        functionals,
        symmetry_defects: symmetry_defects(u),
        zero_x_mean_defect: zero_x_mode_defect(u),
        peak: (g.x(pj), g.y(pk)),
        max: u.max(),
        min: u.min(),
        gamma,
        dealias,
        params: *params,
        grid: GridInfo::from(&**g),
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

/// Maps a profile at speed `c_from` to speed `c_to`:
/// `phi_to(x, y) = lambda^{1/(m-1)} phi_from(lambda x, lambda y)`, `lambda = c_to/c_from`.
/// Sample `(j, k)` keeps its index; the box shrinks by `lambda`.
pub fn rescale_speed(field: &Field, c_from: f64, c_to: f64, m: f64) -> Result<Field> {
    if !(c_from > 0.0 && c_to > 0.0 && c_from.is_finite() && c_to.is_finite()) {
        return Err(Error::arg(format!("speeds must be positive, got {c_from} -> {c_to}")));
    }
    if !(m > 1.0) {
        return Err(Error::arg(format!("exponent m must exceed 1, got {m}")));
    }
    let lambda = c_to / c_from;
    if lambda == 1.0 {
        return Ok(field.clone());
    }
    let grid = field.grid().scaled(lambda)?;
    field.scale(lambda.powf(1.0 / (m - 1.0))).on_grid(grid)
}

/// As `rescale_speed`, onto a caller-supplied grid that must equal the
/// mapped one.
pub fn rescale_speed_onto(field: &Field, c_from: f64, c_to: f64, m: f64, target: &Arc<Grid>) -> Result<Field> {
    let mapped = rescale_speed(field, c_from, c_to, m)?;
    if !mapped.grid().compatible(target, 1e-12) {
        return Err(Error::arg(format!(
            "target grid {target:?} does not match the rescaled box {:?}",
            mapped.grid()
        )));
    }
    mapped.on_grid(target.clone())
}

/// Exponent `sigma` in `d(c) = c^sigma d(1)`: `2/(m-1) - 1`.
pub fn level_scaling_exponent(m: f64) -> f64 {
    2.0 / (m - 1.0) - 1.0
}

/// Aligns `b` to `a` by the circular shift and sign maximizing the
/// cross-correlation; returns the aligned copy and `||a - b'|| / ||a||`.
pub fn align_profiles(a: &Field, b: &Field) -> Result<(Field, f64)> {
    crate::grid::check_same_grid(a.grid(), b.grid())?;
    let g = a.grid();
    let ah = forward(a);
    let bh = forward(b);
    let prod: Vec<Complex64> = ah.coeffs().iter().zip(bh.coeffs()).map(|(x, y)| x * y.conj()).collect();
    let corr = inverse(&Spectrum::from_raw(g.clone(), prod));
    let (dj, dk) = corr.argmax_abs();
    let sign = corr.at(dj, dk).signum();
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = vec![0.0; g.len()];
    for k in 0..ny {
        let sk = (k + ny - dk) % ny;
        for j in 0..nx {
            out[g.index(j, k)] = sign * b.at((j + nx - dj) % nx, sk);
        }
    }
    let aligned = Field::new(g.clone(), out)?;
    let rel = lp_norm(&a.axpby(1.0, &aligned, -1.0)?, 2.0) / lp_norm(a, 2.0);
    Ok((aligned, rel))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    C,
    M,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub d: f64,
    pub mass: f64,
    pub exponent_y: Option<f64>,
    pub exponent_x: Option<f64>,
    pub lx: f64,
    pub ly: f64,
}

/// Continuation in `c` or `m`, warm-starting each solve from the previous
/// solution. A `c` sweep solves speed `c` on the base box scaled by
/// `params.c / c`, so the warm start is the exact rescaled profile.
pub fn sweep(
    param: SweepParam,
    values: &[f64],
    config: &SolverConfig,
    params: &PhysicsParams,
    grid: &Arc<Grid>,
    decay: &DecayOptions,
) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if values.is_empty() {
        return Err(Error::arg("sweep needs at least one value"));
    }
    let mut rows = Vec::with_capacity(values.len());
    let mut prev: Option<(Field, PhysicsParams)> = None;
    for &v in values {
        let p = match param {
            SweepParam::C => PhysicsParams { c: v, ..*params },
            SweepParam::M => PhysicsParams { m: v, ..*params },
        };
        p.validate()?;
        let start = match (&prev, param) {
            (Some((f, pp)), SweepParam::C) => rescale_speed(f, pp.c, p.c, p.m)?,
            (Some((f, _)), SweepParam::M) => f.clone(),
            (None, SweepParam::C) => config.initial_field(&grid.scaled(v / params.c)?)?,
            (None, SweepParam::M) => config.initial_field(grid)?,
        };
        let (field, converged, iterations) = match solve_from(config, &p, &start) {
            Ok((f, r)) => (f, true, r.iterations),
            Err(Error::NonConvergence { history, last }) => (*last, false, history.iterations),
            Err(e) => return Err(e),
        };
        let parts = functionals::parts(&field, &p)?;
        let dr = decay_report(&field, p.m, decay)?;
        rows.push(SweepRow {
            value: v,
            converged,
            iterations,
            d: 0.5 * parts.z_norm_sq(p.c) - parts.f_int,
            mass: parts.mass,
            exponent_y: dr.exponent_y,
            exponent_x: dr.exponent_x,
            lx: field.grid().lx(),
            ly: field.grid().ly(),
        });
        prev = Some((field, p));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn small_problem() -> (SolverConfig, PhysicsParams, Arc<Grid>) {
        (SolverConfig::default(), PhysicsParams::default(), Grid::square(64, 16.0 * PI).unwrap())
    }

    #[test]
    fn config_validation() {
        let mut c = SolverConfig::default();
        assert!(c.validate().is_ok());
        c.gamma = Some(1.0);
        assert!(matches!(c.validate(), Err(Error::Config { .. })));
        c = SolverConfig { tol_residual: 0.0, ..Default::default() };
        assert!(c.validate().is_err());
        c = SolverConfig { init: InitialGuess::Gaussian { amplitude: 1.0, sigma_x: 0.0, sigma_y: 1.0 }, ..Default::default() };
        assert!(c.validate().is_err());
        assert_eq!(SolverConfig::default().gamma_for(&PhysicsParams::default()), 2.0);
    }

    #[test]
    fn config_json_round_trip() {
        let c = SolverConfig { gamma: Some(1.8), method: Method::NehariDescent, ..Default::default() };
        let text = serde_json::to_string(&c).unwrap();
        let back: SolverConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<SolverConfig>(r#"{"tolerance": 1}"#).is_err());
    }

    #[test]
    fn residual_undefined_without_x_content() {
        let g = Grid::square(16, 8.0).unwrap();
        let p = PhysicsParams::default();
        assert!(matches!(spectral_residual(&Field::zeros(g.clone()), &p), Err(Error::UndefinedResidual)));
        let f = Field::from_fn(g, |_, y| y.sin());
        assert!(matches!(spectral_residual(&f, &p), Err(Error::UndefinedResidual)));
    }

    #[test]
    fn residual_of_single_mode() {
        // u = cos 2x on a 2 pi box with 8 points: u^2 = (1 + cos 4x)/2 loses its
        // xi = 0 part to the projection and cos 4x sits on the Nyquist mode.
        let g = Grid::square(8, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x, _| (2.0 * x).cos());
        let r = spectral_residual(&u, &PhysicsParams::default()).unwrap();
        assert_relative_eq!(r, 1.0, max_relative = 1e-12);
        // with 16 points cos 2x survives: |s u_hat|^2 = 2 * (2*64)^2, the
        // residual adds the cos 2x modes of height 64 each.
        let g = Grid::square(16, 2.0 * PI).unwrap();
        let u = Field::from_fn(g, |x, _| x.cos());
        let r = spectral_residual(&u, &PhysicsParams::default()).unwrap();
        let num = 2.0 * (2.0 * 128.0f64).powi(2) + 2.0 * 64.0f64.powi(2);
        let den = 2.0 * (2.0 * 128.0f64).powi(2);
        assert_relative_eq!(r, (num / den).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn petviashvili_small_box() {
        let (c, p, g) = small_problem();
        let (u, r) = petviashvili(&c, &p, &g).unwrap();
        assert!(r.converged);
        assert!(r.final_residual <= 1e-10);
        assert!((r.m_factor_history.last().unwrap() - 1.0).abs() <= 1e-8);
        assert!(r.symmetry_defects.even_x <= 1e-10 && r.symmetry_defects.even_y <= 1e-10);
        assert!(u.min() < 0.0 && u.max() > 0.0);
        assert_relative_eq!(spectral_residual(&u, &p).unwrap(), r.final_residual, max_relative = 1e-6);

        // restarting from the solution is immediate
        let (_, again) = petviashvili_from(&c, &p, &u).unwrap();
        assert!(again.iterations <= 2);
    }

    #[test]
    fn descent_matches_petviashvili() {
        let (c, p, g) = small_problem();
        let (up, rp) = petviashvili(&c, &p, &g).unwrap();
        let cd = SolverConfig { method: Method::NehariDescent, ..c };
        let (un, rn) = solve(&cd, &p, &g).unwrap();
        assert!(rn.converged);
        assert_relative_eq!(rn.mountain_pass_level, rp.mountain_pass_level, max_relative = 1e-8);
        let (_, rel) = align_profiles(&up, &un).unwrap();
        assert!(rel <= 1e-6, "{rel}");
    }

    #[test]
    fn non_convergence_carries_history() {
        let (mut c, p, g) = small_problem();
        c.max_iter = 3;
        match petviashvili(&c, &p, &g) {
            Err(Error::NonConvergence { history, last }) => {
                assert_eq!(history.iterations, 3);
                assert_eq!(history.residuals.len(), 4);
                assert!(last.max_abs() > 0.0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn negative_guess_collapses_for_quadratic_f() {
        let (mut c, p, g) = small_problem();
        // a guess whose cube integrates negative makes M < 0
        c.init = InitialGuess::Gaussian { amplitude: -1.0, sigma_x: 2.0, sigma_y: 2.0 };
        assert!(matches!(petviashvili(&c, &p, &g), Err(Error::Collapse { .. })));
    }

    #[test]
    fn rescale_identity_and_shape() {
        let g = Grid::square(16, 8.0).unwrap();
        let u = Field::from_fn(g.clone(), |x, y| (-(x * x + y * y)).exp());
        let same = rescale_speed(&u, 2.0, 2.0, 2.0).unwrap();
        assert_eq!(same.values(), u.values());
        let v = rescale_speed(&u, 1.0, 4.0, 2.0).unwrap();
        assert_eq!(v.grid().lx(), 2.0);
        assert_eq!(v.at(3, 5), 4.0 * u.at(3, 5));
        let wrong = Grid::square(16, 3.0).unwrap();
        assert!(rescale_speed_onto(&u, 1.0, 4.0, 2.0, &wrong).is_err());
        let right = Grid::square(16, 2.0).unwrap();
        assert!(rescale_speed_onto(&u, 1.0, 4.0, 2.0, &right).is_ok());
        assert!(rescale_speed(&u, 0.0, 1.0, 2.0).is_err());
    }

    #[test]
    fn alignment_recovers_shift_and_sign() {
        let g = Grid::square(32, 20.0).unwrap();
        let a = Field::from_fn(g.clone(), |x, y| (-(x * x + 2.0 * y * y)).exp());
        let b = Field::from_fn(g.clone(), |x, y| {
            let (xs, ys) = (x - 5.0 * 20.0 / 32.0, y + 3.0 * 20.0 / 32.0);
            -(-(xs * xs + 2.0 * ys * ys)).exp()
        });
        let (_, rel) = align_profiles(&a, &b).unwrap();
        assert!(rel < 1e-12, "{rel}");
    }

    #[test]
    fn level_exponent() {
        assert_eq!(level_scaling_exponent(2.0), 1.0);
        assert_eq!(level_scaling_exponent(3.0), 0.0);
    }
}
