//! Time integration of `u_t - H Δu + (f(u))_x = 0`, spectrally
//! `u_hat_t = i sgn(xi) (xi^2 + eta^2) u_hat - i xi P f_hat(u)`,
//! by fourth-order Runge–Kutta in the integrating-factor variables.
//!
//! The flow conserves the mass `int u^2 / 2` and the energy
//! `E = (A + B)/2 - int F(u)`; with the Galerkin truncation `P` both are
//! conserved by the semi-discrete system as well, so their drift measures
//! the time-stepping error alone.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{quadratic_parts, PhysicsParams};
use crate::grid::{forward, inverse, sgn, DealiasRule, Field, Grid, Spectrum};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveConfig {
    /// Time step; `default_dt` of the initial state when absent.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub dealias_rule: Option<DealiasRule>,
    /// Steps between recorded diagnostics (and snapshots).
    pub record_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { dt: None, t_end: 5.0, dealias_rule: None, record_every: 10 }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("evolve.t_end", format!("must be positive, got {}", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("evolve.dt", format!("must be positive, got {dt}")));
            }
            if self.t_end < dt {
                return Err(Error::config("evolve.t_end", format!("must be at least dt = {dt}")));
            }
        }
        if self.record_every == 0 {
            return Err(Error::config("evolve.record_every", "must be at least 1"));
        }
        Ok(())
    }
}

/// `i sgn(xi) (xi^2 + eta^2)` in storage layout.
pub fn linear_symbol(grid: &Grid) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(grid.len());
    for &eta in grid.eta() {
        for &xi in grid.xi() {
            out.push(Complex64::new(0.0, sgn(xi) * (xi * xi + eta * eta)));
        }
    }
    out
}

/// Largest retained `|xi|` under a dealiasing rule.
fn max_retained_xi(grid: &Grid, rule: DealiasRule) -> f64 {
    let cut = (rule.fraction() * grid.nx() as f64 / 2.0).floor();
    2.0 * std::f64::consts::PI * cut / grid.lx()
}

/// Default step `0.1 / (xi_max m max(1, ||u0||_inf))`, with `xi_max` the
/// largest retained x-wavenumber: the nonlinear term's stiffness.
pub fn default_dt(u0: &Field, params: &PhysicsParams, rule: DealiasRule) -> f64 {
    0.1 / (max_retained_xi(u0.grid(), rule) * params.m * u0.max_abs().max(1.0))
}

/// The grid-spacing step `0.25 dx / max(1, ||u0||_inf)`.
pub fn cfl_dt(u0: &Field) -> f64 {
    0.25 * u0.grid().dx() / u0.max_abs().max(1.0)
}

/// Precomputed integrating factors for a fixed step.
pub struct Stepper {
    grid: Arc<Grid>,
    params: PhysicsParams,
    dt: f64,
    /// `-i xi` on retained modes, zero elsewhere.
    nl: Vec<Complex64>,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    nonlinear: bool,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, params: &PhysicsParams, rule: DealiasRule, dt: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::arg(format!("dt must be positive, got {dt}")));
        }
        let lin = linear_symbol(grid);
        let mask = rule.mask(grid);
        let mut nl = Vec::with_capacity(grid.len());
        for k in 0..grid.ny() {
            for j in 0..grid.nx() {
                let keep = mask[grid.index(j, k)];
                nl.push(if keep { Complex64::new(0.0, -grid.xi()[j]) } else { Complex64::new(0.0, 0.0) });
            }
        }
        Ok(Stepper {
            grid: grid.clone(),
            params: *params,
            dt,
            nl,
            e_half: lin.iter().map(|l| (l * (0.5 * dt)).exp()).collect(),
            e_full: lin.iter().map(|l| (l * dt).exp()).collect(),
            nonlinear: true,
        })
    }

    /// The dispersive flow alone.
    pub fn linear(grid: &Arc<Grid>, dt: f64) -> Result<Self> {
        let mut s = Stepper::new(grid, &PhysicsParams::default(), DealiasRule::TwoThirds, dt)?;
        s.nonlinear = false;
        Ok(s)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn rhs(&self, vh: &[Complex64]) -> Result<Vec<Complex64>> {
        if !self.nonlinear {
            return Ok(vec![Complex64::new(0.0, 0.0); vh.len()]);
        }
        let v = inverse(&Spectrum::from_raw(self.grid.clone(), vh.to_vec()));
        if v.values().iter().any(|&x| x.is_finite() && !self.params.defined_at(x)) {
            return Err(Error::NumericalDomain(format!(
                "u^{} is undefined for negative u; enable signed_power",
                self.params.m
            )));
        }
        // overflow propagates as non-finite coefficients, reported by the caller
        let f = Field::from_raw(self.grid.clone(), v.values().iter().map(|&x| self.params.f(x)).collect());
        let mut fh = forward(&f).into_coeffs();
        fh.par_iter_mut().zip(&self.nl).for_each(|(c, n)| *c *= n);
        Ok(fh)
    }

    pub fn step(&self, uh: &[Complex64]) -> Result<Vec<Complex64>> {
        let dt = self.dt;
        let (e1, e2) = (&self.e_half, &self.e_full);
        let k1 = self.rhs(uh)?;
        let a: Vec<Complex64> = (0..uh.len()).into_par_iter().map(|i| e1[i] * (uh[i] + 0.5 * dt * k1[i])).collect();
        let k2 = self.rhs(&a)?;
        let b: Vec<Complex64> = (0..uh.len()).into_par_iter().map(|i| e1[i] * uh[i] + 0.5 * dt * k2[i]).collect();
        let k3 = self.rhs(&b)?;
        let c: Vec<Complex64> = (0..uh.len()).into_par_iter().map(|i| e2[i] * uh[i] + dt * e1[i] * k3[i]).collect();
        let k4 = self.rhs(&c)?;
        Ok((0..uh.len())
            .into_par_iter()
            .map(|i| e2[i] * uh[i] + dt / 6.0 * (e2[i] * k1[i] + 2.0 * e1[i] * (k2[i] + k3[i]) + k4[i]))
            .collect())
    }
}

/// One integrating-factor RK4 step.
pub fn step_if_rk4(spectrum: &Spectrum, dt: f64, params: &PhysicsParams, rule: DealiasRule) -> Result<Spectrum> {
    let st = Stepper::new(spectrum.grid(), params, rule, dt)?;
    Ok(Spectrum::from_raw(spectrum.grid().clone(), st.step(spectrum.coeffs())?))
}

/// `(int u^2 / 2, E(u))`.
pub fn mass_energy(u: &Field, params: &PhysicsParams) -> (f64, f64) {
    let (mass, a, b) = quadratic_parts(u);
    let f_int: f64 = u.values().iter().map(|&v| params.big_f(v)).sum::<f64>() * u.grid().cell_area();
    (0.5 * mass, 0.5 * (a + b) - f_int)
}

/// A profile expected to travel at `speed` without changing shape.
#[derive(Clone, Debug)]
pub struct Reference {
    pub profile: Field,
    pub speed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EvolveReport {
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    pub mass_series: Vec<f64>,
    pub energy_series: Vec<f64>,
    pub shape_error_series: Option<Vec<f64>>,
    /// Largest `|q(t) - q(0)| / |q(0)|` over the recorded times.
    pub mass_drift: f64,
    pub energy_drift: f64,
    #[serde(skip)]
    pub final_field: Field,
}

pub fn evolve(initial: &Field, config: &EvolveConfig, params: &PhysicsParams, reference: Option<&Reference>) -> Result<EvolveReport> {
    evolve_with(initial, config, params, reference, |_, _, _| Ok(()))
}

/// As `evolve`, calling `observer(step, t, u)` at every recorded time.
pub fn evolve_with(
    initial: &Field,
    config: &EvolveConfig,
    params: &PhysicsParams,
    reference: Option<&Reference>,
    mut observer: impl FnMut(usize, f64, &Field) -> Result<()>,
) -> Result<EvolveReport> {
    config.validate()?;
    params.validate()?;
    let grid = initial.grid().clone();
    let rule = config.dealias_rule.unwrap_or_else(|| DealiasRule::for_exponent(params.m));
    let dt_req = config.dt.unwrap_or_else(|| default_dt(initial, params, rule));
    let steps = (config.t_end / dt_req).ceil().max(1.0) as usize;
    let dt = config.t_end / steps as f64;
    let stepper = Stepper::new(&grid, params, rule, dt)?;

    let reference = match reference {
        Some(r) => {
            crate::grid::check_same_grid(&grid, r.profile.grid())?;
            Some((forward(&r.profile).into_coeffs(), r.speed))
        }
        None => None,
    };
    let ref_norm = reference.as_ref().map(|(p, _)| p.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());

    let mut report = EvolveReport {
        dt,
        steps,
        times: Vec::new(),
        mass_series: Vec::new(),
        energy_series: Vec::new(),
        shape_error_series: reference.as_ref().map(|_| Vec::new()),
        mass_drift: 0.0,
        energy_drift: 0.0,
        final_field: initial.clone(),
    };
    let mut record = |step: usize, uh: &[Complex64], u: &Field, report: &mut EvolveReport| -> Result<()> {
        let t = step as f64 * dt;
        let (mass, energy) = mass_energy(u, params);
        report.times.push(t);
        report.mass_series.push(mass);
        report.energy_series.push(energy);
        if let (Some((ph, c)), Some(series)) = (&reference, report.shape_error_series.as_mut()) {
            let (xi, nx) = (grid.xi(), grid.nx());
            let err: f64 = uh
                .par_iter()
                .zip(ph)
                .enumerate()
                .map(|(i, (u, p))| (u - p * Complex64::from_polar(1.0, -xi[i % nx] * c * t)).norm_sqr())
                .sum();
            series.push(err.sqrt() / ref_norm.unwrap_or(1.0));
        }
        observer(step, t, u)
    };

    let mut uh = forward(initial).into_coeffs();
    record(0, &uh, initial, &mut report)?;
    let mut last_good = initial.clone();
    for step in 1..=steps {
        let next = stepper.step(&uh)?;
        if next.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::BlowUp { step, time: step as f64 * dt, last_good: Box::new(last_good) });
        }
        uh = next;
        if step % config.record_every == 0 || step == steps {
            let u = inverse(&Spectrum::from_raw(grid.clone(), uh.clone()));
            record(step, &uh, &u, &mut report)?;
            last_good = u;
        }
    }
    let rel = |s: &[f64]| {
        let q0 = s[0];
        s.iter().map(|q| (q - q0).abs() / q0.abs()).fold(0.0, f64::max)
    };
    report.mass_drift = rel(&report.mass_series);
    report.energy_drift = rel(&report.energy_series);
    report.final_field = last_good;
    Ok(report)
}
