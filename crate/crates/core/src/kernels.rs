//! Convolution kernels of the profile equation at unit speed.
//!
//! `h_nu` has Fourier symbol `|xi|^{1+nu} / (|xi| + xi^2 + eta^2)` and
//! `Hk` (the x-Hilbert transform of `k = h_0`) has symbol
//! `-i xi / (|xi| + xi^2 + eta^2)`. Both are evaluated pointwise from
//! single-integral representations, and independently by spectral inversion.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};
use crate::grid::{apply_multiplier, inverse, Field, Grid, Spectrum};
use crate::quadrature::{integrate, QuadOptions};

const ABS_FLOOR: f64 = 1e-14;

/// Which scaling of the integral representation a point evaluation returns.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// The bare integral `R(x, y)`; along `x = 0`, `y^{2nu+3} R -> 2 Gamma(nu+3/2) Gamma(nu+2)`.
    #[default]
    IntegralForm,
    /// The inverse Fourier transform of the symbol:
    /// `sqrt(pi)/(4 pi^2) * R(x, y/2)`.
    Fourier,
}

impl Normalization {
    fn map(self, y: f64) -> (f64, f64) {
        match self {
            Normalization::IntegralForm => (1.0, y),
            Normalization::Fourier => (PI.sqrt() / (4.0 * PI * PI), 0.5 * y),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub nu: f64,
    pub quad_tol: f64,
    /// Upper end of the `t` integral; `None` extends it until the tail
    /// bound is negligible.
    pub t_cutoff: Option<f64>,
    pub normalization: Normalization,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            nu: 0.0,
            quad_tol: 1e-10,
            t_cutoff: None,
            normalization: Normalization::IntegralForm,
        }
    }
}

impl KernelSpec {
    pub fn with_nu(nu: f64) -> Self {
        KernelSpec { nu, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > -1.5) {
            return Err(Error::arg(format!("nu must exceed -3/2, got {}", self.nu)));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol <= 1e-4) {
            return Err(Error::arg(format!("quad_tol must lie in (0, 1e-4], got {}", self.quad_tol)));
        }
        if let Some(t) = self.t_cutoff {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::arg(format!("t_cutoff must be positive, got {t}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: f64,
    pub y: f64,
    pub value: f64,
    pub est_error: f64,
}

/// Integrand family `pref * t^a e^{-t} (t^2 x^2 + (t^2+y^2)^2)^{-b} trig(w * atan(t x / (t^2+y^2)))`.
struct Integrand {
    pref: f64,
    a: f64,
    b: f64,
    w: f64,
    sine: bool,
    x: f64,
    y2: f64,
}

impl Integrand {
    fn eval(&self, t: f64) -> f64 {
        let q = t * t + self.y2;
        let base = t * t * self.x * self.x + q * q;
        let ang = self.w * (t * self.x).atan2(q);
        let trig = if self.sine { ang.sin() } else { ang.cos() };
        self.pref * t.powf(self.a) * (-t).exp() * base.powf(-self.b) * trig
    }

    /// Bound on `int_T^inf |integrand|`, using `base >= (t^2+y^2)^2`.
    fn tail(&self, t: f64) -> f64 {
        let s = self.a + 1.0;
        self.pref.abs() * (t * t + self.y2).powf(-2.0 * self.b) * gamma(s) * gamma_ur(s, t)
    }

    /// Integral over `(0, inf)` with `t = s^2` to absorb the `t^{-1/2}`
    /// endpoint behaviour on the x-axis.
    fn integrate(&self, tol: f64, cutoff: Option<f64>) -> Result<(f64, f64)> {
        let scale = self.x.abs().max(self.y2.sqrt()).clamp(1e-300, 1.0);
        let mut t_hi = match cutoff {
            Some(t) => t,
            None => (60.0f64).max(4.0 * self.x.abs()).max(4.0 * self.y2.sqrt()),
        };
        let opts = QuadOptions {
            rel_tol: 0.5 * tol,
            abs_tol: 0.5 * ABS_FLOOR,
            max_intervals: 4000,
        };
        loop {
            let mut pts = vec![0.0];
            let mut t = 1e-6 * scale;
            while t < t_hi {
                pts.push(t.sqrt());
                t *= 4.0;
            }
            pts.push(t_hi.sqrt());
            let r = integrate(|s| 2.0 * s * self.eval(s * s), &pts, opts)?;
            let tail = self.tail(t_hi);
            let budget = 0.25 * (tol * r.value.abs() + ABS_FLOOR);
            if tail <= budget || cutoff.is_some() {
                return Ok((r.value, r.abs_error + tail));
            }
            t_hi *= 2.0;
        }
    }
}

fn check_point(x: f64, y: f64) -> Result<()> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(Error::arg(format!("non-finite point ({x}, {y})")));
    }
    if x == 0.0 && y == 0.0 {
        return Err(Error::Singularity { x, y });
    }
    Ok(())
}

/// `h_nu(x, y)` from its single-integral representation.
pub fn h_nu_point(spec: &KernelSpec, x: f64, y: f64) -> Result<KernelSample> {
    spec.validate()?;
    check_point(x, y)?;
    let nu = spec.nu;
    let (factor, ym) = spec.normalization.map(y);
    let f = Integrand {
        pref: 2.0 * gamma(nu + 1.5),
        a: nu + 1.0,
        b: (2.0 * nu + 3.0) / 4.0,
        w: nu + 1.5,
        sine: false,
        x: x.abs(),
        y2: ym * ym,
    };
    let (v, e) = f.integrate(spec.quad_tol, spec.t_cutoff)?;
    Ok(KernelSample { x, y, value: factor * v, est_error: factor * e })
}

/// `Hk(x, y)`, the x-Hilbert transform of `h_0`; odd in `x`, nonnegative
/// for `x >= 0`.
pub fn hk_point(spec: &KernelSpec, x: f64, y: f64) -> Result<KernelSample> {
    spec.validate()?;
    check_point(x, y)?;
    let (factor, ym) = spec.normalization.map(y);
    if x == 0.0 {
        return Ok(KernelSample { x, y, value: 0.0, est_error: 0.0 });
    }
    let f = Integrand {
        pref: PI.sqrt(),
        a: 1.0,
        b: 0.75,
        w: 1.5,
        sine: true,
        x,
        y2: ym * ym,
    };
    let (v, e) = f.integrate(spec.quad_tol, spec.t_cutoff)?;
    Ok(KernelSample { x, y, value: factor * v, est_error: factor * e })
}

/// Pointwise evaluation over many points in parallel.
pub fn h_nu_points(spec: &KernelSpec, points: &[(f64, f64)]) -> Vec<Result<KernelSample>> {
    points.par_iter().map(|&(x, y)| h_nu_point(spec, x, y)).collect()
}

/// Limit of `y^{2nu+3} R_nu(0, y)` as `y -> inf` for the integral form.
pub fn y_axis_limit(nu: f64) -> f64 {
    2.0 * gamma(nu + 1.5) * gamma(nu + 2.0)
}

/// Symbol `|xi|^{1+nu} / (|xi| + xi^2 + eta^2)`, zero on `xi = 0`.
pub fn kernel_symbol(nu: f64, xi: f64, eta: f64) -> f64 {
    if xi == 0.0 {
        return 0.0;
    }
    let a = xi.abs();
    a.powf(1.0 + nu) / (a + xi * xi + eta * eta)
}

/// Symbol `-i xi / (|xi| + xi^2 + eta^2)`, zero on `xi = 0`.
pub fn hk_symbol(xi: f64, eta: f64) -> Complex64 {
    if xi == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, -xi / (xi.abs() + xi * xi + eta * eta))
}

/// Periodized kernel obtained by inverting a sampled symbol on a grid.
#[derive(Clone, Debug)]
pub struct SpectralKernel {
    /// Values in the grid's physical layout (origin at the box centre).
    pub field: Field,
    /// Set when `xi = 0` modes were zeroed although the symbol has no
    /// well-defined limit there (`nu < 0`).
    pub singular_modes_zeroed: bool,
}

fn invert_symbol(grid: &Arc<Grid>, symbol: impl Fn(f64, f64) -> Complex64) -> Result<Field> {
    let ones = Spectrum::new(grid.clone(), vec![Complex64::new(1.0, 0.0); grid.len()])?;
    let h = inverse(&apply_multiplier(&ones, symbol)?);
    let scale = grid.len() as f64 / (grid.lx() * grid.ly());
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = vec![0.0; grid.len()];
    for k in 0..ny {
        let ks = (k + ny / 2) % ny;
        for j in 0..nx {
            out[grid.index(j, k)] = scale * h.values()[grid.index((j + nx / 2) % nx, ks)];
        }
    }
    Field::new(grid.clone(), out)
}

pub fn kernel_spectral_oracle(nu: f64, grid: &Arc<Grid>) -> Result<SpectralKernel> {
    if !(nu > -1.5) {
        return Err(Error::arg(format!("nu must exceed -3/2, got {nu}")));
    }
    let field = invert_symbol(grid, |xi, eta| Complex64::new(kernel_symbol(nu, xi, eta), 0.0))?;
    Ok(SpectralKernel { field, singular_modes_zeroed: nu < 0.0 })
}

pub fn hk_spectral_oracle(grid: &Arc<Grid>) -> Result<Field> {
    invert_symbol(grid, hk_symbol)
}

/// Trigonometric sum `1/(lx ly) sum symbol(xi, eta) e^{i(xi x + eta y)}`
/// over an `n x n` mode set of a square box `l`, at one arbitrary point.
/// This is the spectral inversion evaluated off the sample lattice.
pub fn spectral_point_value(
    symbol: &(impl Fn(f64, f64) -> Complex64 + Sync),
    n: usize,
    l: f64,
    x: f64,
    y: f64,
) -> f64 {
    let k: Vec<f64> = (0..n)
        .map(|j| 2.0 * PI * crate::grid::signed_index(j, n) as f64 / l)
        .collect();
    let ex: Vec<Complex64> = k.iter().map(|&xi| Complex64::from_polar(1.0, xi * x)).collect();
    let total: Complex64 = k
        .par_iter()
        .map(|&eta| {
            let row: Complex64 = k.iter().zip(&ex).map(|(&xi, e)| symbol(xi, eta) * e).sum();
            row * Complex64::from_polar(1.0, eta * y)
        })
        .sum();
    total.re / (l * l)
}

/// Which symbol a two-box oracle inverts.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OracleKernel {
    HNu(f64),
    Hk,
}

impl OracleKernel {
    fn symbol(self) -> impl Fn(f64, f64) -> Complex64 + Sync {
        move |xi, eta| match self {
            OracleKernel::HNu(nu) => Complex64::new(kernel_symbol(nu, xi, eta), 0.0),
            OracleKernel::Hk => hk_symbol(xi, eta),
        }
    }

    /// Algebraic decay rate of the slowest tail; sets the periodic-image error.
    fn image_exponent(self) -> f64 {
        match self {
            OracleKernel::HNu(nu) => nu + 1.5,
            OracleKernel::Hk => 1.5,
        }
    }
}

/// Spectral oracle with the periodic-image error removed by Richardson
/// extrapolation between boxes `l` and `2l` at the common spacing `l/n`.
/// Agrees with the true kernel only away from the axes, where the kernel
/// is smooth.
pub fn two_box_oracle(kernel: OracleKernel, n: usize, l: f64, points: &[(f64, f64)]) -> Vec<f64> {
    let sym = kernel.symbol();
    let r = 2f64.powf(kernel.image_exponent());
    points
        .iter()
        .map(|&(x, y)| {
            let small = spectral_point_value(&sym, n, l, x, y);
            let big = spectral_point_value(&sym, 2 * n, 2.0 * l, x, y);
            (r * big - small) / (r - 1.0)
        })
        .collect()
}

/// The three multipliers whose Lizorkin bounds drive the regularity argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LizorkinMultiplier {
    /// `|xi| / D`
    KSym,
    /// `xi^2 / D`
    XDerivSym,
    /// `|xi| eta / D`
    YDerivSym,
}

impl LizorkinMultiplier {
    pub const ALL: [LizorkinMultiplier; 3] = [
        LizorkinMultiplier::KSym,
        LizorkinMultiplier::XDerivSym,
        LizorkinMultiplier::YDerivSym,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LizorkinMultiplier::KSym => "k_sym",
            LizorkinMultiplier::XDerivSym => "x_deriv_sym",
            LizorkinMultiplier::YDerivSym => "y_deriv_sym",
        }
    }

    /// `[L, L_xi, L_eta, L_xi_eta]` at `xi, eta > 0`, with `D = xi + xi^2 + eta^2`.
    pub fn derivatives(self, xi: f64, eta: f64) -> [f64; 4] {
        let d = xi + xi * xi + eta * eta;
        let d2 = d * d;
        let d3 = d2 * d;
        let dxi = 1.0 + 2.0 * xi;
        match self {
            LizorkinMultiplier::KSym => [
                xi / d,
                (eta * eta - xi * xi) / d2,
                -2.0 * xi * eta / d2,
                -2.0 * eta / d2 + 4.0 * xi * eta * dxi / d3,
            ],
            LizorkinMultiplier::XDerivSym => [
                xi * xi / d,
                (xi * xi + 2.0 * xi * eta * eta) / d2,
                -2.0 * xi * xi * eta / d2,
                -4.0 * xi * eta / d2 + 4.0 * xi * xi * eta * dxi / d3,
            ],
            LizorkinMultiplier::YDerivSym => [
                xi * eta / d,
                eta * (eta * eta - xi * xi) / d2,
                xi * (xi + xi * xi - eta * eta) / d2,
                (3.0 * eta * eta - xi * xi) / d2 - 4.0 * eta * eta * (eta * eta - xi * xi) / d3,
            ],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LizorkinEntry {
    pub k1: u8,
    pub k2: u8,
    pub max: f64,
    pub arg_xi: f64,
    pub arg_eta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LizorkinReport {
    pub multiplier: LizorkinMultiplier,
    pub n_samples: usize,
    pub range: (f64, f64),
    /// Ordered `(0,0), (1,0), (0,1), (1,1)`.
    pub entries: Vec<LizorkinEntry>,
}

impl LizorkinReport {
    pub fn entry(&self, k1: u8, k2: u8) -> &LizorkinEntry {
        &self.entries[(k1 + 2 * k2) as usize]
    }
}

/// Sup of `|xi^{k1} eta^{k2} d_xi^{k1} d_eta^{k2} L|` over an
/// `n_samples x n_samples` log-spaced grid on `range^2` (both positive).
pub fn lizorkin_sample(
    multiplier: LizorkinMultiplier,
    range: (f64, f64),
    n_samples: usize,
) -> Result<LizorkinReport> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(Error::arg(format!("range must satisfy 0 < lo < hi, got ({lo}, {hi})")));
    }
    if n_samples < 2 {
        return Err(Error::arg("n_samples must be at least 2"));
    }
    let step = (hi / lo).ln() / (n_samples - 1) as f64;
    let axis: Vec<f64> = (0..n_samples).map(|i| lo * (step * i as f64).exp()).collect();
    let mut entries: Vec<LizorkinEntry> = (0..4)
        .map(|i| LizorkinEntry {
            k1: (i % 2) as u8,
            k2: (i / 2) as u8,
            max: 0.0,
            arg_xi: f64::NAN,
            arg_eta: f64::NAN,
        })
        .collect();
    for &eta in &axis {
        for &xi in &axis {
            let d = multiplier.derivatives(xi, eta);
            let w = [1.0, xi, eta, xi * eta];
            for i in 0..4 {
                let v = (w[i] * d[i]).abs();
                if v > entries[i].max {
                    entries[i].max = v;
                    entries[i].arg_xi = xi;
                    entries[i].arg_eta = eta;
                }
            }
        }
    }
    Ok(LizorkinReport { multiplier, n_samples, range, entries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayScanRow {
    pub r: f64,
    pub value: f64,
    pub weighted: f64,
    pub est_error: f64,
}

/// Decay weight exponent along an axis: `nu + 3/2` on the x-axis, `2 nu + 3`
/// on the y-axis.
pub fn decay_weight(nu: f64, axis: Axis) -> f64 {
    match axis {
        Axis::X => nu + 1.5,
        Axis::Y => 2.0 * nu + 3.0,
    }
}

/// Samples `|r|^alpha h_nu` along one axis.
pub fn kernel_decay_scan(spec: &KernelSpec, axis: Axis, points: &[f64]) -> Result<Vec<DecayScanRow>> {
    let alpha = decay_weight(spec.nu, axis);
    points
        .par_iter()
        .map(|&r| {
            let (x, y) = match axis {
                Axis::X => (r, 0.0),
                Axis::Y => (0.0, r),
            };
            let s = h_nu_point(spec, x, y)?;
            let w = r.abs().powf(alpha);
            Ok(DecayScanRow { r, value: s.value, weighted: w * s.value, est_error: w * s.est_error })
        })
        .collect()
}
