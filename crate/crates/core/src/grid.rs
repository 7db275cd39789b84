//! Periodic anisotropic grid, discrete Fourier transforms and the nonlocal
//! Fourier multipliers of the model.
//!
//! Physical samples are stored row-major with `x` varying fastest, in
//! physical order: sample `(j, k)` sits at `x = -lx/2 + j*dx`,
//! `y = -ly/2 + k*dy`. Spectral coefficients use the standard DFT layout on
//! each axis (`0, 1, ..., n/2-1, -n/2, ..., -1`).
//!
//! Conventions:
//!
//! * `forward` is the unnormalized DFT, `inverse` carries `1/(nx*ny)`.
//! * Quadrature weight is `dx*dy = (lx/nx)*(ly/ny)`, so
//!   `sum |f|^2 dx dy = lx*ly/(nx*ny)^2 * sum |f_hat|^2` (Parseval).
//! * Modes with `xi = 0` are set to zero by every negative-order
//!   x-multiplier; `project_zero_x` enforces the same convention.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows handed to one rayon task during the batched 1D transforms.
const ROWS_PER_TASK: usize = 16;

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// Periodic box `[-lx/2, lx/2) x [-ly/2, ly/2)` with `nx x ny` samples.
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    xi: Vec<f64>,
    eta: Vec<f64>,
    plans: Plans,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

/// Signed DFT index of storage slot `j` for an axis of length `n`.
#[inline]
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

fn wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|j| 2.0 * PI * signed_index(j, n) as f64 / l)
        .collect()
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Arc<Self>> {
        for (name, n) in [("nx", nx), ("ny", ny)] {
            if n < 8 || n % 2 != 0 {
                return Err(Error::arg(format!("{name} must be even and >= 8, got {n}")));
            }
        }
        for (name, l) in [("lx", lx), ("ly", ly)] {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::arg(format!("{name} must be positive and finite, got {l}")));
            }
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        Ok(Arc::new(Grid {
            nx,
            ny,
            lx,
            ly,
            xi: wavenumbers(nx, lx),
            eta: wavenumbers(ny, ly),
            plans,
        }))
    }

    /// Square grid on `[-l/2, l/2)^2`.
    pub fn square(n: usize, l: f64) -> Result<Arc<Self>> {
        Self::new(n, n, l, l)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn dx(&self) -> f64 {
        self.lx / self.nx as f64
    }
    pub fn dy(&self) -> f64 {
        self.ly / self.ny as f64
    }
    /// Rectangle-rule weight `dx*dy`.
    pub fn cell_area(&self) -> f64 {
        self.dx() * self.dy()
    }
    /// Factor turning `sum |c|^2` over coefficients into `int |f|^2`.
    pub fn spectral_weight(&self) -> f64 {
        let n = self.len() as f64;
        self.lx * self.ly / (n * n)
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.lx + j as f64 * self.dx()
    }
    pub fn y(&self, k: usize) -> f64 {
        -0.5 * self.ly + k as f64 * self.dy()
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        k * self.nx + j
    }

    /// Same sample counts and box lengths equal to relative `tol`.
    pub fn compatible(&self, other: &Grid, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * a.abs().max(b.abs());
        self.nx == other.nx && self.ny == other.ny && close(self.lx, other.lx) && close(self.ly, other.ly)
    }

    /// A grid with the same sample counts and both lengths divided by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Arc<Grid>> {
        Grid::new(self.nx, self.ny, self.lx / factor, self.ly / factor)
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let (px, py) = if inverse {
            (&self.plans.inv_x, &self.plans.inv_y)
        } else {
            (&self.plans.fwd_x, &self.plans.fwd_y)
        };
        data.par_chunks_mut(nx * ROWS_PER_TASK)
            .for_each(|rows| px.process(rows));

        let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
        transpose(data, &mut cols, nx, ny);
        cols.par_chunks_mut(ny * ROWS_PER_TASK)
            .for_each(|c| py.process(c));
        transpose(&cols, data, ny, nx);

        if inverse {
            let scale = 1.0 / (nx * ny) as f64;
            data.par_iter_mut().for_each(|c| *c *= scale);
        }
    }
}

/// `dst[j*rows + k] = src[k*cols + j]` for a `rows x cols` row-major `src`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    dst.par_chunks_mut(rows).enumerate().for_each(|(j, out)| {
        for (k, o) in out.iter_mut().enumerate() {
            *o = src[k * cols + j];
        }
    });
}

/// Real samples on a grid.
#[derive(Clone, Debug)]
pub struct Field {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "field has {} values, grid needs {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain(format!("non-finite sample at index {i}")));
        }
        Ok(Field { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        Field {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for k in 0..grid.ny {
            let y = grid.y(k);
            for j in 0..grid.nx {
                values.push(f(grid.x(j), y));
            }
        }
        Field { grid, values }
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Storage indices `(j, k)` of the largest `|value|`.
    pub fn argmax_abs(&self) -> (usize, usize) {
        let (i, _) = self
            .values
            .iter()
            .enumerate()
            .fold((0, -1.0), |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) });
        (i % self.grid.nx, i / self.grid.nx)
    }

    pub fn scale(&self, a: f64) -> Field {
        Field::from_raw(self.grid.clone(), self.values.iter().map(|v| a * v).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64 + Sync) -> Field {
        Field::from_raw(self.grid.clone(), self.values.par_iter().map(|&v| f(v)).collect())
    }

    /// `a*self + b*other`.
    pub fn axpby(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(Field::from_raw(
            self.grid.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(u, v)| a * u + b * v)
                .collect(),
        ))
    }

    /// The same samples attached to another grid of identical shape.
    pub fn on_grid(&self, grid: Arc<Grid>) -> Result<Field> {
        if grid.nx != self.grid.nx || grid.ny != self.grid.ny {
            return Err(Error::arg("sample counts differ"));
        }
        Ok(Field::from_raw(grid, self.values.clone()))
    }

    /// Reflection `x -> -x` about the box centre.
    pub fn reflect_x(&self) -> Field {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for k in 0..g.ny {
            for j in 0..g.nx {
                out[g.index((g.nx - j) % g.nx, k)] = self.values[g.index(j, k)];
            }
        }
        Field::from_raw(g.clone(), out)
    }

    /// Reflection `y -> -y` about the box centre.
    pub fn reflect_y(&self) -> Field {
        let g = &self.grid;
        let mut out = vec![0.0; g.len()];
        for k in 0..g.ny {
            let kk = (g.ny - k) % g.ny;
            out[kk * g.nx..(kk + 1) * g.nx].copy_from_slice(&self.values[k * g.nx..(k + 1) * g.nx]);
        }
        Field::from_raw(g.clone(), out)
    }
}

pub(crate) fn check_same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::arg(format!("grid mismatch: {a:?} vs {b:?}")))
    }
}

/// Discrete Fourier coefficients of a field.
#[derive(Clone, Debug)]
pub struct Spectrum {
    grid: Arc<Grid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::arg(format!(
                "spectrum has {} coefficients, grid needs {}",
                coeffs.len(),
                grid.len()
            )));
        }
        Ok(Spectrum { grid, coeffs })
    }

    pub(crate) fn from_raw(grid: Arc<Grid>, coeffs: Vec<Complex64>) -> Self {
        Spectrum { grid, coeffs }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }
    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at signed mode `(jt, kt)`.
    pub fn mode(&self, jt: i64, kt: i64) -> Complex64 {
        let g = &self.grid;
        let j = jt.rem_euclid(g.nx as i64) as usize;
        let k = kt.rem_euclid(g.ny as i64) as usize;
        self.coeffs[g.index(j, k)]
    }

    /// `int |f|^2` of the corresponding field.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.spectral_weight() * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// `int w(xi, eta) |f_hat|^2` with the Parseval weight, skipping `xi = 0`
    /// modes when `skip_zero_x` is set.
    pub fn weighted_energy(&self, w: impl Fn(f64, f64) -> f64, skip_zero_x: bool) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for k in 0..g.ny {
            let eta = g.eta[k];
            for j in 0..g.nx {
                let xi = g.xi[j];
                if skip_zero_x && j == 0 {
                    continue;
                }
                acc += w(xi, eta) * self.coeffs[g.index(j, k)].norm_sqr();
            }
        }
        acc * g.spectral_weight()
    }
}

pub fn forward(field: &Field) -> Spectrum {
    let mut data: Vec<Complex64> = field.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    field.grid.fft2(&mut data, false);
    Spectrum::from_raw(field.grid.clone(), data)
}

/// Inverse transform; the (roundoff-level) imaginary part is dropped.
pub fn inverse(spectrum: &Spectrum) -> Field {
    let mut data = spectrum.coeffs.clone();
    spectrum.grid.fft2(&mut data, true);
    Field::from_raw(spectrum.grid.clone(), data.into_iter().map(|c| c.re).collect())
}

/// Pointwise product with `symbol(xi, eta)`.
///
/// A non-finite symbol value is an error only where the coefficient is
/// nonzero; such modes are otherwise left at zero.
pub fn apply_multiplier(
    spectrum: &Spectrum,
    symbol: impl Fn(f64, f64) -> Complex64,
) -> Result<Spectrum> {
    let g = &spectrum.grid;
    let mut out = spectrum.coeffs.clone();
    for k in 0..g.ny {
        let eta = g.eta[k];
        for j in 0..g.nx {
            let i = g.index(j, k);
            let c = out[i];
            let s = symbol(g.xi[j], eta);
            if s.re.is_finite() && s.im.is_finite() {
                out[i] = c * s;
            } else if c == Complex64::new(0.0, 0.0) {
                out[i] = c;
            } else {
                return Err(Error::NumericalDomain(format!(
                    "symbol is not finite at (xi, eta) = ({}, {eta})",
                    g.xi[j]
                )));
            }
        }
    }
    Ok(Spectrum::from_raw(g.clone(), out))
}

/// Multiplier known to be finite on every mode.
fn apply_total(field: &Field, symbol: impl Fn(f64, f64) -> Complex64) -> Field {
    let spec = forward(field);
    let out = apply_multiplier(&spec, symbol).expect("multiplier is total");
    inverse(&out)
}

/// `D_x^{1/2}`, symbol `|xi|^{1/2}`.
pub fn dx_half(field: &Field) -> Field {
    apply_total(field, |xi, _| Complex64::new(xi.abs().sqrt(), 0.0))
}

/// `D_x^{-1/2} d_y`, symbol `|xi|^{-1/2} i eta`, zero on `xi = 0`.
pub fn dx_neg_half_dy(field: &Field) -> Field {
    apply_total(field, |xi, eta| {
        if xi == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, eta / xi.abs().sqrt())
        }
    })
}

/// Hilbert transform in `x`, symbol `-i sgn(xi)`.
pub fn hilbert_x(field: &Field) -> Field {
    apply_total(field, |xi, _| Complex64::new(0.0, -sgn(xi)))
}

/// Removes every mode with `xi = 0`.
pub fn project_zero_x(field: &Field) -> Field {
    apply_total(field, |xi, _| {
        Complex64::new(if xi == 0.0 { 0.0 } else { 1.0 }, 0.0)
    })
}

pub fn d_x(field: &Field) -> Field {
    apply_total(field, |xi, _| Complex64::new(0.0, xi))
}

pub fn d_y(field: &Field) -> Field {
    apply_total(field, |_, eta| Complex64::new(0.0, eta))
}

/// `sgn` with `sgn(0) = 0`.
#[inline]
pub fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Spectral truncation before nonlinear products.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DealiasRule {
    /// Keeps `|j| <= (2/3) n/2`; quadratic products.
    TwoThirds,
    /// Keeps `|j| <= n/4`; cubic products.
    Half,
}

impl DealiasRule {
    pub fn fraction(self) -> f64 {
        match self {
            DealiasRule::TwoThirds => 2.0 / 3.0,
            DealiasRule::Half => 0.5,
        }
    }

    /// 2/3 rule up to quadratic nonlinearities, 1/2 beyond.
    pub fn for_exponent(m: f64) -> Self {
        if m <= 2.0 {
            DealiasRule::TwoThirds
        } else {
            DealiasRule::Half
        }
    }

    /// Per-mode keep mask in the grid's storage layout.
    pub fn mask(self, grid: &Grid) -> Vec<bool> {
        let fx = self.fraction() * grid.nx as f64 / 2.0;
        let fy = self.fraction() * grid.ny as f64 / 2.0;
        let mut out = Vec::with_capacity(grid.len());
        for k in 0..grid.ny {
            let ky = (signed_index(k, grid.ny).abs() as f64) <= fy;
            for j in 0..grid.nx {
                out.push(ky && (signed_index(j, grid.nx).abs() as f64) <= fx);
            }
        }
        out
    }
}

pub fn dealias(spectrum: &Spectrum, rule: DealiasRule) -> Spectrum {
    let mask = rule.mask(&spectrum.grid);
    let coeffs = spectrum
        .coeffs
        .iter()
        .zip(&mask)
        .map(|(&c, &keep)| if keep { c } else { Complex64::new(0.0, 0.0) })
        .collect();
    Spectrum::from_raw(spectrum.grid.clone(), coeffs)
}

/// Rectangle-rule `L^p` norm; `p = inf` gives the max.
pub fn lp_norm(field: &Field, p: f64) -> f64 {
    if p.is_infinite() {
        return field.max_abs();
    }
    let s: f64 = field.values.iter().map(|v| v.abs().powf(p)).sum();
    (s * field.grid.cell_area()).powf(1.0 / p)
}

pub fn l2_inner(a: &Field, b: &Field) -> Result<f64> {
    check_same_grid(&a.grid, &b.grid)?;
    let s: f64 = a.values.iter().zip(&b.values).map(|(u, v)| u * v).sum();
    Ok(s * a.grid.cell_area())
}

/// Rectangle-rule integral.
pub fn integral(field: &Field) -> f64 {
    field.values.iter().sum::<f64>() * field.grid.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn box2pi(n: usize) -> Arc<Grid> {
        Grid::square(n, 2.0 * PI).unwrap()
    }

    fn max_diff(a: &Field, b: &Field) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (u, v)| m.max((u - v).abs()))
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(7, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(6, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(8, 8, 0.0, 1.0).is_err());
        let g = Grid::square(8, 1.0).unwrap();
        assert!(Field::new(g, vec![0.0; 63]).is_err());
    }

    #[test]
    fn wavenumber_tables() {
        let g = Grid::new(8, 16, 2.0 * PI, 4.0 * PI).unwrap();
        assert_eq!(g.xi()[0], 0.0);
        assert_eq!(g.xi()[1], 1.0);
        assert_eq!(g.xi()[4], -4.0);
        assert_eq!(g.eta()[1], 0.5);
        // antisymmetric up to the Nyquist slot
        for j in 1..4 {
            assert_eq!(g.xi()[j], -g.xi()[8 - j]);
        }
        let zero_x = (0..g.len()).filter(|i| g.xi()[i % 8] == 0.0).count();
        assert_eq!(zero_x, g.ny());
    }

    #[test]
    fn constant_has_only_dc() {
        let g = box2pi(16);
        let s = forward(&Field::from_fn(g.clone(), |_, _| 1.0));
        assert_relative_eq!(s.mode(0, 0).re, 256.0, epsilon = 1e-12);
        let rest: f64 = s.coeffs()[1..].iter().map(|c| c.norm()).sum();
        assert!(rest < 1e-11);
    }

    #[test]
    fn single_cosine_mode() {
        let g = box2pi(32);
        let s = forward(&Field::from_fn(g.clone(), |x, _| (4.0 * x).cos()));
        for k in 0..32 {
            for j in 0..32 {
                let c = s.coeffs()[g.index(j, k)].norm();
                let jt = signed_index(j, 32);
                if k == 0 && jt.abs() == 4 {
                    assert_relative_eq!(c, 512.0, epsilon = 1e-9);
                } else {
                    assert!(c < 1e-10, "mode ({jt},{k}) = {c}");
                }
            }
        }
    }

    #[test]
    fn parseval_factor() {
        let g = Grid::new(16, 32, 3.0, 5.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y| (x * 2.0).sin() + (y * 0.3).cos() * x);
        let phys = lp_norm(&f, 2.0).powi(2);
        assert_relative_eq!(forward(&f).l2_norm_sq(), phys, max_relative = 1e-12);
    }

    #[test]
    fn multiplier_examples() {
        let g = box2pi(32);
        let c4 = Field::from_fn(g.clone(), |x, _| (4.0 * x).cos());
        let half = dx_half(&c4);
        assert!(max_diff(&half, &c4.scale(2.0)) < 1e-12);

        let s = Field::from_fn(g.clone(), |x, _| x.sin());
        let hh = hilbert_x(&hilbert_x(&s));
        assert!(max_diff(&hh, &s.scale(-1.0)) < 1e-12);

        let id = apply_multiplier(&forward(&s), |_, _| Complex64::new(1.0, 0.0)).unwrap();
        assert!(max_diff(&inverse(&id), &s) < 1e-14);
    }

    #[test]
    fn fractional_operator_examples() {
        let g = box2pi(32);
        let c = Field::from_fn(g.clone(), |x, _| x.cos());
        let lhs = dx_half(&dx_half(&c));
        let rhs = hilbert_x(&d_x(&c));
        assert!(max_diff(&lhs, &c) < 1e-12);
        assert!(max_diff(&rhs, &c) < 1e-12);

        let ss = Field::from_fn(g.clone(), |x, y| x.sin() * y.sin());
        let sc = Field::from_fn(g.clone(), |x, y| x.sin() * y.cos());
        assert!(max_diff(&dx_neg_half_dy(&ss), &sc) < 1e-12);

        let one_plus = Field::from_fn(g.clone(), |x, _| 1.0 + x.cos());
        assert!(max_diff(&project_zero_x(&one_plus), &c) < 1e-12);
    }

    #[test]
    fn non_finite_symbol_on_used_mode_fails() {
        let g = box2pi(16);
        let s = forward(&Field::from_fn(g.clone(), |x, _| 1.0 + x.cos()));
        let r = apply_multiplier(&s, |xi, _| Complex64::new(1.0 / xi.abs(), 0.0));
        assert!(matches!(r, Err(Error::NumericalDomain(_))));
        // same symbol is fine once the xi = 0 content is gone
        let p = forward(&project_zero_x(&inverse(&s)));
        let mut p = p;
        for k in 0..16 {
            p.coeffs_mut()[g.index(0, k)] = Complex64::new(0.0, 0.0);
        }
        assert!(apply_multiplier(&p, |xi, _| Complex64::new(1.0 / xi.abs(), 0.0)).is_ok());
    }

    #[test]
    fn dealias_examples() {
        let g = box2pi(32);
        let nyq = Field::from_fn(g.clone(), |x, _| (16.0 * x).cos());
        let out = dealias(&forward(&nyq), DealiasRule::TwoThirds);
        assert!(out.max_abs() < 1e-10);
        let low = forward(&Field::from_fn(g.clone(), |x, y| (3.0 * x).cos() * (2.0 * y).sin()));
        let kept = dealias(&low, DealiasRule::Half);
        assert_relative_eq!(kept.l2_norm_sq(), low.l2_norm_sq(), max_relative = 1e-14);
        // the 2/3 cutoff on 32 points keeps |j| <= 10
        let m = DealiasRule::TwoThirds.mask(&g);
        assert!(m[g.index(10, 0)] && !m[g.index(11, 0)]);
        assert!(DealiasRule::Half.mask(&g)[g.index(8, 8)]);
        assert!(!DealiasRule::Half.mask(&g)[g.index(9, 0)]);
    }

    #[test]
    fn norms() {
        let g = box2pi(16);
        let one = Field::from_fn(g.clone(), |_, _| 1.0);
        assert_relative_eq!(lp_norm(&one, 2.0).powi(2), 4.0 * PI * PI, max_relative = 1e-14);
        let c = Field::from_fn(g.clone(), |x, _| x.cos());
        assert_relative_eq!(lp_norm(&c, 2.0).powi(2), 2.0 * PI * PI, max_relative = 1e-13);
        assert_relative_eq!(l2_inner(&c, &one).unwrap(), 0.0, epsilon = 1e-13);
        assert_eq!(lp_norm(&c, f64::INFINITY), 1.0);
    }

    #[test]
    fn reflections() {
        let g = Grid::new(8, 10, 2.0, 3.0).unwrap();
        let f = Field::from_fn(g.clone(), |x, y| x + 10.0 * y);
        let rx = f.reflect_x();
        let ry = f.reflect_y();
        for k in 0..10 {
            for j in 0..8 {
                let (x, y) = (g.x(j), g.y(k));
                let want_x = if j == 0 { f.at(0, k) } else { -x + 10.0 * y };
                assert_relative_eq!(rx.at(j, k), want_x, epsilon = 1e-12);
                let want_y = if k == 0 { f.at(j, 0) } else { x - 10.0 * y };
                assert_relative_eq!(ry.at(j, k), want_y, epsilon = 1e-12);
            }
        }
    }
}
