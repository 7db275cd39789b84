//! Variational functionals: the Z-norm, action, Nehari functional, the
//! ground-state functional, Nehari scaling, Pohozaev residuals and the
//! Gagliardo–Nirenberg ratio.
//!
//! With `A = ||D_x^{1/2} u||^2` and `B = ||D_x^{-1/2} u_y||^2`:
//!
//! ```text
//! ||u||_Z^2 = c ||u||^2 + A + B
//! S(u) = ||u||_Z^2 / 2 - int F(u)
//! I(u) = ||u||_Z^2 - int u f(u)
//! G(u) = int (u f(u) / 2 - F(u))
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{forward, Field};

/// Wave speed and nonlinearity `f(u) = u^m` (or `|u|^{m-1} u`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub c: f64,
    pub m: f64,
    #[serde(default)]
    pub signed_power: bool,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        PhysicsParams { c: 1.0, m: 2.0, signed_power: false }
    }
}

impl PhysicsParams {
    pub fn new(c: f64, m: f64) -> Result<Self> {
        let p = PhysicsParams { c, m, signed_power: false };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::arg(format!("wave speed c must be positive, got {}", self.c)));
        }
        if !(self.m.is_finite() && self.m > 1.0) {
            return Err(Error::arg(format!("exponent m must exceed 1, got {}", self.m)));
        }
        Ok(())
    }

    /// Growth index `p = m + 1`.
    pub fn p(&self) -> f64 {
        self.m + 1.0
    }

    /// Superlinearity constant of `0 < mu F(u) <= u f(u)`; equals `m + 1`.
    pub fn mu(&self) -> f64 {
        self.m + 1.0
    }

    /// Whether the decay estimates cover this exponent: `p >= (3 + sqrt 5)/2`.
    pub fn in_decay_range(&self) -> bool {
        self.p() >= (3.0 + 5f64.sqrt()) / 2.0
    }

    fn integer_m(&self) -> Option<i32> {
        (self.m.fract() == 0.0 && self.m <= i32::MAX as f64).then_some(self.m as i32)
    }

    pub fn f(&self, u: f64) -> f64 {
        if self.signed_power {
            u.abs().powf(self.m - 1.0) * u
        } else if let Some(k) = self.integer_m() {
            u.powi(k)
        } else {
            u.powf(self.m)
        }
    }

    /// Primitive `F(u) = u f(u) / (m + 1)`.
    pub fn big_f(&self, u: f64) -> f64 {
        u * self.f(u) / (self.m + 1.0)
    }

    /// Whether `f(u)` is real: always for the signed power or integer `m`,
    /// otherwise only for `u >= 0`.
    pub fn defined_at(&self, u: f64) -> bool {
        self.signed_power || self.integer_m().is_some() || u >= 0.0
    }

    /// `f` applied pointwise; fails where the power is undefined or the
    /// result is not finite.
    pub fn apply_f(&self, u: &Field) -> Result<Field> {
        if u.values().iter().any(|&v| !self.defined_at(v)) {
            return Err(Error::NumericalDomain(format!(
                "u^{} is undefined for negative u; enable signed_power",
                self.m
            )));
        }
        let out = u.map(|v| self.f(v));
        if out.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalDomain(format!("f(u) = u^{} overflows", self.m)));
        }
        Ok(out)
    }
}

/// The quadratic and nonlinear integrals every functional is built from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parts {
    /// `int u^2`
    pub mass: f64,
    /// `||D_x^{1/2} u||^2`
    pub a: f64,
    /// `||D_x^{-1/2} u_y||^2`, zero content at `xi = 0`
    pub b: f64,
    /// `int F(u)`
    pub f_int: f64,
    /// `int u f(u)`
    pub uf_int: f64,
}

impl Parts {
    pub fn z_norm_sq(&self, c: f64) -> f64 {
        c * self.mass + self.a + self.b
    }
}

/// `int u^2`, `A` and `B` from one transform.
pub fn quadratic_parts(u: &Field) -> (f64, f64, f64) {
    let s = forward(u);
    let mass = s.l2_norm_sq();
    let a = s.weighted_energy(|xi, _| xi.abs(), true);
    let b = s.weighted_energy(|xi, eta| eta * eta / xi.abs(), true);
    (mass, a, b)
}

pub fn parts(u: &Field, params: &PhysicsParams) -> Result<Parts> {
    params.validate()?;
    let (mass, a, b) = quadratic_parts(u);
    let w = u.grid().cell_area();
    let mut f_int = 0.0;
    let mut uf_int = 0.0;
    for &v in u.values() {
        let uf = v * params.f(v);
        uf_int += uf;
        f_int += uf / (params.m + 1.0);
    }
    if !uf_int.is_finite() {
        return Err(Error::NumericalDomain(format!(
            "u^{} is undefined for negative u; enable signed_power",
            params.m
        )));
    }
    Ok(Parts { mass, a, b, f_int: f_int * w, uf_int: uf_int * w })
}

pub fn z_norm_sq(u: &Field, params: &PhysicsParams) -> Result<f64> {
    params.validate()?;
    let (mass, a, b) = quadratic_parts(u);
    Ok(params.c * mass + a + b)
}

pub fn action_s(u: &Field, params: &PhysicsParams) -> Result<f64> {
    let p = parts(u, params)?;
    Ok(0.5 * p.z_norm_sq(params.c) - p.f_int)
}

pub fn nehari_i(u: &Field, params: &PhysicsParams) -> Result<f64> {
    let p = parts(u, params)?;
    Ok(p.z_norm_sq(params.c) - p.uf_int)
}

pub fn g_functional(u: &Field, params: &PhysicsParams) -> Result<f64> {
    let p = parts(u, params)?;
    Ok(0.5 * p.uf_int - p.f_int)
}

/// Closed-form `t_u = (||u||_Z^2 / int u f(u))^{1/(m-1)}`, the unique
/// maximizer of `t -> S(t u)` for homogeneous `f`.
pub fn nehari_scale(u: &Field, params: &PhysicsParams) -> Result<f64> {
    let p = parts(u, params)?;
    nehari_scale_from_parts(&p, params)
}

pub fn nehari_scale_from_parts(p: &Parts, params: &PhysicsParams) -> Result<f64> {
    if !(p.uf_int > 0.0) {
        return Err(Error::NoScaling(p.uf_int));
    }
    Ok((p.z_norm_sq(params.c) / p.uf_int).powf(1.0 / (params.m - 1.0)))
}

/// Maximizer of `t -> z t^2 / 2 - big_f_along(t)` over `t > 0` by bracketing
/// and golden-section search, bracket shrunk to relative width `1e-12`.
/// Works for any superquadratic primitive, not only powers. Near a smooth
/// maximum `S` is flat, so the maximizer itself is only resolved to about
/// `sqrt(eps)` relative.
pub fn nehari_scale_search(z: f64, big_f_along: impl Fn(f64) -> f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::Degenerate(format!("Z-norm must be positive, got {z}")));
    }
    let s = |t: f64| 0.5 * z * t * t - big_f_along(t);
    let mut hi = 1.0;
    while s(2.0 * hi) > s(hi) {
        hi *= 2.0;
        if hi > 1e150 {
            return Err(Error::NoScaling(f64::NAN));
        }
    }
    let mut lo = 0.0;
    hi *= 2.0;
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut sa, mut sb) = (s(a), s(b));
    while hi - lo > 1e-12 * hi {
        if sa < sb {
            lo = a;
            a = b;
            sa = sb;
            b = lo + g * (hi - lo);
            sb = s(b);
        } else {
            hi = b;
            b = a;
            sb = sa;
            a = hi - g * (hi - lo);
            sa = s(a);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Pohozaev residuals `(r1, r2)`, both zero at an exact solitary wave.
///
/// `r1 = -c int u^2 - A - B + int u f(u)` (identically `-I(u)`),
/// `r2 = c int u^2 + A - B - 2 int F(u)`.
pub fn pohozaev_residuals(u: &Field, params: &PhysicsParams) -> Result<(f64, f64)> {
    let p = parts(u, params)?;
    Ok(pohozaev_from_parts(&p, params.c))
}

pub fn pohozaev_from_parts(p: &Parts, c: f64) -> (f64, f64) {
    let r1 = -c * p.mass - p.a - p.b + p.uf_int;
    let r2 = c * p.mass + p.a - p.b - 2.0 * p.f_int;
    (r1, r2)
}

/// Gagliardo–Nirenberg ratio
/// `||u||_{p+2}^{p+2} / (||u||_2^{2-p} ||D_x^{-1/2} u_y||^{p/2} ||D_x^{1/2} u||^{3p/2})`.
pub fn gn_ratio(u: &Field, p_gn: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&p_gn) {
        return Err(Error::arg(format!("GN exponent must lie in [0, 2], got {p_gn}")));
    }
    let (mass, a, b) = quadratic_parts(u);
    if mass <= 0.0 || a <= 0.0 || b <= 0.0 {
        return Err(Error::Degenerate(format!(
            "GN denominator vanishes (||u||^2 = {mass:e}, A = {a:e}, B = {b:e})"
        )));
    }
    let w = u.grid().cell_area();
    let num: f64 = u.values().iter().map(|v| v.abs().powf(p_gn + 2.0)).sum::<f64>() * w;
    let den = mass.sqrt().powf(2.0 - p_gn) * b.sqrt().powf(p_gn / 2.0) * a.sqrt().powf(1.5 * p_gn);
    Ok(num / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub z_norm_sq: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "F_int")]
    pub f_int: f64,
    pub uf_int: f64,
    pub pohozaev_r1: f64,
    pub pohozaev_r2: f64,
    /// `None` when a GN denominator factor vanishes.
    pub gn_ratio: Option<f64>,
}

/// Every functional at once, with the GN exponent `p = m - 1`.
pub fn report(u: &Field, params: &PhysicsParams) -> Result<FunctionalReport> {
    let p = parts(u, params)?;
    let z = p.z_norm_sq(params.c);
    let (r1, r2) = pohozaev_from_parts(&p, params.c);
    let gn = match gn_ratio(u, (params.m - 1.0).clamp(0.0, 2.0)) {
        Ok(q) => Some(q),
        Err(Error::Degenerate(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(FunctionalReport {
        z_norm_sq: z,
        s: 0.5 * z - p.f_int,
        i: z - p.uf_int,
        g: 0.5 * p.uf_int - p.f_int,
        f_int: p.f_int,
        uf_int: p.uf_int,
        pohozaev_r1: r1,
        pohozaev_r2: r2,
        gn_ratio: gn,
    })
}
