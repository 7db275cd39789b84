//! Spatial decay diagnostics for computed profiles.
//!
//! Tail exponents are fitted along the axes through the location of the
//! largest `|phi|`. Weighted sups and the weighted seminorm use coordinates
//! relative to the box centre, so profiles should be centred first (the
//! solvers keep a symmetric initial guess centred).
//!
//! On a periodic box the far field is contaminated by neighbouring images,
//! so every window is kept inside `0.8` of the half box and an exponent is
//! meaningful only when the two-box test (`two_box_drift`) passes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{d_x, d_y, dx_half, Field};
use crate::kernels::Axis;

/// Samples below this magnitude are treated as roundoff and dropped from fits.
pub const NOISE_FLOOR: f64 = 1e-13;
/// Fraction of the half box a fit window may reach.
pub const WINDOW_CAP: f64 = 0.8;
const MIN_RADII: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub exponent: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn check_window(field: &Field, axis: Axis, window: (f64, f64)) -> Result<()> {
    let half = match axis {
        Axis::X => field.grid().lx(),
        Axis::Y => field.grid().ly(),
    } / 2.0;
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi <= WINDOW_CAP * half * (1.0 + 1e-12)) {
        return Err(Error::arg(format!(
            "fit window ({lo}, {hi}) must lie in (0, {}]",
            WINDOW_CAP * half
        )));
    }
    Ok(())
}

/// Least-squares slope of `log|phi|` against `log r` along one axis through
/// the peak; the exponent is the negated slope. Both sides of the peak are
/// pooled.
pub fn tail_exponent_fit(field: &Field, axis: Axis, window: (f64, f64)) -> Result<Fit> {
    check_window(field, axis, window)?;
    let g = field.grid();
    let (pj, pk) = field.argmax_abs();
    let (n, h, fixed) = match axis {
        Axis::X => (g.nx(), g.dx(), pk),
        Axis::Y => (g.ny(), g.dy(), pj),
    };
    let peak = match axis {
        Axis::X => pj,
        Axis::Y => pk,
    };
    let mut radii = 0;
    let mut pts = Vec::new();
    for i in 0..n {
        let off = crate::grid::signed_index((i + n - peak) % n, n);
        let r = off.unsigned_abs() as f64 * h;
        if r < window.0 || r > window.1 {
            continue;
        }
        if off > 0 {
            radii += 1;
        }
        let v = match axis {
            Axis::X => field.at(i, fixed),
            Axis::Y => field.at(fixed, i),
        }
        .abs();
        if v >= NOISE_FLOOR {
            pts.push((r.ln(), v.ln()));
        }
    }
    if radii < MIN_RADII {
        return Err(Error::arg(format!(
            "fit window ({}, {}) holds {radii} sample radii, need {MIN_RADII}",
            window.0, window.1
        )));
    }
    if pts.len() < MIN_RADII {
        return Err(Error::Underflow { kept: pts.len() });
    }
    let (slope, stderr) = linear_fit(&pts);
    Ok(Fit { exponent: -slope, stderr, samples: pts.len() })
}

/// One sample on the line through the peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSample {
    /// Signed distance from the peak along the axis.
    pub offset: f64,
    /// Box coordinate of the sample.
    pub coordinate: f64,
    pub value: f64,
}

/// Every sample on the line through `argmax |phi|` along `axis`, ordered by
/// offset; the data `tail_exponent_fit` regresses.
pub fn tail_profile(field: &Field, axis: Axis) -> Vec<TailSample> {
    let g = field.grid();
    let (pj, pk) = field.argmax_abs();
    let (n, h, peak) = match axis {
        Axis::X => (g.nx(), g.dx(), pj),
        Axis::Y => (g.ny(), g.dy(), pk),
    };
    let mut out: Vec<TailSample> = (0..n)
        .map(|i| {
            let off = crate::grid::signed_index((i + n - peak) % n, n) as f64 * h;
            let (coordinate, value) = match axis {
                Axis::X => (g.x(i), field.at(i, pk)),
                Axis::Y => (g.y(i), field.at(pj, i)),
            };
            TailSample { offset: off, coordinate, value }
        })
        .collect();
    out.sort_by(|a, b| a.offset.total_cmp(&b.offset));
    out
}

/// Ordinary least squares `v = a + b u`; returns `(b, stderr(b))`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mu = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mu).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mu) * (p.1 - mv)).sum();
    let b = sxy / sxx;
    let a = mv - b * mu;
    let ssr: f64 = pts.iter().map(|p| (p.1 - a - b * p.0).powi(2)).sum();
    let stderr = if pts.len() > 2 { (ssr / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    (b, stderr)
}

/// Weight `|coord|^power` for `weighted_sup`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weight {
    pub axis: Axis,
    pub power: f64,
}

impl Weight {
    /// `|y|^3`
    pub const Y3: Weight = Weight { axis: Axis::Y, power: 3.0 };
    /// `|x|^{3/2}`
    pub const X3_2: Weight = Weight { axis: Axis::X, power: 1.5 };

    pub fn y_kappa(kappa: f64) -> Result<Weight> {
        if !(0.0..=3.0).contains(&kappa) {
            return Err(Error::arg(format!("kappa must lie in [0, 3], got {kappa}")));
        }
        Ok(Weight { axis: Axis::Y, power: kappa })
    }
}

/// `max weight * |phi|` over the grid, optionally restricted to
/// `|x|, |y| <= radius`.
pub fn weighted_sup(field: &Field, weight: Weight, radius: Option<f64>) -> f64 {
    let g = field.grid();
    let rad = radius.unwrap_or(f64::INFINITY);
    (0..g.ny())
        .into_par_iter()
        .map(|k| {
            let y = g.y(k);
            if y.abs() > rad {
                return 0.0;
            }
            let mut best: f64 = 0.0;
            for j in 0..g.nx() {
                let x = g.x(j);
                if x.abs() > rad {
                    continue;
                }
                let c = match weight.axis {
                    Axis::X => x,
                    Axis::Y => y,
                };
                let w = if weight.power == 0.0 { 1.0 } else { c.abs().powf(weight.power) };
                best = best.max(w * field.at(j, k).abs());
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `int y^2 (|D_x^{1/2} phi|^2 + |grad phi|^2)` by rectangle rule.
pub fn lemma35_seminorm(field: &Field) -> f64 {
    let g = field.grid();
    let h = dx_half(field);
    let px = d_x(field);
    let py = d_y(field);
    let mut acc = 0.0;
    for k in 0..g.ny() {
        let y2 = g.y(k).powi(2);
        let mut row = 0.0;
        for j in 0..g.nx() {
            row += h.at(j, k).powi(2) + px.at(j, k).powi(2) + py.at(j, k).powi(2);
        }
        acc += y2 * row;
    }
    acc * g.cell_area()
}

/// `(defect, sign_change)`: the largest `|int phi dx|` over rows relative to
/// `||phi||_inf`, and whether `phi` takes both signs beyond `1e-6 ||phi||_inf`.
pub fn zero_x_mean_and_sign(field: &Field) -> Result<(f64, bool)> {
    let g = field.grid();
    let sup = field.max_abs();
    if sup == 0.0 {
        return Err(Error::Degenerate("field is identically zero".into()));
    }
    let mut worst: f64 = 0.0;
    for k in 0..g.ny() {
        let s: f64 = (0..g.nx()).map(|j| field.at(j, k)).sum();
        worst = worst.max((s * g.dx()).abs());
    }
    let sign = field.min() < -1e-6 * sup && field.max() > 1e-6 * sup;
    Ok((worst / sup, sign))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormOrder {
    /// `L_y^r L_x^q`: inner `x` norm with exponent `q`, outer `y` with `r`.
    YOuter,
    /// `L_x^q L_y^r`: inner `y` norm with exponent `r`, outer `x` with `q`.
    XOuter,
}

/// `1/r + 1/q > 1` and `1/r + 2/q < 3`.
pub fn admissible(q: f64, r: f64) -> bool {
    1.0 / r + 1.0 / q > 1.0 && 1.0 / r + 2.0 / q < 3.0
}

fn discrete_norm(vals: impl Iterator<Item = f64>, p: f64, w: f64) -> f64 {
    if p.is_infinite() {
        vals.fold(0.0, |m, v| m.max(v.abs()))
    } else {
        (vals.map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
    }
}

/// Iterated discrete norm; an infinite exponent is the discrete max.
pub fn mixed_norm(field: &Field, q: f64, r: f64, order: NormOrder) -> Result<f64> {
    for (name, p) in [("q", q), ("r", r)] {
        if !(p >= 1.0) {
            return Err(Error::arg(format!("{name} must be >= 1, got {p}")));
        }
    }
    let g = field.grid();
    let (nx, ny) = (g.nx(), g.ny());
    Ok(match order {
        NormOrder::YOuter => {
            let inner: Vec<f64> = (0..ny)
                .map(|k| discrete_norm((0..nx).map(|j| field.at(j, k)), q, g.dx()))
                .collect();
            discrete_norm(inner.into_iter(), r, g.dy())
        }
        NormOrder::XOuter => {
            let inner: Vec<f64> = (0..nx)
                .map(|j| discrete_norm((0..ny).map(|k| field.at(j, k)), r, g.dy()))
                .collect();
            discrete_norm(inner.into_iter(), q, g.dx())
        }
    })
}

/// Norm exponents in JSON: a number, or the string `"inf"`.
mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    fn to_repr(v: f64) -> Repr {
        if v.is_infinite() && v > 0.0 {
            Repr::Text("inf".into())
        } else {
            Repr::Num(v)
        }
    }

    fn from_repr<E: de::Error>(r: Repr) -> Result<f64, E> {
        match r {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(E::custom(format!("expected a number or \"inf\", got {t:?}"))),
        }
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*v).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }

    pub mod pairs {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[(f64, f64)], s: S) -> Result<S::Ok, S::Error> {
            let out: Vec<(Repr, Repr)> = v.iter().map(|&(a, b)| (to_repr(a), to_repr(b))).collect();
            out.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
            Vec::<(Repr, Repr)>::deserialize(d)?
                .into_iter()
                .map(|(a, b)| Ok((from_repr(a)?, from_repr(b)?)))
                .collect()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedNormRow {
    #[serde(with = "exponent_serde")]
    pub q: f64,
    #[serde(with = "exponent_serde")]
    pub r: f64,
    pub order: NormOrder,
    pub value: f64,
    pub admissible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecayOptions {
    /// Fit window along `x = 0`; defaults to `[5, 40]` capped to the box.
    pub window_y: Option<(f64, f64)>,
    /// Fit window along `y = 0`; defaults to `[15, 60]` capped to the box.
    pub window_x: Option<(f64, f64)>,
    /// Restrict weighted sups to `|x|, |y| <= sup_radius`.
    pub sup_radius: Option<f64>,
    /// `(q, r)` pairs for `mixed_norm`; `"inf"` allowed in JSON.
    #[serde(with = "exponent_serde::pairs")]
    pub mixed_pairs: Vec<(f64, f64)>,
}

impl Default for DecayOptions {
    fn default() -> Self {
        DecayOptions {
            window_y: None,
            window_x: None,
            sup_radius: Some(40.0),
            mixed_pairs: vec![
                (2.0, 2.0),
                (1.5, 1.5),
                (1.2, 2.0),
                (2.0, 1.2),
                (f64::INFINITY, f64::INFINITY),
            ],
        }
    }
}

fn default_window(lo: f64, hi: f64, half: f64) -> (f64, f64) {
    let cap = WINDOW_CAP * half;
    (lo.min(0.5 * cap), hi.min(cap))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub exponent_y: Option<f64>,
    pub stderr_y: Option<f64>,
    pub exponent_x: Option<f64>,
    pub stderr_x: Option<f64>,
    pub window_y: (f64, f64),
    pub window_x: (f64, f64),
    /// Reason a fit is missing, if any.
    pub fit_notes: Vec<String>,
    pub sup_weighted_y: f64,
    pub sup_weighted_x: f64,
    pub sup_radius: Option<f64>,
    pub lemma35_seminorm: f64,
    pub zero_x_mean_defect: f64,
    pub sign_change: bool,
    pub mixed_norms: Vec<MixedNormRow>,
    /// `p = m + 1 >= (3 + sqrt 5)/2`, where the decay estimates are proven.
    pub in_proven_range: bool,
}

pub fn decay_report(field: &Field, m: f64, opts: &DecayOptions) -> Result<DecayReport> {
    let g = field.grid();
    let window_y = opts.window_y.unwrap_or_else(|| default_window(5.0, 40.0, g.ly() / 2.0));
    let window_x = opts.window_x.unwrap_or_else(|| default_window(15.0, 60.0, g.lx() / 2.0));
    let mut notes = Vec::new();
    let mut fit = |axis, w| match tail_exponent_fit(field, axis, w) {
        Ok(f) => (Some(f.exponent), Some(f.stderr)),
        Err(e) => {
            notes.push(format!("{axis:?}: {e}"));
            (None, None)
        }
    };
    let (exponent_y, stderr_y) = fit(Axis::Y, window_y);
    let (exponent_x, stderr_x) = fit(Axis::X, window_x);
    let (defect, sign) = zero_x_mean_and_sign(field)?;
    let mut mixed = Vec::new();
    for &(q, r) in &opts.mixed_pairs {
        for order in [NormOrder::YOuter, NormOrder::XOuter] {
            mixed.push(MixedNormRow {
                q,
                r,
                order,
                value: mixed_norm(field, q, r, order)?,
                admissible: admissible(q, r),
            });
        }
    }
    Ok(DecayReport {
        exponent_y,
        stderr_y,
        exponent_x,
        stderr_x,
        window_y,
        window_x,
        fit_notes: notes,
        sup_weighted_y: weighted_sup(field, Weight::Y3, opts.sup_radius),
        sup_weighted_x: weighted_sup(field, Weight::X3_2, opts.sup_radius),
        sup_radius: opts.sup_radius,
        lemma35_seminorm: lemma35_seminorm(field),
        zero_x_mean_defect: defect,
        sign_change: sign,
        mixed_norms: mixed,
        in_proven_range: m + 1.0 >= (3.0 + 5f64.sqrt()) / 2.0,
    })
}

/// Relative change of the weighted sups between a run and the same run on a
/// doubled box: `(drift_y, drift_x)`.
pub fn two_box_drift(small: &DecayReport, big: &DecayReport) -> (f64, f64) {
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs());
    (
        rel(small.sup_weighted_y, big.sup_weighted_y),
        rel(small.sup_weighted_x, big.sup_weighted_x),
    )
}
