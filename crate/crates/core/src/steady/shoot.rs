//! Outward shooting for `W'' + (d-1)/r W' = 1 - W^m`, `W(0) = a`, `W'(0) = 0`.
//!
//! Classical RK4 with steps `h * min(1, max(L, r))`, where `L` is the core
//! length `sqrt(a / (a^m - 1))` capped at 1. Steps are proportional to `h`
//! everywhere, so the global error is `O(h^4)`. The origin is bridged with
//! the series `a + c2 r^2 + c4 r^4`.
//!
//! A shot ends at the first of two events: `W` crosses zero (the free
//! boundary candidate) or `W'` returns to zero while `W > 0`. In the second
//! case the radial energy `W'^2/2 + W^{m+1}/(m+1) - W` is already negative
//! and can never climb back to the value zero it would need at `W = 0`, so
//! the shot never reaches zero.

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// How a single shot terminated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotEnd {
    Crossing { r0: f64, slope: f64 },
    Turnaround { r_turn: f64, w_min: f64 },
}

impl ShotEnd {
    /// Signed contact quantity: the crossing slope (negative), or for a
    /// turnaround the slope `+sqrt(2 (w - w^{m+1}/(m+1)))` a crossing would
    /// need to carry the same energy. Continuous through the touchdown value
    /// of `a`, where it vanishes.
    pub fn contact_value(&self, m: f64) -> f64 {
        match *self {
            ShotEnd::Crossing { slope, .. } => slope,
            ShotEnd::Turnaround { w_min, .. } => {
                let depth = w_min - w_min.max(0.0).powf(m + 1.0) / (m + 1.0);
                (2.0 * depth.max(0.0)).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotSettings {
    pub h: f64,
    pub r_limit: f64,
    pub max_steps: usize,
}

impl ShotSettings {
    pub fn with_step(h: f64) -> Self {
        Self { h, ..Self::default() }
    }
}

impl Default for ShotSettings {
    fn default() -> Self {
        Self { h: 1e-3, r_limit: 1e4, max_steps: 50_000_000 }
    }
}

/// Dense record of a shot, interpolated by cubic Hermite segments.
#[derive(Debug, Clone)]
pub struct Trajectory {
    a: f64,
    c2: f64,
    c4: f64,
    r: Vec<f64>,
    w: Vec<f64>,
    v: Vec<f64>,
}

impl Trajectory {
    pub fn start(&self) -> f64 {
        self.r[0]
    }

    pub fn end(&self) -> f64 {
        *self.r.last().unwrap()
    }

    /// `(W, W')` at `r`, for `0 <= r <= end`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        if r <= self.r[0] {
            return series(self.a, self.c2, self.c4, r);
        }
        let k = match self.r.binary_search_by(|x| x.partial_cmp(&r).unwrap()) {
            Ok(k) => return (self.w[k], self.v[k]),
            Err(k) => k.min(self.r.len() - 1) - 1,
        };
        let step = self.r[k + 1] - self.r[k];
        let s = ((r - self.r[k]) / step).clamp(0.0, 1.0);
        let (p, dp) = hermite(self.w[k], self.v[k], self.w[k + 1], self.v[k + 1], step, s);
        (p, dp)
    }
}

fn series(a: f64, c2: f64, c4: f64, r: f64) -> (f64, f64) {
    let r2 = r * r;
    (a + c2 * r2 + c4 * r2 * r2, 2.0 * c2 * r + 4.0 * c4 * r2 * r)
}

/// Cubic Hermite value and derivative on a step of length `step` at fraction `s`.
fn hermite(y0: f64, dy0: f64, y1: f64, dy1: f64, step: f64, s: f64) -> (f64, f64) {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * y0 + h10 * step * dy0 + h01 * y1 + h11 * step * dy1;
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -6.0 * s2 + 6.0 * s;
    let d11 = 3.0 * s2 - 2.0 * s;
    let deriv = (d00 * y0 + d01 * y1) / step + d10 * dy0 + d11 * dy1;
    (value, deriv)
}

/// First root in `(0, hi]` of `f`, given `f(0) > 0`, by scanning then bisecting.
fn first_root(f: impl Fn(f64) -> f64, hi: f64) -> Option<f64> {
    const SCAN: usize = 32;
    let mut prev = 0.0;
    for j in 1..=SCAN {
        let s = hi * j as f64 / SCAN as f64;
        if f(s) <= 0.0 {
            let (mut lo, mut up) = (prev, s);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if mid <= lo || mid >= up {
                    break;
                }
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            return Some(up);
        }
        prev = s;
    }
    None
}

/// Core length `sqrt(a / (a^m - 1))`, capped at 1.
fn core_length(a: f64, m: f64) -> f64 {
    let denom = a.powf(m) - 1.0;
    if denom <= 0.0 {
        1.0
    } else {
        (a / denom).sqrt().min(1.0)
    }
}

/// Integrates one shot. With `record`, the full trajectory is returned as well.
pub fn shoot(
    params: &ModelParams,
    a: f64,
    settings: &ShotSettings,
    record: bool,
) -> Result<(ShotEnd, Option<Trajectory>)> {
    if !(a > 1.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("shooting height a = {a} must exceed 1")));
    }
    if !(settings.h > 0.0) {
        return Err(Error::InvalidArgument(format!("shooting step h = {}", settings.h)));
    }
    let d = params.df();
    let m = params.m();
    // Odd extension of W^m: RK4 stages dip O(h^2) below zero next to a
    // touchdown, and clipping there would cost an order of accuracy.
    let rhs = |r: f64, w: f64, v: f64| -> f64 { -(d - 1.0) * v / r - w.signum() * w.abs().powf(m) + 1.0 };

    let c2 = -(a.powf(m) - 1.0) / (2.0 * d);
    let c4 = -m * a.powf(m - 1.0) * c2 / (4.0 * (d + 2.0));
    let core = core_length(a, m);
    let h = settings.h;
    let mut r = 10.0 * h * core;
    let (mut w, mut v) = series(a, c2, c4, r);

    let mut traj = record.then(|| Trajectory {
        a,
        c2,
        c4,
        r: vec![r],
        w: vec![w],
        v: vec![v],
    });

    for _ in 0..settings.max_steps {
        let step = h * r.max(core).min(1.0);
        if r + step == r {
            return Err(Error::StepUnderflow { r });
        }
        let k1w = v;
        let k1v = rhs(r, w, v);
        let k2w = v + 0.5 * step * k1v;
        let k2v = rhs(r + 0.5 * step, w + 0.5 * step * k1w, k2w);
        let k3w = v + 0.5 * step * k2v;
        let k3v = rhs(r + 0.5 * step, w + 0.5 * step * k2w, k3w);
        let k4w = v + step * k3v;
        let k4v = rhs(r + step, w + step * k3w, k4w);
        let w1 = w + step / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
        let v1 = v + step / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        let r1 = r + step;

        let end = if w1 <= 0.0 {
            let s = first_root(|s| hermite(w, v, w1, v1, step, s).0, 1.0).unwrap_or(1.0);
            Some(crossing(w, v, w1, v1, step, r, s))
        } else if v1 >= 0.0 {
            let (a0, a1) = (rhs(r, w, v), rhs(r1, w1, v1));
            let st = first_root(|s| -hermite(v, a0, v1, a1, step, s).0, 1.0).unwrap_or(1.0);
            match first_root(|s| hermite(w, v, w1, v1, step, s).0, st) {
                Some(s) => Some(crossing(w, v, w1, v1, step, r, s)),
                None => Some(ShotEnd::Turnaround {
                    r_turn: r + st * step,
                    w_min: hermite(w, v, w1, v1, step, st).0,
                }),
            }
        } else {
            None
        };

        if let Some(t) = traj.as_mut() {
            t.r.push(r1);
            t.w.push(w1);
            t.v.push(v1);
        }
        if let Some(end) = end {
            return Ok((end, traj));
        }
        r = r1;
        w = w1;
        v = v1;
        if r > settings.r_limit {
            return Err(Error::ShotEscaped { a, r_limit: settings.r_limit });
        }
    }
    Err(Error::ShotEscaped { a, r_limit: r })
}

fn crossing(w: f64, v: f64, w1: f64, v1: f64, step: f64, r: f64, s: f64) -> ShotEnd {
    ShotEnd::Crossing { r0: r + s * step, slope: hermite(w, v, w1, v1, step, s).1 }
}

/// First zero of `W` and the slope there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactPoint {
    pub r0: f64,
    pub slope: f64,
}

/// Shoots from `W(0) = a` with base step `h` and reports the first zero.
///
/// Fails with [`Error::NoZeroCrossing`] when the shot turns around first.
pub fn shoot_canonical(params: &ModelParams, a: f64, h: f64) -> Result<ContactPoint> {
    match shoot(params, a, &ShotSettings::with_step(h), false)?.0 {
        ShotEnd::Crossing { r0, slope } => Ok(ContactPoint { r0, slope }),
        ShotEnd::Turnaround { r_turn, w_min } => Err(Error::NoZeroCrossing { a, r_turn, w_min }),
    }
}

/// Signed contact value of a shot; see [`ShotEnd::contact_value`].
pub fn contact_value(params: &ModelParams, a: f64, settings: &ShotSettings) -> Result<f64> {
    Ok(shoot(params, a, settings, false)?.0.contact_value(params.m()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(d: u32, m: f64) -> ModelParams {
        ModelParams::new(d, m).unwrap()
    }

    /// For d = 3, m = 1 the shot is `W = 1 + (a - 1) sin r / r`.
    fn linear_exact(a: f64, r: f64) -> f64 {
        1.0 + (a - 1.0) * r.sin() / r
    }

    #[test]
    fn matches_linear_closed_form() {
        let a = 8.0;
        let (end, traj) = shoot(&p(3, 1.0), a, &ShotSettings::with_step(1e-3), true).unwrap();
        let traj = traj.unwrap();
        let ShotEnd::Crossing { r0, slope } = end else { panic!("expected crossing") };
        // bisection oracle on the explicit solution over the first descent
        let (mut lo, mut hi) = (1e-6, std::f64::consts::PI * 1.43);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if linear_exact(a, mid) > 0.0 { lo = mid } else { hi = mid }
        }
        assert!((r0 - lo).abs() < 1e-9, "{r0} vs {lo}");
        let exact_slope = (a - 1.0) * (lo * lo.cos() - lo.sin()) / (lo * lo);
        assert!((slope - exact_slope).abs() < 1e-8);
        assert!(slope < 0.0);
        for r in [0.001, 0.5, 1.0, 2.0, r0 * 0.99] {
            assert!((traj.eval(r).0 - linear_exact(a, r)).abs() < 1e-10, "r = {r}");
        }
    }

    #[test]
    fn turnaround_below_touchdown() {
        // a* = 1 + R / |sin R| ~ 5.6 for d = 3, m = 1
        let err = shoot_canonical(&p(3, 1.0), 2.0, 1e-3).unwrap_err();
        let Error::NoZeroCrossing { w_min, r_turn, .. } = err else { panic!("{err:?}") };
        assert!((r_turn - 4.493409457909064).abs() < 1e-8);
        assert!((w_min - linear_exact(2.0, r_turn)).abs() < 1e-10);
        // contact value positive below the touchdown height, negative above
        let s = ShotSettings::with_step(1e-3);
        assert!(contact_value(&p(3, 1.0), 2.0, &s).unwrap() > 0.0);
        assert!(contact_value(&p(3, 1.0), 8.0, &s).unwrap() < 0.0);
    }

    #[test]
    fn nearly_flat_start_terminates() {
        let r = shoot_canonical(&p(3, 2.0), 1.0 + 1e-12, 1e-3);
        assert!(matches!(r, Err(Error::NoZeroCrossing { .. })));
        let r = shoot_canonical(&p(3, 1.0), 1.0 + 1e-12, 1e-3);
        assert!(matches!(r, Err(Error::NoZeroCrossing { .. })));
    }

    #[test]
    fn rejects_bad_heights() {
        assert!(shoot_canonical(&p(3, 2.0), 1.0, 1e-3).is_err());
        assert!(shoot_canonical(&p(3, 2.0), 0.5, 1e-3).is_err());
        assert!(shoot_canonical(&p(3, 2.0), 3.0, 0.0).is_err());
    }

    #[test]
    fn fourth_order_in_step() {
        let a = 8.0;
        let exact = {
            let (mut lo, mut hi) = (1e-6, 4.49);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if linear_exact(a, mid) > 0.0 { lo = mid } else { hi = mid }
            }
            lo
        };
        let err = |h: f64| (shoot_canonical(&p(3, 1.0), a, h).unwrap().r0 - exact).abs();
        let (e1, e2) = (err(0.04), err(0.02));
        assert!(e1 / e2 > 10.0, "ratio {}", e1 / e2);
    }
}
