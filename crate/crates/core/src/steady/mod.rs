//! Radial steady states.
//!
//! Every compactly supported radial steady state is a rescaling
//! `A W(A^{(m-1)/2} r)` of the canonical profile solving `-Lap W = W^m - 1`
//! on a ball with `W = W' = 0` on its boundary. The canonical profile is
//! found by shooting on the peak height `a = W(0)`.

mod equilibrium;
mod shoot;

pub use equilibrium::equilibrate;
pub use shoot::{contact_value, shoot, shoot_canonical, ContactPoint, ShotEnd, ShotSettings, Trajectory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ModelParams, Regime};
use crate::radial::{
    chemical_potential, grad_l2_squared, lp_integral, lp_norm_unchecked, RadialGrid, RadialProfile,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalOptions {
    /// Base RK4 step of the shooting integrator.
    pub shoot_step: f64,
    /// Grid intervals across the support `[0, R]`.
    pub support_nodes: usize,
    /// Total grid nodes; nodes past the support hold exact zeros.
    pub total_nodes: usize,
    /// Initial bracket for the peak height.
    pub a_lo: f64,
    pub a_hi: f64,
    /// Largest peak height tried before giving up.
    pub a_max: f64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        Self {
            shoot_step: 1e-3,
            support_nodes: 1024,
            total_nodes: 2048,
            a_lo: 1.0 + 1e-3,
            a_hi: 50.0,
            a_max: 1e4,
        }
    }
}

impl CanonicalOptions {
    pub fn with_nodes(support_nodes: usize, total_nodes: usize) -> Self {
        Self { support_nodes, total_nodes, ..Self::default() }
    }
}

/// Solution of `-Lap W = W^m - 1` on `B(0, R)` with zero contact angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CanonicalProfile {
    pub params: ModelParams,
    pub a_star: f64,
    /// Free boundary located by the shot, `O(h^4)` accurate.
    pub support_radius: f64,
    /// `W'(R)` at the located boundary.
    pub contact_slope: f64,
    /// `W(R)` at the located boundary.
    pub contact_gap: f64,
    /// Slope of the nearest crossing shot on the other side of `a_star`.
    pub crossing_slope: f64,
    /// The shot sampled at `r_i = i R / support_nodes`, zero beyond `R`.
    pub profile: RadialProfile,
    /// Exact fixed point of the discrete flow on its own spacing.
    pub discrete: RadialProfile,
}

impl CanonicalProfile {
    pub fn m(&self) -> f64 {
        self.params.m()
    }
}

/// Finds `a*` by bracketing and bisection on the signed contact value and
/// returns the sampled and the discretely polished profiles.
pub fn solve_canonical(params: &ModelParams, opts: &CanonicalOptions) -> Result<CanonicalProfile> {
    if opts.support_nodes < 8 || opts.total_nodes < opts.support_nodes + 2 {
        return Err(Error::InvalidArgument(format!(
            "grid with {} support nodes and {} total nodes",
            opts.support_nodes, opts.total_nodes
        )));
    }
    let m = params.m();
    let settings = ShotSettings::with_step(opts.shoot_step);
    let mut min_abs = f64::INFINITY;
    let mut value = |a: f64| -> Result<f64> {
        let v = contact_value(params, a, &settings)?;
        min_abs = min_abs.min(v.abs());
        Ok(v)
    };

    let mut lo = opts.a_lo;
    let mut tries = 0;
    while value(lo)? <= 0.0 {
        tries += 1;
        if tries > 10 {
            return Err(Error::NoZeroContactAngle { a_lo: lo, a_hi: opts.a_hi, min_abs });
        }
        lo = 1.0 + (lo - 1.0) / 10.0;
    }
    let mut hi = opts.a_hi.max(lo * 1.5);
    while value(hi)? > 0.0 {
        if hi >= opts.a_max {
            return Err(Error::NoZeroContactAngle { a_lo: lo, a_hi: hi, min_abs });
        }
        hi = (2.0 * hi).min(opts.a_max);
    }
    loop {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if value(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let (end, traj) = shoot(params, lo, &settings, true)?;
    let traj = traj.expect("recorded");
    let ShotEnd::Turnaround { r_turn, w_min } = end else {
        return Err(Error::InvalidArgument("bisection lost the turnaround side".into()));
    };
    let crossing_slope = match shoot(params, hi, &settings, false)?.0 {
        ShotEnd::Crossing { slope, .. } => slope,
        ShotEnd::Turnaround { .. } => f64::NAN,
    };
    let radius = r_turn;
    let (_, contact_slope) = traj.eval(radius);

    let k = opts.support_nodes;
    let n = opts.total_nodes;
    let d = params.d();
    let grid = RadialGrid::with_spacing(d, radius / k as f64, n)?;
    let mut values = vec![0.0; n];
    for (i, v) in values.iter_mut().enumerate().take(k) {
        *v = traj.eval(grid.r(i)).0.max(0.0);
    }
    values[0] = lo;
    let profile = RadialProfile::new(grid, values)?;
    check_decreasing(&profile, k)?;

    let h0 = radius / (k as f64 + 0.5);
    let seed: Vec<f64> = (0..k).map(|i| traj.eval(i as f64 * h0).0).collect();
    let (w, h) = equilibrate(d, m, seed, h0)?;
    let mut values = w;
    values.resize(n, 0.0);
    let discrete = RadialProfile::new(RadialGrid::with_spacing(d, h, n)?, values)?;
    check_decreasing(&discrete, k)?;

    Ok(CanonicalProfile {
        params: *params,
        a_star: lo,
        support_radius: radius,
        contact_slope,
        contact_gap: w_min,
        crossing_slope,
        profile,
        discrete,
    })
}

fn check_decreasing(u: &RadialProfile, k: usize) -> Result<()> {
    let v = u.values();
    for i in 0..k {
        if !(v[i + 1] < v[i]) {
            return Err(Error::InvalidProfile(format!("profile not strictly decreasing at node {i}")));
        }
    }
    Ok(())
}

/// A mass-normalised steady state `U(r) = A W(B r)`, `B = A^{(m-1)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub params: ModelParams,
    pub mass: f64,
    pub amplitude: f64,
    pub spatial_scale: f64,
    pub profile: RadialProfile,
    pub p_star_measured: f64,
    /// Constant value of the chemical potential on the support, `-A^m`.
    pub c_bar: f64,
    pub support_radius: f64,
}

impl SteadyState {
    pub fn m(&self) -> f64 {
        self.params.m()
    }
}

fn family_member(canonical: &CanonicalProfile, amplitude: f64) -> Result<SteadyState> {
    let m = canonical.m();
    let scale = amplitude.powf((m - 1.0) / 2.0);
    let w = &canonical.discrete;
    let profile = RadialProfile::new(
        w.grid().contracted(scale),
        w.values().iter().map(|v| amplitude * v).collect(),
    )?;
    Ok(SteadyState {
        params: canonical.params,
        mass: profile.mass(),
        amplitude,
        spatial_scale: scale,
        p_star_measured: lp_norm_unchecked(&profile, m + 1.0),
        c_bar: -amplitude.powf(m),
        support_radius: canonical.support_radius / scale,
        profile,
    })
}

/// The unique family member with mass `mass`.
///
/// The mass of `A W(A^{(m-1)/2} r)` is `A^{1 - d(m-1)/2} |W|_1`, solved for `A`
/// in closed form.
pub fn rescale_to_mass(canonical: &CanonicalProfile, mass: f64) -> Result<SteadyState> {
    if canonical.params.is_mass_critical() {
        return Err(Error::WrongRegime {
            expected: "m != 1 + 2/d".into(),
            found: canonical.params.to_string(),
        });
    }
    if !(mass > 0.0 && mass.is_finite()) {
        return Err(Error::InvalidArgument(format!("mass must be positive, got {mass}")));
    }
    let m = canonical.m();
    let exponent = 1.0 - canonical.params.df() * (m - 1.0) / 2.0;
    let amplitude = (mass / canonical.discrete.mass()).powf(1.0 / exponent);
    let mut s = family_member(canonical, amplitude)?;
    s.mass = mass;
    Ok(s)
}

/// Member `lambda^d W(lambda r)` of the mass-critical family; all members
/// carry the mass of `W`.
pub fn critical_family(canonical: &CanonicalProfile, lambda: f64) -> Result<SteadyState> {
    if canonical.params.regime() != Regime::MassCritical {
        return Err(Error::WrongRegime {
            expected: "m = 1 + 2/d".into(),
            found: canonical.params.to_string(),
        });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("dilation factor must be positive, got {lambda}")));
    }
    family_member(canonical, lambda.powi(canonical.params.d() as i32))
}

/// `(sqrt(d(d-2)) lambda / (lambda^2 + r^2))^{(d-2)/2}` at radius `r`.
pub fn aubin_talenti_value(d: u32, lambda: f64, r: f64) -> f64 {
    let df = d as f64;
    ((df * (df - 2.0)).sqrt() * lambda / (lambda * lambda + r * r)).powf((df - 2.0) / 2.0)
}

/// The energy-critical bubble sampled on `grid`.
pub fn aubin_talenti(d: u32, lambda: f64, grid: &RadialGrid) -> Result<RadialProfile> {
    if d < 3 {
        return Err(Error::InvalidDimension(d));
    }
    if grid.d() != d {
        return Err(Error::InvalidGrid(format!("grid dimension {} != {d}", grid.d())));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!("bubble scale must be positive, got {lambda}")));
    }
    RadialProfile::from_fn(*grid, |r| aubin_talenti_value(d, lambda, r))
}

/// `int u^{2d/(d-2)} dx` of the bubble, `omega (d(d-2))^{d/2} B(d/2, d/2) / 2`,
/// independent of `lambda`.
pub fn aubin_talenti_critical_integral(d: u32) -> f64 {
    let df = d as f64;
    let half = |k: u32| crate::radial::gamma_half(k);
    let beta = half(d) * half(d) / half(2 * d);
    crate::radial::sphere_area(d) * (df * (df - 2.0)).powf(df / 2.0) * beta / 2.0
}

/// Grid whose radius cuts at most a fraction `tail_tol` of the critical
/// `L^{2d/(d-2)}` integral, from the decay `u <= c r^{2-d}`.
pub fn aubin_talenti_grid(d: u32, lambda: f64, n: usize, tail_tol: f64) -> Result<RadialGrid> {
    let df = d as f64;
    let half = |k: u32| crate::radial::gamma_half(k);
    let beta = half(d) * half(d) / half(2 * d);
    let r_max = lambda * (2.0 / (df * beta * tail_tol)).powf(1.0 / df);
    RadialGrid::new(d, r_max, n)
}

/// `sup |mu_i - c_bar| / |c_bar|` over support nodes away from the wall.
pub fn steady_residual_of(u: &RadialProfile, m: f64, c_bar: f64) -> f64 {
    let mu = chemical_potential(u, m);
    let n = u.grid().n();
    u.values()
        .iter()
        .zip(&mu)
        .take(n - 1)
        .filter(|(v, _)| **v > 0.0)
        .map(|(_, x)| (x - c_bar).abs())
        .fold(0.0, f64::max)
        / c_bar.abs()
}

pub fn steady_residual(s: &SteadyState) -> f64 {
    steady_residual_of(&s.profile, s.m(), s.c_bar)
}

/// Largest relative deviation of `mu` from its mean on `{u > theta max u}`.
pub fn potential_spread(u: &RadialProfile, m: f64, theta: f64) -> f64 {
    let mu = chemical_potential(u, m);
    let cut = theta * u.max();
    let n = u.grid().n();
    let sel: Vec<f64> = u
        .values()
        .iter()
        .zip(&mu)
        .take(n - 1)
        .filter(|(v, _)| **v > cut)
        .map(|(_, x)| *x)
        .collect();
    if sel.is_empty() {
        return 0.0;
    }
    let mean = sel.iter().sum::<f64>() / sel.len() as f64;
    sel.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max) / mean.abs()
}

/// `|(d+2)/2 |grad u|^2 - dm/(m+1) |u|^{m+1}| / (dm/(m+1) |u|^{m+1})`.
pub fn pohozaev_residual(u: &RadialProfile, m: f64) -> f64 {
    let d = u.d() as f64;
    let potential = d * m / (m + 1.0) * lp_integral(u, m + 1.0);
    ((d + 2.0) / 2.0 * grad_l2_squared(u) - potential).abs() / potential
}

/// Constant predicted for the chemical potential from mass and the
/// `L^{m+1}` norm: `((d-2)m - (d+2)) / ((d+2)(m+1)) |U|^{m+1} / M`.
pub fn predicted_c_bar(u: &RadialProfile, m: f64) -> f64 {
    let d = u.d() as f64;
    ((d - 2.0) * m - (d + 2.0)) / ((d + 2.0) * (m + 1.0)) * lp_integral(u, m + 1.0) / u.mass()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScanOutcome {
    Crossing { r0: f64, slope: f64 },
    Turnaround { r_turn: f64, w_min: f64 },
    Failed { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub a: f64,
    pub outcome: ScanOutcome,
    /// Signed contact value, absent for failed shots.
    pub contact: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub params: ModelParams,
    pub rows: Vec<ScanRow>,
    pub min_abs_contact: Option<f64>,
    /// First adjacent pair of heights whose contact values change sign.
    pub sign_change: Option<(f64, f64)>,
}

impl NonexistenceReport {
    pub fn sign_changes(&self) -> usize {
        let signs: Vec<f64> = self.rows.iter().filter_map(|r| r.contact).collect();
        signs.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
    }
}

/// `count` heights spaced logarithmically in `a - 1` over `[lo, hi]`.
pub fn log_sweep(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (x0, x1) = ((lo - 1.0).ln(), (hi - 1.0).ln());
            (0..count)
                .map(|j| 1.0 + (x0 + (x1 - x0) * j as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Tabulates the contact value over `heights`.
pub fn nonexistence_scan(params: &ModelParams, heights: &[f64], h: f64) -> NonexistenceReport {
    let settings = ShotSettings::with_step(h);
    let m = params.m();
    let rows: Vec<ScanRow> = heights
        .iter()
        .map(|&a| match shoot(params, a, &settings, false) {
            Ok((end, _)) => ScanRow {
                a,
                contact: Some(end.contact_value(m)),
                outcome: match end {
                    ShotEnd::Crossing { r0, slope } => ScanOutcome::Crossing { r0, slope },
                    ShotEnd::Turnaround { r_turn, w_min } => ScanOutcome::Turnaround { r_turn, w_min },
                },
            },
            Err(e) => ScanRow { a, contact: None, outcome: ScanOutcome::Failed { reason: e.to_string() } },
        })
        .collect();
    let min_abs_contact = rows.iter().filter_map(|r| r.contact).map(f64::abs).reduce(f64::min);
    let valid: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.contact.map(|c| (r.a, c))).collect();
    let sign_change = valid
        .windows(2)
        .find(|w| (w[0].1 > 0.0) != (w[1].1 > 0.0))
        .map(|w| (w[0].0, w[1].0));
    NonexistenceReport { params: *params, rows, min_abs_contact, sign_change }
}
