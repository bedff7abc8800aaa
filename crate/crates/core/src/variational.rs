//! Gagliardo–Nirenberg–Sobolev quotient and the constants derived from its
//! optimiser: `C*`, the threshold norm `P*`, the critical mass `M_c` and the
//! energy of the mass-`M` steady state.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::radial::{grad_l2_squared, laplacian_values, lp_integral, RadialGrid, RadialProfile};
use crate::steady::{pohozaev_residual, CanonicalProfile};

fn alpha_of(d: u32, m: f64) -> f64 {
    let d = d as f64;
    (d + 2.0 - (d - 2.0) * m) / (d * m)
}

fn require_subcritical(params: &ModelParams) -> Result<()> {
    if params.is_energy_subcritical() {
        Ok(())
    } else {
        Err(Error::WrongRegime {
            expected: "0 < m < (d+2)/(d-2)".into(),
            found: params.to_string(),
        })
    }
}

fn require_off_mass_critical(params: &ModelParams) -> Result<()> {
    if params.is_mass_critical() {
        Err(Error::WrongRegime { expected: "m != 1 + 2/d".into(), found: params.to_string() })
    } else {
        Ok(())
    }
}

/// `J(u) = |u|_{m+1}^{alpha+2} / (|u|_1^alpha |grad u|_2^2)`.
pub fn j_functional(u: &RadialProfile, m: f64) -> Result<f64> {
    if u.is_zero() {
        return Err(Error::InvalidProfile("J is undefined for the zero profile".into()));
    }
    let grad2 = grad_l2_squared(u);
    if grad2 == 0.0 {
        return Err(Error::InvalidProfile("J is undefined for a profile with zero gradient".into()));
    }
    let alpha = alpha_of(u.d(), m);
    let p = lp_integral(u, m + 1.0).powf(1.0 / (m + 1.0));
    Ok(p.powf(alpha + 2.0) / (u.mass().powf(alpha) * grad2))
}

/// Optimal constant, evaluated at the canonical extremal.
pub fn gns_constant(canonical: &CanonicalProfile) -> Result<f64> {
    require_subcritical(&canonical.params)?;
    j_functional(&canonical.discrete, canonical.m())
}

/// `P* = ((alpha + 2) / (2 C* M^alpha))^{1/(m - alpha - 1)}`.
pub fn p_star(c_star: f64, mass: f64, params: &ModelParams) -> Result<f64> {
    require_off_mass_critical(params)?;
    let (m, alpha) = (params.m(), params.alpha());
    Ok(((alpha + 2.0) / (2.0 * c_star * mass.powf(alpha))).powf(1.0 / (m - alpha - 1.0)))
}

/// `M_c = ((m + 1) / (2 C*))^{d/2}`, defined at `m = 1 + 2/d` only.
pub fn critical_mass(c_star: f64, params: &ModelParams) -> Result<f64> {
    if !params.is_mass_critical() {
        return Err(Error::WrongRegime { expected: "m = 1 + 2/d".into(), found: params.to_string() });
    }
    Ok(((params.m() + 1.0) / (2.0 * c_star)).powf(params.df() / 2.0))
}

/// Coefficient `(dm - (d+2)) / ((d+2)(m+1))` linking `F(U)` to `|U|_{m+1}^{m+1}`.
pub fn energy_coefficient(params: &ModelParams) -> f64 {
    let (d, m) = (params.df(), params.m());
    (d * m - (d + 2.0)) / ((d + 2.0) * (m + 1.0))
}

/// Free energy of the steady state with `|U|_{m+1} = P*`.
pub fn energy_floor(p_star: f64, params: &ModelParams) -> f64 {
    energy_coefficient(params) * p_star.powf(params.m() + 1.0)
}

/// `g(x) = x^{alpha+2} / (2 C* M^alpha) - x^{m+1} / (m+1)`, the lower bound
/// of `F` in terms of the `L^{m+1}` norm.
pub fn g_aux(x: f64, c_star: f64, mass: f64, params: &ModelParams) -> f64 {
    let (m, alpha) = (params.m(), params.alpha());
    x.powf(alpha + 2.0) / (2.0 * c_star * mass.powf(alpha)) - x.powf(m + 1.0) / (m + 1.0)
}

pub fn g_aux_derivative(x: f64, c_star: f64, mass: f64, params: &ModelParams) -> f64 {
    let (m, alpha) = (params.m(), params.alpha());
    (alpha + 2.0) * x.powf(alpha + 1.0) / (2.0 * c_star * mass.powf(alpha)) - x.powf(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnsCheck {
    /// `J(u) / C*`.
    pub ratio: f64,
    pub holds: bool,
}

/// Checks `|u|_{m+1}^{alpha+2} <= C* (1 + tol) |u|_1^alpha |grad u|^2`.
pub fn verify_gns(u: &RadialProfile, m: f64, c_star: f64, tol: f64) -> Result<GnsCheck> {
    let ratio = j_functional(u, m)? / c_star;
    Ok(GnsCheck { ratio, holds: ratio <= 1.0 + tol })
}

/// Relative residual of the Euler–Lagrange equation of `J` at `v`,
/// `-Lap v = c1 v^m - c0`, over support nodes with `v > theta max v`.
pub fn euler_lagrange_residual(v: &RadialProfile, m: f64, c_star: f64, theta: f64) -> f64 {
    let alpha = alpha_of(v.d(), m);
    let p = lp_integral(v, m + 1.0).powf(1.0 / (m + 1.0));
    let mass = v.mass();
    let c1 = (alpha + 2.0) / 2.0 * p.powf(alpha + 1.0 - m) / (mass.powf(alpha) * c_star);
    let c0 = alpha / 2.0 * p.powf(alpha + 2.0) / (mass.powf(alpha + 1.0) * c_star);
    let lap = laplacian_values(v.grid(), v.values());
    let cut = theta * v.max();
    let n = v.grid().n();
    let scale = c0.abs().max(c1 * v.max().powf(m));
    v.values()
        .iter()
        .zip(&lap)
        .take(n - 1)
        .filter(|(x, _)| **x > cut)
        .map(|(&x, &l)| (-l - c1 * x.powf(m) + c0).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Variational constants for `(d, m, M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnsReport {
    pub params: ModelParams,
    pub alpha: f64,
    pub c_star: f64,
    pub mass: f64,
    /// Absent at `m = 1 + 2/d`.
    pub p_star: Option<f64>,
    pub f_floor: f64,
    /// Present only at `m = 1 + 2/d`.
    pub m_c: Option<f64>,
}

impl GnsReport {
    pub fn compute(canonical: &CanonicalProfile, mass: f64) -> Result<Self> {
        let params = canonical.params;
        let c_star = gns_constant(canonical)?;
        let (p_star, f_floor, m_c) = if params.is_mass_critical() {
            (None, 0.0, Some(critical_mass(c_star, &params)?))
        } else {
            let p = p_star(c_star, mass, &params)?;
            (Some(p), energy_floor(p, &params), None)
        };
        Ok(Self { params, alpha: params.alpha(), c_star, mass, p_star, f_floor, m_c })
    }
}

/// Identity checks on an extremal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtremalChecks {
    pub pohozaev: f64,
    pub euler_lagrange: f64,
    pub gns_ratio: f64,
}

pub fn extremal_checks(u: &RadialProfile, m: f64, c_star: f64) -> Result<ExtremalChecks> {
    Ok(ExtremalChecks {
        pohozaev: pohozaev_residual(u, m),
        euler_lagrange: euler_lagrange_residual(u, m, c_star, 1e-3),
        gns_ratio: j_functional(u, m)? / c_star,
    })
}

/// Radial bump `amp (1 - ((r - c)/w)^2)^2` on `|r - c| < w`, possibly a sum of
/// two, with randomised centre, width and amplitude.
pub fn random_bump<R: Rng + ?Sized>(rng: &mut R, grid: &RadialGrid) -> RadialProfile {
    let r_max = grid.r_max();
    let bumps = rng.gen_range(1..=2);
    let params: Vec<(f64, f64, f64)> = (0..bumps)
        .map(|_| {
            let width = rng.gen_range(0.1..0.45) * r_max;
            let centre = rng.gen_range(0.0..0.5) * r_max;
            let amp = rng.gen_range(0.1..10.0);
            (centre, width, amp)
        })
        .collect();
    RadialProfile::from_fn(*grid, |r| {
        params
            .iter()
            .map(|&(c, w, a)| {
                let x = (r - c) / w;
                if x.abs() < 1.0 {
                    a * (1.0 - x * x).powi(2)
                } else {
                    0.0
                }
            })
            .sum()
    })
    .expect("bumps are finite and nonnegative")
}
