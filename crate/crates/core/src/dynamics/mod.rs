//! Radial gradient-flow dynamics `u_t = div(u grad mu)`, `mu = -Lap u - u^m`.
//!
//! Time stepping is backward Euler on the conservative finite-volume scheme in
//! [`scheme`]. [`evolve`] adapts the step, samples diagnostics, expands the
//! domain when the support nears the wall and classifies the run. Regrids
//! preserve mass exactly; the energy check restarts from the regridded profile.

mod scheme;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;
use crate::radial::{free_energy, grad_l2_squared, Diagnostics, RadialProfile};
use crate::steady::SteadyState;
use crate::variational::GnsReport;

/// Consecutive rising samples required before a collapsed step counts as blow-up.
pub const RISING_SAMPLES: usize = 10;

/// Relative tolerance below which two thresholds are treated as equal.
pub const HYPOTHESIS_TOL: f64 = 1e-6;

/// Newton iterations up to which a step counts as easy.
const EASY_ITERATIONS: usize = 8;

/// Values below this fraction of `max u` are treated as outside the support.
const SUPPORT_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegridPolicy {
    Fixed,
    /// Double `r_max` once the support passes `theta r_max`.
    Expand { theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_max: f64,
    /// Face mobility floor as a fraction of `max u0`.
    pub mobility_floor: f64,
    /// Newton stops once the update is below `newton_tol max |u|`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Growth factor `kappa` of the norm monitors that flags blow-up.
    pub blowup_norm_factor: f64,
    /// Blow-up is also declared once `max u` exceeds this, when set.
    pub blowup_value_cap: Option<f64>,
    pub regrid: RegridPolicy,
    pub sample_every: usize,
    /// A step is rejected when `F` rises by more than `energy_tol (1 + |F(u0)|)`.
    pub energy_tol: f64,
    /// A step counts as easy, and the next one grows by 1.2, when Newton needs
    /// at most eight iterations and `max |u_new - u_old| <= easy_change max u_old`.
    /// Steps changing `u` by more than twice that shrink the next one by 1.2.
    pub easy_change: f64,
    pub max_steps: usize,
    /// Expansion keeps the spacing while the grid stays within this many
    /// nodes; beyond that it doubles the spacing and keeps the node count.
    pub max_nodes: usize,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-6,
            dt_min: 1e-14,
            dt_max: 1e-2,
            t_max: 1.0,
            mobility_floor: 1e-12,
            newton_tol: 1e-10,
            newton_max_iter: 30,
            blowup_norm_factor: 4.0,
            blowup_value_cap: None,
            regrid: RegridPolicy::Expand { theta: 0.9 },
            sample_every: 1,
            energy_tol: 1e-8,
            easy_change: 5e-3,
            max_steps: 1_000_000,
            max_nodes: 1 << 16,
        }
    }
}

impl EvolutionConfig {
    /// Defaults with step bounds expressed in the intrinsic time of `u0`.
    pub fn scaled_to(u0: &RadialProfile, m: f64, t_max: f64) -> Self {
        let tau = natural_time(u0, m);
        Self {
            dt_init: 1e-3 * tau,
            dt_min: 1e-12 * tau,
            dt_max: (t_max / 200.0).max(1e-3 * tau),
            t_max,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("evolution config: {what}")));
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min <= dt_init <= dt_max");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive and finite");
        }
        if !(self.blowup_norm_factor > 1.0) {
            return bad("blow-up factor must exceed 1");
        }
        if !(self.mobility_floor >= 0.0) || !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("mobility floor, Newton tolerance or iteration cap out of range");
        }
        if let RegridPolicy::Expand { theta } = self.regrid {
            if !(theta > 0.0 && theta < 1.0) {
                return bad("regrid fraction must lie in (0, 1)");
            }
        }
        if self.sample_every == 0 || !(self.energy_tol >= 0.0) || !(self.easy_change > 0.0) {
            return bad("sampling interval, energy tolerance or step controller out of range");
        }
        Ok(())
    }
}

/// Intrinsic time of a profile: the shorter of the fourth-order time
/// `l^4 / A` and the aggregation time `l^2 / A^m`, with `A = max u` and
/// `l^2 = m2 / M`.
pub fn natural_time(u: &RadialProfile, m: f64) -> f64 {
    let amp = u.max();
    if amp == 0.0 {
        return 1.0;
    }
    let diag = Diagnostics::of(u, m);
    let l2 = diag.second_moment / diag.mass;
    (l2 * l2 / amp).min(l2 / amp.powf(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub mass: f64,
    pub lp_m1: f64,
    pub grad_l2: f64,
    pub m2: f64,
    #[serde(rename = "F")]
    pub free_energy: f64,
    pub dissipation: f64,
    /// Step that produced this sample, zero for the initial one.
    pub dt: f64,
    pub max_u: f64,
}

impl TrajectorySample {
    pub fn of(u: &RadialProfile, m: f64, t: f64, dt: f64) -> Self {
        let d = Diagnostics::of(u, m);
        Self {
            t,
            mass: d.mass,
            lp_m1: d.lp_m1,
            grad_l2: d.grad_l2,
            m2: d.second_moment,
            free_energy: d.free_energy,
            dissipation: d.dissipation,
            dt,
            max_u: u.max(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeTag {
    Global,
    BlowUp,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub tag: OutcomeTag,
    pub t_end: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evolution {
    pub samples: Vec<TrajectorySample>,
    pub outcome: Outcome,
    pub final_profile: RadialProfile,
    pub steps: usize,
    pub rejected: usize,
    pub regrids: usize,
    /// Largest `F(u_{k+1}) - F(u_k)` over accepted steps.
    pub max_energy_rise: f64,
    /// Largest `|M(u_k) - M(u_0)| / M(u_0)` over accepted steps.
    pub max_mass_drift: f64,
}

/// One backward-Euler step with the mobility floor taken relative to `max u`.
pub fn step(u: &RadialProfile, m: f64, dt: f64, config: &EvolutionConfig) -> Result<RadialProfile> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {dt}")));
    }
    let s = scheme::Scheme::new(u.grid(), m, config.mobility_floor * u.max());
    let info = s.step(u.values(), dt, config.newton_tol, config.newton_max_iter)?;
    RadialProfile::new(*u.grid(), info.values)
}

/// Why `sample` counts as blow-up relative to the initial sample, if it does.
///
/// `rising` is the number of consecutive samples over which both norm
/// monitors grew; it matters only once the step has collapsed below `dt_min`.
pub fn blowup_reason(
    sample: &TrajectorySample,
    initial: &TrajectorySample,
    config: &EvolutionConfig,
    rising: usize,
) -> Option<String> {
    let k = config.blowup_norm_factor;
    if sample.lp_m1 > k * initial.lp_m1 && sample.grad_l2 > k * initial.grad_l2 {
        return Some(format!("L^(m+1) and gradient norms exceeded {k} times their initial values"));
    }
    if let Some(cap) = config.blowup_value_cap.filter(|&cap| sample.max_u > cap) {
        return Some(format!("max u = {:e} exceeded the cap {cap:e}", sample.max_u));
    }
    if sample.dt < config.dt_min && rising >= RISING_SAMPLES {
        return Some(format!("time step collapsed below {:e} with norms rising over {rising} samples", config.dt_min));
    }
    None
}

pub fn detect_blowup(
    sample: &TrajectorySample,
    initial: &TrajectorySample,
    config: &EvolutionConfig,
    rising: usize,
) -> bool {
    blowup_reason(sample, initial, config, rising).is_some()
}

fn support_radius(u: &RadialProfile) -> f64 {
    let cut = SUPPORT_FLOOR * u.max();
    u.values().iter().rposition(|&v| v > cut).map_or(0.0, |i| u.grid().r(i))
}

/// Integrates from `u0` until `t_max`, detected blow-up or step collapse.
pub fn evolve(u0: &RadialProfile, m: f64, config: &EvolutionConfig) -> Result<Evolution> {
    config.validate()?;
    if !(m > 0.0) {
        return Err(Error::InvalidExponent(m));
    }
    let first = TrajectorySample::of(u0, m, 0.0, 0.0);
    if ![first.lp_m1, first.grad_l2, first.m2, first.free_energy].iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidProfile("initial diagnostics are not finite".into()));
    }
    let eps = config.mobility_floor * u0.max();
    let tol_e = config.energy_tol * (1.0 + first.free_energy.abs());
    let mut scheme = scheme::Scheme::new(u0.grid(), m, eps);
    let mut u = u0.clone();
    let mut samples = vec![first];
    let mut last = first;
    let (mut t, mut dt) = (0.0, config.dt_init);
    let (mut steps, mut rejected, mut regrids, mut rising) = (0, 0, 0, 0);
    let mut f_prev = first.free_energy;
    let mut max_energy_rise = f64::NEG_INFINITY;
    let mut max_mass_drift = 0.0f64;
    let mut since_sample = 0;

    let outcome = loop {
        if t >= config.t_max {
            break Outcome { tag: OutcomeTag::Global, t_end: t, reason: "reached t_max".into() };
        }
        if steps >= config.max_steps {
            break Outcome { tag: OutcomeTag::Inconclusive, t_end: t, reason: "step budget exhausted".into() };
        }
        let dt_try = dt.min(config.t_max - t);
        let attempt = scheme
            .step(u.values(), dt_try, config.newton_tol, config.newton_max_iter)
            .and_then(|info| Ok((RadialProfile::new(*u.grid(), info.values)?, info.iterations)));
        let accepted = match attempt {
            Ok((next, iterations)) => {
                let f = free_energy(&next, m);
                (f <= f_prev + tol_e).then_some((next, iterations, f))
            }
            Err(_) => None,
        };
        let Some((next, iterations, f)) = accepted else {
            rejected += 1;
            dt *= 0.5;
            if dt < config.dt_min {
                let collapsed = TrajectorySample { dt, ..last };
                break match blowup_reason(&collapsed, &first, config, rising) {
                    Some(reason) => Outcome { tag: OutcomeTag::BlowUp, t_end: t, reason },
                    None => Outcome {
                        tag: OutcomeTag::Inconclusive,
                        t_end: t,
                        reason: format!("time step fell below {:e}", config.dt_min),
                    },
                };
            }
            continue;
        };

        let scale = u.max();
        let change = u.values().iter().zip(next.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        max_energy_rise = max_energy_rise.max(f - f_prev);
        f_prev = f;
        u = next;
        t = if config.t_max - (t + dt_try) <= 1e-12 * config.t_max { config.t_max } else { t + dt_try };
        steps += 1;
        max_mass_drift = max_mass_drift.max((u.mass() - first.mass).abs() / first.mass.max(f64::MIN_POSITIVE));
        if dt_try == dt {
            if iterations <= EASY_ITERATIONS && change <= config.easy_change * scale {
                dt = (1.2 * dt).min(config.dt_max);
            } else if change > 2.0 * config.easy_change * scale {
                dt = (dt / 1.2).max(config.dt_min);
            }
        }

        since_sample += 1;
        if since_sample == config.sample_every || t >= config.t_max {
            since_sample = 0;
            let sample = TrajectorySample::of(&u, m, t, dt_try);
            rising = if sample.lp_m1 > last.lp_m1 && sample.grad_l2 > last.grad_l2 { rising + 1 } else { 0 };
            samples.push(sample);
            last = sample;
            if let Some(reason) = blowup_reason(&sample, &first, config, rising) {
                break Outcome { tag: OutcomeTag::BlowUp, t_end: t, reason };
            }
        }

        if let RegridPolicy::Expand { theta } = config.regrid {
            let g = *u.grid();
            if support_radius(&u) >= theta * g.r_max() {
                u = if 2 * g.n() - 1 <= config.max_nodes { scheme::expand(&u)? } else { scheme::coarsen(&u)? };
                scheme = scheme::Scheme::new(u.grid(), m, eps);
                f_prev = free_energy(&u, m);
                regrids += 1;
            }
        }
    };

    Ok(Evolution {
        samples,
        outcome,
        final_profile: u,
        steps,
        rejected,
        regrids,
        max_energy_rise,
        max_mass_drift,
    })
}

/// Right-hand side of the second-moment identity,
/// `2(d+2) F - 2 (dm - (d+2)) / (m+1) |u|_{m+1}^{m+1}`.
pub fn second_moment_rate(s: &TrajectorySample, params: &ModelParams) -> f64 {
    let (d, m) = (params.df(), params.m());
    2.0 * (d + 2.0) * s.free_energy - 2.0 * (d * m - (d + 2.0)) / (m + 1.0) * s.lp_m1.powf(m + 1.0)
}

/// Per interior sample, `|m2' - rate| / ((d+2)|grad u|^2 + 2dm/(m+1) |u|^{m+1})`,
/// with `m2'` the three-point centred difference on the (possibly uneven) sample times.
pub fn second_moment_residuals(samples: &[TrajectorySample], params: &ModelParams) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: samples.len() });
    }
    let (d, m) = (params.df(), params.m());
    Ok(samples
        .windows(3)
        .map(|w| {
            let (h1, h2) = (w[1].t - w[0].t, w[2].t - w[1].t);
            let deriv = -h2 / (h1 * (h1 + h2)) * w[0].m2
                + (h2 - h1) / (h1 * h2) * w[1].m2
                + h1 / (h2 * (h1 + h2)) * w[2].m2;
            let scale = (d + 2.0) * w[1].grad_l2.powi(2) + 2.0 * d * m / (m + 1.0) * w[1].lp_m1.powf(m + 1.0);
            (deriv - second_moment_rate(&w[1], params)).abs() / scale
        })
        .collect())
}

/// Worst relative mismatch of the second-moment identity along a trajectory.
pub fn second_moment_audit(samples: &[TrajectorySample], params: &ModelParams) -> Result<f64> {
    Ok(second_moment_residuals(samples, params)?.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormSide {
    Below,
    Above,
    Tie,
}

/// Position of `u0` relative to the steady state in energy and `L^{m+1}` norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub f_u0: f64,
    /// `F(U*)` by quadrature of the steady profile.
    pub f_steady: f64,
    /// `F(U*)` from the variational formula.
    pub f_floor: f64,
    pub f_below: bool,
    /// `(F(U*) - F(u0)) / (|grad U*|^2 / 2)`; positive when `F(u0) < F(U*)`.
    pub f_margin: f64,
    pub norm_u0: f64,
    pub p_star: f64,
    pub norm_side: NormSide,
    /// `|u0|_{m+1} / P* - 1`.
    pub norm_margin: f64,
    /// Set when no classification is possible.
    pub refusal: Option<String>,
}

impl HypothesisCheck {
    /// Outcome the threshold theorems predict, when their hypotheses hold.
    pub fn predicted(&self) -> Option<OutcomeTag> {
        if self.refusal.is_some() || !self.f_below {
            return None;
        }
        match self.norm_side {
            NormSide::Above => Some(OutcomeTag::BlowUp),
            NormSide::Below => Some(OutcomeTag::Global),
            NormSide::Tie => None,
        }
    }
}

/// Compares `u0` against `U*`. Thresholds come from the steady profile itself
/// so both sides share one quadrature; the formula values are reported alongside.
pub fn hypothesis_check(u0: &RadialProfile, steady: &SteadyState, gns: &GnsReport) -> Result<HypothesisCheck> {
    let m = steady.m();
    if u0.d() != steady.params.d() {
        return Err(Error::InvalidArgument("initial data and steady state live in different dimensions".into()));
    }
    if (u0.mass() / steady.mass - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "initial mass {} differs from the steady-state mass {}",
            u0.mass(),
            steady.mass
        )));
    }
    let f_u0 = free_energy(u0, m);
    let f_steady = free_energy(&steady.profile, m);
    let f_margin = (f_steady - f_u0) / (0.5 * grad_l2_squared(&steady.profile));
    let f_below = f_margin > HYPOTHESIS_TOL;
    let norm_u0 = Diagnostics::of(u0, m).lp_m1;
    let p_star = steady.p_star_measured;
    let norm_margin = norm_u0 / p_star - 1.0;
    let norm_side = if norm_margin.abs() <= HYPOTHESIS_TOL {
        NormSide::Tie
    } else if norm_margin > 0.0 {
        NormSide::Above
    } else {
        NormSide::Below
    };
    let refusal = (norm_side == NormSide::Tie)
        .then(|| "|u0|_{m+1} equals P* within tolerance; no classification".to_string());
    Ok(HypothesisCheck {
        f_u0,
        f_steady,
        f_floor: gns.f_floor,
        f_below,
        f_margin,
        norm_u0,
        p_star,
        norm_side,
        norm_margin,
        refusal,
    })
}
