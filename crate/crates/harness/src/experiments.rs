//! Batch experiments: steady solves with gates, GNS reports, threshold
//! dichotomy tables, regime sweeps and energy landscapes.

use std::fmt;

use anyhow::{bail, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thinfilm_core::dynamics::{
    evolve, hypothesis_check, second_moment_audit, Evolution, HypothesisCheck, NormSide, OutcomeTag,
};
use thinfilm_core::radial::{dilate_mass_invariant, free_energy, lp_norm};
use thinfilm_core::steady::{
    critical_family, log_sweep, nonexistence_scan, pohozaev_residual, rescale_to_mass, solve_canonical,
    steady_residual, CanonicalProfile, SteadyState,
};
use thinfilm_core::variational::{extremal_checks, g_aux, random_bump, verify_gns, ExtremalChecks, GnsReport};
use thinfilm_core::{classify_regime, Error as CoreError, Exponent, ModelParams, Regime};

use crate::config::{ExperimentConfig, GridSettings};

/// Largest accepted `steady_residual` of an emitted steady state.
pub const STEADY_GATE: f64 = 1e-6;
/// Largest accepted Pohozaev residual of an emitted steady state.
pub const POHOZAEV_GATE: f64 = 1e-3;

/// The request is well formed but its mathematical hypotheses do not hold.
#[derive(Debug, Clone, PartialEq)]
pub struct Refusal(pub String);

impl fmt::Display for Refusal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "refused: {}", self.0)
    }
}

impl std::error::Error for Refusal {}

/// True for errors that mean "hypotheses unmet" rather than "software failed".
pub fn is_refusal(err: &anyhow::Error) -> bool {
    err.downcast_ref::<Refusal>().is_some()
        || matches!(
            err.downcast_ref::<CoreError>(),
            Some(CoreError::WrongRegime { .. } | CoreError::NoZeroContactAngle { .. })
        )
}

/// A gated steady state together with the canonical profile it came from.
#[derive(Debug, Clone)]
pub struct SteadyBundle {
    pub canonical: CanonicalProfile,
    pub steady: SteadyState,
    pub steady_residual: f64,
    pub pohozaev_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySummary {
    pub d: u32,
    pub m: Exponent,
    pub regime: Regime,
    pub mass: f64,
    pub a_star: f64,
    pub amplitude: f64,
    pub support_radius: f64,
    pub contact_slope: f64,
    pub p_star_measured: f64,
    pub c_bar: f64,
    pub free_energy: f64,
    pub steady_residual: f64,
    pub pohozaev_residual: f64,
}

impl SteadyBundle {
    pub fn summary(&self) -> SteadySummary {
        let p = self.steady.params;
        SteadySummary {
            d: p.d(),
            m: p.exponent(),
            regime: p.regime(),
            mass: self.steady.mass,
            a_star: self.canonical.a_star,
            amplitude: self.steady.amplitude,
            support_radius: self.steady.support_radius,
            contact_slope: self.canonical.contact_slope,
            p_star_measured: self.steady.p_star_measured,
            c_bar: self.steady.c_bar,
            free_energy: free_energy(&self.steady.profile, p.m()),
            steady_residual: self.steady_residual,
            pohozaev_residual: self.pohozaev_residual,
        }
    }
}

/// Solves the canonical profile, scales it to `mass` (the mass-critical family
/// has a single mass, so there `mass` is ignored) and applies both gates.
pub fn prepare_steady(params: &ModelParams, mass: f64, grid: &GridSettings) -> Result<SteadyBundle> {
    let canonical = solve_canonical(params, &grid.canonical_options())?;
    let steady = if params.is_mass_critical() {
        critical_family(&canonical, 1.0)?
    } else {
        rescale_to_mass(&canonical, mass)?
    };
    let res = steady_residual(&steady);
    let poh = pohozaev_residual(&steady.profile, params.m());
    if !(res < STEADY_GATE && poh < POHOZAEV_GATE) {
        bail!("steady state for {params} failed its gates: residual {res:e}, Pohozaev {poh:e}");
    }
    Ok(SteadyBundle { canonical, steady, steady_residual: res, pohozaev_residual: poh })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomGnsSuite {
    pub seed: u64,
    pub samples: usize,
    pub max_ratio: f64,
    /// Every sample satisfied `J(u) <= C*`.
    pub all_hold: bool,
    /// Every sample satisfied `g(|u|_{m+1}) <= F(u)` at its own mass.
    pub trapping_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnsSummary {
    pub report: GnsReport,
    pub extremal: ExtremalChecks,
    pub random: RandomGnsSuite,
}

/// GNS constant and thresholds, extremal checks on the steady state and a
/// seeded suite of random competitors.
pub fn gns_summary(bundle: &SteadyBundle, samples: usize, seed: u64) -> Result<GnsSummary> {
    let params = bundle.steady.params;
    let m = params.m();
    let report = GnsReport::compute(&bundle.canonical, bundle.steady.mass)?;
    let extremal = extremal_checks(&bundle.steady.profile, m, report.c_star)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid = *bundle.steady.profile.grid();
    let mut suite = RandomGnsSuite { seed, samples, max_ratio: 0.0, all_hold: true, trapping_holds: true };
    for _ in 0..samples {
        let u = random_bump(&mut rng, &grid);
        let check = verify_gns(&u, m, report.c_star, 0.0)?;
        suite.max_ratio = suite.max_ratio.max(check.ratio);
        suite.all_hold &= check.holds;
        if !params.is_mass_critical() {
            let f = free_energy(&u, m);
            let x = lp_norm(&u, m + 1.0)?;
            suite.trapping_holds &= g_aux(x, report.c_star, u.mass(), &params) <= f + 1e-12 * f.abs();
        }
    }
    Ok(GnsSummary { report, extremal, random: suite })
}

/// Which statement, if any, covers a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// `F(u0) < F(U*)` with a definite norm side.
    Theorem,
    /// `|u0|_{m+1} = P*` within tolerance, e.g. `u0 = U*`.
    AtThreshold,
    /// `F(u0) >= F(U*)`; nothing is asserted.
    Exploratory,
}

impl Scope {
    pub fn of(check: &HypothesisCheck) -> Self {
        if check.refusal.is_some() {
            Scope::AtThreshold
        } else if check.f_below {
            Scope::Theorem
        } else {
            Scope::Exploratory
        }
    }

    pub fn describe(&self) -> &'static str {
        match self {
            Scope::Theorem => "threshold theorem applies",
            Scope::AtThreshold => "at threshold / outside scope",
            Scope::Exploratory => "exploratory, no theorem claim",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Confirmed,
    Contradicted,
    NotAsserted,
}

/// Shape checks on a trajectory used by the dichotomy verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryShape {
    pub m2_strictly_decreasing: bool,
    /// `m2` strictly increases over the second half of the samples.
    pub m2_increasing_late: bool,
    pub lp_below_p_star: bool,
}

impl TrajectoryShape {
    pub fn of(ev: &Evolution, p_star: f64) -> Self {
        let s = &ev.samples;
        Self {
            m2_strictly_decreasing: s.len() > 1 && s.windows(2).all(|w| w[1].m2 < w[0].m2),
            m2_increasing_late: s.len() > 2 && s[s.len() / 2..].windows(2).all(|w| w[1].m2 > w[0].m2),
            lp_below_p_star: s.iter().all(|x| x.lp_m1 < p_star),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub lambda: f64,
    pub f_u0: f64,
    pub f_steady: f64,
    pub norm_u0: f64,
    pub p_star: f64,
    pub f_below: bool,
    pub norm_side: NormSide,
    pub scope: Scope,
    pub predicted: Option<OutcomeTag>,
    pub outcome: OutcomeTag,
    pub t_end: f64,
    pub steps: usize,
    pub m2_strictly_decreasing: bool,
    pub m2_increasing_late: bool,
    pub lp_below_p_star: bool,
    pub max_mass_drift: f64,
    pub second_moment_audit: Option<f64>,
    pub verdict: Verdict,
}

/// One dilated run: hypothesis check, evolution and verdict.
pub struct DilationRun {
    pub row: DichotomyRow,
    pub check: HypothesisCheck,
    pub evolution: Evolution,
}

pub fn dilation_run(config: &ExperimentConfig, bundle: &SteadyBundle, gns: &GnsReport, lambda: f64) -> Result<DilationRun> {
    let steady = &bundle.steady;
    let m = steady.m();
    let u0 = dilate_mass_invariant(&steady.profile, lambda)?;
    let check = hypothesis_check(&u0, steady, gns)?;
    let evolution = evolve(&u0, m, &config.evolution.resolve(&u0, m))?;
    let shape = TrajectoryShape::of(&evolution, check.p_star);
    let scope = Scope::of(&check);
    let predicted = check.predicted();
    let outcome = evolution.outcome.tag;
    let verdict = match predicted {
        None => Verdict::NotAsserted,
        Some(OutcomeTag::BlowUp) if outcome == OutcomeTag::BlowUp && shape.m2_strictly_decreasing => {
            Verdict::Confirmed
        }
        Some(OutcomeTag::Global)
            if outcome == OutcomeTag::Global && shape.lp_below_p_star && shape.m2_increasing_late =>
        {
            Verdict::Confirmed
        }
        Some(_) => Verdict::Contradicted,
    };
    let row = DichotomyRow {
        lambda,
        f_u0: check.f_u0,
        f_steady: check.f_steady,
        norm_u0: check.norm_u0,
        p_star: check.p_star,
        f_below: check.f_below,
        norm_side: check.norm_side,
        scope,
        predicted,
        outcome,
        t_end: evolution.outcome.t_end,
        steps: evolution.steps,
        m2_strictly_decreasing: shape.m2_strictly_decreasing,
        m2_increasing_late: shape.m2_increasing_late,
        lp_below_p_star: shape.lp_below_p_star,
        max_mass_drift: evolution.max_mass_drift,
        second_moment_audit: second_moment_audit(&evolution.samples, &steady.params).ok(),
        verdict,
    };
    Ok(DilationRun { row, check, evolution })
}

pub struct ThresholdRun {
    pub steady: SteadySummary,
    pub gns: GnsReport,
    /// Sorted by `lambda`.
    pub runs: Vec<DilationRun>,
}

impl ThresholdRun {
    pub fn rows(&self) -> Vec<DichotomyRow> {
        self.runs.iter().map(|r| r.row.clone()).collect()
    }

    /// Theorem-scope rows whose outcome contradicts the prediction.
    pub fn contradictions(&self) -> Vec<f64> {
        self.runs.iter().filter(|r| r.row.verdict == Verdict::Contradicted).map(|r| r.row.lambda).collect()
    }
}

/// Requires `1 + 2/d < m < (d+2)/(d-2)`. Solves `U*` once and runs every
/// dilation concurrently; rows come back sorted by `lambda`.
pub fn threshold_experiment(config: &ExperimentConfig) -> Result<ThresholdRun> {
    config.validate()?;
    let params = config.params()?;
    if params.regime() != Regime::Supercritical {
        return Err(Refusal(format!(
            "the threshold dichotomy needs 1 + 2/d < m < (d+2)/(d-2); {params} is {:?}",
            params.regime()
        ))
        .into());
    }
    let bundle = prepare_steady(&params, config.mass, &config.grid)?;
    let gns = GnsReport::compute(&bundle.canonical, config.mass)?;
    let mut lambdas = config.lambdas.clone();
    lambdas.sort_by(f64::total_cmp);
    let runs = lambdas
        .par_iter()
        .map(|&l| dilation_run(config, &bundle, &gns, l))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThresholdRun { steady: bundle.summary(), gns, runs })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub d: u32,
    pub m: Exponent,
    pub regime: Regime,
    pub mass_critical: f64,
    pub energy_critical: f64,
    pub alpha: f64,
    /// `solved`, `no_zero_contact_angle` or `failed`.
    pub status: String,
    pub a_star: Option<f64>,
    pub support_radius: Option<f64>,
    pub c_star: Option<f64>,
    pub p_star: Option<f64>,
    pub m_c: Option<f64>,
    pub f_floor: Option<f64>,
    pub f_steady: Option<f64>,
    pub steady_residual: Option<f64>,
    pub pohozaev_residual: Option<f64>,
    /// Scan evidence for rows without a steady state.
    pub min_abs_contact: Option<f64>,
    pub sign_changes: Option<usize>,
    pub note: String,
}

/// Heights scanned when no zero-contact-angle profile is found.
pub fn nonexistence_heights() -> Vec<f64> {
    log_sweep(1.01, 1e4, 80)
}

fn regime_row(params: ModelParams, mass: f64, grid: &GridSettings) -> RegimeRow {
    let report = classify_regime(&params);
    let mut row = RegimeRow {
        d: params.d(),
        m: params.exponent(),
        regime: report.regime,
        mass_critical: report.mass_critical,
        energy_critical: report.energy_critical,
        alpha: report.alpha,
        status: "solved".into(),
        a_star: None,
        support_radius: None,
        c_star: None,
        p_star: None,
        m_c: None,
        f_floor: None,
        f_steady: None,
        steady_residual: None,
        pohozaev_residual: None,
        min_abs_contact: None,
        sign_changes: None,
        note: String::new(),
    };
    let bundle = match prepare_steady(&params, mass, grid) {
        Ok(b) => b,
        Err(e) => {
            if let Some(CoreError::NoZeroContactAngle { .. }) = e.downcast_ref::<CoreError>() {
                let scan = nonexistence_scan(&params, &nonexistence_heights(), grid.canonical_options().shoot_step);
                row.status = "no_zero_contact_angle".into();
                row.min_abs_contact = scan.min_abs_contact;
                row.sign_changes = Some(scan.sign_changes());
            } else {
                row.status = "failed".into();
            }
            row.note = e.to_string();
            return row;
        }
    };
    let s = bundle.summary();
    row.a_star = Some(s.a_star);
    row.support_radius = Some(s.support_radius);
    row.f_steady = Some(s.free_energy);
    row.steady_residual = Some(s.steady_residual);
    row.pohozaev_residual = Some(s.pohozaev_residual);
    match GnsReport::compute(&bundle.canonical, bundle.steady.mass) {
        Ok(g) => {
            row.c_star = Some(g.c_star);
            row.p_star = g.p_star;
            row.m_c = g.m_c;
            row.f_floor = Some(g.f_floor);
        }
        Err(e) => row.note = e.to_string(),
    }
    row
}

/// One row per `(d, m)`, in the order given, computed concurrently.
pub fn regime_sweep(dims: &[u32], exponents: &[Exponent], mass: f64, grid: &GridSettings) -> Result<Vec<RegimeRow>> {
    let params = dims
        .iter()
        .flat_map(|&d| exponents.iter().map(move |&m| ModelParams::new(d, m)))
        .collect::<thinfilm_core::Result<Vec<_>>>()?;
    Ok(params.par_iter().map(|&p| regime_row(p, mass, grid)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub x: f64,
    pub g: f64,
    pub above_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Landscape {
    pub d: u32,
    pub m: Exponent,
    pub mass: f64,
    pub c_star: f64,
    pub p_star: f64,
    pub g_p_star: f64,
    pub delta: f64,
    /// `delta g(P*)`.
    pub band_level: f64,
    pub rows: Vec<LandscapeRow>,
}

/// Samples `g` at `xs` plus `P*` itself, sorted.
pub fn energy_landscape(
    params: &ModelParams,
    mass: f64,
    xs: &[f64],
    delta: f64,
    grid: &GridSettings,
) -> Result<Landscape> {
    if params.is_mass_critical() {
        return Err(Refusal("P* is undefined at m = 1 + 2/d".into()).into());
    }
    if !(delta > 0.0 && delta <= 1.0) {
        bail!("delta must lie in (0, 1], got {delta}");
    }
    let bundle = prepare_steady(params, mass, grid)?;
    let gns = GnsReport::compute(&bundle.canonical, mass)?;
    let p_star = gns.p_star.expect("defined away from the mass-critical exponent");
    let g_p_star = g_aux(p_star, gns.c_star, mass, params);
    let band_level = delta * g_p_star;
    let mut points: Vec<f64> = xs.iter().copied().filter(|x| *x >= 0.0 && x.is_finite()).collect();
    points.push(p_star);
    points.sort_by(f64::total_cmp);
    points.dedup();
    let rows = points
        .into_iter()
        .map(|x| {
            let g = g_aux(x, gns.c_star, mass, params);
            LandscapeRow { x, g, above_band: g >= band_level }
        })
        .collect();
    Ok(Landscape {
        d: params.d(),
        m: params.exponent(),
        mass,
        c_star: gns.c_star,
        p_star,
        g_p_star,
        delta,
        band_level,
        rows,
    })
}
