//! Acceptance suite: one line per criterion, nonzero exit on any failure.
//!
//! Oracles (the `tan R = R` root, closed-form profiles and bubble integrals)
//! are computed here, independently of the library.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thinfilm_core::dynamics::{evolve, second_moment_audit, EvolutionConfig, OutcomeTag, RegridPolicy};
use thinfilm_core::radial::{
    dilate_equation_invariant, dilate_mass_invariant, free_energy, laplacian_values, lp_integral, relative_dissipation,
};
use thinfilm_core::steady::{
    aubin_talenti, aubin_talenti_grid, critical_family, log_sweep, nonexistence_scan, pohozaev_residual,
    potential_spread, predicted_c_bar, rescale_to_mass, solve_canonical, steady_residual, CanonicalOptions,
};
use thinfilm_core::variational::{gns_constant, j_functional, random_bump, GnsReport};
use thinfilm_core::{Error, Exponent, ModelParams, RadialGrid, RadialProfile};
use thinfilm_harness::config::{ExperimentConfig, GridSettings};
use thinfilm_harness::experiments::{prepare_steady, threshold_experiment, Scope, Verdict};

/// Collects failed checks and a summary for one criterion.
#[derive(Default)]
struct Audit {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Audit {
    fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if !ok {
            self.failures.push(what.clone());
        }
        self.notes.push(what);
    }

    fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    fn within(&mut self, elapsed: Duration, limit: Duration) {
        self.check(elapsed < limit, format!("runtime {:.2?} < {:.0?}", elapsed, limit));
    }
}

fn params(d: u32, m: &str) -> ModelParams {
    ModelParams::new(d, m.parse::<Exponent>().unwrap()).unwrap()
}

fn tan_root() -> f64 {
    let (mut lo, mut hi) = (PI + 1e-12, 1.5 * PI - 1e-12);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.tan() - mid < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn closed_form_boundary(a: &mut Audit) {
    let start = Instant::now();
    let c = solve_canonical(&params(3, "1"), &CanonicalOptions::default()).unwrap();
    let elapsed = start.elapsed();
    let root = tan_root();
    let r_err = (c.support_radius - root).abs();
    a.check(r_err < 1e-6, format!("|R - R_tan| = {r_err:.1e} < 1e-6"));
    let big_r = root;
    let exact = |r: f64| match r {
        r if r == 0.0 => 1.0 - big_r / big_r.sin(),
        r if r < big_r => 1.0 - big_r / r * r.sin() / big_r.sin(),
        _ => 0.0,
    };
    let g = c.profile.grid();
    let err = g.nodes().zip(c.profile.values()).map(|(r, v)| (v - exact(r)).abs()).fold(0.0, f64::max);
    a.check(err < 1e-5, format!("profile error {err:.1e} < 1e-5"));
    a.within(elapsed, Duration::from_secs(1));
}

fn identity_suite(a: &mut Audit) {
    let start = Instant::now();
    for (d, m) in [(3, "1"), (3, "5/3"), (3, "2"), (4, "1.2"), (5, "1.1")] {
        let p = params(d, m);
        let c = solve_canonical(&p, &CanonicalOptions::default()).unwrap();
        let s = if p.is_mass_critical() { critical_family(&c, 1.0).unwrap() } else { rescale_to_mass(&c, 1.0).unwrap() };
        let mf = p.m();
        let res = steady_residual(&s);
        let poh = pohozaev_residual(&s.profile, mf);
        let spread = potential_spread(&s.profile, mf, 1e-3);
        let diss = relative_dissipation(&s.profile, mf);
        let c_bar = (s.c_bar / predicted_c_bar(&s.profile, mf) - 1.0).abs();
        a.check(
            res < 1e-4 && poh < 1e-4 && spread < 1e-3 && diss < 1e-6 && c_bar < 1e-4,
            format!("({d},{m}) res {res:.0e} poh {poh:.0e} spread {spread:.0e} diss {diss:.0e} cbar {c_bar:.0e}"),
        );
    }
    a.within(start.elapsed(), Duration::from_secs(30));
}

fn energy_signs(a: &mut Audit) {
    let f = |d: u32, m: &str, opts: CanonicalOptions| {
        let p = params(d, m);
        let c = solve_canonical(&p, &opts).unwrap();
        let s = if p.is_mass_critical() { critical_family(&c, 1.0).unwrap() } else { rescale_to_mass(&c, 1.0).unwrap() };
        free_energy(&s.profile, p.m())
    };
    let sub = f(3, "1", CanonicalOptions::default());
    let crit = f(3, "5/3", CanonicalOptions::with_nodes(16384, 32768));
    let sup = f(3, "2", CanonicalOptions::default());
    a.check(sub < 0.0, format!("F(3,1) = {sub:.3e} < 0"));
    a.check(crit.abs() < 1e-6, format!("|F(3,5/3)| = {:.1e} < 1e-6", crit.abs()));
    a.check(sup > 0.0, format!("F(3,2) = {sup:.3e} > 0"));
}

fn gns_consistency(a: &mut Audit) {
    let p = params(3, "2");
    let c = solve_canonical(&p, &CanonicalOptions::default()).unwrap();
    let c_star = gns_constant(&c).unwrap();
    let s = rescale_to_mass(&c, 1.0).unwrap();
    let ratio = j_functional(&s.profile, 2.0).unwrap() / c_star;
    a.check((ratio - 1.0).abs() < 1e-4, format!("J(U*)/C* - 1 = {:.1e}", ratio - 1.0));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grid = RadialGrid::new(3, 6.0, 600).unwrap();
    let worst = (0..50)
        .map(|_| j_functional(&random_bump(&mut rng, &grid), 2.0).unwrap() / c_star)
        .fold(0.0, f64::max);
    a.check(worst < 1.0, format!("max ratio over 50 bumps {worst:.4}"));

    let report = GnsReport::compute(&c, 1.0).unwrap();
    let p_err = (report.p_star.unwrap() / s.p_star_measured - 1.0).abs();
    a.check(p_err < 1e-3, format!("P* formula vs measured {p_err:.1e}"));

    let pc = params(3, "5/3");
    let cc = solve_canonical(&pc, &CanonicalOptions::default()).unwrap();
    let m_c = GnsReport::compute(&cc, 1.0).unwrap().m_c.unwrap();
    let measured = critical_family(&cc, 1.0).unwrap().mass;
    let m_err = (measured / m_c - 1.0).abs();
    a.check(m_err < 1e-3, format!("M_c formula vs measured {m_err:.1e}"));
}

fn bubble(a: &mut Audit) {
    for d in [3u32, 4] {
        let pow = (d as f64 + 2.0) / (d as f64 - 2.0);
        let res: Vec<f64> = [201, 401, 801]
            .iter()
            .map(|&n| {
                let grid = RadialGrid::new(d, 4.0, n).unwrap();
                let u = aubin_talenti(d, 1.0, &grid).unwrap();
                let lap = laplacian_values(&grid, u.values());
                (0..n)
                    .filter(|&i| grid.r(i) <= 2.0)
                    .map(|i| (-lap[i] - u.values()[i].powf(pow)).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let rates: Vec<f64> = res.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
        a.check(
            rates.iter().all(|r| (1.8..2.3).contains(r)),
            format!("d={d} residual rates {:.2}, {:.2}", rates[0], rates[1]),
        );

        // int u^{2d/(d-2)} = S_d^{d/2}, S_d = d(d-2)/4 |S^d|^{2/d} the sharp Sobolev
        // constant; |S^3| = 2 pi^2 and |S^4| = 8 pi^2 / 3.
        let df = d as f64;
        let sphere = if d == 3 { 2.0 * PI * PI } else { 8.0 * PI * PI / 3.0 };
        let exact = (df * (df - 2.0) / 4.0 * sphere.powf(2.0 / df)).powf(df / 2.0);
        let p = 2.0 * d as f64 / (d as f64 - 2.0);
        let worst = [0.5, 1.0, 2.0]
            .iter()
            .map(|&l| {
                let grid = aubin_talenti_grid(d, l, 1 << 17, 1e-6).unwrap();
                (lp_integral(&aubin_talenti(d, l, &grid).unwrap(), p) / exact - 1.0).abs()
            })
            .fold(0.0, f64::max);
        a.check(worst < 1e-4, format!("d={d} critical norm drift {worst:.1e}"));
    }
}

fn nonexistence(a: &mut Audit) {
    let p = params(3, "6");
    let scan = nonexistence_scan(&p, &log_sweep(1.01, 1e4, 80), CanonicalOptions::default().shoot_step);
    let failed = scan.rows.iter().filter(|r| r.contact.is_none()).count();
    a.check(scan.sign_changes() == 0 && failed == 0, format!("{} heights, {} sign changes", scan.rows.len(), scan.sign_changes()));
    a.note(format!("min |contact| = {:.3}", scan.min_abs_contact.unwrap_or(f64::NAN)));
    let res = solve_canonical(&p, &CanonicalOptions::default());
    a.check(matches!(res, Err(Error::NoZeroContactAngle { .. })), "solve_canonical reports NoZeroContactAngle");
}

fn spreading_run(a: &mut Audit) {
    let p = params(3, "2");
    let bundle = prepare_steady(&p, 1.0, &GridSettings::default()).unwrap();
    let u0 = dilate_mass_invariant(&bundle.steady.profile, 0.8).unwrap();
    let config = EvolutionConfig { max_nodes: u0.grid().n(), ..EvolutionConfig::scaled_to(&u0, 2.0, 1.0) };
    let start = Instant::now();
    let ev = evolve(&u0, 2.0, &config).unwrap();
    let elapsed = start.elapsed();
    a.check(u0.grid().n() == 512, format!("n = {}", u0.grid().n()));
    a.check(ev.outcome.tag == OutcomeTag::Global && ev.outcome.t_end == 1.0, format!("{:?} at t = {}", ev.outcome.tag, ev.outcome.t_end));
    a.check(ev.max_mass_drift < 1e-10, format!("mass drift {:.1e}", ev.max_mass_drift));
    let tol = config.energy_tol * (1.0 + ev.samples[0].free_energy.abs());
    let rise = ev.samples.windows(2).map(|w| w[1].free_energy - w[0].free_energy).fold(f64::NEG_INFINITY, f64::max);
    a.check(rise <= tol && ev.max_energy_rise <= tol, format!("max per-step rise of F {rise:.1e} <= {tol:.1e}"));
    let audit = second_moment_audit(&ev.samples, &p).unwrap();
    a.check(audit < 1e-2, format!("second-moment residual {audit:.1e}"));
    a.note(format!("{} steps, {} regrids", ev.steps, ev.regrids));
    a.within(elapsed, Duration::from_secs(120));
}

fn fixed_point(a: &mut Audit) {
    let bundle = prepare_steady(&params(3, "2"), 1.0, &GridSettings::default()).unwrap();
    let u = &bundle.steady.profile;
    let dt = 1e-4;
    let config = EvolutionConfig {
        dt_init: dt,
        dt_min: dt,
        dt_max: dt,
        t_max: 1e3 * dt,
        regrid: RegridPolicy::Fixed,
        ..Default::default()
    };
    let ev = evolve(u, 2.0, &config).unwrap();
    let change = ev.final_profile.sup_distance(u) / u.max();
    a.check(ev.steps == 1000, format!("{} steps of dt = {dt:e}", ev.steps));
    a.check(change < 1e-8, format!("sup change {change:.1e} < 1e-8"));
}

fn dichotomy(a: &mut Audit) {
    let mut config = ExperimentConfig::new(3, Exponent::rational(2, 1));
    config.lambdas = vec![0.7, 0.8, 1.2, 1.25];
    let start = Instant::now();
    let run = threshold_experiment(&config).unwrap();
    let elapsed = start.elapsed();
    for r in &run.runs {
        let row = &r.row;
        a.check(
            row.scope == Scope::Theorem && row.verdict == Verdict::Confirmed,
            format!("lambda {}: {:?} side {:?} -> {:?} ({:?})", row.lambda, row.scope, row.norm_side, row.outcome, row.verdict),
        );
    }
    a.check(run.runs.len() == 4, "four rows");
    a.within(elapsed, Duration::from_secs(600));
}

fn scaling(a: &mut Audit) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_norm: f64 = 0.0;
    let mut worst_j: f64 = 0.0;
    for (d, m) in [(3u32, 2.0), (4, 1.5), (5, 3.0)] {
        let grid = RadialGrid::new(d, 5.0, 400).unwrap();
        let q = d as f64 * (m - 1.0) / 2.0;
        let norm = |u: &RadialProfile| lp_integral(u, q).powf(1.0 / q);
        for _ in 0..5 {
            let u = random_bump(&mut rng, &grid);
            let (n0, j0) = (norm(&u), j_functional(&u, m).unwrap());
            for lambda in [0.3, 1.7, 4.0] {
                let v = dilate_equation_invariant(&u, lambda, m).unwrap();
                let w = dilate_mass_invariant(&u, lambda).unwrap();
                worst_norm = worst_norm.max((norm(&v) / n0 - 1.0).abs());
                for x in [&v, &w] {
                    worst_j = worst_j.max((j_functional(x, m).unwrap() / j0 - 1.0).abs());
                }
            }
        }
    }
    a.check(worst_norm < 1e-6, format!("L^(d(m-1)/2) drift {worst_norm:.1e}"));
    a.check(worst_j < 1e-8, format!("J drift {worst_j:.1e}"));
}

fn main() {
    let criteria: [(&str, fn(&mut Audit)); 10] = [
        ("closed-form free boundary", closed_form_boundary),
        ("steady-state identity suite", identity_suite),
        ("sign of the steady free energy", energy_signs),
        ("GNS consistency", gns_consistency),
        ("Aubin-Talenti bubble", bubble),
        ("nonexistence evidence", nonexistence),
        ("dynamics conservation and dissipation", spreading_run),
        ("steady state is a fixed point", fixed_point),
        ("sharp dichotomy", dichotomy),
        ("scaling invariances", scaling),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let mut audit = Audit::default();
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(|| run(&mut audit)));
        let ok = outcome.is_ok() && audit.failures.is_empty();
        if !ok {
            failed += 1;
        }
        let detail = match outcome {
            Ok(()) if ok => audit.notes.join("; "),
            Ok(()) => format!("failed: {}", audit.failures.join("; ")),
            Err(_) => "panicked".to_string(),
        };
        println!(
            "{} criterion {:2} {name} ({:.1?}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            k + 1,
            start.elapsed()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
