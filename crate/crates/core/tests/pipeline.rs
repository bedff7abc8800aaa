use proptest::prelude::*;
use thinfilm_core::dynamics::{self, evolve, hypothesis_check, EvolutionConfig, OutcomeTag, RegridPolicy};
use thinfilm_core::radial::{dilate_mass_invariant, free_energy};
use thinfilm_core::steady::{rescale_to_mass, solve_canonical, CanonicalOptions};
use thinfilm_core::variational::{j_functional, GnsReport};
use thinfilm_core::{classify_regime, ModelParams, RadialGrid, RadialProfile, Regime};

#[test]
fn steady_state_to_threshold_check() {
    let p = ModelParams::new(3, 2.0).unwrap();
    assert_eq!(classify_regime(&p).regime, Regime::Supercritical);
    let c = solve_canonical(&p, &CanonicalOptions::with_nodes(128, 256)).unwrap();
    let gns = GnsReport::compute(&c, 3.0).unwrap();
    let s = rescale_to_mass(&c, 3.0).unwrap();
    assert!((s.profile.mass() - 3.0).abs() < 1e-12);
    assert!((gns.p_star.unwrap() / s.p_star_measured - 1.0).abs() < 1e-3);

    // Dilations keep the mass and move F(u) below F(U*) on either side.
    let f_star = free_energy(&s.profile, 2.0);
    for lambda in [0.9, 1.1] {
        let u0 = dilate_mass_invariant(&s.profile, lambda).unwrap();
        assert!(free_energy(&u0, 2.0) < f_star);
        let h = hypothesis_check(&u0, &s, &gns).unwrap();
        assert_eq!(h.predicted(), Some(if lambda < 1.0 { OutcomeTag::Global } else { OutcomeTag::BlowUp }));
    }
}

#[test]
fn short_spreading_run_dissipates() {
    let g = RadialGrid::new(3, 4.0, 160).unwrap();
    let u0 = RadialProfile::from_fn(g, |r| (1.0 - r * r).max(0.0).powi(2)).unwrap();
    let config = EvolutionConfig { regrid: RegridPolicy::Fixed, ..EvolutionConfig::scaled_to(&u0, 1.0, 1e-2) };
    let ev = evolve(&u0, 1.0, &config).unwrap();
    assert_eq!(ev.outcome.tag, OutcomeTag::Global);
    assert!(ev.max_mass_drift < 1e-12);
    let tol = config.energy_tol * (1.0 + ev.samples[0].free_energy.abs());
    assert!(ev.samples.windows(2).all(|w| w[1].free_energy <= w[0].free_energy + tol));
    assert!(ev.samples.last().unwrap().m2 > ev.samples[0].m2);
}

fn bump(d: u32, amp: f64, width: f64) -> RadialProfile {
    let g = RadialGrid::new(d, 3.0, 120).unwrap();
    RadialProfile::from_fn(g, |r| amp * (1.0 - (r / width).powi(2)).max(0.0).powi(2)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn one_step_conserves_mass(amp in 0.1f64..5.0, width in 0.5f64..2.5, m in 1.0f64..3.0, log_dt in -6.0f64..-2.0) {
        let u = bump(3, amp, width);
        let next = dynamics::step(&u, m, 10f64.powf(log_dt), &EvolutionConfig::default());
        if let Ok(next) = next {
            prop_assert!((next.mass() - u.mass()).abs() <= 1e-12 * u.mass());
            prop_assert!(next.values().iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn j_is_dilation_invariant(d in 3u32..6, amp in 0.1f64..5.0, width in 0.5f64..2.5, lambda in 0.2f64..5.0) {
        let u = bump(d, amp, width);
        let m = 1.0 + 3.0 / d as f64;
        let j = j_functional(&u, m).unwrap();
        let v = dilate_mass_invariant(&u, lambda).unwrap();
        prop_assert!((j_functional(&v, m).unwrap() / j - 1.0).abs() < 1e-10);
        prop_assert!((v.mass() / u.mass() - 1.0).abs() < 1e-12);
    }
}
