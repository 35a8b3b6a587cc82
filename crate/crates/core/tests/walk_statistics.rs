use electrodiff::corpuscle::{simulate_flux, WalkConfig};
use electrodiff::planck::PlanckSeedSpec;
use electrodiff::PhysicalParams;

fn canonical(seed: u64) -> WalkConfig {
    WalkConfig::new(PlanckSeedSpec::canonical(), seed)
}

#[test]
fn two_sigma_coverage_over_twenty_seeds() {
    let covered = (0..20u64)
        .filter(|&seed| {
            let r = simulate_flux(&canonical(1000 + seed)).unwrap();
            (r.flux_estimate - r.analytic_flux).abs() < 2.0 * r.stderr
        })
        .count();
    assert!(covered >= 16, "covered {covered}/20");
}

#[test]
fn equal_reservoirs_carry_no_flux() {
    let spec = PlanckSeedSpec::relaxed(1.5, 1.5, PhysicalParams::canonical()).unwrap();
    let r = simulate_flux(&WalkConfig::new(spec, 3)).unwrap();
    assert_eq!(r.analytic_flux, 0.0);
    assert!(
        r.flux_estimate.abs() < 3.0 * r.stderr,
        "{} ± {}",
        r.flux_estimate,
        r.stderr
    );
    assert!(r.crossings_per_atau.is_none());
}

#[test]
fn swapping_reservoirs_reverses_flux() {
    let forward = simulate_flux(&canonical(11)).unwrap();
    let spec = PlanckSeedSpec::relaxed(1.0, 2.0, PhysicalParams::canonical()).unwrap();
    let reverse = simulate_flux(&WalkConfig::new(spec, 11)).unwrap();
    assert_eq!(reverse.analytic_flux, -forward.analytic_flux);
    let combined = (forward.stderr.powi(2) + reverse.stderr.powi(2)).sqrt();
    assert!((forward.flux_estimate + reverse.flux_estimate).abs() < 3.0 * combined);
}

#[test]
fn occupancy_profile_is_linear() {
    let cfg = canonical(5);
    let r = simulate_flux(&cfg).unwrap();
    let spec = cfg.spec;
    let n = cfg.cells as f64;
    for (i, (c, se)) in r.mean_concentration.iter().zip(&r.concentration_stderr).enumerate() {
        let expected = spec.c0 + (spec.c1 - spec.c0) * i as f64 / n;
        if i == 0 || i == cfg.cells as usize {
            assert_eq!(*c, expected);
            continue;
        }
        assert!((c - expected).abs() < 3.0 * se, "node {i}: {c} vs {expected} ± {se}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let cfg = canonical(42);
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate_flux(&cfg).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| simulate_flux(&cfg).unwrap());
    assert_eq!(single, many);
}
