//! Acceptance criteria, one PASS/FAIL line each. Runs without the test
//! harness so timings are not disturbed by other tests.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use electrodiff::backlund::{
    apply_b, backward_fluxes, flux_ladder_closed_form, forward_fluxes, iterate, ladder_report, LadderConfig,
};
use electrodiff::corpuscle::{simulate_flux, WalkConfig, MIN_BATCHES, MIN_WALKER_STEPS_PER_BATCH};
use electrodiff::planck::{make_planck_seed, quantization_report, s1_closed_form, PlanckSeedSpec};
use electrodiff::verify::{residual_check, roundtrip_check, roundtrip_check_depth};
use electrodiff::{PhysicalParams, ProfilePoint, SolutionState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

fn canonical_seed() -> SolutionState {
    make_planck_seed(&PlanckSeedSpec::canonical()).unwrap()
}

fn unequal_spec() -> PlanckSeedSpec {
    let params = PhysicalParams {
        d_plus: 2.0,
        d_minus: 1.0,
        ..PhysicalParams::canonical()
    };
    PlanckSeedSpec::new(2.0, 1.0, params).unwrap()
}

fn flux_quantization() -> Check {
    let start = Instant::now();
    let spec = PlanckSeedSpec::canonical();
    let report = ladder_report(&canonical_seed(), -5, 5, &LadderConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let p = spec.params;
    let expected_dj = 4.0 * p.ze() * p.d_plus * (spec.c0 - spec.c1) / p.delta;
    ensure(rel(report.delta_j, expected_dj) < 1e-12, || {
        format!("delta_J {} vs {expected_dj}", report.delta_j)
    })?;
    let j0 = report.row(0).unwrap().j;
    let mut worst = 0.0f64;
    for row in &report.rows {
        let expected = j0 + row.n as f64 * expected_dj;
        let dev = if row.n == 0 {
            (row.j - expected).abs()
        } else {
            rel(row.j, expected)
        };
        worst = worst.max(dev);
    }
    ensure(worst < 1e-12, || format!("max relative deviation {worst:e}"))?;
    within(elapsed, Duration::from_secs(1))?;
    Ok(format!(
        "n in [-5, 5], delta_J = {}, max dev {worst:e}, {elapsed:.2?}",
        report.delta_j
    ))
}

fn charge_quanta() -> Check {
    let report = quantization_report(&PlanckSeedSpec::canonical(), -5, 5).map_err(|e| e.to_string())?;
    let ze = report.ze;
    let mut worst = 0.0f64;
    for row in &report.rows {
        let n = row.n as f64;
        let checks = [
            (row.q, 4.0 * n),
            (row.j_plus_atau.unwrap(), 2.0 * n + 1.0),
            (row.j_minus_atau.unwrap(), 2.0 * n - 1.0),
        ];
        for (got, want) in checks {
            worst = worst.max(rel(got, want));
        }
    }
    ensure(worst < 1e-12, || format!("max relative deviation {worst:e}"))?;
    let up = report.row(1).unwrap();
    let down = report.row(-1).unwrap();
    let (jp, jm) = (up.j_plus_atau.unwrap() * ze, up.j_minus_atau.unwrap() * ze);
    ensure((jp, jm) == (3.0 * ze, ze), || format!("n=1 row ({jp}, {jm})"))?;
    // The n = -1 row is the charge conjugate of n = 1: the species exchange
    // roles, so (-3ze, -ze) is carried by (J_minus, J_plus).
    let (cp, cm) = (down.j_minus_atau.unwrap() * ze, down.j_plus_atau.unwrap() * ze);
    ensure((cp, cm) == (-3.0 * ze, -ze), || {
        format!("n=-1 conjugate row ({cp}, {cm})")
    })?;
    Ok(format!(
        "Q = 4nze and species (2n+1, 2n-1)ze for n in [-5, 5], max dev {worst:e}; n=1 (3ze, ze), n=-1 conjugate (-3ze, -ze)"
    ))
}

fn ladder_solves_system() -> Check {
    let start = Instant::now();
    let seed = canonical_seed();
    let mut worst = 0.0f64;
    for n in -5..=5 {
        let report = residual_check(&iterate(&seed, n), 101, 1e-8).map_err(|e| format!("n={n}: {e}"))?;
        ensure(report.pass, || {
            format!("n={n} max residual {:e}", report.max_residual())
        })?;
        worst = worst.max(report.max_residual());
    }
    let s1 = apply_b(&seed);
    let perturbed = {
        let s1 = s1.clone();
        SolutionState::from_fn(*s1.params(), s1.phi_plus(), s1.phi_minus(), "perturbed", move |x| {
            let mut p = s1.eval(x).unwrap();
            p.field *= 1.01;
            p
        })
        .unwrap()
    };
    let caught = residual_check(&perturbed, 101, 1e-8).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(!caught.pass, || "1% field perturbation passed verification".into())?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "|n| <= 5 max residual {worst:e}; perturbed E residual {:e} rejected; {elapsed:.2?}",
        caught.max_residual()
    ))
}

fn closed_form_first_member() -> Check {
    let spec = PlanckSeedSpec::canonical();
    let s1 = apply_b(&make_planck_seed(&spec).unwrap());
    let closed = s1_closed_form(&spec).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for x in s1.grid(1000) {
        let p = s1.eval(x).map_err(|e| e.to_string())?;
        worst = worst
            .max(rel(p.field, closed.field(x)))
            .max(rel(p.c_plus, closed.c_plus(x)));
    }
    ensure(worst < 1e-12, || format!("max relative deviation {worst:e}"))?;
    Ok(format!("1000 points, max relative deviation {worst:e}"))
}

fn synthetic_state(rng: &mut ChaCha8Rng) -> SolutionState {
    let params = PhysicalParams {
        d_plus: rng.random_range(0.2..5.0),
        d_minus: rng.random_range(0.2..5.0),
        ..PhysicalParams::canonical()
    };
    let (a, b, k) = (
        rng.random_range(1.0..4.0),
        rng.random_range(0.0..0.9),
        rng.random_range(0.5..6.0),
    );
    let (c, e0, e1) = (
        rng.random_range(0.5..4.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    let (phi_p, phi_m) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
    SolutionState::from_fn(params, phi_p, phi_m, "synthetic", move |x| ProfilePoint {
        c_plus: a * (1.0 + b * (k * x).sin()),
        c_minus: c * (1.0 + 0.5 * b * (k * x).cos()),
        field: e0 + e1 * x * x,
    })
    .unwrap()
}

fn inverse_property() -> Check {
    let mut worst = roundtrip_check(&canonical_seed(), 1000, 1e-12).map_err(|e| e.to_string())?;
    ensure(worst.pass, || format!("seed deviation {:e}", worst.max_deviation))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..20 {
        let r = roundtrip_check(&synthetic_state(&mut rng), 1000, 1e-12).map_err(|e| e.to_string())?;
        ensure(r.pass, || {
            format!("synthetic state {i}: deviation {:e}", r.max_deviation)
        })?;
        if r.max_deviation > worst.max_deviation {
            worst = r;
        }
    }
    let deep = roundtrip_check_depth(&canonical_seed(), 5, 1000, 1e-10).map_err(|e| e.to_string())?;
    ensure(deep.pass, || format!("depth-5 deviation {:e}", deep.max_deviation))?;
    Ok(format!(
        "seed + 20 synthetic states max deviation {:e}; depth 5 {:e}",
        worst.max_deviation, deep.max_deviation
    ))
}

fn closed_form_fluxes() -> Check {
    let mut worst = 0.0f64;
    for spec in [PlanckSeedSpec::canonical(), unequal_spec()] {
        let seed = make_planck_seed(&spec).unwrap();
        let params = spec.params;
        for n in -10i32..=10 {
            let step = if n >= 0 { forward_fluxes } else { backward_fluxes };
            let (p, m) =
                (0..n.unsigned_abs()).fold((seed.phi_plus(), seed.phi_minus()), |(p, m), _| step(&params, p, m));
            let (cp, cm) = flux_ladder_closed_form(&seed, n);
            let engine = iterate(&seed, n);
            for (got, want) in [(p, cp), (m, cm), (engine.phi_plus(), cp), (engine.phi_minus(), cm)] {
                let dev = if want == 0.0 { got.abs() } else { rel(got, want) };
                worst = worst.max(dev);
            }
        }
    }
    ensure(worst < 1e-12, || format!("max relative deviation {worst:e}"))?;
    Ok(format!("|n| <= 10, D = (1, 1) and (2, 1), max deviation {worst:e}"))
}

fn corpuscular_flux() -> Check {
    let start = Instant::now();
    let cfg = WalkConfig::new(PlanckSeedSpec::canonical(), 42);
    let r = simulate_flux(&cfg).map_err(|e| e.to_string())?;
    ensure(
        cfg.batches >= MIN_BATCHES && r.batch_fluxes.len() == cfg.batches as usize,
        || format!("{} batches", r.batch_fluxes.len()),
    )?;
    let per_walker = cfg.spec.c0 / cfg.walkers_per_cell_scale as f64;
    let walkers: f64 = r.mean_concentration[1..cfg.cells as usize]
        .iter()
        .map(|c| c / per_walker)
        .sum();
    let walker_steps = walkers * r.steps_per_batch as f64;
    ensure(walker_steps >= MIN_WALKER_STEPS_PER_BATCH, || {
        format!("{walker_steps:e} walker-steps per batch")
    })?;
    ensure(r.z_score.abs() < 3.0, || format!("flux z = {}", r.z_score))?;
    let crossings = r.crossings_per_atau.unwrap();
    let crossings_se = r.crossings_per_atau_stderr.unwrap();
    ensure((crossings - 1.0).abs() < 3.0 * crossings_se, || {
        format!("crossings per A tau {crossings} +- {crossings_se}")
    })?;
    let covered = (0..20u64)
        .filter(|&s| {
            let r = simulate_flux(&WalkConfig::new(PlanckSeedSpec::canonical(), 9000 + s)).unwrap();
            (r.flux_estimate - r.analytic_flux).abs() < 2.0 * r.stderr
        })
        .count();
    let elapsed = start.elapsed();
    ensure(covered >= 16, || format!("2-sigma coverage {covered}/20"))?;
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "flux {:.4} +- {:.4} (z = {:.2}), crossings per A tau {crossings:.4} +- {crossings_se:.4}, \
         {walker_steps:.2e} walker-steps per batch, coverage {covered}/20, {elapsed:.2?}",
        r.flux_estimate, r.stderr, r.z_score
    ))
}

fn tau_prime_consistency() -> Check {
    let report = quantization_report(&unequal_spec(), -1, 1).map_err(|e| e.to_string())?;
    let charge = report.delta_j * report.area * report.tau_prime;
    let want = 4.0 * report.ze;
    ensure(rel(charge, want) < 1e-12, || format!("delta_J A tau' = {charge}"))?;
    ensure(
        report.tau.is_none() && report.rows.iter().all(|r| r.j_plus_atau.is_none()),
        || "species rows present with unequal D".into(),
    )?;
    Ok(format!("D = (2, 1): delta_J A tau' / ze = {}", charge / report.ze))
}

fn magnitude_estimate() -> Check {
    let report = quantization_report(&PlanckSeedSpec::aqueous_cgs(), 0, 1).map_err(|e| e.to_string())?;
    let t = report.third_term_max;
    ensure(t.is_finite() && t <= 1e-8, || format!("third_term_max = {t:e}"))?;
    Ok(format!("aqueous-cgs third_term_max = {t:e}"))
}

fn run_cli(args: &[&str], threads: &str) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_electrodiff"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .env_remove("ELECTRODIFF_DEPTH_CAP")
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let commands: [(&str, Vec<&str>); 6] = [
        ("ladder", vec!["ladder", "--n-min", "-3", "--n-max", "3"]),
        ("profiles", vec!["profiles", "--n", "2", "--grid", "51"]),
        ("verify", vec!["verify", "--n", "-4"]),
        (
            "quantize",
            vec!["quantize", "--preset", "aqueous-cgs", "--n-min", "-2", "--n-max", "2"],
        ),
        ("simulate", vec!["simulate", "--seed", "7"]),
        ("params", vec!["profiles", "--n", "-1", "--grid", "5", "--params", ""]),
    ];
    std::fs::write(path("params.json"), r#"{"c0": 3.5, "c1": 0.5, "D_plus": 2.0}"#).map_err(|e| e.to_string())?;
    let params_file = path("params.json");
    for (name, args) in &commands {
        let mut args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        if let Some(slot) = args.iter_mut().find(|a| a.is_empty()) {
            *slot = params_file.clone();
        }
        let (first, manifest, replayed) = (
            path(&format!("{name}.1")),
            path(&format!("{name}.json")),
            path(&format!("{name}.2")),
        );
        let mut original: Vec<&str> = args.iter().map(String::as_str).collect();
        original.extend(["--out", &first, "--manifest", &manifest]);
        let (_, code) = run_cli(&original, "1")?;
        ensure(code == 0, || format!("{name}: exit {code}"))?;
        let (_, replay_code) = run_cli(&["replay", &manifest, "--out", &replayed], "4")?;
        ensure(replay_code == code, || format!("{name}: replay exit {replay_code}"))?;
        let (a, b) = (std::fs::read(&first).unwrap(), std::fs::read(&replayed).unwrap());
        ensure(!a.is_empty() && a == b, || format!("{name}: replayed output differs"))?;
        let (stdout, _) = run_cli(&["replay", &manifest, "--out", &path("unused")], "2")?;
        ensure(stdout.is_empty(), || format!("{name}: output leaked to stdout"))?;
    }
    ensure(Path::new(&params_file).exists(), || "parameter file vanished".into())?;
    Ok(format!(
        "{} commands replayed byte-identically across thread counts",
        commands.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("flux quantization", flux_quantization),
        ("charge quanta", charge_quanta),
        ("ladder members solve the system", ladder_solves_system),
        ("closed-form first member", closed_form_first_member),
        ("inverse property", inverse_property),
        ("closed-form vs iterated fluxes", closed_form_fluxes),
        ("corpuscular flux", corpuscular_flux),
        ("tau' consistency", tau_prime_consistency),
        ("magnitude estimate", magnitude_estimate),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
