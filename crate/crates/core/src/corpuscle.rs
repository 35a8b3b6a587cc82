//! Lattice random-walk simulation of the field-free seed.
//!
//! Walkers hop `±Δx` with equal probability every `Δt = Δx²/(2D)`, so the
//! lattice diffusion coefficient is `D` and one crossing time `τ = δ²/2D`
//! is exactly `cells²` steps. Nodes `0` and `cells` are reservoirs pinned to
//! occupancies proportional to `c₀` and `c₁`; net signed hops over the bond
//! containing the measuring plane give the flux.
//!
//! Randomness: ChaCha8 seeded from `rng_seed`, one stream per batch (or per
//! walker chunk for first-passage runs). Batches are independent replicas,
//! each with its own burn-in, reduced in batch-index order, so results do not
//! depend on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::planck::{crossing_area, crossing_time, PlanckSeedSpec};

pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), stream = batch index";

/// Burn-in before counting, in units of `τ`.
pub const BURN_IN_TAU: f64 = 5.0;
pub const MIN_CELLS: u32 = 20;
pub const MIN_DURATION_TAU: f64 = 10.0;
pub const MIN_BATCHES: u32 = 10;
pub const MIN_RESERVOIR_OCCUPANCY: u64 = 1_000;
pub const MIN_WALKER_STEPS_PER_BATCH: f64 = 1e5;
const MAX_RESERVOIR_OCCUPANCY: u64 = 1 << 40;

/// Offset separating first-passage streams from flux batch streams.
const PASSAGE_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WalkConfig {
    pub spec: PlanckSeedSpec,
    /// Number of lattice intervals across the slab; `Δx = δ/cells`.
    pub cells: u32,
    /// Pinned occupancy of the denser reservoir node.
    pub walkers_per_cell_scale: u64,
    /// Simulated time per batch, in units of `τ`, burn-in included.
    pub duration: f64,
    pub batches: u32,
    pub rng_seed: u64,
    /// Position of the counting plane; defaults to `δ/2`.
    pub measure_plane: f64,
}

impl WalkConfig {
    pub fn new(spec: PlanckSeedSpec, rng_seed: u64) -> Self {
        Self {
            spec,
            cells: MIN_CELLS,
            walkers_per_cell_scale: 2 * MIN_RESERVOIR_OCCUPANCY,
            duration: 25.0,
            batches: MIN_BATCHES,
            rng_seed,
            measure_plane: spec.params.delta / 2.0,
        }
    }

    pub fn lattice_step(&self) -> f64 {
        self.spec.params.delta / self.cells as f64
    }

    pub fn time_step(&self) -> f64 {
        let dx = self.lattice_step();
        dx * dx / (2.0 * self.spec.params.d_plus)
    }

    /// `τ` measured in lattice steps.
    pub fn steps_per_tau(&self) -> u64 {
        self.cells as u64 * self.cells as u64
    }

    fn reservoirs(&self) -> (u64, u64) {
        let k = self.walkers_per_cell_scale as f64;
        let top = self.spec.c0.max(self.spec.c1);
        (
            (k * self.spec.c0 / top).round() as u64,
            (k * self.spec.c1 / top).round() as u64,
        )
    }

    /// Bond `(k, k+1)` containing the counting plane.
    fn measure_bond(&self) -> usize {
        let k = (self.measure_plane / self.lattice_step()).floor() as i64;
        k.clamp(0, self.cells as i64 - 1) as usize
    }

    fn step_counts(&self) -> (u64, u64) {
        let per_tau = self.steps_per_tau() as f64;
        let total = (self.duration * per_tau).round() as u64;
        let burn = (BURN_IN_TAU * per_tau).round() as u64;
        (burn, total)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.params.validate()?;
        PlanckSeedSpec::relaxed(self.spec.c0, self.spec.c1, self.spec.params)?;
        let bad = |msg: String| Err(Error::WalkConfig(msg));
        let p = &self.spec.params;
        if !p.equal_diffusion() {
            return Err(Error::UnequalDiffusion {
                d_plus: p.d_plus,
                d_minus: p.d_minus,
            });
        }
        if !(self.duration.is_finite() && self.duration > BURN_IN_TAU) {
            return bad(format!(
                "burn-in of {BURN_IN_TAU} tau is not shorter than the duration {} tau",
                self.duration
            ));
        }
        if self.duration < MIN_DURATION_TAU {
            return bad(format!(
                "duration {} tau is below the minimum {MIN_DURATION_TAU} tau",
                self.duration
            ));
        }
        if self.cells < MIN_CELLS {
            return bad(format!("{} cells is below the minimum {MIN_CELLS}", self.cells));
        }
        if self.batches < MIN_BATCHES {
            return bad(format!("{} batches is below the minimum {MIN_BATCHES}", self.batches));
        }
        if self.walkers_per_cell_scale < MIN_RESERVOIR_OCCUPANCY {
            return bad(format!(
                "reservoir occupancy {} is below the minimum {MIN_RESERVOIR_OCCUPANCY}",
                self.walkers_per_cell_scale
            ));
        }
        if self.walkers_per_cell_scale > MAX_RESERVOIR_OCCUPANCY {
            return bad(format!(
                "occupancy overflow: reservoir occupancy {} exceeds {MAX_RESERVOIR_OCCUPANCY}",
                self.walkers_per_cell_scale
            ));
        }
        if !(self.measure_plane > 0.0 && self.measure_plane < p.delta) {
            return bad(format!(
                "measuring plane {} lies outside (0, delta)",
                self.measure_plane
            ));
        }
        let (burn, total) = self.step_counts();
        let (hi, lo) = self.reservoirs();
        let mean_walkers = (hi + lo) as f64 / 2.0 * (self.cells as f64 - 1.0);
        let walker_steps = (total - burn) as f64 * mean_walkers;
        if walker_steps < MIN_WALKER_STEPS_PER_BATCH {
            return bad(format!(
                "about {walker_steps:.0} walker-steps per batch, below the minimum {MIN_WALKER_STEPS_PER_BATCH:.0}"
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WalkResult {
    pub flux_estimate: f64,
    pub stderr: f64,
    pub analytic_flux: f64,
    pub z_score: f64,
    /// `flux·A·τ`; absent when `c₀ ≤ c₁` leaves `A` undefined.
    #[serde(rename = "crossings_per_Atau")]
    pub crossings_per_atau: Option<f64>,
    #[serde(rename = "crossings_per_Atau_stderr")]
    pub crossings_per_atau_stderr: Option<f64>,
    pub batch_fluxes: Vec<f64>,
    /// Time-averaged occupancy of each node in concentration units.
    pub mean_concentration: Vec<f64>,
    /// Standard error of each entry of `mean_concentration` across batches.
    pub concentration_stderr: Vec<f64>,
    pub steps_per_batch: u64,
    pub burn_in_steps: u64,
    pub rng_seed: u64,
    pub rng: &'static str,
}

struct BatchOutcome {
    net_crossings: i64,
    occupancy_sums: Vec<u64>,
}

fn run_batch(cfg: &WalkConfig, batch: u32, burn: u64, total: u64) -> BatchOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    rng.set_stream(batch as u64);
    let n = cfg.cells as usize;
    let (hi, lo) = cfg.reservoirs();
    let bond = cfg.measure_bond();

    let mut occ = vec![0u64; n + 1];
    let mut next = vec![0u64; n + 1];
    let mut right = vec![0u64; n + 1];
    let mut sums = vec![0u64; n + 1];
    let mut net = 0i64;

    for step in 0..total {
        occ[0] = hi;
        occ[n] = lo;
        for (r, &o) in right.iter_mut().zip(&occ) {
            *r = if o == 0 {
                0
            } else {
                Binomial::new(o, 0.5).expect("p = 1/2 is valid").sample(&mut rng)
            };
        }
        for i in 1..n {
            let from_left = right[i - 1];
            let from_right = occ[i + 1] - right[i + 1];
            next[i] = from_left + from_right;
        }
        if step >= burn {
            let left_over = occ[bond + 1] - right[bond + 1];
            net += right[bond] as i64 - left_over as i64;
            for (s, &o) in sums.iter_mut().zip(&occ) {
                *s += o;
            }
        }
        std::mem::swap(&mut occ, &mut next);
    }
    BatchOutcome {
        net_crossings: net,
        occupancy_sums: sums,
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Batch-means estimate of the diffusive flux through the measuring plane.
pub fn simulate_flux(cfg: &WalkConfig) -> Result<WalkResult> {
    cfg.validate()?;
    let p = &cfg.spec.params;
    let (burn, total) = cfg.step_counts();
    let measured = total - burn;
    let (hi, lo) = cfg.reservoirs();
    let top = cfg.spec.c0.max(cfg.spec.c1);
    // concentration represented by one walker on one node
    let per_walker = top / hi.max(lo) as f64;
    let dx = cfg.lattice_step();
    let dt = cfg.time_step();

    let outcomes: Vec<BatchOutcome> = (0..cfg.batches)
        .into_par_iter()
        .map(|b| run_batch(cfg, b, burn, total))
        .collect();

    let batch_fluxes: Vec<f64> = outcomes
        .iter()
        .map(|o| o.net_crossings as f64 / measured as f64 * per_walker * dx / dt)
        .collect();
    let (flux_estimate, stderr) = mean_and_stderr(&batch_fluxes);

    let nodes = cfg.cells as usize + 1;
    let (mean_concentration, concentration_stderr): (Vec<f64>, Vec<f64>) = (0..nodes)
        .map(|i| {
            let per_batch: Vec<f64> = outcomes
                .iter()
                .map(|o| o.occupancy_sums[i] as f64 / measured as f64 * per_walker)
                .collect();
            mean_and_stderr(&per_batch)
        })
        .unzip();

    let analytic_flux = p.d_plus * (cfg.spec.c0 - cfg.spec.c1) / p.delta;
    let atau = if cfg.spec.c0 > cfg.spec.c1 {
        Some(crossing_area(&cfg.spec)? * crossing_time(p)?)
    } else {
        None
    };

    Ok(WalkResult {
        flux_estimate,
        stderr,
        analytic_flux,
        z_score: (flux_estimate - analytic_flux) / stderr,
        crossings_per_atau: atau.map(|a| flux_estimate * a),
        crossings_per_atau_stderr: atau.map(|a| stderr * a),
        batch_fluxes,
        mean_concentration,
        concentration_stderr,
        steps_per_batch: measured,
        burn_in_steps: burn,
        rng_seed: cfg.rng_seed,
        rng: RNG_ALGORITHM,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PassageBoundary {
    /// Reflecting at `x = 0`, absorbing at `x = δ`.
    ReflectAbsorb,
    /// Absorbing at both faces.
    TwoSidedAbsorb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageSetup {
    pub boundary: PassageBoundary,
    /// Release position; snapped to the nearest lattice node.
    pub release: f64,
    pub walkers: u64,
}

impl PassageSetup {
    pub fn reflect_absorb(walkers: u64) -> Self {
        Self {
            boundary: PassageBoundary::ReflectAbsorb,
            release: 0.0,
            walkers,
        }
    }

    pub fn two_sided(release: f64, walkers: u64) -> Self {
        Self {
            boundary: PassageBoundary::TwoSidedAbsorb,
            release,
            walkers,
        }
    }
}

pub const MIN_PASSAGE_WALKERS: u64 = 1_000;
const PASSAGE_CHUNKS: u64 = 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PassageResult {
    pub mean_time: f64,
    pub stderr: f64,
    pub tau: f64,
    /// `mean_time / τ`
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub walkers: u64,
    pub boundary: PassageBoundary,
}

fn passage_steps(rng: &mut ChaCha8Rng, start: u32, cells: u32, boundary: PassageBoundary) -> u64 {
    let mut pos = start;
    let mut steps = 0u64;
    loop {
        match boundary {
            PassageBoundary::ReflectAbsorb if pos == 0 => pos = 1,
            PassageBoundary::TwoSidedAbsorb if pos == 0 => return steps,
            _ if rng.random::<bool>() => pos += 1,
            _ => pos -= 1,
        }
        steps += 1;
        if pos == cells {
            return steps;
        }
    }
}

/// Mean first-passage time to an absorbing face, in physical time units.
pub fn crossing_time_estimate(cfg: &WalkConfig, setup: &PassageSetup) -> Result<PassageResult> {
    let p = &cfg.spec.params;
    let tau = crossing_time(p)?;
    if setup.walkers < MIN_PASSAGE_WALKERS {
        return Err(Error::WalkConfig(format!(
            "walker budget {} is below the minimum {MIN_PASSAGE_WALKERS}",
            setup.walkers
        )));
    }
    if cfg.cells < MIN_CELLS {
        return Err(Error::WalkConfig(format!(
            "{} cells is below the minimum {MIN_CELLS}",
            cfg.cells
        )));
    }
    if !(0.0..=p.delta).contains(&setup.release) {
        return Err(Error::WalkConfig(format!(
            "release point {} lies outside [0, delta]",
            setup.release
        )));
    }
    let start = (setup.release / cfg.lattice_step()).round() as u32;
    if start == cfg.cells || (setup.boundary == PassageBoundary::TwoSidedAbsorb && start == 0) {
        return Err(Error::WalkConfig("release point sits on an absorbing face".into()));
    }

    let chunk = setup.walkers.div_ceil(PASSAGE_CHUNKS);
    let per_chunk: Vec<(f64, f64)> = (0..PASSAGE_CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
            rng.set_stream(PASSAGE_STREAM_BASE + c);
            let count = chunk.min(setup.walkers.saturating_sub(c * chunk));
            (0..count).fold((0.0, 0.0), |(s, s2), _| {
                let t = passage_steps(&mut rng, start, cfg.cells, setup.boundary) as f64;
                (s + t, s2 + t * t)
            })
        })
        .collect();
    let (sum, sum_sq) = per_chunk.iter().fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    let w = setup.walkers as f64;
    let mean_steps = sum / w;
    let var_steps = (sum_sq / w - mean_steps * mean_steps) * w / (w - 1.0);
    let dt = cfg.time_step();
    let mean_time = mean_steps * dt;
    let stderr = (var_steps / w).sqrt() * dt;
    Ok(PassageResult {
        mean_time,
        stderr,
        tau,
        ratio: mean_time / tau,
        ratio_stderr: stderr / tau,
        walkers: setup.walkers,
        boundary: setup.boundary,
    })
}
