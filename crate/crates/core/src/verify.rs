//! Numerical verification of solution states against the governing system
//!
//! ```text
//! c₊' =  (ze/kT)E c₊ − Φ₊/D₊
//! c₋' = −(ze/kT)E c₋ − Φ₋/D₋
//! E'  =  (4πze/ε)(c₊ − c₋)
//! ```
//!
//! Derivatives come from Richardson-extrapolated central differences of the
//! evaluators, independently of how a state was constructed. Residuals are
//! formed in scaled variables so one tolerance serves every unit system.

use rayon::prelude::*;
use serde::Serialize;

use crate::backlund::iterate;
use crate::error::{Error, EvalError, Result, Species};
use crate::scaling::{nondimensionalize, Scaling};
use crate::solution::{div_extended, Provenance, SolutionState, TwoFloat};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_GRID_POINTS: usize = 101;
pub const MIN_GRID_POINTS: usize = 11;

fn richardson(fp: f64, fm: f64, fp_half: f64, fm_half: f64, h: f64) -> f64 {
    let d_h = (fp - fm) / (2.0 * h);
    let d_half = (fp_half - fm_half) / h;
    (4.0 * d_half - d_h) / 3.0
}

/// Largest step `≤ h` whose two-width stencil stays inside `[0, delta]`.
fn admissible_step(x: f64, h: f64, delta: f64) -> Result<f64> {
    let h_eff = h.min(x / 2.0).min((delta - x) / 2.0);
    let min = 1e3 * f64::EPSILON * x.abs().max(delta);
    if !(h_eff >= min) {
        return Err(Error::StepUnderflow { h: h_eff, min });
    }
    Ok(h_eff)
}

/// Richardson-extrapolated central difference `(4·D(h/2) − D(h))/3` of `f`
/// at `x ∈ (0, delta)`; `O(h⁴)` for smooth `f`.
pub fn differentiate<F>(f: F, x: f64, h: f64, delta: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let h = admissible_step(x, h, delta)?;
    let half = h / 2.0;
    Ok(richardson(f(x + h)?, f(x - h)?, f(x + half)?, f(x - half)?, h))
}

/// Steps shrink to this fraction of the local length `max(|f|, 1)/|f'|`.
const LOCAL_STEP_FRACTION: f64 = 1e-4;
const MAX_STEP_REFINEMENTS: usize = 40;

fn richardson_extended(s: &SolutionState, x: f64, h: f64) -> Result<[TwoFloat; 3]> {
    let half = h / 2.0;
    let (xp, xm, xph, xmh) = (x + h, x - h, x + half, x - half);
    let (p, m) = (s.eval_extended(xp)?, s.eval_extended(xm)?);
    let (ph, mh) = (s.eval_extended(xph)?, s.eval_extended(xmh)?);
    // actual spacings, exact in double-double
    let wide = TwoFloat::from(xp) - xm;
    let narrow = TwoFloat::from(xph) - xmh;
    let d = |a: TwoFloat, b: TwoFloat, ah: TwoFloat, bh: TwoFloat| {
        let d_h = div_extended(a - b, wide);
        let d_half = div_extended(ah - bh, narrow);
        (d_half * 4.0 - d_h) / 3.0
    };
    Ok([
        d(p.c_plus, m.c_plus, ph.c_plus, mh.c_plus),
        d(p.c_minus, m.c_minus, ph.c_minus, mh.c_minus),
        d(p.field, m.field, ph.field, mh.field),
    ])
}

/// Scaled values and x-derivatives of `(c₊, c₋, E)` at `x`.
///
/// Differences are taken on the dimensional state, starting from step `h` and
/// shrinking it until it is small against the local length scale
/// `max(|f̃|, 1)/|f̃'|`. Returns the values, the derivatives, and the
/// dimensional step finally used.
fn scaled_jet(s: &SolutionState, sc: &Scaling, x: f64, h: f64) -> Result<([TwoFloat; 3], [TwoFloat; 3], f64)> {
    let delta = s.params().delta;
    let scales = [sc.c_scale(), sc.c_scale(), sc.field_scale()];
    let p = s.eval_extended(x)?;
    let values = [p.c_plus, p.c_minus, p.field];
    let values: [TwoFloat; 3] = std::array::from_fn(|k| values[k] / scales[k]);
    let scaled = |d: [TwoFloat; 3]| -> [TwoFloat; 3] { std::array::from_fn(|k| d[k] * delta / scales[k]) };

    let mut h = admissible_step(x, h, delta)?;
    let mut d = scaled(richardson_extended(s, x, h)?);
    for _ in 0..MAX_STEP_REFINEMENTS {
        let length = values
            .iter()
            .zip(&d)
            .map(|(f, df)| f.hi().abs().max(1.0) / df.hi().abs())
            .fold(f64::INFINITY, f64::min);
        let target = LOCAL_STEP_FRACTION * length * delta;
        if !(target < h) {
            break;
        }
        h = admissible_step(x, target.max(h / 16.0), delta)?;
        d = scaled(richardson_extended(s, x, h)?);
    }
    Ok((values, d, h))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationResidual {
    pub id: &'static str,
    pub max_abs: f64,
    pub rms: f64,
    /// Position of the largest residual.
    pub x_max: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub provenance: Provenance,
    pub grid_points: usize,
    /// Initial difference step in scaled units.
    pub step: f64,
    /// Smallest step the local refinement settled on.
    pub min_step: f64,
    pub c_ref: f64,
    pub coupling: f64,
    pub tol: f64,
    pub pass: bool,
    pub equations: Vec<EquationResidual>,
    /// First position where a residual was not finite.
    pub nonfinite_at: Option<f64>,
    /// Interior positions where residuals were evaluated.
    #[serde(skip)]
    pub grid: Vec<f64>,
    #[serde(skip)]
    pub r1: Vec<f64>,
    #[serde(skip)]
    pub r2: Vec<f64>,
    #[serde(skip)]
    pub r3: Vec<f64>,
}

impl ResidualReport {
    pub fn max_residual(&self) -> f64 {
        self.equations.iter().map(|e| e.max_abs).fold(0.0, f64::max)
    }

    pub fn equation(&self, id: &str) -> Option<&EquationResidual> {
        self.equations.iter().find(|e| e.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualOptions {
    pub grid_points: usize,
    pub tol: f64,
    /// Scaled difference step; `None` means `1/(10·grid_points)`.
    pub step: Option<f64>,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            grid_points: DEFAULT_GRID_POINTS,
            tol: DEFAULT_TOL,
            step: None,
        }
    }
}

/// Residuals of `s` on the interior of an `m`-point uniform grid.
pub fn residual_check(s: &SolutionState, m: usize, tol: f64) -> Result<ResidualReport> {
    residual_check_with(
        s,
        &ResidualOptions {
            grid_points: m,
            tol,
            step: None,
        },
    )
}

fn reference_concentration(s: &SolutionState, grid: &[f64]) -> Result<f64> {
    let mut c_ref = 0.0f64;
    for &x in grid {
        let p = s.eval(x)?;
        c_ref = c_ref.max(p.c_plus.abs()).max(p.c_minus.abs());
    }
    Ok(if c_ref.is_finite() && c_ref > 0.0 { c_ref } else { 1.0 })
}

fn summarize(id: &'static str, xs: &[f64], r: &[f64], tol: f64) -> EquationResidual {
    let (mut max_abs, mut x_max, mut sq) = (0.0f64, f64::NAN, 0.0);
    for (&x, &v) in xs.iter().zip(r) {
        if v.abs() > max_abs || x_max.is_nan() {
            max_abs = v.abs();
            x_max = x;
        }
        sq += v * v;
    }
    let rms = (sq / r.len().max(1) as f64).sqrt();
    EquationResidual {
        id,
        max_abs,
        rms,
        x_max,
        pass: max_abs < tol,
    }
}

pub fn residual_check_with(s: &SolutionState, opts: &ResidualOptions) -> Result<ResidualReport> {
    let m = opts.grid_points;
    if m < MIN_GRID_POINTS {
        return Err(Error::GridTooSmall {
            min: MIN_GRID_POINTS,
            got: m,
        });
    }
    let delta = s.params().delta;
    let full_grid = s.grid(m);
    let c_ref = reference_concentration(s, &full_grid)?;
    let sc = Scaling::new(*s.params(), c_ref)?;
    let nu = sc.coupling();
    let h = opts.step.unwrap_or(1.0 / (10.0 * m as f64));
    let (phi_p, phi_m) = s.fluxes_extended();
    let (phi_p, phi_m) = (phi_p / sc.flux_scale_plus(), phi_m / sc.flux_scale_minus());

    let interior = &full_grid[1..m - 1];
    let evaluated: Vec<([f64; 3], f64)> = interior
        .par_iter()
        .map(|&x| {
            let ([c_plus, c_minus, field], [dc_plus, dc_minus, dfield], used) = scaled_jet(s, &sc, x, h * delta)?;
            let r = [
                dc_plus - field * c_plus + phi_p,
                dc_minus + field * c_minus + phi_m,
                dfield - (c_plus - c_minus) * nu,
            ];
            Ok((r.map(|v| v.hi()), used / delta))
        })
        .collect::<Result<_>>()?;
    let min_step = evaluated.iter().map(|e| e.1).fold(h, f64::min);
    let residuals: Vec<[f64; 3]> = evaluated.into_iter().map(|e| e.0).collect();

    let grid: Vec<f64> = full_grid[1..m - 1].to_vec();
    let column = |k: usize| residuals.iter().map(|r| r[k]).collect::<Vec<_>>();
    let (r1, r2, r3) = (column(0), column(1), column(2));
    let nonfinite_at = grid
        .iter()
        .zip(&residuals)
        .find(|(_, r)| r.iter().any(|v| !v.is_finite()))
        .map(|(&x, _)| x);

    let equations = vec![
        summarize("r1", &grid, &r1, opts.tol),
        summarize("r2", &grid, &r2, opts.tol),
        summarize("r3", &grid, &r3, opts.tol),
    ];
    let pass = nonfinite_at.is_none() && equations.iter().all(|e| e.pass);
    debug_assert!(grid.iter().all(|&x| x > 0.0 && x < delta));

    Ok(ResidualReport {
        provenance: s.provenance().clone(),
        grid_points: m,
        step: h,
        min_step,
        c_ref,
        coupling: nu,
        tol: opts.tol,
        pass,
        equations,
        nonfinite_at,
        grid,
        r1,
        r2,
        r3,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundTripReport {
    pub depth: u32,
    pub samples: usize,
    /// Largest deviation over all five components, both compositions.
    pub max_deviation: f64,
    pub worst_component: &'static str,
    pub worst_x: Option<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Checks `ℬ⁻¹∘ℬ = ℬ∘ℬ⁻¹ = id` on `samples` uniform points.
pub fn roundtrip_check(s: &SolutionState, samples: usize, tol: f64) -> Result<RoundTripReport> {
    roundtrip_check_depth(s, 1, samples, tol)
}

/// Deviation of `(ℬ⁻¹)ᵈ∘ℬᵈ` and `ℬᵈ∘(ℬ⁻¹)ᵈ` from the identity.
///
/// Components are compared in scaled units with a unit floor,
/// `|a − b| / max(|b|, 1)`, so vanishing fields do not blow up the measure.
pub fn roundtrip_check_depth(s: &SolutionState, depth: u32, samples: usize, tol: f64) -> Result<RoundTripReport> {
    if samples < 2 {
        return Err(Error::GridTooSmall { min: 2, got: samples });
    }
    let grid = s.grid(samples);
    for &x in &grid {
        let p = s.eval(x)?;
        for (species, value) in [(Species::Plus, p.c_plus), (Species::Minus, p.c_minus)] {
            if !(value > 0.0) {
                return Err(Error::NotPositive { x, species, value });
            }
        }
    }
    let c_ref = reference_concentration(s, &grid)?;
    let sc = Scaling::new(*s.params(), c_ref)?;
    let reference = nondimensionalize(s, &sc)?;
    let d = depth as i32;
    let candidates = [
        nondimensionalize(&iterate(&iterate(s, d), -d), &sc)?,
        nondimensionalize(&iterate(&iterate(s, -d), d), &sc)?,
    ];

    let dev = |a: f64, b: f64| (a - b).abs() / b.abs().max(1.0);
    let mut worst = (0.0f64, "none", None);
    let mut track = |v: f64, what: &'static str, x: Option<f64>| {
        if v > worst.0 || v.is_nan() {
            worst = (if v.is_nan() { f64::INFINITY } else { v }, what, x);
        }
    };
    for c in &candidates {
        track(dev(c.phi_plus(), reference.phi_plus()), "Phi_plus", None);
        track(dev(c.phi_minus(), reference.phi_minus()), "Phi_minus", None);
        for (i, &x) in grid.iter().enumerate() {
            let t = i as f64 / (samples - 1) as f64;
            let (a, b) = (c.eval(t)?, reference.eval(t)?);
            track(dev(a.c_plus, b.c_plus), "c_plus", Some(x));
            track(dev(a.c_minus, b.c_minus), "c_minus", Some(x));
            track(dev(a.field, b.field), "E", Some(x));
        }
    }
    Ok(RoundTripReport {
        depth,
        samples,
        max_deviation: worst.0,
        worst_component: worst.1,
        worst_x: worst.2,
        tol,
        pass: worst.0 < tol,
    })
}
