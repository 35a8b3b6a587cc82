//! The auto-Bäcklund map `ℬ`, its inverse, solution ladders and the
//! closed-form flux and current ladders.
//!
//! Transformed states hold their parent's evaluator and apply the pointwise
//! algebraic map on demand, so depth-`n` members evaluate in `O(n)` per point
//! with no interpolation anywhere.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, EvalError, Result, Species};
use crate::params::PhysicalParams;
use crate::solution::{
    div_extended, Currents, ExtendedPoint, ProfilePoint, Profiles, Provenance, SolutionState, TwoFloat,
};

pub const DEFAULT_DEPTH_CAP: u32 = 16;

/// Environment variable overriding [`DEFAULT_DEPTH_CAP`].
pub const DEPTH_CAP_ENV: &str = "ELECTRODIFF_DEPTH_CAP";

/// Points used for the seed positivity check and the admissibility scan.
pub const SCAN_POINTS: usize = 1001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LadderConfig {
    pub depth_cap: u32,
}

impl Default for LadderConfig {
    fn default() -> Self {
        Self {
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }
}

impl LadderConfig {
    /// Default config, with the cap taken from `ELECTRODIFF_DEPTH_CAP` if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(DEPTH_CAP_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(|depth_cap| Self { depth_cap })
                .map_err(|_| Error::Document(format!("{DEPTH_CAP_ENV}={v:?} is not a non-negative integer"))),
            Err(_) => Ok(Self::default()),
        }
    }

    pub fn check(&self, n: i32) -> Result<()> {
        if n.unsigned_abs() > self.depth_cap {
            return Err(Error::DepthCap {
                requested: n as i64,
                cap: self.depth_cap,
            });
        }
        Ok(())
    }
}

/// Coefficients shared by both maps, in double-double so that the identity
/// `linear · field = 2 · quadratic` holds well beyond `f64` rounding.
#[derive(Debug, Clone, Copy)]
struct Coefficients {
    /// `εkT/(2πz²e²)`
    quadratic: TwoFloat,
    /// `ε/(2πze)`
    linear: TwoFloat,
    /// `2kT/(ze)`
    field: TwoFloat,
}

impl Coefficients {
    fn new(p: &PhysicalParams) -> Self {
        // π enters through ε as an f64 (ε = 4π for the canonical preset), so
        // the rounded constant is used here too.
        let ze = TwoFloat::from(p.z as f64) * p.e;
        let linear = div_extended(TwoFloat::from(p.eps), ze * (2.0 * PI));
        let field = div_extended(TwoFloat::from(p.kt) * 2.0, ze);
        Self {
            quadratic: linear * field / 2.0,
            linear,
            field,
        }
    }
}

#[derive(Debug)]
struct Forward {
    parent: Arc<dyn Profiles>,
    /// `Φ₊/D₊` of the parent
    flux_ratio: TwoFloat,
    k: Coefficients,
}

impl Profiles for Forward {
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        self.eval_extended(x).map(ExtendedPoint::round)
    }

    fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        let p = self.parent.eval_extended(x)?;
        if p.c_plus.hi() == 0.0 {
            return Err(EvalError::DivisionByZero {
                x,
                species: Species::Plus,
            });
        }
        let u = div_extended(self.flux_ratio, p.c_plus);
        Ok(ExtendedPoint {
            c_plus: p.c_minus - self.k.linear * u * p.field + self.k.quadratic * u * u,
            c_minus: p.c_plus,
            field: self.k.field * u - p.field,
        })
    }
}

#[derive(Debug)]
struct Backward {
    parent: Arc<dyn Profiles>,
    /// `Φ₋/D₋` of the parent
    flux_ratio: TwoFloat,
    k: Coefficients,
}

impl Profiles for Backward {
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        self.eval_extended(x).map(ExtendedPoint::round)
    }

    fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        let p = self.parent.eval_extended(x)?;
        if p.c_minus.hi() == 0.0 {
            return Err(EvalError::DivisionByZero {
                x,
                species: Species::Minus,
            });
        }
        let w = div_extended(self.flux_ratio, p.c_minus);
        Ok(ExtendedPoint {
            c_plus: p.c_minus,
            c_minus: p.c_plus + self.k.linear * w * p.field + self.k.quadratic * w * w,
            field: -(p.field + self.k.field * w),
        })
    }
}

fn forward_fluxes_extended(params: &PhysicalParams, phi_plus: TwoFloat, phi_minus: TwoFloat) -> (TwoFloat, TwoFloat) {
    let (d_plus, d_minus) = (params.d_plus, params.d_minus);
    (
        phi_plus * 2.0 + phi_minus * d_plus / d_minus,
        -(phi_plus * d_minus / d_plus),
    )
}

fn backward_fluxes_extended(params: &PhysicalParams, phi_plus: TwoFloat, phi_minus: TwoFloat) -> (TwoFloat, TwoFloat) {
    let (d_plus, d_minus) = (params.d_plus, params.d_minus);
    (
        -(phi_minus * d_plus / d_minus),
        phi_minus * 2.0 + phi_plus * d_minus / d_plus,
    )
}

/// Fluxes after one application of `ℬ`.
pub fn forward_fluxes(params: &PhysicalParams, phi_plus: f64, phi_minus: f64) -> (f64, f64) {
    let (p, m) = forward_fluxes_extended(params, phi_plus.into(), phi_minus.into());
    (p.hi(), m.hi())
}

/// Fluxes after one application of `ℬ⁻¹`.
pub fn backward_fluxes(params: &PhysicalParams, phi_plus: f64, phi_minus: f64) -> (f64, f64) {
    let (p, m) = backward_fluxes_extended(params, phi_plus.into(), phi_minus.into());
    (p.hi(), m.hi())
}

/// `ℬ`: maps a solution to the next member of its ladder.
///
/// Evaluation of the result fails with [`EvalError::DivisionByZero`] wherever
/// the parent's `c₊` vanishes.
pub fn apply_b(s: &SolutionState) -> SolutionState {
    let params = *s.params();
    let (phi_plus, phi_minus) = s.fluxes_extended();
    let profiles = Forward {
        parent: Arc::clone(s.profiles()),
        flux_ratio: phi_plus / params.d_plus,
        k: Coefficients::new(&params),
    };
    let (phi_plus, phi_minus) = forward_fluxes_extended(&params, phi_plus, phi_minus);
    SolutionState::derived(
        Arc::new(profiles),
        phi_plus,
        phi_minus,
        params,
        Provenance {
            seed: s.provenance().seed.clone(),
            index: s.index() + 1,
        },
    )
}

/// `ℬ⁻¹`: maps a solution to the previous member of its ladder.
pub fn apply_b_inverse(s: &SolutionState) -> SolutionState {
    let params = *s.params();
    let (phi_plus, phi_minus) = s.fluxes_extended();
    let profiles = Backward {
        parent: Arc::clone(s.profiles()),
        flux_ratio: phi_minus / params.d_minus,
        k: Coefficients::new(&params),
    };
    let (phi_plus, phi_minus) = backward_fluxes_extended(&params, phi_plus, phi_minus);
    SolutionState::derived(
        Arc::new(profiles),
        phi_plus,
        phi_minus,
        params,
        Provenance {
            seed: s.provenance().seed.clone(),
            index: s.index() - 1,
        },
    )
}

/// `ℬⁿ` for `n > 0`, `(ℬ⁻¹)^|n|` for `n < 0`. No depth cap.
pub fn iterate(s: &SolutionState, n: i32) -> SolutionState {
    let step = if n >= 0 { apply_b } else { apply_b_inverse };
    (0..n.unsigned_abs()).fold(s.clone(), |acc, _| step(&acc))
}

/// Smallest value of each concentration over the scan grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Admissibility {
    pub min_c_plus: f64,
    pub min_c_minus: f64,
    pub x_min_c_plus: f64,
    pub x_min_c_minus: f64,
}

impl Admissibility {
    pub fn is_physical(&self) -> bool {
        self.min_c_plus > 0.0 && self.min_c_minus > 0.0
    }
}

pub fn admissibility(s: &SolutionState) -> Result<Admissibility, EvalError> {
    let mut a = Admissibility {
        min_c_plus: f64::INFINITY,
        min_c_minus: f64::INFINITY,
        x_min_c_plus: 0.0,
        x_min_c_minus: 0.0,
    };
    for x in s.grid(SCAN_POINTS) {
        let p = s.eval(x)?;
        if !(p.c_plus.is_finite() && p.c_minus.is_finite()) {
            return Err(EvalError::NonFinite {
                x,
                what: "concentration",
            });
        }
        if p.c_plus < a.min_c_plus {
            a.min_c_plus = p.c_plus;
            a.x_min_c_plus = x;
        }
        if p.c_minus < a.min_c_minus {
            a.min_c_minus = p.c_minus;
            a.x_min_c_minus = x;
        }
    }
    Ok(a)
}

/// Seeds must be strictly positive in both species on the scan grid.
pub fn check_seed_positive(seed: &SolutionState) -> Result<()> {
    let a = admissibility(seed)?;
    if a.min_c_plus <= 0.0 {
        return Err(Error::NotPositive {
            x: a.x_min_c_plus,
            species: Species::Plus,
            value: a.min_c_plus,
        });
    }
    if a.min_c_minus <= 0.0 {
        return Err(Error::NotPositive {
            x: a.x_min_c_minus,
            species: Species::Minus,
            value: a.min_c_minus,
        });
    }
    Ok(())
}

fn check_range(n_min: i32, n_max: i32, cfg: &LadderConfig) -> Result<()> {
    if n_min > 0 || n_max < 0 {
        return Err(Error::LadderRange { n_min, n_max });
    }
    cfg.check(n_min)?;
    cfg.check(n_max)
}

/// Members `n_min..=n_max` of the ladder generated by `seed`.
#[derive(Debug, Clone)]
pub struct Ladder {
    n_min: i32,
    members: Vec<SolutionState>,
}

impl Ladder {
    pub fn n_min(&self) -> i32 {
        self.n_min
    }

    pub fn n_max(&self) -> i32 {
        self.n_min + self.members.len() as i32 - 1
    }

    pub fn get(&self, n: i32) -> Option<&SolutionState> {
        usize::try_from(n - self.n_min).ok().and_then(|i| self.members.get(i))
    }

    pub fn seed(&self) -> &SolutionState {
        self.get(0).expect("ladder always contains its seed")
    }

    pub fn members(&self) -> &[SolutionState] {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &SolutionState)> {
        (self.n_min..).zip(self.members.iter())
    }
}

pub fn ladder(seed: &SolutionState, n_min: i32, n_max: i32, cfg: &LadderConfig) -> Result<Ladder> {
    check_range(n_min, n_max, cfg)?;
    check_seed_positive(seed)?;

    let mut below = Vec::with_capacity(n_min.unsigned_abs() as usize);
    let mut cur = seed.clone();
    for _ in 0..n_min.unsigned_abs() {
        cur = apply_b_inverse(&cur);
        below.push(cur.clone());
    }
    below.reverse();

    let mut members = below;
    members.push(seed.clone());
    let mut cur = seed.clone();
    for _ in 0..n_max {
        cur = apply_b(&cur);
        members.push(cur.clone());
    }
    Ok(Ladder { n_min, members })
}

/// Closed-form `(Φ₊⁽ⁿ⁾, Φ₋⁽ⁿ⁾)`.
pub fn flux_ladder_closed_form(seed: &SolutionState, n: i32) -> (f64, f64) {
    let p = seed.params();
    let n = n as f64;
    let (phi_p, phi_m) = (seed.phi_plus(), seed.phi_minus());
    (
        (n + 1.0) * phi_p + n * (p.d_plus / p.d_minus) * phi_m,
        -(n - 1.0) * phi_m - n * (p.d_minus / p.d_plus) * phi_p,
    )
}

/// Closed-form species and total currents of member `n`, from the seed currents.
pub fn current_ladder_closed_form(seed: &SolutionState, n: i32) -> Currents {
    let p = seed.params();
    let j0 = crate::solution::currents(seed);
    let n = n as f64;
    let j_plus = (n + 1.0) * j0.j_plus - n * (p.d_plus / p.d_minus) * j0.j_minus;
    let j_minus = -(n - 1.0) * j0.j_minus + n * (p.d_minus / p.d_plus) * j0.j_plus;
    Currents {
        j_plus,
        j_minus,
        total: j_plus + j_minus,
    }
}

/// The constant current increment `ΔJ = ze(D₊+D₋)(Φ₊/D₊ + Φ₋/D₋)`.
pub fn delta_j(seed: &SolutionState) -> f64 {
    let p = seed.params();
    p.ze() * (p.d_plus + p.d_minus) * (seed.phi_plus() / p.d_plus + seed.phi_minus() / p.d_minus)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderRow {
    pub n: i32,
    #[serde(rename = "Phi_plus")]
    pub phi_plus: f64,
    #[serde(rename = "Phi_minus")]
    pub phi_minus: f64,
    #[serde(rename = "J_plus")]
    pub j_plus: f64,
    #[serde(rename = "J_minus")]
    pub j_minus: f64,
    #[serde(rename = "J")]
    pub j: f64,
    /// Both concentrations positive on the scan grid.
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_c_plus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_c_minus: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    #[serde(rename = "delta_J")]
    pub delta_j: f64,
    pub rows: Vec<LadderRow>,
}

impl LadderReport {
    pub fn row(&self, n: i32) -> Option<&LadderRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Flux and current table for `n_min..=n_max` from the closed forms, with an
/// admissibility scan of each iterated member.
pub fn ladder_report(seed: &SolutionState, n_min: i32, n_max: i32, cfg: &LadderConfig) -> Result<LadderReport> {
    let members = ladder(seed, n_min, n_max, cfg)?;
    let rows = members
        .iter()
        .map(|(n, member)| {
            let (phi_plus, phi_minus) = flux_ladder_closed_form(seed, n);
            let j = current_ladder_closed_form(seed, n);
            let scan = admissibility(member).ok();
            LadderRow {
                n,
                phi_plus,
                phi_minus,
                j_plus: j.j_plus,
                j_minus: j.j_minus,
                j: j.total,
                admissible: scan.is_some_and(|a| a.is_physical()),
                min_c_plus: scan.map(|a| a.min_c_plus),
                min_c_minus: scan.map(|a| a.min_c_minus),
            }
        })
        .collect();
    Ok(LadderReport {
        delta_j: delta_j(seed),
        rows,
    })
}
