//! Evaluable solution states and the quantities derived directly from them.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;
pub use twofloat::TwoFloat;

use crate::error::{Error, EvalError, Result};
use crate::params::PhysicalParams;

/// Concentrations and field at a single position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfilePoint {
    pub c_plus: f64,
    pub c_minus: f64,
    #[serde(rename = "E")]
    pub field: f64,
}

/// Double-double quotient. `TwoFloat / TwoFloat` in twofloat 0.8 is only
/// accurate to about `f64` precision, so one correction step is applied on
/// top of the (accurate) division by an `f64`.
pub fn div_extended(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q = a / b.hi();
    q + (a - q * b) / b.hi()
}

/// [`ProfilePoint`] in double-double precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedPoint {
    pub c_plus: TwoFloat,
    pub c_minus: TwoFloat,
    pub field: TwoFloat,
}

impl ExtendedPoint {
    /// Round each component to the nearest `f64`.
    pub fn round(self) -> ProfilePoint {
        ProfilePoint {
            c_plus: self.c_plus.hi(),
            c_minus: self.c_minus.hi(),
            field: self.field.hi(),
        }
    }
}

impl From<ProfilePoint> for ExtendedPoint {
    fn from(p: ProfilePoint) -> Self {
        Self {
            c_plus: p.c_plus.into(),
            c_minus: p.c_minus.into(),
            field: p.field.into(),
        }
    }
}

/// A pure map from position to `(c₊, c₋, E)`.
///
/// Implementations must be deterministic: the same `x` always yields the
/// same bits.
pub trait Profiles: Send + Sync + fmt::Debug {
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError>;

    /// Double-double evaluation. Transformed profiles chain through this so
    /// cancellation near zeros of a parent concentration costs no accuracy in
    /// the rounded result. Defaults to promoting [`Profiles::eval`].
    fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        self.eval(x).map(Into::into)
    }
}

/// Adapter turning a closure into [`Profiles`]. Used for synthetic states.
pub struct FnProfiles<F>(pub F);

impl<F> fmt::Debug for FnProfiles<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnProfiles(..)")
    }
}

impl<F> Profiles for FnProfiles<F>
where
    F: Fn(f64) -> ProfilePoint + Send + Sync,
{
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        Ok((self.0)(x))
    }
}

/// Where a state came from: the seed's label and its ladder index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub seed: String,
    pub index: i32,
}

/// One member of a solution ladder: profiles on `[0, δ]` plus constant fluxes.
#[derive(Clone)]
pub struct SolutionState {
    profiles: Arc<dyn Profiles>,
    phi_plus: TwoFloat,
    phi_minus: TwoFloat,
    params: PhysicalParams,
    provenance: Provenance,
}

impl fmt::Debug for SolutionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolutionState")
            .field("phi_plus", &self.phi_plus())
            .field("phi_minus", &self.phi_minus())
            .field("params", &self.params)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

impl SolutionState {
    /// Build a seed state (ladder index 0).
    pub fn new(
        params: PhysicalParams,
        phi_plus: f64,
        phi_minus: f64,
        profiles: impl Profiles + 'static,
        seed: impl Into<String>,
    ) -> Result<Self> {
        params.validate()?;
        for (name, value) in [("Phi_plus", phi_plus), ("Phi_minus", phi_minus)] {
            if !value.is_finite() {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "flux must be finite",
                });
            }
        }
        Ok(Self {
            profiles: Arc::new(profiles),
            phi_plus: phi_plus.into(),
            phi_minus: phi_minus.into(),
            params,
            provenance: Provenance {
                seed: seed.into(),
                index: 0,
            },
        })
    }

    /// Seed state from a closure; convenient for synthetic test states.
    pub fn from_fn<F>(
        params: PhysicalParams,
        phi_plus: f64,
        phi_minus: f64,
        seed: impl Into<String>,
        f: F,
    ) -> Result<Self>
    where
        F: Fn(f64) -> ProfilePoint + Send + Sync + 'static,
    {
        Self::new(params, phi_plus, phi_minus, FnProfiles(f), seed)
    }

    pub(crate) fn derived(
        profiles: Arc<dyn Profiles>,
        phi_plus: TwoFloat,
        phi_minus: TwoFloat,
        params: PhysicalParams,
        provenance: Provenance,
    ) -> Self {
        Self {
            profiles,
            phi_plus,
            phi_minus,
            params,
            provenance,
        }
    }

    fn check_domain(&self, x: f64) -> Result<(), EvalError> {
        if !(0.0..=self.params.delta).contains(&x) {
            return Err(EvalError::OutOfDomain {
                x,
                delta: self.params.delta,
            });
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        self.check_domain(x)?;
        self.profiles.eval(x)
    }

    pub fn c_plus(&self, x: f64) -> Result<f64, EvalError> {
        self.eval(x).map(|p| p.c_plus)
    }

    pub fn c_minus(&self, x: f64) -> Result<f64, EvalError> {
        self.eval(x).map(|p| p.c_minus)
    }

    pub fn field(&self, x: f64) -> Result<f64, EvalError> {
        self.eval(x).map(|p| p.field)
    }

    pub fn phi_plus(&self) -> f64 {
        self.phi_plus.hi()
    }

    pub fn phi_minus(&self) -> f64 {
        self.phi_minus.hi()
    }

    /// Fluxes carried in double-double precision through the ladder maps.
    pub fn fluxes_extended(&self) -> (TwoFloat, TwoFloat) {
        (self.phi_plus, self.phi_minus)
    }

    pub fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        self.check_domain(x)?;
        self.profiles.eval_extended(x)
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn index(&self) -> i32 {
        self.provenance.index
    }

    pub(crate) fn profiles(&self) -> &Arc<dyn Profiles> {
        &self.profiles
    }

    /// Same profiles and provenance with different fluxes.
    pub fn with_fluxes(&self, phi_plus: f64, phi_minus: f64) -> Self {
        Self {
            phi_plus: phi_plus.into(),
            phi_minus: phi_minus.into(),
            ..self.clone()
        }
    }

    /// Uniform grid of `m` points spanning `[0, δ]` inclusive.
    pub fn grid(&self, m: usize) -> Vec<f64> {
        uniform_grid(self.params.delta, m)
    }
}

pub(crate) fn uniform_grid(delta: f64, m: usize) -> Vec<f64> {
    let last = (m - 1) as f64;
    (0..m)
        .map(|i| if i + 1 == m { delta } else { delta * i as f64 / last })
        .collect()
}

/// Species and total current densities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Currents {
    #[serde(rename = "J_plus")]
    pub j_plus: f64,
    #[serde(rename = "J_minus")]
    pub j_minus: f64,
    #[serde(rename = "J")]
    pub total: f64,
}

impl Currents {
    /// `J± = ±ze·Φ±`, `J = J₊ + J₋`.
    pub fn from_fluxes(params: &PhysicalParams, phi_plus: f64, phi_minus: f64) -> Self {
        let ze = params.ze();
        let j_plus = ze * phi_plus;
        let j_minus = -ze * phi_minus;
        Self {
            j_plus,
            j_minus,
            total: j_plus + j_minus,
        }
    }
}

pub fn currents(s: &SolutionState) -> Currents {
    Currents::from_fluxes(&s.params, s.phi_plus(), s.phi_minus())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x: f64,
    pub c_plus: f64,
    pub c_minus: f64,
    #[serde(rename = "E")]
    pub field: f64,
}

/// Evaluate the state at `m` uniformly spaced points spanning `[0, δ]`.
pub fn sample_profiles(s: &SolutionState, m: usize) -> Result<Vec<ProfileRow>> {
    if m < 2 {
        return Err(Error::GridTooSmall { min: 2, got: m });
    }
    s.grid(m)
        .into_iter()
        .map(|x| {
            let p = s.eval(x)?;
            Ok(ProfileRow {
                x,
                c_plus: p.c_plus,
                c_minus: p.c_minus,
                field: p.field,
            })
        })
        .collect()
}
