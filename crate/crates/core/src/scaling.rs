//! Nondimensional bookkeeping.
//!
//! With `x̃ = x/δ`, `c̃ = c/c_ref`, `Ẽ = zeδE/kT` and `Φ̃± = Φ±δ/(D±c_ref)` the
//! governing system becomes
//!
//! ```text
//! c̃₊' =  Ẽc̃₊ − Φ̃₊
//! c̃₋' = −Ẽc̃₋ − Φ̃₋
//! Ẽ'  =  ν(c̃₊ − c̃₋),   ν = 4πz²e²c_ref δ²/(εkT)
//! ```
//!
//! which is the dimensional system with `z = e = kT = δ = D± = 1` and
//! `ε = 4π/ν`. A nondimensionalized state is therefore an ordinary
//! [`SolutionState`] carrying those unit parameters.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, EvalError, Result};
use crate::params::PhysicalParams;
use crate::solution::{ExtendedPoint, ProfilePoint, Profiles, SolutionState, TwoFloat};

/// Kinds of quantity that can be moved between dimensional and scaled form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Position,
    Concentration,
    Field,
    FluxPlus,
    FluxMinus,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaling {
    params: PhysicalParams,
    c_ref: f64,
}

impl Scaling {
    pub fn new(params: PhysicalParams, c_ref: f64) -> Result<Self> {
        params.validate()?;
        if !(c_ref.is_finite() && c_ref > 0.0) {
            return Err(Error::InvalidParam {
                name: "c_ref",
                value: c_ref,
                reason: "reference concentration must be finite and strictly positive",
            });
        }
        Ok(Self { params, c_ref })
    }

    pub fn params(&self) -> &PhysicalParams {
        &self.params
    }

    pub fn c_ref(&self) -> f64 {
        self.c_ref
    }

    pub fn x_scale(&self) -> f64 {
        self.params.delta
    }

    pub fn c_scale(&self) -> f64 {
        self.c_ref
    }

    /// `kT/(zeδ)`
    pub fn field_scale(&self) -> f64 {
        self.params.kt / (self.params.ze() * self.params.delta)
    }

    /// `D₊c_ref/δ`
    pub fn flux_scale_plus(&self) -> f64 {
        self.params.d_plus * self.c_ref / self.params.delta
    }

    /// `D₋c_ref/δ`
    pub fn flux_scale_minus(&self) -> f64 {
        self.params.d_minus * self.c_ref / self.params.delta
    }

    /// Dimensionless coupling `ν = 4πz²e²c_ref δ²/(εkT)`.
    pub fn coupling(&self) -> f64 {
        let p = &self.params;
        let ze = p.ze();
        4.0 * PI * ze * ze * self.c_ref * p.delta * p.delta / (p.eps * p.kt)
    }

    fn scale_of(&self, kind: Quantity) -> f64 {
        match kind {
            Quantity::Position => self.x_scale(),
            Quantity::Concentration => self.c_scale(),
            Quantity::Field => self.field_scale(),
            Quantity::FluxPlus => self.flux_scale_plus(),
            Quantity::FluxMinus => self.flux_scale_minus(),
        }
    }

    pub fn to_dimensionless(&self, kind: Quantity, value: f64) -> f64 {
        value / self.scale_of(kind)
    }

    pub fn to_dimensional(&self, kind: Quantity, value: f64) -> f64 {
        value * self.scale_of(kind)
    }

    /// Parameters under which the dimensional equations read as the scaled ones.
    pub fn dimensionless_params(&self) -> PhysicalParams {
        PhysicalParams {
            z: 1,
            e: 1.0,
            kt: 1.0,
            eps: 4.0 * PI / self.coupling(),
            d_plus: 1.0,
            d_minus: 1.0,
            delta: 1.0,
        }
    }
}

/// `v·num/den`, kept as a pair so both directions divide or multiply by the
/// same stored scale.
#[derive(Debug, Clone, Copy)]
struct Ratio {
    num: f64,
    den: f64,
}

impl Ratio {
    fn forward(scale: f64) -> Self {
        Self { num: 1.0, den: scale }
    }

    fn backward(scale: f64) -> Self {
        Self { num: scale, den: 1.0 }
    }

    fn apply(self, v: f64) -> f64 {
        v * self.num / self.den
    }

    fn apply_extended(self, v: TwoFloat) -> TwoFloat {
        v * self.num / self.den
    }
}

#[derive(Debug)]
struct Rescaled {
    parent: Arc<dyn Profiles>,
    // maps the child's x to the parent's x
    x: Ratio,
    c: Ratio,
    field: Ratio,
}

impl Profiles for Rescaled {
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        let p = self.parent.eval(self.x.apply(x))?;
        Ok(ProfilePoint {
            c_plus: self.c.apply(p.c_plus),
            c_minus: self.c.apply(p.c_minus),
            field: self.field.apply(p.field),
        })
    }

    fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        let p = self.parent.eval_extended(self.x.apply(x))?;
        Ok(ExtendedPoint {
            c_plus: self.c.apply_extended(p.c_plus),
            c_minus: self.c.apply_extended(p.c_minus),
            field: self.field.apply_extended(p.field),
        })
    }
}

fn scale_fluxes(s: &SolutionState, plus: Ratio, minus: Ratio) -> (TwoFloat, TwoFloat) {
    let (p, m) = s.fluxes_extended();
    (plus.apply_extended(p), minus.apply_extended(m))
}

/// Express `s` in scaled variables. `sc` must be built from `s.params()`.
pub fn nondimensionalize(s: &SolutionState, sc: &Scaling) -> Result<SolutionState> {
    if s.params() != sc.params() {
        return Err(Error::Document(
            "scaling was not derived from the state's parameters".into(),
        ));
    }
    let profiles = Rescaled {
        parent: Arc::clone(s.profiles()),
        x: Ratio::backward(sc.x_scale()),
        c: Ratio::forward(sc.c_scale()),
        field: Ratio::forward(sc.field_scale()),
    };
    let (phi_plus, phi_minus) = scale_fluxes(
        s,
        Ratio::forward(sc.scale_of(Quantity::FluxPlus)),
        Ratio::forward(sc.scale_of(Quantity::FluxMinus)),
    );
    Ok(SolutionState::derived(
        Arc::new(profiles),
        phi_plus,
        phi_minus,
        sc.dimensionless_params(),
        s.provenance().clone(),
    ))
}

/// Inverse of [`nondimensionalize`].
pub fn dimensionalize(s: &SolutionState, sc: &Scaling) -> SolutionState {
    let profiles = Rescaled {
        parent: Arc::clone(s.profiles()),
        x: Ratio::forward(sc.x_scale()),
        c: Ratio::backward(sc.c_scale()),
        field: Ratio::backward(sc.field_scale()),
    };
    let (phi_plus, phi_minus) = scale_fluxes(
        s,
        Ratio::backward(sc.scale_of(Quantity::FluxPlus)),
        Ratio::backward(sc.scale_of(Quantity::FluxMinus)),
    );
    SolutionState::derived(
        Arc::new(profiles),
        phi_plus,
        phi_minus,
        *sc.params(),
        s.provenance().clone(),
    )
}
