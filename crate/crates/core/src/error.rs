use std::fmt;

use thiserror::Error;

/// Which ionic species a concentration belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Plus,
    Minus,
}

impl fmt::Display for Species {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Species::Plus => f.write_str("c_plus"),
            Species::Minus => f.write_str("c_minus"),
        }
    }
}

/// Failure while evaluating a profile at a point.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("division by zero: {species} vanishes at x = {x}")]
    DivisionByZero { x: f64, species: Species },
    #[error("x = {x} lies outside the slab [0, {delta}]")]
    OutOfDomain { x: f64, delta: f64 },
    #[error("non-finite {what} at x = {x}")]
    NonFinite { x: f64, what: &'static str },
}

impl EvalError {
    /// Position at which evaluation failed.
    pub fn x(&self) -> f64 {
        match *self {
            EvalError::DivisionByZero { x, .. } | EvalError::OutOfDomain { x, .. } | EvalError::NonFinite { x, .. } => {
                x
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("parameter document: {0}")]
    Document(String),
    #[error("unknown preset {0:?} (expected \"canonical\" or \"aqueous-cgs\")")]
    UnknownPreset(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("ladder index {requested} exceeds the depth cap {cap}")]
    DepthCap { requested: i64, cap: u32 },
    #[error("invalid ladder range [{n_min}, {n_max}]: need n_min <= 0 <= n_max")]
    LadderRange { n_min: i32, n_max: i32 },
    #[error("invalid index range [{n_min}, {n_max}]")]
    IndexRange { n_min: i32, n_max: i32 },
    #[error("{species} is not strictly positive at x = {x} (value {value})")]
    NotPositive { x: f64, species: Species, value: f64 },
    #[error("operation requires equal diffusion coefficients (D_plus = {d_plus}, D_minus = {d_minus})")]
    UnequalDiffusion { d_plus: f64, d_minus: f64 },
    #[error("grid needs at least {min} points, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("difference step {h} underflows (minimum {min})")]
    StepUnderflow { h: f64, min: f64 },
    #[error("walk configuration: {0}")]
    WalkConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
