//! Exact-solution ladders for steady one-dimensional electrodiffusion of two
//! oppositely charged ion species across a slab `0 ≤ x ≤ δ`.
//!
//! The governing system (Gaussian-CGS units) is
//!
//! ```text
//! c₊'(x) =  (ze/kT) E(x) c₊(x) − Φ₊/D₊
//! c₋'(x) = −(ze/kT) E(x) c₋(x) − Φ₋/D₋
//! E'(x)  =  (4πze/ε) [c₊(x) − c₋(x)]
//! ```
//!
//! An auto-Bäcklund map [`backlund::apply_b`] and its inverse take any
//! solution to another, generating a ladder `𝒮⁽ⁿ⁾` whose total current
//! densities step by a constant `ΔJ`. Starting from the field-free linear
//! seed ([`planck::make_planck_seed`]) the steps become integer multiples of
//! the ionic charge `ze` over a natural area and crossing time.
//!
//! ```
//! use electrodiff::backlund::{ladder_report, LadderConfig};
//! use electrodiff::planck::{make_planck_seed, PlanckSeedSpec};
//!
//! let seed = make_planck_seed(&PlanckSeedSpec::canonical()).unwrap();
//! let report = ladder_report(&seed, -1, 1, &LadderConfig::default()).unwrap();
//! let currents: Vec<f64> = report.rows.iter().map(|r| r.j).collect();
//! assert_eq!(currents, [-4.0, 0.0, 4.0]);
//! ```
//!
//! Every generated member can be checked independently with
//! [`verify::residual_check`], and [`corpuscle::simulate_flux`] reproduces the
//! seed flux with a lattice random walk.

// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backlund;
pub mod corpuscle;
pub mod error;
pub mod params;
pub mod planck;
pub mod scaling;
pub mod solution;
pub mod verify;

pub use error::{Error, EvalError, Result, Species};
pub use params::PhysicalParams;
pub use solution::{currents, sample_profiles, Currents, ProfilePoint, ProfileRow, Profiles, SolutionState};
