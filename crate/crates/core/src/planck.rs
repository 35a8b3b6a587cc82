//! The field-free linear-profile seed and its charge-quantization quantities.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::backlund::{current_ladder_closed_form, delta_j};
use crate::error::{Error, EvalError, Result};
use crate::params::PhysicalParams;
use crate::solution::{ExtendedPoint, ProfilePoint, Profiles, SolutionState, TwoFloat};

/// Boltzmann's constant in erg/K.
pub const BOLTZMANN_CGS: f64 = 1.380649e-16;

/// Elementary charge in statcoulomb.
pub const ELEMENTARY_CHARGE_CGS: f64 = 4.803_204_712_570_263e-10;

/// Boundary concentrations `c₀ > c₁ > 0` of the seed together with the slab constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanckSeedSpec {
    pub c0: f64,
    pub c1: f64,
    pub params: PhysicalParams,
}

impl PlanckSeedSpec {
    pub fn new(c0: f64, c1: f64, params: PhysicalParams) -> Result<Self> {
        let spec = Self { c0, c1, params };
        spec.validate()?;
        Ok(spec)
    }

    /// Only requires positive concentrations; `c₀ ≤ c₁` is allowed.
    ///
    /// Used for random-walk runs without a gradient or with reversed reservoirs.
    pub fn relaxed(c0: f64, c1: f64, params: PhysicalParams) -> Result<Self> {
        params.validate()?;
        for (name, value) in [("c0", c0), ("c1", c1)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "concentration must be finite and strictly positive",
                });
            }
        }
        Ok(Self { c0, c1, params })
    }

    pub fn validate(&self) -> Result<()> {
        Self::relaxed(self.c0, self.c1, self.params)?;
        if self.c0 <= self.c1 {
            return Err(Error::InvalidParam {
                name: "c0",
                value: self.c0,
                reason: "requires c0 > c1",
            });
        }
        Ok(())
    }

    /// `c₀ = 2`, `c₁ = 1` on the canonical dimensionless parameters.
    pub fn canonical() -> Self {
        Self {
            c0: 2.0,
            c1: 1.0,
            params: PhysicalParams::canonical(),
        }
    }

    /// An illustrative dilute aqueous electrolyte in CGS units: monovalent ions
    /// at 300 K in water (ε = 80), 1.2e19 and 0.6e19 ions/cm³ across a 0.1 mm
    /// layer, D = 1e-5 cm²/s.
    pub fn aqueous_cgs() -> Self {
        Self {
            c0: 1.2e19,
            c1: 0.6e19,
            params: PhysicalParams {
                z: 1,
                e: ELEMENTARY_CHARGE_CGS,
                kt: BOLTZMANN_CGS * 300.0,
                eps: 80.0,
                d_plus: 1e-5,
                d_minus: 1e-5,
                delta: 1e-2,
            },
        }
    }

    /// Parse a flat JSON object with the [`PhysicalParams`] keys plus `c0`, `c1`.
    /// Missing keys default to the canonical preset; unknown keys are an error.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: SeedDoc = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        let base = Self::canonical();
        let params = PhysicalParams::new(
            doc.z.unwrap_or(base.params.z),
            doc.e.unwrap_or(base.params.e),
            doc.kt.unwrap_or(base.params.kt),
            doc.eps.unwrap_or(base.params.eps),
            doc.d_plus.unwrap_or(base.params.d_plus),
            doc.d_minus.unwrap_or(base.params.d_minus),
            doc.delta.unwrap_or(base.params.delta),
        )?;
        Self::relaxed(doc.c0.unwrap_or(base.c0), doc.c1.unwrap_or(base.c1), params)
    }

    /// Flat key-value form accepted by [`PlanckSeedSpec::from_json_str`].
    pub fn to_json_value(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self.params).expect("params serialize");
        let map = v.as_object_mut().expect("params serialize to an object");
        map.insert("c0".into(), self.c0.into());
        map.insert("c1".into(), self.c1.into());
        v
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedDoc {
    z: Option<u32>,
    e: Option<f64>,
    #[serde(rename = "kT")]
    kt: Option<f64>,
    eps: Option<f64>,
    #[serde(rename = "D_plus")]
    d_plus: Option<f64>,
    #[serde(rename = "D_minus")]
    d_minus: Option<f64>,
    delta: Option<f64>,
    c0: Option<f64>,
    c1: Option<f64>,
}

/// Named parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Preset {
    #[serde(rename = "canonical")]
    Canonical,
    #[serde(rename = "aqueous-cgs")]
    AqueousCgs,
}

impl Preset {
    pub const ALL: [Preset; 2] = [Preset::Canonical, Preset::AqueousCgs];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Canonical => "canonical",
            Preset::AqueousCgs => "aqueous-cgs",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| Error::UnknownPreset(name.to_string()))
    }

    pub fn spec(self) -> PlanckSeedSpec {
        match self {
            Preset::Canonical => PlanckSeedSpec::canonical(),
            Preset::AqueousCgs => PlanckSeedSpec::aqueous_cgs(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LinearProfile {
    c0: f64,
    c1: f64,
    delta: f64,
}

impl LinearProfile {
    fn at(&self, x: f64) -> f64 {
        self.c0 + (self.c1 - self.c0) * x / self.delta
    }
}

impl Profiles for LinearProfile {
    fn eval(&self, x: f64) -> Result<ProfilePoint, EvalError> {
        let c = self.at(x);
        Ok(ProfilePoint {
            c_plus: c,
            c_minus: c,
            field: 0.0,
        })
    }

    fn eval_extended(&self, x: f64) -> Result<ExtendedPoint, EvalError> {
        let c = TwoFloat::from(self.c0) + (TwoFloat::from(self.c1) - self.c0) * x / self.delta;
        Ok(ExtendedPoint {
            c_plus: c,
            c_minus: c,
            field: TwoFloat::from(0.0),
        })
    }
}

/// Equal linear concentration profiles, zero field, fluxes `D±(c₀−c₁)/δ`.
pub fn make_planck_seed(spec: &PlanckSeedSpec) -> Result<SolutionState> {
    spec.validate()?;
    let p = spec.params;
    let gradient = (spec.c0 - spec.c1) / p.delta;
    SolutionState::new(
        p,
        p.d_plus * gradient,
        p.d_minus * gradient,
        LinearProfile {
            c0: spec.c0,
            c1: spec.c1,
            delta: p.delta,
        },
        "planck",
    )
}

/// Random-walk crossing time `τ = δ²/2D`. Requires `D₊ = D₋`.
pub fn crossing_time(params: &PhysicalParams) -> Result<f64> {
    if !params.equal_diffusion() {
        return Err(Error::UnequalDiffusion {
            d_plus: params.d_plus,
            d_minus: params.d_minus,
        });
    }
    Ok(params.delta * params.delta / (2.0 * params.d_plus))
}

/// Area `A = 2/((c₀−c₁)δ)` through which one ion of each species passes in `τ`.
pub fn crossing_area(spec: &PlanckSeedSpec) -> Result<f64> {
    spec.validate()?;
    Ok(2.0 / ((spec.c0 - spec.c1) * spec.params.delta))
}

/// Harmonic combination `τ' = 2τ₊τ₋/(τ₊+τ₋)` of the species crossing times.
pub fn tau_prime(params: &PhysicalParams) -> f64 {
    let d2 = params.delta * params.delta;
    let tau_plus = d2 / (2.0 * params.d_plus);
    let tau_minus = d2 / (2.0 * params.d_minus);
    2.0 * tau_plus * tau_minus / (tau_plus + tau_minus)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeBasis {
    Tau,
    TauPrime,
}

/// Charge transfers of ladder member `n` through `A` in the reference time,
/// in units of `ze`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizationRow {
    pub n: i32,
    /// `n·ΔJ·A·t`
    #[serde(rename = "Q")]
    pub q: f64,
    /// `(J⁽ⁿ⁾ − J⁽⁰⁾)·A·t`, the same charge through the currents.
    #[serde(rename = "Q_via_currents")]
    pub q_via_currents: f64,
    #[serde(rename = "J_plus_Atau", skip_serializing_if = "Option::is_none")]
    pub j_plus_atau: Option<f64>,
    #[serde(rename = "J_minus_Atau", skip_serializing_if = "Option::is_none")]
    pub j_minus_atau: Option<f64>,
    #[serde(rename = "J_Atau", skip_serializing_if = "Option::is_none")]
    pub j_atau: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantizationReport {
    /// `δ²/2D`; absent when `D₊ ≠ D₋`.
    pub tau: Option<f64>,
    pub tau_prime: f64,
    #[serde(rename = "A")]
    pub area: f64,
    /// Which time the charge rows use.
    pub time_basis: TimeBasis,
    /// Ions of each species crossing `A` in the reference time at `n = 0`.
    pub n_plus: f64,
    pub n_minus: f64,
    #[serde(rename = "delta_J")]
    pub delta_j: f64,
    /// Charges are reported in units of this value.
    pub ze: f64,
    pub third_term_max: f64,
    pub rows: Vec<QuantizationRow>,
}

impl QuantizationReport {
    pub fn row(&self, n: i32) -> Option<&QuantizationRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Quantized charge transfers for `n_min..=n_max`.
///
/// With equal diffusion coefficients the rows use `τ` and carry the species
/// transfers; otherwise only `Q` rows are produced, over `τ'`.
pub fn quantization_report(spec: &PlanckSeedSpec, n_min: i32, n_max: i32) -> Result<QuantizationReport> {
    if n_min > n_max {
        return Err(Error::IndexRange { n_min, n_max });
    }
    let area = crossing_area(spec)?;
    let seed = make_planck_seed(spec)?;
    let params = spec.params;
    let ze = params.ze();
    let dj = delta_j(&seed);
    let equal = params.equal_diffusion();
    let tau = if equal { Some(crossing_time(&params)?) } else { None };
    let tp = tau_prime(&params);
    let (time, basis) = match tau {
        Some(t) => (t, TimeBasis::Tau),
        None => (tp, TimeBasis::TauPrime),
    };
    let at = area * time;
    let j0 = current_ladder_closed_form(&seed, 0).total;

    let rows = (n_min..=n_max)
        .map(|n| {
            let j = current_ladder_closed_form(&seed, n);
            let species = |v: f64| equal.then_some(v * at / ze);
            QuantizationRow {
                n,
                q: n as f64 * dj * at / ze,
                q_via_currents: (j.total - j0) * at / ze,
                j_plus_atau: species(j.j_plus),
                j_minus_atau: species(j.j_minus),
                j_atau: species(j.total),
            }
        })
        .collect();

    Ok(QuantizationReport {
        tau,
        tau_prime: tp,
        area,
        time_basis: basis,
        n_plus: seed.phi_plus() * at,
        n_minus: seed.phi_minus() * at,
        delta_j: dj,
        ze,
        third_term_max: third_term_magnitude(spec),
        rows,
    })
}

/// Closed-form first transformed member of the seed ladder.
#[derive(Debug, Clone, Copy)]
pub struct FirstMember {
    c0: f64,
    c1: f64,
    params: PhysicalParams,
}

impl FirstMember {
    /// `E⁽¹⁾(x) = (2kT/zeδ)(c₀−c₁)/(c₀+(c₁−c₀)x/δ)`
    pub fn field(&self, x: f64) -> f64 {
        let p = &self.params;
        (2.0 * p.kt / (p.ze() * p.delta)) * (self.c0 - self.c1) / (self.c0 + (self.c1 - self.c0) * x / p.delta)
    }

    /// `c₊⁽¹⁾(x) = c₀[1 + (c₁/c₀−1)x/δ + εE⁽¹⁾(x)²/8πkTc₀]`
    pub fn c_plus(&self, x: f64) -> f64 {
        self.c0 * (1.0 + (self.c1 / self.c0 - 1.0) * x / self.params.delta + self.third_term(x))
    }

    /// The dimensionless field term `εE⁽¹⁾(x)²/(8πkTc₀)`.
    pub fn third_term(&self, x: f64) -> f64 {
        let e = self.field(x);
        self.params.eps * e * e / (8.0 * PI * self.params.kt * self.c0)
    }
}

pub fn s1_closed_form(spec: &PlanckSeedSpec) -> Result<FirstMember> {
    spec.validate()?;
    Ok(FirstMember {
        c0: spec.c0,
        c1: spec.c1,
        params: spec.params,
    })
}

/// Largest value over the slab of `εE⁽¹⁾²/(8πkTc₀)`, attained at `x = δ`.
pub fn third_term_magnitude(spec: &PlanckSeedSpec) -> f64 {
    FirstMember {
        c0: spec.c0,
        c1: spec.c1,
        params: spec.params,
    }
    .third_term(spec.params.delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backlund::apply_b;

    fn unequal() -> PlanckSeedSpec {
        PlanckSeedSpec::new(
            2.0,
            1.0,
            PhysicalParams {
                d_plus: 2.0,
                d_minus: 1.0,
                ..PhysicalParams::canonical()
            },
        )
        .unwrap()
    }

    #[test]
    fn canonical_seed() {
        let s = make_planck_seed(&PlanckSeedSpec::canonical()).unwrap();
        assert_eq!((s.phi_plus(), s.phi_minus()), (1.0, 1.0));
        let p = s.eval(0.5).unwrap();
        assert_eq!((p.c_plus, p.c_minus, p.field), (1.5, 1.5, 0.0));
    }

    #[test]
    fn seed_rejects_non_decreasing_profile() {
        let p = PhysicalParams::canonical();
        assert!(PlanckSeedSpec::new(1.0, 1.0, p).is_err());
        assert!(PlanckSeedSpec::new(1.0, 2.0, p).is_err());
        assert!(PlanckSeedSpec::new(1.0, 0.0, p).is_err());
        let relaxed = PlanckSeedSpec::relaxed(1.0, 1.0, p).unwrap();
        assert!(make_planck_seed(&relaxed).is_err());
    }

    #[test]
    fn unequal_diffusion_fluxes() {
        let s = make_planck_seed(&unequal()).unwrap();
        assert_eq!((s.phi_plus(), s.phi_minus()), (2.0, 1.0));
    }

    #[test]
    fn seed_is_charge_neutral_bitwise() {
        let spec = PlanckSeedSpec::new(
            7.3,
            0.11,
            PhysicalParams {
                delta: 0.37,
                ..PhysicalParams::canonical()
            },
        )
        .unwrap();
        let s = make_planck_seed(&spec).unwrap();
        for x in s.grid(1000) {
            let p = s.eval(x).unwrap();
            assert_eq!(p.c_plus.to_bits(), p.c_minus.to_bits());
        }
    }

    #[test]
    fn crossing_quantities() {
        let spec = PlanckSeedSpec::canonical();
        let tau = crossing_time(&spec.params).unwrap();
        let area = crossing_area(&spec).unwrap();
        assert_eq!((tau, area, tau * area), (0.5, 2.0, 1.0));

        let wide = PhysicalParams {
            delta: 2.0,
            ..spec.params
        };
        assert_eq!(crossing_time(&wide).unwrap(), 4.0 * tau);

        let steep = PlanckSeedSpec::new(3.0, 1.0, spec.params).unwrap();
        let a2 = crossing_area(&steep).unwrap();
        assert_eq!(a2, area / 2.0);
        let s = make_planck_seed(&steep).unwrap();
        assert_eq!(s.phi_plus() * a2 * tau, 1.0);

        assert!(matches!(
            crossing_time(&unequal().params),
            Err(Error::UnequalDiffusion { .. })
        ));
        assert!(crossing_area(&PlanckSeedSpec::relaxed(1.0, 1.0, spec.params).unwrap()).is_err());
    }

    #[test]
    fn tau_prime_values() {
        let p = PhysicalParams {
            d_plus: 0.7,
            d_minus: 0.7,
            delta: 1.9,
            ..PhysicalParams::canonical()
        };
        assert!((tau_prime(&p) - crossing_time(&p).unwrap()).abs() < 1e-15);
        assert!((tau_prime(&unequal().params) - 1.0 / 3.0).abs() < 1e-15);

        let spec = unequal();
        let seed = make_planck_seed(&spec).unwrap();
        let charge = delta_j(&seed) * crossing_area(&spec).unwrap() * tau_prime(&spec.params);
        assert!((charge / (4.0 * spec.params.ze()) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_report() {
        let r = quantization_report(&PlanckSeedSpec::canonical(), -1, 1).unwrap();
        assert_eq!(r.time_basis, TimeBasis::Tau);
        assert_eq!((r.n_plus, r.n_minus), (1.0, 1.0));
        let q: Vec<f64> = r.rows.iter().map(|r| r.q).collect();
        assert_eq!(q, [-4.0, 0.0, 4.0]);
        let species: Vec<(f64, f64)> = r
            .rows
            .iter()
            .map(|r| (r.j_plus_atau.unwrap(), r.j_minus_atau.unwrap()))
            .collect();
        assert_eq!(species, [(-1.0, -3.0), (1.0, -1.0), (3.0, 1.0)]);
        assert!(quantization_report(&PlanckSeedSpec::canonical(), 1, 0).is_err());
    }

    #[test]
    fn unequal_report_uses_tau_prime() {
        let r = quantization_report(&unequal(), -2, 2).unwrap();
        assert_eq!(r.time_basis, TimeBasis::TauPrime);
        assert!(r.tau.is_none());
        for row in &r.rows {
            assert!(row.j_plus_atau.is_none() && row.j_minus_atau.is_none() && row.j_atau.is_none());
            assert!((row.q - 4.0 * row.n as f64).abs() < 1e-12);
            assert!((row.q_via_currents - row.q).abs() < 1e-12);
        }
    }

    #[test]
    fn first_member_closed_form() {
        let f = s1_closed_form(&PlanckSeedSpec::canonical()).unwrap();
        assert_eq!(f.field(0.0), 1.0);
        assert_eq!(f.c_plus(0.0), 2.5);
        assert_eq!(f.field(1.0), 2.0);
        assert!((f.field(0.5) - 4.0 / 3.0).abs() < 1e-15);

        let near = PlanckSeedSpec::new(1.0 + 1e-12, 1.0, PhysicalParams::canonical()).unwrap();
        let f = s1_closed_form(&near).unwrap();
        assert!(f.field(0.5).abs() < 1e-11);
        assert!((f.c_plus(0.5) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn first_member_matches_engine() {
        let spec = PlanckSeedSpec::new(
            5.0,
            0.3,
            PhysicalParams {
                z: 2,
                kt: 0.8,
                eps: 3.0,
                delta: 1.7,
                ..PhysicalParams::canonical()
            },
        )
        .unwrap();
        let f = s1_closed_form(&spec).unwrap();
        let s1 = apply_b(&make_planck_seed(&spec).unwrap());
        for x in s1.grid(200) {
            let p = s1.eval(x).unwrap();
            assert!((p.field / f.field(x) - 1.0).abs() < 1e-12);
            assert!((p.c_plus / f.c_plus(x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn third_term_values() {
        // E⁽¹⁾(δ) = 2, so εE²/(8πkTc₀) = 4π·4/(8π·2) = 1.
        assert!((third_term_magnitude(&PlanckSeedSpec::canonical()) - 1.0).abs() < 1e-15);
        let aq = third_term_magnitude(&PlanckSeedSpec::aqueous_cgs());
        assert!(aq > 0.0 && aq <= 1e-8, "{aq}");
        let flat = PlanckSeedSpec::new(1.0 + 1e-9, 1.0, PhysicalParams::canonical()).unwrap();
        assert!(third_term_magnitude(&flat) < 1e-16);
    }

    #[test]
    fn document_parsing() {
        let spec = PlanckSeedSpec::from_json_str(r#"{"c0": 4.0, "D_minus": 3.0}"#).unwrap();
        assert_eq!(spec.c0, 4.0);
        assert_eq!(spec.c1, 1.0);
        assert_eq!(spec.params.d_minus, 3.0);
        assert!(PlanckSeedSpec::from_json_str(r#"{"c2": 1.0}"#).is_err());
        let back = PlanckSeedSpec::from_json_str(&PlanckSeedSpec::aqueous_cgs().to_json_value().to_string()).unwrap();
        assert_eq!(back, PlanckSeedSpec::aqueous_cgs());
    }

    #[test]
    fn presets_by_name() {
        assert_eq!(
            Preset::from_name("canonical").unwrap().spec(),
            PlanckSeedSpec::canonical()
        );
        assert_eq!(Preset::from_name("aqueous-cgs").unwrap(), Preset::AqueousCgs);
        assert!(Preset::from_name("seawater").is_err());
    }
}
