//! Dimensional constants of the two-species slab, in Gaussian-CGS units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical constants of the slab problem.
///
/// Units follow the Gaussian-CGS convention (the `4π/ε` factor in Poisson's
/// equation). `kt` is the product `k·T`; callers holding a temperature
/// multiply by Boltzmann's constant themselves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Common valence of both species.
    pub z: u32,
    /// Elementary charge.
    pub e: f64,
    /// Thermal energy `k·T`.
    #[serde(rename = "kT")]
    pub kt: f64,
    /// Dielectric constant.
    pub eps: f64,
    #[serde(rename = "D_plus")]
    pub d_plus: f64,
    #[serde(rename = "D_minus")]
    pub d_minus: f64,
    /// Slab thickness.
    pub delta: f64,
}

impl PhysicalParams {
    pub fn new(z: u32, e: f64, kt: f64, eps: f64, d_plus: f64, d_minus: f64, delta: f64) -> Result<Self> {
        let p = Self {
            z,
            e,
            kt,
            eps,
            d_plus,
            d_minus,
            delta,
        };
        p.validate()?;
        Ok(p)
    }

    /// The dimensionless preset `z = e = kT = δ = D± = 1`, `ε = 4π`.
    pub fn canonical() -> Self {
        Self {
            z: 1,
            e: 1.0,
            kt: 1.0,
            eps: 4.0 * std::f64::consts::PI,
            d_plus: 1.0,
            d_minus: 1.0,
            delta: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z == 0 {
            return Err(Error::InvalidParam {
                name: "z",
                value: 0.0,
                reason: "valence must be a positive integer",
            });
        }
        let positive = [
            ("e", self.e),
            ("kT", self.kt),
            ("eps", self.eps),
            ("D_plus", self.d_plus),
            ("D_minus", self.d_minus),
            ("delta", self.delta),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParam {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                });
            }
        }
        Ok(())
    }

    /// The charge `z·e` carried by one ion.
    pub fn ze(&self) -> f64 {
        self.z as f64 * self.e
    }

    pub fn equal_diffusion(&self) -> bool {
        self.d_plus == self.d_minus
    }

    /// Parse a flat JSON object with keys `z, e, kT, eps, D_plus, D_minus, delta`.
    ///
    /// Missing keys take their canonical values; unknown keys are rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))?;
        doc.resolve(Self::canonical())
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self::canonical()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
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
}

impl ParamsDoc {
    fn resolve(self, base: PhysicalParams) -> Result<PhysicalParams> {
        PhysicalParams::new(
            self.z.unwrap_or(base.z),
            self.e.unwrap_or(base.e),
            self.kt.unwrap_or(base.kt),
            self.eps.unwrap_or(base.eps),
            self.d_plus.unwrap_or(base.d_plus),
            self.d_minus.unwrap_or(base.d_minus),
            self.delta.unwrap_or(base.delta),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_keys_default_to_canonical() {
        let p = PhysicalParams::from_json_str(r#"{"D_plus": 2.0}"#).unwrap();
        assert_eq!(p.d_plus, 2.0);
        assert_eq!(p.d_minus, 1.0);
        assert_eq!(p.eps, 4.0 * std::f64::consts::PI);
        assert_eq!(
            PhysicalParams::from_json_str("{}").unwrap(),
            PhysicalParams::canonical()
        );
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = PhysicalParams::from_json_str(r#"{"T": 300.0}"#).unwrap_err();
        assert!(matches!(err, Error::Document(_)), "{err}");
    }

    #[test]
    fn invariants_enforced() {
        assert!(PhysicalParams::from_json_str(r#"{"z": 0}"#).is_err());
        assert!(PhysicalParams::from_json_str(r#"{"delta": -1.0}"#).is_err());
        assert!(PhysicalParams::from_json_str(r#"{"kT": 0.0}"#).is_err());
        assert!(PhysicalParams::from_json_str(r#"{"z": 1.5}"#).is_err());
    }

    #[test]
    fn serialized_keys_match_document_format() {
        let text = serde_json::to_string(&PhysicalParams::canonical()).unwrap();
        for key in [
            "\"z\"",
            "\"e\"",
            "\"kT\"",
            "\"eps\"",
            "\"D_plus\"",
            "\"D_minus\"",
            "\"delta\"",
        ] {
            assert!(text.contains(key), "{text}");
        }
        assert_eq!(
            PhysicalParams::from_json_str(&text).unwrap(),
            PhysicalParams::canonical()
        );
    }
}
