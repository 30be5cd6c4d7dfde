//! Material constants.
//!
//! The built-in set is read-only and versioned; projects override entries
//! through the `materials` section of their config.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, DesignError};

/// Bumped whenever a built-in value changes, so reports can say which
/// constants they were computed with.
pub const DATABASE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterialSpec {
    pub name: String,
    /// Pa
    pub elastic_modulus: f64,
    /// kg/m³
    pub density: f64,
    /// Ω·m, conductors only
    pub resistivity: Option<f64>,
    /// Sheet stock thickness in m, when the material is bought as a sheet.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stock_thickness: Option<f64>,
}

impl MaterialSpec {
    pub fn new(name: &str, elastic_modulus: f64, density: f64, resistivity: Option<f64>) -> Self {
        Self {
            name: name.to_string(),
            elastic_modulus,
            density,
            resistivity,
            stock_thickness: None,
        }
    }

    pub fn validate(&self) -> Result<(), DesignError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.elastic_modulus) {
            return Err(invalid(
                "material",
                format!("{}: elastic modulus must be > 0", self.name),
            ));
        }
        if !positive(self.density) {
            return Err(invalid(
                "material",
                format!("{}: density must be > 0", self.name),
            ));
        }
        if let Some(r) = self.resistivity {
            if !positive(r) {
                return Err(invalid(
                    "material",
                    format!("{}: resistivity must be > 0", self.name),
                ));
            }
        }
        if let Some(t) = self.stock_thickness {
            if !positive(t) {
                return Err(invalid(
                    "material",
                    format!("{}: stock thickness must be > 0", self.name),
                ));
            }
        }
        Ok(())
    }

    pub fn resistivity(&self) -> Result<f64, DesignError> {
        self.resistivity
            .ok_or_else(|| DesignError::NotAConductor(self.name.clone()))
    }

    pub fn polyester() -> Self {
        Self::new("polyester", 2.5e9, 1390.0, None)
    }

    pub fn stainless_steel() -> Self {
        Self {
            stock_thickness: Some(12.7e-6),
            ..Self::new("stainless_steel", 193e9, 8000.0, Some(7.2e-7))
        }
    }

    pub fn copper() -> Self {
        Self::new("copper", 117e9, 8960.0, Some(1.68e-8))
    }

    pub fn ndfeb_n52() -> Self {
        Self::new("ndfeb_n52", 160e9, 7500.0, None)
    }

    pub fn carbon_fiber() -> Self {
        Self::new("carbon_fiber", 135e9, 1600.0, None)
    }

    pub fn aluminum() -> Self {
        Self::new("aluminum", 69e9, 2700.0, Some(2.65e-8))
    }
}

/// Partial override of a material; missing fields keep the built-in value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MaterialOverride {
    pub elastic_modulus: Option<f64>,
    pub density: Option<f64>,
    pub resistivity: Option<f64>,
    pub stock_thickness: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialDb {
    entries: BTreeMap<String, MaterialSpec>,
}

impl Default for MaterialDb {
    fn default() -> Self {
        Self::builtin()
    }
}

impl MaterialDb {
    pub fn builtin() -> Self {
        let entries = [
            MaterialSpec::polyester(),
            MaterialSpec::stainless_steel(),
            MaterialSpec::copper(),
            MaterialSpec::ndfeb_n52(),
            MaterialSpec::carbon_fiber(),
            MaterialSpec::aluminum(),
        ]
        .into_iter()
        .map(|m| (m.name.clone(), m))
        .collect();
        Self { entries }
    }

    pub fn get(&self, name: &str) -> Result<&MaterialSpec, DesignError> {
        self.entries
            .get(name)
            .ok_or_else(|| DesignError::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Apply an override. New names must supply modulus and density.
    pub fn apply(&mut self, name: &str, ov: &MaterialOverride) -> Result<(), DesignError> {
        let mut spec = match self.entries.get(name) {
            Some(existing) => existing.clone(),
            None => MaterialSpec::new(
                name,
                ov.elastic_modulus.ok_or_else(|| {
                    invalid(
                        "material",
                        format!("new material `{name}` needs elastic_modulus"),
                    )
                })?,
                ov.density.ok_or_else(|| {
                    invalid("material", format!("new material `{name}` needs density"))
                })?,
                None,
            ),
        };
        if let Some(v) = ov.elastic_modulus {
            spec.elastic_modulus = v;
        }
        if let Some(v) = ov.density {
            spec.density = v;
        }
        if let Some(v) = ov.resistivity {
            spec.resistivity = Some(v);
        }
        if let Some(v) = ov.stock_thickness {
            spec.stock_thickness = Some(v);
        }
        spec.validate()?;
        self.entries.insert(name.to_string(), spec);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid_and_positive() {
        let db = MaterialDb::builtin();
        for name in db.names() {
            db.get(name).unwrap().validate().unwrap();
        }
        assert_eq!(db.get("polyester").unwrap().elastic_modulus, 2.5e9);
        assert_eq!(
            db.get("stainless_steel").unwrap().stock_thickness,
            Some(12.7e-6)
        );
        assert_eq!(db.get("copper").unwrap().resistivity, Some(1.68e-8));
        assert_eq!(db.get("ndfeb_n52").unwrap().density, 7500.0);
    }

    #[test]
    fn override_and_add() {
        let mut db = MaterialDb::builtin();
        db.apply(
            "stainless_steel",
            &MaterialOverride {
                elastic_modulus: Some(200e9),
                ..Default::default()
            },
        )
        .unwrap();
        let steel = db.get("stainless_steel").unwrap();
        assert_eq!(steel.elastic_modulus, 200e9);
        assert_eq!(steel.density, 8000.0);

        assert!(db.apply("kapton", &MaterialOverride::default()).is_err());
        db.apply(
            "kapton",
            &MaterialOverride {
                elastic_modulus: Some(2.8e9),
                density: Some(1420.0),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(db.get("kapton").unwrap().resistivity().is_err());
    }

    #[test]
    fn rejects_non_positive_override() {
        let mut db = MaterialDb::builtin();
        let bad = MaterialOverride {
            density: Some(-1.0),
            ..Default::default()
        };
        assert!(db.apply("copper", &bad).is_err());
        assert!(matches!(
            db.get("unobtainium"),
            Err(DesignError::UnknownMaterial(_))
        ));
    }
}
