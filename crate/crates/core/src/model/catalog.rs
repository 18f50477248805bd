use serde::{Deserialize, Serialize};

use super::{ModelError, Variant};
use crate::TechId;

const KW_PER_MW: f64 = 1000.0;

/// Intermittent renewable resource priced per kW of nameplate capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IreTech {
    pub id: TechId,
    pub capex_usd_per_kw: f64,
}

impl IreTech {
    pub fn capex_per_mw(&self) -> f64 {
        self.capex_usd_per_kw * KW_PER_MW
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StorageTech {
    pub id: TechId,
    pub energy_capex_usd_per_kwh: f64,
    pub power_capex_usd_per_kw: f64,
    /// Charged plus discharged energy is billed at this rate.
    pub throughput_cost_usd_per_mwh: f64,
    /// Applied once on charge and once on discharge.
    pub efficiency: f64,
}

impl StorageTech {
    pub fn energy_capex_per_mwh(&self) -> f64 {
        self.energy_capex_usd_per_kwh * KW_PER_MW
    }

    pub fn power_capex_per_mw(&self) -> f64 {
        self.power_capex_usd_per_kw * KW_PER_MW
    }
}

/// Whether the number of thermal units is a decision or given.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThermalSizing {
    /// Build between zero and `max_units` units.
    #[default]
    Expand,
    /// All `max_units` units exist; their investment cost is still charged.
    FixedFleet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalTech {
    pub id: TechId,
    pub capex_usd_per_kw: f64,
    pub opex_usd_per_mwh: f64,
    pub startup_shutdown_usd_per_event: f64,
    pub min_output_fraction: f64,
    pub max_output_fraction: f64,
    pub min_up_hours: u32,
    pub min_down_hours: u32,
    pub max_units: u32,
    pub unit_size_mw: f64,
    #[serde(default)]
    pub sizing: ThermalSizing,
}

impl ThermalTech {
    pub fn capex_per_unit(&self) -> f64 {
        self.capex_usd_per_kw * KW_PER_MW * self.unit_size_mw
    }
}

/// Technologies available to the planner with their prices and operating limits.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechCatalog {
    #[serde(default)]
    pub ire: Vec<IreTech>,
    #[serde(default)]
    pub storage: Vec<StorageTech>,
    #[serde(default)]
    pub thermal: Vec<ThermalTech>,
}

fn check_cost(what: &str, id: &TechId, v: f64) -> Result<(), ModelError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidCatalog(format!(
            "{id}: {what} must be a non-negative number, got {v}"
        )))
    }
}

impl TechCatalog {
    /// PV, wind and a battery at the baseline prices; the integer variant adds one thermal fleet.
    pub fn baseline(variant: Variant) -> Self {
        let id = |s: &str| TechId::new(s).expect("valid id");
        let thermal = match variant {
            Variant::Linear => Vec::new(),
            Variant::Integer => vec![ThermalTech {
                id: id("thermal"),
                capex_usd_per_kw: 1000.0,
                opex_usd_per_mwh: 30.0,
                startup_shutdown_usd_per_event: 5000.0,
                min_output_fraction: 0.3,
                max_output_fraction: 1.0,
                min_up_hours: 6,
                min_down_hours: 6,
                max_units: 15,
                unit_size_mw: 100.0,
                sizing: ThermalSizing::Expand,
            }],
        };
        TechCatalog {
            ire: vec![
                IreTech {
                    id: id("solar"),
                    capex_usd_per_kw: 1000.0,
                },
                IreTech {
                    id: id("wind"),
                    capex_usd_per_kw: 1500.0,
                },
            ],
            storage: vec![StorageTech {
                id: id("battery"),
                energy_capex_usd_per_kwh: 200.0,
                power_capex_usd_per_kw: 70.0,
                throughput_cost_usd_per_mwh: 50.0,
                efficiency: 0.95,
            }],
            thermal,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let mut seen = std::collections::HashSet::new();
        let ids = self
            .ire
            .iter()
            .map(|t| &t.id)
            .chain(self.storage.iter().map(|t| &t.id))
            .chain(self.thermal.iter().map(|t| &t.id));
        for id in ids {
            if !seen.insert(id) {
                return Err(ModelError::InvalidCatalog(format!("duplicate id `{id}`")));
            }
        }
        for t in &self.ire {
            check_cost("capex_usd_per_kw", &t.id, t.capex_usd_per_kw)?;
        }
        for s in &self.storage {
            check_cost("energy_capex_usd_per_kwh", &s.id, s.energy_capex_usd_per_kwh)?;
            check_cost("power_capex_usd_per_kw", &s.id, s.power_capex_usd_per_kw)?;
            check_cost("throughput_cost_usd_per_mwh", &s.id, s.throughput_cost_usd_per_mwh)?;
            if !(s.efficiency > 0.0 && s.efficiency <= 1.0) {
                return Err(ModelError::InvalidCatalog(format!(
                    "{}: efficiency must lie in (0, 1], got {}",
                    s.id, s.efficiency
                )));
            }
        }
        for j in &self.thermal {
            check_cost("capex_usd_per_kw", &j.id, j.capex_usd_per_kw)?;
            check_cost("opex_usd_per_mwh", &j.id, j.opex_usd_per_mwh)?;
            check_cost(
                "startup_shutdown_usd_per_event",
                &j.id,
                j.startup_shutdown_usd_per_event,
            )?;
            if !(0.0 <= j.min_output_fraction
                && j.min_output_fraction <= j.max_output_fraction
                && j.max_output_fraction <= 1.0)
            {
                return Err(ModelError::InvalidCatalog(format!(
                    "{}: need 0 <= min_output_fraction <= max_output_fraction <= 1",
                    j.id
                )));
            }
            if !(j.unit_size_mw.is_finite() && j.unit_size_mw > 0.0) {
                return Err(ModelError::InvalidCatalog(format!(
                    "{}: unit_size_mw must be positive",
                    j.id
                )));
            }
        }
        Ok(())
    }

    /// Copy with the CAPEX of renewable `id` multiplied by `factor`.
    pub fn with_ire_capex_scaled(&self, id: &TechId, factor: f64) -> Result<Self, ModelError> {
        let mut out = self.clone();
        let tech = out
            .ire
            .iter_mut()
            .find(|t| &t.id == id)
            .ok_or_else(|| ModelError::InvalidCatalog(format!("no renewable `{id}` to rescale")))?;
        tech.capex_usd_per_kw *= factor;
        Ok(out)
    }

    /// Labels of the capacity decisions, in the order used for feature vectors.
    pub fn capacity_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.ire.iter().map(|t| t.id.to_string()).collect();
        labels.extend(self.storage.iter().map(|s| format!("{}_energy", s.id)));
        labels.extend(self.storage.iter().map(|s| format!("{}_power", s.id)));
        labels.extend(self.thermal.iter().map(|j| j.id.to_string()));
        labels
    }
}

/// Renewable portfolio standard: thermal energy may cover at most `1 - rps` of demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicy")]
pub struct Policy {
    rps: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    rps: f64,
}

impl TryFrom<RawPolicy> for Policy {
    type Error = ModelError;

    fn try_from(raw: RawPolicy) -> Result<Self, Self::Error> {
        Policy::new(raw.rps)
    }
}

impl Policy {
    pub fn new(rps: f64) -> Result<Self, ModelError> {
        if (0.0..=1.0).contains(&rps) {
            Ok(Policy { rps })
        } else {
            Err(ModelError::InvalidPolicy(rps))
        }
    }

    pub fn rps(&self) -> f64 {
        self.rps
    }

    pub fn thermal_share_cap(&self) -> f64 {
        1.0 - self.rps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn battery() -> StorageTech {
        StorageTech {
            id: TechId::new("battery").unwrap(),
            energy_capex_usd_per_kwh: 200.0,
            power_capex_usd_per_kw: 70.0,
            throughput_cost_usd_per_mwh: 50.0,
            efficiency: 0.95,
        }
    }

    #[test]
    fn converts_kw_prices_to_mw() {
        let b = battery();
        assert_eq!(b.energy_capex_per_mwh(), 200_000.0);
        assert_eq!(b.power_capex_per_mw(), 70_000.0);
    }

    #[test]
    fn rejects_bad_entries() {
        let mut cat = TechCatalog {
            storage: vec![battery()],
            ..Default::default()
        };
        assert!(cat.validate().is_ok());
        cat.storage[0].efficiency = 1.2;
        assert!(cat.validate().is_err());
        cat.storage[0].efficiency = 0.9;
        cat.storage.push(battery());
        assert!(cat.validate().is_err());
    }

    #[test]
    fn policy_range() {
        assert!(Policy::new(0.95).is_ok());
        assert!(Policy::new(1.01).is_err());
        assert!(serde_json::from_str::<Policy>(r#"{"rps": -0.1}"#).is_err());
        assert_eq!(serde_json::from_str::<Policy>(r#"{"rps": 0.5}"#).unwrap().rps(), 0.5);
    }
}
