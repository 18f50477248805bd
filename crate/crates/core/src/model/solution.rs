use adaptagg_solver::{Backend, Limits, SolveOutcome, SolveRequest, SolveStats, Status, Tolerances, VarId};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{EsomInstance, ModelError};
use crate::TechId;

/// Installed capacities. Thermal capacity is reported both as units and as MW.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Capacities {
    pub ire_mw: IndexMap<TechId, f64>,
    pub storage_energy_mwh: IndexMap<TechId, f64>,
    pub storage_power_mw: IndexMap<TechId, f64>,
    pub thermal_units: IndexMap<TechId, f64>,
    pub thermal_mw: IndexMap<TechId, f64>,
}

impl Capacities {
    /// Renewables, storage energy, storage power, then thermal MW, each in catalog order.
    pub fn feature_vector(&self) -> Vec<f64> {
        self.ire_mw
            .values()
            .chain(self.storage_energy_mwh.values())
            .chain(self.storage_power_mw.values())
            .chain(self.thermal_mw.values())
            .copied()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub degradation: f64,
    pub thermal_operation: f64,
    pub startup_shutdown: f64,
    pub fixed: f64,
}

impl CostBreakdown {
    pub fn variable(&self) -> f64 {
        self.degradation + self.thermal_operation + self.startup_shutdown
    }

    pub fn total(&self) -> f64 {
        self.variable() + self.fixed
    }
}

/// Hourly operation of one block. Series are keyed by technology id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockDispatch {
    pub label: String,
    pub weight: f64,
    pub curtailment: Vec<f64>,
    pub discharge: IndexMap<TechId, Vec<f64>>,
    pub charge: IndexMap<TechId, Vec<f64>>,
    pub soc: IndexMap<TechId, Vec<f64>>,
    pub thermal_output: IndexMap<TechId, Vec<f64>>,
    pub online: IndexMap<TechId, Vec<f64>>,
    pub startups: IndexMap<TechId, Vec<f64>>,
    pub shutdowns: IndexMap<TechId, Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSolution {
    pub status: Status,
    pub objective: f64,
    pub capacities: Capacities,
    pub costs: CostBreakdown,
    pub dispatch: Vec<BlockDispatch>,
}

fn values(x: &[f64], ids: &[VarId]) -> Vec<f64> {
    ids.iter().map(|v| x[v.index()]).collect()
}

/// Decode a solver point, recomputing every cost term from catalog prices.
///
/// Fails when the outcome carries no point, or when the recomputed total differs from the
/// solver's objective by more than one part in a million.
pub fn extract_costs(
    instance: &EsomInstance,
    outcome: &SolveOutcome,
) -> Result<PlanSolution, ModelError> {
    let (Some(x), Some(reported)) = (&outcome.primal, outcome.objective) else {
        return Err(ModelError::NoSolution(outcome.status));
    };
    let cat = &instance.catalog;
    let v = &instance.vars;
    let scale = instance.fixed_cost_scale;

    let keyed = |ids: &mut dyn Iterator<Item = &TechId>, vals: Vec<f64>| -> IndexMap<TechId, f64> {
        ids.cloned().zip(vals).collect()
    };
    let ire_mw = keyed(&mut cat.ire.iter().map(|t| &t.id), values(x, &v.ire_capacity));
    let storage_energy_mwh = keyed(&mut cat.storage.iter().map(|t| &t.id), values(x, &v.storage_energy));
    let storage_power_mw = keyed(&mut cat.storage.iter().map(|t| &t.id), values(x, &v.storage_power));
    let thermal_units = keyed(&mut cat.thermal.iter().map(|t| &t.id), values(x, &v.thermal_units));
    let thermal_mw: IndexMap<TechId, f64> = cat
        .thermal
        .iter()
        .map(|j| (j.id.clone(), thermal_units[&j.id] * j.unit_size_mw))
        .collect();

    let mut costs = CostBreakdown::default();
    for t in &cat.ire {
        costs.fixed += scale * t.capex_per_mw() * ire_mw[&t.id];
    }
    for s in &cat.storage {
        costs.fixed += scale
            * (s.energy_capex_per_mwh() * storage_energy_mwh[&s.id]
                + s.power_capex_per_mw() * storage_power_mw[&s.id]);
    }
    for j in &cat.thermal {
        costs.fixed += scale * j.capex_per_unit() * thermal_units[&j.id];
    }

    let mut dispatch = Vec::with_capacity(instance.blocks.len());
    for (block, bv) in instance.blocks.iter().zip(&v.blocks) {
        let w = block.weight;
        let series = |ids: &[TechId], vars: &[Vec<VarId>]| -> IndexMap<TechId, Vec<f64>> {
            ids.iter()
                .cloned()
                .zip(vars.iter().map(|vs| values(x, vs)))
                .collect()
        };
        let storage_ids: Vec<TechId> = cat.storage.iter().map(|s| s.id.clone()).collect();
        let thermal_ids: Vec<TechId> = cat.thermal.iter().map(|j| j.id.clone()).collect();
        let d = BlockDispatch {
            label: block.label.clone(),
            weight: w,
            curtailment: values(x, &bv.curtailment),
            discharge: series(&storage_ids, &bv.discharge),
            charge: series(&storage_ids, &bv.charge),
            soc: series(&storage_ids, &bv.soc),
            thermal_output: series(&thermal_ids, &bv.thermal_output),
            online: series(&thermal_ids, &bv.online),
            startups: series(&thermal_ids, &bv.startups),
            shutdowns: series(&thermal_ids, &bv.shutdowns),
        };
        for s in &cat.storage {
            let throughput: f64 =
                d.discharge[&s.id].iter().sum::<f64>() + d.charge[&s.id].iter().sum::<f64>();
            costs.degradation += w * s.throughput_cost_usd_per_mwh * throughput;
        }
        for j in &cat.thermal {
            costs.thermal_operation +=
                w * j.opex_usd_per_mwh * d.thermal_output[&j.id].iter().sum::<f64>();
            let events: f64 =
                d.startups[&j.id].iter().sum::<f64>() + d.shutdowns[&j.id].iter().sum::<f64>();
            costs.startup_shutdown += w * j.startup_shutdown_usd_per_event * events;
        }
        dispatch.push(d);
    }

    let recomputed = costs.total();
    if (recomputed - reported).abs() > 1e-6 * reported.abs().max(1.0) {
        return Err(ModelError::CostMismatch {
            recomputed,
            reported,
        });
    }
    Ok(PlanSolution {
        status: outcome.status,
        objective: reported,
        capacities: Capacities {
            ire_mw,
            storage_energy_mwh,
            storage_power_mw,
            thermal_units,
            thermal_mw,
        },
        costs,
        dispatch,
    })
}

impl EsomInstance {
    /// Solve with `backend` and decode the result.
    pub fn solve(
        &self,
        backend: &dyn Backend,
        tolerances: Tolerances,
        limits: Limits,
    ) -> Result<(PlanSolution, SolveStats), ModelError> {
        let request = SolveRequest::new(&self.problem)
            .with_tolerances(tolerances)
            .with_limits(limits);
        let outcome = backend.solve(&request)?;
        let plan = extract_costs(self, &outcome)?;
        Ok((plan, outcome.stats))
    }
}
