use adaptagg_solver::{ObjectiveSense, Problem, RowSense, VarId};
use serde::{Deserialize, Serialize};

use super::{ModelError, Policy, TechCatalog, Variant};
use crate::clustering::{AggregationResult, Representative};
use crate::timeseries::{HorizonData, TimeSlice};

/// How storage state of charge is tied together at the ends of each block of hours.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocBoundary {
    /// The hour before the first is the block's last hour.
    #[default]
    Cyclic,
    /// Storage starts the block empty; the final level is free.
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildOptions {
    pub soc_boundary: SocBoundary,
    /// Enforce the renewable portfolio standard inside single-slice subproblems.
    pub rps_in_slices: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            soc_boundary: SocBoundary::Cyclic,
            rps_in_slices: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Scope {
    Full,
    Slice { index: usize },
    Reduced { weights: Vec<u32> },
}

/// Chronological hours modelled as one unit, with the multiplier applied to its operating costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub weight: f64,
    pub load: Vec<f64>,
    /// Capacity factors in catalog renewable order.
    pub profiles: Vec<Vec<f64>>,
}

impl Block {
    pub fn hours(&self) -> usize {
        self.load.len()
    }
}

/// Solver variables of one block, indexed `[tech][hour]` or `[hour]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVars {
    pub curtailment: Vec<VarId>,
    pub discharge: Vec<Vec<VarId>>,
    pub charge: Vec<Vec<VarId>>,
    pub soc: Vec<Vec<VarId>>,
    pub thermal_output: Vec<Vec<VarId>>,
    pub online: Vec<Vec<VarId>>,
    pub startups: Vec<Vec<VarId>>,
    pub shutdowns: Vec<Vec<VarId>>,
}

/// Map from model quantities to solver variables; tech order follows the catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarIndex {
    pub ire_capacity: Vec<VarId>,
    pub storage_energy: Vec<VarId>,
    pub storage_power: Vec<VarId>,
    pub thermal_units: Vec<VarId>,
    pub blocks: Vec<BlockVars>,
}

/// A compiled planning problem together with everything needed to interpret its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct EsomInstance {
    pub problem: Problem,
    pub vars: VarIndex,
    pub scope: Scope,
    pub variant: Variant,
    pub catalog: TechCatalog,
    pub policy: Policy,
    pub options: BuildOptions,
    pub blocks: Vec<Block>,
    /// Multiplier on investment costs.
    pub fixed_cost_scale: f64,
    /// Index of the portfolio-standard row, when one was emitted.
    pub rps_row: Option<usize>,
}

fn check_inputs(
    data: &HorizonData,
    catalog: &TechCatalog,
    variant: Variant,
) -> Result<(), ModelError> {
    catalog.validate()?;
    if data.hours() == 0 {
        return Err(ModelError::EmptyHorizon);
    }
    if catalog.ire.is_empty() {
        return Err(ModelError::NoRenewables);
    }
    for t in &catalog.ire {
        if data.profile(&t.id).is_none() {
            return Err(ModelError::MissingProfile(t.id.clone()));
        }
    }
    match (variant, catalog.thermal.len()) {
        (Variant::Linear, 0) => Ok(()),
        (Variant::Integer, n) if n > 0 => Ok(()),
        (variant, thermal) => Err(ModelError::VariantMismatch { variant, thermal }),
    }
}

fn block_from(data: &HorizonData, catalog: &TechCatalog, label: String, offset: usize, len: usize, weight: f64) -> Block {
    Block {
        label,
        weight,
        load: data.load()[offset..offset + len].to_vec(),
        profiles: catalog
            .ire
            .iter()
            .map(|t| data.profile(&t.id).expect("checked")[offset..offset + len].to_vec())
            .collect(),
    }
}

/// Whole horizon as one chronological block.
pub fn build_full(
    data: &HorizonData,
    catalog: &TechCatalog,
    policy: Policy,
    variant: Variant,
    options: BuildOptions,
) -> Result<EsomInstance, ModelError> {
    check_inputs(data, catalog, variant)?;
    let block = block_from(data, catalog, "full".into(), 0, data.hours(), 1.0);
    compile(catalog, policy, variant, options, vec![block], 1.0, Scope::Full, true)
}

/// One slice with investment costs prorated to its share of the horizon.
pub fn build_slice(
    data: &HorizonData,
    slice: TimeSlice,
    catalog: &TechCatalog,
    policy: Policy,
    variant: Variant,
    options: BuildOptions,
) -> Result<EsomInstance, ModelError> {
    check_inputs(data, catalog, variant)?;
    if slice.length == 0 || slice.offset + slice.length > data.hours() {
        return Err(ModelError::SliceOutOfRange {
            index: slice.index,
            hours: data.hours(),
        });
    }
    let block = block_from(
        data,
        catalog,
        format!("s{}", slice.index),
        slice.offset,
        slice.length,
        1.0,
    );
    let scale = slice.length as f64 / data.hours() as f64;
    compile(
        catalog,
        policy,
        variant,
        options,
        vec![block],
        scale,
        Scope::Slice { index: slice.index },
        options.rps_in_slices,
    )
}

/// Representative slices sharing one set of capacities, operating costs scaled by weight.
pub fn build_reduced(
    data: &HorizonData,
    aggregation: &AggregationResult,
    catalog: &TechCatalog,
    policy: Policy,
    variant: Variant,
    options: BuildOptions,
) -> Result<EsomInstance, ModelError> {
    check_inputs(data, catalog, variant)?;
    let len = aggregation.slice_hours;
    let available = if len == 0 { 0 } else { data.hours() / len };
    let total: u64 = aggregation.weights.iter().map(|&w| w as u64).sum();
    if aggregation.representatives.len() != aggregation.weights.len() {
        return Err(ModelError::InconsistentAggregation(
            "one weight per representative is required".into(),
        ));
    }
    if total != aggregation.slice_count as u64 || aggregation.slice_count > available {
        return Err(ModelError::InconsistentAggregation(format!(
            "weights sum to {total} but the horizon has {available} slices of {len} h (aggregation expects {})",
            aggregation.slice_count
        )));
    }
    if aggregation.weights.contains(&0) {
        return Err(ModelError::InconsistentAggregation("zero weight".into()));
    }
    let mut blocks = Vec::with_capacity(aggregation.weights.len());
    for (c, (rep, &w)) in aggregation
        .representatives
        .iter()
        .zip(&aggregation.weights)
        .enumerate()
    {
        let block = match rep {
            Representative::Slice { index } => {
                if *index >= available {
                    return Err(ModelError::InconsistentAggregation(format!(
                        "representative slice {index} is outside the horizon"
                    )));
                }
                block_from(data, catalog, format!("c{c}"), index * len, len, w as f64)
            }
            Representative::Centroid { load, profiles } => {
                if load.len() != len {
                    return Err(ModelError::InconsistentAggregation(format!(
                        "centroid {c} has {} hours, expected {len}",
                        load.len()
                    )));
                }
                let mut series = Vec::with_capacity(catalog.ire.len());
                for t in &catalog.ire {
                    let p = profiles
                        .get(&t.id)
                        .ok_or_else(|| ModelError::MissingProfile(t.id.clone()))?;
                    if p.len() != len {
                        return Err(ModelError::InconsistentAggregation(format!(
                            "centroid {c} profile `{}` has the wrong length",
                            t.id
                        )));
                    }
                    series.push(p.clone());
                }
                Block {
                    label: format!("c{c}"),
                    weight: w as f64,
                    load: load.clone(),
                    profiles: series,
                }
            }
        };
        blocks.push(block);
    }
    compile(
        catalog,
        policy,
        variant,
        options,
        blocks,
        1.0,
        Scope::Reduced {
            weights: aggregation.weights.clone(),
        },
        true,
    )
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn compile(
    catalog: &TechCatalog,
    policy: Policy,
    variant: Variant,
    options: BuildOptions,
    blocks: Vec<Block>,
    fixed_cost_scale: f64,
    scope: Scope,
    apply_rps: bool,
) -> Result<EsomInstance, ModelError> {
    let integer = variant == Variant::Integer;
    let mut p = Problem::new(
        match &scope {
            Scope::Full => "esom_full".to_string(),
            Scope::Slice { index } => format!("esom_slice_{index}"),
            Scope::Reduced { .. } => "esom_reduced".to_string(),
        },
        ObjectiveSense::Minimize,
    );

    let ire_capacity: Vec<VarId> = catalog
        .ire
        .iter()
        .map(|t| p.add_nonneg(format!("cap_{}", t.id), fixed_cost_scale * t.capex_per_mw()))
        .collect();
    let storage_energy: Vec<VarId> = catalog
        .storage
        .iter()
        .map(|s| {
            p.add_nonneg(
                format!("ene_{}", s.id),
                fixed_cost_scale * s.energy_capex_per_mwh(),
            )
        })
        .collect();
    let storage_power: Vec<VarId> = catalog
        .storage
        .iter()
        .map(|s| {
            p.add_nonneg(
                format!("pow_{}", s.id),
                fixed_cost_scale * s.power_capex_per_mw(),
            )
        })
        .collect();
    let thermal_units: Vec<VarId> = catalog
        .thermal
        .iter()
        .map(|j| {
            let max = j.max_units as f64;
            let lower = match j.sizing {
                super::ThermalSizing::Expand => 0.0,
                super::ThermalSizing::FixedFleet => max,
            };
            p.add_variable(
                format!("units_{}", j.id),
                lower,
                max,
                fixed_cost_scale * j.capex_per_unit(),
                integer,
            )
        })
        .collect();

    let mut block_vars = Vec::with_capacity(blocks.len());
    let mut rps_terms: Vec<(VarId, f64)> = Vec::new();
    let mut weighted_demand = 0.0;
    for (b, block) in blocks.iter().enumerate() {
        let hours = block.hours();
        let w = block.weight;
        let tag = |t: usize| format!("b{b}_t{t}");
        let curtailment: Vec<VarId> = (0..hours)
            .map(|t| p.add_nonneg(format!("curt_{}", tag(t)), 0.0))
            .collect();
        let per_storage = |p: &mut Problem, prefix: &str, cost: &dyn Fn(usize) -> f64| {
            catalog
                .storage
                .iter()
                .enumerate()
                .map(|(s, tech)| {
                    (0..hours)
                        .map(|t| p.add_nonneg(format!("{prefix}_{}_{}", tech.id, tag(t)), cost(s)))
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>()
        };
        let throughput = |s: usize| w * catalog.storage[s].throughput_cost_usd_per_mwh;
        let discharge = per_storage(&mut p, "dis", &throughput);
        let charge = per_storage(&mut p, "cha", &throughput);
        let soc = per_storage(&mut p, "soc", &|_| 0.0);

        let mut thermal_output = Vec::new();
        let mut online = Vec::new();
        let mut startups = Vec::new();
        let mut shutdowns = Vec::new();
        for j in &catalog.thermal {
            let n = j.max_units as f64;
            let id = &j.id;
            thermal_output.push(
                (0..hours)
                    .map(|t| p.add_nonneg(format!("gen_{id}_{}", tag(t)), w * j.opex_usd_per_mwh))
                    .collect::<Vec<_>>(),
            );
            let mut counts = |prefix: &str, cost: f64| {
                (0..hours)
                    .map(|t| p.add_variable(format!("{prefix}_{id}_{}", tag(t)), 0.0, n, cost, integer))
                    .collect::<Vec<_>>()
            };
            online.push(counts("on", 0.0));
            startups.push(counts("up", w * j.startup_shutdown_usd_per_event));
            shutdowns.push(counts("dn", w * j.startup_shutdown_usd_per_event));
        }

        for t in 0..hours {
            let mut terms: Vec<(VarId, f64)> = Vec::new();
            for (i, &cap) in ire_capacity.iter().enumerate() {
                let a = block.profiles[i][t];
                if a != 0.0 {
                    terms.push((cap, a));
                }
            }
            terms.push((curtailment[t], -1.0));
            for gen in &thermal_output {
                terms.push((gen[t], 1.0));
            }
            for s in 0..catalog.storage.len() {
                terms.push((discharge[s][t], 1.0));
                terms.push((charge[s][t], -1.0));
            }
            p.add_constraint(format!("bal_{}", tag(t)), terms, RowSense::Eq, block.load[t]);
        }

        for (s, tech) in catalog.storage.iter().enumerate() {
            let eta = tech.efficiency;
            for t in 0..hours {
                let mut terms = vec![
                    (soc[s][t], 1.0),
                    (charge[s][t], -eta),
                    (discharge[s][t], 1.0 / eta),
                ];
                let previous = match (t, options.soc_boundary) {
                    (0, SocBoundary::Cyclic) => Some(hours - 1),
                    (0, SocBoundary::Empty) => None,
                    (t, _) => Some(t - 1),
                };
                if let Some(prev) = previous {
                    if prev == t {
                        // A one-hour cyclic block: the level cannot change.
                        terms[0].1 = 0.0;
                    } else {
                        terms.push((soc[s][prev], -1.0));
                    }
                }
                terms.retain(|&(_, a)| a != 0.0);
                p.add_constraint(format!("socdyn_{}_{}", tech.id, tag(t)), terms, RowSense::Eq, 0.0);
                p.add_constraint(
                    format!("soccap_{}_{}", tech.id, tag(t)),
                    vec![(soc[s][t], 1.0), (storage_energy[s], -1.0)],
                    RowSense::Le,
                    0.0,
                );
                p.add_constraint(
                    format!("dislim_{}_{}", tech.id, tag(t)),
                    vec![(discharge[s][t], 1.0), (storage_power[s], -1.0)],
                    RowSense::Le,
                    0.0,
                );
                p.add_constraint(
                    format!("chalim_{}_{}", tech.id, tag(t)),
                    vec![(charge[s][t], 1.0), (storage_power[s], -1.0)],
                    RowSense::Le,
                    0.0,
                );
            }
        }

        for (k, j) in catalog.thermal.iter().enumerate() {
            let id = &j.id;
            let size = j.unit_size_mw;
            let (gen, on, up, dn) = (&thermal_output[k], &online[k], &startups[k], &shutdowns[k]);
            for t in 0..hours {
                p.add_constraint(
                    format!("genmin_{id}_{}", tag(t)),
                    vec![(gen[t], 1.0), (on[t], -j.min_output_fraction * size)],
                    RowSense::Ge,
                    0.0,
                );
                p.add_constraint(
                    format!("genmax_{id}_{}", tag(t)),
                    vec![(gen[t], 1.0), (on[t], -j.max_output_fraction * size)],
                    RowSense::Le,
                    0.0,
                );
                // The first hour of a block has no predecessor: its commitment is free.
                if t > 0 {
                    p.add_constraint(
                        format!("flow_{id}_{}", tag(t)),
                        vec![(on[t], 1.0), (on[t - 1], -1.0), (up[t], -1.0), (dn[t], 1.0)],
                        RowSense::Eq,
                        0.0,
                    );
                }
                p.add_constraint(
                    format!("fleet_{id}_{}", tag(t)),
                    vec![(on[t], 1.0), (thermal_units[k], -1.0)],
                    RowSense::Le,
                    0.0,
                );
                let from = t.saturating_sub(j.min_up_hours as usize);
                let mut terms = vec![(on[t], 1.0)];
                terms.extend((from..=t).map(|tau| (up[tau], -1.0)));
                p.add_constraint(format!("minup_{id}_{}", tag(t)), terms, RowSense::Ge, 0.0);
                let from = t.saturating_sub(j.min_down_hours as usize);
                let mut terms = vec![(thermal_units[k], 1.0), (on[t], -1.0)];
                terms.extend((from..=t).map(|tau| (dn[tau], -1.0)));
                p.add_constraint(format!("mindn_{id}_{}", tag(t)), terms, RowSense::Ge, 0.0);
            }
            for &g in gen {
                rps_terms.push((g, w));
            }
        }
        weighted_demand += w * block.load.iter().sum::<f64>();

        block_vars.push(BlockVars {
            curtailment,
            discharge,
            charge,
            soc,
            thermal_output,
            online,
            startups,
            shutdowns,
        });
    }

    // Without thermal units the portfolio row would have no terms and holds trivially.
    let rps_row = if apply_rps && !rps_terms.is_empty() {
        Some(p.add_constraint(
            "rps",
            rps_terms,
            RowSense::Le,
            policy.thermal_share_cap() * weighted_demand,
        ))
    } else {
        None
    };

    Ok(EsomInstance {
        problem: p,
        vars: VarIndex {
            ire_capacity,
            storage_energy,
            storage_power,
            thermal_units,
            blocks: block_vars,
        },
        scope,
        variant,
        catalog: catalog.clone(),
        policy,
        options,
        blocks,
        fixed_cost_scale,
        rps_row,
    })
}
