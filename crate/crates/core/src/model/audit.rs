use serde::{Deserialize, Serialize};

use super::{EsomInstance, PlanSolution, SocBoundary};

/// Worst violation of each physical rule by a decoded plan.
///
/// Computed from the plan and the block data alone, without looking at the solver rows.
/// Energy balance residuals are scaled by `max(1, L_t)`, storage residuals by `max(1, E_cap)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AuditReport {
    pub balance: f64,
    pub negativity: f64,
    pub soc_recursion: f64,
    pub soc_bounds: f64,
    pub power_bounds: f64,
    pub thermal_window: f64,
    pub commitment_flow: f64,
    pub commitment_integrality: f64,
    pub commitment_bounds: f64,
    pub min_up: f64,
    pub min_down: f64,
    /// Thermal share of weighted demand minus its cap; positive means violated.
    pub rps_excess: f64,
}

impl AuditReport {
    /// Names and values of every rule whose violation exceeds `tol`.
    pub fn violations(&self, tol: f64) -> Vec<(&'static str, f64)> {
        [
            ("balance", self.balance),
            ("negativity", self.negativity),
            ("soc_recursion", self.soc_recursion),
            ("soc_bounds", self.soc_bounds),
            ("power_bounds", self.power_bounds),
            ("thermal_window", self.thermal_window),
            ("commitment_flow", self.commitment_flow),
            ("commitment_integrality", self.commitment_integrality),
            ("commitment_bounds", self.commitment_bounds),
            ("min_up", self.min_up),
            ("min_down", self.min_down),
            ("rps_excess", self.rps_excess),
        ]
        .into_iter()
        .filter(|&(_, v)| v > tol)
        .collect()
    }
}

fn worst(acc: &mut f64, v: f64) {
    if v > *acc || v.is_nan() {
        *acc = v;
    }
}

pub fn audit(instance: &EsomInstance, plan: &PlanSolution) -> AuditReport {
    let cat = &instance.catalog;
    let caps = &plan.capacities;
    let mut r = AuditReport {
        rps_excess: f64::NEG_INFINITY,
        ..Default::default()
    };
    for v in caps.feature_vector() {
        worst(&mut r.negativity, -v);
    }
    let mut thermal_energy = 0.0;
    let mut demand = 0.0;
    for (block, d) in instance.blocks.iter().zip(&plan.dispatch) {
        let hours = block.hours();
        for t in 0..hours {
            let mut supply = -d.curtailment[t];
            for (i, tech) in cat.ire.iter().enumerate() {
                supply += caps.ire_mw[&tech.id] * block.profiles[i][t];
            }
            for j in &cat.thermal {
                supply += d.thermal_output[&j.id][t];
            }
            for s in &cat.storage {
                supply += d.discharge[&s.id][t] - d.charge[&s.id][t];
            }
            let load = block.load[t];
            worst(&mut r.balance, (supply - load).abs() / load.max(1.0));
            worst(&mut r.negativity, -d.curtailment[t]);
        }

        for s in &cat.storage {
            let e_cap = caps.storage_energy_mwh[&s.id];
            let p_cap = caps.storage_power_mw[&s.id];
            let scale = e_cap.max(1.0);
            let (soc, dis, cha) = (&d.soc[&s.id], &d.discharge[&s.id], &d.charge[&s.id]);
            for t in 0..hours {
                let before = match (t, instance.options.soc_boundary) {
                    (0, SocBoundary::Cyclic) => soc[hours - 1],
                    (0, SocBoundary::Empty) => 0.0,
                    (t, _) => soc[t - 1],
                };
                let expected = before + s.efficiency * cha[t] - dis[t] / s.efficiency;
                worst(&mut r.soc_recursion, (soc[t] - expected).abs() / scale);
                worst(&mut r.soc_bounds, (soc[t] - e_cap).max(-soc[t]) / scale);
                worst(&mut r.power_bounds, (dis[t] - p_cap).max(cha[t] - p_cap) / p_cap.max(1.0));
                worst(&mut r.negativity, -dis[t].min(cha[t]));
            }
        }

        for j in &cat.thermal {
            let units = caps.thermal_units[&j.id];
            let cap = j.max_units as f64;
            let (gen, on, up, dn) = (
                &d.thermal_output[&j.id],
                &d.online[&j.id],
                &d.startups[&j.id],
                &d.shutdowns[&j.id],
            );
            worst(&mut r.commitment_integrality, (units - units.round()).abs());
            worst(&mut r.commitment_bounds, (units - cap).max(-units));
            for t in 0..hours {
                let size = j.unit_size_mw;
                let low = j.min_output_fraction * size * on[t];
                let high = j.max_output_fraction * size * on[t];
                worst(&mut r.thermal_window, (low - gen[t]).max(gen[t] - high) / size);
                for n in [on[t], up[t], dn[t]] {
                    worst(&mut r.commitment_integrality, (n - n.round()).abs());
                    worst(&mut r.commitment_bounds, (n - cap).max(-n));
                }
                worst(&mut r.commitment_bounds, on[t] - units);
                if t > 0 {
                    worst(&mut r.commitment_flow, (on[t] - on[t - 1] - up[t] + dn[t]).abs());
                }
                let from = t.saturating_sub(j.min_up_hours as usize);
                let started: f64 = up[from..=t].iter().sum();
                worst(&mut r.min_up, started - on[t]);
                let from = t.saturating_sub(j.min_down_hours as usize);
                let stopped: f64 = dn[from..=t].iter().sum();
                worst(&mut r.min_down, stopped - (units - on[t]));
            }
            thermal_energy += block.weight * gen.iter().sum::<f64>();
        }
        demand += block.weight * block.load.iter().sum::<f64>();
    }
    if instance.rps_row.is_some() && demand > 0.0 {
        r.rps_excess = thermal_energy / demand - instance.policy.thermal_share_cap();
    }
    r
}
