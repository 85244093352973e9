//! Seven-term step reward and the discounted fulfilment bonus.

use serde::{Deserialize, Serialize};

use crate::env::SimState;
use crate::error::ContractError;
use crate::features::{in_out_flag, next_reachable, FeatureView};
use crate::model::{node_of, DEPOT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    /// Weights of leg distance, window slack, wait, excess distance over the
    /// closest vehicle, cost of the next hop, direction bonus and sole-server bonus.
    pub a: [f64; 7],
    pub gamma: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { a: [0.2, 0.5, 1.0, 0.25, 0.5, 0.1, 0.25], gamma: 0.9 }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), ContractError> {
        if self.a.iter().any(|w| !w.is_finite()) {
            return Err(ContractError::NonFinite("reward weights"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ContractError::Other(format!("gamma {} outside (0, 1]", self.gamma)));
        }
        Ok(())
    }
}

/// Normalized ingredients of one step reward (distances over the map
/// diagonal, times over the horizon).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StepContext {
    pub leg_distance: f64,
    pub window_slack: f64,
    pub wait_time: f64,
    pub delta_vs_closest: f64,
    pub next_cost: f64,
    pub direction_bonus: f64,
    pub sole_server: f64,
}

impl StepContext {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.leg_distance,
            self.window_slack,
            self.wait_time,
            self.delta_vs_closest,
            self.next_cost,
            self.direction_bonus,
            self.sole_server,
        ]
    }
}

pub fn step_reward(ctx: &StepContext, w: &RewardWeights) -> f64 {
    let [a1, a2, a3, a4, a5, a6, a7] = w.a;
    -a1 * ctx.leg_distance - a2 * ctx.window_slack - a3 * ctx.wait_time - a4 * ctx.delta_vs_closest
        - a5 * ctx.next_cost
        + a6 * ctx.direction_bonus
        + a7 * ctx.sole_server
}

/// 1 when the move heads away from the depot in the first half of the
/// horizon, or towards it in the second half.
pub fn direction_bonus(clock: f64, horizon: f64, target_to_depot: f64, here_to_depot: f64) -> f64 {
    let late = in_out_flag(clock, horizon) == 1.0;
    let outward = target_to_depot > here_to_depot;
    let inward = target_to_depot < here_to_depot;
    if (!late && outward) || (late && inward) {
        1.0
    } else {
        0.0
    }
}

impl FeatureView<'_> {
    pub fn step_context(&self, k: usize, j: usize) -> Result<StepContext, ContractError> {
        let s = self.state();
        if !s.is_feasible(k, j) {
            return Err(ContractError::InfeasiblePair { vehicle: k, customer: j });
        }
        let inst = s.instance();
        let d_norm = inst.distance_scale();
        let t_norm = inst.time_scale();
        let c = inst.customer(j);
        let here = s.vehicle(k).projected_node();
        let leg = inst.node_dist(here, node_of(j));
        let arrival = s.earliest_arrival(k, j);
        let next_cost = match next_reachable(s, k, j) {
            Some((n, done)) => {
                let hop = inst.travel_time(node_of(j), node_of(n));
                (hop + (inst.customer(n).tw_min - (done + hop)).max(0.0)) / t_norm
            }
            None => 1.0,
        };
        Ok(StepContext {
            leg_distance: leg / d_norm,
            window_slack: (c.tw_max - arrival) / t_norm,
            wait_time: (c.tw_min - arrival).max(0.0) / t_norm,
            delta_vs_closest: (leg - self.nearest_vehicle_dist(j)).max(0.0) / d_norm,
            next_cost,
            direction_bonus: direction_bonus(
                s.clock(),
                t_norm,
                inst.node_dist(node_of(j), DEPOT),
                inst.node_dist(here, DEPOT),
            ),
            sole_server: self.sole_server(k, j),
        })
    }
}

/// Context of a pair, built from a fresh view of the state.
pub fn build_step_context(s: &SimState, k: usize, j: usize) -> Result<StepContext, ContractError> {
    FeatureView::new(s).step_context(k, j)
}

/// Context of `k`'s return leg: only distance and direction count.
pub fn depot_step_context(s: &SimState, k: usize) -> StepContext {
    let inst = s.instance();
    let here = inst.node_dist(s.vehicle(k).projected_node(), DEPOT);
    StepContext {
        leg_distance: here / inst.distance_scale(),
        direction_bonus: direction_bonus(s.clock(), inst.time_scale(), 0.0, here),
        ..Default::default()
    }
}

/// Step reward plus the fulfilment bonus discounted by the stages left in the trip.
pub fn total_reward(step: f64, fulfilment: f64, n_k: usize, n: usize, gamma: f64) -> Result<f64, ContractError> {
    if n == 0 || n > n_k {
        return Err(ContractError::StageOutOfRange { stage: n, trip_len: n_k });
    }
    let exp = i32::try_from(n_k - n).map_err(|_| ContractError::StageOutOfRange { stage: n, trip_len: n_k })?;
    Ok(step + gamma.powi(exp) * fulfilment)
}
