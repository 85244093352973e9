//! The twelve normalized inputs describing one vehicle-customer pair.
//!
//! Distances are divided by the map diagonal, times by the horizon and loads
//! by the vehicle capacity, so the vector is unchanged when the whole map and
//! the speed are scaled together.

use crate::env::SimState;
use crate::error::ContractError;
use crate::model::{node_of, DEPOT};

pub const N_FEATURES: usize = 12;

pub type FeatureVector = [f64; N_FEATURES];

/// Feature names in input order.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "dist_to_customer",
    "demand",
    "customer_to_depot",
    "in_out_flag",
    "vehicle_to_depot",
    "sole_server_flag",
    "time_now",
    "remaining_capacity",
    "customer_tw_max",
    "next_nearest_reachable",
    "nearest_vehicle_dist",
    "wait_time",
];

/// Value used when no customer can follow the proposed one.
pub const NO_NEXT_SENTINEL: f64 = 1.0;

const LOAD_EPS: f64 = 1e-9;

/// Per-customer aggregates over the whole fleet for one frozen state, so that
/// scoring every pair costs one pass over the fleet per customer.
pub struct FeatureView<'a> {
    s: &'a SimState,
    /// Number of vehicles that can feasibly serve each customer.
    servers: Vec<u32>,
    /// Unnormalized distance from each customer to the nearest eligible vehicle.
    nearest_vehicle: Vec<f64>,
}

impl<'a> FeatureView<'a> {
    pub fn new(s: &'a SimState) -> Self {
        let inst = s.instance();
        let n = inst.len();
        let mut servers = vec![0u32; n];
        let mut nearest_vehicle = vec![f64::INFINITY; n];
        for &i in s.active() {
            let demand = inst.customer(i).demand;
            for (k, v) in s.vehicles().iter().enumerate() {
                if v.retired {
                    continue;
                }
                if s.is_feasible(k, i) {
                    servers[i] += 1;
                }
                if v.remaining_capacity + LOAD_EPS >= demand {
                    let d = inst.node_dist(v.projected_node(), node_of(i));
                    nearest_vehicle[i] = nearest_vehicle[i].min(d);
                }
            }
        }
        Self { s, servers, nearest_vehicle }
    }

    pub fn state(&self) -> &SimState {
        self.s
    }

    /// 1 when no vehicle other than `k` can serve `i`.
    pub fn sole_server(&self, k: usize, i: usize) -> f64 {
        let own = u32::from(self.s.is_feasible(k, i));
        if self.servers[i] - own == 0 {
            1.0
        } else {
            0.0
        }
    }

    /// Raw distance from `i` to the closest non-retired vehicle with room for it.
    pub fn nearest_vehicle_dist(&self, i: usize) -> f64 {
        self.nearest_vehicle[i]
    }

    pub fn features(&self, k: usize, i: usize) -> Result<FeatureVector, ContractError> {
        let s = self.s;
        if !s.is_feasible(k, i) {
            return Err(ContractError::InfeasiblePair { vehicle: k, customer: i });
        }
        let inst = s.instance();
        let d_norm = inst.distance_scale();
        let t_norm = inst.time_scale();
        let cap = inst.fleet().capacity;
        let c = inst.customer(i);
        let v = s.vehicle(k);
        let here = v.projected_node();
        let arrival = s.earliest_arrival(k, i);
        let next = match next_reachable(s, k, i) {
            Some((j, _)) => inst.node_dist(node_of(i), node_of(j)) / d_norm,
            None => NO_NEXT_SENTINEL,
        };
        Ok([
            inst.node_dist(here, node_of(i)) / d_norm,
            c.demand / cap,
            inst.node_dist(node_of(i), DEPOT) / d_norm,
            in_out_flag(s.clock(), t_norm),
            inst.node_dist(here, DEPOT) / d_norm,
            self.sole_server(k, i),
            s.clock() / t_norm,
            v.remaining_capacity / cap,
            c.tw_max / t_norm,
            next,
            self.nearest_vehicle[i] / d_norm,
            (c.tw_min - arrival).max(0.0) / t_norm,
        ])
    }

    /// Inputs for a vehicle's return leg, treating the depot as a zero-demand
    /// customer that nobody else competes for.
    pub fn depot_features(&self, k: usize) -> FeatureVector {
        let s = self.s;
        let inst = s.instance();
        let d_norm = inst.distance_scale();
        let t_norm = inst.time_scale();
        let v = s.vehicle(k);
        let here_to_depot = inst.node_dist(v.projected_node(), DEPOT) / d_norm;
        let nearest = s
            .vehicles()
            .iter()
            .filter(|v| !v.retired)
            .map(|v| inst.node_dist(v.projected_node(), DEPOT))
            .fold(f64::INFINITY, f64::min);
        let nearest = if nearest.is_finite() { nearest / d_norm } else { here_to_depot };
        [
            here_to_depot,
            0.0,
            0.0,
            in_out_flag(s.clock(), t_norm),
            here_to_depot,
            0.0,
            s.clock() / t_norm,
            v.remaining_capacity / inst.fleet().capacity,
            inst.depot_due().map_or(1.0, |due| due / t_norm),
            NO_NEXT_SENTINEL,
            nearest,
            0.0,
        ]
    }
}

pub fn in_out_flag(clock: f64, horizon: f64) -> f64 {
    if clock > horizon / 2.0 {
        1.0
    } else {
        0.0
    }
}

/// Nearest other active customer that `k` could still reach in its window
/// after serving `i`, with the capacity left after `i`. Returns the customer
/// and the completion time at `i`.
pub fn next_reachable(s: &SimState, k: usize, i: usize) -> Option<(usize, f64)> {
    let inst = s.instance();
    let c = inst.customer(i);
    let done = s.earliest_arrival(k, i).max(c.tw_min) + c.service_duration;
    let room = s.vehicle(k).remaining_capacity - c.demand;
    let active = s.active();
    s.neighbors(i)
        .iter()
        .copied()
        .find(|&j| {
            let cj = inst.customer(j);
            active.contains(&j)
                && cj.demand <= room + LOAD_EPS
                && done + inst.travel_time(node_of(i), node_of(j)) <= cj.tw_max
        })
        .map(|j| (j, done))
}

/// Normalized distance from `i` to [`next_reachable`], or the sentinel.
pub fn nearest_reachable_after(s: &SimState, i: usize, k: usize) -> f64 {
    let inst = s.instance();
    next_reachable(s, k, i)
        .map_or(NO_NEXT_SENTINEL, |(j, _)| inst.node_dist(node_of(i), node_of(j)) / inst.distance_scale())
}

/// Feature vector of one pair; builds a fresh [`FeatureView`].
pub fn build_features(s: &SimState, k: usize, i: usize) -> Result<FeatureVector, ContractError> {
    FeatureView::new(s).features(k, i)
}
