//! Event-driven fleet simulation.
//!
//! The clock jumps between events: a vehicle finishing its current service,
//! or a hidden customer being revealed. Customers are addressed by their
//! index in [`Instance::customers`], vehicles by fleet position.
//!
//! A vehicle carries at most one outstanding commitment. Its departure is
//! deferred so that it arrives no earlier than the customer's window opens,
//! and until it actually leaves a reveal may cancel the commitment.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::ContractError;
use crate::model::{node_of, Instance, Location, Node, Route, Solution, Visit, DEPOT};

/// Slack used when comparing a demand against a remaining capacity.
const LOAD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VehicleStatus {
    AtDepot,
    EnRoute,
    Serving,
    IdleAtCustomer,
    Retired,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CustomerStatus {
    Pending,
    Active,
    Assigned(usize),
    Served(usize),
    Dropped,
}

/// An accepted but not yet completed trip to one customer, with what is
/// needed to undo it exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Commitment {
    pub customer: usize,
    pub depart_at: f64,
    pub arrival: f64,
    pub service_start: f64,
    pub free_at: f64,
    prev_capacity: f64,
    prev_distance: f64,
    opened_route: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub id: usize,
    /// Node of the last completed stop.
    pub node: Node,
    /// Time at which the vehicle became free at `node`.
    pub ready_at: f64,
    pub remaining_capacity: f64,
    pub visits_so_far: usize,
    pub commitment: Option<Commitment>,
    pub retired: bool,
    /// Unused vehicle held at the depot while reveals are still expected.
    pub parked: bool,
    visits: Vec<Visit>,
    depot_departure: Option<f64>,
    depot_return: Option<f64>,
    distance: f64,
}

impl VehicleState {
    fn new(id: usize, capacity: f64) -> Self {
        Self {
            id,
            node: DEPOT,
            ready_at: 0.0,
            remaining_capacity: capacity,
            visits_so_far: 0,
            commitment: None,
            retired: false,
            parked: false,
            visits: Vec::new(),
            depot_departure: None,
            depot_return: None,
            distance: 0.0,
        }
    }

    pub fn status(&self, clock: f64) -> VehicleStatus {
        if self.retired {
            return VehicleStatus::Retired;
        }
        let idle_here = if self.node == DEPOT { VehicleStatus::AtDepot } else { VehicleStatus::IdleAtCustomer };
        match &self.commitment {
            None => idle_here,
            Some(c) if clock < c.depart_at => idle_here,
            Some(c) if clock < c.arrival => VehicleStatus::EnRoute,
            Some(c) if clock < c.free_at => VehicleStatus::Serving,
            Some(_) => VehicleStatus::IdleAtCustomer,
        }
    }

    /// Node the vehicle will be at once its commitment completes.
    pub fn projected_node(&self) -> Node {
        self.commitment.as_ref().map_or(self.node, |c| node_of(c.customer))
    }

    /// Earliest time the vehicle can leave its projected node.
    pub fn projected_free(&self, clock: f64) -> f64 {
        self.commitment.as_ref().map_or(self.ready_at, |c| c.free_at).max(clock)
    }

    pub fn last_customer(&self) -> Option<u32> {
        self.visits.last().map(|v| v.customer_id)
    }

    pub fn committed_customer(&self) -> Option<usize> {
        self.commitment.as_ref().map(|c| c.customer)
    }

    pub fn is_busy(&self) -> bool {
        self.commitment.is_some()
    }

    pub fn has_departed(&self) -> bool {
        self.depot_departure.is_some()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Reveal,
    Assign,
    Free,
    Cancel,
    Drop,
    Depot,
    Park,
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TraceKind::Reveal => "reveal",
            TraceKind::Assign => "assign",
            TraceKind::Free => "free",
            TraceKind::Cancel => "cancel",
            TraceKind::Drop => "drop",
            TraceKind::Depot => "depot",
            TraceKind::Park => "park",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time: f64,
    pub kind: TraceKind,
    pub vehicle: Option<usize>,
    pub customer: Option<u32>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} {}", self.time, self.kind)?;
        if let Some(v) = self.vehicle {
            write!(f, " vehicle={v}")?;
        }
        if let Some(c) = self.customer {
            write!(f, " customer={c}")?;
        }
        Ok(())
    }
}

/// What happened at the instant the clock stopped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochTrigger {
    pub time: f64,
    /// Vehicles whose commitment completed, ascending.
    pub freed: Vec<usize>,
    /// Waiting or parked vehicles released for re-decision by a reveal, ascending.
    pub woken: Vec<usize>,
    pub revealed: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl EpochTrigger {
    /// Vehicles that need a decision in this epoch, ascending.
    pub fn vehicles(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self.freed.iter().chain(&self.woken).copied().collect();
        set.into_iter().collect()
    }
}

#[derive(Debug, Clone)]
pub struct SimState {
    inst: Arc<Instance>,
    neighbors: Arc<Vec<Vec<usize>>>,
    clock: f64,
    started: bool,
    vehicles: Vec<VehicleState>,
    status: Vec<CustomerStatus>,
    active: BTreeSet<usize>,
    pending: Vec<usize>,
    pending_cursor: usize,
    trace: Option<Vec<TraceEvent>>,
}

impl PartialEq for SimState {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inst, &other.inst)
            && self.clock == other.clock
            && self.started == other.started
            && self.vehicles == other.vehicles
            && self.status == other.status
            && self.active == other.active
            && self.pending == other.pending
            && self.pending_cursor == other.pending_cursor
    }
}

/// Starts a simulation at time zero.
pub fn reset(inst: &Instance) -> SimState {
    SimState::new(Arc::new(inst.clone()))
}

impl SimState {
    pub fn new(inst: Arc<Instance>) -> Self {
        let n = inst.len();
        let mut status = vec![CustomerStatus::Active; n];
        let mut active = BTreeSet::new();
        let mut pending = Vec::new();
        for (idx, c) in inst.customers().iter().enumerate() {
            if c.reveal_time > 0.0 {
                status[idx] = CustomerStatus::Pending;
                pending.push(idx);
            } else {
                active.insert(idx);
            }
        }
        pending.sort_by(|&a, &b| inst.customer(a).reveal_time.total_cmp(&inst.customer(b).reveal_time).then(a.cmp(&b)));

        let neighbors = (0..n)
            .map(|i| {
                let mut order: Vec<usize> = (0..n).filter(|&j| j != i).collect();
                order.sort_by(|&a, &b| {
                    inst.node_dist(node_of(i), node_of(a)).total_cmp(&inst.node_dist(node_of(i), node_of(b))).then(a.cmp(&b))
                });
                order
            })
            .collect();

        let fleet = inst.fleet();
        let vehicles = (0..fleet.count).map(|k| VehicleState::new(k, fleet.capacity)).collect();
        Self {
            inst,
            neighbors: Arc::new(neighbors),
            clock: 0.0,
            started: false,
            vehicles,
            status,
            active,
            pending,
            pending_cursor: 0,
            trace: None,
        }
    }

    /// Records one line per event from now on.
    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> &[TraceEvent] {
        self.trace.as_deref().unwrap_or(&[])
    }

    fn log(&mut self, kind: TraceKind, vehicle: Option<usize>, customer: Option<usize>) {
        if let Some(trace) = self.trace.as_mut() {
            let customer = customer.map(|i| self.inst.customer(i).id);
            trace.push(TraceEvent { time: self.clock, kind, vehicle, customer });
        }
    }

    pub fn instance(&self) -> &Instance {
        &self.inst
    }

    pub fn instance_arc(&self) -> &Arc<Instance> {
        &self.inst
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    pub fn vehicle(&self, k: usize) -> &VehicleState {
        &self.vehicles[k]
    }

    pub fn active(&self) -> &BTreeSet<usize> {
        &self.active
    }

    pub fn customer_status(&self, idx: usize) -> CustomerStatus {
        self.status[idx]
    }

    /// Other customers ordered by distance from `idx`, nearest first.
    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.neighbors[idx]
    }

    pub fn pending_count(&self) -> usize {
        self.pending.len() - self.pending_cursor
    }

    pub fn next_reveal(&self) -> Option<f64> {
        self.pending.get(self.pending_cursor).map(|&i| self.inst.customer(i).reveal_time)
    }

    pub fn count(&self, pred: impl Fn(CustomerStatus) -> bool) -> usize {
        self.status.iter().filter(|&&s| pred(s)).count()
    }

    /// Projected location of vehicle `k` (its committed customer when busy).
    pub fn projected_location(&self, k: usize) -> Location {
        self.inst.node_location(self.vehicles[k].projected_node())
    }

    /// Deep copy on which soft assignments may be tried freely.
    pub fn clone_for_soft(&self) -> SimState {
        let mut copy = self.clone();
        copy.trace = None;
        copy
    }

    /// Arrival time of `k` at customer `i` leaving its projected node as soon as it is free.
    pub fn earliest_arrival(&self, k: usize, i: usize) -> f64 {
        let v = &self.vehicles[k];
        v.projected_free(self.clock) + self.inst.travel_time(v.projected_node(), node_of(i))
    }

    /// Feasibility of sending `k` to `i` next, counted from its projected state.
    pub fn is_feasible(&self, k: usize, i: usize) -> bool {
        if self.status[i] != CustomerStatus::Active {
            return false;
        }
        let v = &self.vehicles[k];
        if v.retired {
            return false;
        }
        self.reachable_from(v.projected_node(), v.projected_free(self.clock), v.remaining_capacity, i)
    }

    /// Whether a vehicle standing at `node`, free from `free` with `capacity`
    /// left, can serve `i` within its window and still meet the depot due date.
    pub fn reachable_from(&self, node: Node, free: f64, capacity: f64, i: usize) -> bool {
        let c = self.inst.customer(i);
        if c.demand > capacity + LOAD_EPS {
            return false;
        }
        let arrival = free + self.inst.travel_time(node, node_of(i));
        if arrival > c.tw_max {
            return false;
        }
        match self.inst.depot_due() {
            Some(due) => arrival.max(c.tw_min) + c.service_duration + self.inst.travel_time(node_of(i), DEPOT) <= due,
            None => true,
        }
    }

    /// All feasible `(vehicle, customer index)` pairs, ordered by vehicle then customer.
    pub fn feasible_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in 0..self.vehicles.len() {
            if self.vehicles[k].retired {
                continue;
            }
            for &i in &self.active {
                if self.is_feasible(k, i) {
                    out.push((k, i));
                }
            }
        }
        out
    }

    pub fn feasible_customers(&self, k: usize) -> Vec<usize> {
        self.active.iter().copied().filter(|&i| self.is_feasible(k, i)).collect()
    }

    fn complete_commitment(&mut self, k: usize) {
        let Some(c) = self.vehicles[k].commitment.take() else { return };
        let v = &mut self.vehicles[k];
        v.node = node_of(c.customer);
        v.ready_at = c.free_at;
        self.status[c.customer] = CustomerStatus::Served(k);
    }

    /// Commits `k` to serve `i` next. A busy vehicle first has its current
    /// commitment projected as completed.
    pub fn apply_assignment(&mut self, k: usize, i: usize) -> Result<(), ContractError> {
        if k >= self.vehicles.len() || i >= self.status.len() || !self.is_feasible(k, i) {
            return Err(ContractError::InfeasiblePair { vehicle: k, customer: i });
        }
        self.complete_commitment(k);
        let inst = Arc::clone(&self.inst);
        let c = inst.customer(i);
        let v = &mut self.vehicles[k];
        let from = v.node;
        let travel = inst.travel_time(from, node_of(i));
        let depart_at = v.ready_at.max(self.clock).max(c.tw_min - travel);
        let arrival = depart_at + travel;
        let service_start = arrival.max(c.tw_min);
        let free_at = service_start + c.service_duration;
        let opened_route = v.depot_departure.is_none();
        let commitment = Commitment {
            customer: i,
            depart_at,
            arrival,
            service_start,
            free_at,
            prev_capacity: v.remaining_capacity,
            prev_distance: v.distance,
            opened_route,
        };
        if opened_route {
            v.depot_departure = Some(depart_at);
        }
        v.distance += inst.node_dist(from, node_of(i));
        v.remaining_capacity = (v.remaining_capacity - c.demand).max(0.0);
        v.visits_so_far += 1;
        v.visits.push(Visit { customer_id: c.id, arrival, service_start, departure: free_at });
        v.commitment = Some(commitment);
        v.parked = false;
        self.active.remove(&i);
        self.status[i] = CustomerStatus::Assigned(k);
        self.log(TraceKind::Assign, Some(k), Some(i));
        Ok(())
    }

    /// Undoes a commitment whose vehicle has not left yet; the customer becomes active again.
    fn cancel_commitment(&mut self, k: usize) -> Option<usize> {
        let v = &mut self.vehicles[k];
        let c = v.commitment.take()?;
        v.visits.pop();
        v.visits_so_far -= 1;
        v.remaining_capacity = c.prev_capacity;
        v.distance = c.prev_distance;
        if c.opened_route {
            v.depot_departure = None;
        }
        self.status[c.customer] = CustomerStatus::Active;
        self.active.insert(c.customer);
        self.log(TraceKind::Cancel, Some(k), Some(c.customer));
        Some(c.customer)
    }

    /// Ends the trip of `k`: after any outstanding commitment it drives back
    /// to the depot and is retired. A vehicle that never left stays unused.
    pub fn send_to_depot(&mut self, k: usize) {
        if self.vehicles[k].retired {
            return;
        }
        self.complete_commitment(k);
        let inst = Arc::clone(&self.inst);
        let clock = self.clock;
        let v = &mut self.vehicles[k];
        if v.depot_departure.is_some() {
            v.distance += inst.node_dist(v.node, DEPOT);
            v.depot_return = Some(v.ready_at.max(clock) + inst.travel_time(v.node, DEPOT));
            v.node = DEPOT;
        }
        v.retired = true;
        v.parked = false;
        self.log(TraceKind::Depot, Some(k), None);
    }

    /// Holds an unused vehicle at the depot until the next reveal.
    pub fn park(&mut self, k: usize) {
        let v = &mut self.vehicles[k];
        debug_assert!(v.depot_departure.is_none() && v.commitment.is_none());
        v.parked = true;
        self.log(TraceKind::Park, Some(k), None);
    }

    /// Either parks `k` (unused, reveals outstanding) or sends it to the depot.
    pub fn release(&mut self, k: usize) {
        let v = &self.vehicles[k];
        if v.depot_departure.is_none() && v.commitment.is_none() && self.pending_count() > 0 {
            self.park(k);
        } else {
            self.send_to_depot(k);
        }
    }

    pub fn is_terminal(&self) -> bool {
        let idle = self.vehicles.iter().all(|v| v.commitment.is_none());
        idle && self.pending_count() == 0 && (self.started || self.active.is_empty())
    }

    /// Whether any non-retired vehicle could still serve `i`, also counting the
    /// state a waiting vehicle would return to if its commitment were cancelled.
    fn servable(&self, i: usize) -> bool {
        self.vehicles.iter().any(|v| {
            if v.retired {
                return false;
            }
            if self.reachable_from(v.projected_node(), v.projected_free(self.clock), v.remaining_capacity, i) {
                return true;
            }
            match &v.commitment {
                Some(c) if c.depart_at > self.clock => {
                    self.reachable_from(v.node, v.ready_at.max(self.clock), c.prev_capacity, i)
                }
                _ => false,
            }
        })
    }

    fn drop_unservable(&mut self) -> Vec<usize> {
        let doomed: Vec<usize> = self.active.iter().copied().filter(|&i| !self.servable(i)).collect();
        for &i in &doomed {
            self.active.remove(&i);
            self.status[i] = CustomerStatus::Dropped;
            self.log(TraceKind::Drop, None, Some(i));
        }
        doomed
    }

    /// Moves the clock to the next event and reports who needs a decision.
    /// The first call opens the episode at time zero with every vehicle free.
    /// Returns `None` once the episode is over.
    pub fn advance(&mut self) -> Option<EpochTrigger> {
        if self.is_terminal() {
            return None;
        }
        if !self.started {
            self.started = true;
            let dropped = self.drop_unservable();
            return Some(EpochTrigger {
                time: self.clock,
                freed: (0..self.vehicles.len()).collect(),
                dropped,
                ..Default::default()
            });
        }

        let next_free = self.vehicles.iter().filter_map(|v| v.commitment.as_ref().map(|c| c.free_at)).reduce(f64::min);
        let next = match (next_free, self.next_reveal()) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => return None,
        };
        debug_assert!(next >= self.clock);
        self.clock = self.clock.max(next);

        let mut freed = Vec::new();
        for k in 0..self.vehicles.len() {
            if self.vehicles[k].commitment.as_ref().is_some_and(|c| c.free_at <= self.clock) {
                let customer = self.vehicles[k].committed_customer();
                self.complete_commitment(k);
                self.log(TraceKind::Free, Some(k), customer);
                freed.push(k);
            }
        }

        let mut revealed = Vec::new();
        while let Some(&i) = self.pending.get(self.pending_cursor) {
            if self.inst.customer(i).reveal_time > self.clock {
                break;
            }
            self.pending_cursor += 1;
            self.status[i] = CustomerStatus::Active;
            self.active.insert(i);
            self.log(TraceKind::Reveal, None, Some(i));
            revealed.push(i);
        }

        let mut woken = Vec::new();
        if !revealed.is_empty() {
            for k in 0..self.vehicles.len() {
                let v = &self.vehicles[k];
                let waiting = v.commitment.as_ref().is_some_and(|c| c.depart_at > self.clock);
                if waiting {
                    self.cancel_commitment(k);
                    woken.push(k);
                } else if v.parked {
                    self.vehicles[k].parked = false;
                    woken.push(k);
                }
            }
        }

        let dropped = self.drop_unservable();
        Some(EpochTrigger { time: self.clock, freed, woken, revealed, dropped })
    }

    /// Sends every remaining vehicle home and assembles the solution.
    pub fn finalize(&mut self) -> Solution {
        for k in 0..self.vehicles.len() {
            self.send_to_depot(k);
        }
        let inst = Arc::clone(&self.inst);
        let routes = self
            .vehicles
            .iter()
            .filter(|v| !v.visits.is_empty())
            .map(|v| {
                let load = v
                    .visits
                    .iter()
                    .map(|vis| inst.customer(inst.index_of(vis.customer_id).expect("own customer")).demand)
                    .sum();
                Route {
                    vehicle_id: v.id,
                    visits: v.visits.clone(),
                    depot_departure: v.depot_departure.unwrap_or(0.0),
                    depot_return: v.depot_return.unwrap_or(0.0),
                    load,
                    distance: v.distance,
                }
            })
            .collect();
        let unserved = self
            .status
            .iter()
            .enumerate()
            .filter(|(_, s)| !matches!(s, CustomerStatus::Served(_)))
            .map(|(i, _)| inst.customer(i).id)
            .collect();
        Solution::from_routes(&inst, routes, unserved, 0.0)
    }
}
