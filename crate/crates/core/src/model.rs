//! Domain types, geometry and the independent solution validator.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Absolute tolerance for every time and load comparison made by the validator.
pub const TOLERANCE: f64 = 1e-6;

/// Node index into the distance matrix: 0 is the depot, `i + 1` is customer `i`.
pub type Node = usize;

pub const DEPOT: Node = 0;

#[inline]
pub fn node_of(customer_idx: usize) -> Node {
    customer_idx + 1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
}

impl Location {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Euclidean distance between two points.
#[inline]
pub fn distance(a: Location, b: Location) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: u32,
    pub loc: Location,
    pub demand: f64,
    pub tw_min: f64,
    pub tw_max: f64,
    pub service_duration: f64,
    /// Time at which the request becomes known; zero for customers known up front.
    #[serde(default)]
    pub reveal_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetSpec {
    pub count: usize,
    pub capacity: f64,
    pub speed: f64,
}

/// Immutable problem description.
///
/// Construct through [`Instance::new`], which checks the invariants and
/// precomputes the horizon, the map diagonal and the full distance matrix.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "InstanceRecord", into = "InstanceRecord")]
pub struct Instance {
    name: String,
    depot: Location,
    depot_due: Option<f64>,
    customers: Vec<Customer>,
    fleet: FleetSpec,
    horizon: f64,
    diagonal: f64,
    dist: Arc<Vec<f64>>,
    by_id: Arc<HashMap<u32, usize>>,
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("name", &self.name)
            .field("depot", &self.depot)
            .field("depot_due", &self.depot_due)
            .field("fleet", &self.fleet)
            .field("horizon", &self.horizon)
            .field("customers", &self.customers)
            .finish_non_exhaustive()
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.depot == other.depot
            && self.depot_due == other.depot_due
            && self.customers == other.customers
            && self.fleet == other.fleet
    }
}

impl Instance {
    pub fn new(
        name: impl Into<String>,
        depot: Location,
        depot_due: Option<f64>,
        customers: Vec<Customer>,
        fleet: FleetSpec,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if fleet.count == 0 {
            return Err(ModelError::invalid("fleet.count", "must be at least 1"));
        }
        if !(fleet.capacity > 0.0 && fleet.capacity.is_finite()) {
            return Err(ModelError::invalid("fleet.capacity", "must be positive"));
        }
        if !(fleet.speed > 0.0 && fleet.speed.is_finite()) {
            return Err(ModelError::invalid("fleet.speed", "must be positive"));
        }
        if !(depot.x.is_finite() && depot.y.is_finite()) {
            return Err(ModelError::invalid("depot", "non-finite coordinate"));
        }
        if let Some(due) = depot_due {
            if !(due >= 0.0 && due.is_finite()) {
                return Err(ModelError::invalid("depot_due", "must be nonnegative"));
            }
        }
        let mut by_id = HashMap::with_capacity(customers.len());
        for (idx, c) in customers.iter().enumerate() {
            let path = |field: &str| format!("customers[{idx}].{field}");
            if !(c.loc.x.is_finite() && c.loc.y.is_finite()) {
                return Err(ModelError::invalid(path("loc"), "non-finite coordinate"));
            }
            if !(c.demand >= 0.0 && c.demand.is_finite()) {
                return Err(ModelError::invalid(path("demand"), "must be nonnegative"));
            }
            if !(c.tw_min >= 0.0 && c.tw_min.is_finite()) {
                return Err(ModelError::invalid(path("tw_min"), "must be nonnegative"));
            }
            if !(c.tw_max.is_finite() && c.tw_min < c.tw_max) {
                return Err(ModelError::invalid(path("tw_max"), "must exceed tw_min"));
            }
            if !(c.service_duration >= 0.0 && c.service_duration.is_finite()) {
                return Err(ModelError::invalid(path("service_duration"), "must be nonnegative"));
            }
            if !(c.reveal_time >= 0.0 && c.reveal_time.is_finite()) {
                return Err(ModelError::invalid(path("reveal_time"), "must be nonnegative"));
            }
            if by_id.insert(c.id, idx).is_some() {
                return Err(ModelError::invalid(path("id"), format!("duplicate id {}", c.id)));
            }
        }

        let horizon = match depot_due {
            Some(due) => due,
            None => customers.iter().map(|c| c.tw_max).fold(0.0, f64::max),
        };
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (depot.x, depot.x, depot.y, depot.y);
        for c in &customers {
            lo_x = lo_x.min(c.loc.x);
            hi_x = hi_x.max(c.loc.x);
            lo_y = lo_y.min(c.loc.y);
            hi_y = hi_y.max(c.loc.y);
        }
        let diagonal = (hi_x - lo_x).hypot(hi_y - lo_y);

        let nodes = customers.len() + 1;
        let loc = |n: Node| if n == DEPOT { depot } else { customers[n - 1].loc };
        let mut dist = vec![0.0; nodes * nodes];
        for a in 0..nodes {
            for b in (a + 1)..nodes {
                let d = distance(loc(a), loc(b));
                dist[a * nodes + b] = d;
                dist[b * nodes + a] = d;
            }
        }

        Ok(Self {
            name,
            depot,
            depot_due,
            customers,
            fleet,
            horizon,
            diagonal,
            dist: Arc::new(dist),
            by_id: Arc::new(by_id),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn depot(&self) -> Location {
        self.depot
    }

    pub fn depot_due(&self) -> Option<f64> {
        self.depot_due
    }

    pub fn customers(&self) -> &[Customer] {
        &self.customers
    }

    pub fn customer(&self, idx: usize) -> &Customer {
        &self.customers[idx]
    }

    pub fn fleet(&self) -> FleetSpec {
        self.fleet
    }

    /// Number of customers.
    pub fn len(&self) -> usize {
        self.customers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.customers.is_empty()
    }

    /// Scheduling horizon: the depot due date when given, else the latest window close.
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Diagonal of the bounding box of all locations, depot included.
    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    /// Distance normalizer; falls back to 1 on a degenerate single-point map.
    pub fn distance_scale(&self) -> f64 {
        if self.diagonal > 0.0 {
            self.diagonal
        } else {
            1.0
        }
    }

    /// Time normalizer; falls back to 1 when the horizon is zero.
    pub fn time_scale(&self) -> f64 {
        if self.horizon > 0.0 {
            self.horizon
        } else {
            1.0
        }
    }

    pub fn index_of(&self, id: u32) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn node_location(&self, node: Node) -> Location {
        if node == DEPOT {
            self.depot
        } else {
            self.customers[node - 1].loc
        }
    }

    #[inline]
    pub fn node_dist(&self, a: Node, b: Node) -> f64 {
        self.dist[a * (self.customers.len() + 1) + b]
    }

    #[inline]
    pub fn travel_time(&self, a: Node, b: Node) -> f64 {
        self.node_dist(a, b) / self.fleet.speed
    }

    pub fn is_static(&self) -> bool {
        self.customers.iter().all(|c| c.reveal_time == 0.0)
    }

    /// Copy of this instance with a different customer list (same depot and fleet).
    pub fn with_customers(&self, customers: Vec<Customer>) -> Result<Self, ModelError> {
        Self::new(self.name.clone(), self.depot, self.depot_due, customers, self.fleet)
    }

    pub fn with_name(&self, name: impl Into<String>) -> Self {
        let mut out = self.clone();
        out.name = name.into();
        out
    }

    pub fn with_fleet(&self, fleet: FleetSpec) -> Result<Self, ModelError> {
        Self::new(self.name.clone(), self.depot, self.depot_due, self.customers.clone(), fleet)
    }
}

/// Serialized form of [`Instance`]; derived quantities are written for readers
/// and checked against the recomputed values on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceRecord {
    pub name: String,
    pub depot: Location,
    #[serde(default)]
    pub depot_due: Option<f64>,
    pub fleet: FleetSpec,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub diagonal: Option<f64>,
    pub customers: Vec<Customer>,
}

impl TryFrom<InstanceRecord> for Instance {
    type Error = ModelError;

    fn try_from(r: InstanceRecord) -> Result<Self, Self::Error> {
        let inst = Instance::new(r.name, r.depot, r.depot_due, r.customers, r.fleet)?;
        if let Some(h) = r.horizon {
            if (h - inst.horizon).abs() > TOLERANCE {
                return Err(ModelError::invalid(
                    "horizon",
                    format!("recorded {h} but instance implies {}", inst.horizon),
                ));
            }
        }
        if let Some(d) = r.diagonal {
            if (d - inst.diagonal).abs() > TOLERANCE {
                return Err(ModelError::invalid(
                    "diagonal",
                    format!("recorded {d} but instance implies {}", inst.diagonal),
                ));
            }
        }
        Ok(inst)
    }
}

impl From<Instance> for InstanceRecord {
    fn from(i: Instance) -> Self {
        Self {
            name: i.name,
            depot: i.depot,
            depot_due: i.depot_due,
            fleet: i.fleet,
            horizon: Some(i.horizon),
            diagonal: Some(i.diagonal),
            customers: i.customers,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub customer_id: u32,
    pub arrival: f64,
    pub service_start: f64,
    pub departure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub vehicle_id: usize,
    pub visits: Vec<Visit>,
    pub depot_departure: f64,
    pub depot_return: f64,
    pub load: f64,
    pub distance: f64,
}

impl Route {
    /// Schedules the customer sequence (instance indices) leaving the depot at
    /// `depot_departure` and waiting at a customer whenever it arrives early.
    pub fn schedule(inst: &Instance, vehicle_id: usize, seq: &[usize], depot_departure: f64) -> Self {
        let mut visits = Vec::with_capacity(seq.len());
        let mut node = DEPOT;
        let mut t = depot_departure;
        let mut load = 0.0;
        let mut dist = 0.0;
        for &idx in seq {
            let c = inst.customer(idx);
            let next = node_of(idx);
            dist += inst.node_dist(node, next);
            let arrival = t + inst.travel_time(node, next);
            let service_start = arrival.max(c.tw_min);
            let departure = service_start + c.service_duration;
            visits.push(Visit { customer_id: c.id, arrival, service_start, departure });
            load += c.demand;
            node = next;
            t = departure;
        }
        dist += inst.node_dist(node, DEPOT);
        let depot_return = if seq.is_empty() { depot_departure } else { t + inst.travel_time(node, DEPOT) };
        Self { vehicle_id, visits, depot_departure, depot_return, load, distance: dist }
    }
}

impl Route {
    /// Schedules `(customer index, earliest leg start)` pairs, leaving each
    /// stop as late as the next window allows but never before the leg's
    /// earliest start. Waiting therefore happens before a leg, not after it.
    pub fn schedule_deferred(inst: &Instance, vehicle_id: usize, plan: &[(usize, f64)]) -> Self {
        let mut visits = Vec::with_capacity(plan.len());
        let mut node = DEPOT;
        let mut ready: f64 = 0.0;
        let mut dist = 0.0;
        let mut load = 0.0;
        let mut depot_departure = 0.0;
        for (pos, &(i, not_before)) in plan.iter().enumerate() {
            let c = inst.customer(i);
            let travel = inst.travel_time(node, node_of(i));
            let depart = ready.max(not_before).max(c.tw_min - travel);
            if pos == 0 {
                depot_departure = depart;
            }
            let arrival = depart + travel;
            let service_start = arrival.max(c.tw_min);
            let departure = service_start + c.service_duration;
            visits.push(Visit { customer_id: c.id, arrival, service_start, departure });
            dist += inst.node_dist(node, node_of(i));
            load += c.demand;
            node = node_of(i);
            ready = departure;
        }
        dist += inst.node_dist(node, DEPOT);
        let depot_return = if plan.is_empty() { depot_departure } else { ready + inst.travel_time(node, DEPOT) };
        Self { vehicle_id, visits, depot_departure, depot_return, load, distance: dist }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteMetrics {
    pub distance: f64,
    pub load: f64,
    pub duration: f64,
}

/// Recomputes distance, load and duration of a route from the instance data.
///
/// Panics if the route names a customer id absent from the instance; use
/// [`validate_solution`] for untrusted input.
pub fn route_metrics(inst: &Instance, route: &Route) -> RouteMetrics {
    if route.visits.is_empty() {
        return RouteMetrics { distance: 0.0, load: 0.0, duration: 0.0 };
    }
    let mut node = DEPOT;
    let mut distance = 0.0;
    let mut load = 0.0;
    for v in &route.visits {
        let idx = inst.index_of(v.customer_id).expect("route references unknown customer");
        let next = node_of(idx);
        distance += inst.node_dist(node, next);
        load += inst.customer(idx).demand;
        node = next;
    }
    distance += inst.node_dist(node, DEPOT);
    RouteMetrics { distance, load, duration: route.depot_return - route.depot_departure }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    pub unserved: BTreeSet<u32>,
    pub total_distance: f64,
    pub vehicles_used: usize,
    pub fulfilment: f64,
    pub wall_time_sec: f64,
}

impl Solution {
    /// Assembles a solution, dropping empty routes and deriving the aggregate metrics.
    pub fn from_routes(inst: &Instance, routes: Vec<Route>, unserved: BTreeSet<u32>, wall_time_sec: f64) -> Self {
        let routes: Vec<Route> = routes.into_iter().filter(|r| !r.visits.is_empty()).collect();
        let total_distance = routes.iter().map(|r| r.distance).sum();
        let served: usize = routes.iter().map(|r| r.visits.len()).sum();
        let fulfilment = if inst.is_empty() { 1.0 } else { served as f64 / inst.len() as f64 };
        Self { vehicles_used: routes.len(), routes, unserved, total_distance, fulfilment, wall_time_sec }
    }

    pub fn served_count(&self) -> usize {
        self.routes.iter().map(|r| r.visits.len()).sum()
    }
}

/// Constraint families checked by [`validate_solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// Every customer is served by at most one vehicle, exactly once.
    Uniqueness,
    /// Service starts inside the customer's window.
    TimeWindow,
    /// A route is one continuous depot-to-depot path.
    FlowContinuity,
    /// A vehicle that leaves the depot returns to it.
    DepotReturn,
    /// Route load within vehicle capacity.
    Capacity,
    /// Consecutive stops are separated by at least the travel time.
    TravelTime,
    /// Return no later than the depot due date.
    DepotDue,
    /// Vehicle ids are distinct and within the fleet.
    Fleet,
    /// Aggregate fields agree with the routes.
    Metrics,
    /// A vehicle heads for a customer only after the request is revealed.
    Reveal,
}

impl Constraint {
    pub fn label(self) -> &'static str {
        match self {
            Constraint::Uniqueness => "uniqueness",
            Constraint::TimeWindow => "time-window",
            Constraint::FlowContinuity => "flow-continuity",
            Constraint::DepotReturn => "depot-return",
            Constraint::Capacity => "capacity",
            Constraint::TravelTime => "travel-time",
            Constraint::DepotDue => "depot-due",
            Constraint::Fleet => "fleet",
            Constraint::Metrics => "metrics",
            Constraint::Reveal => "reveal",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: Constraint,
    pub vehicle_id: Option<usize>,
    pub customer_id: Option<u32>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.constraint)?;
        if let Some(v) = self.vehicle_id {
            write!(f, " vehicle {v}")?;
        }
        if let Some(c) = self.customer_id {
            write!(f, " customer {c}")?;
        }
        write!(f, ": {}", self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn cites(&self, c: Constraint) -> bool {
        self.violations.iter().any(|v| v.constraint == c)
    }
}

/// Checks a solution against every routing constraint.
///
/// Returns `Err` only for structural problems (ids that do not exist in the
/// instance); constraint violations are collected in the report.
pub fn validate_solution(inst: &Instance, sol: &Solution) -> Result<ValidationReport, ModelError> {
    for r in &sol.routes {
        for v in &r.visits {
            if inst.index_of(v.customer_id).is_none() {
                return Err(ModelError::UnknownCustomer(v.customer_id));
            }
        }
    }
    if let Some(&id) = sol.unserved.iter().find(|id| inst.index_of(**id).is_none()) {
        return Err(ModelError::UnknownCustomer(id));
    }

    let mut out = Vec::new();
    let mut push = |constraint, vehicle_id, customer_id, detail: String| {
        out.push(Violation { constraint, vehicle_id, customer_id, detail });
    };
    let fleet = inst.fleet();

    let mut seen_vehicle = BTreeSet::new();
    let mut seen = vec![0usize; inst.len()];
    for r in &sol.routes {
        let vid = Some(r.vehicle_id);
        if r.vehicle_id >= fleet.count {
            push(Constraint::Fleet, vid, None, format!("vehicle id outside fleet of {}", fleet.count));
        }
        if !seen_vehicle.insert(r.vehicle_id) {
            push(Constraint::Fleet, vid, None, "vehicle used by more than one route".into());
        }
        for v in &r.visits {
            seen[inst.index_of(v.customer_id).unwrap()] += 1;
        }

        if r.visits.is_empty() {
            if r.distance.abs() > TOLERANCE {
                push(Constraint::FlowContinuity, vid, None, "empty route with nonzero distance".into());
            }
            continue;
        }

        let m = route_metrics(inst, r);
        if (m.distance - r.distance).abs() > TOLERANCE * m.distance.max(1.0) {
            push(
                Constraint::FlowContinuity,
                vid,
                None,
                format!("recorded distance {} but depot-to-depot path measures {}", r.distance, m.distance),
            );
        }
        if m.load > fleet.capacity + TOLERANCE {
            push(Constraint::Capacity, vid, None, format!("load {} exceeds capacity {}", m.load, fleet.capacity));
        }
        if (m.load - r.load).abs() > TOLERANCE {
            push(Constraint::Capacity, vid, None, format!("recorded load {} but demands sum to {}", r.load, m.load));
        }

        let mut node = DEPOT;
        let mut ready = r.depot_departure;
        if !(r.depot_departure >= -TOLERANCE) {
            push(Constraint::TravelTime, vid, None, "depot departure before time zero".into());
        }
        for v in &r.visits {
            let idx = inst.index_of(v.customer_id).unwrap();
            let c = inst.customer(idx);
            let cid = Some(c.id);
            let next = node_of(idx);
            let earliest = ready + inst.travel_time(node, next);
            if v.arrival < earliest - TOLERANCE {
                push(
                    Constraint::TravelTime,
                    vid,
                    cid,
                    format!("arrival {} earlier than reachable time {}", v.arrival, earliest),
                );
            }
            let leg_start = v.arrival - inst.travel_time(node, next);
            if leg_start < c.reveal_time - TOLERANCE {
                push(
                    Constraint::Reveal,
                    vid,
                    cid,
                    format!("leg started at {leg_start} before reveal at {}", c.reveal_time),
                );
            }
            if v.service_start < c.tw_min - TOLERANCE || v.service_start > c.tw_max + TOLERANCE {
                push(
                    Constraint::TimeWindow,
                    vid,
                    cid,
                    format!("service start {} outside [{}, {}]", v.service_start, c.tw_min, c.tw_max),
                );
            }
            if (v.service_start - v.arrival.max(c.tw_min)).abs() > TOLERANCE {
                push(
                    Constraint::TimeWindow,
                    vid,
                    cid,
                    format!("service start {} is not max(arrival, window open)", v.service_start),
                );
            }
            if (v.departure - (v.service_start + c.service_duration)).abs() > TOLERANCE {
                push(
                    Constraint::TravelTime,
                    vid,
                    cid,
                    format!("departure {} does not follow service completion", v.departure),
                );
            }
            node = next;
            ready = v.departure;
        }
        let back = ready + inst.travel_time(node, DEPOT);
        if !r.depot_return.is_finite() || r.depot_return < back - TOLERANCE {
            push(
                Constraint::DepotReturn,
                vid,
                None,
                format!("depot return {} earlier than reachable time {}", r.depot_return, back),
            );
        }
        if let Some(due) = inst.depot_due() {
            if r.depot_return > due + TOLERANCE {
                push(Constraint::DepotDue, vid, None, format!("return {} after depot due {}", r.depot_return, due));
            }
        }
    }

    for (idx, &count) in seen.iter().enumerate() {
        let c = inst.customer(idx);
        let listed_unserved = sol.unserved.contains(&c.id);
        if count > 1 {
            push(Constraint::Uniqueness, None, Some(c.id), format!("served {count} times"));
        }
        if count >= 1 && listed_unserved {
            push(Constraint::Uniqueness, None, Some(c.id), "served but also listed unserved".into());
        }
        if count == 0 && !listed_unserved {
            push(Constraint::Uniqueness, None, Some(c.id), "neither served nor listed unserved".into());
        }
    }

    let nonempty = sol.routes.iter().filter(|r| !r.visits.is_empty()).count();
    if nonempty != sol.vehicles_used {
        push(
            Constraint::Metrics,
            None,
            None,
            format!("vehicles_used {} but {} routes have visits", sol.vehicles_used, nonempty),
        );
    }
    let total: f64 = sol.routes.iter().map(|r| r.distance).sum();
    if (total - sol.total_distance).abs() > TOLERANCE * total.max(1.0) {
        push(Constraint::Metrics, None, None, format!("total distance {} but routes sum to {}", sol.total_distance, total));
    }
    let served: usize = seen.iter().filter(|&&c| c > 0).count();
    let expected = if inst.is_empty() { 1.0 } else { served as f64 / inst.len() as f64 };
    if (expected - sol.fulfilment).abs() > 1e-9 {
        push(Constraint::Metrics, None, None, format!("fulfilment {} but {} of {} served", sol.fulfilment, served, inst.len()));
    }

    Ok(ValidationReport { violations: out })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cust(id: u32, x: f64, y: f64, demand: f64, tw: (f64, f64)) -> Customer {
        Customer { id, loc: Location::new(x, y), demand, tw_min: tw.0, tw_max: tw.1, service_duration: 0.0, reveal_time: 0.0 }
    }

    fn fleet(count: usize, capacity: f64) -> FleetSpec {
        FleetSpec { count, capacity, speed: 1.0 }
    }

    #[test]
    fn distance_examples() {
        let o = Location::new(0.0, 0.0);
        assert_eq!(distance(o, o), 0.0);
        assert_eq!(distance(o, Location::new(3.0, 4.0)), 5.0);
        let d = distance(Location::new(-100.0, -100.0), Location::new(100.0, 100.0));
        assert!((d - 282.8427).abs() < 1e-4);
    }

    #[test]
    fn horizon_and_diagonal() {
        let cs = vec![cust(1, 3.0, 4.0, 1.0, (0.0, 50.0)), cust(2, -1.0, 0.0, 1.0, (10.0, 80.0))];
        let inst = Instance::new("t", Location::new(0.0, 0.0), None, cs.clone(), fleet(2, 10.0)).unwrap();
        assert_eq!(inst.horizon(), 80.0);
        assert_eq!(inst.diagonal(), 4.0f64.hypot(4.0));
        let due = Instance::new("t", Location::new(0.0, 0.0), Some(200.0), cs, fleet(2, 10.0)).unwrap();
        assert_eq!(due.horizon(), 200.0);
    }

    #[test]
    fn rejects_bad_instances() {
        let o = Location::new(0.0, 0.0);
        let dup = vec![cust(1, 1.0, 1.0, 1.0, (0.0, 5.0)), cust(1, 2.0, 2.0, 1.0, (0.0, 5.0))];
        assert!(Instance::new("d", o, None, dup, fleet(1, 10.0)).is_err());
        let window = vec![cust(1, 1.0, 1.0, 1.0, (5.0, 5.0))];
        assert!(Instance::new("w", o, None, window, fleet(1, 10.0)).is_err());
        assert!(Instance::new("f", o, None, vec![], fleet(0, 10.0)).is_err());
    }

    #[test]
    fn route_metrics_examples() {
        let cs = vec![cust(1, 3.0, 4.0, 2.0, (0.0, 100.0)), cust(2, 3.0, 0.0, 3.0, (0.0, 100.0))];
        let inst = Instance::new("m", Location::new(0.0, 0.0), None, cs, fleet(1, 10.0)).unwrap();
        let single = Route::schedule(&inst, 0, &[0], 0.0);
        assert_eq!(route_metrics(&inst, &single).distance, 10.0);
        let empty = Route::schedule(&inst, 0, &[], 0.0);
        let m = route_metrics(&inst, &empty);
        assert_eq!((m.distance, m.load), (0.0, 0.0));
        let both = Route::schedule(&inst, 0, &[0, 1], 0.0);
        let m = route_metrics(&inst, &both);
        assert!((m.distance - 12.0).abs() < 1e-12);
        assert_eq!(m.load, 5.0);
    }

    #[test]
    fn empty_solution_passes() {
        let inst = Instance::new("e", Location::new(0.0, 0.0), None, vec![], fleet(1, 10.0)).unwrap();
        let sol = Solution::from_routes(&inst, vec![], BTreeSet::new(), 0.0);
        assert_eq!(sol.fulfilment, 1.0);
        assert!(validate_solution(&inst, &sol).unwrap().is_valid());
    }

    #[test]
    fn capacity_violation_is_reported() {
        let cs = vec![cust(1, 3.0, 4.0, 20.0, (0.0, 100.0))];
        let inst = Instance::new("c", Location::new(0.0, 0.0), None, cs, fleet(1, 10.0)).unwrap();
        let sol = Solution::from_routes(&inst, vec![Route::schedule(&inst, 0, &[0], 0.0)], BTreeSet::new(), 0.0);
        let report = validate_solution(&inst, &sol).unwrap();
        assert!(report.cites(Constraint::Capacity));
        assert!(!report.cites(Constraint::TimeWindow));
    }

    #[test]
    fn late_arrival_is_reported() {
        let cs = vec![cust(1, 3.0, 4.0, 1.0, (0.0, 10.0))];
        let inst = Instance::new("w", Location::new(0.0, 0.0), None, cs, fleet(1, 10.0)).unwrap();
        // leave at 6 so the arrival lands at tw_max + 1
        let route = Route::schedule(&inst, 0, &[0], 6.0);
        assert_eq!(route.visits[0].arrival, 11.0);
        let sol = Solution::from_routes(&inst, vec![route], BTreeSet::new(), 0.0);
        let report = validate_solution(&inst, &sol).unwrap();
        assert!(report.cites(Constraint::TimeWindow), "{report:?}");
    }

    #[test]
    fn unknown_id_is_structural() {
        let inst = Instance::new("u", Location::new(0.0, 0.0), None, vec![], fleet(1, 10.0)).unwrap();
        let mut sol = Solution::from_routes(&inst, vec![], BTreeSet::new(), 0.0);
        sol.unserved.insert(7);
        assert!(matches!(validate_solution(&inst, &sol), Err(ModelError::UnknownCustomer(7))));
    }

    #[test]
    fn duplicate_service_and_missing_customer() {
        let cs = vec![cust(1, 1.0, 0.0, 1.0, (0.0, 100.0)), cust(2, 2.0, 0.0, 1.0, (0.0, 100.0))];
        let inst = Instance::new("d", Location::new(0.0, 0.0), None, cs, fleet(2, 10.0)).unwrap();
        let r0 = Route::schedule(&inst, 0, &[0], 0.0);
        let r1 = Route::schedule(&inst, 1, &[0], 0.0);
        let sol = Solution::from_routes(&inst, vec![r0, r1], BTreeSet::new(), 0.0);
        let report = validate_solution(&inst, &sol).unwrap();
        let uniq: Vec<_> = report.violations.iter().filter(|v| v.constraint == Constraint::Uniqueness).collect();
        assert_eq!(uniq.len(), 2);
    }

    #[test]
    fn depot_due_enforced() {
        let cs = vec![cust(1, 10.0, 0.0, 1.0, (0.0, 100.0))];
        let inst = Instance::new("due", Location::new(0.0, 0.0), Some(15.0), cs, fleet(1, 10.0)).unwrap();
        let sol = Solution::from_routes(&inst, vec![Route::schedule(&inst, 0, &[0], 0.0)], BTreeSet::new(), 0.0);
        assert!(validate_solution(&inst, &sol).unwrap().cites(Constraint::DepotDue));
    }

    #[test]
    fn travel_time_shortcut_detected() {
        let cs = vec![cust(1, 10.0, 0.0, 1.0, (0.0, 100.0))];
        let inst = Instance::new("tt", Location::new(0.0, 0.0), None, cs, fleet(1, 10.0)).unwrap();
        let mut route = Route::schedule(&inst, 0, &[0], 0.0);
        route.visits[0] = Visit { customer_id: 1, arrival: 5.0, service_start: 5.0, departure: 5.0 };
        let sol = Solution::from_routes(&inst, vec![route], BTreeSet::new(), 0.0);
        assert!(validate_solution(&inst, &sol).unwrap().cites(Constraint::TravelTime));
    }

    #[test]
    fn leg_before_reveal_detected() {
        let mut c = cust(1, 10.0, 0.0, 1.0, (0.0, 100.0));
        c.reveal_time = 30.0;
        let inst = Instance::new("rv", Location::new(0.0, 0.0), None, vec![c], fleet(1, 10.0)).unwrap();
        let early = Route::schedule(&inst, 0, &[0], 0.0);
        let sol = Solution::from_routes(&inst, vec![early], BTreeSet::new(), 0.0);
        assert!(validate_solution(&inst, &sol).unwrap().cites(Constraint::Reveal));
        let late = Route::schedule(&inst, 0, &[0], 30.0);
        let sol = Solution::from_routes(&inst, vec![late], BTreeSet::new(), 0.0);
        assert!(validate_solution(&inst, &sol).unwrap().is_valid());
    }
}
