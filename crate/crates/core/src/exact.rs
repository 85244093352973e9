//! Exhaustive optimum for tiny instances and an LP-format exporter of the
//! mixed-integer model.
//!
//! LP variable naming, with `i`, `j` customer ids and `k` a vehicle index
//! starting at 0:
//!
//! * `a_i_j_k` binary, vehicle `k` drives from customer `i` to customer `j`
//! * `f_i_k` binary, `i` is the first stop of `k`
//! * `l_i_k` binary, `i` is the last stop of `k`
//! * `t_i_k` continuous, start of service at `i` if `k` serves it

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::io;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::model::{node_of, Instance, Route, Solution, DEPOT, TOLERANCE};

pub const DEFAULT_MAX_CUSTOMERS: usize = 8;

const LOAD_EPS: f64 = 1e-9;
const TIE_EPS: f64 = 1e-9;

/// Why no solution serves every customer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Infeasibility {
    /// Even a dedicated vehicle cannot serve this customer (id).
    Customer(u32),
    /// Each customer is servable alone, but not all of them together with this fleet.
    Fleet { vehicles: usize },
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("{n} customers exceed the oracle limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("{}", match .0 {
        Infeasibility::Customer(id) => format!("customer {id} cannot be served by any vehicle"),
        Infeasibility::Fleet { vehicles } => format!("no plan with {vehicles} vehicles serves every customer"),
    })]
    Infeasible(Infeasibility),
}

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("the model covers static instances only; customer {0} has a reveal time")]
    Dynamic(u32),
    #[error("cannot write model: {0}")]
    Io(#[from] io::Error),
}

struct Search<'a> {
    inst: &'a Instance,
    vehicles: usize,
    capacity: f64,
    /// Routes closed so far plus the open one (last).
    routes: Vec<Vec<usize>>,
    best: Option<(f64, Vec<Vec<u32>>)>,
}

impl Search<'_> {
    fn dist(&self, a: usize, b: usize) -> f64 {
        self.inst.node_dist(a, b)
    }

    /// Minimum spanning tree weight over `nodes` (Prim, dense).
    fn mst(&self, nodes: &[usize]) -> f64 {
        if nodes.len() < 2 {
            return 0.0;
        }
        let mut in_tree = vec![false; nodes.len()];
        let mut key = vec![f64::INFINITY; nodes.len()];
        key[0] = 0.0;
        let mut total = 0.0;
        for _ in 0..nodes.len() {
            let u = (0..nodes.len()).filter(|&v| !in_tree[v]).min_by(|&a, &b| key[a].total_cmp(&key[b])).unwrap();
            in_tree[u] = true;
            total += key[u];
            for v in 0..nodes.len() {
                if !in_tree[v] {
                    key[v] = key[v].min(self.dist(nodes[u], nodes[v]));
                }
            }
        }
        total
    }

    fn encoding(&self) -> Vec<Vec<u32>> {
        let mut enc: Vec<Vec<u32>> =
            self.routes.iter().filter(|r| !r.is_empty()).map(|r| r.iter().map(|&i| self.inst.customer(i).id).collect()).collect();
        enc.sort();
        enc
    }

    fn offer(&mut self, cost: f64) {
        let better = match &self.best {
            None => true,
            Some((b, enc)) => cost < b - TIE_EPS || (cost <= b + TIE_EPS && self.encoding() < *enc),
        };
        if better {
            self.best = Some((cost, self.encoding()));
        }
    }

    fn bound_ok(&self, lb: f64) -> bool {
        self.best.as_ref().is_none_or(|(b, _)| lb <= b + TIE_EPS)
    }

    /// `here` is the open route's current node, `ready` the time it may
    /// leave, `load` its load, `cost` the distance so far. The open route
    /// must contain `marker`, the lowest customer left when it was opened,
    /// so each partition into routes is visited once.
    fn dfs(&mut self, left: &mut Vec<usize>, here: usize, ready: f64, load: f64, cost: f64, marker: usize) {
        let inst = self.inst;
        if left.is_empty() {
            if self.closes(here, ready) {
                self.offer(cost + self.dist(here, DEPOT));
            }
            return;
        }
        let mut nodes: Vec<usize> = vec![DEPOT];
        if here != DEPOT {
            nodes.push(here);
        }
        nodes.extend(left.iter().map(|&i| node_of(i)));
        if !self.bound_ok(cost + self.mst(&nodes)) {
            return;
        }
        for pos in 0..left.len() {
            let i = left[pos];
            let c = inst.customer(i);
            if load + c.demand > self.capacity + LOAD_EPS {
                continue;
            }
            let depart = ready.max(c.reveal_time);
            let arrival = depart + inst.travel_time(here, node_of(i));
            if arrival > c.tw_max + TOLERANCE {
                continue;
            }
            left.remove(pos);
            self.routes.last_mut().unwrap().push(i);
            let done = arrival.max(c.tw_min) + c.service_duration;
            self.dfs(left, node_of(i), done, load + c.demand, cost + self.dist(here, node_of(i)), marker);
            self.routes.last_mut().unwrap().pop();
            left.insert(pos, i);
        }
        let has_marker = self.routes.last().unwrap().contains(&marker);
        if has_marker && self.routes.len() < self.vehicles && self.closes(here, ready) {
            self.routes.push(Vec::new());
            let next = left[0];
            self.dfs(left, DEPOT, 0.0, 0.0, cost + self.dist(here, DEPOT), next);
            self.routes.pop();
        }
    }

    fn closes(&self, here: usize, ready: f64) -> bool {
        match self.inst.depot_due() {
            Some(due) if here != DEPOT => ready + self.inst.travel_time(here, DEPOT) <= due + TOLERANCE,
            _ => true,
        }
    }
}

/// Minimum total distance over plans that serve every customer.
///
/// A leg towards a customer never starts before its reveal time, so on a
/// dynamic instance this is the best any online policy could do. Among
/// equally short plans the one whose sorted list of id sequences is
/// lexicographically smallest is returned.
pub fn brute_force_optimal(inst: &Instance, max_customers: usize) -> Result<Solution, OracleError> {
    let n = inst.len();
    if n > max_customers {
        return Err(OracleError::TooLarge { n, limit: max_customers });
    }
    let started = Instant::now();
    let fleet = inst.fleet();
    for c in inst.customers() {
        let node = node_of(inst.index_of(c.id).unwrap());
        let arrival = c.reveal_time + inst.travel_time(DEPOT, node);
        let back = arrival.max(c.tw_min) + c.service_duration + inst.travel_time(node, DEPOT);
        let late_home = inst.depot_due().is_some_and(|due| back > due + TOLERANCE);
        if c.demand > fleet.capacity + LOAD_EPS || arrival > c.tw_max + TOLERANCE || late_home {
            return Err(OracleError::Infeasible(Infeasibility::Customer(c.id)));
        }
    }
    if n == 0 {
        return Ok(Solution::from_routes(inst, Vec::new(), BTreeSet::new(), started.elapsed().as_secs_f64()));
    }
    let mut search = Search { inst, vehicles: fleet.count, capacity: fleet.capacity, routes: vec![Vec::new()], best: None };
    let mut left: Vec<usize> = (0..n).collect();
    search.dfs(&mut left, DEPOT, 0.0, 0.0, 0.0, 0);
    let Some((_, enc)) = search.best else {
        return Err(OracleError::Infeasible(Infeasibility::Fleet { vehicles: fleet.count }));
    };
    let routes = enc
        .iter()
        .enumerate()
        .map(|(k, ids)| {
            let plan: Vec<(usize, f64)> = ids
                .iter()
                .map(|&id| {
                    let i = inst.index_of(id).unwrap();
                    (i, inst.customer(i).reveal_time)
                })
                .collect();
            Route::schedule_deferred(inst, k, &plan)
        })
        .collect();
    Ok(Solution::from_routes(inst, routes, BTreeSet::new(), started.elapsed().as_secs_f64()))
}

/// Sizes of the exported model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MilpCounts {
    pub binaries: usize,
    pub continuous: usize,
    pub constraints: usize,
}

impl MilpCounts {
    /// Closed form for `n` customers and `k` vehicles: arcs between distinct
    /// customers plus first and last flags are binary, one service time per
    /// customer and vehicle. Rows: service once (n), flow balance (nk), one
    /// first stop and capacity per vehicle (2k), precedence (n(n-1)k), first
    /// leg timing (nk), plus return-by-due (nk) when the depot closes.
    pub fn closed_form(n: usize, k: usize, depot_due: bool) -> Self {
        let due_rows = if depot_due { n * k } else { 0 };
        Self {
            binaries: n * n.saturating_sub(1) * k + 2 * n * k,
            continuous: n * k,
            constraints: n + n * k + 2 * k + n * n.saturating_sub(1) * k + n * k + due_rows,
        }
    }
}

fn term(out: &mut String, coef: f64, var: &str) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {var}", -coef);
    } else {
        let _ = write!(out, " + {coef} {var}");
    }
}

/// Renders the model in LP format.
pub fn milp_text(inst: &Instance) -> Result<(String, MilpCounts), ExportError> {
    if let Some(c) = inst.customers().iter().find(|c| c.reveal_time > 0.0) {
        return Err(ExportError::Dynamic(c.id));
    }
    let n = inst.len();
    let fleet = inst.fleet();
    let k_count = fleet.count;
    let ids: Vec<u32> = inst.customers().iter().map(|c| c.id).collect();
    let a = |i: usize, j: usize, k: usize| format!("a_{}_{}_{k}", ids[i], ids[j]);
    let f = |i: usize, k: usize| format!("f_{}_{k}", ids[i]);
    let l = |i: usize, k: usize| format!("l_{}_{k}", ids[i]);
    let t = |i: usize, k: usize| format!("t_{}_{k}", ids[i]);

    let mut out = String::new();
    let _ = writeln!(out, "\\ vehicle routing with time windows: {}", inst.name());
    out.push_str("Minimize\n obj:");
    for k in 0..k_count {
        for i in 0..n {
            term(&mut out, inst.node_dist(DEPOT, node_of(i)), &f(i, k));
            term(&mut out, inst.node_dist(node_of(i), DEPOT), &l(i, k));
            for j in (0..n).filter(|&j| j != i) {
                term(&mut out, inst.node_dist(node_of(i), node_of(j)), &a(i, j, k));
            }
        }
    }
    if n == 0 {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    let mut rows = 0;
    let mut row = |out: &mut String, name: String, body: String, rhs: &str| {
        let _ = writeln!(out, " {name}:{body} {rhs}");
        rows += 1;
    };

    for j in 0..n {
        let mut body = String::new();
        for k in 0..k_count {
            term(&mut body, 1.0, &f(j, k));
            for i in (0..n).filter(|&i| i != j) {
                term(&mut body, 1.0, &a(i, j, k));
            }
        }
        row(&mut out, format!("once_{}", ids[j]), body, "= 1");
    }
    for k in 0..k_count {
        for j in 0..n {
            let mut body = String::new();
            term(&mut body, 1.0, &f(j, k));
            for i in (0..n).filter(|&i| i != j) {
                term(&mut body, 1.0, &a(i, j, k));
            }
            term(&mut body, -1.0, &l(j, k));
            for i in (0..n).filter(|&i| i != j) {
                term(&mut body, -1.0, &a(j, i, k));
            }
            row(&mut out, format!("flow_{}_{k}", ids[j]), body, "= 0");
        }
        let mut first = String::new();
        let mut cap = String::new();
        for i in 0..n {
            term(&mut first, 1.0, &f(i, k));
            let q = inst.customer(i).demand;
            term(&mut cap, q, &f(i, k));
            for j in (0..n).filter(|&j| j != i) {
                term(&mut cap, q, &a(j, i, k));
            }
        }
        if n == 0 {
            first.push_str(" 0 dummy");
            cap.push_str(" 0 dummy");
        }
        row(&mut out, format!("start_{k}"), first, "<= 1");
        row(&mut out, format!("cap_{k}"), cap, &format!("<= {}", fleet.capacity));
    }
    // Precedence: t_j >= t_i + s_i + tt_ij when k drives i -> j. The big-M is
    // the least value that leaves the row slack for every pair of in-window
    // service times when the arc is unused.
    for k in 0..k_count {
        for i in 0..n {
            let ci = inst.customer(i);
            for j in (0..n).filter(|&j| j != i) {
                let cj = inst.customer(j);
                let gap = ci.service_duration + inst.travel_time(node_of(i), node_of(j));
                let m = (ci.tw_max + gap - cj.tw_min).max(0.0);
                let mut body = String::new();
                term(&mut body, 1.0, &t(j, k));
                term(&mut body, -1.0, &t(i, k));
                term(&mut body, -m, &a(i, j, k));
                row(&mut out, format!("prec_{}_{}_{k}", ids[i], ids[j]), body, &format!(">= {}", gap - m));
            }
        }
        for i in 0..n {
            let ci = inst.customer(i);
            let tt = inst.travel_time(DEPOT, node_of(i));
            let m = (tt - ci.tw_min).max(0.0);
            let mut body = String::new();
            term(&mut body, 1.0, &t(i, k));
            term(&mut body, -m, &f(i, k));
            row(&mut out, format!("lead_{}_{k}", ids[i]), body, &format!(">= {}", tt - m));
        }
        if let Some(due) = inst.depot_due() {
            for i in 0..n {
                let ci = inst.customer(i);
                let tail = ci.service_duration + inst.travel_time(node_of(i), DEPOT);
                let m = (ci.tw_max + tail - due).max(0.0);
                let mut body = String::new();
                term(&mut body, 1.0, &t(i, k));
                term(&mut body, m, &l(i, k));
                row(&mut out, format!("due_{}_{k}", ids[i]), body, &format!("<= {}", due - tail + m));
            }
        }
    }

    out.push_str("Bounds\n");
    for k in 0..k_count {
        for i in 0..n {
            let c = inst.customer(i);
            let _ = writeln!(out, " {} <= {} <= {}", c.tw_min, t(i, k), c.tw_max);
        }
    }
    if n == 0 {
        out.push_str(" dummy = 0\n");
    }
    out.push_str("Binaries\n");
    let mut binaries = 0;
    for k in 0..k_count {
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let _ = writeln!(out, " {}", a(i, j, k));
                binaries += 1;
            }
            let _ = writeln!(out, " {}\n {}", f(i, k), l(i, k));
            binaries += 2;
        }
    }
    out.push_str("End\n");
    Ok((out, MilpCounts { binaries, continuous: n * k_count, constraints: rows }))
}

pub fn export_milp(inst: &Instance, path: &Path) -> Result<MilpCounts, ExportError> {
    let (text, counts) = milp_text(inst)?;
    std::fs::write(path, text)?;
    Ok(counts)
}
