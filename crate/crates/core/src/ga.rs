//! Genetic-algorithm baseline: nearest-neighbour seeding, route-elimination
//! by reinsertion, binary tournaments, common-node / common-arc crossover,
//! relocate-or-swap mutation, and a re-planning wrapper for reveals.

use std::collections::{BTreeSet, HashSet};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::instance_io::derive_seed;
use crate::model::{node_of, Instance, Node, Route, Solution, Visit, DEPOT};

const LOAD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population: usize,
    pub vehicle_weight: f64,
    /// Charged per customer left out; only matters when the fleet cannot cover everyone.
    pub unserved_penalty: f64,
    pub mutation_prob: f64,
    pub stall_generations: usize,
    pub max_generations: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        Self {
            population: 50,
            vehicle_weight: 100.0,
            unserved_penalty: 10_000.0,
            mutation_prob: 0.1,
            stall_generations: 50,
            max_generations: 10_000,
            seed: 0,
        }
    }
}

impl GaConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        if self.population < 2 {
            return Err(ContractError::Other("population must be at least 2".into()));
        }
        if !(0.0..=1.0).contains(&self.mutation_prob) {
            return Err(ContractError::Other("mutation probability outside [0, 1]".into()));
        }
        if self.stall_generations == 0 {
            return Err(ContractError::Other("stall generations must be positive".into()));
        }
        Ok(())
    }
}

/// Where an already-moving vehicle can continue from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteStart {
    pub vehicle: usize,
    pub node: Node,
    /// Earliest time it may leave `node`.
    pub time: f64,
    pub capacity_left: f64,
}

/// One vehicle's customer sequence. `start` indexes [`GaProblem::starts`]
/// for vehicles already on the road; `None` is a fresh vehicle leaving the
/// depot at [`GaProblem::depart_at`].
#[derive(Debug, Clone, PartialEq)]
pub struct GaRoute {
    pub start: Option<usize>,
    pub seq: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chromosome {
    pub routes: Vec<GaRoute>,
    /// Customers no route could take.
    pub unrouted: Vec<usize>,
    fitness: f64,
}

impl Chromosome {
    pub fn fitness(&self) -> f64 {
        self.fitness
    }

    pub fn route_count(&self) -> usize {
        self.routes.iter().filter(|r| r.start.is_some() || !r.seq.is_empty()).count()
    }

    pub fn customers(&self) -> impl Iterator<Item = usize> + '_ {
        self.routes.iter().flat_map(|r| r.seq.iter().copied())
    }
}

/// The routing task a GA run solves: which customers, from which starting states.
#[derive(Debug, Clone)]
pub struct GaProblem<'a> {
    pub inst: &'a Instance,
    pub customers: Vec<usize>,
    pub starts: Vec<RouteStart>,
    pub depart_at: f64,
    /// How many fresh vehicles may still leave the depot.
    pub fresh_limit: usize,
    pub cfg: GaConfig,
}

impl<'a> GaProblem<'a> {
    /// Every customer, whole fleet at the depot at time zero.
    pub fn full(inst: &'a Instance, cfg: GaConfig) -> Self {
        Self { inst, customers: (0..inst.len()).collect(), starts: Vec::new(), depart_at: 0.0, fresh_limit: inst.fleet().count, cfg }
    }

    fn origin(&self, r: &GaRoute) -> (Node, f64, f64) {
        match r.start {
            Some(s) => {
                let st = &self.starts[s];
                (st.node, st.time, st.capacity_left)
            }
            None => (DEPOT, self.depart_at, self.inst.fleet().capacity),
        }
    }

    /// Distance of the route from its origin back to the depot, or `None` if infeasible.
    pub fn route_cost(&self, r: &GaRoute) -> Option<f64> {
        let (node, time, cap) = self.origin(r);
        self.walk(node, time, cap, &r.seq)
    }

    fn walk(&self, mut node: Node, mut t: f64, cap: f64, seq: &[usize]) -> Option<f64> {
        let inst = self.inst;
        let mut load = 0.0;
        let mut dist = 0.0;
        for &i in seq {
            let c = inst.customer(i);
            let next = node_of(i);
            let arrival = t + inst.travel_time(node, next);
            if arrival > c.tw_max {
                return None;
            }
            load += c.demand;
            if load > cap + LOAD_EPS {
                return None;
            }
            dist += inst.node_dist(node, next);
            t = arrival.max(c.tw_min) + c.service_duration;
            node = next;
        }
        if seq.is_empty() {
            return Some(if node == DEPOT { 0.0 } else { inst.node_dist(node, DEPOT) });
        }
        if let Some(due) = inst.depot_due() {
            if t + inst.travel_time(node, DEPOT) > due {
                return None;
            }
        }
        Some(dist + inst.node_dist(node, DEPOT))
    }

    /// Distance plus the vehicle charge (and the penalty for left-out customers).
    pub fn fitness(&self, c: &Chromosome) -> Result<f64, ContractError> {
        let mut total = 0.0;
        for r in &c.routes {
            total += self.route_cost(r).ok_or_else(|| ContractError::Other("infeasible route in chromosome".into()))?;
        }
        Ok(total + self.cfg.vehicle_weight * c.route_count() as f64 + self.cfg.unserved_penalty * c.unrouted.len() as f64)
    }

    fn finish(&self, mut routes: Vec<GaRoute>, mut unrouted: Vec<usize>) -> Chromosome {
        routes.retain(|r| r.start.is_some() || !r.seq.is_empty());
        routes.sort_by(|a, b| match (a.start, b.start) {
            (Some(x), Some(y)) => x.cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.seq.first().cmp(&b.seq.first()),
        });
        unrouted.sort_unstable();
        let mut c = Chromosome { routes, unrouted, fitness: 0.0 };
        c.fitness = self.fitness(&c).expect("operators keep routes feasible");
        c
    }

    fn fresh_count(routes: &[GaRoute]) -> usize {
        routes.iter().filter(|r| r.start.is_none() && !r.seq.is_empty()).count()
    }

    fn empty_starts(&self) -> Vec<GaRoute> {
        (0..self.starts.len()).map(|s| GaRoute { start: Some(s), seq: Vec::new() }).collect()
    }

    /// Whether a single fresh or started vehicle could serve `i` alone.
    fn servable(&self, i: usize) -> bool {
        let alone = vec![i];
        (self.fresh_limit > 0 && self.walk(DEPOT, self.depart_at, self.inst.fleet().capacity, &alone).is_some())
            || self.starts.iter().any(|s| self.walk(s.node, s.time, s.capacity_left, &alone).is_some())
    }

    /// Nearest-neighbour construction from a random seed customer per route.
    /// Vehicles already on the road are extended first, in random order.
    pub fn nearest_neighbour<R: Rng + ?Sized>(&self, rng: &mut R) -> Chromosome {
        let inst = self.inst;
        let mut left: BTreeSet<usize> = self.customers.iter().copied().collect();
        let mut unrouted: Vec<usize> = Vec::new();
        left.retain(|&i| {
            let ok = self.servable(i);
            if !ok {
                unrouted.push(i);
            }
            ok
        });

        let extend = |route: &mut GaRoute, left: &mut BTreeSet<usize>| loop {
            let (origin, _, _) = self.origin(route);
            let here = route.seq.last().map_or(origin, |&i| node_of(i));
            let mut best: Option<(f64, usize)> = None;
            for &j in left.iter() {
                let d = inst.node_dist(here, node_of(j));
                if best.is_some_and(|(bd, _)| bd <= d) {
                    continue;
                }
                route.seq.push(j);
                if self.route_cost(route).is_some() {
                    best = Some((d, j));
                }
                route.seq.pop();
            }
            match best {
                Some((_, j)) => {
                    route.seq.push(j);
                    left.remove(&j);
                }
                None => break,
            }
        };

        let mut routes = self.empty_starts();
        let mut order: Vec<usize> = (0..routes.len()).collect();
        order.shuffle(rng);
        for idx in order {
            extend(&mut routes[idx], &mut left);
        }
        while !left.is_empty() && Self::fresh_count(&routes) < self.fresh_limit {
            let pool: Vec<usize> = left.iter().copied().collect();
            let seed = pool[rng.gen_range(0..pool.len())];
            let mut r = GaRoute { start: None, seq: vec![seed] };
            left.remove(&seed);
            if self.route_cost(&r).is_none() {
                // Fine alone for some started vehicle but not from the depot.
                unrouted.push(seed);
                continue;
            }
            extend(&mut r, &mut left);
            routes.push(r);
        }
        unrouted.extend(left);
        self.finish(routes, unrouted)
    }

    /// Cheapest feasible insertion position `(route, position, added distance)`.
    fn best_insertion(&self, routes: &[GaRoute], i: usize, skip: Option<usize>) -> Option<(usize, usize, f64)> {
        let inst = self.inst;
        let mut best: Option<(usize, usize, f64)> = None;
        let mut probe = GaRoute { start: None, seq: Vec::new() };
        for (ri, r) in routes.iter().enumerate() {
            if Some(ri) == skip {
                continue;
            }
            let (origin, _, _) = self.origin(r);
            for pos in 0..=r.seq.len() {
                let prev = if pos == 0 { origin } else { node_of(r.seq[pos - 1]) };
                let next = if pos == r.seq.len() { DEPOT } else { node_of(r.seq[pos]) };
                let mut delta = inst.node_dist(prev, node_of(i)) + inst.node_dist(node_of(i), next);
                if !(r.seq.is_empty() && prev == DEPOT) || r.start.is_some() {
                    delta -= inst.node_dist(prev, next);
                }
                if best.is_some_and(|(_, _, b)| b <= delta) {
                    continue;
                }
                probe.start = r.start;
                probe.seq.clear();
                probe.seq.extend_from_slice(&r.seq[..pos]);
                probe.seq.push(i);
                probe.seq.extend_from_slice(&r.seq[pos..]);
                if self.route_cost(&probe).is_some() {
                    best = Some((ri, pos, delta));
                }
            }
        }
        best
    }

    /// Inserts each customer at its cheapest feasible position, opening a
    /// fresh route when none fits and the fleet allows it.
    fn insert_all(&self, routes: &mut Vec<GaRoute>, customers: &[usize], unrouted: &mut Vec<usize>) {
        for &i in customers {
            if let Some((ri, pos, _)) = self.best_insertion(routes, i, None) {
                routes[ri].seq.insert(pos, i);
                continue;
            }
            let alone = GaRoute { start: None, seq: vec![i] };
            if Self::fresh_count(routes) < self.fresh_limit && self.route_cost(&alone).is_some() {
                routes.push(alone);
            } else {
                unrouted.push(i);
            }
        }
    }

    /// Breaks up the least-loaded fresh route and reinserts its customers
    /// elsewhere; keeps the result only if it is complete and fitter.
    pub fn improve_by_insertion(&self, c: &Chromosome) -> Chromosome {
        let inst = self.inst;
        let load = |r: &GaRoute| r.seq.iter().map(|&i| inst.customer(i).demand).sum::<f64>();
        let Some(victim) = c
            .routes
            .iter()
            .enumerate()
            .filter(|(_, r)| r.start.is_none() && !r.seq.is_empty())
            .min_by(|a, b| load(a.1).total_cmp(&load(b.1)).then(a.0.cmp(&b.0)))
            .map(|(idx, _)| idx)
        else {
            return c.clone();
        };
        if c.route_count() < 2 {
            return c.clone();
        }
        let mut routes = c.routes.clone();
        let moved = std::mem::take(&mut routes[victim].seq);
        for &i in &moved {
            match self.best_insertion(&routes, i, Some(victim)) {
                Some((ri, pos, _)) => routes[ri].seq.insert(pos, i),
                None => return c.clone(),
            }
        }
        let out = self.finish(routes, c.unrouted.clone());
        if out.fitness < c.fitness {
            out
        } else {
            c.clone()
        }
    }

    /// Repeats [`Self::improve_by_insertion`] until it stops helping.
    pub fn improve_fully(&self, c: &Chromosome) -> Chromosome {
        let mut cur = c.clone();
        loop {
            let next = self.improve_by_insertion(&cur);
            if next.fitness >= cur.fitness {
                return cur;
            }
            cur = next;
        }
    }

    pub fn init_population<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Chromosome> {
        (0..self.cfg.population).map(|_| self.nearest_neighbour(rng)).collect()
    }

    /// Keeps, for greedily matched route pairs with the largest overlap, the
    /// shared part of the first parent's route; everything else is reinserted
    /// in random order. Overlap is counted on customers or on arcs (depot
    /// legs included), each with probability one half.
    pub fn crossover<R: Rng + ?Sized>(&self, p1: &Chromosome, p2: &Chromosome, rng: &mut R) -> Chromosome {
        let by_arcs = rng.gen_bool(0.5);
        let arcs = |r: &GaRoute| -> HashSet<(Node, Node)> {
            let (origin, _, _) = self.origin(r);
            let mut prev = origin;
            let mut out = HashSet::with_capacity(r.seq.len() + 1);
            for &i in &r.seq {
                out.insert((prev, node_of(i)));
                prev = node_of(i);
            }
            out.insert((prev, DEPOT));
            out
        };

        // (overlap, route in p1, route in p2, kept customers in p1 order)
        let mut matches: Vec<(usize, usize, usize, Vec<usize>)> = Vec::new();
        for (a, r1) in p1.routes.iter().enumerate() {
            let nodes1: HashSet<usize> = r1.seq.iter().copied().collect();
            let arcs1 = if by_arcs { arcs(r1) } else { HashSet::new() };
            for (b, r2) in p2.routes.iter().enumerate() {
                if r1.start != r2.start && (r1.start.is_some() || r2.start.is_some()) {
                    continue;
                }
                let kept: Vec<usize> = if by_arcs {
                    let shared: HashSet<(Node, Node)> = arcs(r2).intersection(&arcs1).copied().collect();
                    r1.seq
                        .iter()
                        .enumerate()
                        .filter(|&(pos, &i)| {
                            let (origin, _, _) = self.origin(r1);
                            let prev = if pos == 0 { origin } else { node_of(r1.seq[pos - 1]) };
                            let next = r1.seq.get(pos + 1).map_or(DEPOT, |&j| node_of(j));
                            shared.contains(&(prev, node_of(i))) || shared.contains(&(node_of(i), next))
                        })
                        .map(|(_, &i)| i)
                        .collect()
                } else {
                    let nodes2: HashSet<usize> = r2.seq.iter().copied().collect();
                    r1.seq.iter().copied().filter(|i| nodes1.contains(i) && nodes2.contains(i)).collect()
                };
                if !kept.is_empty() || r1.start.is_some() {
                    matches.push((kept.len(), a, b, kept));
                }
            }
        }
        matches.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

        let mut used1 = vec![false; p1.routes.len()];
        let mut used2 = vec![false; p2.routes.len()];
        let mut routes = Vec::new();
        let mut placed = HashSet::new();
        for (_, a, b, kept) in matches {
            if used1[a] || used2[b] {
                continue;
            }
            used1[a] = true;
            used2[b] = true;
            placed.extend(kept.iter().copied());
            routes.push(GaRoute { start: p1.routes[a].start, seq: kept });
        }
        for s in 0..self.starts.len() {
            if !routes.iter().any(|r| r.start == Some(s)) {
                routes.push(GaRoute { start: Some(s), seq: Vec::new() });
            }
        }
        let mut rest: Vec<usize> = p1.customers().chain(p1.unrouted.iter().copied()).filter(|i| !placed.contains(i)).collect();
        rest.sort_unstable();
        rest.shuffle(rng);
        let mut unrouted = Vec::new();
        self.insert_all(&mut routes, &rest, &mut unrouted);
        self.finish(routes, unrouted)
    }

    /// With the configured probability, one random feasible relocate or swap.
    /// A relocate may open a new route while the fleet has vehicles to spare.
    pub fn mutate<R: Rng + ?Sized>(&self, c: &Chromosome, rng: &mut R) -> Chromosome {
        if !rng.gen_bool(self.cfg.mutation_prob) {
            return c.clone();
        }
        self.mutate_always(c, rng)
    }

    fn mutate_always<R: Rng + ?Sized>(&self, c: &Chromosome, rng: &mut R) -> Chromosome {
        let slots: Vec<(usize, usize)> =
            c.routes.iter().enumerate().flat_map(|(r, route)| (0..route.seq.len()).map(move |p| (r, p))).collect();
        if slots.len() < 2 {
            return c.clone();
        }
        for _ in 0..20 {
            let mut routes = c.routes.clone();
            let (r1, p1) = slots[rng.gen_range(0..slots.len())];
            if rng.gen_bool(0.5) {
                // Relocate, possibly onto a vehicle not yet in use.
                let i = routes[r1].seq.remove(p1);
                let spare = Self::fresh_count(&routes) < self.fresh_limit;
                let r2 = rng.gen_range(0..routes.len() + usize::from(spare));
                if r2 == routes.len() {
                    routes.push(GaRoute { start: None, seq: Vec::new() });
                }
                let p2 = rng.gen_range(0..=routes[r2].seq.len());
                if r2 == r1 && p2 == p1 {
                    continue;
                }
                routes[r2].seq.insert(p2, i);
                if self.route_cost(&routes[r1]).is_some() && self.route_cost(&routes[r2]).is_some() {
                    return self.finish(routes, c.unrouted.clone());
                }
            } else {
                let (r2, p2) = slots[rng.gen_range(0..slots.len())];
                if (r1, p1) == (r2, p2) {
                    continue;
                }
                let a = routes[r1].seq[p1];
                routes[r1].seq[p1] = routes[r2].seq[p2];
                routes[r2].seq[p2] = a;
                if self.route_cost(&routes[r1]).is_some() && self.route_cost(&routes[r2]).is_some() {
                    return self.finish(routes, c.unrouted.clone());
                }
            }
        }
        c.clone()
    }

    /// Generational loop with an elite of one; stops after the configured
    /// number of generations without improvement of the best fitness. The
    /// best offspring of each generation goes through route elimination
    /// before it competes with the elite.
    pub fn evolve<R: Rng + ?Sized>(&self, rng: &mut R) -> GaRun {
        let mut pop = self.init_population(rng);
        let mut best = best_of(&pop).clone();
        let mut history = vec![best.fitness];
        let mut stall = 0;
        let mut generations = 0;
        while stall < self.cfg.stall_generations && generations < self.cfg.max_generations {
            let mut next = Vec::with_capacity(pop.len());
            next.push(best.clone());
            while next.len() < pop.len() {
                let a = tournament_select(&pop, rng);
                let b = tournament_select(&pop, rng);
                let child = self.crossover(a, b, rng);
                next.push(self.mutate(&child, rng));
            }
            pop = next;
            generations += 1;
            let gen_best = self.improve_by_insertion(best_of(&pop));
            if gen_best.fitness < best.fitness {
                best = gen_best;
                stall = 0;
            } else {
                stall += 1;
            }
            history.push(best.fitness);
        }
        GaRun { best, generations, history }
    }
}

/// Lowest fitness; the first such chromosome on ties.
fn best_of(pop: &[Chromosome]) -> &Chromosome {
    pop.iter().reduce(|a, b| if b.fitness < a.fitness { b } else { a }).expect("non-empty population")
}

/// Binary tournament: two uniform draws, the fitter wins, the first on ties.
pub fn tournament_select<'c, R: Rng + ?Sized>(pop: &'c [Chromosome], rng: &mut R) -> &'c Chromosome {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if b.fitness < a.fitness {
        b
    } else {
        a
    }
}

#[derive(Debug, Clone)]
pub struct GaRun {
    pub best: Chromosome,
    pub generations: usize,
    /// Best fitness after initialisation and after each generation.
    pub history: Vec<f64>,
}

/// Timed customer sequence of one vehicle: `(customer, earliest leg start)`.
type Plan = Vec<(usize, f64)>;

fn assemble(inst: &Instance, plans: &[Plan], wall: f64) -> Solution {
    let routes: Vec<Route> = plans.iter().enumerate().filter(|(_, p)| !p.is_empty()).map(|(k, p)| Route::schedule_deferred(inst, k, p)).collect();
    let served: HashSet<usize> = plans.iter().flatten().map(|&(i, _)| i).collect();
    let unserved = (0..inst.len()).filter(|i| !served.contains(i)).map(|i| inst.customer(i).id).collect();
    Solution::from_routes(inst, routes, unserved, wall)
}
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub solution: Solution,
    pub generations: usize,
    /// Number of GA runs (1 for a static solve).
    pub plans: usize,
    /// Wall time of the runs after the first one, seconds.
    pub replan_time_sec: f64,
}

/// Static GA over every customer, reveal times ignored.
pub fn run_ga(inst: &Instance, cfg: &GaConfig) -> Result<GaOutcome, ContractError> {
    cfg.validate()?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let run = GaProblem::full(inst, *cfg).evolve(&mut rng);
    let plans: Vec<Plan> = run.best.routes.iter().map(|r| r.seq.iter().map(|&i| (i, 0.0)).collect()).collect();
    Ok(GaOutcome {
        solution: assemble(inst, &plans, started.elapsed().as_secs_f64()),
        generations: run.generations,
        plans: 1,
        replan_time_sec: 0.0,
    })
}

/// Plans on the customers known at time zero, then re-plans at every reveal
/// instant. Legs already started (or waiting vehicles whose departure has
/// passed) are frozen; the GA re-routes all not-yet-started work from each
/// vehicle's projected position. Wall time sums every run.
pub fn run_ga_dynamic(inst: &Instance, cfg: &GaConfig) -> Result<GaOutcome, ContractError> {
    if inst.is_static() {
        return run_ga(inst, cfg);
    }
    cfg.validate()?;
    let started = Instant::now();
    let fleet = inst.fleet();
    let mut reveal_times: Vec<f64> = inst.customers().iter().map(|c| c.reveal_time).filter(|&t| t > 0.0).collect();
    reveal_times.sort_by(f64::total_cmp);
    reveal_times.dedup();

    // Per vehicle: frozen prefix and the not-yet-started tail.
    let mut frozen: Vec<Plan> = vec![Vec::new(); fleet.count];
    let mut tail: Vec<Plan> = vec![Vec::new(); fleet.count];
    let mut generations = 0;
    let mut replan_time = 0.0;
    let mut plans = 0;

    for (epoch, now) in std::iter::once(0.0).chain(reveal_times.iter().copied()).enumerate() {
        let t_run = Instant::now();
        // Freeze legs that have started by `now`.
        let mut starts = Vec::new();
        let mut fresh = Vec::new();
        for k in 0..fleet.count {
            let full: Plan = frozen[k].iter().chain(&tail[k]).copied().collect();
            let route = Route::schedule_deferred(inst, k, &full);
            let cut = route.visits.iter().take_while(|v| v.arrival - travel_into(inst, &full, v) <= now).count();
            frozen[k] = full[..cut].to_vec();
            tail[k].clear();
            if cut == 0 {
                fresh.push(k);
                continue;
            }
            let last = &route.visits[cut - 1];
            let node = node_of(frozen[k][cut - 1].0);
            // Went home already if nothing was planned after its last frozen stop.
            let going_home = cut == full.len() && last.departure <= now;
            if going_home {
                continue;
            }
            let used: f64 = frozen[k].iter().map(|&(i, _)| inst.customer(i).demand).sum();
            starts.push(RouteStart { vehicle: k, node, time: last.departure.max(now), capacity_left: fleet.capacity - used });
        }
        let known: Vec<usize> = (0..inst.len())
            .filter(|&i| inst.customer(i).reveal_time <= now)
            .filter(|i| !frozen.iter().flatten().any(|(j, _)| j == i))
            .collect();
        let problem = GaProblem {
            inst,
            customers: known,
            starts: starts.clone(),
            depart_at: now,
            fresh_limit: fresh.len(),
            cfg: GaConfig { seed: derive_seed(cfg.seed, epoch as u64), ..*cfg },
        };
        let mut rng = ChaCha8Rng::seed_from_u64(problem.cfg.seed);
        let run = problem.evolve(&mut rng);
        generations += run.generations;
        plans += 1;
        let mut fresh_iter = fresh.iter();
        for r in &run.best.routes {
            let k = match r.start {
                Some(s) => starts[s].vehicle,
                None => *fresh_iter.next().expect("fresh limit respected"),
            };
            tail[k] = r.seq.iter().map(|&i| (i, now)).collect();
        }
        if epoch > 0 {
            replan_time += t_run.elapsed().as_secs_f64();
        }
    }

    let full: Vec<Plan> = frozen.into_iter().zip(tail).map(|(f, t)| f.into_iter().chain(t).collect()).collect();
    Ok(GaOutcome {
        solution: assemble(inst, &full, started.elapsed().as_secs_f64()),
        generations,
        plans,
        replan_time_sec: replan_time,
    })
}

/// Travel time of the leg that ends at visit `v` of `plan`.
fn travel_into(inst: &Instance, plan: &Plan, v: &Visit) -> f64 {
    let pos = plan.iter().position(|&(i, _)| inst.customer(i).id == v.customer_id).expect("visit in plan");
    let prev = if pos == 0 { DEPOT } else { node_of(plan[pos - 1].0) };
    inst.travel_time(prev, node_of(plan[pos].0))
}
