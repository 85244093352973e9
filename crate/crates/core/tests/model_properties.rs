mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use vrptw_core::model::node_of;
use vrptw_core::{distance, route_metrics, validate_solution, Constraint, Customer, FleetSpec, Instance, Location, Route, Solution};

fn cust(id: u32, x: f64, y: f64) -> Customer {
    Customer { id, loc: Location::new(x, y), demand: 1.0, tw_min: 0.0, tw_max: 1e6, service_duration: 0.0, reveal_time: 0.0 }
}

#[test]
fn map_diagonal_distance() {
    let d = distance(Location::new(-100.0, -100.0), Location::new(100.0, 100.0));
    assert!((d - 282.8427).abs() < 1e-4);
}

#[test]
fn two_customer_leg_sum() {
    let inst = Instance::new("t", Location::new(0.0, 0.0), None, vec![cust(1, 3.0, 4.0), cust(2, 3.0, 0.0)], FleetSpec {
        count: 1,
        capacity: 10.0,
        speed: 1.0,
    })
    .unwrap();
    let r = Route::schedule(&inst, 0, &[0, 1], 0.0);
    assert_eq!(route_metrics(&inst, &r).distance, 12.0);
    assert_eq!(r.distance, 12.0);
}

/// Leg sum written out from coordinates, independent of the instance's distance cache.
fn leg_sum(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| ((w[1].0 - w[0].0).powi(2) + (w[1].1 - w[0].1).powi(2)).sqrt()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn triangle_inequality(a in (-1e3..1e3f64, -1e3..1e3f64), b in (-1e3..1e3f64, -1e3..1e3f64), c in (-1e3..1e3f64, -1e3..1e3f64)) {
        let (a, b, c) = (Location::new(a.0, a.1), Location::new(b.0, b.1), Location::new(c.0, c.1));
        prop_assert!(distance(a, c) <= distance(a, b) + distance(b, c) + 1e-9);
        prop_assert_eq!(distance(a, b), distance(b, a));
    }

    #[test]
    fn permuted_route_distance_is_leg_sum(pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 1..9), seed in any::<u64>()) {
        let cs: Vec<Customer> = pts.iter().enumerate().map(|(i, p)| cust(i as u32 + 1, p.0, p.1)).collect();
        let inst = Instance::new("p", Location::new(0.0, 0.0), None, cs, FleetSpec { count: 1, capacity: 100.0, speed: 1.0 }).unwrap();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let r = Route::schedule(&inst, 0, &order, 0.0);
        let mut path = vec![(0.0, 0.0)];
        path.extend(order.iter().map(|&i| pts[i]));
        path.push((0.0, 0.0));
        prop_assert!((r.distance - leg_sum(&path)).abs() < 1e-9);
        prop_assert!(validate_solution(&inst, &Solution::from_routes(&inst, vec![r], BTreeSet::new(), 0.0)).unwrap().is_valid());
    }

    /// Breaking one field of a valid route is always caught, under the right label.
    #[test]
    fn corrupted_routes_are_caught(seed in 0u64..500, which in 0usize..4) {
        let inst = common::random_instance(8, 8, seed, 0.0);
        let routes: Vec<Route> = (0..inst.len()).map(|i| Route::schedule(&inst, i, &[i], (inst.customer(i).tw_min - inst.travel_time(0, node_of(i))).max(0.0))).collect();
        let good = Solution::from_routes(&inst, routes, BTreeSet::new(), 0.0);
        prop_assume!(validate_solution(&inst, &good).unwrap().is_valid());
        let mut bad = good.clone();
        let expected = match which {
            0 => {
                let c = inst.customer(0);
                let v = &mut bad.routes[0].visits[0];
                v.arrival = c.tw_max + 1.0;
                v.service_start = v.arrival;
                v.departure = v.arrival;
                Constraint::TimeWindow
            }
            1 => {
                let dup = bad.routes[1].visits[0];
                bad.routes[0].visits.push(dup);
                Constraint::Uniqueness
            }
            2 => {
                bad.routes[0].load = inst.fleet().capacity + 1.0;
                Constraint::Capacity
            }
            _ => {
                bad.total_distance += 1.0;
                Constraint::Metrics
            }
        };
        let report = validate_solution(&inst, &bad).unwrap();
        prop_assert!(report.cites(expected), "{:?}", report.violations);
    }
}

#[test]
fn overload_cites_capacity() {
    let mut c = cust(1, 3.0, 4.0);
    c.demand = 11.0;
    let inst = Instance::new("o", Location::new(0.0, 0.0), None, vec![c], FleetSpec { count: 1, capacity: 10.0, speed: 1.0 }).unwrap();
    let sol = Solution::from_routes(&inst, vec![Route::schedule(&inst, 0, &[0], 0.0)], BTreeSet::new(), 0.0);
    assert!(validate_solution(&inst, &sol).unwrap().cites(Constraint::Capacity));
}
