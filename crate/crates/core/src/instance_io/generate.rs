//! Random training instances and the dynamicity transform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::ContractError;
use crate::model::{node_of, Customer, FleetSpec, Instance, Location, DEPOT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub n_customers: usize,
    pub n_vehicles: usize,
    pub coord_range: (f64, f64),
    pub depot_range: (f64, f64),
    /// Rate of the exponential demand law (mean demand is its inverse).
    pub demand_rate: f64,
    pub capacity: f64,
    pub speed: f64,
    pub tw_start_range: (f64, f64),
    pub tw_width_mean: f64,
    pub tw_width_std: f64,
    pub tw_width_min: f64,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_customers: 20,
            n_vehicles: 4,
            coord_range: (-100.0, 100.0),
            depot_range: (-25.0, 25.0),
            demand_rate: 0.1,
            capacity: 200.0,
            speed: 10.0,
            tw_start_range: (0.0, 200.0),
            tw_width_mean: 35.0,
            tw_width_std: 5.0,
            tw_width_min: 1.0,
            seed: 0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ContractError> {
        let nonempty = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !nonempty(self.coord_range) || !nonempty(self.depot_range) || !nonempty(self.tw_start_range) {
            return Err(ContractError::Other("generator ranges must be finite and nonempty".into()));
        }
        if self.n_vehicles == 0 || !(self.capacity > 0.0) || !(self.speed > 0.0) {
            return Err(ContractError::Other("fleet must have positive count, capacity and speed".into()));
        }
        if !(self.demand_rate > 0.0) || !(self.tw_width_std >= 0.0) || !(self.tw_width_min > 0.0) {
            return Err(ContractError::Other("demand rate and window width bounds must be positive".into()));
        }
        Ok(())
    }
}

/// Draws one random instance. Identical configs (seed included) give identical instances.
pub fn generate_training_instance(cfg: &GeneratorConfig) -> Result<Instance, ContractError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let demand = Exp::new(cfg.demand_rate).map_err(|e| ContractError::Other(e.to_string()))?;
    let width = Normal::new(cfg.tw_width_mean, cfg.tw_width_std).map_err(|e| ContractError::Other(e.to_string()))?;

    let depot = Location::new(
        rng.gen_range(cfg.depot_range.0..cfg.depot_range.1),
        rng.gen_range(cfg.depot_range.0..cfg.depot_range.1),
    );
    let customers = (0..cfg.n_customers)
        .map(|i| {
            let loc = Location::new(
                rng.gen_range(cfg.coord_range.0..cfg.coord_range.1),
                rng.gen_range(cfg.coord_range.0..cfg.coord_range.1),
            );
            let demand = demand.sample(&mut rng);
            let tw_min = rng.gen_range(cfg.tw_start_range.0..cfg.tw_start_range.1);
            let w = width.sample(&mut rng).max(cfg.tw_width_min);
            Customer {
                id: i as u32 + 1,
                loc,
                demand,
                tw_min,
                tw_max: tw_min + w,
                service_duration: 0.0,
                reveal_time: 0.0,
            }
        })
        .collect();
    let fleet = FleetSpec { count: cfg.n_vehicles, capacity: cfg.capacity, speed: cfg.speed };
    Instance::new(format!("gen-{}", cfg.seed), depot, None, customers, fleet)
        .map_err(|e| ContractError::Other(e.to_string()))
}

/// SplitMix64 step, used to derive independent child seeds from one master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `count` instances drawn from `base` with seeds derived from `master_seed`.
pub fn training_set(base: &GeneratorConfig, count: usize, master_seed: u64) -> Result<Vec<Instance>, ContractError> {
    (0..count)
        .map(|i| {
            let cfg = GeneratorConfig { seed: derive_seed(master_seed, i as u64), ..base.clone() };
            generate_training_instance(&cfg).map(|inst| inst.with_name(format!("train-{i:02}")))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicityConfig {
    pub fraction: f64,
    pub seed: u64,
}

/// Hides `round(fraction * n)` uniformly chosen customers until a positive reveal time.
///
/// A hidden customer is revealed uniformly in `(0, tw_min - d(depot, i)/v]`, so a
/// vehicle leaving the depot at the reveal instant can still reach it before its
/// window opens. When that interval is empty the latest instant that still allows
/// reaching it before the window closes is used as the upper bound instead.
pub fn apply_dynamicity(inst: &Instance, cfg: &DynamicityConfig) -> Result<Instance, ContractError> {
    if !(0.0..=1.0).contains(&cfg.fraction) {
        return Err(ContractError::Other(format!("dynamicity fraction {} outside [0, 1]", cfg.fraction)));
    }
    if !inst.is_static() {
        return Err(ContractError::Other("dynamicity applies to static instances only".into()));
    }
    let n = inst.len();
    let k = (cfg.fraction * n as f64).round() as usize;
    if k == 0 {
        return Ok(inst.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut chosen = index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();

    let mut customers = inst.customers().to_vec();
    for idx in chosen {
        let c = &customers[idx];
        let travel = inst.travel_time(DEPOT, node_of(idx));
        let mut upper = c.tw_min - travel;
        if upper <= 0.0 {
            upper = c.tw_max - travel;
        }
        if upper <= 0.0 {
            upper = c.tw_max;
        }
        // 1 - U[0,1) lies in (0, 1], so the reveal time is strictly positive.
        let u: f64 = 1.0 - rng.gen::<f64>();
        customers[idx].reveal_time = u * upper;
    }
    inst.with_customers(customers).map_err(|e| ContractError::Other(e.to_string()))
}
