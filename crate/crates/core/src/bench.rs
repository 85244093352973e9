//! Batch runs over benchmark instances and their reports: per-instance
//! rows, per-class means, and ratio plot data against a best-known table.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::agent::{solve, Mode};
use crate::error::{ContractError, FormatError};
use crate::ga::{run_ga, run_ga_dynamic, GaConfig};
use crate::instance_io::{apply_dynamicity, derive_seed, DynamicityConfig};
use crate::model::{validate_solution, Instance, Solution};
use crate::valuenet::Network;

/// Default grouping: Solomon and Gehring-Homberger names such as `RC104` or `C1_2_1`.
pub const DEFAULT_GROUP_PATTERN: &str = r"^(?P<class>RC|C|R)(?P<type>[12])";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rl,
    Ga,
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Rl => "rl",
            Algorithm::Ga => "ga",
        })
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rl" => Ok(Algorithm::Rl),
            "ga" => Ok(Algorithm::Ga),
            other => Err(format!("unknown algorithm `{other}` (expected rl or ga)")),
        }
    }
}

/// Extracts `(type, class)` from instance names with a regex that has
/// named groups `type` and `class`.
#[derive(Debug, Clone)]
pub struct Grouping {
    re: Regex,
}

impl Grouping {
    pub fn new(pattern: &str) -> Result<Self, ContractError> {
        let re = Regex::new(pattern).map_err(|e| ContractError::Other(format!("grouping pattern: {e}")))?;
        let names: Vec<&str> = re.capture_names().flatten().collect();
        if !names.contains(&"type") || !names.contains(&"class") {
            return Err(ContractError::Other("grouping pattern needs named groups `type` and `class`".into()));
        }
        Ok(Self { re })
    }

    pub fn classify(&self, name: &str) -> Option<(String, String)> {
        let caps = self.re.captures(name)?;
        Some((caps["type"].to_string(), caps["class"].to_string()))
    }
}

impl Default for Grouping {
    fn default() -> Self {
        Self::new(DEFAULT_GROUP_PATTERN).expect("default pattern is valid")
    }
}

/// One run of one algorithm on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub instance: String,
    #[serde(rename = "type")]
    pub kind: String,
    pub customers: usize,
    pub class: String,
    pub algorithm: Algorithm,
    pub dynamicity: f64,
    pub repetition: usize,
    pub vehicles: usize,
    pub distance: f64,
    /// Seconds, rounded to hundredths.
    pub wall_time_sec: f64,
    pub fulfilment: f64,
    pub valid: bool,
}

/// Means over every result of one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dynamicity: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub customers: usize,
    pub class: String,
    pub algorithm: Algorithm,
    /// Number of results averaged (instances times repetitions).
    pub instances: usize,
    pub mean_vehicles: f64,
    pub mean_distance: f64,
    pub mean_wall_time_sec: f64,
    pub mean_fulfilment: f64,
}

pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Groups by (dynamicity, type, customers, class, algorithm), in that order.
pub fn aggregate(results: &[InstanceResult]) -> Vec<BenchRow> {
    let mut groups: BTreeMap<(u64, String, usize, String, Algorithm), Vec<&InstanceResult>> = BTreeMap::new();
    for r in results {
        groups
            .entry((r.dynamicity.to_bits(), r.kind.clone(), r.customers, r.class.clone(), r.algorithm))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((dyn_bits, kind, customers, class, algorithm), rs)| {
            let n = rs.len() as f64;
            let mean = |f: fn(&InstanceResult) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
            BenchRow {
                dynamicity: f64::from_bits(dyn_bits),
                kind,
                customers,
                class,
                algorithm,
                instances: rs.len(),
                mean_vehicles: mean(|r| r.vehicles as f64),
                mean_distance: mean(|r| r.distance),
                mean_wall_time_sec: round2(mean(|r| r.wall_time_sec)),
                mean_fulfilment: mean(|r| r.fulfilment),
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<(), FormatError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| FormatError::Csv(e.into()))?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>, R: Read>(input: R) -> Result<Vec<T>, FormatError> {
    let mut rd = csv::Reader::from_reader(input);
    rd.deserialize().map(|r| r.map_err(FormatError::from)).collect()
}

/// Per-class reference means, as in `data/best_known.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestKnown {
    #[serde(rename = "type")]
    pub kind: String,
    pub customers: usize,
    pub class: String,
    pub vehicles: f64,
    pub distance: f64,
}

/// One point of a ratio scatter: relative distance against relative vehicle count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub algorithm: Algorithm,
    pub dynamicity: f64,
    #[serde(rename = "type")]
    pub kind: String,
    pub customers: usize,
    pub class: String,
    pub x: f64,
    pub y: f64,
}

/// Rows without a matching reference are skipped.
pub fn ratio_points(rows: &[BenchRow], best: &[BestKnown]) -> Vec<RatioPoint> {
    rows.iter()
        .filter_map(|r| {
            let b = best.iter().find(|b| b.kind == r.kind && b.customers == r.customers && b.class == r.class)?;
            Some(RatioPoint {
                algorithm: r.algorithm,
                dynamicity: r.dynamicity,
                kind: r.kind.clone(),
                customers: r.customers,
                class: r.class.clone(),
                x: r.mean_distance / b.distance,
                y: r.mean_vehicles / b.vehicles,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub epochs: usize,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

/// Nearest-rank percentiles of per-epoch wall times.
pub fn latency_summary(latencies: &[f64]) -> LatencySummary {
    if latencies.is_empty() {
        return LatencySummary { epochs: 0, p50: 0.0, p90: 0.0, p99: 0.0, max: 0.0 };
    }
    let mut v = latencies.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = |p: f64| v[((p * v.len() as f64).ceil() as usize).clamp(1, v.len()) - 1];
    LatencySummary { epochs: v.len(), p50: rank(0.5), p90: rank(0.9), p99: rank(0.99), max: v[v.len() - 1] }
}

/// What to run in a batch.
#[derive(Debug, Clone)]
pub struct BenchSpec<'a> {
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    /// Fraction of customers revealed late; 0 runs the static problem.
    pub dynamicity: f64,
    pub reveal_seed: u64,
    pub net: Option<&'a Network>,
    pub ga: GaConfig,
    pub grouping: Grouping,
    /// Report zero wall times, for byte-stable output.
    pub no_timing: bool,
}

/// Runs one algorithm once; the GA seed is derived from the repetition.
pub fn run_one(inst: &Instance, alg: Algorithm, spec: &BenchSpec<'_>, repetition: usize) -> Result<Solution, ContractError> {
    let dynamic = spec.dynamicity > 0.0;
    let inst = if dynamic {
        apply_dynamicity(inst, &DynamicityConfig { fraction: spec.dynamicity, seed: spec.reveal_seed })?
    } else {
        inst.clone()
    };
    match alg {
        Algorithm::Rl => {
            let net = spec.net.ok_or_else(|| ContractError::Other("rl runs need a trained network".into()))?;
            let started = Instant::now();
            let mut sol = solve(&inst, net, if dynamic { Mode::Dynamic } else { Mode::Static }).solution;
            sol.wall_time_sec = started.elapsed().as_secs_f64();
            Ok(sol)
        }
        Algorithm::Ga => {
            let cfg = GaConfig { seed: derive_seed(spec.ga.seed, repetition as u64), ..spec.ga };
            let out = if dynamic { run_ga_dynamic(&inst, &cfg)? } else { run_ga(&inst, &cfg)? };
            Ok(out.solution)
        }
    }
}

/// Every algorithm on every instance, instances in name order.
pub fn run_bench(instances: &[Instance], spec: &BenchSpec<'_>) -> Result<Vec<InstanceResult>, ContractError> {
    if instances.is_empty() {
        return Err(ContractError::Other("no instances to benchmark".into()));
    }
    if spec.repetitions == 0 || spec.algorithms.is_empty() {
        return Err(ContractError::Other("need at least one algorithm and one repetition".into()));
    }
    let mut order: Vec<&Instance> = instances.iter().collect();
    order.sort_by(|a, b| a.name().cmp(b.name()));
    let mut out = Vec::new();
    for inst in order {
        let (kind, class) = spec
            .grouping
            .classify(inst.name())
            .ok_or_else(|| ContractError::Other(format!("instance name `{}` does not match the grouping pattern", inst.name())))?;
        for &alg in &spec.algorithms {
            for rep in 0..spec.repetitions {
                let sol = run_one(inst, alg, spec, rep)?;
                let valid = validate_solution(inst, &sol).map(|r| r.is_valid()).unwrap_or(false);
                out.push(InstanceResult {
                    instance: inst.name().to_string(),
                    kind: kind.clone(),
                    customers: inst.len(),
                    class: class.clone(),
                    algorithm: alg,
                    dynamicity: spec.dynamicity,
                    repetition: rep,
                    vehicles: sol.vehicles_used,
                    distance: sol.total_distance,
                    wall_time_sec: if spec.no_timing { 0.0 } else { round2(sol.wall_time_sec) },
                    fulfilment: sol.fulfilment,
                    valid,
                });
            }
        }
    }
    Ok(out)
}
