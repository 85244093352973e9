#![allow(dead_code)]

pub mod lp;

use std::path::PathBuf;

use vrptw_core::instance_io::{apply_dynamicity, generate_training_instance, DynamicityConfig, GeneratorConfig};
use vrptw_core::Instance;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn solomon(name: &str) -> PathBuf {
    data_dir().join("solomon").join(format!("{name}.txt"))
}

/// Random instance of `n` customers and `k` vehicles, with `fraction` of them revealed late.
pub fn random_instance(n: usize, k: usize, seed: u64, fraction: f64) -> Instance {
    let inst = generate_training_instance(&GeneratorConfig { n_customers: n, n_vehicles: k, seed, ..Default::default() }).unwrap();
    if fraction > 0.0 {
        apply_dynamicity(&inst, &DynamicityConfig { fraction, seed: seed ^ 0x5eed }).unwrap()
    } else {
        inst
    }
}
