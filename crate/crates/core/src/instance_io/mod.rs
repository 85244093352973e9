//! Benchmark readers, random instance generation and the native file formats.

mod generate;
mod native;
mod solomon;

pub use generate::{
    apply_dynamicity, derive_seed, generate_training_instance, training_set, DynamicityConfig, GeneratorConfig,
};
pub use native::{
    instance_from_str, instance_to_string, read_any_instance, read_instance_native, read_solution,
    solution_from_str, solution_to_string, write_instance, write_solution, INSTANCE_FORMAT, NATIVE_VERSION,
    SOLUTION_FORMAT,
};
pub use solomon::{parse_solomon, read_solomon};
