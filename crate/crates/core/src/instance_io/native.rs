//! Native JSON files for instances and solutions.
//!
//! Both kinds of file are a single object with a `format` tag, a `version`
//! and a payload (`instance` or `solution`); the payload keys mirror the
//! Rust field names one to one. See the README for the full key list.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;
use crate::model::{Instance, Solution};

pub const INSTANCE_FORMAT: &str = "vrptw-instance";
pub const SOLUTION_FORMAT: &str = "vrptw-solution";
pub const NATIVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    format: String,
    version: u32,
    instance: Instance,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionFile {
    format: String,
    version: u32,
    instance_name: String,
    solution: Solution,
}

fn decode<T: DeserializeOwned>(text: &str) -> Result<T, FormatError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        FormatError::Schema { path, message: inner.to_string() }
    })
}

fn check_header(format: &str, expected: &str, version: u32) -> Result<(), FormatError> {
    if format != expected {
        return Err(FormatError::Schema { path: "format".into(), message: format!("expected `{expected}`, found `{format}`") });
    }
    if version != NATIVE_VERSION {
        return Err(FormatError::Schema {
            path: "version".into(),
            message: format!("unsupported version {version} (expected {NATIVE_VERSION})"),
        });
    }
    Ok(())
}

pub fn instance_to_string(inst: &Instance) -> String {
    let file = InstanceFile { format: INSTANCE_FORMAT.into(), version: NATIVE_VERSION, instance: inst.clone() };
    serde_json::to_string_pretty(&file).expect("instance serializes")
}

pub fn instance_from_str(text: &str) -> Result<Instance, FormatError> {
    let file: InstanceFile = decode(text)?;
    check_header(&file.format, INSTANCE_FORMAT, file.version)?;
    Ok(file.instance)
}

pub fn solution_to_string(instance_name: &str, sol: &Solution) -> String {
    let file = SolutionFile {
        format: SOLUTION_FORMAT.into(),
        version: NATIVE_VERSION,
        instance_name: instance_name.into(),
        solution: sol.clone(),
    };
    serde_json::to_string_pretty(&file).expect("solution serializes")
}

/// Returns the instance name recorded in the file together with the solution.
pub fn solution_from_str(text: &str) -> Result<(String, Solution), FormatError> {
    let file: SolutionFile = decode(text)?;
    check_header(&file.format, SOLUTION_FORMAT, file.version)?;
    Ok((file.instance_name, file.solution))
}

pub fn write_instance(path: &Path, inst: &Instance) -> Result<(), FormatError> {
    fs::write(path, instance_to_string(inst)).map_err(|e| FormatError::io(path, e))
}

pub fn read_instance_native(path: &Path) -> Result<Instance, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    instance_from_str(&text)
}

pub fn write_solution(path: &Path, instance_name: &str, sol: &Solution) -> Result<(), FormatError> {
    fs::write(path, solution_to_string(instance_name, sol)).map_err(|e| FormatError::io(path, e))
}

pub fn read_solution(path: &Path) -> Result<(String, Solution), FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    solution_from_str(&text)
}

/// Reads an instance from either the native format or the Solomon text layout,
/// deciding by content.
pub fn read_any_instance(path: &Path, first_n: Option<usize>) -> Result<Instance, FormatError> {
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    if text.trim_start().starts_with('{') {
        let inst = instance_from_str(&text)?;
        match first_n {
            Some(n) if n > inst.len() => Err(FormatError::Schema {
                path: "instance.customers".into(),
                message: format!("requested {n} customers but file has {}", inst.len()),
            }),
            Some(n) => Ok(inst.with_customers(inst.customers()[..n].to_vec())?),
            None => Ok(inst),
        }
    } else {
        super::parse_solomon(&text, first_n)
    }
}
