//! Reader for the Solomon / Gehring–Homberger text layout.
//!
//! ```text
//! C101
//!
//! VEHICLE
//! NUMBER     CAPACITY
//!   25         200
//!
//! CUSTOMER
//! CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE   TIME
//!     0      40         50          0          0       1236          0
//!     1      45         68         10        912        967         90
//! ```
//!
//! Row 0 is the depot; its due date becomes the depot due date. Vehicles
//! travel one distance unit per time unit.

use std::path::Path;

use crate::error::FormatError;
use crate::model::{Customer, FleetSpec, Instance, Location};

const ROW_FIELDS: usize = 7;

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>, FormatError> {
    line.split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| FormatError::parse(lineno, format!("non-numeric cell `{tok}`"))))
        .collect()
}

fn is_numeric_row(line: &str) -> bool {
    line.split_whitespace().next().is_some_and(|t| t.parse::<f64>().is_ok())
}

/// Parses a Solomon-layout instance. `first_n` keeps only the first `n`
/// customer rows (the 25- and 50-customer sets are such prefixes).
pub fn parse_solomon(text: &str, first_n: Option<usize>) -> Result<Instance, FormatError> {
    let lines: Vec<(usize, &str)> = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).collect();
    let mut iter = lines.iter().filter(|(_, l)| !l.is_empty());

    let (_, name) = iter.next().ok_or_else(|| FormatError::parse(1, "empty input"))?;
    let name = name.to_string();

    let mut fleet: Option<(usize, f64)> = None;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut in_customers = false;
    let mut last_line = 1;
    for &(lineno, line) in iter {
        last_line = lineno;
        let upper = line.to_ascii_uppercase();
        if upper.starts_with("VEHICLE") || upper.starts_with("NUMBER") || upper.starts_with("CUST") {
            if upper.starts_with("CUSTOMER") {
                in_customers = true;
            }
            continue;
        }
        if !is_numeric_row(line) {
            return Err(FormatError::parse(lineno, format!("unexpected line `{line}`")));
        }
        let vals = numbers(line, lineno)?;
        if !in_customers {
            if fleet.is_some() {
                return Err(FormatError::parse(lineno, "numeric row before CUSTOMER section"));
            }
            if vals.len() != 2 {
                return Err(FormatError::parse(lineno, "vehicle header needs NUMBER and CAPACITY"));
            }
            if vals[0] < 1.0 || vals[0].fract() != 0.0 {
                return Err(FormatError::parse(lineno, "vehicle count must be a positive integer"));
            }
            fleet = Some((vals[0] as usize, vals[1]));
        } else {
            if vals.len() != ROW_FIELDS {
                return Err(FormatError::parse(
                    lineno,
                    format!("expected {ROW_FIELDS} columns (id, x, y, demand, ready, due, service), got {}", vals.len()),
                ));
            }
            rows.push((lineno, vals));
        }
    }

    let (count, capacity) = fleet.ok_or_else(|| FormatError::parse(last_line, "missing vehicle header"))?;
    let (_, depot) = rows.first().ok_or_else(|| FormatError::parse(last_line, "missing depot row"))?;
    let available = rows.len() - 1;
    let take = match first_n {
        Some(n) if n > available => {
            return Err(FormatError::parse(last_line, format!("requested {n} customers but file has {available}")));
        }
        Some(n) => n,
        None => available,
    };

    let mut customers = Vec::with_capacity(take);
    for (lineno, r) in &rows[1..=take] {
        if r[0] < 0.0 || r[0].fract() != 0.0 || r[0] > u32::MAX as f64 {
            return Err(FormatError::parse(*lineno, "customer id must be a nonnegative integer"));
        }
        if r[4] >= r[5] {
            return Err(FormatError::parse(*lineno, "ready time must precede due date"));
        }
        customers.push(Customer {
            id: r[0] as u32,
            loc: Location::new(r[1], r[2]),
            demand: r[3],
            tw_min: r[4],
            tw_max: r[5],
            service_duration: r[6],
            reveal_time: 0.0,
        });
    }
    let fleet = FleetSpec { count, capacity, speed: 1.0 };
    Ok(Instance::new(name, Location::new(depot[1], depot[2]), Some(depot[5]), customers, fleet)?)
}

pub fn read_solomon(path: &Path, first_n: Option<usize>) -> Result<Instance, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_solomon(&text, first_n)
}
