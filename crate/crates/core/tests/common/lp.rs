//! Reader and solver for the LP files the exporter writes, used to check the
//! exported model against the exact search.

use std::collections::{BTreeMap, BTreeSet};

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome};
use vrptw_core::exact::MilpCounts;

/// The subset of LP format the exporter writes: one objective, named rows,
/// double-sided bounds and a binaries list.
#[derive(Debug, Default)]
pub struct LpModel {
    objective: Vec<(f64, String)>,
    rows: Vec<(String, Vec<(f64, String)>, ComparisonOp, f64)>,
    bounds: BTreeMap<String, (f64, f64)>,
    binaries: BTreeSet<String>,
}

fn parse_terms(text: &str) -> Vec<(f64, String)> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    assert_eq!(toks.len() % 3, 0, "terms are sign, coefficient, variable: {text}");
    toks.chunks(3)
        .map(|t| {
            let c: f64 = t[1].parse().unwrap();
            match t[0] {
                "+" => (c, t[2].to_string()),
                "-" => (-c, t[2].to_string()),
                s => panic!("bad sign {s}"),
            }
        })
        .collect()
}

pub fn parse_lp(text: &str) -> LpModel {
    let mut m = LpModel::default();
    let mut section = "";
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('\\') {
            continue;
        }
        match line {
            "Minimize" | "Subject To" | "Bounds" | "Binaries" | "End" => {
                section = line;
                continue;
            }
            _ => {}
        }
        match section {
            "Minimize" => {
                let body = line.strip_prefix("obj:").unwrap();
                m.objective = parse_terms(body);
            }
            "Subject To" => {
                let (name, rest) = line.split_once(':').unwrap();
                let (op, sym) = [(ComparisonOp::Le, "<="), (ComparisonOp::Ge, ">="), (ComparisonOp::Eq, "=")]
                    .into_iter()
                    .find(|(_, s)| rest.contains(s))
                    .unwrap();
                let (lhs, rhs) = rest.split_once(sym).unwrap();
                m.rows.push((name.to_string(), parse_terms(lhs), op, rhs.trim().parse().unwrap()));
            }
            "Bounds" => {
                let parts: Vec<&str> = line.split("<=").map(str::trim).collect();
                assert_eq!(parts.len(), 3, "{line}");
                m.bounds.insert(parts[1].to_string(), (parts[0].parse().unwrap(), parts[2].parse().unwrap()));
            }
            "Binaries" => {
                m.binaries.insert(line.to_string());
            }
            other => panic!("text outside a section ({other:?}): {line}"),
        }
    }
    assert_eq!(section, "End");
    m
}

pub fn solve_lp(m: &LpModel) -> Option<f64> {
    let mut names: BTreeSet<&str> = m.objective.iter().map(|(_, v)| v.as_str()).collect();
    for (_, terms, _, _) in &m.rows {
        names.extend(terms.iter().map(|(_, v)| v.as_str()));
    }
    let obj: BTreeMap<&str, f64> = m.objective.iter().map(|(c, v)| (v.as_str(), *c)).collect();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut vars = BTreeMap::new();
    for name in names {
        let c = obj.get(name).copied().unwrap_or(0.0);
        let var = if m.binaries.contains(name) {
            p.add_binary_var(c)
        } else {
            let (lo, hi) = m.bounds.get(name).copied().unwrap_or((0.0, f64::INFINITY));
            p.add_var(c, (lo, hi))
        };
        vars.insert(name, var);
    }
    for (_, terms, op, rhs) in &m.rows {
        let mut e = LinearExpr::empty();
        for (c, v) in terms {
            e.add(vars[v.as_str()], *c);
        }
        p.add_constraint(e, *op, *rhs);
    }
    match p.solve() {
        Ok(SolveOutcome::Solution(s)) => Some(s.objective()),
        Ok(SolveOutcome::Interrupted(_)) => panic!("solver interrupted"),
        Err(microlp::Error::Infeasible) => None,
        Err(e) => panic!("{e:?}"),
    }
}

pub fn counts_of(m: &LpModel) -> MilpCounts {
    let continuous = m.bounds.keys().filter(|v| !m.binaries.contains(*v)).count();
    MilpCounts { binaries: m.binaries.len(), continuous, constraints: m.rows.len() }
}
