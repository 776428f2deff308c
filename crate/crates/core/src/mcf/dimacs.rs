//! DIMACS min-cost flow text format.
//!
//! ```text
//! c comment
//! p min <nodes> <arcs>
//! n <id> <supply>
//! a <tail> <head> <low> <cap> <cost>
//! ```
//!
//! Node ids are 1-based. `supply` is outflow minus inflow, the negation of the
//! demand used in-process. Lower bounds must be zero.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::Zero;
use thiserror::Error;

use super::{McfArc, McfInstance};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DimacsError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing problem line")]
    MissingProblemLine,
    #[error("declared {declared} arcs, found {found}")]
    ArcCount { declared: usize, found: usize },
}

pub fn write_dimacs(inst: &McfInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p min {} {}", inst.node_count, inst.arcs.len());
    for (u, d) in inst.demand.iter().enumerate() {
        if !d.is_zero() {
            let _ = writeln!(out, "n {} {}", u + 1, -d);
        }
    }
    for arc in &inst.arcs {
        let _ = writeln!(
            out,
            "a {} {} 0 {} {}",
            arc.tail + 1,
            arc.head + 1,
            arc.capacity,
            arc.cost
        );
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<McfInstance, DimacsError> {
    let mut inst: Option<McfInstance> = None;
    let mut declared = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: &str| DimacsError::Syntax {
            line,
            message: message.to_string(),
        };
        let fields: Vec<&str> = raw.split_whitespace().collect();
        match fields.first().copied() {
            None | Some("c") => continue,
            Some("p") => {
                if fields.len() != 4 || fields[1] != "min" {
                    return Err(err("expected `p min <nodes> <arcs>`"));
                }
                let nodes: usize = fields[2].parse().map_err(|_| err("bad node count"))?;
                declared = fields[3].parse().map_err(|_| err("bad arc count"))?;
                inst = Some(McfInstance {
                    node_count: nodes,
                    arcs: Vec::with_capacity(declared),
                    demand: vec![BigInt::zero(); nodes],
                });
            }
            Some("n") => {
                let inst = inst.as_mut().ok_or(DimacsError::MissingProblemLine)?;
                if fields.len() != 3 {
                    return Err(err("expected `n <id> <supply>`"));
                }
                let id = node_id(fields[1], inst.node_count).ok_or_else(|| err("bad node id"))?;
                let supply: BigInt = fields[2].parse().map_err(|_| err("bad supply"))?;
                inst.demand[id] = -supply;
            }
            Some("a") => {
                let inst = inst.as_mut().ok_or(DimacsError::MissingProblemLine)?;
                if fields.len() != 6 {
                    return Err(err("expected `a <tail> <head> <low> <cap> <cost>`"));
                }
                let tail = node_id(fields[1], inst.node_count).ok_or_else(|| err("bad tail"))?;
                let head = node_id(fields[2], inst.node_count).ok_or_else(|| err("bad head"))?;
                let low: BigInt = fields[3].parse().map_err(|_| err("bad lower bound"))?;
                if !low.is_zero() {
                    return Err(err("nonzero lower bounds are not supported"));
                }
                inst.arcs.push(McfArc {
                    tail,
                    head,
                    capacity: fields[4].parse().map_err(|_| err("bad capacity"))?,
                    cost: fields[5].parse().map_err(|_| err("bad cost"))?,
                });
            }
            Some(other) => return Err(err(&format!("unknown line type `{other}`"))),
        }
    }
    let inst = inst.ok_or(DimacsError::MissingProblemLine)?;
    if inst.arcs.len() != declared {
        return Err(DimacsError::ArcCount {
            declared,
            found: inst.arcs.len(),
        });
    }
    Ok(inst)
}

fn node_id(field: &str, n: usize) -> Option<usize> {
    let id: usize = field.parse().ok()?;
    (1..=n).contains(&id).then(|| id - 1)
}
