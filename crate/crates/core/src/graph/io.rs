//! Text formats for DAGs and orders (1-based variable labels).
//!
//! DAG file:
//! ```text
//! d=4
//! 1,2
//! 2,4
//! ```
//! Order file: one line of comma-separated labels, roots first, e.g. `2,3,1,4`.

use std::fs;
use std::path::Path;

use super::{Dag, TopologicalOrder};
use crate::error::{Error, Result};

pub fn dag_to_string(dag: &Dag) -> String {
    let mut out = format!("d={}\n", dag.num_vars());
    for (j, i) in dag.edges() {
        out.push_str(&format!("{},{}\n", j + 1, i + 1));
    }
    out
}

pub fn parse_dag(text: &str) -> Result<Dag> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| Error::parse(1, "empty DAG file"))?;
    let d: usize = header
        .trim()
        .strip_prefix("d=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| {
            Error::parse(1, format!("expected header `d=<num_vars>`, got `{header}`"))
        })?;
    let mut edges = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut parts = line.split(',');
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(
                lineno,
                format!("expected `j,i`, got `{line}`"),
            ));
        };
        let parse_label = |s: &str| -> Result<usize> {
            match s.trim().parse::<usize>() {
                Ok(v) if (1..=d).contains(&v) => Ok(v - 1),
                _ => Err(Error::parse(
                    lineno,
                    format!("`{}` is not a variable label in 1..={d}", s.trim()),
                )),
            }
        };
        edges.push((parse_label(a)?, parse_label(b)?));
    }
    Dag::from_edges(d, &edges)
}

pub fn write_dag(path: impl AsRef<Path>, dag: &Dag) -> Result<()> {
    fs::write(path, dag_to_string(dag))?;
    Ok(())
}

pub fn read_dag(path: impl AsRef<Path>) -> Result<Dag> {
    parse_dag(&fs::read_to_string(path)?)
}

pub fn order_to_string(order: &TopologicalOrder) -> String {
    let labels: Vec<String> = order
        .as_slice()
        .iter()
        .map(|v| (v + 1).to_string())
        .collect();
    format!("{}\n", labels.join(","))
}

pub fn parse_order(text: &str) -> Result<TopologicalOrder> {
    let line = text.trim();
    if line.is_empty() {
        return Err(Error::parse(1, "empty order file"));
    }
    let perm = line
        .split(',')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Error::parse(
                1,
                format!("`{}` is not a variable label", s.trim()),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    TopologicalOrder::new(perm)
}

pub fn write_order(path: impl AsRef<Path>, order: &TopologicalOrder) -> Result<()> {
    fs::write(path, order_to_string(order))?;
    Ok(())
}

pub fn read_order(path: impl AsRef<Path>) -> Result<TopologicalOrder> {
    parse_order(&fs::read_to_string(path)?)
}
