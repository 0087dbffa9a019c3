//! Built-in graph families: the two- and three-vertex fixtures plus paths,
//! cycles, complete graphs, hypercubes and birth-death chains.

use crate::graph::{Graph, GraphError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("unknown family {0:?}")]
    Unknown(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// A named graph family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// Three vertices with rates q(1,2)=2, q(2,1)=1, q(2,3)=5, q(3,2)=1.
    Remark,
    /// Three vertices with rates q(1,2)=eps, q(2,1)=4, q(2,3)=1, q(3,2)=4.
    GEps {
        eps: f64,
    },
    Path {
        size: usize,
        rate: f64,
    },
    Cycle {
        size: usize,
        rate: f64,
    },
    Complete {
        size: usize,
        rate: f64,
    },
    Hypercube {
        dim: usize,
        rate: f64,
    },
    /// Chain with constant up-rate and constant down-rate.
    BirthDeath {
        size: usize,
        up: f64,
        down: f64,
    },
}

fn check_rate(rate: f64, what: &str) -> Result<(), FamilyError> {
    if rate.is_finite() && rate > 0.0 {
        Ok(())
    } else {
        Err(FamilyError::InvalidParameter(format!(
            "{what} must be positive, got {rate}"
        )))
    }
}

fn check_size(size: usize, min: usize, what: &str) -> Result<(), FamilyError> {
    if size >= min {
        Ok(())
    } else {
        Err(FamilyError::InvalidParameter(format!(
            "{what} must be at least {min}, got {size}"
        )))
    }
}

pub fn generate(family: &Family) -> Result<Graph, FamilyError> {
    match *family {
        Family::Remark => {
            let vs = vec!["1".into(), "2".into(), "3".into()];
            let edges = vec![
                ("1".into(), "2".into(), 2.0),
                ("2".into(), "1".into(), 1.0),
                ("2".into(), "3".into(), 5.0),
                ("3".into(), "2".into(), 1.0),
            ];
            Ok(Graph::new(vs, edges)?)
        }
        Family::GEps { eps } => {
            check_rate(eps, "eps")?;
            let vs = vec!["1".into(), "2".into(), "3".into()];
            let edges = vec![
                ("1".into(), "2".into(), eps),
                ("2".into(), "1".into(), 4.0),
                ("2".into(), "3".into(), 1.0),
                ("3".into(), "2".into(), 4.0),
            ];
            Ok(Graph::new(vs, edges)?)
        }
        Family::Path { size, rate } => {
            check_size(size, 1, "size")?;
            check_rate(rate, "rate")?;
            let vs: Vec<String> = (0..size).map(|i| i.to_string()).collect();
            let mut edges = Vec::new();
            for i in 0..size.saturating_sub(1) {
                edges.push((i.to_string(), (i + 1).to_string(), rate));
                edges.push(((i + 1).to_string(), i.to_string(), rate));
            }
            Ok(Graph::new(vs, edges)?)
        }
        Family::Cycle { size, rate } => {
            check_size(size, 3, "size")?;
            check_rate(rate, "rate")?;
            let vs: Vec<String> = (0..size).map(|i| i.to_string()).collect();
            let mut edges = Vec::new();
            for i in 0..size {
                let j = (i + 1) % size;
                edges.push((i.to_string(), j.to_string(), rate));
                edges.push((j.to_string(), i.to_string(), rate));
            }
            Ok(Graph::new(vs, edges)?)
        }
        Family::Complete { size, rate } => {
            check_size(size, 1, "size")?;
            check_rate(rate, "rate")?;
            let vs: Vec<String> = (0..size).map(|i| i.to_string()).collect();
            let mut edges = Vec::new();
            for i in 0..size {
                for j in 0..size {
                    if i != j {
                        edges.push((i.to_string(), j.to_string(), rate));
                    }
                }
            }
            Ok(Graph::new(vs, edges)?)
        }
        Family::Hypercube { dim, rate } => {
            check_size(dim, 1, "dim")?;
            if dim > 16 {
                return Err(FamilyError::InvalidParameter(format!(
                    "dim must be at most 16, got {dim}"
                )));
            }
            check_rate(rate, "rate")?;
            let n = 1usize << dim;
            let label = |v: usize| format!("{v:0dim$b}");
            let vs: Vec<String> = (0..n).map(label).collect();
            let mut edges = Vec::new();
            for v in 0..n {
                for bit in 0..dim {
                    let w = v ^ (1 << bit);
                    edges.push((label(v), label(w), rate));
                }
            }
            Ok(Graph::new(vs, edges)?)
        }
        Family::BirthDeath { size, up, down } => {
            check_size(size, 1, "size")?;
            check_rate(up, "up rate")?;
            check_rate(down, "down rate")?;
            let vs: Vec<String> = (0..size).map(|i| i.to_string()).collect();
            let mut edges = Vec::new();
            for i in 0..size.saturating_sub(1) {
                edges.push((i.to_string(), (i + 1).to_string(), up));
                edges.push(((i + 1).to_string(), i.to_string(), down));
            }
            Ok(Graph::new(vs, edges)?)
        }
    }
}
