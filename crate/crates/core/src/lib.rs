//! Bakry-Emery calculus on finite weighted graphs.
//!
//! The crate provides the graph Laplacian and the iterated carré du champ
//! operators, per-vertex optimal curvature-dimension bounds CD(K,n), the heat
//! semigroup and the nonlinear flow solving `du/dt = Δu + Γu`, and numerical
//! verdicts for the gradient-decay, comparison, Li-Yau, Harnack, Hamilton and
//! volume-doubling inequalities that hold under nonnegative curvature.
//!
//! All operations are pure functions on immutable inputs. With the default
//! `parallel` feature, per-vertex and per-instance loops run on rayon; without
//! it the same code runs sequentially.

#![forbid(unsafe_code)]

pub mod calculus;
pub mod curvature;
pub mod evolution;
mod exec;
pub mod families;
pub mod graph;
pub mod theorems;

pub use calculus::{gamma, gamma2, gamma_bilinear, laplacian, local_forms, VertexFunction};
pub use curvature::{cd_check, curvature_at, curvature_function, Dimension, KBound};
pub use evolution::{flow_trace, heat_semigroup, nonlinear_flow, FlowStatus, SolverConfig};
pub use graph::{measure_volume, reversible_measure, Graph, GraphConstants, Measure};
