//! Decomposition of collaborative signal temporal logic (STL) tasks for
//! multi-agent systems whose communication graph is sparser than their task
//! graph.
//!
//! A global specification assigns temporal tasks (`always` / `eventually`
//! over an interval) to pairs of agents through relative-state predicates.
//! When a tasked pair cannot communicate directly, the task is decomposed
//! along a shortest communication path into one parametric hyper-rectangle
//! sub-task per hop. The free parameters (rectangle centers and edge
//! lengths) are chosen by a convex program that maximizes rectangle volumes
//! subject to:
//!
//! * inclusion of the Minkowski sum of the path rectangles in the original
//!   predicate's superlevel set, enforced at rectangle vertices, and
//! * nesting / separation constraints that rule out conflicts between tasks
//!   sharing an edge or closing a cycle in the rewritten task graph.
//!
//! The crate also ships a trajectory synthesizer and robustness monitor so
//! the implication "rewritten spec satisfied => original spec satisfied"
//! can be checked on sampled trajectories, plus a scenario file format and
//! a command line front end (`stl-decomp`).

// Coordinate loops index several parallel arrays, and validation guards use
// `!(x > 0.0)` to reject NaN alongside out-of-range values.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod conflict;
pub mod decompose;
pub mod geometry;
pub mod graph;
pub mod program;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod stl;
pub mod synthesis;

pub(crate) mod linalg;

pub use conflict::{ConflictKind, ConflictRecord};
pub use decompose::{decompose, DecomposeOptions, DecompositionResult};
pub use geometry::{HyperRect, Predicate};
pub use graph::UndirectedGraph;
pub use scenario::Scenario;
pub use solver::{SolveStatus, SolverParams};
pub use stl::{AtomicTask, GlobalSpec, TaskFormula, Trajectory};
