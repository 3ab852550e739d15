//! Solvers and diagnostics for hierarchical hemi-variational inequalities.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod combined;
pub mod config;
pub mod error;
pub mod gap;
pub mod harness;
pub mod linalg;
pub mod operator;
pub mod output;
pub mod par;
pub mod problem;
pub mod problems;
pub mod prox;
pub mod report;
pub mod schedule;
pub mod solver;

pub use combined::{CombinedData, OperatorPair};
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use operator::OperatorSpec;
pub use problem::{HierarchicalProblem, LowerSet};
pub use prox::{ProxTerm, ScalarTerm};
