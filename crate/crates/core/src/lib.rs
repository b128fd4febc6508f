//! Joint nonnegative matrix factorization of several data views sharing a
//! basis matrix, with network constraints on the coefficient matrices and
//! four alternating block solvers.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod model;
pub mod objective;
pub mod predict;
pub mod solvers;
pub mod synthgen;

pub use error::{JmfError, Result};
pub use model::{
    init_factors, Algorithm, ConstraintSet, Factorization, Hyperparameters, MultiViewDataset, PanlsParams, PgParams,
    Problem, SolverConfig, SolverReport, StopRule, Termination, TraceEntry,
};
pub use solvers::{solve, Solver};
