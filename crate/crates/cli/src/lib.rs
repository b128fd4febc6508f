//! Command-line front end: synthetic data generation, benchmark runs,
//! grid search and prediction.

pub mod commands;
pub mod config;
pub mod grid;
pub mod io;
pub mod runner;
