//! Experiment runner library behind the `patchspec` binary: configuration,
//! experiment dispatch, and the CSV / gnuplot / Matrix Market writers.

pub mod config;
pub mod csvio;
pub mod experiments;
pub mod gnuplot;
pub mod mtx;
pub mod registry;
