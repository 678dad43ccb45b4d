//! Class message diagrams for object-oriented integration and regression
//! testing.
//!
//! The pipeline mirrors one development increment: parse two versions of a
//! [`model::ProgramModel`], build their [`cmd::ClassMessageDiagram`]s,
//! identify changes, compute the impact set, derive a (re-)test order, select
//! and prioritize stored tests, and measure interaction coverage of traces.

pub mod change;
pub mod cli;
pub mod cmd;
pub mod coverage;
pub mod dsl;
pub mod graph;
pub mod model;
pub mod regression;
pub mod stats;
pub mod strategy;
