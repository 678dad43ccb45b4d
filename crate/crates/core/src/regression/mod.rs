//! Stored traces and regression test selection.

mod select;
mod trace;

pub use select::{prioritize, select_tests, SelectionGranularity, SelectionResult, StaleStore};
pub use trace::{
    parse_index, CallFrame, IndexEntry, TestRecord, TraceCall, TraceStore, DEFAULT_CRITICALITY,
};
