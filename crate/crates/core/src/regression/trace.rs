//! Stored per-test execution traces.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::model::MethodRef;

pub const DEFAULT_CRITICALITY: u8 = 3;

/// One method activation and the activations it caused. Equality ignores
/// `line`.
#[derive(Debug, Clone, Eq)]
pub struct CallFrame {
    pub method: MethodRef,
    /// Call site of the caller that produced this activation, when recorded.
    pub site: Option<u32>,
    /// Line of the `enter` event in the trace file.
    pub line: usize,
    pub children: Vec<CallFrame>,
}

impl PartialEq for CallFrame {
    fn eq(&self, other: &Self) -> bool {
        self.method == other.method && self.site == other.site && self.children == other.children
    }
}

/// A call reconstructed from two nested frames.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TraceCall {
    pub caller: MethodRef,
    pub site: Option<u32>,
    pub callee: MethodRef,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestRecord {
    pub test_id: String,
    pub spec_tag: Option<String>,
    /// 1 (low) to 5 (high).
    pub criticality: u8,
    pub roots: Vec<CallFrame>,
}

impl TestRecord {
    pub fn new(test_id: impl Into<String>) -> Self {
        Self {
            test_id: test_id.into(),
            spec_tag: None,
            criticality: DEFAULT_CRITICALITY,
            roots: Vec::new(),
        }
    }

    /// Every method entered anywhere in the trace.
    pub fn touched_methods(&self) -> BTreeSet<MethodRef> {
        let mut out = BTreeSet::new();
        self.walk(|frame, _| {
            out.insert(frame.method.clone());
        });
        out
    }

    /// Maximum nesting depth; a trace with only root activations has depth 1.
    pub fn trace_depth(&self) -> usize {
        let mut depth = 0;
        self.walk(|_, d| depth = depth.max(d));
        depth
    }

    /// Calls in the order their `enter` events occur.
    pub fn calls(&self) -> Vec<TraceCall> {
        let mut out = Vec::new();
        fn visit(frame: &CallFrame, out: &mut Vec<TraceCall>) {
            for child in &frame.children {
                out.push(TraceCall {
                    caller: frame.method.clone(),
                    site: child.site,
                    callee: child.method.clone(),
                });
                visit(child, out);
            }
        }
        for root in &self.roots {
            visit(root, &mut out);
        }
        out
    }

    /// Pre-order visit of every frame with its 1-based depth.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&'a CallFrame, usize)) {
        let mut stack: Vec<(&CallFrame, usize)> = self.roots.iter().rev().map(|r| (r, 1)).collect();
        while let Some((frame, depth)) = stack.pop() {
            f(frame, depth);
            stack.extend(frame.children.iter().rev().map(|c| (c, depth + 1)));
        }
    }
}

/// Traces of a test suite captured against one model version.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TraceStore {
    /// Model version the traces were captured against, if recorded.
    pub model_id: Option<String>,
    pub records: BTreeMap<String, TestRecord>,
}

impl TraceStore {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn get(&self, test_id: &str) -> Option<&TestRecord> {
        self.records.get(test_id)
    }

    pub fn tests(&self) -> impl Iterator<Item = &TestRecord> {
        self.records.values()
    }

    /// Index lines `test_id<TAB>spec_tag<TAB>criticality<TAB>depth`; a missing
    /// spec tag is written as `-`.
    pub fn index_text(&self) -> String {
        let mut out = String::new();
        for record in self.records.values() {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                record.test_id,
                record.spec_tag.as_deref().unwrap_or("-"),
                record.criticality,
                record.trace_depth()
            );
        }
        out
    }
}

/// One row of a store index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexEntry {
    pub test_id: String,
    pub spec_tag: Option<String>,
    pub criticality: u8,
    pub depth: usize,
}

/// Parses the text written by [`TraceStore::index_text`].
pub fn parse_index(text: &str) -> Result<Vec<IndexEntry>, String> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, tag, crit, depth] = fields[..] else {
            return Err(format!("line {}: expected 4 tab-separated fields", n + 1));
        };
        let criticality = crit
            .parse::<u8>()
            .ok()
            .filter(|c| (1..=5).contains(c))
            .ok_or_else(|| format!("line {}: bad criticality `{crit}`", n + 1))?;
        let depth = depth
            .parse()
            .map_err(|_| format!("line {}: bad depth `{depth}`", n + 1))?;
        out.push(IndexEntry {
            test_id: id.to_string(),
            spec_tag: (tag != "-").then(|| tag.to_string()),
            criticality,
            depth,
        });
    }
    Ok(out)
}
