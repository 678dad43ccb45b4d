use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use super::{TestRecord, TraceStore};
use crate::change::ImpactSet;
use crate::model::MethodRef;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum SelectionGranularity {
    /// Rerun a test when it entered any impacted method.
    #[default]
    Method,
    /// Rerun a test when it called into an impacted method or entered a
    /// changed one.
    Edge,
}

impl FromStr for SelectionGranularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "method" => Ok(Self::Method),
            "edge" => Ok(Self::Edge),
            other => Err(format!("unknown granularity `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("trace store was captured against model `{store}`, not `{model}`")]
pub struct StaleStore {
    pub store: String,
    pub model: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SelectionResult {
    /// Prioritized, highest risk first.
    pub rerun: Vec<String>,
    pub obsolete: Vec<String>,
    pub retained: Vec<String>,
}

impl SelectionResult {
    /// `RERUN id`, `OBSOLETE id` and `RETAINED id` lines in that order.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for (tag, ids) in [
            ("RERUN", &self.rerun),
            ("OBSOLETE", &self.obsolete),
            ("RETAINED", &self.retained),
        ] {
            for id in ids {
                let _ = writeln!(out, "{tag} {id}");
            }
        }
        out
    }
}

fn needs_rerun(record: &TestRecord, impact: &ImpactSet, granularity: SelectionGranularity) -> bool {
    let touched = record.touched_methods();
    if touched.iter().any(|m| impact.deleted_methods.contains(m)) {
        return true;
    }
    match granularity {
        SelectionGranularity::Method => touched.iter().any(|m| impact.methods.contains(m)),
        SelectionGranularity::Edge => {
            let marked: BTreeSet<&MethodRef> = impact
                .seed
                .marked_nodes
                .iter()
                .filter_map(|n| n.as_method())
                .collect();
            touched.iter().any(|m| marked.contains(m))
                || record
                    .calls()
                    .iter()
                    .any(|c| impact.methods.contains(&c.callee))
        }
    }
}

/// Splits the store into obsolete tests (changed specification), tests to
/// rerun (trace reaches the impact set) and retained tests.
pub fn select_tests(
    store: &TraceStore,
    impact: &ImpactSet,
    changed_specs: &BTreeSet<String>,
    old_model_id: &str,
    granularity: SelectionGranularity,
) -> Result<SelectionResult, StaleStore> {
    if let Some(id) = &store.model_id {
        if id != old_model_id {
            return Err(StaleStore {
                store: id.clone(),
                model: old_model_id.to_string(),
            });
        }
    }
    let mut result = SelectionResult::default();
    let mut rerun = Vec::new();
    for record in store.tests() {
        if record
            .spec_tag
            .as_ref()
            .is_some_and(|t| changed_specs.contains(t))
        {
            result.obsolete.push(record.test_id.clone());
        } else if needs_rerun(record, impact, granularity) {
            rerun.push(record);
        } else {
            result.retained.push(record.test_id.clone());
        }
    }
    result.rerun = prioritize(&rerun, impact);
    Ok(result)
}

/// Orders tests by descending (criticality, impacted methods touched, trace
/// depth), then by test id.
pub fn prioritize(rerun: &[&TestRecord], impact: &ImpactSet) -> Vec<String> {
    let mut scored: Vec<((u8, usize, usize), &str)> = rerun
        .iter()
        .map(|r| {
            let overlap = r
                .touched_methods()
                .iter()
                .filter(|m| impact.methods.contains(m))
                .count();
            (
                (r.criticality, overlap, r.trace_depth()),
                r.test_id.as_str(),
            )
        })
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    scored.into_iter().map(|(_, id)| id.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_traces;

    fn impact_of(methods: &[&str]) -> ImpactSet {
        ImpactSet {
            methods: methods
                .iter()
                .map(|s| {
                    let (c, m) = s.split_once('.').unwrap();
                    MethodRef::new(c, m)
                })
                .collect(),
            ..ImpactSet::default()
        }
    }

    const STORE: &str = "model mediator\n\
        test font spec=FontDialog criticality=4\nenter Widget.Changed\nenter FontDialogDirector.WidgetChanged site=0\nexit\nexit\n\
        test list spec=Widgets criticality=2\nenter ListBox.GetSelection\nexit\n";

    #[test]
    fn mediator_selection() {
        let store = parse_traces(STORE).unwrap();
        let impact = impact_of(&["FontDialogDirector.WidgetChanged", "Widget.Changed"]);
        let r = select_tests(
            &store,
            &impact,
            &BTreeSet::new(),
            "mediator",
            SelectionGranularity::Method,
        )
        .unwrap();
        assert_eq!(r.rerun, vec!["font"]);
        assert_eq!(r.retained, vec!["list"]);
        assert!(r.obsolete.is_empty());
        assert_eq!(r.report(), "RERUN font\nRETAINED list\n");
    }

    #[test]
    fn empty_impact_retains_everything() {
        let store = parse_traces(STORE).unwrap();
        let r = select_tests(
            &store,
            &ImpactSet::default(),
            &BTreeSet::new(),
            "mediator",
            SelectionGranularity::Method,
        )
        .unwrap();
        assert!(r.rerun.is_empty());
        assert_eq!(r.retained, vec!["font", "list"]);
    }

    #[test]
    fn changed_spec_is_obsolete() {
        let store = parse_traces(STORE).unwrap();
        let impact = impact_of(&["FontDialogDirector.WidgetChanged", "Widget.Changed"]);
        let specs: BTreeSet<String> = ["FontDialog".to_string()].into();
        let r = select_tests(
            &store,
            &impact,
            &specs,
            "mediator",
            SelectionGranularity::Method,
        )
        .unwrap();
        assert_eq!(r.obsolete, vec!["font"]);
        assert!(r.rerun.is_empty());
    }

    #[test]
    fn stale_store() {
        let store = parse_traces(STORE).unwrap();
        let err = select_tests(
            &store,
            &ImpactSet::default(),
            &BTreeSet::new(),
            "other",
            SelectionGranularity::Method,
        )
        .unwrap_err();
        assert_eq!(err.store, "mediator");
        let mut unlabeled = store;
        unlabeled.model_id = None;
        assert!(select_tests(
            &unlabeled,
            &ImpactSet::default(),
            &BTreeSet::new(),
            "other",
            SelectionGranularity::Method
        )
        .is_ok());
    }

    #[test]
    fn edge_granularity_ignores_root_only_entries() {
        let store = parse_traces("test root\nenter Widget.Changed\nexit\n").unwrap();
        let impact = impact_of(&["FontDialogDirector.WidgetChanged", "Widget.Changed"]);
        let method = select_tests(
            &store,
            &impact,
            &BTreeSet::new(),
            "",
            SelectionGranularity::Method,
        )
        .unwrap();
        assert_eq!(method.rerun, vec!["root"]);
        let edge = select_tests(
            &store,
            &impact,
            &BTreeSet::new(),
            "",
            SelectionGranularity::Edge,
        )
        .unwrap();
        assert_eq!(edge.retained, vec!["root"]);
    }

    #[test]
    fn priority_order() {
        let store = parse_traces(
            "test a criticality=1\nenter A.x\nexit\n\
             test b criticality=5\nenter A.x\nexit\n\
             test c criticality=3\nenter A.x\nexit\n\
             test d criticality=3\nenter A.x\nenter A.y\nenter A.z\nexit\nexit\nexit\n\
             test e criticality=3\nenter A.x\nenter A.w\nexit\nexit\n",
        )
        .unwrap();
        let impact = impact_of(&["A.x", "A.y", "A.z"]);
        let records: Vec<&TestRecord> = store.tests().collect();
        assert_eq!(prioritize(&records, &impact), vec!["b", "d", "e", "c", "a"]);
    }
}
