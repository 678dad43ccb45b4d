//! Integration and regression test orders. Strong components of the full
//! diagram (inheritance edges included) are condensed, the condensation is
//! leveled by longest path to a sink, and every cyclic component gets a stub
//! plan that breaks its cycles at individual edges.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};

use crate::change::ImpactSet;
use crate::cmd::{ClassMessageDiagram, CmdNode, EdgeLabel, NodeId};
use crate::graph::{
    is_acyclic, sink_first_order, strong_components, topological_levels, Condensation,
    SimpleDigraph,
};
use crate::model::MethodRef;

/// One stubbed dependency. `labels` names the collapsed diagram edges: call
/// site ordinals for messages, otherwise the edge kind.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StubEdge {
    pub from: CmdNode,
    pub to: CmdNode,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StubPlan {
    pub edges_to_stub: Vec<StubEdge>,
    /// Methods of the component, each after everything it still depends on.
    pub order: Vec<MethodRef>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StrategyItem {
    Single(MethodRef),
    Component {
        methods: Vec<MethodRef>,
        plan: StubPlan,
    },
}

impl StrategyItem {
    pub fn methods(&self) -> Vec<&MethodRef> {
        match self {
            StrategyItem::Single(m) => vec![m],
            StrategyItem::Component { methods, .. } => methods.iter().collect(),
        }
    }
}

impl fmt::Display for StrategyItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StrategyItem::Single(m) => m.fmt(f),
            StrategyItem::Component { methods, .. } => {
                let names: Vec<String> = methods.iter().map(|m| m.to_string()).collect();
                write!(f, "component {{{}}}", names.join(", "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    All,
    Impacted(ImpactSet),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestStrategy {
    pub levels: Vec<Vec<StrategyItem>>,
    pub scope: Scope,
    pub top_down: bool,
}

impl TestStrategy {
    /// Methods in emission order; component members follow their plan.
    pub fn flat_order(&self) -> Vec<MethodRef> {
        let mut out = Vec::new();
        for level in &self.levels {
            for item in level {
                match item {
                    StrategyItem::Single(m) => out.push(m.clone()),
                    StrategyItem::Component { plan, .. } => out.extend(plan.order.iter().cloned()),
                }
            }
        }
        out
    }

    /// Index of the level holding `method`.
    pub fn level_of(&self, method: &MethodRef) -> Option<usize> {
        self.levels
            .iter()
            .position(|level| level.iter().any(|item| item.methods().contains(&method)))
    }

    /// Emission order reversed, levels renumbered from 0.
    pub fn reversed(mut self) -> Self {
        self.levels.reverse();
        self.top_down = !self.top_down;
        self
    }

    pub fn report(&self) -> String {
        let mut out = String::new();
        for (k, level) in self.levels.iter().enumerate() {
            for item in level {
                let _ = writeln!(out, "level {k}: {item}");
                if let StrategyItem::Component { plan, .. } = item {
                    for stub in &plan.edges_to_stub {
                        for label in &stub.labels {
                            let _ = writeln!(out, "  stub {}#{label} -> {}", stub.from, stub.to);
                        }
                    }
                }
            }
        }
        out
    }

    /// Graphviz rendering with one rank per level; stubbed edges dashed.
    pub fn export_dot(&self) -> String {
        let q = crate::cmd::quote;
        let mut out = String::from("digraph strategy {\n  rankdir=BT;\n");
        let mut stubs = Vec::new();
        for (k, level) in self.levels.iter().enumerate() {
            let _ = writeln!(out, "  subgraph level_{k} {{\n    rank=same;");
            for item in level {
                let _ = writeln!(out, "    {} [shape=box];", q(&item.to_string()));
                if let StrategyItem::Component { plan, .. } = item {
                    stubs.extend(plan.edges_to_stub.iter());
                }
            }
            out.push_str("  }\n");
        }
        for stub in stubs {
            let _ = writeln!(
                out,
                "  {} -> {} [style=dashed, label={}];",
                q(&stub.from.to_string()),
                q(&stub.to.to_string()),
                q(&format!("stub {}", stub.labels.join(",")))
            );
        }
        out.push_str("}\n");
        out
    }
}

fn cmp_nodes(cmd: &ClassMessageDiagram, a: NodeId, b: NodeId) -> Ordering {
    cmd.node(a).order_key().cmp(&cmd.node(b).order_key())
}

type LabelKey = (u8, u32, &'static str);

fn edge_labels(cmd: &ClassMessageDiagram) -> BTreeMap<(NodeId, NodeId), Vec<String>> {
    let mut map: BTreeMap<(NodeId, NodeId), BTreeSet<LabelKey>> = BTreeMap::new();
    for e in cmd.edges() {
        let key = match (&e.label, e.label.site()) {
            (_, Some(site)) => (0, site.ordinal, ""),
            (EdgeLabel::Inheritance, None) => (1, 0, "inh"),
            (other, None) => (1, 0, other.short_name()),
        };
        map.entry((e.src, e.dst)).or_default().insert(key);
    }
    map.into_iter()
        .map(|(k, v)| {
            let labels = v
                .into_iter()
                .map(|(kind, ord, name)| {
                    if kind == 0 {
                        ord.to_string()
                    } else {
                        name.to_string()
                    }
                })
                .collect();
            (k, labels)
        })
        .collect()
}

fn cyclic_edge_count(g: &SimpleDigraph) -> usize {
    let mut comp = vec![usize::MAX; g.node_count()];
    for (i, c) in strong_components(g).iter().enumerate() {
        for &u in c {
            comp[u] = i;
        }
    }
    g.edges()
        .filter(|&(u, v)| comp[u] != usize::MAX && comp[u] == comp[v])
        .count()
}

/// Greedy feedback-edge removal on the subgraph of `g` induced by `members`,
/// followed by a pass that restores every removed edge not needed to keep the
/// remainder acyclic.
pub fn plan_stubs(
    cmd: &ClassMessageDiagram,
    g: &SimpleDigraph,
    members: &BTreeSet<NodeId>,
) -> StubPlan {
    let labels = edge_labels(cmd);
    let first_site = |u: NodeId, v: NodeId| -> Option<u32> {
        labels
            .get(&(u, v))
            .and_then(|l| l.first())
            .and_then(|s| s.parse().ok())
    };
    let edge_key = |u: NodeId, v: NodeId| {
        (
            cmd.node(u).order_key(),
            first_site(u, v),
            cmd.node(v).order_key(),
        )
    };

    let mut sub = g.induced(members);
    let mut removed: Vec<(NodeId, NodeId)> = Vec::new();
    loop {
        let cycles = strong_components(&sub);
        if cycles.is_empty() {
            break;
        }
        let mut in_cycle = vec![usize::MAX; sub.node_count()];
        for (i, c) in cycles.iter().enumerate() {
            for &u in c {
                in_cycle[u] = i;
            }
        }
        let candidates: Vec<(NodeId, NodeId)> = sub
            .edges()
            .filter(|&(u, v)| in_cycle[u] != usize::MAX && in_cycle[u] == in_cycle[v])
            .collect();
        let best = candidates
            .into_iter()
            .map(|(u, v)| {
                let mut trial = sub.clone();
                trial.remove_edge(u, v);
                (cyclic_edge_count(&trial), (u, v))
            })
            .min_by(|a, b| {
                a.0.cmp(&b.0)
                    .then_with(|| edge_key(a.1 .0, a.1 .1).cmp(&edge_key(b.1 .0, b.1 .1)))
            })
            .map(|(_, e)| e)
            .expect("a cyclic component has an edge inside a cycle");
        sub.remove_edge(best.0, best.1);
        removed.push(best);
    }

    let mut kept = Vec::new();
    for (u, v) in removed {
        sub.add_edge(u, v);
        if is_acyclic(&sub) {
            continue;
        }
        sub.remove_edge(u, v);
        kept.push((u, v));
    }
    kept.sort_by(|a, b| edge_key(a.0, a.1).cmp(&edge_key(b.0, b.1)));

    let order = sink_first_order(&sub, members, |u| cmd.node(u).order_key())
        .expect("stubbed remainder is acyclic")
        .into_iter()
        .filter_map(|u| cmd.node(u).as_method().cloned())
        .collect();
    StubPlan {
        edges_to_stub: kept
            .into_iter()
            .map(|(u, v)| StubEdge {
                from: cmd.node(u).clone(),
                to: cmd.node(v).clone(),
                labels: labels.get(&(u, v)).cloned().unwrap_or_default(),
            })
            .collect(),
        order,
    }
}

/// Leveled items for the subgraph of `g` induced by `nodes`, level 0 first.
/// Nodes outside `nodes` are ignored; levels without methods are dropped.
fn leveled_items(
    cmd: &ClassMessageDiagram,
    g: &SimpleDigraph,
    nodes: &BTreeSet<NodeId>,
) -> Vec<Vec<StrategyItem>> {
    let sub = g.induced(nodes);
    let cond = Condensation::new(&sub);
    let levels = topological_levels(&sub, &cond).expect("condensation is acyclic");
    let mut out = Vec::new();
    for level in levels {
        let mut items: Vec<(NodeId, StrategyItem)> = Vec::new();
        for c in level {
            let members: BTreeSet<NodeId> = cond.members[c]
                .iter()
                .copied()
                .filter(|u| nodes.contains(u))
                .collect();
            let mut methods: Vec<NodeId> = members
                .iter()
                .copied()
                .filter(|&u| cmd.node(u).is_method())
                .collect();
            if methods.is_empty() {
                continue;
            }
            methods.sort_by(|&a, &b| cmp_nodes(cmd, a, b));
            let item = if cond.is_cyclic(c, &sub) {
                StrategyItem::Component {
                    methods: methods
                        .iter()
                        .filter_map(|&u| cmd.node(u).as_method().cloned())
                        .collect(),
                    plan: plan_stubs(cmd, &sub, &members),
                }
            } else {
                StrategyItem::Single(
                    cmd.node(methods[0])
                        .as_method()
                        .cloned()
                        .expect("method node"),
                )
            };
            items.push((methods[0], item));
        }
        if items.is_empty() {
            continue;
        }
        items.sort_by(|a, b| cmp_nodes(cmd, a.0, b.0));
        out.push(items.into_iter().map(|(_, item)| item).collect());
    }
    out
}

/// Bottom-up test order for `cmd`. With an impacted scope the full order is
/// restricted to impacted methods; a component only partly impacted is
/// re-leveled on its impacted part, in place.
pub fn generate_strategy(cmd: &ClassMessageDiagram, scope: &Scope) -> TestStrategy {
    let g = cmd.collapse_parallel();
    let all_nodes: BTreeSet<NodeId> = (0..cmd.node_count()).collect();
    let full = leveled_items(cmd, &g, &all_nodes);
    let levels = match scope {
        Scope::All => full,
        Scope::Impacted(impact) => restrict(cmd, &g, full, impact),
    };
    TestStrategy {
        levels,
        scope: scope.clone(),
        top_down: false,
    }
}

fn restrict(
    cmd: &ClassMessageDiagram,
    g: &SimpleDigraph,
    full: Vec<Vec<StrategyItem>>,
    impact: &ImpactSet,
) -> Vec<Vec<StrategyItem>> {
    let comp = Condensation::new(g);
    let mut out: Vec<Vec<StrategyItem>> = Vec::new();
    for level in full {
        let mut spliced: Vec<Vec<StrategyItem>> = vec![Vec::new()];
        for item in level {
            match item {
                StrategyItem::Single(m) => {
                    if impact.methods.contains(&m) {
                        spliced[0].push(StrategyItem::Single(m));
                    }
                }
                StrategyItem::Component { methods, plan } => {
                    let hit: Vec<&MethodRef> = methods
                        .iter()
                        .filter(|m| impact.methods.contains(m))
                        .collect();
                    if hit.is_empty() {
                        continue;
                    }
                    if hit.len() == methods.len() {
                        spliced[0].push(StrategyItem::Component { methods, plan });
                        continue;
                    }
                    let c = comp.component_of
                        [cmd.method_id(hit[0]).expect("impacted method in diagram")];
                    let keep: BTreeSet<NodeId> = comp.members[c]
                        .iter()
                        .copied()
                        .filter(|&u| impact.contains(cmd.node(u)))
                        .collect();
                    for (j, sub_level) in leveled_items(cmd, g, &keep).into_iter().enumerate() {
                        if spliced.len() <= j {
                            spliced.push(Vec::new());
                        }
                        spliced[j].extend(sub_level);
                    }
                }
            }
        }
        for mut level in spliced {
            if level.is_empty() {
                continue;
            }
            level.sort_by(|a, b| {
                let ka = CmdNode::Method(a.methods()[0].clone());
                let kb = CmdNode::Method(b.methods()[0].clone());
                ka.order_key().cmp(&kb.order_key())
            });
            out.push(level);
        }
    }
    out
}
