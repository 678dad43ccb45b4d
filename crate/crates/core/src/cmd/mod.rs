//! The class message diagram: a multigraph over method and instance-variable
//! nodes whose edges record every possible message, variable access and
//! method redefinition of a program model.
//!
//! Construction rules, per call site of a method `m` in class `K`:
//!
//! - `self s`: one `self` edge to the first `s` at or above `K`.
//! - `super s`: one `super` edge to the first `s` strictly above `K`.
//! - `C.s` (typed): an unlabeled edge to the `s` found from `C` upward, plus a
//!   duplicated edge to every redeclaration of `s` in a transitive subclass of `C`.
//! - `?.s` (untyped): an unlabeled edge to every implementation of `s`.
//!
//! A redeclared method gets an inheritance edge to the nearest ancestor
//! implementation. `uses x` gives a method-to-variable edge, `defs x` a
//! variable-to-method edge.

mod dot;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::SimpleDigraph;
use crate::model::{Dispatch, MethodRef, ProgramModel, SiteId, VarRef};

pub use dot::export_dot;
pub(crate) use dot::quote;

pub type NodeId = usize;

/// An instance variable named by its declaring class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DataRef {
    pub class: String,
    pub var: String,
}

impl fmt::Display for DataRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class, self.var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CmdNode {
    Method(MethodRef),
    Data(DataRef),
}

impl CmdNode {
    pub fn method(class: impl Into<String>, selector: impl Into<String>) -> Self {
        CmdNode::Method(MethodRef::new(class, selector))
    }

    pub fn data(class: impl Into<String>, var: impl Into<String>) -> Self {
        CmdNode::Data(DataRef {
            class: class.into(),
            var: var.into(),
        })
    }

    pub fn class(&self) -> &str {
        match self {
            CmdNode::Method(m) => &m.class,
            CmdNode::Data(d) => &d.class,
        }
    }

    pub fn is_method(&self) -> bool {
        matches!(self, CmdNode::Method(_))
    }

    pub fn is_constructor(&self) -> bool {
        matches!(self, CmdNode::Method(m) if m.is_constructor())
    }

    pub fn as_method(&self) -> Option<&MethodRef> {
        match self {
            CmdNode::Method(m) => Some(m),
            CmdNode::Data(_) => None,
        }
    }

    /// Ordering used wherever nodes are listed: constructors first, then
    /// lexicographic by class and member name, methods before variables.
    pub fn order_key(&self) -> (bool, &str, u8, &str) {
        match self {
            CmdNode::Method(m) => (!m.is_constructor(), &m.class, 0, &m.selector),
            CmdNode::Data(d) => (true, &d.class, 1, &d.var),
        }
    }
}

impl fmt::Display for CmdNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdNode::Method(m) => m.fmt(f),
            CmdNode::Data(d) => d.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Binding {
    Resolved,
    /// Redirected copy of a typed message edge toward a subclass override.
    DuplicatedFor(String),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EdgeLabel {
    Message { site: SiteId, binding: Binding },
    SelfCall(SiteId),
    SuperCall(SiteId),
    Inheritance,
    Uses,
    Def,
}

impl EdgeLabel {
    pub fn site(&self) -> Option<&SiteId> {
        match self {
            EdgeLabel::Message { site, .. }
            | EdgeLabel::SelfCall(site)
            | EdgeLabel::SuperCall(site) => Some(site),
            _ => None,
        }
    }

    /// Message, self and super edges.
    pub fn is_call(&self) -> bool {
        self.site().is_some()
    }

    /// Unlabeled message edge (resolved or duplicated).
    pub fn is_unlabeled_message(&self) -> bool {
        matches!(self, EdgeLabel::Message { .. })
    }

    pub fn short_name(&self) -> &'static str {
        match self {
            EdgeLabel::Message { .. } => "msg",
            EdgeLabel::SelfCall(_) => "self",
            EdgeLabel::SuperCall(_) => "super",
            EdgeLabel::Inheritance => "inh",
            EdgeLabel::Uses => "uses",
            EdgeLabel::Def => "def",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CmdEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub label: EdgeLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot resolve {what}: {message}")]
pub struct ResolutionError {
    pub what: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassMessageDiagram {
    pub source_model_id: String,
    nodes: Vec<CmdNode>,
    index: BTreeMap<CmdNode, NodeId>,
    edges: Vec<CmdEdge>,
}

impl ClassMessageDiagram {
    pub fn nodes(&self) -> &[CmdNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &CmdNode {
        &self.nodes[id]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn id_of(&self, node: &CmdNode) -> Option<NodeId> {
        self.index.get(node).copied()
    }

    pub fn method_id(&self, method: &MethodRef) -> Option<NodeId> {
        self.id_of(&CmdNode::Method(method.clone()))
    }

    pub fn edges(&self) -> &[CmdEdge] {
        &self.edges
    }

    pub fn method_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_method())
    }

    pub fn data_ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).filter(|&i| !self.nodes[i].is_method())
    }

    pub fn edges_from(&self, id: NodeId) -> impl Iterator<Item = &CmdEdge> + '_ {
        self.edges.iter().filter(move |e| e.src == id)
    }

    pub fn count_edges(&self, pred: impl Fn(&EdgeLabel) -> bool) -> usize {
        self.edges.iter().filter(|e| pred(&e.label)).count()
    }

    /// Copy without inheritance edges.
    pub fn strip_inheritance(&self) -> ClassMessageDiagram {
        ClassMessageDiagram {
            source_model_id: self.source_model_id.clone(),
            nodes: self.nodes.clone(),
            index: self.index.clone(),
            edges: self
                .edges
                .iter()
                .filter(|e| e.label != EdgeLabel::Inheritance)
                .cloned()
                .collect(),
        }
    }

    /// Simple digraph over the same node ids with one edge per connected pair.
    pub fn collapse_parallel(&self) -> SimpleDigraph {
        SimpleDigraph::from_edges(self.nodes.len(), self.edges.iter().map(|e| (e.src, e.dst)))
    }

    /// Collapsed graph of message, self and super edges only. Data nodes stay
    /// in the index space but have no edges.
    pub fn message_graph(&self) -> SimpleDigraph {
        SimpleDigraph::from_edges(
            self.nodes.len(),
            self.edges
                .iter()
                .filter(|e| e.label.is_call())
                .map(|e| (e.src, e.dst)),
        )
    }

    /// Graph the impact analysis searches: inheritance removed, parallel
    /// edges collapsed, directions reversed.
    pub fn dependents_graph(&self) -> SimpleDigraph {
        crate::graph::transpose(&self.strip_inheritance().collapse_parallel())
    }

    fn add_node(&mut self, node: CmdNode) {
        if !self.index.contains_key(&node) {
            self.index.insert(node.clone(), self.nodes.len());
            self.nodes.push(node);
        }
    }

    fn push_edge(&mut self, src: NodeId, dst: NodeId, label: EdgeLabel) {
        self.edges.push(CmdEdge { src, dst, label });
    }
}

/// Builds the diagram of a validated model (constructors synthesized).
pub fn build_cmd(model: &ProgramModel) -> Result<ClassMessageDiagram, ResolutionError> {
    let hierarchy = model.hierarchy();
    let mut cmd = ClassMessageDiagram {
        source_model_id: model.model_id.clone(),
        ..Default::default()
    };

    for class in &model.classes {
        for method in &class.methods {
            cmd.add_node(CmdNode::method(&class.name, &method.selector));
        }
        for var in &class.instance_vars {
            cmd.add_node(CmdNode::data(&class.name, &var.name));
        }
    }

    let method_node = |cmd: &ClassMessageDiagram, class: &str, selector: &str| {
        cmd.method_id(&MethodRef::new(class, selector))
            .expect("every declared method has a node")
    };

    for class in &model.classes {
        for method in &class.methods {
            let src = method_node(&cmd, &class.name, &method.selector);
            for site in &method.call_sites {
                let site_id = SiteId {
                    class: class.name.clone(),
                    selector: method.selector.clone(),
                    ordinal: site.ordinal,
                };
                let target = &site.target_selector;
                let unresolved = |message: String| ResolutionError {
                    what: format!("call site {site_id}"),
                    message,
                };
                match &site.dispatch {
                    Dispatch::SelfSend => {
                        let owner = hierarchy.lookup(&class.name, target).ok_or_else(|| {
                            unresolved(format!("no {target} at or above {}", class.name))
                        })?;
                        let dst = method_node(&cmd, &owner.name, target);
                        cmd.push_edge(src, dst, EdgeLabel::SelfCall(site_id));
                    }
                    Dispatch::Super => {
                        let owner =
                            hierarchy.lookup_above(&class.name, target).ok_or_else(|| {
                                unresolved(format!("no {target} above {}", class.name))
                            })?;
                        let dst = method_node(&cmd, &owner.name, target);
                        cmd.push_edge(src, dst, EdgeLabel::SuperCall(site_id));
                    }
                    Dispatch::Typed(receiver) => {
                        let owner = hierarchy.lookup(receiver, target).ok_or_else(|| {
                            unresolved(format!("no {target} at or above {receiver}"))
                        })?;
                        let dst = method_node(&cmd, &owner.name, target);
                        cmd.push_edge(
                            src,
                            dst,
                            EdgeLabel::Message {
                                site: site_id.clone(),
                                binding: Binding::Resolved,
                            },
                        );
                        for sub in hierarchy.descendants(receiver) {
                            if sub.method(target).is_some() {
                                let dst = method_node(&cmd, &sub.name, target);
                                cmd.push_edge(
                                    src,
                                    dst,
                                    EdgeLabel::Message {
                                        site: site_id.clone(),
                                        binding: Binding::DuplicatedFor(sub.name.clone()),
                                    },
                                );
                            }
                        }
                    }
                    Dispatch::Untyped => {
                        for owner in hierarchy.implementors(target) {
                            let dst = method_node(&cmd, &owner.name, target);
                            cmd.push_edge(
                                src,
                                dst,
                                EdgeLabel::Message {
                                    site: site_id.clone(),
                                    binding: Binding::Resolved,
                                },
                            );
                        }
                    }
                }
            }
        }
    }

    for class in &model.classes {
        for method in class.methods.iter().filter(|m| !m.is_constructor) {
            if let Some(owner) = hierarchy.lookup_above(&class.name, &method.selector) {
                let src = method_node(&cmd, &class.name, &method.selector);
                let dst = method_node(&cmd, &owner.name, &method.selector);
                cmd.push_edge(src, dst, EdgeLabel::Inheritance);
            }
        }
    }

    for class in &model.classes {
        for method in &class.methods {
            let m = method_node(&cmd, &class.name, &method.selector);
            let data_node = |cmd: &ClassMessageDiagram, var: &VarRef| {
                let owner = hierarchy.resolve_var(var).ok_or_else(|| ResolutionError {
                    what: format!("variable {}.{}", var.owner_class, var.var_name),
                    message: format!("not declared at or above {}", var.owner_class),
                })?;
                Ok::<_, ResolutionError>(
                    cmd.id_of(&CmdNode::data(&owner.name, &var.var_name))
                        .expect("every declared variable has a node"),
                )
            };
            for var in &method.var_uses {
                let x = data_node(&cmd, var)?;
                cmd.push_edge(m, x, EdgeLabel::Uses);
            }
            for var in &method.var_defs {
                let x = data_node(&cmd, var)?;
                cmd.push_edge(x, m, EdgeLabel::Def);
            }
        }
    }

    Ok(cmd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_model;
    use crate::model::synthesize_default_constructors;

    pub(crate) const TWO_CLASS: &str = "class A { var x method aMethod { defs x } } \
        class B extends A { var myA : A method aMethod { call super.aMethod call A.aMethod uses myA } }";

    fn build(text: &str) -> ClassMessageDiagram {
        build_cmd(&synthesize_default_constructors(
            &parse_model(text).unwrap(),
        ))
        .unwrap()
    }

    fn edge_set(cmd: &ClassMessageDiagram) -> Vec<(String, String, &'static str)> {
        let mut out: Vec<_> = cmd
            .edges()
            .iter()
            .map(|e| {
                let kind = match &e.label {
                    EdgeLabel::Message {
                        binding: Binding::DuplicatedFor(_),
                        ..
                    } => "dup",
                    other => other.short_name(),
                };
                (
                    cmd.node(e.src).to_string(),
                    cmd.node(e.dst).to_string(),
                    kind,
                )
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn two_class_inventory() {
        let cmd = build(TWO_CLASS);
        let methods: Vec<String> = cmd.method_ids().map(|i| cmd.node(i).to_string()).collect();
        assert_eq!(
            methods,
            vec!["A.<init>", "A.aMethod", "B.<init>", "B.aMethod"]
        );
        let data: Vec<String> = cmd.data_ids().map(|i| cmd.node(i).to_string()).collect();
        assert_eq!(data, vec!["A.x", "B.myA"]);

        let s = |a: &str, b: &str, k: &'static str| (a.to_string(), b.to_string(), k);
        let mut expected = vec![
            s("B.aMethod", "A.aMethod", "inh"),
            s("B.aMethod", "A.aMethod", "super"),
            s("B.aMethod", "A.aMethod", "msg"),
            s("B.aMethod", "B.aMethod", "dup"),
            s("B.aMethod", "B.myA", "uses"),
            s("A.x", "A.<init>", "def"),
            s("A.x", "A.aMethod", "def"),
            s("B.myA", "B.<init>", "def"),
        ];
        expected.sort();
        assert_eq!(edge_set(&cmd), expected);
    }

    #[test]
    fn call_edges_carry_their_site() {
        let cmd = build(TWO_CLASS);
        for edge in cmd.edges() {
            if let Some(site) = edge.label.site() {
                let src = cmd.node(edge.src).as_method().unwrap();
                assert_eq!(
                    (site.class.as_str(), site.selector.as_str()),
                    (src.class.as_str(), src.selector.as_str())
                );
            }
        }
        let sup = cmd
            .edges()
            .iter()
            .find(|e| matches!(e.label, EdgeLabel::SuperCall(_)))
            .unwrap();
        assert_eq!(sup.label.site().unwrap().ordinal, 0);
    }

    #[test]
    fn single_method_class() {
        let cmd = build("class K { method m { } }");
        assert_eq!(cmd.node_count(), 2);
        assert!(cmd.edges().is_empty());
    }

    #[test]
    fn strip_and_collapse_two_class() {
        let cmd = build(TWO_CLASS);
        let stripped = cmd.strip_inheritance();
        assert_eq!(stripped.edges().len(), cmd.edges().len() - 1);
        assert_eq!(stripped.nodes(), cmd.nodes());
        assert_eq!(stripped.strip_inheritance(), stripped);

        let simple = stripped.collapse_parallel();
        let mut pairs: Vec<(String, String)> = simple
            .edges()
            .map(|(u, v)| (cmd.node(u).to_string(), cmd.node(v).to_string()))
            .collect();
        pairs.sort();
        let mut expected: Vec<(String, String)> = [
            ("B.aMethod", "A.aMethod"),
            ("B.aMethod", "B.aMethod"),
            ("B.aMethod", "B.myA"),
            ("A.x", "A.<init>"),
            ("A.x", "A.aMethod"),
            ("B.myA", "B.<init>"),
        ]
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
        expected.sort();
        assert_eq!(pairs, expected);
        assert_eq!(simple.node_count(), cmd.node_count());
    }

    #[test]
    fn typed_duplication_is_transitive() {
        let cmd = build(
            "class P { method m { } } class Q extends P { } class R extends Q { method m { } } \
             class S extends P { method m { } } \
             class U { method go { call Q.m } }",
        );
        let go = cmd.method_id(&MethodRef::new("U", "go")).unwrap();
        let mut targets: Vec<String> = cmd
            .edges_from(go)
            .map(|e| cmd.node(e.dst).to_string())
            .collect();
        targets.sort();
        // Q inherits P.m; only R sits below Q, S is a sibling branch.
        assert_eq!(targets, vec!["P.m", "R.m"]);
    }

    #[test]
    fn untyped_reaches_every_implementation() {
        let cmd = build(
            "class A { method m { } } class B { method m { } } class C { method go { call ?.m } }",
        );
        let go = cmd.method_id(&MethodRef::new("C", "go")).unwrap();
        assert_eq!(cmd.edges_from(go).count(), 2);
    }

    #[test]
    fn self_edges_bind_statically() {
        let cmd = build("class A { method run { call self.step } method step { } } class B extends A { method step { } }");
        let run = cmd.method_id(&MethodRef::new("A", "run")).unwrap();
        let targets: Vec<String> = cmd
            .edges_from(run)
            .map(|e| cmd.node(e.dst).to_string())
            .collect();
        assert_eq!(targets, vec!["A.step"]);
    }

    #[test]
    fn mediator_widget_changed_reaches_both_directors() {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/fixtures/mediator.mdl"
        ))
        .unwrap();
        let cmd = build(&text);
        let changed = cmd.method_id(&MethodRef::new("Widget", "Changed")).unwrap();
        let mut targets: Vec<String> = cmd
            .edges_from(changed)
            .filter(|e| e.label.is_unlabeled_message())
            .map(|e| cmd.node(e.dst).to_string())
            .collect();
        targets.sort();
        assert_eq!(
            targets,
            vec![
                "DialogDirector.WidgetChanged",
                "FontDialogDirector.WidgetChanged"
            ]
        );
    }

    #[test]
    fn unresolved_super_is_an_error() {
        let model = parse_model("class A { method m { call super.m } }").unwrap();
        assert!(build_cmd(&model).is_err());
    }
}
