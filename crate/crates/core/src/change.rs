//! Differences between two versions of a program model and the set of CMD
//! nodes a change can affect.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::cmd::{build_cmd, ClassMessageDiagram, CmdNode, DataRef, EdgeLabel, ResolutionError};
use crate::graph::{reachable_from, strong_components, transpose, SimpleDigraph};
use crate::model::{ClassDef, MethodDef, MethodRef, ProgramModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Granularity {
    Class,
    Method,
    Variable,
}

impl Granularity {
    pub fn as_str(self) -> &'static str {
        match self {
            Granularity::Class => "CLASS",
            Granularity::Method => "METHOD",
            Granularity::Variable => "VARIABLE",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChangeKind {
    Added,
    Deleted,
    Modified,
}

impl ChangeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChangeKind::Added => "ADDED",
            ChangeKind::Deleted => "DELETED",
            ChangeKind::Modified => "MODIFIED",
        }
    }
}

/// One classified change. `subject` is `Class`, `Class.selector` or
/// `Class.var`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChangeEntry {
    pub granularity: Granularity,
    pub kind: ChangeKind,
    pub subject: String,
}

impl ChangeEntry {
    pub fn new(granularity: Granularity, kind: ChangeKind, subject: impl Into<String>) -> Self {
        Self {
            granularity,
            kind,
            subject: subject.into(),
        }
    }
}

impl fmt::Display for ChangeEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {}",
            self.kind.as_str(),
            self.granularity.as_str(),
            self.subject
        )
    }
}

/// An edge named by its endpoints rather than by node ids, so edges of two
/// diagrams can be compared.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub src: CmdNode,
    pub dst: CmdNode,
    pub label: EdgeLabel,
}

impl EdgeKey {
    /// The endpoint whose behavior depends on the other one.
    pub fn dependent(&self) -> &CmdNode {
        match self.label {
            EdgeLabel::Def => &self.dst,
            _ => &self.src,
        }
    }
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match &self.label {
            EdgeLabel::Message { site, .. }
            | EdgeLabel::SelfCall(site)
            | EdgeLabel::SuperCall(site) => {
                format!("{}#{}", self.label.short_name(), site.ordinal)
            }
            other => other.short_name().to_string(),
        };
        write!(f, "{} -{tag}-> {}", self.src, self.dst)
    }
}

/// Classified changes plus the CMD elements they mark. Nodes of deleted
/// elements are marked as they appeared in the old diagram.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChangeSet {
    pub entries: Vec<ChangeEntry>,
    pub marked_nodes: BTreeSet<CmdNode>,
    pub marked_edges: BTreeSet<EdgeKey>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.marked_nodes.is_empty() && self.marked_edges.is_empty()
    }

    /// Methods removed between the two versions, including those of deleted
    /// classes.
    pub fn deleted_methods(&self, new_cmd: &ClassMessageDiagram) -> BTreeSet<MethodRef> {
        self.marked_nodes
            .iter()
            .filter_map(CmdNode::as_method)
            .filter(|m| new_cmd.method_id(m).is_none())
            .cloned()
            .collect()
    }

    /// Nodes of `cmd` the impact search starts from: marked nodes present in
    /// `cmd` and the dependent endpoint of every marked edge.
    pub fn seeds(&self, cmd: &ClassMessageDiagram) -> BTreeSet<usize> {
        self.marked_nodes
            .iter()
            .chain(self.marked_edges.iter().map(EdgeKey::dependent))
            .filter_map(|n| cmd.id_of(n))
            .collect()
    }

    /// One entry per line: kind, granularity, subject.
    pub fn report(&self) -> String {
        self.entries.iter().map(|e| format!("{e}\n")).collect()
    }
}

#[derive(Default)]
struct Builder {
    entries: BTreeSet<ChangeEntry>,
    nodes: BTreeSet<CmdNode>,
}

impl Builder {
    fn add(&mut self, entry: ChangeEntry, nodes: impl IntoIterator<Item = CmdNode>) {
        self.entries.insert(entry);
        self.nodes.extend(nodes);
    }

    fn modified_method(&mut self, method: &MethodRef) {
        self.add(
            ChangeEntry::new(
                Granularity::Method,
                ChangeKind::Modified,
                method.to_string(),
            ),
            [CmdNode::Method(method.clone())],
        );
    }
}

fn method_changed(a: &MethodDef, b: &MethodDef) -> bool {
    a.is_constructor != b.is_constructor
        || a.call_sites != b.call_sites
        || a.var_uses != b.var_uses
        || a.var_defs != b.var_defs
        || a.body_fingerprint != b.body_fingerprint
}

fn class_nodes(class: &ClassDef) -> impl Iterator<Item = CmdNode> + '_ {
    class
        .methods
        .iter()
        .map(|m| CmdNode::method(&class.name, &m.selector))
        .chain(
            class
                .instance_vars
                .iter()
                .map(|v| CmdNode::data(&class.name, &v.name)),
        )
}

fn edge_keys(cmd: &ClassMessageDiagram) -> BTreeSet<EdgeKey> {
    cmd.edges()
        .iter()
        .map(|e| EdgeKey {
            src: cmd.node(e.src).clone(),
            dst: cmd.node(e.dst).clone(),
            label: e.label.clone(),
        })
        .collect()
}

/// Methods of `cmd` with a uses or def edge on `var`.
fn touching_methods(cmd: &ClassMessageDiagram, var: &CmdNode) -> Vec<MethodRef> {
    let Some(id) = cmd.id_of(var) else {
        return Vec::new();
    };
    cmd.edges()
        .iter()
        .filter_map(|e| match e.label {
            EdgeLabel::Uses if e.dst == id => cmd.node(e.src).as_method().cloned(),
            EdgeLabel::Def if e.src == id => cmd.node(e.dst).as_method().cloned(),
            _ => None,
        })
        .collect()
}

/// Methods of `cmd` with a call edge into `callee`.
fn callers(cmd: &ClassMessageDiagram, callee: &MethodRef) -> Vec<MethodRef> {
    let Some(id) = cmd.method_id(callee) else {
        return Vec::new();
    };
    cmd.edges()
        .iter()
        .filter(|e| e.dst == id && e.label.is_call())
        .filter_map(|e| cmd.node(e.src).as_method().cloned())
        .collect()
}

/// Classifies the changes from `old` to `new` given both diagrams.
pub fn diff(
    old: &ProgramModel,
    old_cmd: &ClassMessageDiagram,
    new: &ProgramModel,
    new_cmd: &ClassMessageDiagram,
) -> ChangeSet {
    let mut b = Builder::default();
    let survives = |m: &MethodRef| new_cmd.method_id(m).is_some();
    let mut deleted_methods = Vec::new();
    let mut dropped_vars = Vec::new();

    for old_class in &old.classes {
        let Some(new_class) = new.class(&old_class.name) else {
            b.add(
                ChangeEntry::new(Granularity::Class, ChangeKind::Deleted, &old_class.name),
                class_nodes(old_class),
            );
            deleted_methods.extend(
                old_class
                    .methods
                    .iter()
                    .map(|m| MethodRef::new(&old_class.name, &m.selector)),
            );
            dropped_vars.extend(
                old_class
                    .instance_vars
                    .iter()
                    .map(|v| CmdNode::data(&old_class.name, &v.name)),
            );
            continue;
        };
        for old_m in &old_class.methods {
            let mref = MethodRef::new(&old_class.name, &old_m.selector);
            match new_class.method(&old_m.selector) {
                None => {
                    b.add(
                        ChangeEntry::new(
                            Granularity::Method,
                            ChangeKind::Deleted,
                            mref.to_string(),
                        ),
                        [CmdNode::Method(mref.clone())],
                    );
                    deleted_methods.push(mref);
                }
                Some(new_m) if method_changed(old_m, new_m) => b.modified_method(&mref),
                Some(_) => {}
            }
        }
        for old_v in &old_class.instance_vars {
            let node = CmdNode::data(&old_class.name, &old_v.name);
            let subject = node.to_string();
            match new_class.var(&old_v.name) {
                None => {
                    b.add(
                        ChangeEntry::new(Granularity::Variable, ChangeKind::Deleted, subject),
                        [node.clone()],
                    );
                    dropped_vars.push(node);
                }
                Some(new_v) if new_v.declared_type != old_v.declared_type => {
                    b.add(
                        ChangeEntry::new(Granularity::Variable, ChangeKind::Modified, subject),
                        [node.clone()],
                    );
                    for m in touching_methods(new_cmd, &node) {
                        b.modified_method(&m);
                    }
                    dropped_vars.push(node);
                }
                Some(_) => {}
            }
        }
        if old_class.superclass != new_class.superclass {
            for m in &new_class.methods {
                if old_class.method(&m.selector).is_some() {
                    b.modified_method(&MethodRef::new(&new_class.name, &m.selector));
                }
            }
        }
    }

    for new_class in &new.classes {
        let Some(old_class) = old.class(&new_class.name) else {
            b.add(
                ChangeEntry::new(Granularity::Class, ChangeKind::Added, &new_class.name),
                class_nodes(new_class),
            );
            continue;
        };
        for m in &new_class.methods {
            if old_class.method(&m.selector).is_none() {
                let mref = MethodRef::new(&new_class.name, &m.selector);
                b.add(
                    ChangeEntry::new(Granularity::Method, ChangeKind::Added, mref.to_string()),
                    [CmdNode::Method(mref)],
                );
            }
        }
        for v in &new_class.instance_vars {
            if old_class.var(&v.name).is_none() {
                let node = CmdNode::data(&new_class.name, &v.name);
                b.add(
                    ChangeEntry::new(Granularity::Variable, ChangeKind::Added, node.to_string()),
                    [node],
                );
            }
        }
    }

    for var in &dropped_vars {
        for m in touching_methods(old_cmd, var) {
            if survives(&m) {
                b.modified_method(&m);
            }
        }
    }
    for callee in &deleted_methods {
        for m in callers(old_cmd, callee) {
            if survives(&m) {
                b.modified_method(&m);
            }
        }
    }

    let old_edges = edge_keys(old_cmd);
    let new_edges = edge_keys(new_cmd);
    let marked_edges = old_edges
        .symmetric_difference(&new_edges)
        .cloned()
        .collect();

    ChangeSet {
        entries: b.entries.into_iter().collect(),
        marked_nodes: b.nodes,
        marked_edges,
    }
}

/// Builds both diagrams and classifies the changes between them.
pub fn diff_models(old: &ProgramModel, new: &ProgramModel) -> Result<ChangeSet, ResolutionError> {
    let old_cmd = build_cmd(old)?;
    let new_cmd = build_cmd(new)?;
    Ok(diff(old, &old_cmd, new, &new_cmd))
}

/// Nodes of the new diagram that a change set can affect.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImpactSet {
    pub methods: BTreeSet<MethodRef>,
    pub variables: BTreeSet<DataRef>,
    pub seed: ChangeSet,
    /// Methods the seed removed; they have no node in the new diagram.
    pub deleted_methods: BTreeSet<MethodRef>,
}

impl ImpactSet {
    pub fn is_empty(&self) -> bool {
        self.methods.is_empty() && self.variables.is_empty()
    }

    pub fn contains(&self, node: &CmdNode) -> bool {
        match node {
            CmdNode::Method(m) => self.methods.contains(m),
            CmdNode::Data(d) => self.variables.contains(d),
        }
    }

    /// `METHOD C.s` and `VARIABLE C.x` lines, methods first.
    pub fn report(&self) -> String {
        let mut out = String::new();
        for m in &self.methods {
            out.push_str(&format!("METHOD {m}\n"));
        }
        for v in &self.variables {
            out.push_str(&format!("VARIABLE {v}\n"));
        }
        out
    }
}

/// Every node with a dependency path to a seed: a single search over the
/// transposed diagram with inheritance edges removed.
pub fn impact(cmd_new: &ClassMessageDiagram, changes: &ChangeSet) -> ImpactSet {
    let reached = reachable_from(&cmd_new.dependents_graph(), changes.seeds(cmd_new));
    let mut result = ImpactSet {
        seed: changes.clone(),
        deleted_methods: changes.deleted_methods(cmd_new),
        ..ImpactSet::default()
    };
    for id in reached {
        match cmd_new.node(id) {
            CmdNode::Method(m) => {
                result.methods.insert(m.clone());
            }
            CmdNode::Data(d) => {
                result.variables.insert(d.clone());
            }
        }
    }
    result
}

/// Class dependency digraph: `C -> D` when an edge of the diagram runs from
/// an element of `C` to an element of `D`, and in both directions between a
/// class and its superclass. Self-loops are dropped.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassGraph {
    pub classes: Vec<String>,
    pub graph: SimpleDigraph,
}

impl ClassGraph {
    pub fn new(model: &ProgramModel, cmd: &ClassMessageDiagram) -> Self {
        let classes: Vec<String> = model.classes.iter().map(|c| c.name.clone()).collect();
        let index: BTreeMap<&str, usize> = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let mut graph = SimpleDigraph::new(classes.len());
        let mut link = |a: &str, b: &str| {
            if let (Some(&u), Some(&v)) = (index.get(a), index.get(b)) {
                if u != v {
                    graph.add_edge(u, v);
                }
            }
        };
        for edge in cmd.edges() {
            link(cmd.node(edge.src).class(), cmd.node(edge.dst).class());
        }
        for class in &model.classes {
            if let Some(sup) = &class.superclass {
                link(&class.name, sup);
                link(sup, &class.name);
            }
        }
        Self { classes, graph }
    }

    pub fn index_of(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn strong_components(&self) -> Vec<BTreeSet<String>> {
        strong_components(&self.graph)
            .into_iter()
            .map(|c| c.into_iter().map(|i| self.classes[i].clone()).collect())
            .collect()
    }
}

/// Classes that depend, transitively, on a class owning a changed element.
pub fn class_level_impact(
    model: &ProgramModel,
    cmd: &ClassMessageDiagram,
    changes: &ChangeSet,
) -> BTreeSet<String> {
    let cg = ClassGraph::new(model, cmd);
    let seeds: BTreeSet<usize> = changes
        .seeds(cmd)
        .into_iter()
        .filter_map(|id| cg.index_of(cmd.node(id).class()))
        .collect();
    reachable_from(&transpose(&cg.graph), seeds)
        .into_iter()
        .map(|i| cg.classes[i].clone())
        .collect()
}

/// Number of methods declared by the given classes.
pub fn methods_in_classes(model: &ProgramModel, classes: &BTreeSet<String>) -> usize {
    model
        .classes
        .iter()
        .filter(|c| classes.contains(&c.name))
        .map(|c| c.methods.len())
        .sum()
}

/// `1 - impacted / total`, or 0 when `total` is 0.
pub fn reduction_ratio(impacted_methods: usize, total_methods_in_impacted_classes: usize) -> f64 {
    if total_methods_in_impacted_classes == 0 {
        return 0.0;
    }
    1.0 - impacted_methods as f64 / total_methods_in_impacted_classes as f64
}
