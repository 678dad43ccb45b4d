//! Interaction coverage of a trace set measured on a class message diagram.
//!
//! | criterion           | one requirement per                                   |
//! |---------------------|-------------------------------------------------------|
//! | `method`            | method node                                           |
//! | `message`           | call site with unlabeled message edges                |
//! | `poly-message`      | message, self or super edge                           |
//! | `boundary-interior` | poly-message edge, plus 0/1/many turns of each cycle  |
//! | `complete-path`     | maximal source-to-sink path of call edges             |

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::cmd::{ClassMessageDiagram, CmdEdge, EdgeLabel, NodeId};
use crate::graph::{simple_cycles, strong_components, Condensation};
use crate::model::SiteId;
use crate::regression::{CallFrame, TraceStore};

pub const DEFAULT_CYCLE_CAP: usize = 10_000;
pub const DEFAULT_PATH_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Criterion {
    Method,
    Message,
    PolyMessage,
    BoundaryInterior,
    CompletePath,
}

impl Criterion {
    pub const ALL: [Criterion; 5] = [
        Criterion::Method,
        Criterion::Message,
        Criterion::PolyMessage,
        Criterion::BoundaryInterior,
        Criterion::CompletePath,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Method => "METHOD",
            Criterion::Message => "MESSAGE",
            Criterion::PolyMessage => "POLY_MESSAGE",
            Criterion::BoundaryInterior => "BOUNDARY_INTERIOR",
            Criterion::CompletePath => "COMPLETE_PATH",
        }
    }

    /// Command-line spelling.
    pub fn flag_name(self) -> &'static str {
        match self {
            Criterion::Method => "method",
            Criterion::Message => "message",
            Criterion::PolyMessage => "poly-message",
            Criterion::BoundaryInterior => "boundary-interior",
            Criterion::CompletePath => "complete-path",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Criterion::ALL
            .into_iter()
            .find(|c| c.flag_name() == s || c.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown criterion `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CoverageError {
    #[error("test `{test}`: no diagram edge for call {call}")]
    TraceMismatch { test: String, call: String },
    #[error("more than {cap} simple cycles in the message graph")]
    CycleCapExceeded { cap: usize },
    #[error("message graph is cyclic; strong component {{{}}}", component.join(", "))]
    CyclicCmd { component: Vec<String> },
    #[error("more than {cap} complete paths")]
    PathCapExceeded { cap: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub criterion: Criterion,
    pub covered: usize,
    pub required: usize,
    pub ratio: f64,
    pub uncovered: Vec<String>,
}

impl CoverageReport {
    fn from_requirements(criterion: Criterion, reqs: Vec<(String, bool)>) -> Self {
        let required = reqs.len();
        let uncovered: Vec<String> = reqs.into_iter().filter(|r| !r.1).map(|r| r.0).collect();
        let covered = required - uncovered.len();
        let ratio = if required == 0 {
            1.0
        } else {
            covered as f64 / required as f64
        };
        Self {
            criterion,
            covered,
            required,
            ratio,
            uncovered,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.covered == self.required
    }

    /// `CRITERION covered/required ratio`, then one `uncovered` line per
    /// unmet requirement.
    pub fn report(&self) -> String {
        let mut out = format!(
            "{} {}/{} {:.4}\n",
            self.criterion, self.covered, self.required, self.ratio
        );
        for u in &self.uncovered {
            let _ = writeln!(out, "uncovered {u}");
        }
        out
    }
}

/// Diagram elements exercised by a trace set. Edges are indices into
/// [`ClassMessageDiagram::edges`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoveredElements {
    pub methods: BTreeSet<NodeId>,
    pub edges: BTreeSet<usize>,
}

/// One activation of a test's call tree with the diagram edges its call may
/// have traversed (empty for roots).
#[derive(Debug, Clone)]
struct Step {
    node: NodeId,
    edges: Vec<usize>,
    children: Vec<Step>,
}

#[derive(Debug, Clone)]
struct MappedTest {
    roots: Vec<Step>,
}

impl MappedTest {
    fn walk<'a>(&'a self, mut f: impl FnMut(&'a Step, Option<&'a Step>)) {
        let mut stack: Vec<(&Step, Option<&Step>)> =
            self.roots.iter().rev().map(|r| (r, None)).collect();
        while let Some((step, parent)) = stack.pop() {
            f(step, parent);
            stack.extend(step.children.iter().rev().map(|c| (c, Some(step))));
        }
    }

    /// Edge sets of the calls in `enter` order.
    fn sequence(&self) -> Vec<&[usize]> {
        let mut out = Vec::new();
        self.walk(|step, parent| {
            if parent.is_some() {
                out.push(step.edges.as_slice());
            }
        });
        out
    }
}

struct Mapper<'a> {
    cmd: &'a ClassMessageDiagram,
    calls: BTreeMap<(NodeId, NodeId), Vec<usize>>,
}

impl<'a> Mapper<'a> {
    fn new(cmd: &'a ClassMessageDiagram) -> Self {
        let mut calls: BTreeMap<(NodeId, NodeId), Vec<usize>> = BTreeMap::new();
        for (i, e) in cmd.edges().iter().enumerate() {
            if e.label.is_call() {
                calls.entry((e.src, e.dst)).or_default().push(i);
            }
        }
        Self { cmd, calls }
    }

    fn frame(
        &self,
        test: &str,
        frame: &CallFrame,
        caller: Option<NodeId>,
    ) -> Result<Step, CoverageError> {
        let mismatch = |what: String| CoverageError::TraceMismatch {
            test: test.to_string(),
            call: what,
        };
        let node = self
            .cmd
            .method_id(&frame.method)
            .ok_or_else(|| mismatch(format!("entering unknown method {}", frame.method)))?;
        let edges = match caller {
            None => Vec::new(),
            Some(c) => {
                let candidates = self.calls.get(&(c, node)).map(Vec::as_slice).unwrap_or(&[]);
                let matched: Vec<usize> = candidates
                    .iter()
                    .copied()
                    .filter(|&i| match frame.site {
                        Some(ord) => {
                            self.cmd.edges()[i].label.site().map(|s| s.ordinal) == Some(ord)
                        }
                        None => true,
                    })
                    .collect();
                if matched.is_empty() {
                    let site = frame.site.map(|s| format!("#{s}")).unwrap_or_default();
                    return Err(mismatch(format!(
                        "{}{site} -> {}",
                        self.cmd.node(c),
                        frame.method
                    )));
                }
                matched
            }
        };
        let children = frame
            .children
            .iter()
            .map(|child| self.frame(test, child, Some(node)))
            .collect::<Result<_, _>>()?;
        Ok(Step {
            node,
            edges,
            children,
        })
    }
}

fn map_all(
    cmd: &ClassMessageDiagram,
    traces: &TraceStore,
) -> Result<Vec<MappedTest>, CoverageError> {
    let mapper = Mapper::new(cmd);
    traces
        .tests()
        .map(|t| {
            let roots = t
                .roots
                .iter()
                .map(|r| mapper.frame(&t.test_id, r, None))
                .collect::<Result<_, _>>()?;
            Ok(MappedTest { roots })
        })
        .collect()
}

fn covered_of(tests: &[MappedTest]) -> CoveredElements {
    let mut covered = CoveredElements::default();
    for t in tests {
        t.walk(|step, _| {
            covered.methods.insert(step.node);
            covered.edges.extend(step.edges.iter().copied());
        });
    }
    covered
}

/// Visited methods and traversed call edges. A call recorded with a site
/// covers the edge of that site; without one it covers every call edge from
/// the caller to the callee.
pub fn map_traces(
    cmd: &ClassMessageDiagram,
    traces: &TraceStore,
) -> Result<CoveredElements, CoverageError> {
    Ok(covered_of(&map_all(cmd, traces)?))
}

fn describe_edge(cmd: &ClassMessageDiagram, e: &CmdEdge) -> String {
    let ord = e.label.site().map(|s| s.ordinal).unwrap_or_default();
    format!(
        "{} {}#{ord} -> {}",
        e.label.short_name(),
        cmd.node(e.src),
        cmd.node(e.dst)
    )
}

pub fn method_coverage(cmd: &ClassMessageDiagram, covered: &CoveredElements) -> CoverageReport {
    let reqs = cmd
        .method_ids()
        .map(|id| (cmd.node(id).to_string(), covered.methods.contains(&id)))
        .collect();
    CoverageReport::from_requirements(Criterion::Method, reqs)
}

pub fn message_coverage(cmd: &ClassMessageDiagram, covered: &CoveredElements) -> CoverageReport {
    let mut groups: BTreeMap<&SiteId, bool> = BTreeMap::new();
    for (i, e) in cmd.edges().iter().enumerate() {
        if let EdgeLabel::Message { site, .. } = &e.label {
            *groups.entry(site).or_default() |= covered.edges.contains(&i);
        }
    }
    let reqs = groups
        .into_iter()
        .map(|(site, hit)| (site.to_string(), hit))
        .collect();
    CoverageReport::from_requirements(Criterion::Message, reqs)
}

fn poly_requirements(cmd: &ClassMessageDiagram, covered: &CoveredElements) -> Vec<(String, bool)> {
    cmd.edges()
        .iter()
        .enumerate()
        .filter(|(_, e)| e.label.is_call())
        .map(|(i, e)| (describe_edge(cmd, e), covered.edges.contains(&i)))
        .collect()
}

pub fn poly_message_coverage(
    cmd: &ClassMessageDiagram,
    covered: &CoveredElements,
) -> CoverageReport {
    CoverageReport::from_requirements(Criterion::PolyMessage, poly_requirements(cmd, covered))
}

/// Completed turns of `cycle` in one test: an activation completes a turn
/// when the run of consecutive cycle calls ending at it has a length that is
/// a positive multiple of the cycle length.
fn turns(test: &MappedTest, cycle: &[NodeId]) -> usize {
    let k = cycle.len();
    let next: BTreeMap<NodeId, NodeId> = (0..k).map(|i| (cycle[i], cycle[(i + 1) % k])).collect();
    let mut count = 0;
    fn visit(
        step: &Step,
        run: usize,
        next: &BTreeMap<NodeId, NodeId>,
        k: usize,
        count: &mut usize,
    ) {
        for child in &step.children {
            let r = if next.get(&step.node) == Some(&child.node) {
                run + 1
            } else {
                0
            };
            if r > 0 && r % k == 0 {
                *count += 1;
            }
            visit(child, r, next, k, count);
        }
    }
    for root in &test.roots {
        visit(root, 0, &next, k, &mut count);
    }
    count
}

pub fn boundary_interior(
    cmd: &ClassMessageDiagram,
    traces: &TraceStore,
    cycle_cap: usize,
) -> Result<CoverageReport, CoverageError> {
    let tests = map_all(cmd, traces)?;
    let covered = covered_of(&tests);
    let mut reqs = poly_requirements(cmd, &covered);
    let g = cmd.message_graph();
    let cycles =
        simple_cycles(&g, cycle_cap).map_err(|e| CoverageError::CycleCapExceeded { cap: e.cap })?;
    let cond = Condensation::new(&g);
    for cycle in &cycles {
        let scc = &cond.members[cond.component_of[cycle[0]]];
        let mut names: Vec<String> = cycle.iter().map(|&u| cmd.node(u).to_string()).collect();
        names.push(names[0].clone());
        let desc = format!("cycle {}", names.join(" -> "));
        let (mut zero, mut once, mut many) = (false, false, false);
        for t in &tests {
            let mut touches = false;
            t.walk(|step, _| touches |= scc.contains(&step.node));
            let n = turns(t, cycle);
            zero |= touches && n == 0;
            once |= n == 1;
            many |= n >= 2;
        }
        reqs.push((format!("{desc} x0"), zero));
        reqs.push((format!("{desc} x1"), once));
        reqs.push((format!("{desc} x2+"), many));
    }
    Ok(CoverageReport::from_requirements(
        Criterion::BoundaryInterior,
        reqs,
    ))
}

/// Maximal paths over call edges, from methods without incoming calls to
/// methods without outgoing ones. Requires an acyclic message graph.
pub fn complete_paths(
    cmd: &ClassMessageDiagram,
    cap: usize,
) -> Result<Vec<Vec<usize>>, CoverageError> {
    let g = cmd.message_graph();
    if let Some(scc) = strong_components(&g).into_iter().next() {
        return Err(CoverageError::CyclicCmd {
            component: scc.into_iter().map(|u| cmd.node(u).to_string()).collect(),
        });
    }
    let mut out_edges: Vec<Vec<usize>> = vec![Vec::new(); cmd.node_count()];
    let mut has_in = vec![false; cmd.node_count()];
    for (i, e) in cmd.edges().iter().enumerate() {
        if e.label.is_call() {
            out_edges[e.src].push(i);
            has_in[e.dst] = true;
        }
    }
    let mut paths = Vec::new();
    let mut stack: Vec<(NodeId, Vec<usize>)> = cmd
        .method_ids()
        .filter(|&u| !has_in[u] && !out_edges[u].is_empty())
        .map(|u| (u, Vec::new()))
        .collect();
    stack.reverse();
    while let Some((u, path)) = stack.pop() {
        if out_edges[u].is_empty() {
            if paths.len() == cap {
                return Err(CoverageError::PathCapExceeded { cap });
            }
            paths.push(path);
            continue;
        }
        for &i in out_edges[u].iter().rev() {
            let mut p = path.clone();
            p.push(i);
            stack.push((cmd.edges()[i].dst, p));
        }
    }
    Ok(paths)
}

fn contains_in_order(sequence: &[&[usize]], path: &[usize]) -> bool {
    let mut need = path.iter().peekable();
    for step in sequence {
        if let Some(&&e) = need.peek() {
            if step.contains(&e) {
                need.next();
            }
        }
    }
    need.peek().is_none()
}

pub fn complete_path_coverage(
    cmd: &ClassMessageDiagram,
    traces: &TraceStore,
    path_cap: usize,
) -> Result<CoverageReport, CoverageError> {
    let paths = complete_paths(cmd, path_cap)?;
    let tests = map_all(cmd, traces)?;
    let sequences: Vec<Vec<&[usize]>> = tests.iter().map(MappedTest::sequence).collect();
    let reqs = paths
        .iter()
        .map(|path| {
            let mut desc = cmd.node(cmd.edges()[path[0]].src).to_string();
            for &i in path {
                let e = &cmd.edges()[i];
                let ord = e.label.site().map(|s| s.ordinal).unwrap_or_default();
                let _ = write!(
                    desc,
                    " -{}#{ord}-> {}",
                    e.label.short_name(),
                    cmd.node(e.dst)
                );
            }
            let hit = sequences.iter().any(|s| contains_in_order(s, path));
            (desc, hit)
        })
        .collect();
    Ok(CoverageReport::from_requirements(
        Criterion::CompletePath,
        reqs,
    ))
}

/// Evaluates one criterion.
pub fn evaluate(
    cmd: &ClassMessageDiagram,
    traces: &TraceStore,
    criterion: Criterion,
    cycle_cap: usize,
) -> Result<CoverageReport, CoverageError> {
    match criterion {
        Criterion::Method => Ok(method_coverage(cmd, &map_traces(cmd, traces)?)),
        Criterion::Message => Ok(message_coverage(cmd, &map_traces(cmd, traces)?)),
        Criterion::PolyMessage => Ok(poly_message_coverage(cmd, &map_traces(cmd, traces)?)),
        Criterion::BoundaryInterior => boundary_interior(cmd, traces, cycle_cap),
        Criterion::CompletePath => complete_path_coverage(cmd, traces, DEFAULT_PATH_CAP),
    }
}
