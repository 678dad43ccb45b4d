//! Simple directed graphs over dense node indices and the algorithms the
//! analyses share: transpose, reachability, strong components, condensation,
//! leveling and simple-cycle enumeration.

use std::collections::{BTreeSet, VecDeque};

use thiserror::Error;

/// Directed graph without parallel edges. Self-loops are allowed.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SimpleDigraph {
    succ: Vec<BTreeSet<usize>>,
}

impl SimpleDigraph {
    pub fn new(node_count: usize) -> Self {
        Self {
            succ: vec![BTreeSet::new(); node_count],
        }
    }

    pub fn from_edges(node_count: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::new(node_count);
        for (u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn node_count(&self) -> usize {
        self.succ.len()
    }

    pub fn edge_count(&self) -> usize {
        self.succ.iter().map(BTreeSet::len).sum()
    }

    /// Returns false if the edge was already present.
    pub fn add_edge(&mut self, u: usize, v: usize) -> bool {
        assert!(v < self.succ.len(), "edge target {v} out of range");
        self.succ[u].insert(v)
    }

    pub fn remove_edge(&mut self, u: usize, v: usize) -> bool {
        self.succ[u].remove(&v)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.succ[u].contains(&v)
    }

    pub fn successors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.succ[u].iter().copied()
    }

    pub fn out_degree(&self, u: usize) -> usize {
        self.succ[u].len()
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.node_count()];
        for (_, v) in self.edges() {
            deg[v] += 1;
        }
        deg
    }

    /// All edges in `(source, target)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    /// Graph over the same node indices keeping only edges between `keep` nodes.
    pub fn induced(&self, keep: &BTreeSet<usize>) -> SimpleDigraph {
        let mut g = SimpleDigraph::new(self.node_count());
        for &u in keep {
            for v in self.successors(u) {
                if keep.contains(&v) {
                    g.add_edge(u, v);
                }
            }
        }
        g
    }
}

/// Reverses every edge.
pub fn transpose(g: &SimpleDigraph) -> SimpleDigraph {
    SimpleDigraph::from_edges(g.node_count(), g.edges().map(|(u, v)| (v, u)))
}

/// Nodes reachable from any seed, seeds included. One traversal overall.
pub fn reachable_from(
    g: &SimpleDigraph,
    seeds: impl IntoIterator<Item = usize>,
) -> BTreeSet<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut stack: Vec<usize> = Vec::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(u) = stack.pop() {
        for v in g.successors(u) {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect()
}

/// Every strongly connected component (Tarjan), sinks first: if an edge runs
/// from component `a` to component `b`, `b` is listed before `a`.
pub fn tarjan_components(g: &SimpleDigraph) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = g.node_count();
    let adj: Vec<Vec<usize>> = (0..n).map(|u| g.successors(u).collect()).collect();
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut counter = 0;
    let mut components = Vec::new();

    for start in 0..n {
        if index[start] != UNVISITED {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        index[start] = counter;
        low[start] = counter;
        counter += 1;
        stack.push(start);
        on_stack[start] = true;

        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    component.sort_unstable();
                    components.push(component);
                }
            }
        }
    }
    components
}

/// Cyclic strong components: size at least two, or a single node with a
/// self-loop. Sorted by smallest member.
pub fn strong_components(g: &SimpleDigraph) -> Vec<BTreeSet<usize>> {
    let mut out: Vec<BTreeSet<usize>> = tarjan_components(g)
        .into_iter()
        .filter(|c| c.len() > 1 || g.has_edge(c[0], c[0]))
        .map(|c| c.into_iter().collect())
        .collect();
    out.sort_by_key(|c| c.first().copied());
    out
}

/// Graph with each strong component collapsed to one supernode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Condensation {
    /// Supernode index of every original node.
    pub component_of: Vec<usize>,
    pub members: Vec<BTreeSet<usize>>,
    /// Edges between distinct supernodes.
    pub dag: SimpleDigraph,
}

impl Condensation {
    pub fn new(g: &SimpleDigraph) -> Self {
        let components = tarjan_components(g);
        let mut component_of = vec![0; g.node_count()];
        for (ci, comp) in components.iter().enumerate() {
            for &u in comp {
                component_of[u] = ci;
            }
        }
        let mut dag = SimpleDigraph::new(components.len());
        for (u, v) in g.edges() {
            let (cu, cv) = (component_of[u], component_of[v]);
            if cu != cv {
                dag.add_edge(cu, cv);
            }
        }
        Self {
            component_of,
            members: components
                .into_iter()
                .map(|c| c.into_iter().collect())
                .collect(),
            dag,
        }
    }

    /// Whether supernode `c` stands for a cycle of `g`.
    pub fn is_cyclic(&self, c: usize, g: &SimpleDigraph) -> bool {
        let m = &self.members[c];
        m.len() > 1 || m.iter().any(|&u| g.has_edge(u, u))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("graph contains a cycle through {remaining} node(s)")]
pub struct CycleError {
    pub remaining: usize,
}

/// Levels of the condensation: a supernode's level is the length of the
/// longest path from it to a sink, so level 0 holds the sinks. Each level lists
/// supernode indices in increasing order.
pub fn topological_levels(
    g: &SimpleDigraph,
    condensed: &Condensation,
) -> Result<Vec<Vec<usize>>, CycleError> {
    debug_assert_eq!(g.node_count(), condensed.component_of.len());
    dag_levels(&condensed.dag)
}

/// Longest-path-to-sink leveling of an acyclic graph.
pub fn dag_levels(dag: &SimpleDigraph) -> Result<Vec<Vec<usize>>, CycleError> {
    let n = dag.node_count();
    let reverse = transpose(dag);
    let mut remaining_out: Vec<usize> = (0..n).map(|u| dag.out_degree(u)).collect();
    let mut frontier: Vec<usize> = (0..n).filter(|&u| remaining_out[u] == 0).collect();
    let mut levels = Vec::new();
    let mut placed = 0;
    while !frontier.is_empty() {
        frontier.sort_unstable();
        placed += frontier.len();
        let mut next = Vec::new();
        for &v in &frontier {
            for u in reverse.successors(v) {
                remaining_out[u] -= 1;
                if remaining_out[u] == 0 {
                    next.push(u);
                }
            }
        }
        levels.push(std::mem::replace(&mut frontier, next));
    }
    if placed != n {
        return Err(CycleError {
            remaining: n - placed,
        });
    }
    Ok(levels)
}

pub fn is_acyclic(g: &SimpleDigraph) -> bool {
    dag_levels(g).is_ok()
}

/// Nodes in an order where every edge points to an earlier node (sinks first),
/// ties broken by `rank`.
pub fn sink_first_order<K: Ord>(
    g: &SimpleDigraph,
    nodes: &BTreeSet<usize>,
    rank: impl Fn(usize) -> K,
) -> Result<Vec<usize>, CycleError> {
    let sub = g.induced(nodes);
    let reverse = transpose(&sub);
    let mut remaining: Vec<usize> = (0..g.node_count()).map(|u| sub.out_degree(u)).collect();
    let mut ready: BTreeSet<(K, usize)> = nodes
        .iter()
        .filter(|&&u| remaining[u] == 0)
        .map(|&u| (rank(u), u))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(first) = ready.pop_first() {
        let v = first.1;
        order.push(v);
        for u in reverse.successors(v) {
            remaining[u] -= 1;
            if remaining[u] == 0 {
                ready.insert((rank(u), u));
            }
        }
    }
    if order.len() != nodes.len() {
        return Err(CycleError {
            remaining: nodes.len() - order.len(),
        });
    }
    Ok(order)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("more than {cap} simple cycles")]
pub struct CycleCapExceeded {
    pub cap: usize,
}

/// All elementary cycles (Johnson's algorithm). Each cycle is reported once,
/// starting at its smallest node. Fails as soon as more than `cap` are found.
pub fn simple_cycles(g: &SimpleDigraph, cap: usize) -> Result<Vec<Vec<usize>>, CycleCapExceeded> {
    let n = g.node_count();
    let mut cycles = Vec::new();
    for s in 0..n {
        let allowed: BTreeSet<usize> = (s..n).collect();
        let sub = g.induced(&allowed);
        let comp = tarjan_components(&sub)
            .into_iter()
            .find(|c| c.contains(&s))
            .unwrap_or_default();
        if comp.len() == 1 && !sub.has_edge(s, s) {
            continue;
        }
        let comp: BTreeSet<usize> = comp.into_iter().collect();
        let mut search = Johnson {
            g: &sub,
            comp: &comp,
            start: s,
            blocked: vec![false; n],
            blocked_by: vec![BTreeSet::new(); n],
            path: Vec::new(),
            cycles: &mut cycles,
            cap,
        };
        search.circuit(s)?;
    }
    Ok(cycles)
}

struct Johnson<'a> {
    g: &'a SimpleDigraph,
    comp: &'a BTreeSet<usize>,
    start: usize,
    blocked: Vec<bool>,
    blocked_by: Vec<BTreeSet<usize>>,
    path: Vec<usize>,
    cycles: &'a mut Vec<Vec<usize>>,
    cap: usize,
}

impl Johnson<'_> {
    fn circuit(&mut self, v: usize) -> Result<bool, CycleCapExceeded> {
        let mut found = false;
        self.path.push(v);
        self.blocked[v] = true;
        let succ: Vec<usize> = self
            .g
            .successors(v)
            .filter(|w| self.comp.contains(w))
            .collect();
        for &w in &succ {
            if w == self.start {
                if self.cycles.len() == self.cap {
                    return Err(CycleCapExceeded { cap: self.cap });
                }
                self.cycles.push(self.path.clone());
                found = true;
            } else if !self.blocked[w] && self.circuit(w)? {
                found = true;
            }
        }
        if found {
            self.unblock(v);
        } else {
            for &w in &succ {
                self.blocked_by[w].insert(v);
            }
        }
        self.path.pop();
        Ok(found)
    }

    fn unblock(&mut self, u: usize) {
        let mut queue = VecDeque::from([u]);
        while let Some(x) = queue.pop_front() {
            if !self.blocked[x] {
                continue;
            }
            self.blocked[x] = false;
            queue.extend(std::mem::take(&mut self.blocked_by[x]));
        }
    }
}
