//! Random models, random traces and independent reference implementations
//! shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use cmdkit::change::{ChangeSet, EdgeKey};
use cmdkit::cmd::{ClassMessageDiagram, CmdNode, EdgeLabel, NodeId};
use cmdkit::graph::SimpleDigraph;
use cmdkit::model::{
    synthesize_default_constructors, validate, ClassDef, Dispatch, MethodDef, ProgramModel,
    VarDecl, VarRef, CONSTRUCTOR,
};
use cmdkit::strategy::{StrategyItem, TestStrategy};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_CLASSES: usize = 15;
pub const MAX_METHODS: usize = 60;

const SELECTORS: [&str; 8] = [
    "run", "get", "put", "notify", "update", "draw", "size", "reset",
];
const VARS: [&str; 4] = ["a", "b", "c", "d"];

pub fn fixture(name: &str) -> String {
    let path = format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

pub fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// Parses a fixture and synthesizes constructors; the model id is the stem.
pub fn load_fixture(name: &str) -> ProgramModel {
    let mut m = synthesize_default_constructors(&cmdkit::dsl::parse_model(&fixture(name)).unwrap());
    m.model_id = name.trim_end_matches(".mdl").to_string();
    m
}

fn fill_body(rng: &mut ChaCha8Rng, model: &ProgramModel, class: &str, method: &mut MethodDef) {
    let h = model.hierarchy();
    let chain = h.chain(class);
    let visible: Vec<&str> = chain
        .iter()
        .flat_map(|c| c.methods.iter().map(|m| m.selector.as_str()))
        .collect();
    let above: Vec<&str> = chain[1..]
        .iter()
        .flat_map(|c| c.methods.iter().map(|m| m.selector.as_str()))
        .collect();
    let anywhere: Vec<&str> = model
        .classes
        .iter()
        .flat_map(|c| c.methods.iter().map(|m| m.selector.as_str()))
        .filter(|s| *s != CONSTRUCTOR)
        .collect();
    for _ in 0..rng.gen_range(0..=4) {
        match rng.gen_range(0..4) {
            0 => {
                if let Some(s) = visible.choose(rng) {
                    method.push_call(Dispatch::SelfSend, *s);
                }
            }
            1 => {
                if let Some(s) = above.choose(rng) {
                    method.push_call(Dispatch::Super, *s);
                }
            }
            2 => {
                let target = &model.classes[rng.gen_range(0..model.classes.len())].name;
                let mut options: Vec<&str> = h
                    .chain(target)
                    .iter()
                    .flat_map(|c| c.methods.iter().map(|m| m.selector.as_str()))
                    .collect();
                options.push(CONSTRUCTOR);
                let s = options.choose(rng).unwrap();
                method.push_call(Dispatch::Typed(target.clone()), *s);
            }
            _ => {
                if let Some(s) = anywhere.choose(rng) {
                    method.push_call(Dispatch::Untyped, *s);
                }
            }
        }
    }
    let vars: Vec<VarRef> = chain
        .iter()
        .flat_map(|c| {
            c.instance_vars
                .iter()
                .map(|v| VarRef::new(&c.name, &v.name))
        })
        .collect();
    if !vars.is_empty() {
        for _ in 0..rng.gen_range(0..=2) {
            method.var_uses.insert(vars.choose(rng).unwrap().clone());
        }
        for _ in 0..rng.gen_range(0..=1) {
            method.var_defs.insert(vars.choose(rng).unwrap().clone());
        }
    }
}

/// A valid model with constructors synthesized: at most 15 classes and 60
/// methods, single inheritance, every dispatch kind.
pub fn random_model(seed: u64) -> ProgramModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=MAX_CLASSES);
    let mut model = ProgramModel::new(format!("random{seed}"));
    let mut budget = MAX_METHODS - n;
    for i in 0..n {
        let mut class = ClassDef::new(format!("C{i}"));
        if i > 0 && rng.gen_bool(0.6) {
            class.superclass = Some(format!("C{}", rng.gen_range(0..i)));
        }
        class.is_abstract = rng.gen_bool(0.1);
        let mut vars = VARS.to_vec();
        vars.shuffle(&mut rng);
        for v in vars.into_iter().take(rng.gen_range(0..=2)) {
            let declared_type = rng
                .gen_bool(0.5)
                .then(|| format!("C{}", rng.gen_range(0..n)));
            class.instance_vars.push(VarDecl {
                name: v.to_string(),
                declared_type,
            });
        }
        if budget > 0 && rng.gen_bool(0.2) {
            let mut ctor = MethodDef::new(CONSTRUCTOR);
            ctor.is_constructor = true;
            class.methods.push(ctor);
            budget -= 1;
        }
        let mut sels = SELECTORS.to_vec();
        sels.shuffle(&mut rng);
        let k = rng.gen_range(0..=4).min(budget);
        for s in sels.into_iter().take(k) {
            let mut m = MethodDef::new(s);
            if rng.gen_bool(0.5) {
                m.body_fingerprint = Some(format!("h{}", rng.gen_range(0..1000)));
            }
            class.methods.push(m);
        }
        budget -= k;
        model.classes.push(class);
    }
    let skeleton = synthesize_default_constructors(&model);
    for ci in 0..model.classes.len() {
        let name = model.classes[ci].name.clone();
        for mi in 0..model.classes[ci].methods.len() {
            let mut method = model.classes[ci].methods[mi].clone();
            fill_body(&mut rng, &skeleton, &name, &mut method);
            model.classes[ci].methods[mi] = method;
        }
    }
    let model = synthesize_default_constructors(&model);
    let report = validate(&model);
    assert!(
        report.is_valid(),
        "generator produced an invalid model: {:?}",
        report.violations
    );
    assert!(model.method_count() <= MAX_METHODS);
    model
}

/// A second version of `model`: some bodies edited, some calls dropped, maybe
/// a method or a variable removed. Always valid.
pub fn mutate(model: &ProgramModel, seed: u64) -> ProgramModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    for _ in 0..32 {
        let mut m = model.clone();
        m.model_id = format!("{}_v2", model.model_id);
        for class in &mut m.classes {
            for method in &mut class.methods {
                if rng.gen_bool(0.15) {
                    method.body_fingerprint = Some(format!("edited{}", rng.gen_range(0..1000)));
                }
                if !method.call_sites.is_empty() && rng.gen_bool(0.1) {
                    method.call_sites.pop();
                }
            }
        }
        if rng.gen_bool(0.3) {
            let ci = rng.gen_range(0..m.classes.len());
            let class = &mut m.classes[ci];
            if let Some(pos) = (0..class.methods.len()).find(|&i| !class.methods[i].is_constructor)
            {
                class.methods.remove(pos);
            }
        }
        if rng.gen_bool(0.3) {
            let ci = rng.gen_range(0..m.classes.len());
            if let Some(var) = m.classes[ci].instance_vars.pop() {
                let owner = m.classes[ci].name.clone();
                let gone = VarRef::new(&owner, &var.name);
                for class in &mut m.classes {
                    for method in &mut class.methods {
                        method.var_uses.retain(|v| v != &gone);
                        method.var_defs.retain(|v| v != &gone);
                    }
                }
            }
        }
        if validate(&m).is_valid() {
            return m;
        }
    }
    let mut m = model.clone();
    m.model_id = format!("{}_v2", model.model_id);
    m
}

/// Trace text exercising random call paths of `cmd`.
pub fn random_traces(cmd: &ClassMessageDiagram, seed: u64, tests: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let methods: Vec<NodeId> = cmd.method_ids().collect();
    let mut out = String::new();
    fn frame(
        cmd: &ClassMessageDiagram,
        rng: &mut ChaCha8Rng,
        node: NodeId,
        depth: usize,
        out: &mut String,
    ) {
        let calls: Vec<_> = cmd.edges_from(node).filter(|e| e.label.is_call()).collect();
        if depth >= 6 || calls.is_empty() {
            return;
        }
        for _ in 0..rng.gen_range(0..=3) {
            let e = calls.choose(rng).unwrap();
            let site = e.label.site().unwrap().ordinal;
            let indent = "  ".repeat(depth);
            if rng.gen_bool(0.3) {
                let _ = writeln!(out, "{indent}enter {}", cmd.node(e.dst));
            } else {
                let _ = writeln!(out, "{indent}enter {} site={site}", cmd.node(e.dst));
            }
            frame(cmd, rng, e.dst, depth + 1, out);
            let _ = writeln!(out, "{indent}exit");
        }
    }
    if methods.is_empty() {
        return out;
    }
    for t in 0..tests {
        let _ = writeln!(out, "test t{t} criticality={}", rng.gen_range(1..=5));
        for _ in 0..rng.gen_range(1..=2) {
            let root = *methods.choose(&mut rng).unwrap();
            let _ = writeln!(out, "enter {}", cmd.node(root));
            frame(cmd, &mut rng, root, 1, &mut out);
            let _ = writeln!(out, "exit");
        }
    }
    out
}

fn chain_test(
    cmd: &ClassMessageDiagram,
    id: &str,
    start: NodeId,
    steps: &[(NodeId, Option<u32>)],
) -> String {
    let mut out = format!("test {id}\nenter {}\n", cmd.node(start));
    for (depth, (node, site)) in steps.iter().enumerate() {
        let indent = "  ".repeat(depth + 1);
        match site {
            Some(s) => {
                let _ = writeln!(out, "{indent}enter {} site={s}", cmd.node(*node));
            }
            None => {
                let _ = writeln!(out, "{indent}enter {}", cmd.node(*node));
            }
        }
    }
    for depth in (0..=steps.len()).rev() {
        let _ = writeln!(out, "{}exit", "  ".repeat(depth));
    }
    out
}

/// Tests that traverse every call edge, every simple cycle 0, 1 and 2 times
/// (when cycles are few) and every complete path (when the message graph is
/// acyclic and paths are few).
pub fn completing_traces(cmd: &ClassMessageDiagram) -> String {
    let mut out = String::new();
    for (i, e) in cmd.edges().iter().enumerate() {
        if let Some(site) = e.label.site() {
            out.push_str(&chain_test(
                cmd,
                &format!("edge{i}"),
                e.src,
                &[(e.dst, Some(site.ordinal))],
            ));
        }
    }
    let g = cmd.message_graph();
    if let Ok(cycles) = cmdkit::graph::simple_cycles(&g, 200) {
        for (ci, cycle) in cycles.iter().enumerate() {
            let k = cycle.len();
            out.push_str(&chain_test(cmd, &format!("cycle{ci}_0"), cycle[0], &[]));
            for laps in 1..=2 {
                let steps: Vec<(NodeId, Option<u32>)> =
                    (1..=laps * k).map(|j| (cycle[j % k], None)).collect();
                out.push_str(&chain_test(
                    cmd,
                    &format!("cycle{ci}_{laps}"),
                    cycle[0],
                    &steps,
                ));
            }
        }
    }
    if let Ok(paths) = cmdkit::coverage::complete_paths(cmd, 500) {
        for (pi, path) in paths.iter().enumerate() {
            let start = cmd.edges()[path[0]].src;
            let steps: Vec<(NodeId, Option<u32>)> = path
                .iter()
                .map(|&i| {
                    let e = &cmd.edges()[i];
                    (e.dst, e.label.site().map(|s| s.ordinal))
                })
                .collect();
            out.push_str(&chain_test(cmd, &format!("path{pi}"), start, &steps));
        }
    }
    out
}

/// Random simple digraph with up to `n` nodes.
pub fn random_graph(seed: u64, n: usize, p: f64) -> SimpleDigraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(0..=n);
    let mut g = SimpleDigraph::new(n);
    for u in 0..n {
        for v in 0..n {
            if rng.gen_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    g
}

// ---- reference implementations ----

pub fn adjacency(g: &SimpleDigraph) -> Vec<Vec<bool>> {
    let n = g.node_count();
    let mut m = vec![vec![false; n]; n];
    for (u, v) in g.edges() {
        m[u][v] = true;
    }
    m
}

pub fn matrix_transpose(m: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = m.len();
    (0..n).map(|i| (0..n).map(|j| m[j][i]).collect()).collect()
}

/// Reflexive-transitive closure by Warshall's algorithm.
pub fn warshall(m: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let n = m.len();
    let mut c = m.to_vec();
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if c[i][k] {
                let via = c[k].clone();
                for (cell, reach) in c[i].iter_mut().zip(via) {
                    *cell |= reach;
                }
            }
        }
    }
    c
}

pub fn bfs_reach(g: &SimpleDigraph, s: usize) -> BTreeSet<usize> {
    let mut seen = BTreeSet::from([s]);
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for v in g.successors(u) {
            if seen.insert(v) {
                q.push_back(v);
            }
        }
    }
    seen
}

/// Nontrivial strong components by pairwise mutual reachability.
pub fn brute_force_sccs(g: &SimpleDigraph) -> BTreeSet<BTreeSet<usize>> {
    let n = g.node_count();
    let reach: Vec<BTreeSet<usize>> = (0..n).map(|u| bfs_reach(g, u)).collect();
    let mut out = BTreeSet::new();
    for u in 0..n {
        let comp: BTreeSet<usize> = (0..n)
            .filter(|&v| reach[u].contains(&v) && reach[v].contains(&u))
            .collect();
        if comp.len() > 1 || g.has_edge(u, u) {
            out.insert(comp);
        }
    }
    out
}

/// Acyclicity by repeated removal of nodes without successors.
pub fn acyclic_by_peeling(g: &SimpleDigraph, nodes: &BTreeSet<usize>) -> bool {
    let mut alive = nodes.clone();
    loop {
        let sink = alive
            .iter()
            .copied()
            .find(|&u| g.successors(u).all(|v| !alive.contains(&v)));
        match sink {
            Some(u) => {
                alive.remove(&u);
            }
            None => return alive.is_empty(),
        }
    }
}

/// Impacted node ids per the closure oracle: every node with a forward path
/// (inheritance edges ignored) to a seed.
pub fn closure_impact(cmd: &ClassMessageDiagram, changes: &ChangeSet) -> BTreeSet<usize> {
    let forward = cmd.strip_inheritance().collapse_parallel();
    let closure = warshall(&adjacency(&forward));
    let seeds = changes.seeds(cmd);
    (0..cmd.node_count())
        .filter(|&u| seeds.iter().any(|&s| closure[u][s]))
        .collect()
}

/// Method ids each method depends on directly or through variable nodes,
/// in `g`.
pub fn method_dependencies(
    cmd: &ClassMessageDiagram,
    g: &SimpleDigraph,
) -> BTreeMap<usize, BTreeSet<usize>> {
    let mut out = BTreeMap::new();
    for u in cmd.method_ids() {
        let mut deps = BTreeSet::new();
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = g.successors(u).collect();
        while let Some(v) = stack.pop() {
            if !seen.insert(v) {
                continue;
            }
            if cmd.node(v).is_method() {
                deps.insert(v);
            } else {
                stack.extend(g.successors(v));
            }
        }
        out.insert(u, deps);
    }
    out
}

pub fn stubbed_edges(
    cmd: &ClassMessageDiagram,
    strategy: &TestStrategy,
) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for level in &strategy.levels {
        for item in level {
            if let StrategyItem::Component { plan, .. } = item {
                for stub in &plan.edges_to_stub {
                    out.insert((cmd.id_of(&stub.from).unwrap(), cmd.id_of(&stub.to).unwrap()));
                }
            }
        }
    }
    out
}

/// Checks a full-scope strategy: every method exactly once, dependencies at
/// strictly lower levels across items, and replaying the flat order with the
/// stubs in place never uses an untested method.
pub fn check_strategy(cmd: &ClassMessageDiagram, strategy: &TestStrategy) -> Result<(), String> {
    let g = cmd.collapse_parallel();
    let mut item_of: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for (k, level) in strategy.levels.iter().enumerate() {
        if level.is_empty() {
            return Err(format!("level {k} is empty"));
        }
        for (i, item) in level.iter().enumerate() {
            for m in item.methods() {
                let id = cmd.method_id(m).ok_or(format!("{m} not in diagram"))?;
                if item_of.insert(id, (k, i)).is_some() {
                    return Err(format!("{m} emitted twice"));
                }
            }
        }
    }
    if item_of.len() != cmd.method_ids().count() {
        return Err("not every method emitted".into());
    }
    for (u, deps) in method_dependencies(cmd, &g) {
        for v in deps {
            let (lu, iu) = item_of[&u];
            let (lv, iv) = item_of[&v];
            if (lu, iu) != (lv, iv) && lv >= lu {
                return Err(format!(
                    "{} at level {lu} depends on {} at level {lv}",
                    cmd.node(u),
                    cmd.node(v)
                ));
            }
        }
    }
    let mut stubbed = g.clone();
    for (u, v) in stubbed_edges(cmd, strategy) {
        if !stubbed.remove_edge(u, v) {
            return Err("stub names a missing edge".into());
        }
    }
    let order = strategy.flat_order();
    let pos: BTreeMap<usize, usize> = order
        .iter()
        .enumerate()
        .map(|(p, m)| (cmd.method_id(m).unwrap(), p))
        .collect();
    for (u, deps) in method_dependencies(cmd, &stubbed) {
        for v in deps {
            if pos[&v] >= pos[&u] {
                return Err(format!(
                    "{} replayed before its dependency {}",
                    cmd.node(u),
                    cmd.node(v)
                ));
            }
        }
    }
    Ok(())
}

/// Checks every stub plan of a full-scope strategy: removing the stubs leaves
/// the component acyclic, and restoring any single stub recreates a cycle.
pub fn check_stub_plans(
    cmd: &ClassMessageDiagram,
    strategy: &TestStrategy,
) -> Result<usize, String> {
    let g = cmd.collapse_parallel();
    let sccs = brute_force_sccs(&g);
    let mut checked = 0;
    for level in &strategy.levels {
        for item in level {
            let StrategyItem::Component { methods, plan } = item else {
                continue;
            };
            let first = cmd.method_id(&methods[0]).unwrap();
            let members = sccs
                .iter()
                .find(|c| c.contains(&first))
                .ok_or("component is not a strong component")?;
            let mut sub = g.induced(members);
            let stubs: Vec<(usize, usize)> = plan
                .edges_to_stub
                .iter()
                .map(|s| (cmd.id_of(&s.from).unwrap(), cmd.id_of(&s.to).unwrap()))
                .collect();
            for &(u, v) in &stubs {
                sub.remove_edge(u, v);
            }
            if !acyclic_by_peeling(&sub, members) {
                return Err(format!("stubs leave a cycle in {}", item));
            }
            for &(u, v) in &stubs {
                let mut trial = sub.clone();
                trial.add_edge(u, v);
                if acyclic_by_peeling(&trial, members) {
                    return Err(format!(
                        "stub {} -> {} is not needed",
                        cmd.node(u),
                        cmd.node(v)
                    ));
                }
            }
            checked += 1;
        }
    }
    Ok(checked)
}

/// Impacted-scope strategy keeps the relative level order of the full one.
pub fn check_sub_order(full: &TestStrategy, restricted: &TestStrategy) -> Result<(), String> {
    let order = restricted.flat_order();
    for a in &order {
        for b in &order {
            let (fa, fb) = (full.level_of(a).unwrap(), full.level_of(b).unwrap());
            let (ra, rb) = (
                restricted.level_of(a).unwrap(),
                restricted.level_of(b).unwrap(),
            );
            if fa < fb && ra >= rb {
                return Err(format!(
                    "{a} before {b} in full order but not in restricted order"
                ));
            }
        }
    }
    Ok(())
}

pub fn edge_keys(cmd: &ClassMessageDiagram) -> BTreeSet<EdgeKey> {
    cmd.edges()
        .iter()
        .map(|e| EdgeKey {
            src: cmd.node(e.src).clone(),
            dst: cmd.node(e.dst).clone(),
            label: e.label.clone(),
        })
        .collect()
}

pub fn count_label(cmd: &ClassMessageDiagram, pred: impl Fn(&EdgeLabel) -> bool) -> usize {
    cmd.edges().iter().filter(|e| pred(&e.label)).count()
}

pub fn node_names(cmd: &ClassMessageDiagram, ids: &BTreeSet<usize>) -> BTreeSet<String> {
    ids.iter().map(|&i| cmd.node(i).to_string()).collect()
}

pub fn is_data(node: &CmdNode) -> bool {
    !node.is_method()
}
