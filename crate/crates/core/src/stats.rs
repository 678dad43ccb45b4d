//! Size and cycle metrics at class level and at method level.

use std::collections::BTreeSet;

use crate::change::ClassGraph;
use crate::cmd::ClassMessageDiagram;
use crate::graph::{strong_components, SimpleDigraph};
use crate::model::ProgramModel;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelStats {
    pub nodes: usize,
    pub edges: usize,
    pub max_in_degree: usize,
    pub max_out_degree: usize,
    pub strong_components: usize,
    pub classes_in_sccs: usize,
    pub methods_in_sccs: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphStats {
    /// Class dependency digraph.
    pub class_level: LevelStats,
    /// Collapsed message graph over method nodes.
    pub cmd_level: LevelStats,
    pub data_nodes: usize,
}

fn degrees(g: &SimpleDigraph, nodes: &[usize]) -> (usize, usize) {
    let ins = g.in_degrees();
    let max_in = nodes.iter().map(|&u| ins[u]).max().unwrap_or(0);
    let max_out = nodes.iter().map(|&u| g.out_degree(u)).max().unwrap_or(0);
    (max_in, max_out)
}

pub fn stats(model: &ProgramModel, cmd: &ClassMessageDiagram) -> GraphStats {
    let cg = ClassGraph::new(model, cmd);
    let class_nodes: Vec<usize> = (0..cg.classes.len()).collect();
    let class_sccs = strong_components(&cg.graph);
    let (max_in, max_out) = degrees(&cg.graph, &class_nodes);
    let scc_classes: BTreeSet<&str> = class_sccs
        .iter()
        .flatten()
        .map(|&i| cg.classes[i].as_str())
        .collect();
    let class_level = LevelStats {
        nodes: cg.classes.len(),
        edges: cg.graph.edge_count(),
        max_in_degree: max_in,
        max_out_degree: max_out,
        strong_components: class_sccs.len(),
        classes_in_sccs: scc_classes.len(),
        methods_in_sccs: model
            .classes
            .iter()
            .filter(|c| scc_classes.contains(c.name.as_str()))
            .map(|c| c.methods.len())
            .sum(),
    };

    let mg = cmd.message_graph();
    let methods: Vec<usize> = cmd.method_ids().collect();
    let sccs = strong_components(&mg);
    let (max_in, max_out) = degrees(&mg, &methods);
    let cmd_level = LevelStats {
        nodes: methods.len(),
        edges: mg.edge_count(),
        max_in_degree: max_in,
        max_out_degree: max_out,
        strong_components: sccs.len(),
        classes_in_sccs: sccs
            .iter()
            .flatten()
            .map(|&u| cmd.node(u).class())
            .collect::<BTreeSet<_>>()
            .len(),
        methods_in_sccs: sccs.iter().map(BTreeSet::len).sum(),
    };

    GraphStats {
        class_level,
        cmd_level,
        data_nodes: cmd.data_ids().count(),
    }
}

impl GraphStats {
    /// Rows of the two-column table: name, class level, method level.
    pub fn rows(&self) -> Vec<(&'static str, usize, usize)> {
        let (c, m) = (&self.class_level, &self.cmd_level);
        vec![
            ("Nodes", c.nodes, m.nodes),
            ("Edges", c.edges, m.edges),
            ("Max in-degree", c.max_in_degree, m.max_in_degree),
            ("Max out-degree", c.max_out_degree, m.max_out_degree),
            (
                "Strong components",
                c.strong_components,
                m.strong_components,
            ),
            (
                "Classes in strong components",
                c.classes_in_sccs,
                m.classes_in_sccs,
            ),
            (
                "Methods in strong components",
                c.methods_in_sccs,
                m.methods_in_sccs,
            ),
            ("Data nodes", 0, self.data_nodes),
        ]
    }
}
