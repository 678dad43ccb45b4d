use std::fmt::Write as _;

use super::{Binding, ClassMessageDiagram, CmdNode, EdgeLabel};

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// Graphviz rendering: method nodes boxed, variables as ellipses, duplicated
/// message edges dashed. Output depends only on the diagram.
pub fn export_dot(cmd: &ClassMessageDiagram) -> String {
    let mut out = String::from("digraph cmd {\n");
    for node in cmd.nodes() {
        let shape = match node {
            CmdNode::Method(_) => "box",
            CmdNode::Data(_) => "ellipse",
        };
        let _ = writeln!(out, "  {} [shape={shape}];", quote(&node.to_string()));
    }
    for edge in cmd.edges() {
        let attrs = match &edge.label {
            EdgeLabel::Message {
                binding: Binding::DuplicatedFor(_),
                ..
            } => " [style=dashed]".to_string(),
            EdgeLabel::Message { .. } => String::new(),
            other => format!(" [label={}]", quote(other.short_name())),
        };
        let _ = writeln!(
            out,
            "  {} -> {}{attrs};",
            quote(&cmd.node(edge.src).to_string()),
            quote(&cmd.node(edge.dst).to_string())
        );
    }
    out.push_str("}\n");
    out
}
