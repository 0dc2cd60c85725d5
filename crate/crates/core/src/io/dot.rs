//! Graphviz rendering of an instance graph.
//!
//! Activities become nodes shaped by kind, messages become edges labeled
//! `name:type:order`. Open pins get invisible placeholder endpoints so a
//! dangling message is still visible. Inactive objects are dashed and
//! composition-owned activities are highlighted. Output is byte-stable.

use std::fmt::Write;

use crate::model::{ActivityKind, InstanceGraph};

fn shape(kind: ActivityKind) -> &'static str {
    match kind {
        ActivityKind::InitialNode => "point",
        ActivityKind::FinalNode => "doublecircle",
        ActivityKind::Decision | ActivityKind::Merge => "diamond",
        ActivityKind::Fork | ActivityKind::Join => "box",
        ActivityKind::Transformation => "ellipse",
        ActivityKind::Action | ActivityKind::ExternalSignal => "box",
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the graph as a Graphviz `digraph` document.
pub fn emit_dot(graph: &InstanceGraph) -> String {
    let mut out = String::new();
    out.push_str("digraph workflow {\n");
    out.push_str("  rankdir=LR;\n");
    out.push_str("  node [fontsize=10];\n");
    out.push_str("  edge [fontsize=9];\n");
    let comp = graph.composition_workflow().map(|w| w.id);
    for a in &graph.activities {
        let node_id = format!("a{}", a.id.serial);
        let mut attrs = vec![
            format!("label=\"{}\"", escape(&a.name)),
            format!("shape={}", shape(a.kind)),
        ];
        if Some(a.owner) == comp {
            attrs.push("style=filled".to_string());
            attrs.push("fillcolor=lightblue".to_string());
        }
        if !a.active {
            let style = if Some(a.owner) == comp {
                "style=\"filled,dashed\"".to_string()
            } else {
                "style=dashed".to_string()
            };
            attrs.retain(|s| !s.starts_with("style="));
            attrs.push(style);
        }
        if let Some(tag) = &a.role_tag {
            attrs[0] = format!("label=\"{}\\n<{}>\"", escape(&a.name), escape(tag));
        }
        writeln!(out, "  {} [{}];", node_id, attrs.join(", ")).unwrap();
    }
    for m in &graph.messages {
        let src = match m.producer {
            Some(p) => format!("a{}", p.serial),
            None => {
                let ph = format!("src_m{}", m.id.serial);
                writeln!(out, "  {ph} [shape=point, style=invis];").unwrap();
                ph
            }
        };
        let dst = match m.consumer {
            Some(c) => format!("a{}", c.serial),
            None => {
                let ph = format!("dst_m{}", m.id.serial);
                writeln!(out, "  {ph} [shape=point, style=invis];").unwrap();
                ph
            }
        };
        let label = format!(
            "{}:{}:{}",
            m.name,
            m.data_type.as_deref().unwrap_or("-"),
            m.order
        );
        let mut attrs = vec![format!("label=\"{}\"", escape(&label))];
        if !m.active {
            attrs.push("style=dashed".to_string());
        }
        writeln!(out, "  {src} -> {dst} [{}];", attrs.join(", ")).unwrap();
    }
    out.push_str("}\n");
    out
}
