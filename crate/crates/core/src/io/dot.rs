use std::fmt::Write as _;
use std::path::Path;

use super::{write_text, IoError};
use crate::explain::{ConceptLattice, DecisionTree, FormalContext, TreeNode, CATEGORIES};

fn escape(label: &str) -> String {
    label
        .replace('\\', "\\\\")
        .replace('"', "\\\"")
        .replace('\n', "\\n")
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

fn tree_label(node: &TreeNode) -> String {
    let total = node.total();
    let majority = node.majority();
    let mut label = String::new();
    if let Some(split) = &node.split {
        writeln!(label, "{}?", split.answer_id).unwrap();
    }
    writeln!(
        label,
        "{} {:.1}% ({}/{})",
        majority,
        percent(node.counts[majority.index()], total),
        node.counts[majority.index()],
        total
    )
    .unwrap();
    let parts: Vec<String> = CATEGORIES
        .iter()
        .map(|c| {
            let n = node.counts[c.index()];
            format!("{c} {n} ({:.1}%)", percent(n, total))
        })
        .collect();
    label.push_str(&parts.join(" | "));
    label
}

fn write_tree_node(node: &TreeNode, next_id: &mut usize, out: &mut String) -> usize {
    let id = *next_id;
    *next_id += 1;
    let shape = if node.is_leaf() { "box" } else { "ellipse" };
    writeln!(
        out,
        "  n{id} [shape={shape}, label=\"{}\"];",
        escape(&tree_label(node))
    )
    .unwrap();
    if let Some(split) = &node.split {
        let yes = write_tree_node(&split.when_true, next_id, out);
        let no = write_tree_node(&split.when_false, next_id, out);
        writeln!(out, "  n{id} -> n{yes} [label=\"yes\"];").unwrap();
        writeln!(out, "  n{id} -> n{no} [label=\"no\"];").unwrap();
    }
    id
}

/// DOT digraph of a decision tree. Nodes are numbered in pre-order; each
/// shows the split answer (internal nodes), the majority category with its
/// share, and the count and percentage of every category.
pub fn tree_to_dot(tree: &DecisionTree) -> String {
    let mut out = String::from("digraph tree {\n  node [fontname=\"Helvetica\"];\n");
    let mut next_id = 0;
    write_tree_node(&tree.root, &mut next_id, &mut out);
    out.push_str("}\n");
    out
}

/// DOT digraph of a concept lattice, drawn bottom-up. Nodes show the
/// attributes introduced by the concept and its extent size; edges run from
/// each concept to its upper covers.
pub fn lattice_to_dot(lattice: &ConceptLattice, ctx: &FormalContext) -> String {
    let mut out = String::from(
        "digraph lattice {\n  rankdir=BT;\n  node [shape=box, fontname=\"Helvetica\"];\n",
    );
    for (i, concept) in lattice.concepts().iter().enumerate() {
        let attrs: Vec<&str> = lattice
            .introduced_attributes(i)
            .into_iter()
            .map(|a| ctx.attributes()[a].as_str())
            .collect();
        let label = format!(
            "{}\nobjects: {}",
            attrs.join(", "),
            concept.extent.count_ones(..)
        );
        writeln!(out, "  c{i} [label=\"{}\"];", escape(&label)).unwrap();
    }
    for &(lower, upper) in lattice.edges() {
        writeln!(out, "  c{lower} -> c{upper};").unwrap();
    }
    out.push_str("}\n");
    out
}

pub enum DotGraph<'a> {
    Tree(&'a DecisionTree),
    Lattice(&'a ConceptLattice, &'a FormalContext),
}

pub fn export_dot(graph: DotGraph<'_>, path: &Path) -> Result<(), IoError> {
    let text = match graph {
        DotGraph::Tree(t) => tree_to_dot(t),
        DotGraph::Lattice(l, ctx) => lattice_to_dot(l, ctx),
    };
    write_text(path, &text)
}
