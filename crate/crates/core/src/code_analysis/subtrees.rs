use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::{is_comment, preorder, CodeUnit};

/// Multiset of subtree signatures, keyed by signature.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubtreeMultiset(BTreeMap<String, usize>);

impl SubtreeMultiset {
    pub fn total(&self) -> usize {
        self.0.values().sum()
    }

    pub fn count(&self, signature: &str) -> usize {
        self.0.get(signature).copied().unwrap_or(0)
    }

    /// Size of the multiset intersection.
    pub fn intersection_size(&self, other: &SubtreeMultiset) -> usize {
        self.0
            .iter()
            .map(|(sig, n)| (*n).min(other.count(sig)))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.0.iter().map(|(s, n)| (s.as_str(), *n))
    }
}

fn significant_children(node: Node<'_>) -> Vec<Node<'_>> {
    let mut cursor = node.walk();
    node.children(&mut cursor)
        .filter(|c| !is_comment(c.kind()))
        .collect()
}

/// `(kind child child ...)` over named children; leaves print their kind
/// only, so identifiers, literals and operators are elided.
fn signature(node: Node<'_>, out: &mut String) {
    let named: Vec<Node<'_>> = significant_children(node)
        .into_iter()
        .filter(|c| c.is_named())
        .collect();
    if named.is_empty() {
        out.push_str(node.kind());
        return;
    }
    out.push('(');
    out.push_str(node.kind());
    for child in named {
        out.push(' ');
        signature(child, out);
    }
    out.push(')');
}

/// One signature per internal (non-leaf) node, comments ignored.
pub fn ast_subtrees(unit: &CodeUnit) -> SubtreeMultiset {
    let mut set = BTreeMap::new();
    for node in preorder(unit.root()) {
        if is_comment(node.kind()) || significant_children(node).is_empty() {
            continue;
        }
        let mut sig = String::new();
        signature(node, &mut sig);
        *set.entry(sig).or_insert(0) += 1;
    }
    SubtreeMultiset(set)
}
