//! Def-use edges for the data-flow component of CodeBLEU.
//!
//! One lexical pass in evaluation order; every use is linked to the most
//! recent definition of the same name seen so far. No path sensitivity:
//! both arms of a branch define in sequence and loop bodies only see
//! definitions that precede them textually.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::normalize::{is_declaration, may_reference_variable};
use super::{is_comment, CodeUnit, Language};

/// A use linked to its reaching definition. Variables are identified by
/// first-occurrence ordinal and sites by their occurrence index among that
/// variable's occurrences, so edges survive consistent renaming and do not
/// depend on unrelated code around them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DataflowEdge {
    pub var: usize,
    pub use_occurrence: usize,
    pub def_occurrence: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Access {
    Def,
    Use,
}

struct Collector<'a> {
    unit: &'a CodeUnit,
    events: Vec<(&'a str, Access)>,
}

fn cs_is_declaration(ident: Node<'_>) -> bool {
    let Some(parent) = ident.parent() else {
        return false;
    };
    let named_as = |field: &str| parent.child_by_field_name(field) == Some(ident);
    match parent.kind() {
        "variable_declarator" | "parameter" | "catch_declaration" => named_as("name"),
        "foreach_statement" => named_as("left"),
        "declaration_pattern" | "single_variable_designation" => true,
        _ => false,
    }
}

fn cs_may_reference_variable(ident: Node<'_>) -> bool {
    let Some(parent) = ident.parent() else {
        return true;
    };
    let field_is = |field: &str| parent.child_by_field_name(field) == Some(ident);
    if field_is("type") {
        return false;
    }
    match parent.kind() {
        "member_access_expression" => !field_is("name"),
        "invocation_expression" => !field_is("function"),
        "generic_name" | "qualified_name" | "attribute" | "labeled_statement"
        | "goto_statement" | "method_declaration" | "local_function_statement"
        | "class_declaration" | "struct_declaration" | "interface_declaration"
        | "property_declaration" | "using_directive" | "namespace_declaration"
        | "name_colon" | "object_creation_expression" => false,
        _ => true,
    }
}

fn compound_operator(node: Node<'_>, unit: &CodeUnit) -> bool {
    let mut cursor = node.walk();
    let compound = node
        .children(&mut cursor)
        .filter(|c| !c.is_named())
        .any(|c| {
            let op = unit.node_text(c);
            op.ends_with('=') && op != "="
        });
    compound
}

impl<'a> Collector<'a> {
    fn declares(&self, ident: Node<'_>) -> bool {
        match self.unit.language() {
            Language::Java => is_declaration(ident),
            Language::CSharp => cs_is_declaration(ident),
        }
    }

    fn references(&self, ident: Node<'_>) -> bool {
        match self.unit.language() {
            Language::Java => may_reference_variable(ident),
            Language::CSharp => cs_may_reference_variable(ident),
        }
    }

    fn push(&mut self, ident: Node<'_>, access: Access) {
        self.events.push((self.unit.node_text(ident), access));
    }

    fn children(node: Node<'a>) -> Vec<Node<'a>> {
        let mut cursor = node.walk();
        node.children(&mut cursor)
            .filter(|c| !is_comment(c.kind()))
            .collect()
    }

    /// Walks `node`, with declared names defined after their initializers.
    fn walk(&mut self, node: Node<'a>) {
        match node.kind() {
            "identifier" => {
                if self.declares(node) {
                    self.push(node, Access::Def);
                } else if self.references(node) {
                    self.push(node, Access::Use);
                }
            }
            "implicit_parameter" => self.push(node, Access::Def),
            "variable_declarator" | "resource" | "enhanced_for_statement" | "foreach_statement" => {
                let name_field = if node.kind() == "foreach_statement" { "left" } else { "name" };
                let name = node.child_by_field_name(name_field);
                let body = node.child_by_field_name("body");
                for child in Self::children(node) {
                    if Some(child) != name && Some(child) != body {
                        self.walk(child);
                    }
                }
                if let Some(name) = name {
                    self.walk(name);
                }
                if let Some(body) = body {
                    self.walk(body);
                }
            }
            "assignment_expression" => {
                let left = node.child_by_field_name("left");
                if let Some(right) = node.child_by_field_name("right") {
                    self.walk(right);
                }
                match left {
                    Some(l) if l.kind() == "identifier" => {
                        if compound_operator(node, self.unit) {
                            self.push(l, Access::Use);
                        }
                        self.push(l, Access::Def);
                    }
                    Some(l) => self.walk(l),
                    None => {}
                }
            }
            "update_expression" | "postfix_unary_expression" | "prefix_unary_expression" => {
                let text = self.unit.node_text(node);
                let operand = node.named_child(0);
                match operand {
                    Some(o) if o.kind() == "identifier" && (text.contains("++") || text.contains("--")) => {
                        self.push(o, Access::Use);
                        self.push(o, Access::Def);
                    }
                    _ => {
                        for child in Self::children(node) {
                            self.walk(child);
                        }
                    }
                }
            }
            _ => {
                for child in Self::children(node) {
                    self.walk(child);
                }
            }
        }
    }
}

/// Def-use edges of `unit`. Uses with no earlier definition (fields,
/// undeclared names) produce no edge.
pub fn dataflow_edges(unit: &CodeUnit) -> BTreeSet<DataflowEdge> {
    let mut collector = Collector {
        unit,
        events: Vec::new(),
    };
    collector.walk(unit.root());

    let mut ordinal: HashMap<&str, usize> = HashMap::new();
    let mut occurrences: Vec<usize> = Vec::new();
    let mut last_def: Vec<Option<usize>> = Vec::new();
    let mut edges = BTreeSet::new();
    for (name, access) in collector.events {
        let next = ordinal.len();
        let var = *ordinal.entry(name).or_insert(next);
        if var == occurrences.len() {
            occurrences.push(0);
            last_def.push(None);
        }
        let occurrence = occurrences[var];
        occurrences[var] += 1;
        match access {
            Access::Def => last_def[var] = Some(occurrence),
            Access::Use => {
                if let Some(def) = last_def[var] {
                    edges.insert(DataflowEdge {
                        var,
                        use_occurrence: occurrence,
                        def_occurrence: def,
                    });
                }
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn java(text: &str) -> BTreeSet<DataflowEdge> {
        dataflow_edges(&CodeUnit::parse(Language::Java, text))
    }

    fn edge(var: usize, use_occurrence: usize, def_occurrence: usize) -> DataflowEdge {
        DataflowEdge {
            var,
            use_occurrence,
            def_occurrence,
        }
    }

    #[test]
    fn single_def_single_use() {
        assert_eq!(java("int x=1; return x;"), BTreeSet::from([edge(0, 1, 0)]));
    }

    #[test]
    fn constant_return_has_no_edges() {
        assert!(java("return 1;").is_empty());
        assert!(java("String function(){return namespaceURI;}").is_empty());
    }

    #[test]
    fn k_straight_line_vars_give_k_edges() {
        for k in 1..6 {
            let mut src = String::new();
            for i in 0..k {
                src.push_str(&format!("int v{i} = {i};\n"));
            }
            for i in 0..k {
                src.push_str(&format!("print(v{i});\n"));
            }
            assert_eq!(java(&src).len(), k, "{src}");
        }
    }

    #[test]
    fn parameters_and_redefinition() {
        // a: def(param) use ; b: def(param) use ; c: def use ; c redefined
        let edges = java("int f(int a, int b){ int c = a + b; c = c * 2; return c; }");
        // Occurrence order for c: def0, use1, def2, use3.
        assert!(edges.contains(&edge(0, 1, 0)));
        assert!(edges.contains(&edge(1, 1, 0)));
        assert!(edges.contains(&edge(2, 1, 0)));
        assert!(edges.contains(&edge(2, 3, 2)));
        assert_eq!(edges.len(), 4);
    }

    #[test]
    fn compound_and_update_are_use_then_def() {
        let edges = java("int i = 0; i += 2; i++; return i;");
        // i: def0, use1, def2, use3, def4, use5
        assert_eq!(
            edges,
            BTreeSet::from([edge(0, 1, 0), edge(0, 3, 2), edge(0, 5, 4)])
        );
    }

    #[test]
    fn loop_use_links_to_lexical_def() {
        let edges = java("int s = 0; for (int x : xs) { s = s + x; } return s;");
        // s: def0 use1(in body, before def2) def2 use3
        assert!(edges.contains(&edge(0, 1, 0)));
        assert!(edges.contains(&edge(0, 3, 2)));
    }

    #[test]
    fn member_names_are_not_variables() {
        let edges = java("int n = 1; obj.n = n; obj.n(n);");
        // n: def0 use1 use2; obj has no definition.
        assert_eq!(edges, BTreeSet::from([edge(0, 1, 0), edge(0, 2, 0)]));
    }

    #[test]
    fn csharp_best_effort() {
        let unit = CodeUnit::parse(
            Language::CSharp,
            "int F(int a){ var b = a + 1; b += 2; foreach (var x in xs) { Use(x); } return obj.Prop + b; }",
        );
        let edges = dataflow_edges(&unit);
        // a: def,use  b: def, use/def(+=), use  x: def,use
        assert_eq!(edges.len(), 4, "{edges:?}");
    }

    /// Straight-line snippets over a small variable pool, rendered twice
    /// with disjoint name sets.
    fn random_snippet(rng: &mut ChaCha8Rng, names: &[&str]) -> Vec<(usize, Vec<usize>)> {
        let mut defined: Vec<usize> = Vec::new();
        let mut stmts = Vec::new();
        for _ in 0..rng.gen_range(2..9) {
            let target = rng.gen_range(0..names.len());
            let uses: Vec<usize> = (0..rng.gen_range(0..3))
                .filter(|_| !defined.is_empty())
                .map(|_| defined[rng.gen_range(0..defined.len())])
                .collect();
            stmts.push((target, uses));
            if !defined.contains(&target) {
                defined.push(target);
            }
        }
        stmts
    }

    fn render(stmts: &[(usize, Vec<usize>)], names: &[&str]) -> String {
        let mut declared = BTreeSet::new();
        let mut out = String::new();
        for (target, uses) in stmts {
            let rhs = if uses.is_empty() {
                "1".to_string()
            } else {
                uses.iter().map(|u| names[*u]).collect::<Vec<_>>().join(" + ")
            };
            if declared.insert(*target) {
                out.push_str(&format!("int {} = {};\n", names[*target], rhs));
            } else {
                out.push_str(&format!("{} = {};\n", names[*target], rhs));
            }
        }
        out
    }

    #[test]
    fn renaming_preserves_edges() {
        let first = ["a", "b", "c", "d"];
        let second = ["loc3", "zeta", "q", "value"];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let stmts = random_snippet(&mut rng, &first);
            let a = render(&stmts, &first);
            let b = render(&stmts, &second);
            assert_eq!(java(&a), java(&b), "{a}\n---\n{b}");
        }
    }
}
