//! Rewrites a generated Java method into the conventions of the CONCODE
//! ground truth: no comments, throws clauses or method modifiers; method
//! named `function`; parameters `arg0, arg1, ...`; locals `loc0, loc1, ...`
//! numbered in declaration order.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::extract::top_level_methods;
use super::lexer::TokenKind;
use super::{is_comment, preorder, AnalysisError, CodeUnit, Language};
use crate::corpus::TaskKind;

pub const METHOD_NAME: &str = "function";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RenameRole {
    Method,
    Parameter,
    Local,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rename {
    pub role: RenameRole,
    pub original: String,
    pub normalized: String,
}

#[derive(Debug, Clone)]
pub struct NormalizedCode {
    pub unit: CodeUnit,
    /// One entry per renamed declaration, in declaration order.
    pub renames: Vec<Rename>,
    /// Generated names that were skipped because the method already used them.
    pub collisions: Vec<String>,
}

impl NormalizedCode {
    pub fn text(&self) -> &str {
        self.unit.text()
    }
}

#[derive(Debug, Clone, Copy)]
struct Steps {
    comments: bool,
    throws: bool,
    modifiers: bool,
    annotations: bool,
    rename: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trim {
    /// Also eat whitespace after the node.
    After,
    /// Eat whitespace on both sides.
    Both,
}

#[derive(Debug)]
struct Edit {
    range: Range<usize>,
    replacement: String,
    removal: Option<Trim>,
}

/// Normalizes a single-method unit. Text-to-code output follows the full
/// CONCODE conventions; code-to-code output only loses comments and
/// annotations because that ground truth keeps the original names.
pub fn normalize(unit: &CodeUnit, task: TaskKind) -> Result<NormalizedCode, AnalysisError> {
    let steps = match task {
        TaskKind::T2C => Steps {
            comments: true,
            throws: true,
            modifiers: true,
            annotations: false,
            rename: true,
        },
        TaskKind::C2C => Steps {
            comments: true,
            throws: false,
            modifiers: false,
            annotations: true,
            rename: false,
        },
    };
    rewrite(unit, steps)
}

/// Removes comments, throws clauses and method modifiers without renaming.
pub fn strip_non_semantic(unit: &CodeUnit) -> Result<CodeUnit, AnalysisError> {
    let steps = Steps {
        comments: true,
        throws: true,
        modifiers: true,
        annotations: false,
        rename: false,
    };
    rewrite(unit, steps).map(|n| n.unit)
}

fn target_method(unit: &CodeUnit) -> Result<Node<'_>, AnalysisError> {
    if unit.language() != Language::Java {
        return Err(AnalysisError::Unsupported("normalization", unit.language()));
    }
    if unit.is_unparseable() {
        return Err(AnalysisError::Unparseable);
    }
    top_level_methods(unit)
        .into_iter()
        .next()
        .ok_or(AnalysisError::NoMethod)
}

fn rewrite(unit: &CodeUnit, steps: Steps) -> Result<NormalizedCode, AnalysisError> {
    let method = target_method(unit)?;
    let mut edits = Vec::new();
    let remove = |node: Node<'_>, trim: Trim| Edit {
        range: node.byte_range(),
        replacement: String::new(),
        removal: Some(trim),
    };

    for node in preorder(method) {
        let kind = node.kind();
        if steps.comments && is_comment(kind) {
            edits.push(remove(node, Trim::After));
        }
        if steps.annotations && matches!(kind, "marker_annotation" | "annotation") {
            edits.push(remove(node, Trim::After));
        }
    }
    let mut cursor = method.walk();
    for child in method.children(&mut cursor) {
        match child.kind() {
            "throws" if steps.throws => edits.push(remove(child, Trim::Both)),
            "modifiers" if steps.modifiers => edits.push(remove(child, Trim::After)),
            _ => {}
        }
    }

    let mut renames = Vec::new();
    let mut collisions = Vec::new();
    if steps.rename {
        let plan = RenamePlan::build(unit, method);
        for (site, target) in &plan.sites {
            if unit.text()[site.clone()] != *target {
                edits.push(Edit {
                    range: site.clone(),
                    replacement: target.clone(),
                    removal: None,
                });
            }
        }
        renames = plan.renames;
        collisions = plan.collisions;
        for name in &collisions {
            log::warn!("normalize: `{name}` already used in the method; numbering skips it");
        }
    }

    let text = apply_edits(unit.text(), method.byte_range(), edits);
    Ok(NormalizedCode {
        unit: CodeUnit::parse(Language::Java, text),
        renames,
        collisions,
    })
}

fn is_word(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$'
}

fn is_op(c: char) -> bool {
    "+-*/&|<>=!%^~?:".contains(c)
}

fn apply_edits(text: &str, bounds: Range<usize>, mut edits: Vec<Edit>) -> String {
    // Widen removals over adjacent whitespace, staying inside the method.
    for edit in edits.iter_mut() {
        let Some(trim) = edit.removal else { continue };
        let after = &text[edit.range.end..bounds.end];
        edit.range.end += after.len() - after.trim_start().len();
        if trim == Trim::Both {
            let before = &text[bounds.start..edit.range.start];
            edit.range.start -= before.len() - before.trim_end().len();
        }
    }
    let removed: Vec<Range<usize>> = edits
        .iter()
        .filter(|e| e.removal.is_some())
        .map(|e| e.range.clone())
        .collect();
    edits.retain(|e| {
        e.removal.is_some()
            || !removed
                .iter()
                .any(|r| r.start <= e.range.start && e.range.end <= r.end)
    });
    edits.sort_by_key(|e| (e.range.start, e.range.end));

    let mut out = String::with_capacity(bounds.len());
    let mut pos = bounds.start;
    for edit in edits {
        if edit.range.start < pos {
            // Overlaps an earlier removal (e.g. nested annotations).
            pos = pos.max(edit.range.end);
            continue;
        }
        out.push_str(&text[pos..edit.range.start]);
        if edit.removal.is_some() {
            let prev = out.chars().last();
            let next = text[edit.range.end..bounds.end].chars().next();
            if let (Some(p), Some(n)) = (prev, next) {
                if (is_word(p) && is_word(n)) || (is_op(p) && is_op(n)) {
                    out.push(' ');
                }
            }
        } else {
            out.push_str(&edit.replacement);
        }
        pos = edit.range.end;
    }
    out.push_str(&text[pos..bounds.end]);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BindingRole {
    Parameter,
    Local,
}

struct RenamePlan {
    sites: Vec<(Range<usize>, String)>,
    renames: Vec<Rename>,
    collisions: Vec<String>,
}

struct Binding {
    name: String,
    role: BindingRole,
}

struct ScopeWalker<'a> {
    unit: &'a CodeUnit,
    method: Node<'a>,
    scopes: Vec<Vec<(String, usize)>>,
    bindings: Vec<Binding>,
    /// Identifier spans resolved to a binding (declarations included).
    sites: Vec<(Range<usize>, usize)>,
    method_sites: Vec<Range<usize>>,
}

const SCOPE_KINDS: &[&str] = &[
    "method_declaration",
    "constructor_declaration",
    "block",
    "for_statement",
    "enhanced_for_statement",
    "catch_clause",
    "lambda_expression",
    "try_with_resources_statement",
    "switch_block",
    "class_body",
];

/// Is `ident` the name introduced by a declaration? Covers parameters,
/// local variables, catch parameters, for-each variables, resources,
/// lambda parameters and pattern bindings.
pub(crate) fn is_declaration(ident: Node<'_>) -> bool {
    let Some(parent) = ident.parent() else {
        return false;
    };
    let named_as = |field: &str| parent.child_by_field_name(field) == Some(ident);
    match parent.kind() {
        "formal_parameter" | "catch_formal_parameter" | "enhanced_for_statement" | "resource"
        | "instanceof_expression" | "variable_declarator" => named_as("name"),
        "lambda_expression" => named_as("parameters"),
        "inferred_parameters" => true,
        _ => false,
    }
}

/// Could `ident` refer to a variable? False for member names, labels,
/// annotation names, package paths and declared type/method names.
pub(crate) fn may_reference_variable(ident: Node<'_>) -> bool {
    let Some(parent) = ident.parent() else {
        return true;
    };
    let field_is = |field: &str| parent.child_by_field_name(field) == Some(ident);
    match parent.kind() {
        "method_invocation" => !field_is("name"),
        "field_access" => !field_is("field"),
        "method_reference" => parent.named_child(0) == Some(ident),
        "labeled_statement" | "break_statement" | "continue_statement" | "scoped_identifier"
        | "marker_annotation" | "annotation" | "element_value_pair" | "method_declaration"
        | "constructor_declaration" | "class_declaration" | "interface_declaration"
        | "enum_declaration" | "enum_constant" | "record_declaration" => false,
        _ => true,
    }
}

impl<'a> ScopeWalker<'a> {
    fn lookup(&self, name: &str) -> Option<usize> {
        self.scopes
            .iter()
            .rev()
            .flat_map(|scope| scope.iter().rev())
            .find(|(n, _)| n == name)
            .map(|(_, id)| *id)
    }

    fn role_of(&self, ident: Node<'_>) -> BindingRole {
        let params = self.method.child_by_field_name("parameters");
        let mut cur = ident.parent();
        while let Some(n) = cur {
            if Some(n) == params {
                return BindingRole::Parameter;
            }
            if n == self.method {
                break;
            }
            cur = n.parent();
        }
        BindingRole::Local
    }

    fn walk(&mut self, node: Node<'a>) {
        if node.kind() == "identifier" {
            self.visit_identifier(node);
            return;
        }
        if node.kind() == "method_invocation" {
            self.visit_invocation(node);
        }
        let scoped = SCOPE_KINDS.contains(&node.kind());
        if scoped {
            self.scopes.push(Vec::new());
        }
        let mut cursor = node.walk();
        let children: Vec<_> = node.children(&mut cursor).collect();
        for child in children {
            self.walk(child);
        }
        if scoped {
            self.scopes.pop();
        }
    }

    fn visit_identifier(&mut self, ident: Node<'a>) {
        let name = self.unit.node_text(ident).to_string();
        if ident.parent() == Some(self.method) {
            if self.method.child_by_field_name("name") == Some(ident) {
                self.method_sites.push(ident.byte_range());
            }
            return;
        }
        if is_declaration(ident) {
            let id = self.bindings.len();
            self.bindings.push(Binding {
                name: name.clone(),
                role: self.role_of(ident),
            });
            self.scopes
                .last_mut()
                .expect("declarations occur inside the method scope")
                .push((name, id));
            self.sites.push((ident.byte_range(), id));
        } else if may_reference_variable(ident) {
            if let Some(id) = self.lookup(&name) {
                self.sites.push((ident.byte_range(), id));
            }
        }
    }

    /// Unqualified (or `this.`-qualified) recursive calls follow the rename.
    fn visit_invocation(&mut self, call: Node<'a>) {
        let Some(name) = call.child_by_field_name("name") else {
            return;
        };
        let Some(own) = self.method.child_by_field_name("name") else {
            return;
        };
        let receiver_ok = match call.child_by_field_name("object") {
            None => true,
            Some(obj) => obj.kind() == "this",
        };
        if receiver_ok && self.unit.node_text(name) == self.unit.node_text(own) {
            self.method_sites.push(name.byte_range());
        }
    }
}

impl RenamePlan {
    fn build(unit: &CodeUnit, method: Node<'_>) -> Self {
        let mut walker = ScopeWalker {
            unit,
            method,
            scopes: Vec::new(),
            bindings: Vec::new(),
            sites: Vec::new(),
            method_sites: Vec::new(),
        };
        walker.walk(method);

        let renamed: BTreeSet<usize> = walker
            .sites
            .iter()
            .map(|(r, _)| r.start)
            .chain(walker.method_sites.iter().map(|r| r.start))
            .collect();
        let range = method.byte_range();
        let reserved: BTreeSet<&str> = unit
            .tokens()
            .iter()
            .filter(|t| t.kind == TokenKind::Identifier)
            .filter(|t| range.start <= t.span.start && t.span.end <= range.end)
            .filter(|t| !renamed.contains(&t.span.start))
            .map(|t| &unit.text()[t.span.clone()])
            .collect();

        let mut collisions = Vec::new();
        let mut next_free = |prefix: &str, counter: &mut usize| loop {
            let candidate = format!("{prefix}{counter}");
            *counter += 1;
            if reserved.contains(candidate.as_str()) {
                collisions.push(candidate);
            } else {
                return candidate;
            }
        };
        let (mut params, mut locals) = (0usize, 0usize);
        let targets: Vec<String> = walker
            .bindings
            .iter()
            .map(|b| match b.role {
                BindingRole::Parameter => next_free("arg", &mut params),
                BindingRole::Local => next_free("loc", &mut locals),
            })
            .collect();

        let mut renames = Vec::new();
        let mut sites = Vec::new();
        if let Some(name) = method.child_by_field_name("name") {
            renames.push(Rename {
                role: RenameRole::Method,
                original: unit.node_text(name).to_string(),
                normalized: METHOD_NAME.to_string(),
            });
        }
        for site in walker.method_sites {
            sites.push((site, METHOD_NAME.to_string()));
        }
        for (binding, target) in walker.bindings.iter().zip(&targets) {
            renames.push(Rename {
                role: match binding.role {
                    BindingRole::Parameter => RenameRole::Parameter,
                    BindingRole::Local => RenameRole::Local,
                },
                original: binding.name.clone(),
                normalized: target.clone(),
            });
        }
        for (site, id) in walker.sites {
            sites.push((site, targets[id].clone()));
        }
        RenamePlan {
            sites,
            renames,
            collisions,
        }
    }
}

/// Re-parses a normalized unit and lists every violated convention.
/// An empty list means the unit is a conforming text-to-code method.
pub fn check_normalized(unit: &CodeUnit) -> Vec<String> {
    let mut problems = Vec::new();
    let method = match target_method(unit) {
        Ok(m) => m,
        Err(e) => return vec![e.to_string()],
    };
    match method.child_by_field_name("name").map(|n| unit.node_text(n)) {
        Some(METHOD_NAME) => {}
        other => problems.push(format!("method name is {other:?}, expected `{METHOD_NAME}`")),
    }
    let mut cursor = method.walk();
    for child in method.children(&mut cursor) {
        match child.kind() {
            "modifiers" => problems.push(format!("modifiers remain: `{}`", unit.node_text(child))),
            "throws" => problems.push(format!("throws clause remains: `{}`", unit.node_text(child))),
            _ => {}
        }
    }
    let nodes = preorder(unit.root());
    for node in &nodes {
        if is_comment(node.kind()) {
            problems.push(format!("comment remains: `{}`", unit.node_text(*node)));
        }
    }
    let params = method.child_by_field_name("parameters");
    let in_params = |n: Node<'_>| {
        let mut cur = n.parent();
        while let Some(p) = cur {
            if Some(p) == params {
                return true;
            }
            cur = p.parent();
        }
        false
    };
    let declared: Vec<Node<'_>> = nodes
        .iter()
        .copied()
        .filter(|n| n.kind() == "identifier" && is_declaration(*n))
        .collect();
    let param_names: Vec<&str> = declared
        .iter()
        .filter(|n| in_params(**n))
        .map(|n| unit.node_text(*n))
        .collect();
    let local_names: Vec<&str> = declared
        .iter()
        .filter(|n| !in_params(**n))
        .map(|n| unit.node_text(*n))
        .collect();
    for (i, name) in param_names.iter().enumerate() {
        if *name != format!("arg{i}") {
            problems.push(format!("parameter {i} is `{name}`, expected `arg{i}`"));
        }
    }
    for (i, name) in local_names.iter().enumerate() {
        if *name != format!("loc{i}") {
            problems.push(format!("local {i} is `{name}`, expected `loc{i}`"));
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code_analysis::ast_subtrees;

    fn t2c(text: &str) -> NormalizedCode {
        normalize(&CodeUnit::parse(Language::Java, text), TaskKind::T2C).unwrap()
    }

    #[test]
    fn renames_and_strips_throws() {
        let got = t2c("int add(int a,int b) throws E {int c=a+b; return c;}");
        assert_eq!(
            got.text(),
            "int function(int arg0,int arg1){int loc0=arg0+arg1; return loc0;}"
        );
        assert!(check_normalized(&got.unit).is_empty());
        // Structure preserved modulo names.
        let stripped = strip_non_semantic(&CodeUnit::parse(
            Language::Java,
            "int add(int a,int b) throws E {int c=a+b; return c;}",
        ))
        .unwrap();
        assert_eq!(ast_subtrees(&stripped), ast_subtrees(&got.unit));
        assert_eq!(
            got.renames.iter().map(|r| (r.original.as_str(), r.normalized.as_str())).collect::<Vec<_>>(),
            vec![("add", "function"), ("a", "arg0"), ("b", "arg1"), ("c", "loc0")]
        );
    }

    #[test]
    fn idempotent_on_normalized_code() {
        let once = t2c("int function(int arg0,int arg1){int loc0=arg0+arg1; return loc0;}");
        assert_eq!(
            once.text(),
            "int function(int arg0,int arg1){int loc0=arg0+arg1; return loc0;}"
        );
        let twice = normalize(&once.unit, TaskKind::T2C).unwrap();
        assert_eq!(twice.text(), once.text());
    }

    #[test]
    fn comments_removed() {
        let got = t2c("int f() {\n    // note\n    return 1;\n}");
        assert_eq!(got.text(), "int function() {\n    return 1;\n}");
        let got = t2c("int f(){ return a/*x*/b; }");
        assert_eq!(got.text(), "int function(){ return a b; }");
    }

    #[test]
    fn modifiers_and_annotations_removed() {
        let got = t2c("@Override\npublic static final String name(String s) throws IOException, E { return s; }");
        assert_eq!(got.text(), "String function(String arg0){ return arg0; }");
    }

    #[test]
    fn scope_aware_renaming() {
        let src = "void f(int n){ for (int i = 0; i < n; i++) { total += i; } for (int i = 1; i > 0; i--) { } this.n = n; x.n(); }";
        let got = t2c(src);
        assert_eq!(
            got.text(),
            "void function(int arg0){ for (int loc0 = 0; loc0 < arg0; loc0++) { total += loc0; } for (int loc1 = 1; loc1 > 0; loc1--) { } this.n = arg0; x.n(); }"
        );
        assert!(check_normalized(&got.unit).is_empty());
    }

    #[test]
    fn locals_numbered_in_declaration_order() {
        let src = "int f(List<Integer> xs){ int sum = 0; for (Integer x : xs) { int sq = x * x; sum += sq; } try (Reader r = open()) { r.read(); } catch (IOException e) { log(e); } Runnable run = (a) -> use(a); return sum; }";
        let got = t2c(src);
        let locals: Vec<_> = got
            .renames
            .iter()
            .filter(|r| r.role == RenameRole::Local)
            .map(|r| (r.original.as_str(), r.normalized.as_str()))
            .collect();
        assert_eq!(
            locals,
            vec![
                ("sum", "loc0"),
                ("x", "loc1"),
                ("sq", "loc2"),
                ("r", "loc3"),
                ("e", "loc4"),
                ("run", "loc5"),
                ("a", "loc6")
            ]
        );
        assert!(check_normalized(&got.unit).is_empty(), "{:?}", check_normalized(&got.unit));
    }

    #[test]
    fn recursive_calls_follow_method_name() {
        let got = t2c("int fact(int n){ return n <= 1 ? 1 : n * fact(n - 1); }");
        assert_eq!(
            got.text(),
            "int function(int arg0){ return arg0 <= 1 ? 1 : arg0 * function(arg0 - 1); }"
        );
    }

    #[test]
    fn fields_are_not_renamed() {
        let got = t2c("String getName(){ return name; }");
        assert_eq!(got.text(), "String function(){ return name; }");
    }

    #[test]
    fn collision_renumbers_deterministically() {
        let got = t2c("int f(int a){ int b = a + arg0; return b + loc0; }");
        assert_eq!(got.text(), "int function(int arg1){ int loc1 = arg1 + arg0; return loc1 + loc0; }");
        assert_eq!(got.collisions, vec!["arg0", "loc0"]);
        assert!(!check_normalized(&got.unit).is_empty());
    }

    #[test]
    fn c2c_keeps_names() {
        let got = normalize(
            &CodeUnit::parse(
                Language::Java,
                "@Override\npublic String toText(int value) { // convert\n return String.valueOf(value); }",
            ),
            TaskKind::C2C,
        )
        .unwrap();
        assert_eq!(got.text(), "public String toText(int value) { return String.valueOf(value); }");
        assert!(got.renames.is_empty());
    }

    #[test]
    fn errors() {
        let stmt = CodeUnit::parse(Language::Java, "return 1;");
        assert!(matches!(normalize(&stmt, TaskKind::T2C), Err(AnalysisError::NoMethod)));
        let cs = CodeUnit::parse(Language::CSharp, "int F(){ return 1; }");
        assert!(matches!(
            normalize(&cs, TaskKind::T2C),
            Err(AnalysisError::Unsupported(..))
        ));
        let empty = CodeUnit::parse(Language::Java, "  ");
        assert!(matches!(normalize(&empty, TaskKind::T2C), Err(AnalysisError::Unparseable)));
    }

    #[test]
    fn checker_reports_violations() {
        let unit = CodeUnit::parse(Language::Java, "public int f(int a) throws E { // c\n int b = a; return b; }");
        let problems = check_normalized(&unit);
        assert_eq!(problems.len(), 6, "{problems:?}");
    }
}
