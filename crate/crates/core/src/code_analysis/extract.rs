use std::sync::OnceLock;

use regex::Regex;
use tree_sitter::Node;

use super::lexer::{tokenize, TokenKind};
use super::{preorder, AnalysisError, CodeUnit, Keywords, Language};

const FENCE: &str = "```";

fn fenced_block(response: &str) -> Option<&str> {
    let open = response.find(FENCE)?;
    let after_tag = &response[open + FENCE.len()..];
    // The rest of the opening line is the info string (e.g. `java`).
    let body = match after_tag.find('\n') {
        Some(nl) => &after_tag[nl + 1..],
        None => return None,
    };
    let body = match body.find(FENCE) {
        Some(close) => &body[..close],
        None => body,
    };
    Some(body.trim())
}

fn header_regexes() -> &'static (Regex, Regex) {
    static RES: OnceLock<(Regex, Regex)> = OnceLock::new();
    RES.get_or_init(|| {
        let method = Regex::new(
            r"(?m)(?:@\w+(?:\([^)]*\))?\s+)*(?:(?:public|private|protected|static|final|abstract|synchronized|native|default)\s+)*(?:<[^<>(){};]*>\s+)?(?P<ty>[A-Za-z_][\w.]*(?:<[^(){};]*>)?(?:\[\])*)\s+(?P<name>[A-Za-z_]\w*)\s*\([^(){};]*\)\s*(?:throws\s+[\w.,\s]+?)?\s*\{",
        )
        .expect("method header pattern");
        let class = Regex::new(
            r"(?m)(?:(?:public|private|protected|static|final|abstract)\s+)*\b(?:class|interface|enum)\s+[A-Za-z_]\w*[^{;]*\{",
        )
        .expect("class header pattern");
        (method, class)
    })
}

const NOT_A_METHOD: &[&str] = &[
    "if", "for", "while", "switch", "catch", "synchronized", "return", "new", "else", "throw", "try",
    "do", "case",
];

fn first_header(response: &str) -> Option<usize> {
    let (method, class) = header_regexes();
    let method_start = method
        .captures_iter(response)
        .find(|c| !NOT_A_METHOD.contains(&&c["ty"]) && !NOT_A_METHOD.contains(&&c["name"]))
        .map(|c| c.get(0).expect("whole match").start());
    let class_start = class.find(response).map(|m| m.start());
    match (method_start, class_start) {
        (Some(m), Some(c)) => Some(m.min(c)),
        (m, c) => m.or(c),
    }
}

/// From `start`, the region up to the brace that closes the first `{`.
fn balanced_region(response: &str, start: usize) -> Option<&str> {
    let rest = &response[start..];
    let keywords = Keywords::builtin(Language::Java);
    let mut depth = 0usize;
    let mut opened = false;
    for token in tokenize(Language::Java, rest, &keywords) {
        if token.kind != TokenKind::Punctuation {
            continue;
        }
        match &rest[token.span.clone()] {
            "{" => {
                depth += 1;
                opened = true;
            }
            "}" if opened => {
                depth -= 1;
                if depth == 0 {
                    return Some(&rest[..token.span.end]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Pulls the code out of a chat response: the first fenced block if there is
/// one, else the brace-balanced region starting at the first method or class
/// header, else the whole response.
pub fn extract_code_block(response: &str) -> String {
    if let Some(block) = fenced_block(response) {
        return block.to_string();
    }
    if let Some(region) = first_header(response).and_then(|s| balanced_region(response, s)) {
        return region.to_string();
    }
    response.to_string()
}

/// A single method cut out of a larger unit.
#[derive(Debug, Clone)]
pub struct IsolatedMethod {
    pub unit: CodeUnit,
    /// More than one candidate method was present.
    pub ambiguous: bool,
    /// Names of the candidate methods that were dropped.
    pub discarded: Vec<String>,
}

fn is_method(language: Language, kind: &str) -> bool {
    match language {
        Language::Java => kind == "method_declaration",
        Language::CSharp => matches!(kind, "method_declaration" | "local_function_statement"),
    }
}

fn enclosing_class_name<'a>(unit: &'a CodeUnit, node: Node<'_>) -> Option<&'a str> {
    let mut cur = node.parent();
    while let Some(n) = cur {
        if matches!(n.kind(), "class_declaration" | "interface_declaration" | "enum_declaration") {
            return n.child_by_field_name("name").map(|name| unit.node_text(name));
        }
        cur = n.parent();
    }
    None
}

/// Top-level method declarations (methods nested in other methods, e.g.
/// inside anonymous classes, are not candidates).
pub(crate) fn top_level_methods(unit: &CodeUnit) -> Vec<Node<'_>> {
    let language = unit.language();
    preorder(unit.root())
        .into_iter()
        .filter(|n| is_method(language, n.kind()))
        .filter(|n| {
            let mut cur = n.parent();
            while let Some(p) = cur {
                if is_method(language, p.kind()) {
                    return false;
                }
                cur = p.parent();
            }
            true
        })
        .collect()
}

/// Reduces a unit to one method. With several candidates, methods of the
/// class named `class_name` are preferred and the first candidate wins.
pub fn isolate_method(unit: &CodeUnit, class_name: Option<&str>) -> Result<IsolatedMethod, AnalysisError> {
    let methods = top_level_methods(unit);
    let mut candidates: Vec<Node<'_>> = match class_name {
        Some(wanted) => methods
            .iter()
            .copied()
            .filter(|m| enclosing_class_name(unit, *m) == Some(wanted))
            .collect(),
        None => Vec::new(),
    };
    if candidates.is_empty() {
        candidates = methods;
    }
    let (first, rest) = candidates.split_first().ok_or(AnalysisError::NoMethod)?;
    let discarded: Vec<String> = rest
        .iter()
        .filter_map(|m| m.child_by_field_name("name"))
        .map(|n| unit.node_text(n).to_string())
        .collect();
    if !discarded.is_empty() {
        log::info!("isolate_method: kept the first method, dropped {discarded:?}");
    }
    Ok(IsolatedMethod {
        unit: CodeUnit::parse(unit.language(), unit.node_text(*first)),
        ambiguous: !rest.is_empty(),
        discarded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fenced_block_wins() {
        let resp = "Here is the code:\n```java\nint f(){return 1;}\n```";
        assert_eq!(extract_code_block(resp), "int f(){return 1;}");
    }

    #[test]
    fn raw_code_unchanged() {
        assert_eq!(extract_code_block("int f(){return 1;}"), "int f(){return 1;}");
        assert_eq!(extract_code_block("x = 1;"), "x = 1;");
    }

    #[test]
    fn header_region_without_fence() {
        let resp = "Sure! You can write:\n\npublic String name(int id) {\n  if (id > 0) { return \"}\"; }\n  return null;\n}\n\nThis returns the name.";
        assert_eq!(
            extract_code_block(resp),
            "public String name(int id) {\n  if (id > 0) { return \"}\"; }\n  return null;\n}"
        );
    }

    /// Recorded-response shape: prose, then a whole class in a fence.
    #[test]
    fn full_class_response_keeps_class() {
        let resp = "To do this, define a class:\n```java\npublic class Util {\n    private int n;\n\n    public String render() {\n        return Integer.toString(n);\n    }\n}\n```\nThe method `render` converts the field.";
        let block = extract_code_block(resp);
        assert!(block.starts_with("public class Util {"));
        assert!(block.ends_with('}'));
        let isolated = isolate_method(&CodeUnit::parse(Language::Java, block), Some("Util")).unwrap();
        assert_eq!(
            isolated.unit.text(),
            "public String render() {\n        return Integer.toString(n);\n    }"
        );
        assert!(!isolated.ambiguous);
    }

    #[test]
    fn class_header_without_fence() {
        let resp = "Here:\nclass A { int f() { return 1; } }\nDone.";
        assert_eq!(extract_code_block(resp), "class A { int f() { return 1; } }");
    }

    #[test]
    fn control_flow_is_not_a_header() {
        let resp = "if (x) { y(); }";
        assert_eq!(extract_code_block(resp), resp);
    }

    #[test]
    fn isolate_bare_method_is_identity() {
        let text = "int f(int a){ return a; }";
        let got = isolate_method(&CodeUnit::parse(Language::Java, text), None).unwrap();
        assert_eq!(got.unit.text(), text);
        assert!(!got.ambiguous && got.discarded.is_empty());
    }

    #[test]
    fn two_methods_flag_ambiguity() {
        let text = "class A { int first(){ return helper(); } int helper(){ return 1; } }";
        let got = isolate_method(&CodeUnit::parse(Language::Java, text), None).unwrap();
        assert_eq!(got.unit.text(), "int first(){ return helper(); }");
        assert!(got.ambiguous);
        assert_eq!(got.discarded, vec!["helper"]);
    }

    #[test]
    fn anonymous_class_methods_are_not_candidates() {
        let text = "Runnable make(){ return new Runnable(){ public void run(){ } }; }";
        let got = isolate_method(&CodeUnit::parse(Language::Java, text), None).unwrap();
        assert!(!got.ambiguous);
        assert_eq!(got.unit.text(), text);
    }

    #[test]
    fn zero_methods_is_error() {
        let unit = CodeUnit::parse(Language::Java, "int x = 1;");
        assert!(matches!(isolate_method(&unit, None), Err(AnalysisError::NoMethod)));
    }
}
