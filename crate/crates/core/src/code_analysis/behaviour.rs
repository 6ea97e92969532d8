use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use super::{preorder, AnalysisError, CodeUnit, Language};

/// Required API calls and exception-handling flag for a behaviour prompt.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "SpecRepr")]
pub struct BehaviourSpec {
    api_names: Vec<String>,
    pub uses_exceptions: bool,
}

impl BehaviourSpec {
    /// Drops empty names and repeated names, keeping first occurrences.
    pub fn new<I, S>(api_names: I, uses_exceptions: bool) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = Vec::new();
        for name in api_names {
            let name = name.into();
            let name = name.trim();
            if !name.is_empty() && !names.iter().any(|n| n == name) {
                names.push(name.to_string());
            }
        }
        BehaviourSpec {
            api_names: names,
            uses_exceptions,
        }
    }

    pub fn api_names(&self) -> &[String] {
        &self.api_names
    }
}

#[derive(Deserialize)]
struct SpecRepr {
    api_names: Vec<String>,
    uses_exceptions: bool,
}

impl From<SpecRepr> for BehaviourSpec {
    fn from(repr: SpecRepr) -> Self {
        BehaviourSpec::new(repr.api_names, repr.uses_exceptions)
    }
}

const JAVA_EXCEPTION_KINDS: &[&str] = &[
    "try_statement",
    "try_with_resources_statement",
    "catch_clause",
    "finally_clause",
    "throw_statement",
];
const CSHARP_EXCEPTION_KINDS: &[&str] = &[
    "try_statement",
    "catch_clause",
    "finally_clause",
    "throw_statement",
    "throw_expression",
];

/// Simple name of the method called at an invocation node, if `node` is one.
fn invoked_name<'t>(language: Language, node: Node<'t>) -> Option<Node<'t>> {
    match (language, node.kind()) {
        (Language::Java, "method_invocation") => node.child_by_field_name("name"),
        (Language::CSharp, "invocation_expression") => {
            let mut target = node.child_by_field_name("function")?;
            loop {
                match target.kind() {
                    "identifier" => return Some(target),
                    "member_access_expression" => target = target.child_by_field_name("name")?,
                    "generic_name" => target = target.named_child(0)?,
                    _ => return None,
                }
            }
        }
        _ => None,
    }
}

/// Collects invoked method names in source order and whether any
/// try/catch/finally or throw construct occurs.
pub fn extract_behaviour(unit: &CodeUnit) -> Result<BehaviourSpec, AnalysisError> {
    if unit.is_unparseable() {
        return Err(AnalysisError::Unparseable);
    }
    let exception_kinds = match unit.language() {
        Language::Java => JAVA_EXCEPTION_KINDS,
        Language::CSharp => CSHARP_EXCEPTION_KINDS,
    };
    let mut sites = Vec::new();
    let mut uses_exceptions = false;
    for node in preorder(unit.root()) {
        if exception_kinds.contains(&node.kind()) {
            uses_exceptions = true;
        }
        if let Some(name) = invoked_name(unit.language(), node) {
            sites.push((name.start_byte(), unit.node_text(name).to_string()));
        }
    }
    sites.sort_by_key(|(pos, _)| *pos);
    Ok(BehaviourSpec::new(
        sites.into_iter().map(|(_, name)| name),
        uses_exceptions,
    ))
}
