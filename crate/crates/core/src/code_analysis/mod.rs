//! Parsing and static analysis of generated and reference code.
//!
//! A [`CodeUnit`] pairs a lossless token stream with a best-effort
//! tree-sitter syntax tree. The analyses built on it feed prompt
//! construction (behaviour specs), output post-processing (code-block
//! extraction, method isolation, normalization) and the CodeBLEU
//! sub-metrics (subtree signatures, def-use edges).

mod behaviour;
mod dataflow;
mod extract;
pub mod lexer;
mod normalize;
mod subtrees;

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::{Node, Parser, Tree};

pub use behaviour::{extract_behaviour, BehaviourSpec};
pub use dataflow::{dataflow_edges, DataflowEdge};
pub use extract::{extract_code_block, isolate_method, IsolatedMethod};
pub use lexer::{Token, TokenKind};
pub use normalize::{
    check_normalized, normalize, strip_non_semantic, NormalizedCode, Rename, RenameRole, METHOD_NAME,
};
pub use subtrees::{ast_subtrees, SubtreeMultiset};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("source is not valid UTF-8: {0}")]
    Utf8(#[from] std::str::Utf8Error),
    #[error("code could not be parsed at all")]
    Unparseable,
    #[error("no method declaration found")]
    NoMethod,
    #[error("{0} is not supported for {1}")]
    Unsupported(&'static str, Language),
    #[error("failed to read keyword list {path}: {message}")]
    Keywords { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Java,
    CSharp,
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Java => "Java",
            Language::CSharp => "C#",
        })
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "java" => Ok(Language::Java),
            "csharp" | "c#" | "cs" => Ok(Language::CSharp),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

const JAVA_KEYWORDS: &str = include_str!("../../keywords/java.txt");
const CSHARP_KEYWORDS: &str = include_str!("../../keywords/csharp.txt");

/// Reserved words of a language, one per line in the shipped lists.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Keywords(BTreeSet<String>);

impl Keywords {
    pub fn parse(text: &str) -> Self {
        Keywords(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string)
                .collect(),
        )
    }

    pub fn builtin(language: Language) -> Self {
        match language {
            Language::Java => Self::parse(JAVA_KEYWORDS),
            Language::CSharp => Self::parse(CSHARP_KEYWORDS),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, AnalysisError> {
        let path = path.as_ref();
        std::fs::read_to_string(path)
            .map(|t| Self::parse(&t))
            .map_err(|e| AnalysisError::Keywords {
                path: path.display().to_string(),
                message: e.to_string(),
            })
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

thread_local! {
    static JAVA_PARSER: RefCell<Parser> = RefCell::new(new_parser(Language::Java));
    static CSHARP_PARSER: RefCell<Parser> = RefCell::new(new_parser(Language::CSharp));
    static JAVA_KW: Keywords = Keywords::builtin(Language::Java);
    static CSHARP_KW: Keywords = Keywords::builtin(Language::CSharp);
}

fn new_parser(language: Language) -> Parser {
    let mut parser = Parser::new();
    let grammar: tree_sitter::Language = match language {
        Language::Java => tree_sitter_java::LANGUAGE.into(),
        Language::CSharp => tree_sitter_c_sharp::LANGUAGE.into(),
    };
    parser
        .set_language(&grammar)
        .expect("bundled grammar matches the tree-sitter ABI");
    parser
}

fn parse_tree(language: Language, text: &str) -> Tree {
    let run = |cell: &RefCell<Parser>| {
        cell.borrow_mut()
            .parse(text, None)
            .expect("parser has a language and no timeout")
    };
    match language {
        Language::Java => JAVA_PARSER.with(run),
        Language::CSharp => CSHARP_PARSER.with(run),
    }
}

/// Source text with its token stream and syntax tree.
#[derive(Clone)]
pub struct CodeUnit {
    language: Language,
    text: String,
    tokens: Vec<Token>,
    tree: Tree,
}

impl fmt::Debug for CodeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodeUnit")
            .field("language", &self.language)
            .field("text", &self.text)
            .field("tokens", &self.tokens.len())
            .field("partial", &self.is_partial())
            .finish()
    }
}

impl PartialEq for CodeUnit {
    fn eq(&self, other: &Self) -> bool {
        self.language == other.language && self.text == other.text
    }
}

impl CodeUnit {
    /// Tokenizes and parses `text`. Syntax errors never abort; they mark the
    /// unit as partially parsed.
    pub fn parse(language: Language, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = match language {
            Language::Java => JAVA_KW.with(|kw| lexer::tokenize(language, &text, kw)),
            Language::CSharp => CSHARP_KW.with(|kw| lexer::tokenize(language, &text, kw)),
        };
        let tree = parse_tree(language, &text);
        CodeUnit {
            language,
            text,
            tokens,
            tree,
        }
    }

    pub fn parse_bytes(language: Language, bytes: &[u8]) -> Result<Self, AnalysisError> {
        Ok(Self::parse(language, std::str::from_utf8(bytes)?))
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    /// True when the tree contains error or missing nodes.
    pub fn is_partial(&self) -> bool {
        self.tree.root_node().has_error()
    }

    /// True when nothing outside error nodes was recognised.
    pub fn is_unparseable(&self) -> bool {
        let root = self.root();
        if root.kind() == "ERROR" || !self.tokens.iter().any(|t| t.kind.is_code()) {
            return true;
        }
        let mut cursor = root.walk();
        let recognised = root
            .named_children(&mut cursor)
            .any(|c| c.kind() != "ERROR" && !is_comment(c.kind()));
        !recognised
    }

    pub fn node_text(&self, node: Node<'_>) -> &str {
        &self.text[node.byte_range()]
    }

    /// Lexemes of all code tokens (comments and directives excluded).
    pub fn lexemes(&self) -> Vec<&str> {
        self.tokens
            .iter()
            .filter(|t| t.kind.is_code())
            .map(|t| &self.text[t.span.clone()])
            .collect()
    }

    /// Whitespace between tokens followed by each token, in order. Joining
    /// the result (plus trailing whitespace) reproduces [`CodeUnit::text`].
    pub fn gaps_and_lexemes(&self) -> Vec<(&str, &str)> {
        let mut pos = 0;
        let mut out = Vec::with_capacity(self.tokens.len());
        for t in &self.tokens {
            out.push((&self.text[pos..t.span.start], &self.text[t.span.clone()]));
            pos = t.span.end;
        }
        out
    }
}

pub(crate) fn is_comment(kind: &str) -> bool {
    matches!(kind, "line_comment" | "block_comment" | "comment")
}

/// All nodes of the subtree rooted at `node`, in pre-order.
pub(crate) fn preorder(node: Node<'_>) -> Vec<Node<'_>> {
    let mut out = Vec::new();
    let mut cursor = node.walk();
    loop {
        out.push(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.node() == node {
                return out;
            }
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return out;
            }
        }
    }
}
