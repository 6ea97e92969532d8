//! Lossless lexer for Java and C# source.
//!
//! Every byte of the input is either inside a token span or inside a
//! whitespace gap between spans, so gaps + lexemes reproduce the text.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::{Keywords, Language};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Char,
    Operator,
    Punctuation,
    Comment,
    /// C# preprocessor line.
    Directive,
    Unknown,
}

impl TokenKind {
    /// Comments and directives are trivia for scoring purposes.
    pub fn is_code(self) -> bool {
        !matches!(self, TokenKind::Comment | TokenKind::Directive)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range<usize>,
}

const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "??=", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "??", "?.", "=>", "+", "-",
    "*", "/", "%", "=", "<", ">", "!", "~", "?", ":", "&", "|", "^", "@",
];

const PUNCTUATION: &[char] = &['(', ')', '{', '}', '[', ']', ';', ',', '.'];

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn eat_while(&mut self, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn at_line_start(&self) -> bool {
        self.text[..self.pos]
            .chars()
            .rev()
            .take_while(|&c| c != '\n')
            .all(char::is_whitespace)
    }

    /// Consumes a quoted literal whose opening quote is at the cursor.
    fn quoted(&mut self, quote: char, escapes: bool) {
        self.bump();
        while let Some(c) = self.bump() {
            if c == '\\' && escapes {
                self.bump();
            } else if c == quote {
                return;
            } else if c == '\n' && quote == '\'' {
                return;
            }
        }
    }

    /// `"""` ... `"""` (Java text block, C# raw string).
    fn triple_quoted(&mut self) {
        self.pos += 3;
        match self.rest().find("\"\"\"") {
            Some(end) => self.pos += end + 3,
            None => self.pos = self.text.len(),
        }
    }

    /// C# verbatim string: `""` escapes a quote, backslash is literal.
    fn verbatim(&mut self) {
        self.bump();
        while let Some(c) = self.bump() {
            if c == '"' {
                if self.peek() == Some('"') {
                    self.bump();
                } else {
                    return;
                }
            }
        }
    }

    fn number(&mut self) {
        let start = self.pos;
        let mut prev = '\0';
        while let Some(c) = self.peek() {
            let take = if c.is_ascii_alphanumeric() || c == '_' {
                true
            } else if c == '.' {
                self.peek_nth(1).is_some_and(|n| n.is_ascii_digit())
            } else if c == '+' || c == '-' {
                let literal = &self.text[start..self.pos];
                matches!(prev, 'e' | 'E' | 'p' | 'P')
                    && !literal.starts_with("0x")
                    && !literal.starts_with("0X")
            } else {
                false
            };
            if !take {
                break;
            }
            prev = c;
            self.pos += c.len_utf8();
        }
    }
}

/// Splits `text` into tokens. Never fails: unrecognised characters become
/// single-character [`TokenKind::Unknown`] tokens and unterminated literals
/// or comments run to end of input.
pub fn tokenize(language: Language, text: &str, keywords: &Keywords) -> Vec<Token> {
    let mut cur = Cursor { text, pos: 0 };
    let mut tokens = Vec::new();
    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let start = cur.pos;
        let rest = cur.rest();
        let kind = if rest.starts_with("//") {
            cur.eat_while(|c| c != '\n');
            TokenKind::Comment
        } else if rest.starts_with("/*") {
            match rest[2..].find("*/") {
                Some(end) => cur.pos += end + 4,
                None => cur.pos = text.len(),
            }
            TokenKind::Comment
        } else if language == Language::CSharp && c == '#' && cur.at_line_start() {
            cur.eat_while(|c| c != '\n');
            TokenKind::Directive
        } else if rest.starts_with("\"\"\"") {
            cur.triple_quoted();
            TokenKind::String
        } else if c == '"' {
            cur.quoted('"', true);
            TokenKind::String
        } else if c == '\'' {
            cur.quoted('\'', true);
            TokenKind::Char
        } else if language == Language::CSharp
            && (rest.starts_with("@\"") || rest.starts_with("$@\"") || rest.starts_with("@$\""))
        {
            cur.pos += rest.find('"').unwrap_or(0);
            cur.verbatim();
            TokenKind::String
        } else if language == Language::CSharp && rest.starts_with("$\"") {
            cur.bump();
            cur.quoted('"', true);
            TokenKind::String
        } else if language == Language::CSharp
            && c == '@'
            && cur.peek_nth(1).is_some_and(is_ident_start)
        {
            cur.bump();
            cur.eat_while(is_ident_continue);
            TokenKind::Identifier
        } else if c.is_ascii_digit() || (c == '.' && cur.peek_nth(1).is_some_and(|n| n.is_ascii_digit())) {
            cur.number();
            TokenKind::Number
        } else if is_ident_start(c) {
            cur.eat_while(is_ident_continue);
            if keywords.contains(&text[start..cur.pos]) {
                TokenKind::Keyword
            } else {
                TokenKind::Identifier
            }
        } else if let Some(op) = OPERATORS.iter().find(|op| rest.starts_with(**op)) {
            cur.pos += op.len();
            TokenKind::Operator
        } else if PUNCTUATION.contains(&c) {
            cur.bump();
            TokenKind::Punctuation
        } else {
            cur.bump();
            TokenKind::Unknown
        };
        tokens.push(Token {
            kind,
            span: start..cur.pos,
        });
    }
    tokens
}
