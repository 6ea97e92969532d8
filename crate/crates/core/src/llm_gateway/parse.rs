use std::sync::OnceLock;

use regex::Regex;

use super::GatewayError;

fn identifier() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z_$][A-Za-z0-9_$]*$").expect("identifier pattern"))
}

fn bullet() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(?:[-*•+]\s*|\d+[.)]\s*)+").expect("bullet pattern"))
}

const NO_API_PHRASES: &[&str] = &[
    "none",
    "no methods",
    "no method",
    "there are no",
    "there is no",
    "n/a",
    "the code does not call",
    "the code does not use",
    "no external",
    "no api",
];

fn parse_error(what: &'static str, raw: &str) -> GatewayError {
    GatewayError::Unparseable {
        what,
        raw: raw.to_string(),
    }
}

/// Reads a method-name list out of a chat response. Items are split on
/// newlines and commas; bullets, numbering, backticks, quotes, receivers
/// and argument lists are stripped. Headings and prose items are skipped.
pub fn parse_api_list(response: &str) -> Result<Vec<String>, GatewayError> {
    let trimmed = response.trim();
    if trimmed.is_empty() {
        return Err(parse_error("API list", response));
    }
    let lowered = trimmed.to_lowercase();
    if NO_API_PHRASES.iter().any(|p| lowered.starts_with(p)) {
        return Ok(Vec::new());
    }
    let mut names: Vec<String> = Vec::new();
    for line in trimmed.lines() {
        let line = line.trim();
        if line.ends_with(':') || line.starts_with("```") {
            continue;
        }
        for item in line.split(',') {
            let item = bullet().replace(item.trim(), "");
            let mut item = item.trim_matches(|c: char| c == '`' || c == '"' || c == '\'' || c.is_whitespace());
            if let Some(open) = item.find('(') {
                item = &item[..open];
            }
            let item = item.trim_end_matches(['.', ';', ':']).trim_matches('`');
            let simple = item.rsplit(['.', ':']).next().unwrap_or(item);
            if identifier().is_match(simple) && !names.iter().any(|n| n == simple) {
                names.push(simple.to_string());
            }
        }
    }
    if names.is_empty() {
        return Err(parse_error("API list", response));
    }
    Ok(names)
}

const NEGATIVE: &[&str] = &[
    "no",
    "not",
    "does not",
    "doesn't",
    "does not contain",
    "there is no",
    "false",
    "without",
    "none",
    "lacks",
];
const AFFIRMATIVE: &[&str] = &[
    "yes",
    "true",
    "contains",
    "does contain",
    "it does",
    "has",
    "uses",
    "there is",
    "includes",
];

fn has_phrase(clause: &str, phrase: &str) -> bool {
    let padded = format!(" {clause} ");
    padded.contains(&format!(" {phrase} "))
}

/// Decides the exception-handling flag from the first clause of a chat
/// response. Negative phrases are checked first so "does not contain"
/// is not read as "contains".
pub fn parse_exception_flag(response: &str) -> Result<bool, GatewayError> {
    let first = response
        .trim()
        .split(['.', ',', ';', '!', '\n'])
        .find(|c| !c.trim().is_empty())
        .ok_or_else(|| parse_error("exception-handling answer", response))?;
    let clause: String = first
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() || c == '\'' { c } else { ' ' })
        .collect();
    let clause = clause.split_whitespace().collect::<Vec<_>>().join(" ");
    if NEGATIVE.iter().any(|p| has_phrase(&clause, p)) {
        return Ok(false);
    }
    if AFFIRMATIVE.iter().any(|p| has_phrase(&clause, p)) {
        return Ok(true);
    }
    Err(parse_error("exception-handling answer", response))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbered_list() {
        assert_eq!(parse_api_list("1. toString\n2. valueOf").unwrap(), ["toString", "valueOf"]);
    }

    #[test]
    fn decorated_items() {
        let resp = "The used methods are:\n- `Integer.parseInt()`\n- `list.size()`, `get(i)`\n* append";
        assert_eq!(parse_api_list(resp).unwrap(), ["parseInt", "size", "get", "append"]);
    }

    #[test]
    fn none_means_empty() {
        assert!(parse_api_list("None.").unwrap().is_empty());
        assert!(parse_api_list("There are no methods used.").unwrap().is_empty());
    }

    #[test]
    fn api_list_errors_keep_raw_text() {
        assert!(parse_api_list("   ").is_err());
        match parse_api_list("I cannot tell what this is doing!") {
            Err(GatewayError::Unparseable { raw, .. }) => assert_eq!(raw, "I cannot tell what this is doing!"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exception_answers() {
        assert!(!parse_exception_flag("No, the code does not contain exception handling.").unwrap());
        assert!(parse_exception_flag("Yes, it uses a try-catch block.").unwrap());
        assert!(!parse_exception_flag("The code does not contain exception handling.").unwrap());
        assert!(parse_exception_flag("The code contains exception handling: a try/catch.").unwrap());
        assert!(!parse_exception_flag("False").unwrap());
        assert!(parse_exception_flag("").is_err());
        assert!(parse_exception_flag("Maybe").is_err());
    }
}
