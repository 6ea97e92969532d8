//! Chat backends, session policies and record/replay fixtures.

mod backend;
mod fixtures;
mod parse;
mod session;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{
    complete_with_retry, completion_body, response_text, BackendConfig, ChatBackend, FnBackend, HttpBackend,
    RecordingBackend, ReplayBackend, RetryPolicy, DEFAULT_API_KEY_ENV, DEFAULT_ENDPOINT, DEFAULT_MODEL,
};
pub use fixtures::{ChatRequest, FixtureEntry, FixtureStore};
pub use parse::{parse_api_list, parse_exception_flag};
pub use session::{
    send_individual, ChatTranscript, RequestContext, SendError, SessionManager, SessionMode, SessionPolicy,
    DEFAULT_MAX_PROMPTS,
};

use crate::prompt_forge::{extraction_prompt, ExtractionKind, PromptError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        ChatMessage {
            role,
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure: {message}")]
    Transport { message: String, retryable: bool },
    #[error("backend answered HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("no recorded response for request key {key}")]
    ReplayMiss { key: String },
    #[error("malformed response ({message}): {body}")]
    MalformedResponse { message: String, body: String },
    #[error("credential variable {0} is not set")]
    Credentials(String),
    #[error("fixture {key} already holds a different response")]
    Integrity { key: String },
    #[error("fixture store: {0}")]
    Io(String),
}

impl BackendError {
    /// Failures of the remote service or the network, as opposed to
    /// replay misses and local problems.
    pub fn is_transport(&self) -> bool {
        matches!(self, BackendError::Transport { .. } | BackendError::Status { .. })
    }

    pub fn is_retryable(&self) -> bool {
        match self {
            BackendError::Transport { retryable, .. } => *retryable,
            BackendError::Status { code, .. } => *code == 429 || *code >= 500,
            _ => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Send(#[from] SendError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("could not parse {what} from response: {raw:?}")]
    Unparseable { what: &'static str, raw: String },
}

/// One half of a behaviour spec as answered by the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtractedFact {
    ApiNames(Vec<String>),
    UsesExceptions(bool),
}

impl fmt::Display for ExtractedFact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtractedFact::ApiNames(names) => write!(f, "api names [{}]", names.join(", ")),
            ExtractedFact::UsesExceptions(b) => write!(f, "uses exceptions: {b}"),
        }
    }
}

/// Asks the model about `code` in its own individual session and parses
/// the answer.
pub fn extract_via_llm(
    backend: &dyn ChatBackend,
    context: &RequestContext,
    session_id: &str,
    kind: ExtractionKind,
    code: &str,
) -> Result<(ExtractedFact, ChatTranscript), GatewayError> {
    let prompt = extraction_prompt(kind, code)?;
    let (response, transcript) = send_individual(backend, context, session_id, &prompt)?;
    let fact = match kind {
        ExtractionKind::ApiList => ExtractedFact::ApiNames(parse_api_list(&response)?),
        ExtractionKind::ExceptionHandling => ExtractedFact::UsesExceptions(parse_exception_flag(&response)?),
    };
    Ok((fact, transcript))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub recorded: usize,
    pub already_present: usize,
    pub misses: usize,
}

/// Sends every request to `live` and stores the outcomes. Transport
/// failures become miss entries; other errors abort.
pub fn record_fixtures(
    requests: &[ChatRequest],
    live: &dyn ChatBackend,
    store: &FixtureStore,
    retry: RetryPolicy,
) -> Result<RecordSummary, BackendError> {
    let mut summary = RecordSummary::default();
    for request in requests {
        let key = request.key();
        if let Some(FixtureEntry::Response(_)) = store.get(&key)? {
            summary.already_present += 1;
            continue;
        }
        match complete_with_retry(live, request, retry) {
            Ok(body) => {
                store.put_response(&key, &body)?;
                summary.recorded += 1;
            }
            Err(e) if e.is_transport() => {
                log::warn!("recording {key}: {e}");
                store.put_miss(&key, &e.to_string())?;
                summary.misses += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn context() -> RequestContext {
        RequestContext {
            model: "m".into(),
            controls: BTreeMap::new(),
            round: 0,
            retry: RetryPolicy::none(),
        }
    }

    #[test]
    fn extraction_in_separate_sessions() {
        let backend = FnBackend::new("fake", |r: &ChatRequest| {
            let prompt = &r.messages[0].content;
            assert_eq!(r.messages.len(), 1);
            Ok(if prompt.starts_with("list") {
                "1. toString\n2. valueOf".to_string()
            } else {
                "No, the code does not contain exception handling.".to_string()
            })
        });
        let code = "String f(int n){ return String.valueOf(n).toString(); }";
        let (apis, t1) = extract_via_llm(&backend, &context(), "x-0", ExtractionKind::ApiList, code).unwrap();
        let (exc, t2) = extract_via_llm(&backend, &context(), "x-1", ExtractionKind::ExceptionHandling, code).unwrap();
        assert_eq!(apis, ExtractedFact::ApiNames(vec!["toString".into(), "valueOf".into()]));
        assert_eq!(exc, ExtractedFact::UsesExceptions(false));
        assert_ne!(t1.session_id, t2.session_id);
    }

    #[test]
    fn extraction_errors() {
        let backend = FnBackend::new("blank", |_: &ChatRequest| Ok(String::new()));
        assert!(matches!(
            extract_via_llm(&backend, &context(), "s", ExtractionKind::ApiList, "x();"),
            Err(GatewayError::Unparseable { .. })
        ));
        assert!(matches!(
            extract_via_llm(&backend, &context(), "s", ExtractionKind::ApiList, ""),
            Err(GatewayError::Prompt(PromptError::EmptyCode))
        ));
    }

    #[test]
    fn record_summary_counts() {
        let dir = tempfile::tempdir().unwrap();
        let store = FixtureStore::create(dir.path()).unwrap();
        let live = FnBackend::new("live", |r: &ChatRequest| {
            if r.round == 1 {
                Err(BackendError::Transport {
                    message: "down".into(),
                    retryable: false,
                })
            } else {
                Ok("ok".into())
            }
        });
        let summary = record_fixtures(&[], &live, &store, RetryPolicy::none()).unwrap();
        assert_eq!(summary, RecordSummary::default());
        assert!(store.is_empty().unwrap());

        let reqs: Vec<ChatRequest> = (0..3)
            .map(|round| {
                let mut r = context().request(vec![ChatMessage::new(Role::User, "p")]);
                r.round = round;
                r
            })
            .collect();
        let summary = record_fixtures(&reqs, &live, &store, RetryPolicy::none()).unwrap();
        assert_eq!(
            summary,
            RecordSummary {
                recorded: 2,
                already_present: 0,
                misses: 1
            }
        );
        let again = record_fixtures(&reqs, &live, &store, RetryPolicy::none()).unwrap();
        assert_eq!(again.already_present, 2);
        assert_eq!(again.misses, 1);
    }
}
