use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::backend::{complete_with_retry, response_text, ChatBackend, RetryPolicy};
use super::fixtures::ChatRequest;
use super::{BackendError, ChatMessage, Role};
use crate::prompt_forge::PromptBundle;

pub const DEFAULT_MAX_PROMPTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    /// A fresh chat for every prompt.
    Individual,
    /// Prompts share one chat until the per-session limit is reached.
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPolicy {
    pub mode: SessionMode,
    /// Ignored in individual mode.
    #[serde(default = "default_max")]
    pub max_prompts_per_session: usize,
}

fn default_max() -> usize {
    DEFAULT_MAX_PROMPTS
}

impl Default for SessionPolicy {
    fn default() -> Self {
        SessionPolicy::individual()
    }
}

impl SessionPolicy {
    pub fn individual() -> Self {
        SessionPolicy {
            mode: SessionMode::Individual,
            max_prompts_per_session: DEFAULT_MAX_PROMPTS,
        }
    }

    /// `max` is clamped to at least 1.
    pub fn continuous(max: usize) -> Self {
        SessionPolicy {
            mode: SessionMode::Continuous,
            max_prompts_per_session: max.max(1),
        }
    }

    fn limit(&self) -> usize {
        match self.mode {
            SessionMode::Individual => 1,
            SessionMode::Continuous => self.max_prompts_per_session.max(1),
        }
    }
}

impl fmt::Display for SessionPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            SessionMode::Individual => f.write_str("individual"),
            SessionMode::Continuous => write!(f, "continuous(max {})", self.max_prompts_per_session),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTranscript {
    pub session_id: String,
    pub messages: Vec<ChatMessage>,
    pub prompt_count: usize,
}

impl ChatTranscript {
    pub fn new(session_id: impl Into<String>) -> Self {
        ChatTranscript {
            session_id: session_id.into(),
            messages: Vec::new(),
            prompt_count: 0,
        }
    }

    /// Roles alternate starting with the user and `prompt_count` matches
    /// the number of user messages.
    pub fn is_well_formed(&self) -> bool {
        let alternates = self.messages.iter().enumerate().all(|(i, m)| {
            m.role
                == if i % 2 == 0 {
                    Role::User
                } else {
                    Role::Assistant
                }
        });
        let users = self.messages.iter().filter(|m| m.role == Role::User).count();
        alternates && users == self.prompt_count
    }

    pub fn user_messages(&self) -> impl Iterator<Item = &str> {
        self.messages
            .iter()
            .filter(|m| m.role == Role::User)
            .map(|m| m.content.as_str())
    }
}

/// A failed send, with the session as it stood before the failing prompt.
#[derive(Debug)]
pub struct SendError {
    pub source: BackendError,
    pub transcript: ChatTranscript,
    pub prompt: String,
}

impl fmt::Display for SendError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "session {} after {} prompt(s): {}",
            self.transcript.session_id, self.transcript.prompt_count, self.source
        )
    }
}

impl std::error::Error for SendError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Request settings shared by every prompt in a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestContext {
    pub model: String,
    pub controls: BTreeMap<String, serde_json::Value>,
    pub round: u32,
    pub retry: RetryPolicy,
}

impl RequestContext {
    pub fn request(&self, messages: Vec<ChatMessage>) -> ChatRequest {
        ChatRequest {
            model: self.model.clone(),
            messages,
            controls: self.controls.clone(),
            round: self.round,
        }
    }
}

/// Sends one prompt in a fresh session.
pub fn send_individual(
    backend: &dyn ChatBackend,
    context: &RequestContext,
    session_id: &str,
    prompt: &str,
) -> Result<(String, ChatTranscript), SendError> {
    let mut transcript = ChatTranscript::new(session_id);
    let response = exchange(backend, context, &mut transcript, prompt)?;
    Ok((response, transcript))
}

/// Sends `prompt` on top of `transcript` and appends both messages on
/// success. On failure the transcript is left untouched.
fn exchange(
    backend: &dyn ChatBackend,
    context: &RequestContext,
    transcript: &mut ChatTranscript,
    prompt: &str,
) -> Result<String, SendError> {
    let mut messages = transcript.messages.clone();
    messages.push(ChatMessage::new(Role::User, prompt));
    let request = context.request(messages);
    let outcome = complete_with_retry(backend, &request, context.retry).and_then(|body| response_text(&body));
    match outcome {
        Ok(text) => {
            transcript.messages.push(ChatMessage::new(Role::User, prompt));
            transcript.messages.push(ChatMessage::new(Role::Assistant, text.clone()));
            transcript.prompt_count += 1;
            Ok(text)
        }
        Err(source) => Err(SendError {
            source,
            transcript: transcript.clone(),
            prompt: prompt.to_string(),
        }),
    }
}

/// Routes prompts into sessions according to a [`SessionPolicy`].
/// Session ids are `<scope>-r<round>-s<n>`, so they are reproducible.
pub struct SessionManager<'b> {
    backend: &'b dyn ChatBackend,
    policy: SessionPolicy,
    context: RequestContext,
    scope: String,
    current: Option<ChatTranscript>,
    finished: Vec<ChatTranscript>,
    opened: usize,
}

impl<'b> SessionManager<'b> {
    pub fn new(
        backend: &'b dyn ChatBackend,
        policy: SessionPolicy,
        context: RequestContext,
        scope: impl Into<String>,
    ) -> Self {
        SessionManager {
            backend,
            policy,
            context,
            scope: scope.into(),
            current: None,
            finished: Vec::new(),
            opened: 0,
        }
    }

    pub fn policy(&self) -> SessionPolicy {
        self.policy
    }

    /// Id of the session the last successful prompt went to.
    pub fn current_session_id(&self) -> Option<&str> {
        self.current.as_ref().map(|t| t.session_id.as_str())
    }

    fn open(&mut self) -> ChatTranscript {
        let id = format!("{}-r{}-s{:04}", self.scope, self.context.round, self.opened);
        self.opened += 1;
        log::debug!("opening session {id}");
        ChatTranscript::new(id)
    }

    pub fn send(&mut self, bundle: &PromptBundle) -> Result<String, SendError> {
        self.send_text(&bundle.message())
    }

    /// Sends one prompt, rotating to a new session first when the current
    /// one has reached the policy's limit.
    pub fn send_text(&mut self, prompt: &str) -> Result<String, SendError> {
        let limit = self.policy.limit();
        let mut transcript = match self.current.take() {
            Some(t) if t.prompt_count < limit => t,
            Some(full) => {
                self.finished.push(full);
                self.open()
            }
            None => self.open(),
        };
        let result = exchange(self.backend, &self.context, &mut transcript, prompt);
        if transcript.prompt_count > 0 {
            self.current = Some(transcript);
        }
        result
    }

    /// All transcripts in opening order, empty sessions excluded.
    pub fn finish(mut self) -> Vec<ChatTranscript> {
        if let Some(t) = self.current.take() {
            self.finished.push(t);
        }
        self.finished
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm_gateway::FnBackend;
    use proptest::prelude::*;

    fn context() -> RequestContext {
        RequestContext {
            model: "m".into(),
            controls: BTreeMap::new(),
            round: 0,
            retry: RetryPolicy::none(),
        }
    }

    /// Responds with the number of messages it saw, exposing context length.
    fn counter() -> FnBackend<impl Fn(&ChatRequest) -> Result<String, BackendError> + Send + Sync> {
        FnBackend::new("counter", |r: &ChatRequest| Ok(format!("seen {}", r.messages.len())))
    }

    fn run(policy: SessionPolicy, prompts: usize) -> Vec<ChatTranscript> {
        let backend = counter();
        let mut mgr = SessionManager::new(&backend, policy, context(), "t");
        for i in 0..prompts {
            mgr.send_text(&format!("p{i}")).unwrap();
        }
        mgr.finish()
    }

    #[test]
    fn individual_sessions_have_two_messages() {
        let ts = run(SessionPolicy::individual(), 3);
        assert_eq!(ts.len(), 3);
        assert!(ts.iter().all(|t| t.messages.len() == 2 && t.is_well_formed()));
        assert_eq!(ts[2].messages[1].content, "seen 1");
    }

    #[test]
    fn continuous_partition() {
        let ts = run(SessionPolicy::continuous(2), 5);
        assert_eq!(ts.iter().map(|t| t.prompt_count).collect::<Vec<_>>(), [2, 2, 1]);
        assert_eq!(ts[0].messages[3].content, "seen 3");
        assert_eq!(ts[0].session_id, "t-r0-s0000");
        assert_eq!(ts[2].session_id, "t-r0-s0002");
    }

    #[test]
    fn failure_keeps_transcript_and_session() {
        let backend = FnBackend::new("picky", |r: &ChatRequest| {
            if r.messages.last().unwrap().content == "bad" {
                Err(BackendError::Transport {
                    message: "boom".into(),
                    retryable: false,
                })
            } else {
                Ok("fine".into())
            }
        });
        let mut mgr = SessionManager::new(&backend, SessionPolicy::continuous(5), context(), "t");
        mgr.send_text("a").unwrap();
        let err = mgr.send_text("bad").unwrap_err();
        assert_eq!(err.transcript.prompt_count, 1);
        assert_eq!(err.prompt, "bad");
        mgr.send_text("b").unwrap();
        let ts = mgr.finish();
        assert_eq!(ts.len(), 1);
        assert_eq!(ts[0].user_messages().collect::<Vec<_>>(), ["a", "b"]);
        assert!(ts[0].is_well_formed());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn partition_property(limit in 1usize..8, count in 0usize..30) {
            let ts = run(SessionPolicy::continuous(limit), count);
            let expected: Vec<usize> = (0..count.div_ceil(limit))
                .map(|i| (count - i * limit).min(limit))
                .collect();
            prop_assert_eq!(ts.iter().map(|t| t.prompt_count).collect::<Vec<_>>(), expected);
            prop_assert!(ts.iter().all(|t| t.is_well_formed() && t.prompt_count <= limit));
            let order: Vec<String> = ts.iter().flat_map(|t| t.user_messages().map(str::to_string)).collect();
            prop_assert_eq!(order, (0..count).map(|i| format!("p{i}")).collect::<Vec<_>>());
        }
    }
}
