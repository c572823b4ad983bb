//! Stage 3: prompt assembly, text generation and Rando spawning.

pub mod backend;
pub mod constraints;
pub mod prompt;
pub mod rando;

use std::thread;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::behavior::{AgentClass, BehaviorProfile};
use crate::config::ContentParams;
use crate::interaction::{PostId, PostKind};
use crate::log::LogEvent;
use crate::scenario::Lexicons;

pub use backend::{BackendError, OpenAiCompatibleBackend, StubBackend, TextBackend};
pub use constraints::{enforce_constraints, Violation};
pub use prompt::{assemble_prompt, PromptBundle, PromptRequest, Speaker, TargetRef};
pub use rando::{spawn_randos, Rando};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ContentError {
    #[error("{class} needs a non-empty `{lexicon}` lexicon")]
    MissingLexicon { class: AgentClass, lexicon: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Author {
    /// Index into the scenario's actor list.
    Actor(usize),
    /// Rando number.
    Rando(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Post {
    pub id: PostId,
    pub author: Author,
    pub author_is_bot: bool,
    pub author_class: AgentClass,
    pub timestep: u32,
    pub offset_secs: u32,
    pub created_at: DateTime<Utc>,
    pub kind: PostKind,
    /// For retweets, the target's text.
    pub text: String,
    pub target: Option<PostId>,
    pub narrative_id: String,
    pub hashtags: Vec<String>,
    pub urls: Vec<String>,
    /// Screen names tagged in the text.
    pub mentions: Vec<String>,
    /// Set on Repeater copies: the post being repeated.
    pub repeat_of: Option<PostId>,
    pub bend_directives: Vec<String>,
}

/// Hashtags, URLs and mentions found in a text.
pub fn parse_entities(text: &str) -> (Vec<String>, Vec<String>, Vec<String>) {
    let own = |v: Vec<&str>| v.into_iter().map(String::from).collect::<Vec<_>>();
    (
        own(constraints::extract_hashtags(text)),
        own(constraints::extract_urls(text)),
        own(constraints::extract_mentions(text)),
    )
}

/// Calls the backend, retrying transport failures with exponential backoff.
fn call_backend(
    backend: &dyn TextBackend,
    bundle: &PromptBundle,
    params: &ContentParams,
    timestep: u32,
    post_id: PostId,
    log: &mut Vec<LogEvent>,
) -> Result<String, BackendError> {
    let mut attempt = 0;
    loop {
        match backend.generate(bundle) {
            Ok(t) => return Ok(t),
            Err(e) if e.is_retriable() && attempt < params.backend_retries => {
                attempt += 1;
                log.push(LogEvent::BackendRetry {
                    timestep,
                    post_id,
                    attempt,
                    error: e.to_string(),
                });
                if params.retry_backoff_ms > 0 {
                    thread::sleep(Duration::from_millis(params.retry_backoff_ms << (attempt - 1).min(10)));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Text for one post that satisfies the author's constraints: generated,
/// regenerated up to `regen_attempts` times with the deficits spelled out,
/// then repaired if still short.
#[allow(clippy::too_many_arguments)]
pub fn generate_text(
    backend: &dyn TextBackend,
    bundle: &PromptBundle,
    profile: &BehaviorProfile,
    lexicons: &Lexicons,
    params: &ContentParams,
    timestep: u32,
    post_id: PostId,
    log: &mut Vec<LogEvent>,
) -> Result<String, BackendError> {
    let mut bundle = bundle.clone();
    let mut attempt = 0;
    loop {
        let text = call_backend(backend, &bundle, params, timestep, post_id, log)?;
        let violations = match enforce_constraints(profile, &text, lexicons) {
            Ok(()) => return Ok(text),
            Err(v) => v,
        };
        let missing: Vec<String> = violations.iter().map(ToString::to_string).collect();
        if attempt < params.regen_attempts {
            attempt += 1;
            log.push(LogEvent::Regenerated {
                timestep,
                post_id,
                attempt,
                missing: missing.clone(),
            });
            bundle.specifics = format!(
                "{} Previous draft was rejected: {}.",
                bundle.specifics,
                missing.join("; ")
            );
            continue;
        }
        log.push(LogEvent::Repaired {
            timestep,
            post_id,
            missing,
        });
        return Ok(constraints::repair(&text, &bundle.required));
    }
}
