//! Text generation backends.

use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::constraints::{post_length, truncate_to, MAX_LEN};
use super::prompt::PromptBundle;
use crate::interaction::PostKind;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("http status {0}")]
    Status(u16),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl BackendError {
    /// Whether another attempt might succeed.
    pub fn is_retriable(&self) -> bool {
        match self {
            BackendError::Transport(_) => true,
            BackendError::Status(s) => *s == 429 || *s >= 500,
            BackendError::Malformed(_) => false,
        }
    }
}

pub trait TextBackend: Send + Sync {
    fn name(&self) -> &str;
    fn generate(&self, bundle: &PromptBundle) -> Result<String, BackendError>;
}

/// Deterministic template writer; needs no network.
#[derive(Debug, Clone, Copy, Default)]
pub struct StubBackend;

const OPENERS: [&str; 4] = ["Heads up:", "So,", "Big news.", "Honestly,"];

fn tone_opener(tone: &str, pick: usize) -> &'static str {
    let options: &[&str] = match tone.to_ascii_lowercase().as_str() {
        "enthusiastic" | "excited" | "celebratory" => &["Wow!", "Huge day!", "Love this!"],
        "angry" | "hostile" | "outraged" => &["Unbelievable.", "Enough is enough.", "This is a disgrace."],
        "sarcastic" => &["Oh great.", "Sure, totally normal.", "Who could have guessed."],
        "formal" | "official" => &["Statement:", "Update:", "Please note:"],
        "worried" | "anxious" => &["Worrying:", "Not sure about this.", "Hmm."],
        "informative" | "neutral" => &["FYI:", "Update:", "Reminder:"],
        "friendly" | "casual" => &["Hey all,", "Ok so", "Fun fact:"],
        _ => &OPENERS,
    };
    options[pick % options.len()]
}

fn maneuver_phrase(name: &str) -> &'static str {
    match name {
        "bridge" => "We are all in this together.",
        "back" => "Proud to stand with them.",
        "explain" => "Here is what actually happened.",
        "enhance" => "This is bigger than anyone thinks.",
        "engage" => "What do you think?",
        "excite" => "Best news all week!",
        "dismay" => "This is troubling.",
        "distort" => "Not what they want you to hear.",
        "dismiss" => "The critics do not matter.",
        "distract" => "Meanwhile, nobody talks about the weather.",
        _ => "Worth a closer look.",
    }
}

fn key_sentence(description: &str) -> &str {
    let d = description.trim();
    match d.find(['.', '!', '?']) {
        Some(i) => &d[..=i],
        None => d,
    }
}

impl TextBackend for StubBackend {
    fn name(&self) -> &str {
        "stub"
    }

    fn generate(&self, b: &PromptBundle) -> Result<String, BackendError> {
        let digest = Sha256::digest(b.render().as_bytes());
        let pick = digest[0] as usize;
        let opener = match b.tone.first() {
            Some(t) => tone_opener(t, pick),
            None => OPENERS[pick % OPENERS.len()],
        };
        let lead = match b.kind {
            PostKind::Quote => "Look at this.",
            PostKind::Reply => "Agreed, and",
            _ => "",
        };
        let mut tail: Vec<String> = Vec::new();
        for d in &b.bend_directives {
            tail.push(maneuver_phrase(d).to_string());
        }
        if b.emotional {
            tail.push("I can't believe it!!".to_string());
        }
        tail.extend(b.required.iter().cloned());
        if let Some(h) = &b.hashtag {
            tail.push(format!("#{h}"));
        }
        let tail = tail.join(" ");
        let head: String = [opener, lead]
            .iter()
            .filter(|s| !s.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ");
        let fixed = post_length(&head) + post_length(&tail) + 2;
        let body = truncate_to(key_sentence(&b.narrative), MAX_LEN.saturating_sub(fixed));
        let text = [head.as_str(), body.as_str(), tail.as_str()]
            .iter()
            .filter(|s| !s.is_empty())
            .copied()
            .collect::<Vec<_>>()
            .join(" ");
        Ok(truncate_to(&text, MAX_LEN))
    }
}

/// Chat-completion client for any server speaking the common JSON shape.
pub struct OpenAiCompatibleBackend {
    url: String,
    model: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl OpenAiCompatibleBackend {
    pub fn new(endpoint: &str, model: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let endpoint = endpoint.trim_end_matches('/');
        let url = if endpoint.ends_with("/chat/completions") {
            endpoint.to_string()
        } else {
            format!("{endpoint}/chat/completions")
        };
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        OpenAiCompatibleBackend {
            url,
            model: model.to_string(),
            api_key,
            agent,
        }
    }

    pub fn request_body(&self, b: &PromptBundle) -> Value {
        json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": b.system},
                {"role": "user", "content": b.render_user()},
            ],
        })
    }
}

impl TextBackend for OpenAiCompatibleBackend {
    fn name(&self) -> &str {
        "openai-compatible"
    }

    fn generate(&self, b: &PromptBundle) -> Result<String, BackendError> {
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(self.request_body(b))
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        if !(200..300).contains(&status) {
            return Err(BackendError::Status(status));
        }
        let v: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        v.pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(|s| s.trim().to_string())
            .ok_or_else(|| BackendError::Malformed("missing choices[0].message.content".into()))
    }
}
