//! Structured run log, written as `run_log.jsonl`.

use std::io::{self, Write};

use serde::Serialize;

use crate::interaction::{AttachmentKind, PostId};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum LogEvent {
    Activation {
        timestep: u32,
        active: usize,
        posts_planned: u64,
    },
    /// No narrative was active anywhere, so a post slot was skipped.
    NoNarrative { timestep: u32, actor: String },
    /// The actor's groups had no active narrative; one was drawn globally.
    NarrativeFallback {
        timestep: u32,
        actor: String,
        narrative: String,
    },
    /// Channels that had no eligible target before one was found.
    EmptyPool {
        timestep: u32,
        actor: String,
        channels: Vec<AttachmentKind>,
        used: Option<AttachmentKind>,
    },
    /// The actor cannot tweet and found nothing to interact with.
    NoAction { timestep: u32, actor: String },
    Regenerated {
        timestep: u32,
        post_id: PostId,
        attempt: u32,
        missing: Vec<String>,
    },
    Repaired {
        timestep: u32,
        post_id: PostId,
        missing: Vec<String>,
    },
    BackendRetry {
        timestep: u32,
        post_id: PostId,
        attempt: u32,
        error: String,
    },
    Dropped {
        timestep: u32,
        post_id: PostId,
        reason: String,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RunLog {
    events: Vec<LogEvent>,
}

impl RunLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, event: LogEvent) {
        self.events.push(event);
    }

    pub fn extend(&mut self, events: impl IntoIterator<Item = LogEvent>) {
        self.events.extend(events);
    }

    pub fn events(&self) -> &[LogEvent] {
        &self.events
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}
