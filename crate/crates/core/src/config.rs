//! Run parameters: the `activation`, `attachment` and `content` blocks of a
//! config file, all with defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        reason: reason.into(),
    }
}

/// Activation-probability profile: a plateau at `p_peak` inside an actor's
/// active hours, linear tapers of `taper_width` hours on either side, and
/// `p_base` everywhere else.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActivationParams {
    pub p_peak: f64,
    pub p_base: f64,
    pub taper_width: f64,
}

impl Default for ActivationParams {
    fn default() -> Self {
        ActivationParams {
            p_peak: 0.6,
            p_base: 0.05,
            taper_width: 2.0,
        }
    }
}

impl ActivationParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p_peak > 0.0 && self.p_peak <= 1.0) {
            return Err(invalid("activation.p_peak", format!("{} not in (0, 1]", self.p_peak)));
        }
        if !(self.p_base >= 0.0 && self.p_base < self.p_peak) {
            return Err(invalid(
                "activation.p_base",
                format!("{} not in [0, p_peak)", self.p_base),
            ));
        }
        if !(self.taper_width >= 0.0 && self.taper_width.is_finite()) {
            return Err(invalid("activation.taper_width", "must be a finite value >= 0"));
        }
        Ok(())
    }
}

/// Probabilities of the three attachment channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttachmentMix {
    pub preferential: f64,
    pub leader: f64,
    pub random: f64,
}

impl Default for AttachmentMix {
    fn default() -> Self {
        AttachmentMix {
            preferential: 0.60,
            leader: 0.30,
            random: 0.10,
        }
    }
}

impl AttachmentMix {
    pub fn new(preferential: f64, leader: f64, random: f64) -> Result<Self, ConfigError> {
        let mix = AttachmentMix {
            preferential,
            leader,
            random,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let parts = [self.preferential, self.leader, self.random];
        if parts.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(invalid("attachment", "probabilities must be finite and non-negative"));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid("attachment", format!("probabilities sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// Default role-play framing sent ahead of every persona.
pub const DEFAULT_SYSTEM_PROMPT: &str = "This is a tabletop exercise for training analysts to recognise \
online manipulation. You play one account in a fictional country's social media space. Write only the \
text of a single post of at most 280 characters, in the account's voice, with no commentary.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContentParams {
    pub system_prompt: String,
    /// Per-action probability that a human's prompt carries a maneuver.
    pub base_bend: f64,
    /// Prior texts of the same narrative included in a prompt.
    pub history_len: usize,
    /// Regenerations after a constraint violation before repairing the text.
    pub regen_attempts: u32,
    /// Retries after a backend transport failure before dropping the action.
    pub backend_retries: u32,
    pub retry_backoff_ms: u64,
    pub randos_per_tweet: u32,
    /// Poisson rate deciding each Rando's reaction: 0 nothing, 1 retweet, 2+ quote.
    pub rando_lambda: f64,
}

impl Default for ContentParams {
    fn default() -> Self {
        ContentParams {
            system_prompt: DEFAULT_SYSTEM_PROMPT.to_string(),
            base_bend: 0.15,
            history_len: 3,
            regen_attempts: 2,
            backend_retries: 3,
            retry_backoff_ms: 250,
            randos_per_tweet: 3,
            rando_lambda: 0.8,
        }
    }
}

impl ContentParams {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.base_bend) {
            return Err(invalid("content.base_bend", "must be in [0, 1]"));
        }
        if !(self.rando_lambda >= 0.0 && self.rando_lambda.is_finite()) {
            return Err(invalid("content.rando_lambda", "must be a finite value >= 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub activation: ActivationParams,
    pub attachment: AttachmentMix,
    pub content: ContentParams,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.activation.validate()?;
        self.attachment.validate()?;
        self.content.validate()
    }

    pub fn content_hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
