//! Scenario file format: actors, groups, events, narratives and lexicons.
//!
//! A scenario is UTF-8 JSON. [`parse_scenario_str`] checks syntax, agent
//! class names, id uniqueness and cross references; the softer placement and
//! coverage rules live in [`crate::validate`].

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, Timelike, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::behavior::{AgentClass, Operator};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("actor `{actor}`: unknown agent class `{class}`")]
    UnknownClass { actor: String, class: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("{referenced_by} references unknown {kind} `{id}`")]
    Dangling {
        kind: &'static str,
        id: String,
        referenced_by: String,
    },
}

/// Inclusive local-clock hour range. `start > end` wraps past midnight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HourRange(pub u8, pub u8);

impl HourRange {
    pub fn start(&self) -> u8 {
        self.0
    }

    pub fn end(&self) -> u8 {
        self.1
    }

    pub fn contains(&self, hour: u8) -> bool {
        if self.0 <= self.1 {
            (self.0..=self.1).contains(&hour)
        } else {
            hour >= self.0 || hour <= self.1
        }
    }

    /// Hours from `hour` to the nearest hour inside the range, on a 24h clock.
    pub fn distance(&self, hour: u8) -> u32 {
        if self.contains(hour) {
            return 0;
        }
        clock_distance(hour, self.0).min(clock_distance(hour, self.1))
    }
}

fn clock_distance(a: u8, b: u8) -> u32 {
    let d = (a as i32 - b as i32).unsigned_abs();
    d.min(24 - d)
}

/// Inclusive timestep window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window(pub u32, pub u32);

impl Window {
    pub fn start(&self) -> u32 {
        self.0
    }

    pub fn end(&self) -> u32 {
        self.1
    }

    pub fn contains(&self, t: u32) -> bool {
        self.0 <= t && t <= self.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Identity {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gender: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nationality: Option<String>,
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorSpec {
    pub id: String,
    pub display_name: String,
    pub screen_name: String,
    pub agent_type: AgentClass,
    /// Only meaningful for Dredgers.
    #[serde(default, skip_serializing_if = "is_default")]
    pub operated_by: Operator,
    pub active_hours: Vec<HourRange>,
    /// Per-day replacement for `active_hours`, keyed by 0-based day index.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub active_hours_by_day: BTreeMap<u32, Vec<HourRange>>,
    pub posts_min: u32,
    pub posts_max: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period_hours: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tone: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identity: Option<Identity>,
    /// Profile bio shown on emitted user objects.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl ActorSpec {
    pub fn hours_for_day(&self, day: u32) -> &[HourRange] {
        self.active_hours_by_day
            .get(&day)
            .map(Vec::as_slice)
            .unwrap_or(&self.active_hours)
    }

    pub fn is_active_hour(&self, day: u32, hour: u8) -> bool {
        self.hours_for_day(day).iter().any(|r| r.contains(hour))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Full,
    Leader,
    Source,
}

impl Role {
    /// Full and Leader members act within the group; Sources are only cited.
    pub fn acts(self) -> bool {
        !matches!(self, Role::Source)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Membership {
    pub actor: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub id: String,
    pub members: Vec<Membership>,
}

impl GroupSpec {
    pub fn role_of(&self, actor: &str) -> Option<Role> {
        self.members.iter().find(|m| m.actor == actor).map(|m| m.role)
    }
}

fn default_excitement() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub id: String,
    pub label: String,
    pub window: Window,
    #[serde(default = "default_excitement")]
    pub excitement: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stance {
    Pro,
    Anti,
    Neutral,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NarrativeSpec {
    pub id: String,
    pub topic: String,
    pub description: String,
    pub groups: Vec<String>,
    pub window: Window,
    pub ratio: u32,
    pub stance: Stance,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hashtags: Vec<String>,
}

fn default_bend_maneuvers() -> Vec<String> {
    ["bridge", "back", "explain", "enhance"]
        .into_iter()
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lexicons {
    #[serde(default)]
    pub dredge_words: Vec<String>,
    #[serde(default)]
    pub unreliable_domains: Vec<String>,
    #[serde(default)]
    pub news_domains: Vec<String>,
    #[serde(default)]
    pub factcheck_domains: Vec<String>,
    #[serde(default = "default_bend_maneuvers")]
    pub bend_maneuvers: Vec<String>,
}

impl Default for Lexicons {
    fn default() -> Self {
        Lexicons {
            dredge_words: Vec::new(),
            unreliable_domains: Vec::new(),
            news_domains: Vec::new(),
            factcheck_domains: Vec::new(),
            bend_maneuvers: default_bend_maneuvers(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedLocation {
    pub name: String,
    pub weight: f64,
}

fn default_locations() -> Vec<WeightedLocation> {
    [
        ("Ethal", 0.35),
        ("Odria", 0.35),
        ("Nareth", 0.15),
        ("Federation of Severni", 0.15),
    ]
    .into_iter()
    .map(|(name, weight)| WeightedLocation {
        name: name.to_string(),
        weight,
    })
    .collect()
}

/// Demographic pools for spawned Randos.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandoSettings {
    #[serde(default)]
    pub names: Vec<String>,
    #[serde(default = "default_locations")]
    pub locations: Vec<WeightedLocation>,
}

impl Default for RandoSettings {
    fn default() -> Self {
        RandoSettings {
            names: Vec::new(),
            locations: default_locations(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub start_time: DateTime<FixedOffset>,
    pub num_timesteps: u32,
    #[serde(default)]
    pub actors: Vec<ActorSpec>,
    #[serde(default)]
    pub groups: Vec<GroupSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
    #[serde(default)]
    pub narratives: Vec<NarrativeSpec>,
    #[serde(default)]
    pub lexicons: Lexicons,
    #[serde(default)]
    pub randos: RandoSettings,
}

impl ScenarioSpec {
    pub fn local_time(&self, t: u32) -> DateTime<FixedOffset> {
        self.start_time + Duration::hours(t as i64)
    }

    pub fn utc_time(&self, t: u32) -> DateTime<Utc> {
        self.local_time(t).with_timezone(&Utc)
    }

    /// Local clock hour at the start of timestep `t`.
    pub fn hour_of_day(&self, t: u32) -> u8 {
        self.local_time(t).hour() as u8
    }

    /// 0-based calendar day of timestep `t`, counted from the start date.
    pub fn day_index(&self, t: u32) -> u32 {
        let start = self.start_time.date_naive();
        (self.local_time(t).date_naive() - start).num_days() as u32
    }

    pub fn actor(&self, id: &str) -> Option<&ActorSpec> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn group(&self, id: &str) -> Option<&GroupSpec> {
        self.groups.iter().find(|g| g.id == id)
    }

    /// Pretty-printed canonical JSON. Parsing it back yields an equal spec.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// SHA-256 of the compact canonical form, hex encoded.
    pub fn content_hash(&self) -> String {
        let compact = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&compact))
    }
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioSpec, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario_str(&text)
}

pub fn parse_scenario_str(text: &str) -> Result<ScenarioSpec, ScenarioError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    check_class_names(&value)?;
    let spec: ScenarioSpec = serde_json::from_value(value).map_err(|e| ScenarioError::Schema(e.to_string()))?;
    check_references(&spec)?;
    Ok(spec)
}

fn check_class_names(value: &Value) -> Result<(), ScenarioError> {
    let Some(actors) = value.get("actors").and_then(Value::as_array) else {
        return Ok(());
    };
    for actor in actors {
        if let Some(class) = actor.get("agent_type").and_then(Value::as_str) {
            if class.parse::<AgentClass>().is_err() {
                let id = actor.get("id").and_then(Value::as_str).unwrap_or("?");
                return Err(ScenarioError::UnknownClass {
                    actor: id.to_string(),
                    class: class.to_string(),
                });
            }
        }
    }
    Ok(())
}

fn unique<'a>(kind: &'static str, ids: impl Iterator<Item = &'a str>) -> Result<HashSet<&'a str>, ScenarioError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(ScenarioError::Duplicate {
                kind,
                id: id.to_string(),
            });
        }
    }
    Ok(seen)
}

fn check_references(spec: &ScenarioSpec) -> Result<(), ScenarioError> {
    let actors = unique("actor", spec.actors.iter().map(|a| a.id.as_str()))?;
    unique("screen_name", spec.actors.iter().map(|a| a.screen_name.as_str()))?;
    let groups = unique("group", spec.groups.iter().map(|g| g.id.as_str()))?;
    unique("event", spec.events.iter().map(|e| e.id.as_str()))?;
    unique("narrative", spec.narratives.iter().map(|n| n.id.as_str()))?;

    for g in &spec.groups {
        for m in &g.members {
            if !actors.contains(m.actor.as_str()) {
                return Err(ScenarioError::Dangling {
                    kind: "actor",
                    id: m.actor.clone(),
                    referenced_by: format!("group `{}`", g.id),
                });
            }
        }
    }
    for n in &spec.narratives {
        for gid in &n.groups {
            if !groups.contains(gid.as_str()) {
                return Err(ScenarioError::Dangling {
                    kind: "group",
                    id: gid.clone(),
                    referenced_by: format!("narrative `{}`", n.id),
                });
            }
        }
    }
    Ok(())
}
