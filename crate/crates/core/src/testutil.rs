//! Small scenario builder for unit tests.

use serde_json::{json, Value};

use crate::scenario::{parse_scenario_str, ScenarioSpec};

pub struct Builder {
    steps: u32,
    actors: Vec<Value>,
    groups: Vec<Value>,
    events: Vec<Value>,
    narratives: Vec<Value>,
    lexicons: Value,
}

impl Builder {
    pub fn new(steps: u32) -> Self {
        Builder {
            steps,
            actors: Vec::new(),
            groups: Vec::new(),
            events: Vec::new(),
            narratives: Vec::new(),
            lexicons: json!({
                "dredge_words": ["Olisight", "EthalErasure"],
                "unreliable_domains": ["truthbeacon.example", "realnews.example"],
                "news_domains": ["dailyethal.example"],
                "factcheck_domains": ["checkpoint.example"]
            }),
        }
    }

    pub fn actor(mut self, id: &str, class: &str, min: u32, max: u32) -> Self {
        self.actors.push(json!({
            "id": id, "display_name": id.to_uppercase(), "screen_name": id,
            "agent_type": class, "active_hours": [[9, 16]],
            "posts_min": min, "posts_max": max
        }));
        self
    }

    /// Adds a field to the most recent actor.
    pub fn with(mut self, key: &str, value: Value) -> Self {
        self.actors.last_mut().expect("actor added")[key] = value;
        self
    }

    pub fn group(mut self, id: &str, members: &[(&str, &str)]) -> Self {
        let members: Vec<Value> = members.iter().map(|(a, r)| json!({"actor": a, "role": r})).collect();
        self.groups.push(json!({"id": id, "members": members}));
        self
    }

    pub fn event(mut self, id: &str, window: [u32; 2], excitement: f64) -> Self {
        self.events
            .push(json!({"id": id, "label": id, "window": window, "excitement": excitement}));
        self
    }

    pub fn narrative(mut self, id: &str, groups: &[&str], window: [u32; 2], ratio: u32) -> Self {
        self.narratives.push(json!({
            "id": id, "topic": format!("{id} topic"),
            "description": format!("The {id} story is spreading. People have opinions."),
            "groups": groups, "window": window, "ratio": ratio, "stance": "neutral",
            "hashtags": [format!("Tag{id}")]
        }));
        self
    }

    pub fn json(&self) -> Value {
        json!({
            "name": "unit",
            "start_time": "2030-03-14T00:00:00+00:00",
            "num_timesteps": self.steps,
            "actors": self.actors,
            "groups": self.groups,
            "events": self.events,
            "narratives": self.narratives,
            "lexicons": self.lexicons,
            "randos": {"names": ["Ava", "Ben", "Cleo", "Dov"]}
        })
    }

    pub fn build(&self) -> ScenarioSpec {
        parse_scenario_str(&self.json().to_string()).expect("valid test scenario")
    }
}
