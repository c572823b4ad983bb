//! Shared helpers for integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use serde_json::{json, Value};
use socsim::config::RunConfig;
use socsim::content::StubBackend;
use socsim::engine::{Engine, RunOutput};
use socsim::parallel::Execution;
use socsim::scenario::{parse_scenario, parse_scenario_str, ScenarioSpec};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn example_path() -> PathBuf {
    manifest_dir().join("../../scenarios/aurasight.scenario.json")
}

pub fn example() -> ScenarioSpec {
    parse_scenario(example_path()).expect("bundled scenario parses")
}

pub fn run(spec: &ScenarioSpec, seed: u64, exec: Execution) -> RunOutput {
    let cfg = RunConfig::default();
    Engine::new(spec, &cfg, &StubBackend, seed)
        .with_execution(exec)
        .run()
        .expect("run completes")
}

pub const CLASSES: [&str; 19] = [
    "human",
    "organization",
    "general_bot",
    "social_influence_bot",
    "chaos_bot",
    "amplifier_bot",
    "repeater_bot",
    "bridging_bot",
    "synchronized_bot",
    "announcer_bot",
    "cyborg",
    "information_correction_bot",
    "content_generation_bot",
    "engagement_generation_bot",
    "self_declared_bot",
    "genre_specific_bot",
    "conversational_bot",
    "news_bot",
    "dredger",
];

/// Two overlapping groups over one day. `classes` picks the class of each
/// extra actor; two humans lead the groups so every pool has someone to hit.
pub fn mixed_scenario(classes: &[usize], steps: u32, event: bool) -> ScenarioSpec {
    let mut actors = vec![actor("lead_a", "human", None), actor("lead_b", "human", None)];
    let mut a_members = vec![json!({"actor": "lead_a", "role": "leader"})];
    let mut b_members = vec![json!({"actor": "lead_b", "role": "leader"})];
    for (i, &c) in classes.iter().enumerate() {
        let class = CLASSES[c % CLASSES.len()];
        let id = format!("x{i}");
        let screen = match class {
            "news_bot" => format!("x{i}news"),
            "self_declared_bot" => format!("x{i}bot"),
            _ => id.clone(),
        };
        actors.push(actor(&id, class, Some(&screen)));
        let m = json!({"actor": id, "role": if i % 5 == 4 { "source" } else { "full" }});
        if i % 2 == 0 || matches!(class, "bridging_bot" | "conversational_bot") {
            a_members.push(m.clone());
        }
        if i % 2 == 1 || matches!(class, "bridging_bot" | "conversational_bot") {
            b_members.push(m);
        }
    }
    let events = if event {
        json!([{"id": "spark", "label": "spark", "window": [12, 13], "excitement": 2.0}])
    } else {
        json!([])
    };
    let doc = json!({
        "name": "mixed",
        "start_time": "2030-03-14T00:00:00+00:00",
        "num_timesteps": steps,
        "actors": actors,
        "groups": [
            {"id": "ga", "members": a_members},
            {"id": "gb", "members": b_members}
        ],
        "events": events,
        "narratives": [
            narrative("na", &["ga"], steps, 3),
            narrative("nb", &["gb"], steps, 1),
            narrative("shared", &["ga", "gb"], steps, 2)
        ],
        "lexicons": {
            "dredge_words": ["Olisight", "EthalErasure", "TrendTrain"],
            "unreliable_domains": ["truthbeacon.example", "realnews.example"],
            "news_domains": ["dailyethal.example"],
            "factcheck_domains": ["checkpoint.example"],
            "bend_maneuvers": ["bridge", "back", "explain"]
        },
        "randos": {"names": ["Ava Lind", "Ben Ek"]}
    });
    parse_scenario_str(&doc.to_string()).expect("mixed scenario parses")
}

fn actor(id: &str, class: &str, screen: Option<&str>) -> Value {
    let mut a = json!({
        "id": id, "display_name": id.to_uppercase(), "screen_name": screen.unwrap_or(id),
        "agent_type": class, "active_hours": [[9, 16]], "posts_min": 1, "posts_max": 3,
        "tone": ["upbeat"]
    });
    if matches!(class, "announcer_bot" | "cyborg") {
        a["period_hours"] = json!(2);
    }
    a
}

fn narrative(id: &str, groups: &[&str], steps: u32, ratio: u32) -> Value {
    json!({
        "id": id, "topic": format!("{id} topic"),
        "description": format!("Everyone is talking about the {id} story. Opinions differ."),
        "groups": groups, "window": [0, steps - 1], "ratio": ratio, "stance": "neutral",
        "hashtags": [format!("Tag{id}")]
    })
}
