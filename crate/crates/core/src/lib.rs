//! Scenario-driven synthetic social media simulation.
//!
//! A [`scenario::ScenarioSpec`] describes actors, groups, events and timed
//! narratives. Each hourly timestep runs three stages: activation
//! ([`activation`]), interaction planning ([`interaction`]) and content
//! generation ([`content`]). The run is written as Twitter-API-V1-shaped
//! NDJSON plus a weighted communication network ([`emit`]).

pub mod activation;
pub mod behavior;
pub mod cli;
pub mod config;
pub mod content;
pub mod emit;
pub mod engine;
pub mod interaction;
pub mod log;
pub mod parallel;
pub mod rng;
pub mod scenario;
pub mod validate;
pub mod world;

#[cfg(test)]
mod testutil;
