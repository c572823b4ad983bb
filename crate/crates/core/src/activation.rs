//! Stage 1: which agents act at a timestep, and how many posts each makes.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::Serialize;
use thiserror::Error;

use crate::behavior::{AgentClass, BehaviorError, BehaviorProfile, CyborgPhase};
use crate::config::ActivationParams;
use crate::parallel::{map_ordered, Execution};
use crate::rng::{key_hash, substream, Stage};
use crate::scenario::{ActorSpec, EventSpec, HourRange, ScenarioSpec};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ActivationError {
    #[error("actor `{0}` does not post periodically")]
    NotPeriodic(String),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    PeakSample,
    OffPeakSample,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActivationDecision {
    pub actor_id: String,
    /// Position of the actor in the scenario's actor list.
    pub actor_index: usize,
    pub timestep: u32,
    pub num_posts: u32,
    pub trigger: Trigger,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phase: Option<CyborgPhase>,
}

/// Product of the excitement of every event covering `t`.
pub fn excitement(events: &[EventSpec], t: u32) -> f64 {
    events
        .iter()
        .filter(|e| e.window.contains(t))
        .map(|e| e.excitement)
        .product()
}

/// Plateau-and-taper probability before any event excitement.
pub fn diurnal_probability(ranges: &[HourRange], hour: u8, params: &ActivationParams) -> f64 {
    let Some(d) = ranges.iter().map(|r| r.distance(hour)).min() else {
        return params.p_base;
    };
    let d = d as f64;
    if d == 0.0 {
        params.p_peak
    } else if d < params.taper_width {
        params.p_peak - (params.p_peak - params.p_base) * d / params.taper_width
    } else {
        params.p_base
    }
}

pub fn activation_probability(actor: &ActorSpec, spec: &ScenarioSpec, t: u32, params: &ActivationParams) -> f64 {
    let boost = excitement(&spec.events, t);
    if actor.agent_type == AgentClass::ChaosBot {
        return (params.p_peak * boost).min(1.0);
    }
    let ranges = actor.hours_for_day(spec.day_index(t));
    (diurnal_probability(ranges, spec.hour_of_day(t), params) * boost).min(1.0)
}

fn truncated_poisson<R: Rng + ?Sized>(lambda: f64, lo: u32, hi: u32, rng: &mut R) -> u32 {
    if lo == hi {
        return lo;
    }
    let dist = Poisson::new(lambda).expect("positive finite rate");
    for _ in 0..10_000 {
        let k = dist.sample(rng) as u32;
        if (lo..=hi).contains(&k) {
            return k;
        }
    }
    (lambda.round() as u32).clamp(lo, hi)
}

/// Posts made by an activated actor.
///
/// One draw is a Poisson with rate at the midpoint of `[posts_min, posts_max]`,
/// redrawn until it lands in `[max(1, posts_min), posts_max]`. An actor with
/// multiplier `m` makes the sum of `m` such draws, so its mean is exactly `m`
/// times the human mean. Returns 0 when `posts_max` is 0.
pub fn sample_post_count<R: Rng + ?Sized>(
    actor: &ActorSpec,
    phase: Option<CyborgPhase>,
    rng: &mut R,
) -> Result<u32, BehaviorError> {
    let profile = BehaviorProfile::new(actor.agent_type, actor.operated_by);
    let m = profile.post_multiplier(phase)?;
    if actor.posts_max == 0 {
        return Ok(0);
    }
    let lo = actor.posts_min.max(1);
    let hi = actor.posts_max.max(lo);
    let lambda = (actor.posts_min as f64 + actor.posts_max as f64) / 2.0;
    Ok((0..m).map(|_| truncated_poisson(lambda, lo, hi, rng)).sum())
}

pub fn first_active_timestep(actor: &ActorSpec, spec: &ScenarioSpec) -> Option<u32> {
    (0..spec.num_timesteps).find(|&t| actor.is_active_hour(spec.day_index(t), spec.hour_of_day(t)))
}

fn due_unchecked(actor: &ActorSpec, spec: &ScenarioSpec, t: u32, first: Option<u32>) -> bool {
    let (Some(period), Some(first)) = (actor.period_hours, first) else {
        return false;
    };
    period > 0
        && t >= first
        && (t - first).is_multiple_of(period)
        && actor.is_active_hour(spec.day_index(t), spec.hour_of_day(t))
}

/// Whether a periodic (Announcer or Cyborg) actor posts at `t`.
pub fn periodic_due(actor: &ActorSpec, spec: &ScenarioSpec, t: u32) -> Result<bool, ActivationError> {
    if !actor.agent_type.is_periodic() {
        return Err(ActivationError::NotPeriodic(actor.id.clone()));
    }
    Ok(due_unchecked(actor, spec, t, first_active_timestep(actor, spec)))
}

/// Cyborg phase at `t`: human on the first due tick, then flipping on each
/// following one. `None` for other classes or before the first tick.
pub fn cyborg_phase(actor: &ActorSpec, spec: &ScenarioSpec, t: u32) -> Option<CyborgPhase> {
    if actor.agent_type != AgentClass::Cyborg {
        return None;
    }
    let first = first_active_timestep(actor, spec);
    let ticks = (0..=t).filter(|&s| due_unchecked(actor, spec, s, first)).count();
    match ticks {
        0 => None,
        k if k % 2 == 1 => Some(CyborgPhase::Human),
        _ => Some(CyborgPhase::Bot),
    }
}

fn decide(
    index: usize,
    actor: &ActorSpec,
    spec: &ScenarioSpec,
    t: u32,
    params: &ActivationParams,
    seed: u64,
) -> Result<Option<ActivationDecision>, ActivationError> {
    let mut rng = substream(seed, Stage::Activation, t, key_hash(&actor.id));
    let (trigger, phase) = if actor.agent_type.is_periodic() {
        if !periodic_due(actor, spec, t)? {
            return Ok(None);
        }
        (Trigger::Periodic, cyborg_phase(actor, spec, t))
    } else {
        let p = activation_probability(actor, spec, t, params);
        if !rng.random_bool(p.clamp(0.0, 1.0)) {
            return Ok(None);
        }
        let in_window = actor.is_active_hour(spec.day_index(t), spec.hour_of_day(t));
        let trigger = if in_window {
            Trigger::PeakSample
        } else {
            Trigger::OffPeakSample
        };
        (trigger, None)
    };
    let num_posts = sample_post_count(actor, phase, &mut rng)?;
    Ok((num_posts > 0).then(|| ActivationDecision {
        actor_id: actor.id.clone(),
        actor_index: index,
        timestep: t,
        num_posts,
        trigger,
        phase,
    }))
}

/// Activation decisions for timestep `t`, in scenario actor order.
pub fn select_active_agents(
    spec: &ScenarioSpec,
    t: u32,
    params: &ActivationParams,
    seed: u64,
    exec: Execution,
) -> Result<Vec<ActivationDecision>, ActivationError> {
    let indexed: Vec<(usize, &ActorSpec)> = spec.actors.iter().enumerate().collect();
    map_ordered(exec, &indexed, |&(i, a)| decide(i, a, spec, t, params, seed))
        .into_iter()
        .filter_map(Result::transpose)
        .collect()
}
