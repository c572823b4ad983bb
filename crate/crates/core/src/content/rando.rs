//! Randos: throwaway accounts spawned around each original tweet.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::Poisson;
use serde::Serialize;

use crate::behavior::{capabilities, AgentClass, BehaviorFlag, BehaviorProfile};
use crate::interaction::PostKind;
use crate::scenario::RandoSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Gender {
    Male,
    Female,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rando {
    pub number: u32,
    pub name: String,
    pub screen_name: String,
    /// `None` for a human account.
    pub class: Option<AgentClass>,
    pub tweets_per_day: u8,
    pub age: u8,
    pub gender: Gender,
    pub location: String,
    pub nationality: String,
}

impl Rando {
    pub fn is_bot(&self) -> bool {
        self.class.is_some()
    }

    pub fn profile(&self) -> BehaviorProfile {
        BehaviorProfile::of(self.class.unwrap_or(AgentClass::Human))
    }
}

pub fn draw_rando<R: Rng + ?Sized>(settings: &RandoSettings, number: u32, rng: &mut R) -> Rando {
    let class = if rng.random_bool(0.5) {
        Some(*AgentClass::RANDO_BOT_CLASSES.choose(rng).expect("non-empty"))
    } else {
        None
    };
    let tweets_per_day = rng.random_range(0..=3);
    let age = rng.random_range(21..=40);
    let gender = if rng.random_bool(0.5) {
        Gender::Male
    } else {
        Gender::Female
    };
    let location = match WeightedIndex::new(settings.locations.iter().map(|l| l.weight)) {
        Ok(w) => settings.locations[w.sample(rng)].name.clone(),
        Err(_) => String::new(),
    };
    let name = settings
        .names
        .choose(rng)
        .cloned()
        .unwrap_or_else(|| format!("Rando {number}"));
    let stem: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect();
    Rando {
        number,
        screen_name: format!("{}_{number}", if stem.is_empty() { "rando" } else { &stem }),
        name,
        class,
        tweets_per_day,
        age,
        gender,
        nationality: location.clone(),
        location,
    }
}

/// Poisson draw bucketed as 0 nothing, 1 retweet, 2 or more quote.
pub fn draw_reaction<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> Option<PostKind> {
    if lambda <= 0.0 {
        return None;
    }
    let k: f64 = Poisson::new(lambda).expect("positive rate").sample(rng);
    match k as u64 {
        0 => None,
        1 => Some(PostKind::Retweet),
        _ => Some(PostKind::Quote),
    }
}

/// Applies the Rando's class limits to a drawn reaction: a quote becomes a
/// retweet when quoting is not allowed, and bots that only follow other bots
/// ignore human posts.
pub fn permitted_reaction(rando: &Rando, drawn: Option<PostKind>, target_is_bot: bool) -> Option<PostKind> {
    let Some(class) = rando.class else {
        return drawn;
    };
    let drawn = drawn?;
    if BehaviorProfile::of(class).has(BehaviorFlag::OnlyInteractsWithBots) && !target_is_bot {
        return None;
    }
    let caps = capabilities(class);
    match drawn {
        PostKind::Quote if caps.can_quote_reply => Some(PostKind::Quote),
        PostKind::Quote | PostKind::Retweet if caps.can_retweet => Some(PostKind::Retweet),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RandoAction {
    pub kind: PostKind,
    pub offset_secs: u32,
}

/// Spawns `count` Randos around one original tweet. Numbers are assigned
/// from `first_number` upward.
pub fn spawn_randos<R: Rng + ?Sized>(
    settings: &RandoSettings,
    count: u32,
    lambda: f64,
    first_number: u32,
    target_is_bot: bool,
    target_offset: u32,
    rng: &mut R,
) -> Vec<(Rando, Option<RandoAction>)> {
    (0..count)
        .map(|i| {
            let rando = draw_rando(settings, first_number + i, rng);
            let kind = permitted_reaction(&rando, draw_reaction(lambda, rng), target_is_bot);
            let offset_secs = rng.random_range(target_offset.min(3599)..3600);
            let action = kind.map(|kind| RandoAction { kind, offset_secs });
            (rando, action)
        })
        .collect()
}
