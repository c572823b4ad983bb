//! Stage 2: turn activation decisions into planned actions.
//!
//! For every post slot an agent picks a narrative, an attachment channel
//! (preferential, follow-the-leader or random), a target post from that
//! channel's pool, and an interaction kind its class permits.

use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::activation::ActivationDecision;
use crate::behavior::{AgentClass, BehaviorFlag, CapabilityRow, CyborgPhase};
use crate::config::AttachmentMix;
use crate::log::{LogEvent, RunLog};
use crate::rng::{substream, Stage};
use crate::scenario::Role;
use crate::world::World;

pub const SECONDS_PER_STEP: u32 = 3600;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PostId(pub u64);

impl fmt::Display for PostId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Monotonic post-id counter starting at a seed-derived base.
#[derive(Debug, Clone)]
pub struct IdAllocator {
    next: u64,
}

impl IdAllocator {
    pub fn for_seed(seed: u64) -> Self {
        let base =
            1_600_000_000_000_000_000 + crate::rng::splitmix64(seed ^ Stage::Ids as u64) % 100_000_000_000_000_000;
        IdAllocator { next: base }
    }

    pub fn next_id(&mut self) -> PostId {
        let id = PostId(self.next);
        self.next += 1;
        id
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttachmentKind {
    Preferential,
    FollowTheLeader,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostKind {
    Tweet,
    Retweet,
    Quote,
    Reply,
}

impl PostKind {
    pub fn needs_target(self) -> bool {
        !matches!(self, PostKind::Tweet)
    }

    pub fn permitted_by(self, row: &CapabilityRow) -> bool {
        match self {
            PostKind::Tweet => row.can_tweet,
            PostKind::Retweet => row.can_retweet,
            PostKind::Quote | PostKind::Reply => row.can_quote_reply,
        }
    }
}

/// A post that can be interacted with. Retweets are never indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedPost {
    pub id: PostId,
    /// Scenario actor index; `None` for Randos.
    pub author: Option<usize>,
    pub author_is_bot: bool,
    pub narrative: usize,
    pub timestep: u32,
    pub offset_secs: u32,
}

/// Posts from the current and previous timestep, in emission order.
#[derive(Debug, Clone, Default)]
pub struct PostIndex {
    entries: Vec<IndexedPost>,
}

impl PostIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, post: IndexedPost) {
        self.entries.push(post);
    }

    /// Drops everything older than the previous timestep.
    pub fn advance_to(&mut self, t: u32) {
        self.entries.retain(|p| p.timestep + 1 >= t);
    }

    pub fn remove(&mut self, id: PostId) {
        self.entries.retain(|p| p.id != id);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[IndexedPost] {
        &self.entries
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("no narrative is active anywhere at timestep {timestep}")]
pub struct NoActiveNarrative {
    pub timestep: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NarrativeChoice {
    pub narrative: usize,
    /// Drawn from the global pool because none of the actor's groups had one.
    pub fallback: bool,
}

/// Picks a narrative for one post slot, weighted by ratio among the
/// narratives active for the actor's groups.
pub fn select_narrative<R: Rng + ?Sized>(
    world: &World<'_>,
    actor: usize,
    t: u32,
    rng: &mut R,
) -> Result<NarrativeChoice, NoActiveNarrative> {
    let groups = world.narrative_groups_of(actor);
    let narratives = &world.spec.narratives;
    let active: Vec<usize> = (0..narratives.len())
        .filter(|&n| narratives[n].window.contains(t))
        .collect();
    let candidates: Vec<usize> = active
        .iter()
        .copied()
        .filter(|&n| world.narrative_groups(n).iter().any(|g| groups.contains(g)))
        .collect();
    if !candidates.is_empty() {
        let total: u64 = candidates.iter().map(|&n| narratives[n].ratio as u64).sum();
        let mut x = rng.random_range(0..total);
        for &n in &candidates {
            let w = narratives[n].ratio as u64;
            if x < w {
                return Ok(NarrativeChoice {
                    narrative: n,
                    fallback: false,
                });
            }
            x -= w;
        }
        unreachable!("weights cover the draw");
    }
    active
        .choose(rng)
        .map(|&n| NarrativeChoice {
            narrative: n,
            fallback: true,
        })
        .ok_or(NoActiveNarrative { timestep: t })
}

pub fn sample_attachment<R: Rng + ?Sized>(mix: &AttachmentMix, rng: &mut R) -> AttachmentKind {
    let u: f64 = rng.random();
    if u < mix.preferential {
        AttachmentKind::Preferential
    } else if u < mix.preferential + mix.leader {
        AttachmentKind::FollowTheLeader
    } else {
        AttachmentKind::Random
    }
}

const FALLBACK_CHAIN: [AttachmentKind; 3] = [
    AttachmentKind::FollowTheLeader,
    AttachmentKind::Preferential,
    AttachmentKind::Random,
];

/// Eligible targets for `author` on `narrative` through one channel.
pub fn target_pool<'i>(
    world: &World<'_>,
    author: usize,
    narrative: usize,
    channel: AttachmentKind,
    index: &'i PostIndex,
) -> Vec<&'i IndexedPost> {
    let bots_only = world.profiles[author].has(BehaviorFlag::OnlyInteractsWithBots);
    let groups: Vec<usize> = world.acting_groups(author).collect();
    let in_channel = |p: &IndexedPost| -> bool {
        match channel {
            AttachmentKind::Random => true,
            AttachmentKind::Preferential | AttachmentKind::FollowTheLeader => {
                let Some(a) = p.author else { return false };
                p.narrative == narrative
                    && groups.iter().any(|&g| match world.role_in(g, a) {
                        Some(Role::Leader) => true,
                        Some(_) => channel == AttachmentKind::Preferential,
                        None => false,
                    })
            }
        }
    };
    index
        .entries()
        .iter()
        .filter(|p| p.author != Some(author))
        .filter(|p| !bots_only || p.author_is_bot)
        .filter(|p| in_channel(p))
        .collect()
}

/// What an author does in one slot, before ids and timing are assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub kind: PostKind,
    pub target: Option<IndexedPost>,
    /// Channel the target came from.
    pub attachment: Option<AttachmentKind>,
    /// Channels tried and found empty before the target was found.
    pub empty_channels: Vec<AttachmentKind>,
}

/// Resolves the channel pool (falling back follow-the-leader, preferential,
/// random, then an original tweet) and draws an interaction kind uniformly
/// among the author's permitted kinds. Returns `None` when the author may
/// not tweet and every pool is empty.
pub fn choose_target<R: Rng + ?Sized>(
    world: &World<'_>,
    author: usize,
    narrative: usize,
    drawn: AttachmentKind,
    index: &PostIndex,
    rng: &mut R,
) -> Option<Interaction> {
    let caps = world.profiles[author].capabilities;
    let start = FALLBACK_CHAIN.iter().position(|&k| k == drawn).expect("in chain");
    let mut empty_channels = Vec::new();
    let mut found = None;
    for &channel in &FALLBACK_CHAIN[start..] {
        let pool = target_pool(world, author, narrative, channel, index);
        if let Some(&p) = pool.choose(rng) {
            found = Some((channel, p.clone()));
            break;
        }
        empty_channels.push(channel);
    }

    let Some((channel, target)) = found else {
        return caps.can_tweet.then_some(Interaction {
            kind: PostKind::Tweet,
            target: None,
            attachment: None,
            empty_channels,
        });
    };

    let mut kinds = Vec::with_capacity(3);
    if caps.can_tweet {
        kinds.push(PostKind::Tweet);
    }
    if caps.can_retweet {
        kinds.push(PostKind::Retweet);
    }
    if caps.can_quote_reply {
        kinds.push(PostKind::Quote);
    }
    let kind = match *kinds.choose(rng).expect("every class has a capability") {
        PostKind::Quote if rng.random_bool(0.5) => PostKind::Reply,
        k => k,
    };
    Some(if kind == PostKind::Tweet {
        Interaction {
            kind,
            target: None,
            attachment: None,
            empty_channels,
        }
    } else {
        Interaction {
            kind,
            target: Some(target),
            attachment: Some(channel),
            empty_channels,
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepeatCopy {
    pub post_id: PostId,
    pub offset_secs: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlannedAction {
    pub post_id: PostId,
    pub author: usize,
    pub author_id: String,
    pub timestep: u32,
    pub narrative: usize,
    pub narrative_id: String,
    pub kind: PostKind,
    pub target_post: Option<PostId>,
    pub attachment: Option<AttachmentKind>,
    /// Actor indices to tag in the text.
    pub mentions: Vec<usize>,
    /// Seconds into the timestep hour.
    pub offset_secs: u32,
    /// Verbatim copies a Repeater bot posts after the original.
    pub repeats: Vec<RepeatCopy>,
    pub phase: Option<CyborgPhase>,
    pub narrative_fallback: bool,
}

fn draw_offset<R: Rng + ?Sized>(not_before: u32, rng: &mut R) -> u32 {
    rng.random_range(not_before.min(SECONDS_PER_STEP - 1)..SECONDS_PER_STEP)
}

/// One member (not the author) from each of up to three of the author's groups.
fn bridging_mentions<R: Rng + ?Sized>(world: &World<'_>, author: usize, rng: &mut R) -> Vec<usize> {
    let mut groups: Vec<usize> = world.memberships(author).iter().map(|(g, _)| *g).collect();
    groups.shuffle(rng);
    let mut out = Vec::new();
    for g in groups {
        let others: Vec<usize> = world
            .group_members(g)
            .map(|(a, _)| a)
            .filter(|&a| a != author && !out.contains(&a))
            .collect();
        if let Some(&a) = others.choose(rng) {
            out.push(a);
        }
        if out.len() == 3 {
            break;
        }
    }
    out
}

pub struct PlanContext<'a, 'w> {
    pub world: &'a World<'w>,
    pub mix: &'a AttachmentMix,
    pub seed: u64,
}

/// Plans every post slot of timestep `t`, in actor order then slot order.
///
/// Each planned non-retweet post is added to `index` immediately, so later
/// actors in the same timestep can interact with it.
pub fn build_timestep_plan(
    ctx: &PlanContext<'_, '_>,
    decisions: &[ActivationDecision],
    index: &mut PostIndex,
    ids: &mut IdAllocator,
    log: &mut RunLog,
) -> Vec<PlannedAction> {
    let world = ctx.world;
    let mut plan = Vec::new();
    for d in decisions {
        let author = d.actor_index;
        let t = d.timestep;
        let profile = &world.profiles[author];
        let mut rng = substream(ctx.seed, Stage::Interaction, t, world.keys[author]);
        for _ in 0..d.num_posts {
            let choice = match select_narrative(world, author, t, &mut rng) {
                Ok(c) => c,
                Err(_) => {
                    log.push(LogEvent::NoNarrative {
                        timestep: t,
                        actor: d.actor_id.clone(),
                    });
                    continue;
                }
            };
            if choice.fallback {
                log.push(LogEvent::NarrativeFallback {
                    timestep: t,
                    actor: d.actor_id.clone(),
                    narrative: world.spec.narratives[choice.narrative].id.clone(),
                });
            }
            let drawn = sample_attachment(ctx.mix, &mut rng);
            let Some(inter) = choose_target(world, author, choice.narrative, drawn, index, &mut rng) else {
                log.push(LogEvent::NoAction {
                    timestep: t,
                    actor: d.actor_id.clone(),
                });
                continue;
            };
            if !inter.empty_channels.is_empty() {
                log.push(LogEvent::EmptyPool {
                    timestep: t,
                    actor: d.actor_id.clone(),
                    channels: inter.empty_channels.clone(),
                    used: inter.attachment,
                });
            }
            let narrative = inter.target.as_ref().map_or(choice.narrative, |p| p.narrative);
            let not_before = match &inter.target {
                Some(p) if p.timestep == t => p.offset_secs,
                _ => 0,
            };
            let offset_secs = draw_offset(not_before, &mut rng);
            let mentions = if profile.has(BehaviorFlag::TagsMultipleCommunities) && inter.kind != PostKind::Retweet {
                bridging_mentions(world, author, &mut rng)
            } else {
                Vec::new()
            };
            let post_id = ids.next_id();
            let repeats = if profile.class == AgentClass::RepeaterBot && inter.kind == PostKind::Tweet {
                let k = rng.random_range(1..=3);
                (0..k)
                    .map(|_| RepeatCopy {
                        post_id: ids.next_id(),
                        offset_secs: draw_offset(offset_secs, &mut rng),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            if inter.kind != PostKind::Retweet {
                let entry = |id, offset_secs| IndexedPost {
                    id,
                    author: Some(author),
                    author_is_bot: profile.is_bot(),
                    narrative,
                    timestep: t,
                    offset_secs,
                };
                index.push(entry(post_id, offset_secs));
                for r in &repeats {
                    index.push(entry(r.post_id, r.offset_secs));
                }
            }
            plan.push(PlannedAction {
                post_id,
                author,
                author_id: d.actor_id.clone(),
                timestep: t,
                narrative,
                narrative_id: world.spec.narratives[narrative].id.clone(),
                kind: inter.kind,
                target_post: inter.target.as_ref().map(|p| p.id),
                attachment: inter.attachment,
                mentions,
                offset_secs,
                repeats,
                phase: d.phase,
                narrative_fallback: choice.fallback,
            });
        }
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Trigger;
    use crate::scenario::ScenarioSpec;
    use crate::testutil::Builder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn post(id: u64, author: Option<usize>, bot: bool, narrative: usize, t: u32, off: u32) -> IndexedPost {
        IndexedPost {
            id: PostId(id),
            author,
            author_is_bot: bot,
            narrative,
            timestep: t,
            offset_secs: off,
        }
    }

    fn decision(world: &World<'_>, actor: usize, t: u32, n: u32) -> ActivationDecision {
        ActivationDecision {
            actor_id: world.actor(actor).id.clone(),
            actor_index: actor,
            timestep: t,
            num_posts: n,
            trigger: Trigger::PeakSample,
            phase: None,
        }
    }

    #[test]
    fn narrative_ratio_odds() {
        let spec = Builder::new(24)
            .actor("a", "human", 1, 1)
            .group("g", &[("a", "full")])
            .narrative("big", &["g"], [0, 23], 5)
            .narrative("small", &["g"], [0, 23], 1)
            .build();
        let world = World::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 60_000;
        let big = (0..n)
            .filter(|_| select_narrative(&world, 0, 5, &mut rng).unwrap().narrative == 0)
            .count();
        let share = big as f64 / n as f64;
        assert!((share - 5.0 / 6.0).abs() < 0.01, "{share}");
    }

    #[test]
    fn singleton_and_fallback() {
        let spec = Builder::new(24)
            .actor("a", "human", 1, 1)
            .actor("b", "human", 1, 1)
            .group("g", &[("a", "full")])
            .group("h", &[("b", "full")])
            .narrative("only", &["g"], [0, 9], 1)
            .narrative("late", &["h"], [10, 23], 1)
            .build();
        let world = World::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let c = select_narrative(&world, 0, 4, &mut rng).unwrap();
            assert_eq!(
                c,
                NarrativeChoice {
                    narrative: 0,
                    fallback: false
                }
            );
        }
        let c = select_narrative(&world, 0, 12, &mut rng).unwrap();
        assert_eq!(
            c,
            NarrativeChoice {
                narrative: 1,
                fallback: true
            }
        );
    }

    #[test]
    fn no_active_narrative_is_an_error() {
        let spec = Builder::new(24)
            .actor("a", "human", 1, 1)
            .group("g", &[("a", "full")])
            .narrative("n", &["g"], [0, 3], 1)
            .build();
        let world = World::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            select_narrative(&world, 0, 7, &mut rng),
            Err(NoActiveNarrative { timestep: 7 })
        );
    }

    #[test]
    fn attachment_mix_frequencies() {
        let mix = AttachmentMix::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut counts = [0u64; 3];
        for _ in 0..n {
            counts[sample_attachment(&mix, &mut rng) as usize] += 1;
        }
        let expected = [0.6, 0.3, 0.1];
        let mut chi2 = 0.0;
        for (c, p) in counts.iter().zip(expected) {
            let f = *c as f64 / n as f64;
            assert!((f - p).abs() < 0.01, "{counts:?}");
            let e = p * n as f64;
            chi2 += (*c as f64 - e).powi(2) / e;
        }
        let critical = ChiSquared::new(2.0).unwrap().inverse_cdf(0.999);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn degenerate_mix() {
        let mix = AttachmentMix::new(0.0, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| sample_attachment(&mix, &mut rng) == AttachmentKind::Random));
    }

    fn two_person_world() -> ScenarioSpec {
        Builder::new(24)
            .actor("lead", "human", 1, 1)
            .actor("amp", "amplifier_bot", 1, 1)
            .actor("hum", "human", 1, 1)
            .actor("sync", "synchronized_bot", 1, 1)
            .actor("gen", "general_bot", 1, 1)
            .actor("eng", "engagement_generation_bot", 1, 1)
            .group(
                "g",
                &[
                    ("lead", "leader"),
                    ("amp", "full"),
                    ("hum", "full"),
                    ("sync", "full"),
                    ("gen", "full"),
                    ("eng", "full"),
                ],
            )
            .narrative("n", &["g"], [0, 23], 1)
            .build()
    }

    #[test]
    fn amplifier_always_retweets() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(1, Some(0), false, 0, 10, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let drawn = sample_attachment(&AttachmentMix::default(), &mut rng);
            let i = choose_target(&world, 1, 0, drawn, &index, &mut rng).unwrap();
            assert_eq!(i.kind, PostKind::Retweet);
            assert_eq!(i.target.unwrap().id, PostId(1));
        }
    }

    #[test]
    fn amplifier_without_targets_does_nothing() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let i = choose_target(&world, 1, 0, AttachmentKind::Preferential, &PostIndex::new(), &mut rng);
        assert!(i.is_none());
    }

    #[test]
    fn tweet_only_classes_never_target() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(1, Some(0), false, 0, 10, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let i = choose_target(&world, 5, 0, AttachmentKind::Random, &index, &mut rng).unwrap();
            assert_eq!(i.kind, PostKind::Tweet);
            assert!(i.target.is_none());
        }
    }

    #[test]
    fn human_kind_split() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(1, Some(0), false, 0, 10, 5));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 60_000;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..n {
            let i = choose_target(&world, 2, 0, AttachmentKind::Preferential, &index, &mut rng).unwrap();
            *counts.entry(i.kind).or_insert(0u32) += 1;
        }
        let share = |k| counts[&k] as f64 / n as f64;
        assert!((share(PostKind::Tweet) - 1.0 / 3.0).abs() < 0.01);
        assert!((share(PostKind::Retweet) - 1.0 / 3.0).abs() < 0.01);
        assert!((share(PostKind::Quote) - 1.0 / 6.0).abs() < 0.01);
        assert!((share(PostKind::Reply) - 1.0 / 6.0).abs() < 0.01);
    }

    #[test]
    fn synchronized_bots_only_target_bots() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(1, Some(0), false, 0, 10, 5));
        index.push(post(2, Some(2), false, 0, 10, 6));
        index.push(post(3, Some(4), true, 0, 10, 7));
        index.push(post(4, None, false, 0, 10, 8));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..500 {
            let drawn = sample_attachment(&AttachmentMix::default(), &mut rng);
            let i = choose_target(&world, 3, 0, drawn, &index, &mut rng).unwrap();
            if let Some(t) = i.target {
                assert_eq!(t.id, PostId(3));
            }
        }
        for ch in [
            AttachmentKind::Preferential,
            AttachmentKind::FollowTheLeader,
            AttachmentKind::Random,
        ] {
            assert!(target_pool(&world, 3, 0, ch, &index).iter().all(|p| p.author_is_bot));
        }
    }

    #[test]
    fn pools_by_channel() {
        let spec = Builder::new(24)
            .actor("lead", "human", 1, 1)
            .actor("me", "human", 1, 1)
            .actor("peer", "human", 1, 1)
            .actor("out", "human", 1, 1)
            .group("g", &[("lead", "leader"), ("me", "full"), ("peer", "full")])
            .group("o", &[("out", "full")])
            .narrative("n", &["g"], [0, 23], 1)
            .narrative("m", &["g", "o"], [0, 23], 1)
            .build();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(1, Some(0), false, 0, 10, 0));
        index.push(post(2, Some(1), false, 0, 10, 0));
        index.push(post(3, Some(2), false, 0, 10, 0));
        index.push(post(4, Some(3), false, 1, 10, 0));
        index.push(post(5, Some(2), false, 1, 10, 0));
        index.push(post(6, None, false, 0, 10, 0));
        let ids = |ch| -> Vec<u64> { target_pool(&world, 1, 0, ch, &index).iter().map(|p| p.id.0).collect() };
        assert_eq!(ids(AttachmentKind::FollowTheLeader), vec![1]);
        assert_eq!(ids(AttachmentKind::Preferential), vec![1, 3]);
        assert_eq!(ids(AttachmentKind::Random), vec![1, 3, 4, 5, 6]);
    }

    #[test]
    fn fallback_chain_when_no_leader_posts() {
        let spec = two_person_world();
        let world = World::new(&spec);
        let mut index = PostIndex::new();
        index.push(post(2, Some(2), false, 0, 10, 6));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let i = choose_target(&world, 1, 0, AttachmentKind::FollowTheLeader, &index, &mut rng).unwrap();
        assert_eq!(i.attachment, Some(AttachmentKind::Preferential));
        assert_eq!(i.empty_channels, vec![AttachmentKind::FollowTheLeader]);
    }

    #[test]
    fn index_window_keeps_two_steps() {
        let mut index = PostIndex::new();
        index.push(post(1, None, false, 0, 3, 0));
        index.push(post(2, None, false, 0, 4, 0));
        index.push(post(3, None, false, 0, 5, 0));
        index.advance_to(5);
        assert_eq!(index.entries().iter().map(|p| p.id.0).collect::<Vec<_>>(), vec![2, 3]);
    }

    fn busy_world() -> ScenarioSpec {
        Builder::new(24)
            .actor("lead", "human", 1, 3)
            .actor("amp", "amplifier_bot", 1, 3)
            .actor("hum", "human", 1, 3)
            .actor("rep", "repeater_bot", 1, 3)
            .actor("bri", "bridging_bot", 1, 3)
            .actor("x", "human", 1, 3)
            .actor("y", "human", 1, 3)
            .group(
                "g",
                &[
                    ("lead", "leader"),
                    ("amp", "full"),
                    ("hum", "full"),
                    ("rep", "full"),
                    ("bri", "full"),
                ],
            )
            .group("h", &[("bri", "full"), ("x", "full")])
            .group("k", &[("bri", "source"), ("y", "leader")])
            .group("z", &[("bri", "full"), ("hum", "full")])
            .narrative("n", &["g", "h", "k", "z"], [0, 23], 1)
            .build()
    }

    fn plan_for(spec: &ScenarioSpec, seed: u64) -> (Vec<PlannedAction>, RunLog) {
        let world = World::new(spec);
        let mix = AttachmentMix::default();
        let ctx = PlanContext {
            world: &world,
            mix: &mix,
            seed,
        };
        let mut index = PostIndex::new();
        let mut ids = IdAllocator::for_seed(seed);
        let mut log = RunLog::new();
        let mut all = Vec::new();
        for t in 9..14 {
            index.advance_to(t);
            let decisions: Vec<_> = (0..spec.actors.len()).map(|a| decision(&world, a, t, 3)).collect();
            all.extend(build_timestep_plan(&ctx, &decisions, &mut index, &mut ids, &mut log));
        }
        (all, log)
    }

    #[test]
    fn planning_is_deterministic() {
        let spec = busy_world();
        assert_eq!(plan_for(&spec, 42).0, plan_for(&spec, 42).0);
        assert_ne!(plan_for(&spec, 42).0, plan_for(&spec, 43).0);
    }

    #[test]
    fn plan_invariants() {
        let spec = busy_world();
        let (plan, _) = plan_for(&spec, 7);
        let mut seen = std::collections::HashMap::new();
        for a in &plan {
            assert!(a.offset_secs < SECONDS_PER_STEP);
            for r in &a.repeats {
                seen.insert(r.post_id, (a.timestep, r.offset_secs));
            }
            if let Some(target) = a.target_post {
                let (tt, toff) = seen[&target];
                assert!(tt + 1 >= a.timestep);
                if tt == a.timestep {
                    assert!(a.offset_secs >= toff);
                }
            }
            assert_eq!(a.target_post.is_some(), a.kind.needs_target());
            assert!(a.kind.permitted_by(&world_caps(&spec, a.author)));
            seen.insert(a.post_id, (a.timestep, a.offset_secs));
        }
        let ids: std::collections::HashSet<_> = plan
            .iter()
            .flat_map(|a| std::iter::once(a.post_id).chain(a.repeats.iter().map(|r| r.post_id)))
            .collect();
        assert_eq!(ids.len(), seen.len());
    }

    fn world_caps(spec: &ScenarioSpec, actor: usize) -> CapabilityRow {
        crate::behavior::capabilities(spec.actors[actor].agent_type)
    }

    #[test]
    fn repeater_and_bridging_behaviour() {
        let spec = busy_world();
        let (plan, _) = plan_for(&spec, 7);
        let rep: Vec<_> = plan.iter().filter(|a| a.author == 3).collect();
        assert!(!rep.is_empty());
        for a in rep {
            assert_eq!(a.kind, PostKind::Tweet);
            assert!((1..=3).contains(&a.repeats.len()));
            assert!(a.repeats.iter().all(|r| r.offset_secs >= a.offset_secs));
        }
        let bri: Vec<_> = plan.iter().filter(|a| a.author == 4).collect();
        assert!(!bri.is_empty());
        for a in bri {
            if a.kind == PostKind::Retweet {
                assert!(a.mentions.is_empty());
                continue;
            }
            assert!(!a.mentions.is_empty() && a.mentions.len() <= 3);
            assert!(!a.mentions.contains(&4));
            let mut m = a.mentions.clone();
            m.dedup();
            assert_eq!(m.len(), a.mentions.len());
        }
        assert!(plan.iter().filter(|a| a.author != 4).all(|a| a.mentions.is_empty()));
    }

    #[test]
    fn same_step_targets_are_reachable() {
        let spec = busy_world();
        let (plan, _) = plan_for(&spec, 7);
        assert!(plan.iter().any(|a| {
            a.target_post
                .and_then(|t| plan.iter().find(|b| b.post_id == t))
                .is_some_and(|b| b.timestep == a.timestep)
        }));
    }

    #[test]
    fn ids_are_seed_based() {
        let a = IdAllocator::for_seed(1).next_id();
        let b = IdAllocator::for_seed(2).next_id();
        assert_ne!(a, b);
        assert!(a.0 >= 1_600_000_000_000_000_000 && a.0 < 1_700_000_000_000_000_000);
    }
}
