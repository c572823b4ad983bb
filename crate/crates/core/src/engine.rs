//! The timestep loop tying the three stages together.

use std::collections::{BTreeMap, HashMap, VecDeque};

use chrono::Duration;
use serde::Serialize;
use thiserror::Error;

use crate::activation::{select_active_agents, ActivationError};
use crate::behavior::{AgentClass, BehaviorProfile};
use crate::config::RunConfig;
use crate::content::prompt::{assemble_prompt, PromptRequest, Speaker, TargetRef};
use crate::content::rando::{spawn_randos, Rando};
use crate::content::{generate_text, parse_entities, Author, ContentError, Post, TextBackend};
use crate::interaction::{
    build_timestep_plan, IdAllocator, IndexedPost, PlanContext, PlannedAction, PostId, PostIndex, PostKind,
};
use crate::log::{LogEvent, RunLog};
use crate::parallel::{map_ordered, Execution};
use crate::rng::{substream, Stage};
use crate::scenario::ScenarioSpec;
use crate::world::World;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Activation(#[from] ActivationError),
    #[error(transparent)]
    Content(#[from] ContentError),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunStats {
    pub activations_per_timestep: Vec<u32>,
    pub planned_posts_per_timestep: Vec<u64>,
    pub randos_spawned: u64,
    pub dropped: u64,
}

pub struct RunOutput {
    /// In emission order.
    pub posts: Vec<Post>,
    /// Every spawned Rando, by number.
    pub randos: Vec<Rando>,
    pub log: RunLog,
    pub stats: RunStats,
}

pub struct Engine<'a> {
    pub spec: &'a ScenarioSpec,
    pub config: &'a RunConfig,
    pub backend: &'a dyn TextBackend,
    pub exec: Execution,
    pub seed: u64,
}

/// What a generation job resolved to.
#[derive(Debug, Clone)]
enum Resolved {
    Text(String, Vec<String>),
    Dropped,
}

struct Job<'a> {
    action: &'a PlannedAction,
    target: Option<(String, String)>,
}

/// Post lookup across committed timesteps and the one being generated.
struct Store {
    posts: Vec<Post>,
    by_id: HashMap<PostId, usize>,
}

impl Store {
    fn get(&self, id: PostId) -> Option<&Post> {
        self.by_id.get(&id).map(|&i| &self.posts[i])
    }

    fn push(&mut self, p: Post) {
        self.by_id.insert(p.id, self.posts.len());
        self.posts.push(p);
    }
}

impl<'a> Engine<'a> {
    pub fn new(spec: &'a ScenarioSpec, config: &'a RunConfig, backend: &'a dyn TextBackend, seed: u64) -> Self {
        Engine {
            spec,
            config,
            backend,
            exec: Execution::default(),
            seed,
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    fn screen_name<'s>(&self, world: &World<'s>, randos: &'s [Rando], author: Author) -> &'s str
    where
        'a: 's,
    {
        match author {
            Author::Actor(i) => &world.actor(i).screen_name,
            Author::Rando(n) => &randos[n as usize].screen_name,
        }
    }

    pub fn run(&self) -> Result<RunOutput, RunError> {
        let spec = self.spec;
        let cfg = self.config;
        let world = World::new(spec);
        let ctx = PlanContext {
            world: &world,
            mix: &cfg.attachment,
            seed: self.seed,
        };
        let mut index = PostIndex::new();
        let mut ids = IdAllocator::for_seed(self.seed);
        let mut log = RunLog::new();
        let mut stats = RunStats::default();
        let mut store = Store {
            posts: Vec::new(),
            by_id: HashMap::new(),
        };
        let mut randos: Vec<Rando> = Vec::new();
        let mut history: Vec<VecDeque<String>> = vec![VecDeque::new(); spec.narratives.len()];
        let h = cfg.content.history_len;

        for t in 0..spec.num_timesteps {
            index.advance_to(t);
            let decisions = select_active_agents(spec, t, &cfg.activation, self.seed, self.exec)?;
            let plan = build_timestep_plan(&ctx, &decisions, &mut index, &mut ids, &mut log);
            stats.activations_per_timestep.push(decisions.len() as u32);
            stats.planned_posts_per_timestep.push(plan.len() as u64);
            log.push(LogEvent::Activation {
                timestep: t,
                active: decisions.len(),
                posts_planned: plan.len() as u64,
            });
            let snapshot: Vec<Vec<String>> = history.iter().map(|q| q.iter().cloned().collect()).collect();

            let resolved = self.resolve_plan(&world, &randos, &plan, &store, &snapshot, t, &mut log)?;

            let base = spec.utc_time(t);
            let mut step_posts: Vec<Post> = Vec::new();
            for a in &plan {
                let Resolved::Text(text, bend) = &resolved[&a.post_id] else {
                    index.remove(a.post_id);
                    for r in &a.repeats {
                        index.remove(r.post_id);
                    }
                    stats.dropped += 1;
                    continue;
                };
                let profile = &world.profiles[a.author];
                let make = |id: PostId, offset: u32, repeat_of: Option<PostId>| {
                    let (hashtags, urls, mentions) = if a.kind == PostKind::Retweet {
                        Default::default()
                    } else {
                        parse_entities(text)
                    };
                    Post {
                        id,
                        author: Author::Actor(a.author),
                        author_is_bot: profile.is_bot(),
                        author_class: profile.class,
                        timestep: t,
                        offset_secs: offset,
                        created_at: base + Duration::seconds(offset as i64),
                        kind: a.kind,
                        text: text.clone(),
                        target: a.target_post,
                        narrative_id: a.narrative_id.clone(),
                        hashtags,
                        urls,
                        mentions,
                        repeat_of,
                        bend_directives: bend.clone(),
                    }
                };
                step_posts.push(make(a.post_id, a.offset_secs, None));
                for r in &a.repeats {
                    step_posts.push(make(r.post_id, r.offset_secs, Some(a.post_id)));
                }
            }

            let rando_posts = self.rando_round(
                &world,
                &mut randos,
                &step_posts,
                &snapshot,
                &mut ids,
                t,
                &mut log,
                &mut stats,
            )?;
            for p in &rando_posts {
                if p.kind != PostKind::Retweet {
                    index.push(IndexedPost {
                        id: p.id,
                        author: None,
                        author_is_bot: p.author_is_bot,
                        narrative: world.narrative_index(&p.narrative_id).expect("known narrative"),
                        timestep: t,
                        offset_secs: p.offset_secs,
                    });
                }
            }
            step_posts.extend(rando_posts);
            step_posts.sort_by_key(|p| (p.offset_secs, p.id));
            for p in step_posts {
                if p.kind != PostKind::Retweet && p.repeat_of.is_none() && h > 0 {
                    let n = world.narrative_index(&p.narrative_id).expect("known narrative");
                    let q = &mut history[n];
                    q.push_back(p.text.clone());
                    while q.len() > h {
                        q.pop_front();
                    }
                }
                store.push(p);
            }
        }

        Ok(RunOutput {
            posts: store.posts,
            randos,
            log,
            stats,
        })
    }

    /// Generates text for every planned action of one timestep, in waves so
    /// that quotes and replies of same-step posts see their target's text.
    #[allow(clippy::too_many_arguments)]
    fn resolve_plan(
        &self,
        world: &World<'_>,
        randos: &[Rando],
        plan: &[PlannedAction],
        store: &Store,
        snapshot: &[Vec<String>],
        t: u32,
        log: &mut RunLog,
    ) -> Result<HashMap<PostId, Resolved>, RunError> {
        let mut resolved: HashMap<PostId, Resolved> = HashMap::new();
        let mut pending: Vec<&PlannedAction> = plan.iter().collect();
        while !pending.is_empty() {
            let mut jobs: Vec<Job<'_>> = Vec::new();
            let mut waiting = Vec::new();
            for a in pending {
                let target = match a.target_post {
                    None => None,
                    Some(id) => {
                        if let Some(p) = store.get(id) {
                            Some(Some((
                                self.screen_name(world, randos, p.author).to_string(),
                                p.text.clone(),
                            )))
                        } else {
                            match resolved.get(&id) {
                                Some(Resolved::Text(text, _)) => {
                                    let owner = plan
                                        .iter()
                                        .find(|b| b.post_id == id || b.repeats.iter().any(|r| r.post_id == id));
                                    let screen = owner.map_or("", |b| world.actor(b.author).screen_name.as_str());
                                    Some(Some((screen.to_string(), text.clone())))
                                }
                                Some(Resolved::Dropped) => Some(None),
                                None => None,
                            }
                        }
                    }
                };
                match (a.target_post, target) {
                    (None, _) => jobs.push(Job {
                        action: a,
                        target: None,
                    }),
                    (Some(_), Some(Some(tgt))) => jobs.push(Job {
                        action: a,
                        target: Some(tgt),
                    }),
                    (Some(_), Some(None)) => {
                        log.push(LogEvent::Dropped {
                            timestep: t,
                            post_id: a.post_id,
                            reason: "target dropped".into(),
                        });
                        resolve(&mut resolved, a, Resolved::Dropped);
                    }
                    (Some(_), None) => waiting.push(a),
                }
            }
            if jobs.is_empty() {
                for a in waiting {
                    log.push(LogEvent::Dropped {
                        timestep: t,
                        post_id: a.post_id,
                        reason: "target never resolved".into(),
                    });
                    resolve(&mut resolved, a, Resolved::Dropped);
                }
                break;
            }
            let results = map_ordered(self.exec, &jobs, |job| self.generate(world, job, snapshot, t));
            for (job, r) in jobs.iter().zip(results) {
                let (res, events) = r?;
                log.extend(events);
                resolve(&mut resolved, job.action, res);
            }
            pending = waiting;
        }
        Ok(resolved)
    }

    fn generate(
        &self,
        world: &World<'_>,
        job: &Job<'_>,
        snapshot: &[Vec<String>],
        t: u32,
    ) -> Result<(Resolved, Vec<LogEvent>), RunError> {
        let a = job.action;
        let mut events = Vec::new();
        if a.kind == PostKind::Retweet {
            let (_, text) = job.target.clone().expect("retweets have targets");
            return Ok((Resolved::Text(text, Vec::new()), events));
        }
        let actor = world.actor(a.author);
        let profile = world.profiles[a.author].clone();
        let req = PromptRequest {
            speaker: Speaker {
                name: &actor.screen_name,
                profile: profile.clone(),
                tone: &actor.tone,
                phase: a.phase,
                description: actor.description.as_deref(),
            },
            kind: a.kind,
            narrative: &self.spec.narratives[a.narrative],
            target: job.target.as_ref().map(|(s, text)| TargetRef { screen_name: s, text }),
            mentions: a
                .mentions
                .iter()
                .map(|&m| world.actor(m).screen_name.as_str())
                .collect(),
        };
        let mut rng = substream(self.seed, Stage::Content, t, a.post_id.0);
        let c = &self.config.content;
        let bundle = assemble_prompt(
            &req,
            &c.system_prompt,
            &snapshot[a.narrative],
            &self.spec.lexicons,
            c.base_bend,
            &mut rng,
        )?;
        let res = match generate_text(
            self.backend,
            &bundle,
            &profile,
            &self.spec.lexicons,
            c,
            t,
            a.post_id,
            &mut events,
        ) {
            Ok(text) => Resolved::Text(text, bundle.bend_directives),
            Err(e) => {
                events.push(LogEvent::Dropped {
                    timestep: t,
                    post_id: a.post_id,
                    reason: e.to_string(),
                });
                Resolved::Dropped
            }
        };
        Ok((res, events))
    }

    /// Spawns Randos around each original tweet of the step and returns
    /// their posts.
    #[allow(clippy::too_many_arguments)]
    fn rando_round(
        &self,
        world: &World<'_>,
        randos: &mut Vec<Rando>,
        step_posts: &[Post],
        snapshot: &[Vec<String>],
        ids: &mut IdAllocator,
        t: u32,
        log: &mut RunLog,
        stats: &mut RunStats,
    ) -> Result<Vec<Post>, RunError> {
        let c = &self.config.content;
        struct RandoJob<'p> {
            target: &'p Post,
            rando: u32,
            kind: PostKind,
            offset: u32,
            id: PostId,
        }
        let mut jobs = Vec::new();
        for p in step_posts
            .iter()
            .filter(|p| p.kind == PostKind::Tweet && p.repeat_of.is_none())
        {
            let mut rng = substream(self.seed, Stage::Rando, t, p.id.0);
            let first = randos.len() as u32;
            let spawned = spawn_randos(
                &self.spec.randos,
                c.randos_per_tweet,
                c.rando_lambda,
                first,
                p.author_is_bot,
                p.offset_secs,
                &mut rng,
            );
            stats.randos_spawned += spawned.len() as u64;
            for (r, action) in spawned {
                if let Some(act) = action {
                    jobs.push(RandoJob {
                        target: p,
                        rando: r.number,
                        kind: act.kind,
                        offset: act.offset_secs,
                        id: ids.next_id(),
                    });
                }
                randos.push(r);
            }
        }
        let randos_ref: &[Rando] = randos;
        let results = map_ordered(
            self.exec,
            &jobs,
            |job| -> Result<(Option<Post>, Vec<LogEvent>), RunError> {
                let rando = &randos_ref[job.rando as usize];
                let profile: BehaviorProfile = rando.profile();
                let mut events = Vec::new();
                let (text, bend) = if job.kind == PostKind::Retweet {
                    (job.target.text.clone(), Vec::new())
                } else {
                    let narrative = world
                        .narrative_index(&job.target.narrative_id)
                        .expect("known narrative");
                    let target_screen = self.screen_name(world, randos_ref, job.target.author);
                    let req = PromptRequest {
                        speaker: Speaker {
                            name: &rando.screen_name,
                            profile: profile.clone(),
                            tone: &[],
                            phase: None,
                            description: None,
                        },
                        kind: job.kind,
                        narrative: &self.spec.narratives[narrative],
                        target: Some(TargetRef {
                            screen_name: target_screen,
                            text: &job.target.text,
                        }),
                        mentions: Vec::new(),
                    };
                    let mut rng = substream(self.seed, Stage::Content, t, job.id.0);
                    let bundle = assemble_prompt(
                        &req,
                        &c.system_prompt,
                        &snapshot[narrative],
                        &self.spec.lexicons,
                        c.base_bend,
                        &mut rng,
                    )?;
                    match generate_text(
                        self.backend,
                        &bundle,
                        &profile,
                        &self.spec.lexicons,
                        c,
                        t,
                        job.id,
                        &mut events,
                    ) {
                        Ok(text) => (text, bundle.bend_directives),
                        Err(e) => {
                            events.push(LogEvent::Dropped {
                                timestep: t,
                                post_id: job.id,
                                reason: e.to_string(),
                            });
                            return Ok((None, events));
                        }
                    }
                };
                let (hashtags, urls, mentions) = if job.kind == PostKind::Retweet {
                    Default::default()
                } else {
                    parse_entities(&text)
                };
                Ok((
                    Some(Post {
                        id: job.id,
                        author: Author::Rando(job.rando),
                        author_is_bot: rando.is_bot(),
                        author_class: rando.class.unwrap_or(AgentClass::Human),
                        timestep: t,
                        offset_secs: job.offset,
                        created_at: self.spec.utc_time(t) + Duration::seconds(job.offset as i64),
                        kind: job.kind,
                        text,
                        target: Some(job.target.id),
                        narrative_id: job.target.narrative_id.clone(),
                        hashtags,
                        urls,
                        mentions,
                        repeat_of: None,
                        bend_directives: bend,
                    }),
                    events,
                ))
            },
        );
        let mut out = Vec::new();
        for r in results {
            let (post, events) = r?;
            log.extend(events);
            match post {
                Some(p) => out.push(p),
                None => stats.dropped += 1,
            }
        }
        Ok(out)
    }
}

fn resolve(map: &mut HashMap<PostId, Resolved>, a: &PlannedAction, r: Resolved) {
    for rep in &a.repeats {
        map.insert(rep.post_id, r.clone());
    }
    map.insert(a.post_id, r);
}

/// Posts per author class and per kind, for the manifest.
pub fn count_posts(posts: &[Post]) -> (BTreeMap<String, u64>, BTreeMap<String, u64>) {
    let mut by_class = BTreeMap::new();
    let mut by_kind = BTreeMap::new();
    for p in posts {
        *by_class.entry(p.author_class.as_str().to_string()).or_insert(0) += 1;
        let kind = serde_json::to_value(p.kind).expect("kind serializes");
        *by_kind
            .entry(kind.as_str().unwrap_or_default().to_string())
            .or_insert(0) += 1;
    }
    (by_class, by_kind)
}
