//! Index-based view of a scenario used by the simulation stages.

use std::collections::HashMap;

use crate::behavior::BehaviorProfile;
use crate::rng::key_hash;
use crate::scenario::{ActorSpec, Role, ScenarioSpec};

pub struct World<'s> {
    pub spec: &'s ScenarioSpec,
    pub profiles: Vec<BehaviorProfile>,
    /// Stream keys, one per actor.
    pub keys: Vec<u64>,
    actor_index: HashMap<&'s str, usize>,
    screen_index: HashMap<&'s str, usize>,
    /// Per actor: the groups it belongs to, with its role there.
    memberships: Vec<Vec<(usize, Role)>>,
    /// Per group: role of each member, by actor index.
    roles: Vec<HashMap<usize, Role>>,
    /// Per narrative: group indices it is assigned to.
    narrative_groups: Vec<Vec<usize>>,
}

impl<'s> World<'s> {
    pub fn new(spec: &'s ScenarioSpec) -> Self {
        let actor_index: HashMap<&str, usize> = spec
            .actors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.id.as_str(), i))
            .collect();
        let screen_index = spec
            .actors
            .iter()
            .enumerate()
            .map(|(i, a)| (a.screen_name.as_str(), i))
            .collect();
        let group_index: HashMap<&str, usize> = spec
            .groups
            .iter()
            .enumerate()
            .map(|(i, g)| (g.id.as_str(), i))
            .collect();
        let mut memberships = vec![Vec::new(); spec.actors.len()];
        let mut roles = Vec::with_capacity(spec.groups.len());
        for (gi, g) in spec.groups.iter().enumerate() {
            let mut map = HashMap::new();
            for m in &g.members {
                if let Some(&ai) = actor_index.get(m.actor.as_str()) {
                    if map.insert(ai, m.role).is_none() {
                        memberships[ai].push((gi, m.role));
                    }
                }
            }
            roles.push(map);
        }
        let narrative_groups = spec
            .narratives
            .iter()
            .map(|n| {
                n.groups
                    .iter()
                    .filter_map(|g| group_index.get(g.as_str()).copied())
                    .collect()
            })
            .collect();
        World {
            spec,
            profiles: spec
                .actors
                .iter()
                .map(|a| BehaviorProfile::new(a.agent_type, a.operated_by))
                .collect(),
            keys: spec.actors.iter().map(|a| key_hash(&a.id)).collect(),
            actor_index,
            screen_index,
            memberships,
            roles,
            narrative_groups,
        }
    }

    pub fn actor(&self, i: usize) -> &'s ActorSpec {
        &self.spec.actors[i]
    }

    pub fn actor_index(&self, id: &str) -> Option<usize> {
        self.actor_index.get(id).copied()
    }

    pub fn by_screen_name(&self, screen_name: &str) -> Option<usize> {
        self.screen_index.get(screen_name).copied()
    }

    pub fn memberships(&self, actor: usize) -> &[(usize, Role)] {
        &self.memberships[actor]
    }

    /// Groups in which the actor is a Full or Leader member.
    pub fn acting_groups(&self, actor: usize) -> impl Iterator<Item = usize> + '_ {
        self.memberships[actor]
            .iter()
            .filter(|(_, r)| r.acts())
            .map(|(g, _)| *g)
    }

    /// Groups whose narratives the actor talks about: its acting groups, or
    /// every group it belongs to when it only ever appears as a source.
    pub fn narrative_groups_of(&self, actor: usize) -> Vec<usize> {
        let acting: Vec<usize> = self.acting_groups(actor).collect();
        if acting.is_empty() {
            self.memberships[actor].iter().map(|(g, _)| *g).collect()
        } else {
            acting
        }
    }

    pub fn role_in(&self, group: usize, actor: usize) -> Option<Role> {
        self.roles[group].get(&actor).copied()
    }

    pub fn group_members(&self, group: usize) -> impl Iterator<Item = (usize, Role)> + '_ {
        self.spec.groups[group]
            .members
            .iter()
            .filter_map(|m| self.actor_index(&m.actor).map(|i| (i, m.role)))
    }

    pub fn narrative_groups(&self, narrative: usize) -> &[usize] {
        &self.narrative_groups[narrative]
    }

    pub fn narrative_index(&self, id: &str) -> Option<usize> {
        self.spec.narratives.iter().position(|n| n.id == id)
    }
}
