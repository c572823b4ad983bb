//! Structural and placement checks over a parsed scenario.
//!
//! Errors block a simulation; warnings are advice. The report is ordered by
//! rule, then by scenario order within a rule, so the same spec always gives
//! the same report.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::behavior::{AgentClass, BehaviorProfile};
use crate::scenario::{ActorSpec, GroupSpec, Role, ScenarioSpec, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleCode {
    /// Synchronized bot must sit in a bot hub and be a source in human groups.
    SyncBotTopology,
    /// Genre-specific bot belongs to exactly one group.
    GenreBotGroups,
    /// Bridging and conversational bots need two or more groups.
    MultiGroupBot,
    SelfDeclaredName,
    NewsBotName,
    /// A group has timesteps with no narrative to talk about.
    NarrativeGap,
    /// A group has timesteps with a single active narrative.
    NarrativeThin,
    MissingPeriod,
    UnexpectedPeriod,
    PostsRange,
    NeverPosts,
    InvalidHours,
    InvalidWindow,
    InvalidExcitement,
    InvalidRatio,
    EmptyNarrativeGroups,
    DuplicateMember,
    NoActingMember,
    MissingLexicon,
    InvalidRandoLocations,
    EmptyTimeline,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub code: RuleCode,
    pub message: String,
    pub location: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub timesteps: Vec<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    pub fn errors(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Warning)
    }

    /// One JSON object per line.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for issue in &self.issues {
            out.push_str(&serde_json::to_string(issue).expect("issue serializes"));
            out.push('\n');
        }
        out
    }

    fn push(&mut self, severity: Severity, code: RuleCode, location: impl Into<String>, message: impl Into<String>) {
        self.issues.push(ValidationIssue {
            severity,
            code,
            message: message.into(),
            location: location.into(),
            timesteps: Vec::new(),
        });
    }
}

fn actor_loc(a: &ActorSpec) -> String {
    format!("actors[{}]", a.id)
}

fn group_loc(g: &GroupSpec) -> String {
    format!("groups[{}]", g.id)
}

struct Ctx<'a> {
    spec: &'a ScenarioSpec,
}

impl<'a> Ctx<'a> {
    fn profile(&self, actor: &str) -> Option<BehaviorProfile> {
        self.spec
            .actor(actor)
            .map(|a| BehaviorProfile::new(a.agent_type, a.operated_by))
    }

    fn is_bot(&self, actor: &str) -> bool {
        self.profile(actor).is_some_and(|p| p.is_bot())
    }

    fn groups_of(&self, actor: &'a str) -> impl Iterator<Item = (&'a GroupSpec, Role)> + 'a {
        self.spec
            .groups
            .iter()
            .filter_map(move |g| g.role_of(actor).map(|r| (g, r)))
    }

    fn human_majority(&self, g: &GroupSpec) -> bool {
        let humans = g.members.iter().filter(|m| !self.is_bot(&m.actor)).count();
        humans * 2 > g.members.len()
    }
}

pub fn validate(spec: &ScenarioSpec) -> ValidationReport {
    let ctx = Ctx { spec };
    let mut report = ValidationReport::default();

    check_sync_topology(&ctx, &mut report);
    for a in spec
        .actors
        .iter()
        .filter(|a| a.agent_type == AgentClass::GenreSpecificBot)
    {
        let n = ctx.groups_of(&a.id).count();
        if n != 1 {
            report.push(
                Severity::Error,
                RuleCode::GenreBotGroups,
                actor_loc(a),
                format!(
                    "genre-specific bot `{}` is in {n} groups; it must be in exactly one",
                    a.id
                ),
            );
        }
    }
    for a in spec
        .actors
        .iter()
        .filter(|a| matches!(a.agent_type, AgentClass::BridgingBot | AgentClass::ConversationalBot))
    {
        let n = ctx.groups_of(&a.id).count();
        if n < 2 {
            report.push(
                Severity::Error,
                RuleCode::MultiGroupBot,
                actor_loc(a),
                format!(
                    "{} `{}` is in {n} group(s); it needs at least two",
                    a.agent_type.display_name(),
                    a.id
                ),
            );
        }
    }
    for a in &spec.actors {
        let name = a.screen_name.to_lowercase();
        if a.agent_type == AgentClass::SelfDeclaredBot && !name.contains("bot") {
            report.push(
                Severity::Warning,
                RuleCode::SelfDeclaredName,
                actor_loc(a),
                format!(
                    "self-declared bot screen name `{}` does not contain \"bot\"",
                    a.screen_name
                ),
            );
        }
        if a.agent_type == AgentClass::NewsBot && !name.contains("news") {
            report.push(
                Severity::Warning,
                RuleCode::NewsBotName,
                actor_loc(a),
                format!("news bot screen name `{}` does not contain \"news\"", a.screen_name),
            );
        }
    }
    check_coverage(&ctx, &mut report);
    for a in &spec.actors {
        if a.agent_type.is_periodic() && !matches!(a.period_hours, Some(p) if p > 0) {
            report.push(
                Severity::Error,
                RuleCode::MissingPeriod,
                actor_loc(a),
                format!(
                    "{} `{}` needs a positive period_hours",
                    a.agent_type.display_name(),
                    a.id
                ),
            );
        }
    }
    check_structure(&ctx, &mut report);
    report
}

fn check_sync_topology(ctx: &Ctx<'_>, report: &mut ValidationReport) {
    for a in ctx
        .spec
        .actors
        .iter()
        .filter(|a| a.agent_type == AgentClass::SynchronizedBot)
    {
        let has_hub = ctx.groups_of(&a.id).any(|(g, role)| {
            let other_bots: Vec<_> = g
                .members
                .iter()
                .filter(|m| m.actor != a.id && ctx.is_bot(&m.actor))
                .collect();
            role.acts() && !other_bots.is_empty() && other_bots.iter().all(|m| m.role == Role::Source)
        });
        if !has_hub {
            report.push(
                Severity::Error,
                RuleCode::SyncBotTopology,
                actor_loc(a),
                format!(
                    "synchronized bot `{}` is not an acting member of any group whose other bots are all sources",
                    a.id
                ),
            );
        }
        for (g, role) in ctx.groups_of(&a.id) {
            if role != Role::Source && ctx.human_majority(g) {
                report.push(
                    Severity::Error,
                    RuleCode::SyncBotTopology,
                    group_loc(g),
                    format!(
                        "synchronized bot `{}` must be a source in human-majority group `{}`",
                        a.id, g.id
                    ),
                );
            }
        }
    }
}

/// Timesteps when at least one acting member of `g` is inside its active hours.
pub(crate) fn group_scan_timesteps(spec: &ScenarioSpec, g: &GroupSpec) -> Vec<u32> {
    let acting: Vec<&ActorSpec> = g
        .members
        .iter()
        .filter(|m| m.role.acts())
        .filter_map(|m| spec.actor(&m.actor))
        .collect();
    (0..spec.num_timesteps)
        .filter(|&t| {
            let (day, hour) = (spec.day_index(t), spec.hour_of_day(t));
            acting.iter().any(|a| a.is_active_hour(day, hour))
        })
        .collect()
}

/// Formats timesteps as compact inclusive ranges, e.g. `12-17, 36`.
pub(crate) fn format_ranges(ts: &[u32]) -> String {
    let mut out = String::new();
    let mut i = 0;
    while i < ts.len() {
        let mut j = i;
        while j + 1 < ts.len() && ts[j + 1] == ts[j] + 1 {
            j += 1;
        }
        if !out.is_empty() {
            out.push_str(", ");
        }
        if i == j {
            let _ = write!(out, "{}", ts[i]);
        } else {
            let _ = write!(out, "{}-{}", ts[i], ts[j]);
        }
        i = j + 1;
    }
    out
}

fn check_coverage(ctx: &Ctx<'_>, report: &mut ValidationReport) {
    let spec = ctx.spec;
    let mut gaps = Vec::new();
    let mut thin = Vec::new();
    for g in &spec.groups {
        let windows: Vec<Window> = spec
            .narratives
            .iter()
            .filter(|n| n.groups.contains(&g.id))
            .map(|n| n.window)
            .collect();
        let (mut zero, mut one) = (Vec::new(), Vec::new());
        for t in group_scan_timesteps(spec, g) {
            match windows.iter().filter(|w| w.contains(t)).count() {
                0 => zero.push(t),
                1 => one.push(t),
                _ => {}
            }
        }
        if !zero.is_empty() {
            gaps.push(ValidationIssue {
                severity: Severity::Warning,
                code: RuleCode::NarrativeGap,
                message: format!(
                    "group `{}` has no active narrative at timesteps {}",
                    g.id,
                    format_ranges(&zero)
                ),
                location: group_loc(g),
                timesteps: zero,
            });
        }
        if !one.is_empty() {
            thin.push(ValidationIssue {
                severity: Severity::Warning,
                code: RuleCode::NarrativeThin,
                message: format!(
                    "group `{}` has only one active narrative at timesteps {}",
                    g.id,
                    format_ranges(&one)
                ),
                location: group_loc(g),
                timesteps: one,
            });
        }
    }
    report.issues.extend(gaps);
    report.issues.extend(thin);
}

fn check_window(report: &mut ValidationReport, loc: String, w: Window, num_timesteps: u32) {
    if w.start() > w.end() || w.end() >= num_timesteps {
        report.push(
            Severity::Error,
            RuleCode::InvalidWindow,
            loc,
            format!(
                "window [{}, {}] must satisfy start <= end < {num_timesteps}",
                w.start(),
                w.end()
            ),
        );
    }
}

fn check_structure(ctx: &Ctx<'_>, report: &mut ValidationReport) {
    let spec = ctx.spec;
    if spec.num_timesteps == 0 {
        report.push(
            Severity::Error,
            RuleCode::EmptyTimeline,
            "num_timesteps",
            "num_timesteps must be positive",
        );
    }
    for a in &spec.actors {
        if !a.agent_type.is_periodic() && a.period_hours.is_some() {
            report.push(
                Severity::Error,
                RuleCode::UnexpectedPeriod,
                actor_loc(a),
                format!("{} `{}` does not post periodically", a.agent_type.display_name(), a.id),
            );
        }
        if a.posts_min > a.posts_max {
            report.push(
                Severity::Error,
                RuleCode::PostsRange,
                actor_loc(a),
                format!("posts_min {} exceeds posts_max {}", a.posts_min, a.posts_max),
            );
        } else if a.posts_max == 0 {
            report.push(
                Severity::Warning,
                RuleCode::NeverPosts,
                actor_loc(a),
                format!("actor `{}` has posts_max 0 and will never post", a.id),
            );
        }
        let all_ranges = a.active_hours.iter().chain(a.active_hours_by_day.values().flatten());
        if all_ranges.clone().any(|r| r.start() > 23 || r.end() > 23) {
            report.push(
                Severity::Error,
                RuleCode::InvalidHours,
                actor_loc(a),
                "active hours must lie in 0..=23",
            );
        }
    }
    for g in &spec.groups {
        let mut seen = std::collections::HashSet::new();
        for m in &g.members {
            if !seen.insert(m.actor.as_str()) {
                report.push(
                    Severity::Error,
                    RuleCode::DuplicateMember,
                    group_loc(g),
                    format!("actor `{}` appears more than once in group `{}`", m.actor, g.id),
                );
            }
        }
        if !g.members.iter().any(|m| m.role.acts()) {
            report.push(
                Severity::Error,
                RuleCode::NoActingMember,
                group_loc(g),
                format!("group `{}` has no full or leader member", g.id),
            );
        }
    }
    for e in &spec.events {
        let loc = format!("events[{}]", e.id);
        check_window(report, loc.clone(), e.window, spec.num_timesteps);
        if !(e.excitement.is_finite() && e.excitement >= 1.0) {
            report.push(
                Severity::Error,
                RuleCode::InvalidExcitement,
                loc,
                format!("excitement {} must be a finite multiplier >= 1", e.excitement),
            );
        }
    }
    for n in &spec.narratives {
        let loc = format!("narratives[{}]", n.id);
        check_window(report, loc.clone(), n.window, spec.num_timesteps);
        if n.ratio < 1 {
            report.push(
                Severity::Error,
                RuleCode::InvalidRatio,
                loc.clone(),
                "ratio must be >= 1",
            );
        }
        if n.groups.is_empty() {
            report.push(
                Severity::Error,
                RuleCode::EmptyNarrativeGroups,
                loc,
                "narrative is assigned to no group",
            );
        }
    }
    check_lexicons(spec, report);
    let locs = &spec.randos.locations;
    if locs.is_empty()
        || locs.iter().any(|l| !(l.weight.is_finite() && l.weight >= 0.0))
        || locs.iter().map(|l| l.weight).sum::<f64>() <= 0.0
    {
        report.push(
            Severity::Error,
            RuleCode::InvalidRandoLocations,
            "randos.locations",
            "rando locations need non-negative weights with a positive sum",
        );
    }
}

fn check_lexicons(spec: &ScenarioSpec, report: &mut ValidationReport) {
    let has = |c: AgentClass| spec.actors.iter().any(|a| a.agent_type == c);
    let lex = &spec.lexicons;
    let mut need = |list: &str, len: usize, min: usize, who: &str| {
        if len < min {
            report.push(
                Severity::Error,
                RuleCode::MissingLexicon,
                format!("lexicons.{list}"),
                format!(
                    "{who} need at least {min} entr{} in lexicons.{list}",
                    if min == 1 { "y" } else { "ies" }
                ),
            );
        }
    };
    if has(AgentClass::Dredger) {
        need("dredge_words", distinct(&lex.dredge_words), 2, "dredgers");
        need("unreliable_domains", distinct(&lex.unreliable_domains), 2, "dredgers");
    }
    if has(AgentClass::NewsBot) {
        need("news_domains", lex.news_domains.len(), 1, "news bots");
    }
    if has(AgentClass::InformationCorrectionBot) {
        need(
            "factcheck_domains",
            lex.factcheck_domains.len(),
            1,
            "information correction bots",
        );
    }
    if !spec.actors.is_empty() {
        need("bend_maneuvers", lex.bend_maneuvers.len(), 1, "actors");
    }
}

fn distinct(v: &[String]) -> usize {
    v.iter().collect::<std::collections::HashSet<_>>().len()
}
