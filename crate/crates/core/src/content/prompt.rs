//! Six-part prompt assembly.

use rand::seq::{IndexedRandom, IteratorRandom};
use rand::Rng;
use serde::Serialize;

use crate::behavior::{AgentClass, BehaviorFlag, BehaviorProfile, CyborgPhase};
use crate::interaction::PostKind;
use crate::scenario::{Lexicons, NarrativeSpec};

use super::ContentError;

/// Everything a backend needs to write one post. The first six fields are
/// the prompt parts, in the order they are concatenated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptBundle {
    pub system: String,
    pub persona: String,
    pub narrative: String,
    pub history: Vec<String>,
    pub bend_directives: Vec<String>,
    pub specifics: String,
    pub kind: PostKind,
    pub tone: Vec<String>,
    /// Tokens the text must contain verbatim: dredge words, URLs, mentions.
    pub required: Vec<String>,
    pub hashtag: Option<String>,
    pub emotional: bool,
}

impl PromptBundle {
    /// The prompt as one string: parts joined in order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.system);
        out.push_str("\n\nWho you are: ");
        out.push_str(&self.persona);
        out.push_str("\n\nWhat the conversation is about: ");
        out.push_str(&self.narrative);
        if !self.history.is_empty() {
            out.push_str("\n\nRecent posts on this story:");
            for h in &self.history {
                out.push_str("\n- ");
                out.push_str(h);
            }
        }
        if !self.bend_directives.is_empty() {
            out.push_str("\n\nManeuvers to use:");
            for d in &self.bend_directives {
                out.push_str("\n- ");
                out.push_str(d);
                out.push_str(": ");
                out.push_str(maneuver_instruction(d));
            }
        }
        out.push_str("\n\nDetails: ");
        out.push_str(&self.specifics);
        out
    }

    /// Everything after the system part, for chat-style backends.
    pub fn render_user(&self) -> String {
        let full = self.render();
        full[self.system.len()..].trim_start().to_string()
    }
}

pub fn maneuver_instruction(name: &str) -> &'static str {
    match name {
        "bridge" => "tie the reader's community to the people pushing this story",
        "back" => "praise or stand behind someone who supports this story",
        "explain" => "lay out the story as if giving the reader the facts",
        "enhance" => "make the story sound bigger and more exciting than it is",
        "engage" => "ask the reader a question to pull them in",
        "excite" => "use upbeat, celebratory wording",
        "dismay" => "sound worried or upset about the story",
        "distort" => "present the story from a slanted angle",
        "dismiss" => "wave away the other side as unimportant",
        "distract" => "steer attention to a different topic",
        _ => "apply this maneuver to the story",
    }
}

/// Who is speaking.
#[derive(Debug, Clone)]
pub struct Speaker<'a> {
    pub name: &'a str,
    pub profile: BehaviorProfile,
    pub tone: &'a [String],
    pub phase: Option<CyborgPhase>,
    pub description: Option<&'a str>,
}

/// Post being quoted or replied to.
#[derive(Debug, Clone, Copy)]
pub struct TargetRef<'a> {
    pub screen_name: &'a str,
    pub text: &'a str,
}

#[derive(Debug, Clone)]
pub struct PromptRequest<'a> {
    pub speaker: Speaker<'a>,
    pub kind: PostKind,
    /// For quotes and replies, the narrative of the target post.
    pub narrative: &'a NarrativeSpec,
    pub target: Option<TargetRef<'a>>,
    /// Screen names to tag.
    pub mentions: Vec<&'a str>,
}

/// Probability that a prompt carries a maneuver.
pub fn bend_probability(base_bend: f64, profile: &BehaviorProfile, phase: Option<CyborgPhase>) -> f64 {
    (base_bend * profile.bend_multiplier(phase) as f64).min(1.0)
}

fn url_slug<R: Rng + ?Sized>(narrative: &NarrativeSpec, rng: &mut R) -> String {
    let stem: String = narrative
        .topic
        .chars()
        .filter_map(|c| match c {
            c if c.is_ascii_alphanumeric() => Some(c.to_ascii_lowercase()),
            ' ' | '-' | '_' => Some('-'),
            _ => None,
        })
        .take(24)
        .collect();
    format!("{}-{:04x}", stem.trim_matches('-'), rng.random::<u16>())
}

pub fn make_url(domain: &str, slug: &str) -> String {
    format!("https://{domain}/{slug}")
}

fn pick_distinct<'l, R: Rng + ?Sized>(
    list: &'l [String],
    n: usize,
    class: AgentClass,
    lexicon: &'static str,
    rng: &mut R,
) -> Result<Vec<&'l String>, ContentError> {
    let mut distinct: Vec<&String> = Vec::new();
    for w in list {
        if !distinct.iter().any(|d| d.eq_ignore_ascii_case(w)) {
            distinct.push(w);
        }
    }
    if distinct.len() < n {
        return Err(ContentError::MissingLexicon { class, lexicon });
    }
    Ok(distinct.into_iter().choose_multiple(rng, n))
}

/// Builds the prompt for one non-retweet post.
pub fn assemble_prompt<R: Rng + ?Sized>(
    req: &PromptRequest<'_>,
    system: &str,
    history: &[String],
    lexicons: &Lexicons,
    base_bend: f64,
    rng: &mut R,
) -> Result<PromptBundle, ContentError> {
    debug_assert!(req.kind != PostKind::Retweet, "retweets bypass generation");
    let sp = &req.speaker;
    let class = sp.profile.class;

    let mut persona = format!("@{} ({}). {}", sp.name, class.display_name(), class.persona());
    if let Some(d) = sp.description {
        persona.push_str(" Bio: ");
        persona.push_str(d);
    }
    if !sp.tone.is_empty() {
        persona.push_str(" Tone: ");
        persona.push_str(&sp.tone.join(", "));
        persona.push('.');
    }

    let bend = rng.random::<f64>() < bend_probability(base_bend, &sp.profile, sp.phase);
    let bend_directives = match lexicons.bend_maneuvers.choose(rng) {
        Some(m) if bend => vec![m.clone()],
        _ => Vec::new(),
    };

    let mut required = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    match req.kind {
        PostKind::Tweet => notes.push("Write an original post.".into()),
        PostKind::Quote => notes.push("Quote the post below and add your own take.".into()),
        PostKind::Reply => notes.push("Reply to the post below.".into()),
        PostKind::Retweet => {}
    }
    if let Some(t) = req.target {
        notes.push(format!("Post by @{}: \"{}\"", t.screen_name, t.text));
    }
    if sp.profile.has(BehaviorFlag::UsesDredgeWords) {
        let words = pick_distinct(&lexicons.dredge_words, 2, class, "dredge_words", rng)?;
        let domains = pick_distinct(&lexicons.unreliable_domains, 2, class, "unreliable_domains", rng)?;
        notes.push("Work in the trending phrases and both links below.".into());
        required.extend(words.into_iter().cloned());
        for d in domains {
            let slug = url_slug(req.narrative, rng);
            required.push(make_url(d, &slug));
        }
    }
    if sp.profile.has(BehaviorFlag::UsesNewsUrls) {
        let d = pick_distinct(&lexicons.news_domains, 1, class, "news_domains", rng)?;
        notes.push("Write it as a news headline and include the article link.".into());
        let slug = url_slug(req.narrative, rng);
        required.push(make_url(d[0], &slug));
    }
    if sp.profile.has(BehaviorFlag::UsesFactcheckUrls) {
        let d = pick_distinct(&lexicons.factcheck_domains, 1, class, "factcheck_domains", rng)?;
        notes.push("Correct any misleading claim and cite the fact-check link.".into());
        let slug = url_slug(req.narrative, rng);
        required.push(make_url(d[0], &slug));
    }
    let emotional = sp.profile.has(BehaviorFlag::HighEmotionalCues);
    if emotional {
        notes.push("Use strong emotional cues.".into());
    }
    if sp.profile.has(BehaviorFlag::Erratic) {
        notes.push("Drift off topic partway through.".into());
    }
    if sp.profile.class == AgentClass::SelfDeclaredBot {
        notes.push("Make clear you are a bot.".into());
    }
    for m in &req.mentions {
        required.push(format!("@{m}"));
    }
    if !req.mentions.is_empty() {
        notes.push("Tag the accounts listed below.".into());
    }
    if !required.is_empty() {
        notes.push(format!("Include verbatim: {}", required.join(" ")));
    }
    let hashtag = req.narrative.hashtags.first().cloned();
    if let Some(h) = &hashtag {
        notes.push(format!("Hashtag: #{h}"));
    }

    Ok(PromptBundle {
        system: system.to_string(),
        persona,
        narrative: req.narrative.description.clone(),
        history: history.to_vec(),
        bend_directives,
        specifics: notes.join(" "),
        kind: req.kind,
        tone: sp.tone.to_vec(),
        required,
        hashtag,
        emotional,
    })
}
