//! Agent-class taxonomy: action capabilities, volume and maneuver
//! multipliers, and per-class behavioral flags.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Every agent class an actor (or a Rando) can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentClass {
    Human,
    Organization,
    GeneralBot,
    SocialInfluenceBot,
    ChaosBot,
    AmplifierBot,
    RepeaterBot,
    BridgingBot,
    SynchronizedBot,
    AnnouncerBot,
    Cyborg,
    InformationCorrectionBot,
    ContentGenerationBot,
    EngagementGenerationBot,
    SelfDeclaredBot,
    GenreSpecificBot,
    ConversationalBot,
    NewsBot,
    Dredger,
}

impl AgentClass {
    pub const ALL: [AgentClass; 19] = [
        AgentClass::Human,
        AgentClass::Organization,
        AgentClass::GeneralBot,
        AgentClass::SocialInfluenceBot,
        AgentClass::ChaosBot,
        AgentClass::AmplifierBot,
        AgentClass::RepeaterBot,
        AgentClass::BridgingBot,
        AgentClass::SynchronizedBot,
        AgentClass::AnnouncerBot,
        AgentClass::Cyborg,
        AgentClass::InformationCorrectionBot,
        AgentClass::ContentGenerationBot,
        AgentClass::EngagementGenerationBot,
        AgentClass::SelfDeclaredBot,
        AgentClass::GenreSpecificBot,
        AgentClass::ConversationalBot,
        AgentClass::NewsBot,
        AgentClass::Dredger,
    ];

    /// Bot classes a Rando may take when it is spawned as a bot.
    pub const RANDO_BOT_CLASSES: [AgentClass; 8] = [
        AgentClass::AmplifierBot,
        AgentClass::ChaosBot,
        AgentClass::SocialInfluenceBot,
        AgentClass::Cyborg,
        AgentClass::SynchronizedBot,
        AgentClass::AnnouncerBot,
        AgentClass::GenreSpecificBot,
        AgentClass::EngagementGenerationBot,
    ];

    /// Scenario-file spelling of the class.
    pub fn as_str(self) -> &'static str {
        match self {
            AgentClass::Human => "human",
            AgentClass::Organization => "organization",
            AgentClass::GeneralBot => "general_bot",
            AgentClass::SocialInfluenceBot => "social_influence_bot",
            AgentClass::ChaosBot => "chaos_bot",
            AgentClass::AmplifierBot => "amplifier_bot",
            AgentClass::RepeaterBot => "repeater_bot",
            AgentClass::BridgingBot => "bridging_bot",
            AgentClass::SynchronizedBot => "synchronized_bot",
            AgentClass::AnnouncerBot => "announcer_bot",
            AgentClass::Cyborg => "cyborg",
            AgentClass::InformationCorrectionBot => "information_correction_bot",
            AgentClass::ContentGenerationBot => "content_generation_bot",
            AgentClass::EngagementGenerationBot => "engagement_generation_bot",
            AgentClass::SelfDeclaredBot => "self_declared_bot",
            AgentClass::GenreSpecificBot => "genre_specific_bot",
            AgentClass::ConversationalBot => "conversational_bot",
            AgentClass::NewsBot => "news_bot",
            AgentClass::Dredger => "dredger",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            AgentClass::Human => "Human",
            AgentClass::Organization => "Organization",
            AgentClass::GeneralBot => "General Bot",
            AgentClass::SocialInfluenceBot => "Social Influence Bot",
            AgentClass::ChaosBot => "Chaos Bot",
            AgentClass::AmplifierBot => "Amplifier Bot",
            AgentClass::RepeaterBot => "Repeater Bot",
            AgentClass::BridgingBot => "Bridging Bot",
            AgentClass::SynchronizedBot => "Synchronized Bot",
            AgentClass::AnnouncerBot => "Announcer Bot",
            AgentClass::Cyborg => "Cyborg",
            AgentClass::InformationCorrectionBot => "Information Correction Bot",
            AgentClass::ContentGenerationBot => "Content Generation Bot",
            AgentClass::EngagementGenerationBot => "Engagement Generation Bot",
            AgentClass::SelfDeclaredBot => "Self-Declared Bot",
            AgentClass::GenreSpecificBot => "Genre-Specific Bot",
            AgentClass::ConversationalBot => "Conversational Bot",
            AgentClass::NewsBot => "News Bot",
            AgentClass::Dredger => "Dredger",
        }
    }

    /// Broad agent type the class belongs to.
    pub fn agent_type(self) -> AgentType {
        match self {
            AgentClass::Human | AgentClass::Organization => AgentType::Human,
            AgentClass::Dredger => AgentType::Dredger,
            _ => AgentType::Bot,
        }
    }

    /// True for the bot agent type. Dredgers are decided by their operator.
    pub fn is_bot_class(self) -> bool {
        self.agent_type() == AgentType::Bot
    }

    pub fn is_periodic(self) -> bool {
        matches!(self, AgentClass::AnnouncerBot | AgentClass::Cyborg)
    }

    /// Persona text handed to the text generator.
    pub fn persona(self) -> &'static str {
        match self {
            AgentClass::Human => "An ordinary person posting from a personal account. Casual, personal voice.",
            AgentClass::Organization => {
                "The official account of a company, agency or publication, run by staff. Formal voice."
            }
            AgentClass::GeneralBot => "A generic automated account that posts on the topics of its community.",
            AgentClass::SocialInfluenceBot => {
                "An automated account built to move public opinion toward its community's stance."
            }
            AgentClass::ChaosBot => "An automated account that stirs confusion and pulls threads off topic.",
            AgentClass::AmplifierBot => "An automated account that pushes other posts further by reposting them.",
            AgentClass::RepeaterBot => "An automated account that echoes the same message with little change.",
            AgentClass::BridgingBot => {
                "An automated account that tags people from different communities to pull them into one conversation."
            }
            AgentClass::SynchronizedBot => "An automated account that reposts other bots in coordinated bursts.",
            AgentClass::AnnouncerBot => "An automated account that posts notices and alerts on a fixed schedule.",
            AgentClass::Cyborg => {
                "A prominent account, partly automated and partly run by a person, used for strategic messaging."
            }
            AgentClass::InformationCorrectionBot => {
                "An automated account that answers misleading claims with fact-checks and links to sources."
            }
            AgentClass::ContentGenerationBot => "An automated account that writes original posts.",
            AgentClass::EngagementGenerationBot => {
                "An automated account that chases replies and likes with emotionally charged wording."
            }
            AgentClass::SelfDeclaredBot => "An automated account that openly says it is a bot.",
            AgentClass::GenreSpecificBot => "An automated account that only ever posts about one topic.",
            AgentClass::ConversationalBot => "An automated account that talks with people through replies and quotes.",
            AgentClass::NewsBot => "An automated account that posts headlines and links to news articles.",
            AgentClass::Dredger => {
                "An account that hijacks trending phrases to push links to unreliable websites up search rankings."
            }
        }
    }
}

impl fmt::Display for AgentClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("unknown agent class `{0}`")]
pub struct UnknownClass(pub String);

impl FromStr for AgentClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AgentClass::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownClass(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentType {
    Human,
    Bot,
    Dredger,
}

/// Who runs an account whose class does not fix it (Dredgers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    #[default]
    Human,
    Bot,
}

/// Which half of its alternating schedule a Cyborg is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyborgPhase {
    Human,
    Bot,
}

impl CyborgPhase {
    pub fn flipped(self) -> Self {
        match self {
            CyborgPhase::Human => CyborgPhase::Bot,
            CyborgPhase::Bot => CyborgPhase::Human,
        }
    }
}

/// Which interaction kinds a class may perform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapabilityRow {
    pub can_tweet: bool,
    pub can_retweet: bool,
    pub can_quote_reply: bool,
}

impl CapabilityRow {
    const fn new(can_tweet: bool, can_retweet: bool, can_quote_reply: bool) -> Self {
        CapabilityRow {
            can_tweet,
            can_retweet,
            can_quote_reply,
        }
    }

    /// True if any kind needing a target post is permitted.
    pub fn can_interact(&self) -> bool {
        self.can_retweet || self.can_quote_reply
    }
}

pub fn capabilities(class: AgentClass) -> CapabilityRow {
    use AgentClass::*;
    const Y: bool = true;
    const N: bool = false;
    match class {
        Human | Organization => CapabilityRow::new(Y, Y, Y),
        GeneralBot => CapabilityRow::new(Y, Y, Y),
        SocialInfluenceBot => CapabilityRow::new(Y, Y, Y),
        ChaosBot => CapabilityRow::new(Y, Y, Y),
        AmplifierBot => CapabilityRow::new(N, Y, N),
        RepeaterBot => CapabilityRow::new(Y, N, N),
        BridgingBot => CapabilityRow::new(Y, Y, Y),
        SynchronizedBot => CapabilityRow::new(Y, Y, Y),
        AnnouncerBot => CapabilityRow::new(Y, Y, Y),
        Cyborg => CapabilityRow::new(Y, Y, Y),
        InformationCorrectionBot => CapabilityRow::new(Y, N, N),
        ContentGenerationBot => CapabilityRow::new(Y, N, N),
        EngagementGenerationBot => CapabilityRow::new(Y, N, N),
        SelfDeclaredBot => CapabilityRow::new(Y, Y, Y),
        GenreSpecificBot => CapabilityRow::new(Y, Y, Y),
        ConversationalBot => CapabilityRow::new(Y, N, Y),
        NewsBot => CapabilityRow::new(Y, Y, N),
        Dredger => CapabilityRow::new(Y, Y, Y),
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BehaviorError {
    #[error("a cyborg phase was supplied for non-cyborg class `{0}`")]
    PhaseForNonCyborg(AgentClass),
    #[error("cyborg posting volume needs a phase")]
    MissingPhase,
}

/// Posting-volume multiplier relative to a human.
///
/// Dredgers default to the human rate here; use [`BehaviorProfile`] when the
/// operator is known.
pub fn post_multiplier(class: AgentClass, phase: Option<CyborgPhase>) -> Result<u32, BehaviorError> {
    match (class, phase) {
        (AgentClass::Cyborg, Some(CyborgPhase::Human)) => Ok(1),
        (AgentClass::Cyborg, Some(CyborgPhase::Bot)) => Ok(2),
        (AgentClass::Cyborg, None) => Err(BehaviorError::MissingPhase),
        (c, Some(_)) => Err(BehaviorError::PhaseForNonCyborg(c)),
        (c, None) if c.is_bot_class() => Ok(2),
        (_, None) => Ok(1),
    }
}

/// BEND-maneuver probability multiplier relative to a human.
pub fn bend_multiplier(class: AgentClass) -> u32 {
    match class {
        AgentClass::SocialInfluenceBot | AgentClass::ChaosBot => 4,
        c if c.is_bot_class() => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BehaviorFlag {
    Erratic,
    RepeatsOwnTweets,
    TagsMultipleCommunities,
    OnlyInteractsWithBots,
    Periodic,
    AlternatesCyborgPhase,
    UsesFactcheckUrls,
    UsesNewsUrls,
    UsesDredgeWords,
    HighEmotionalCues,
    SingleTopic,
}

fn class_flags(class: AgentClass) -> &'static [BehaviorFlag] {
    use BehaviorFlag::*;
    match class {
        AgentClass::ChaosBot => &[Erratic],
        AgentClass::RepeaterBot => &[RepeatsOwnTweets],
        AgentClass::BridgingBot => &[TagsMultipleCommunities],
        AgentClass::SynchronizedBot => &[OnlyInteractsWithBots],
        AgentClass::AnnouncerBot => &[Periodic],
        AgentClass::Cyborg => &[Periodic, AlternatesCyborgPhase],
        AgentClass::InformationCorrectionBot => &[UsesFactcheckUrls],
        AgentClass::NewsBot => &[UsesNewsUrls],
        AgentClass::Dredger => &[UsesDredgeWords],
        AgentClass::EngagementGenerationBot => &[HighEmotionalCues],
        AgentClass::GenreSpecificBot => &[SingleTopic],
        _ => &[],
    }
}

/// Everything the engine needs to know about how one agent behaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BehaviorProfile {
    pub class: AgentClass,
    pub operator: Operator,
    pub capabilities: CapabilityRow,
    flags: &'static [BehaviorFlag],
}

impl BehaviorProfile {
    pub fn new(class: AgentClass, operator: Operator) -> Self {
        BehaviorProfile {
            class,
            operator,
            capabilities: capabilities(class),
            flags: class_flags(class),
        }
    }

    pub fn of(class: AgentClass) -> Self {
        Self::new(class, Operator::Human)
    }

    pub fn flags(&self) -> &'static [BehaviorFlag] {
        self.flags
    }

    pub fn has(&self, flag: BehaviorFlag) -> bool {
        self.flags.contains(&flag)
    }

    /// Bot accounts, including bot-operated Dredgers.
    pub fn is_bot(&self) -> bool {
        match self.class {
            AgentClass::Dredger => self.operator == Operator::Bot,
            c => c.is_bot_class(),
        }
    }

    pub fn post_multiplier(&self, phase: Option<CyborgPhase>) -> Result<u32, BehaviorError> {
        match self.class {
            AgentClass::Dredger if phase.is_some() => Err(BehaviorError::PhaseForNonCyborg(AgentClass::Dredger)),
            AgentClass::Dredger => Ok(if self.operator == Operator::Bot { 2 } else { 1 }),
            c => post_multiplier(c, phase),
        }
    }

    /// Maneuver multiplier with the Cyborg phase and Dredger operator applied.
    /// A Cyborg in its human phase behaves like a human.
    pub fn bend_multiplier(&self, phase: Option<CyborgPhase>) -> u32 {
        match (self.class, phase) {
            (AgentClass::Cyborg, Some(CyborgPhase::Human)) => 1,
            (AgentClass::Dredger, _) => {
                if self.operator == Operator::Bot {
                    2
                } else {
                    1
                }
            }
            (c, _) => bend_multiplier(c),
        }
    }
}
