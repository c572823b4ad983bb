//! Class-specific content requirements and post-length rules.

use serde::Serialize;

use crate::behavior::{AgentClass, BehaviorFlag, BehaviorProfile};
use crate::scenario::Lexicons;

pub const MAX_LEN: usize = 280;
/// Length a URL counts for, whatever its actual length.
pub const URL_LEN: usize = 23;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "code", rename_all = "snake_case")]
pub enum Violation {
    DredgeWords { found: usize, needed: usize },
    UnreliableUrls { found: usize, needed: usize },
    NewsUrl,
    FactcheckUrl,
    TooLong { length: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::DredgeWords { found, needed } => {
                write!(f, "{found} distinct dredge words, need {needed}")
            }
            Violation::UnreliableUrls { found, needed } => {
                write!(f, "{found} unreliable-domain urls, need {needed}")
            }
            Violation::NewsUrl => f.write_str("no news url"),
            Violation::FactcheckUrl => f.write_str("no fact-check url"),
            Violation::TooLong { length } => write!(f, "length {length} over {MAX_LEN}"),
        }
    }
}

fn trim_token(tok: &str) -> &str {
    tok.trim_end_matches(['.', ',', ';', ':', '!', '?', ')', '"', '\''])
}

fn is_url(tok: &str) -> bool {
    tok.starts_with("http://") || tok.starts_with("https://")
}

/// URLs in order of appearance.
pub fn extract_urls(text: &str) -> Vec<&str> {
    text.split_whitespace().filter(|t| is_url(t)).map(trim_token).collect()
}

/// Lower-cased host of an http(s) URL, without port or `www.`.
pub fn url_host(url: &str) -> Option<String> {
    let rest = url.strip_prefix("https://").or_else(|| url.strip_prefix("http://"))?;
    let authority = rest.split(['/', '?', '#']).next()?;
    let host = authority.rsplit('@').next()?.split(':').next()?;
    if host.is_empty() {
        return None;
    }
    let host = host.to_ascii_lowercase();
    Some(host.strip_prefix("www.").map(str::to_string).unwrap_or(host))
}

fn host_matches(url: &str, domains: &[String]) -> bool {
    url_host(url).is_some_and(|h| {
        domains.iter().any(|d| {
            let d = d.to_ascii_lowercase();
            h == d || h.ends_with(&format!(".{d}"))
        })
    })
}

/// `#tag` and `@name` entities: the word characters after the sigil.
fn sigil_words(text: &str, sigil: char) -> Vec<&str> {
    let mut out = Vec::new();
    for (i, c) in text.char_indices() {
        if c != sigil {
            continue;
        }
        let prev_ok = text[..i]
            .chars()
            .next_back()
            .is_none_or(|p| !p.is_alphanumeric() && p != '_');
        let rest = &text[i + c.len_utf8()..];
        let end = rest
            .char_indices()
            .find(|(_, ch)| !(ch.is_alphanumeric() || *ch == '_'))
            .map_or(rest.len(), |(j, _)| j);
        if prev_ok && end > 0 {
            out.push(&rest[..end]);
        }
    }
    out
}

pub fn extract_hashtags(text: &str) -> Vec<&str> {
    let urls_removed: Vec<&str> = text.split_whitespace().filter(|t| !is_url(t)).collect();
    let mut out = Vec::new();
    for tok in urls_removed {
        out.extend(sigil_words(tok, '#'));
    }
    out
}

pub fn extract_mentions(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    for tok in text.split_whitespace().filter(|t| !is_url(t)) {
        out.extend(sigil_words(tok, '@'));
    }
    out
}

/// Length in code points with every URL counted as [`URL_LEN`].
pub fn post_length(text: &str) -> usize {
    let raw = text.chars().count();
    let mut adjust: isize = 0;
    for tok in text.split_whitespace().filter(|t| is_url(t)) {
        adjust += URL_LEN as isize - tok.chars().count() as isize;
    }
    (raw as isize + adjust) as usize
}

fn distinct_words_present(text: &str, words: &[String]) -> usize {
    let lower = text.to_lowercase();
    let mut seen: Vec<String> = Vec::new();
    for w in words {
        let w = w.to_lowercase();
        if !w.is_empty() && lower.contains(&w) && !seen.contains(&w) {
            seen.push(w);
        }
    }
    seen.len()
}

pub fn enforce_constraints(profile: &BehaviorProfile, text: &str, lexicons: &Lexicons) -> Result<(), Vec<Violation>> {
    let mut v = Vec::new();
    let urls = extract_urls(text);
    if profile.has(BehaviorFlag::UsesDredgeWords) {
        let found = distinct_words_present(text, &lexicons.dredge_words);
        if found < 2 {
            v.push(Violation::DredgeWords { found, needed: 2 });
        }
        let found = urls
            .iter()
            .filter(|u| host_matches(u, &lexicons.unreliable_domains))
            .count();
        if found < 2 {
            v.push(Violation::UnreliableUrls { found, needed: 2 });
        }
    }
    if profile.has(BehaviorFlag::UsesNewsUrls) && !urls.iter().any(|u| host_matches(u, &lexicons.news_domains)) {
        v.push(Violation::NewsUrl);
    }
    if profile.has(BehaviorFlag::UsesFactcheckUrls)
        && !urls.iter().any(|u| host_matches(u, &lexicons.factcheck_domains))
    {
        v.push(Violation::FactcheckUrl);
    }
    let length = post_length(text);
    if length > MAX_LEN {
        v.push(Violation::TooLong { length });
    }
    if v.is_empty() {
        Ok(())
    } else {
        Err(v)
    }
}

/// Class check for callers that only have a class, such as test harnesses.
pub fn enforce_for_class(class: AgentClass, text: &str, lexicons: &Lexicons) -> Result<(), Vec<Violation>> {
    enforce_constraints(&BehaviorProfile::of(class), text, lexicons)
}

/// Cuts `text` at a word boundary so its [`post_length`] is at most `budget`.
pub fn truncate_to(text: &str, budget: usize) -> String {
    if post_length(text) <= budget {
        return text.to_string();
    }
    let mut out = String::new();
    for tok in text.split_whitespace() {
        let candidate = if out.is_empty() {
            tok.to_string()
        } else {
            format!("{out} {tok}")
        };
        if post_length(&candidate) > budget {
            break;
        }
        out = candidate;
    }
    if out.is_empty() {
        // A single over-long word: hard cut.
        out = text.chars().take(budget).collect();
    }
    out
}

/// Deterministic fix-up: keeps as much of the body as fits and appends every
/// required token the text is missing.
pub fn repair(text: &str, required: &[String]) -> String {
    let lower = text.to_lowercase();
    let missing: Vec<&str> = required
        .iter()
        .filter(|r| !lower.contains(&r.to_lowercase()))
        .map(String::as_str)
        .collect();
    let tail = missing.join(" ");
    let tail_len = if tail.is_empty() { 0 } else { post_length(&tail) + 1 };
    let body = truncate_to(text.trim(), MAX_LEN.saturating_sub(tail_len));
    match (body.is_empty(), tail.is_empty()) {
        (_, true) => body,
        (true, false) => truncate_to(&tail, MAX_LEN),
        (false, false) => format!("{body} {tail}"),
    }
}
