//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Exits non-zero if any criterion fails.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use socsim::activation::select_active_agents;
use socsim::behavior::{capabilities, AgentClass, BehaviorProfile};
use socsim::cli::cli_main;
use socsim::config::{ActivationParams, AttachmentMix, RunConfig};
use socsim::content::prompt::{assemble_prompt, PromptRequest, Speaker};
use socsim::content::rando::draw_rando;
use socsim::content::{Author, StubBackend};
use socsim::emit::{build_comm_network, network_from_records, read_ndjson, CommEdge, Directory};
use socsim::engine::{Engine, RunOutput};
use socsim::interaction::{sample_attachment, AttachmentKind, PostKind};
use socsim::parallel::Execution;
use socsim::scenario::{parse_scenario, parse_scenario_str, RandoSettings, Role, ScenarioSpec};
use socsim::validate::validate;

const N: usize = 100_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn scenario_path() -> PathBuf {
    manifest_dir().join("../../scenarios/aurasight.scenario.json")
}

fn load_example() -> ScenarioSpec {
    parse_scenario(scenario_path()).expect("bundled scenario parses")
}

fn example_run(spec: &ScenarioSpec, exec: Execution) -> RunOutput {
    let cfg = RunConfig::default();
    Engine::new(spec, &cfg, &StubBackend, 42)
        .with_execution(exec)
        .run()
        .expect("example run completes")
}

// Capability matrix, transcribed row by row: tweet, retweet, quote/reply.
const CAPABILITY_TABLE: &str = "\
Human Y Y Y
General Bot Y Y Y
Social Influence Bot Y Y Y
Chaos Bot Y Y Y
Amplifier Bot N Y N
Repeater Bot Y N N
Bridging Bot Y Y Y
Synchronized Bot Y Y Y
Announcer Bot Y Y Y
Cyborg Y Y Y
Information Correction Bot Y N N
Content Generation Bot Y N N
Engagement Generation Bot Y N N
Self-Declared Bot Y Y Y
Genre Specific Bot Y Y Y
Conversational Bot Y N Y
News Bot Y Y N
Dredger Y Y Y";

fn class_for_row(name: &str) -> AgentClass {
    use AgentClass::*;
    match name {
        "Human" => Human,
        "General Bot" => GeneralBot,
        "Social Influence Bot" => SocialInfluenceBot,
        "Chaos Bot" => ChaosBot,
        "Amplifier Bot" => AmplifierBot,
        "Repeater Bot" => RepeaterBot,
        "Bridging Bot" => BridgingBot,
        "Synchronized Bot" => SynchronizedBot,
        "Announcer Bot" => AnnouncerBot,
        "Cyborg" => Cyborg,
        "Information Correction Bot" => InformationCorrectionBot,
        "Content Generation Bot" => ContentGenerationBot,
        "Engagement Generation Bot" => EngagementGenerationBot,
        "Self-Declared Bot" => SelfDeclaredBot,
        "Genre Specific Bot" => GenreSpecificBot,
        "Conversational Bot" => ConversationalBot,
        "News Bot" => NewsBot,
        "Dredger" => Dredger,
        other => panic!("unknown row {other}"),
    }
}

fn c1_capabilities() -> Outcome {
    let mut checked = 0;
    let mut wrong = Vec::new();
    for line in CAPABILITY_TABLE.lines() {
        let cells: Vec<&str> = line.rsplitn(4, ' ').collect();
        let (qr, rt, tw, name) = (cells[0] == "Y", cells[1] == "Y", cells[2] == "Y", cells[3]);
        let row = capabilities(class_for_row(name));
        for (label, want, got) in [
            ("tweet", tw, row.can_tweet),
            ("retweet", rt, row.can_retweet),
            ("quote/reply", qr, row.can_quote_reply),
        ] {
            checked += 1;
            if want != got {
                wrong.push(format!("{name}/{label}"));
            }
        }
    }
    // Organization shares the human row.
    let org_ok = capabilities(AgentClass::Organization) == capabilities(AgentClass::Human);
    outcome(
        checked == 54 && wrong.is_empty() && org_ok,
        format!("{checked} cells checked, mismatches {wrong:?}, organization row shared {org_ok}"),
    )
}

fn c2_attachment() -> Outcome {
    let mix = AttachmentMix::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut counts = [0usize; 3];
    for _ in 0..N {
        let i = match sample_attachment(&mix, &mut rng) {
            AttachmentKind::Preferential => 0,
            AttachmentKind::FollowTheLeader => 1,
            AttachmentKind::Random => 2,
        };
        counts[i] += 1;
    }
    let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / N as f64).collect();
    let want = [0.60, 0.30, 0.10];
    let pass = freq.iter().zip(want).all(|(f, w)| (f - w).abs() <= 0.01);
    outcome(pass, format!("frequencies {freq:.4?} vs {want:?} (tol 0.01)"))
}

fn c3_bot_volume() -> Outcome {
    // 50 humans and 50 general bots with identical windows and ranges, for
    // 2000 always-active timesteps, each standing in for one agent-day: 1e5 per class.
    let mut actors = Vec::new();
    for i in 0..50 {
        for class in ["human", "general_bot"] {
            actors.push(format!(
                r#"{{"id": "{class}{i}", "display_name": "x", "screen_name": "{class}{i}",
                    "agent_type": "{class}", "active_hours": [[0, 23]], "posts_min": 1, "posts_max": 4}}"#
            ));
        }
    }
    let spec = parse_scenario_str(&format!(
        r#"{{"name": "volume", "start_time": "2030-03-14T00:00:00+00:00", "num_timesteps": 2000,
            "actors": [{}]}}"#,
        actors.join(",")
    ))
    .expect("volume scenario parses");
    let params = ActivationParams {
        p_peak: 1.0,
        p_base: 1.0,
        taper_width: 1.0,
    };
    let (mut human, mut bot) = (0u64, 0u64);
    for t in 0..spec.num_timesteps {
        for d in select_active_agents(&spec, t, &params, 3, Execution::default()).expect("activation") {
            if d.actor_id.starts_with("human") {
                human += d.num_posts as u64;
            } else {
                bot += d.num_posts as u64;
            }
        }
    }
    let ratio = bot as f64 / human as f64;
    outcome(
        (ratio - 2.0).abs() <= 0.1,
        format!("bot/human posts {ratio:.4} (target 2.0 +/- 0.1)"),
    )
}

fn bend_rate(class: AgentClass, spec: &ScenarioSpec) -> f64 {
    let narrative = &spec.narratives[0];
    let tone: Vec<String> = Vec::new();
    let req = PromptRequest {
        speaker: Speaker {
            name: "speaker",
            profile: BehaviorProfile::of(class),
            tone: &tone,
            phase: None,
            description: None,
        },
        kind: PostKind::Tweet,
        narrative,
        target: None,
        mentions: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(4 + class as u64);
    let hits = (0..N)
        .filter(|_| {
            let b = assemble_prompt(&req, "sys", &[], &spec.lexicons, 0.15, &mut rng).expect("prompt");
            !b.bend_directives.is_empty()
        })
        .count();
    hits as f64 / N as f64
}

fn c4_bend() -> Outcome {
    let spec = load_example();
    let human = bend_rate(AgentClass::Human, &spec);
    let bot = bend_rate(AgentClass::GeneralBot, &spec);
    let si = bend_rate(AgentClass::SocialInfluenceBot, &spec);
    let (r_bot, r_si) = (bot / human, si / human);
    let pass = (r_bot / 2.0 - 1.0).abs() <= 0.10 && (r_si / 4.0 - 1.0).abs() <= 0.10;
    outcome(
        pass,
        format!("rates human {human:.4} bot {bot:.4} social-influence {si:.4}; ratios {r_bot:.3} and {r_si:.3}"),
    )
}

fn c5_randos() -> Outcome {
    let settings = RandoSettings::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut loc: HashMap<String, usize> = HashMap::new();
    let mut ages = [0usize; 20];
    let mut bots = 0usize;
    let mut bad_ages = 0usize;
    let allowed: HashSet<AgentClass> = [
        AgentClass::AmplifierBot,
        AgentClass::ChaosBot,
        AgentClass::SocialInfluenceBot,
        AgentClass::Cyborg,
        AgentClass::SynchronizedBot,
        AgentClass::AnnouncerBot,
        AgentClass::GenreSpecificBot,
        AgentClass::EngagementGenerationBot,
    ]
    .into_iter()
    .collect();
    let mut bad_class = 0usize;
    for n in 0..N {
        let r = draw_rando(&settings, n as u32, &mut rng);
        *loc.entry(r.location.clone()).or_default() += 1;
        if (21..=40).contains(&r.age) {
            ages[(r.age - 21) as usize] += 1;
        } else {
            bad_ages += 1;
        }
        if let Some(c) = r.class {
            bots += 1;
            if !allowed.contains(&c) {
                bad_class += 1;
            }
        }
    }
    let want = [
        ("Ethal", 0.35),
        ("Odria", 0.35),
        ("Nareth", 0.15),
        ("Federation of Severni", 0.15),
    ];
    let loc_ok = want
        .iter()
        .all(|(name, p)| (loc.get(*name).copied().unwrap_or(0) as f64 / N as f64 - p).abs() <= 0.01);
    let expected = N as f64 / 20.0;
    let chi2: f64 = ages.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p_age = 1.0 - ChiSquared::new(19.0).expect("df").cdf(chi2);
    let bot_share = bots as f64 / N as f64;
    let pass = loc_ok && bad_ages == 0 && p_age > 0.01 && (bot_share - 0.5).abs() <= 0.01 && bad_class == 0;
    let mut locs: Vec<_> = loc.iter().map(|(k, v)| (k.clone(), *v as f64 / N as f64)).collect();
    locs.sort_by(|a, b| a.0.cmp(&b.0));
    outcome(
        pass,
        format!(
            "locations {locs:.4?}; age chi2 p {p_age:.3}; bot share {bot_share:.4}; disallowed classes {bad_class}"
        ),
    )
}

fn hosts(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|tok| tok.split_once("://"))
        .map(|(_, rest)| {
            rest.split(['/', '?', '#'])
                .next()
                .unwrap_or("")
                .trim_end_matches(|c: char| !c.is_ascii_alphanumeric())
                .to_ascii_lowercase()
        })
        .collect()
}

fn host_in(host: &str, domains: &[String]) -> bool {
    let host = host.strip_prefix("www.").unwrap_or(host);
    domains.iter().any(|d| {
        let d = d.to_ascii_lowercase();
        host == d || host.ends_with(&format!(".{d}"))
    })
}

fn c6_exclusions(spec: &ScenarioSpec, run: &RunOutput) -> Outcome {
    use AgentClass::*;
    let by_id: HashMap<_, _> = run.posts.iter().map(|p| (p.id, p)).collect();
    let no_retweet = [
        RepeaterBot,
        ContentGenerationBot,
        EngagementGenerationBot,
        InformationCorrectionBot,
        ConversationalBot,
    ];
    let lex = &spec.lexicons;
    let (mut amp_orig, mut bad_rt, mut sync_bad, mut dredge_bad, mut news_bad) = (0, 0, 0, 0, 0);
    let (mut dredge_n, mut news_n, mut sync_n) = (0, 0, 0);
    for p in &run.posts {
        let class = p.author_class;
        if class == AmplifierBot && p.kind == PostKind::Tweet && p.repeat_of.is_none() {
            amp_orig += 1;
        }
        if no_retweet.contains(&class) && p.kind == PostKind::Retweet {
            bad_rt += 1;
        }
        if class == SynchronizedBot && matches!(p.kind, PostKind::Retweet | PostKind::Quote) {
            sync_n += 1;
            let target_bot = p.target.and_then(|t| by_id.get(&t)).is_some_and(|t| t.author_is_bot);
            if !target_bot {
                sync_bad += 1;
            }
        }
        if p.kind == PostKind::Retweet {
            continue;
        }
        if class == Dredger {
            dredge_n += 1;
            let lower = p.text.to_lowercase();
            let words = lex
                .dredge_words
                .iter()
                .map(|w| w.to_lowercase())
                .collect::<HashSet<_>>()
                .into_iter()
                .filter(|w| lower.contains(w.as_str()))
                .count();
            let urls = hosts(&p.text)
                .into_iter()
                .filter(|h| host_in(h, &lex.unreliable_domains))
                .collect::<HashSet<_>>()
                .len();
            if words < 2 || urls < 2 {
                dredge_bad += 1;
            }
        }
        if class == NewsBot {
            news_n += 1;
            if !hosts(&p.text).iter().any(|h| host_in(h, &lex.news_domains)) {
                news_bad += 1;
            }
        }
    }
    let pass = amp_orig == 0
        && bad_rt == 0
        && sync_bad == 0
        && dredge_bad == 0
        && news_bad == 0
        && dredge_n > 0
        && news_n > 0
        && sync_n > 0;
    outcome(
        pass,
        format!(
            "amplifier originals {amp_orig}; forbidden retweets {bad_rt}; sync non-bot targets {sync_bad}/{sync_n}; \
             dredger failures {dredge_bad}/{dredge_n}; news failures {news_bad}/{news_n}"
        ),
    )
}

fn simulate_into(dir: &Path, extra: &[&str]) -> i32 {
    let mut argv = vec![
        "socsim".to_string(),
        "simulate".into(),
        scenario_path().display().to_string(),
        "--seed".into(),
        "42".into(),
        "--backend".into(),
        "stub".into(),
        "--out".into(),
        dir.display().to_string(),
    ];
    argv.extend(extra.iter().map(|s| s.to_string()));
    cli_main(argv)
}

fn c7_determinism() -> Outcome {
    let tmp = tempfile::tempdir().expect("tempdir");
    let dirs = [tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("seq")];
    let codes = [
        simulate_into(&dirs[0], &[]),
        simulate_into(&dirs[1], &[]),
        simulate_into(&dirs[2], &["--sequential"]),
    ];
    if codes.iter().any(|&c| c != 0) {
        return outcome(false, format!("simulate exit codes {codes:?}"));
    }
    let mut diffs = Vec::new();
    for f in ["posts.ndjson", "edges.csv", "run_manifest.json", "run_log.jsonl"] {
        let a = std::fs::read(dirs[0].join(f)).expect("output");
        for d in &dirs[1..] {
            if std::fs::read(d.join(f)).expect("output") != a {
                diffs.push(format!("{f} ({})", d.file_name().unwrap().to_string_lossy()));
            }
        }
    }
    outcome(
        diffs.is_empty(),
        format!("two parallel runs and one sequential run; differing files {diffs:?}"),
    )
}

fn c8_validator() -> Outcome {
    let dir = manifest_dir().join("tests/fixtures/validator");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("fixture dir")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".scenario.json"))
        .collect();
    names.sort();
    let mut bad = Vec::new();
    let mut rules = BTreeMap::<char, (bool, bool)>::new();
    for path in &names {
        let stem = path
            .file_name()
            .unwrap()
            .to_string_lossy()
            .replace(".scenario.json", "");
        let expected = std::fs::read_to_string(dir.join(format!("{stem}.expected.jsonl"))).expect("expected report");
        let spec = parse_scenario(path).expect("fixture parses");
        let got = validate(&spec).to_json_lines();
        if got != expected {
            bad.push(stem.clone());
        }
        let rule = stem.chars().next().unwrap();
        let e = rules.entry(rule).or_default();
        if stem.ends_with("_pos") {
            e.0 = !expected.is_empty();
        } else if stem.ends_with("_neg") {
            e.1 = expected.is_empty();
        }
    }
    let covered = ('a'..='h').all(|r| rules.get(&r) == Some(&(true, true)));
    outcome(
        names.len() == 16 && bad.is_empty() && covered,
        format!(
            "{} fixtures, mismatches {bad:?}, rules a-h covered both ways {covered}",
            names.len()
        ),
    )
}

fn in_degrees(edges: &[CommEdge]) -> (HashMap<String, u64>, Vec<usize>) {
    let mut indeg: HashMap<String, u64> = HashMap::new();
    let mut nbrs: HashMap<&str, HashSet<&str>> = HashMap::new();
    for e in edges {
        *indeg.entry(e.target.clone()).or_default() += e.weight;
        nbrs.entry(&e.source).or_default().insert(&e.target);
        nbrs.entry(&e.target).or_default().insert(&e.source);
    }
    let mut deg: Vec<usize> = nbrs.values().map(HashSet::len).collect();
    deg.sort_unstable();
    (indeg, deg)
}

fn c9_structure(spec: &ScenarioSpec, run: &RunOutput, elapsed: Duration) -> Outcome {
    let report = validate(spec);
    let groups: HashSet<&str> = spec.groups.iter().map(|g| g.id.as_str()).collect();
    let shape_ok = spec.actors.len() >= 150 && spec.num_timesteps == 72 && groups.len() == 18 && !report.has_errors();

    // Event timesteps against the same hour on days without an event.
    let acts = &run.stats.activations_per_timestep;
    let in_event = |t: u32| spec.events.iter().any(|e| e.window.contains(t));
    let (mut ev, mut base) = (Vec::new(), Vec::new());
    for t in 0..spec.num_timesteps {
        if in_event(t) {
            ev.push(acts[t as usize] as f64);
            let hour = spec.hour_of_day(t);
            for u in 0..spec.num_timesteps {
                if spec.hour_of_day(u) == hour && !in_event(u) {
                    base.push(acts[u as usize] as f64);
                }
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let (ev_mean, base_mean) = (mean(&ev), mean(&base));

    let dir = Directory::new(spec, &run.randos);
    let edges = build_comm_network(&run.posts, &dir).expect("network");
    let (indeg, deg) = in_degrees(&edges);
    let mut leaders = Vec::new();
    let mut full = Vec::new();
    for a in &spec.actors {
        let roles: Vec<_> = spec.groups.iter().filter_map(|g| g.role_of(&a.id)).collect();
        let d = indeg.get(&a.screen_name).copied().unwrap_or(0) as f64;
        if roles.contains(&Role::Leader) {
            leaders.push(d);
        } else if roles.contains(&Role::Full) {
            full.push(d);
        }
    }
    let (lead_mean, full_mean) = (mean(&leaders), mean(&full));
    let max = *deg.last().unwrap_or(&0) as f64;
    let median = if deg.is_empty() { 0.0 } else { deg[deg.len() / 2] as f64 };
    let authored_by_randos = run.posts.iter().any(|p| matches!(p.author, Author::Rando(_)));

    let pass = shape_ok
        && elapsed < Duration::from_secs(60)
        && ev_mean > base_mean
        && lead_mean > full_mean
        && max > 4.0 * median
        && authored_by_randos;
    outcome(
        pass,
        format!(
            "{} actors, {} groups, run {:.2}s; event mean activations {ev_mean:.1} vs {base_mean:.1}; \
             leader in-degree {lead_mean:.1} vs full {full_mean:.1}; max degree {max} vs median {median}",
            spec.actors.len(),
            groups.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c10_round_trips(spec: &ScenarioSpec) -> Outcome {
    let once = parse_scenario_str(&spec.to_canonical_json()).expect("reparse");
    let twice = parse_scenario_str(&once.to_canonical_json()).expect("reparse");
    let fixed = once == *spec && twice == once && once.to_canonical_json() == twice.to_canonical_json();

    let tmp = tempfile::tempdir().expect("tempdir");
    let out = tmp.path().join("run");
    if simulate_into(&out, &[]) != 0 {
        return outcome(false, "simulate failed");
    }
    let records = read_ndjson(&out.join("posts.ndjson")).expect("ndjson");
    let from_file = network_from_records(&records);
    let run = example_run(spec, Execution::default());
    let direct = build_comm_network(&run.posts, &Directory::new(spec, &run.randos)).expect("network");
    let csv_path = tmp.path().join("edges.csv");
    let code = cli_main([
        "socsim".to_string(),
        "export-network".into(),
        out.join("posts.ndjson").display().to_string(),
        "--out".into(),
        csv_path.display().to_string(),
    ]);
    let csv_same =
        code == 0 && std::fs::read(&csv_path).expect("csv") == std::fs::read(out.join("edges.csv")).expect("csv");
    outcome(
        fixed && from_file == direct && csv_same && records.len() == run.posts.len(),
        format!(
            "scenario fixed point {fixed}; {} edges direct, {} from NDJSON, equal {}; CSV identical {csv_same}",
            direct.len(),
            from_file.len(),
            from_file == direct
        ),
    )
}

fn main() {
    let mut all = true;
    let mut report = |n: u32, name: &str, bound: Duration, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed < bound;
        all &= pass;
        println!(
            "{} {n:>2} {name}: {} [{:.2}s, bound {}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            bound.as_secs()
        );
    };

    report(1, "capability matrix", Duration::from_secs(1), &mut c1_capabilities);
    report(2, "attachment mix", Duration::from_secs(5), &mut c2_attachment);
    report(3, "bot volume", Duration::from_secs(30), &mut c3_bot_volume);
    report(4, "bend multipliers", Duration::from_secs(10), &mut c4_bend);
    report(5, "rando demographics", Duration::from_secs(10), &mut c5_randos);

    let spec = load_example();
    let start = Instant::now();
    let run = example_run(&spec, Execution::default());
    let run_time = start.elapsed();

    report(6, "class exclusions", Duration::from_secs(60), &mut || {
        c6_exclusions(&spec, &run)
    });
    report(7, "determinism", Duration::from_secs(300), &mut c7_determinism);
    report(8, "validator corpus", Duration::from_secs(60), &mut c8_validator);
    report(9, "example scenario structure", Duration::from_secs(60), &mut || {
        c9_structure(&spec, &run, run_time)
    });
    report(10, "round trips", Duration::from_secs(300), &mut || {
        c10_round_trips(&spec)
    });

    if !all {
        std::process::exit(1);
    }
}
