//! Output: Twitter-V1-shaped NDJSON, the communication network and the run
//! manifest.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::AgentClass;
use crate::content::rando::Rando;
use crate::content::{Author, Post};
use crate::engine::{RunOutput, RunStats};
use crate::interaction::{PostId, PostKind};
use crate::scenario::ScenarioSpec;

pub const CREATED_AT_FORMAT: &str = "%a %b %d %H:%M:%S %z %Y";
pub const EDGE_HEADER: &str = "source,target,weight,retweets,quotes,replies,mentions";

#[derive(Debug, Error)]
pub enum EmitError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("corrupt run: post {post} references unknown {what} {id}")]
    Corrupt {
        post: String,
        what: &'static str,
        id: String,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> EmitError + '_ {
    move |source| EmitError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserV1 {
    pub id_str: String,
    pub name: String,
    pub screen_name: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HashtagV1 {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlV1 {
    pub expanded_url: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MentionV1 {
    pub screen_name: String,
    pub id_str: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitiesV1 {
    pub hashtags: Vec<HashtagV1>,
    pub urls: Vec<UrlV1>,
    pub user_mentions: Vec<MentionV1>,
}

/// The subset of a V1 status object this tool writes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetRecordV1 {
    pub id_str: String,
    pub created_at: String,
    pub full_text: String,
    pub user: UserV1,
    pub in_reply_to_status_id_str: Option<String>,
    pub in_reply_to_user_id_str: Option<String>,
    pub in_reply_to_screen_name: Option<String>,
    pub is_quote_status: bool,
    pub quoted_status_id_str: Option<String>,
    pub retweeted_status: Option<Box<TweetRecordV1>>,
    pub quoted_status: Option<Box<TweetRecordV1>>,
    pub entities: EntitiesV1,
}

/// Public identity of every author in a run.
pub struct Directory<'a> {
    spec: &'a ScenarioSpec,
    randos: &'a [Rando],
    screen: HashMap<&'a str, Author>,
}

pub fn actor_user_id(index: usize) -> u64 {
    1_000_000 + index as u64
}

pub fn rando_user_id(number: u32) -> u64 {
    9_000_000 + number as u64
}

impl<'a> Directory<'a> {
    pub fn new(spec: &'a ScenarioSpec, randos: &'a [Rando]) -> Self {
        let mut screen = HashMap::new();
        for (i, a) in spec.actors.iter().enumerate() {
            screen.insert(a.screen_name.as_str(), Author::Actor(i));
        }
        for r in randos {
            screen.entry(r.screen_name.as_str()).or_insert(Author::Rando(r.number));
        }
        Directory { spec, randos, screen }
    }

    pub fn user(&self, author: Author) -> UserV1 {
        match author {
            Author::Actor(i) => {
                let a = &self.spec.actors[i];
                UserV1 {
                    id_str: actor_user_id(i).to_string(),
                    name: a.display_name.clone(),
                    screen_name: a.screen_name.clone(),
                    description: a.description.clone().unwrap_or_default(),
                }
            }
            Author::Rando(n) => {
                let r = &self.randos[n as usize];
                UserV1 {
                    id_str: rando_user_id(n).to_string(),
                    name: r.name.clone(),
                    screen_name: r.screen_name.clone(),
                    description: format!("{}, {}", r.age, r.location),
                }
            }
        }
    }

    pub fn by_screen_name(&self, s: &str) -> Option<Author> {
        self.screen.get(s).copied()
    }
}

fn entities(post: &Post, dir: &Directory<'_>) -> EntitiesV1 {
    EntitiesV1 {
        hashtags: post.hashtags.iter().map(|h| HashtagV1 { text: h.clone() }).collect(),
        urls: post
            .urls
            .iter()
            .map(|u| UrlV1 {
                expanded_url: u.clone(),
            })
            .collect(),
        user_mentions: post
            .mentions
            .iter()
            .filter_map(|m| {
                let a = dir.by_screen_name(m)?;
                let u = dir.user(a);
                Some(MentionV1 {
                    screen_name: u.screen_name,
                    id_str: u.id_str,
                })
            })
            .collect(),
    }
}

/// Lookup from post id to post.
pub struct PostTable<'p> {
    by_id: HashMap<PostId, &'p Post>,
}

impl<'p> PostTable<'p> {
    pub fn new(posts: &'p [Post]) -> Self {
        PostTable {
            by_id: posts.iter().map(|p| (p.id, p)).collect(),
        }
    }

    fn target_of(&self, p: &Post) -> Result<Option<&'p Post>, EmitError> {
        match p.target {
            None => Ok(None),
            Some(id) => self
                .by_id
                .get(&id)
                .copied()
                .map(Some)
                .ok_or_else(|| EmitError::Corrupt {
                    post: p.id.to_string(),
                    what: "target post",
                    id: id.to_string(),
                }),
        }
    }
}

/// Record for one post. Referenced statuses nest one level: a nested
/// record carries ids but never its own nested status.
pub fn to_record(post: &Post, table: &PostTable<'_>, dir: &Directory<'_>) -> Result<TweetRecordV1, EmitError> {
    to_record_at(post, table, dir, true)
}

fn to_record_at(
    post: &Post,
    table: &PostTable<'_>,
    dir: &Directory<'_>,
    nest: bool,
) -> Result<TweetRecordV1, EmitError> {
    let user = dir.user(post.author);
    let target = table.target_of(post)?;
    let mut rec = TweetRecordV1 {
        id_str: post.id.to_string(),
        created_at: post.created_at.format(CREATED_AT_FORMAT).to_string(),
        full_text: post.text.clone(),
        user,
        in_reply_to_status_id_str: None,
        in_reply_to_user_id_str: None,
        in_reply_to_screen_name: None,
        is_quote_status: false,
        quoted_status_id_str: None,
        retweeted_status: None,
        quoted_status: None,
        entities: entities(post, dir),
    };
    let nested = |t: &Post| -> Result<Option<Box<TweetRecordV1>>, EmitError> {
        Ok(if nest {
            Some(Box::new(to_record_at(t, table, dir, false)?))
        } else {
            None
        })
    };
    match (post.kind, target) {
        (PostKind::Retweet, Some(t)) => {
            let tu = dir.user(t.author);
            rec.full_text = format!("RT @{}: {}", tu.screen_name, t.text);
            rec.entities.hashtags = t.hashtags.iter().map(|h| HashtagV1 { text: h.clone() }).collect();
            rec.entities.urls = t
                .urls
                .iter()
                .map(|u| UrlV1 {
                    expanded_url: u.clone(),
                })
                .collect();
            rec.entities.user_mentions.clear();
            rec.retweeted_status = nested(t)?;
        }
        (PostKind::Quote, Some(t)) => {
            rec.is_quote_status = true;
            rec.quoted_status_id_str = Some(t.id.to_string());
            rec.quoted_status = nested(t)?;
        }
        (PostKind::Reply, Some(t)) => {
            let tu = dir.user(t.author);
            rec.in_reply_to_status_id_str = Some(t.id.to_string());
            rec.in_reply_to_user_id_str = Some(tu.id_str);
            rec.in_reply_to_screen_name = Some(tu.screen_name);
        }
        (PostKind::Tweet, None) => {}
        (_, _) => {
            return Err(EmitError::Corrupt {
                post: post.id.to_string(),
                what: "shape for kind",
                id: format!("{:?}", post.kind),
            })
        }
    }
    Ok(rec)
}

pub fn write_ndjson<W: Write>(posts: &[Post], dir: &Directory<'_>, mut w: W) -> Result<(), EmitError> {
    let table = PostTable::new(posts);
    let path = PathBuf::from("<ndjson>");
    for p in posts {
        let rec = to_record(p, &table, dir)?;
        serde_json::to_writer(&mut w, &rec).map_err(|e| io_err(&path)(e.into()))?;
        w.write_all(b"\n").map_err(io_err(&path))?;
    }
    Ok(())
}

pub fn read_ndjson(path: &Path) -> Result<Vec<TweetRecordV1>, EmitError> {
    let f = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EmitError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CommEdge {
    pub source: String,
    pub target: String,
    pub weight: u64,
    pub retweets: u64,
    pub quotes: u64,
    pub replies: u64,
    pub mentions: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EdgeKind {
    Retweet,
    Quote,
    Reply,
    Mention,
}

#[derive(Default)]
struct EdgeAcc {
    edges: BTreeMap<(String, String), CommEdge>,
}

impl EdgeAcc {
    fn add(&mut self, source: &str, target: &str, kind: EdgeKind) {
        if source == target {
            return;
        }
        let e = self
            .edges
            .entry((source.to_string(), target.to_string()))
            .or_insert_with(|| CommEdge {
                source: source.to_string(),
                target: target.to_string(),
                ..CommEdge::default()
            });
        e.weight += 1;
        match kind {
            EdgeKind::Retweet => e.retweets += 1,
            EdgeKind::Quote => e.quotes += 1,
            EdgeKind::Reply => e.replies += 1,
            EdgeKind::Mention => e.mentions += 1,
        }
    }

    fn finish(self) -> Vec<CommEdge> {
        self.edges.into_values().collect()
    }
}

/// Directed author-to-author edges from the posts themselves, keyed by
/// screen name and sorted.
pub fn build_comm_network(posts: &[Post], dir: &Directory<'_>) -> Result<Vec<CommEdge>, EmitError> {
    let table = PostTable::new(posts);
    let mut acc = EdgeAcc::default();
    for p in posts {
        let src = dir.user(p.author).screen_name;
        if let Some(t) = table.target_of(p)? {
            let kind = match p.kind {
                PostKind::Retweet => EdgeKind::Retweet,
                PostKind::Quote => EdgeKind::Quote,
                PostKind::Reply => EdgeKind::Reply,
                PostKind::Tweet => continue,
            };
            acc.add(&src, &dir.user(t.author).screen_name, kind);
        }
        if p.kind != PostKind::Retweet {
            for m in &p.mentions {
                if let Some(a) = dir.by_screen_name(m) {
                    acc.add(&src, &dir.user(a).screen_name, EdgeKind::Mention);
                }
            }
        }
    }
    Ok(acc.finish())
}

/// The same network recomputed from emitted records alone.
pub fn network_from_records(records: &[TweetRecordV1]) -> Vec<CommEdge> {
    let mut acc = EdgeAcc::default();
    for r in records {
        let src = r.user.screen_name.as_str();
        if let Some(rt) = &r.retweeted_status {
            acc.add(src, &rt.user.screen_name, EdgeKind::Retweet);
        }
        if let Some(q) = &r.quoted_status {
            acc.add(src, &q.user.screen_name, EdgeKind::Quote);
        }
        if let Some(s) = &r.in_reply_to_screen_name {
            acc.add(src, s, EdgeKind::Reply);
        }
        for m in &r.entities.user_mentions {
            acc.add(src, &m.screen_name, EdgeKind::Mention);
        }
    }
    acc.finish()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn write_edges_csv<W: Write>(edges: &[CommEdge], mut w: W) -> io::Result<()> {
    writeln!(w, "{EDGE_HEADER}")?;
    for e in edges {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            csv_field(&e.source),
            csv_field(&e.target),
            e.weight,
            e.retweets,
            e.quotes,
            e.replies,
            e.mentions
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub seed: u64,
    pub backend: String,
    pub scenario_hash: String,
    pub config_hash: String,
    pub num_timesteps: u32,
    pub posts_total: u64,
    pub posts_by_class: BTreeMap<String, u64>,
    pub posts_by_kind: BTreeMap<String, u64>,
    pub edges: u64,
    pub randos_spawned: u64,
    pub dropped_actions: u64,
    pub activations_per_timestep: Vec<u32>,
}

impl RunManifest {
    pub fn new(
        spec: &ScenarioSpec,
        seed: u64,
        backend: &str,
        config_hash: String,
        posts: &[Post],
        stats: &RunStats,
        edges: usize,
    ) -> Self {
        let mut by_class: BTreeMap<String, u64> = AgentClass::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
        let mut by_kind: BTreeMap<String, u64> = ["tweet", "retweet", "quote", "reply"]
            .iter()
            .map(|k| (k.to_string(), 0))
            .collect();
        let (c, k) = crate::engine::count_posts(posts);
        by_class.extend(c);
        by_kind.extend(k);
        RunManifest {
            scenario: spec.name.clone(),
            seed,
            backend: backend.to_string(),
            scenario_hash: spec.content_hash(),
            config_hash,
            num_timesteps: spec.num_timesteps,
            posts_total: posts.len() as u64,
            posts_by_class: by_class,
            posts_by_kind: by_kind,
            edges: edges as u64,
            randos_spawned: stats.randos_spawned,
            dropped_actions: stats.dropped,
            activations_per_timestep: stats.activations_per_timestep.clone(),
        }
    }
}

pub const POSTS_FILE: &str = "posts.ndjson";
pub const EDGES_FILE: &str = "edges.csv";
pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const LOG_FILE: &str = "run_log.jsonl";

fn create(path: &Path) -> Result<BufWriter<File>, EmitError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

/// Writes the four output files into `out_dir`.
pub fn emit_run(
    spec: &ScenarioSpec,
    run: &RunOutput,
    seed: u64,
    backend: &str,
    config_hash: String,
    out_dir: &Path,
) -> Result<RunManifest, EmitError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let dir = Directory::new(spec, &run.randos);

    let path = out_dir.join(POSTS_FILE);
    let mut w = create(&path)?;
    write_ndjson(&run.posts, &dir, &mut w)?;
    w.flush().map_err(io_err(&path))?;

    let edges = build_comm_network(&run.posts, &dir)?;
    let path = out_dir.join(EDGES_FILE);
    let mut w = create(&path)?;
    write_edges_csv(&edges, &mut w).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;

    let manifest = RunManifest::new(spec, seed, backend, config_hash, &run.posts, &run.stats, edges.len());
    let path = out_dir.join(MANIFEST_FILE);
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|e| io_err(&path)(e.into()))?;
    w.write_all(b"\n").map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;

    let path = out_dir.join(LOG_FILE);
    let mut w = create(&path)?;
    run.log.write_jsonl(&mut w).map_err(io_err(&path))?;
    w.flush().map_err(io_err(&path))?;
    Ok(manifest)
}
