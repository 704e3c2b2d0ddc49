//! Corpus model, on-disk formats, raw-file parsing, preprocessing and the
//! synthetic corpus generator.
//!
//! A corpus directory holds:
//!
//! | file             | contents                                                     |
//! |------------------|--------------------------------------------------------------|
//! | `meta.json`      | format tag, user and post counts, provenance                 |
//! | `network.tsv`    | `follower<TAB>followee`, dense user ids                      |
//! | `posts.tsv`      | `post_id<TAB>creator<TAB>repost_count<TAB>reposters<TAB>text` |
//! | `splits.tsv`     | `post_id<TAB>train|val|test`                                 |
//! | `embeddings.txt` | `N D` header then one row per post id                        |
//! | `users.tsv`      | optional, `user_id<TAB>original_id` for prepared raw data    |
//! | `lexicon.json`   | optional, topic lexicon of synthetic corpora                 |
//!
//! In `posts.tsv` reposters are comma-separated ids (`-` when none) and text is
//! escaped with `\\`, `\t`, `\n`, `\r`.

mod embeddings;
mod preprocess;
mod raw;
mod split;
pub mod synthetic;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use embeddings::{read_embeddings, read_embeddings_with_dim, write_embeddings, EmbeddingTable};
pub use preprocess::{preprocess, PreparedCorpus, PreprocessParams};
pub use raw::{parse_raw, ActionKind, MalformedReport, ParseOptions, RawAction, RawCorpus, RawPaths};
pub use split::{split_posts, SplitRatios};

use crate::error::{Error, Result};
use crate::graph::{read_edge_list, write_edge_list, SocialGraph, UserId};

pub type PostId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: PostId,
    pub creator: UserId,
    pub text: String,
    /// Sorted, distinct, never contains the creator.
    pub reposters: Vec<UserId>,
}

impl Post {
    pub fn repost_count(&self) -> usize {
        self.reposters.len()
    }

    pub fn reposted_by(&self, user: UserId) -> bool {
        self.reposters.binary_search(&user).is_ok()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<PostId>,
    pub val: Vec<PostId>,
    pub test: Vec<PostId>,
}

impl Splits {
    pub fn get(&self, split: Split) -> &[PostId] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusMeta {
    pub format: String,
    pub version: u32,
    pub user_count: usize,
    pub post_count: usize,
    pub source: String,
}

const CORPUS_FORMAT: &str = "amplifier-corpus";
const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub graph: SocialGraph,
    /// Indexed by post id.
    pub posts: Vec<Post>,
    pub splits: Splits,
    pub embeddings: EmbeddingTable,
    pub source: String,
}

impl Corpus {
    pub fn new(
        graph: SocialGraph,
        posts: Vec<Post>,
        splits: Splits,
        embeddings: EmbeddingTable,
        source: impl Into<String>,
    ) -> Result<Self> {
        let corpus = Self {
            graph,
            posts,
            splits,
            embeddings,
            source: source.into(),
        };
        corpus.validate()?;
        Ok(corpus)
    }

    pub fn post(&self, id: PostId) -> Result<&Post> {
        self.posts.get(id as usize).ok_or(Error::UnknownPost(id))
    }

    pub fn embedding(&self, id: PostId) -> Result<&[f64]> {
        self.embeddings.row(id).ok_or(Error::UnknownPost(id))
    }

    pub fn posts_in(&self, split: Split) -> impl Iterator<Item = &Post> {
        self.splits.get(split).iter().map(|&id| &self.posts[id as usize])
    }

    pub fn validate(&self) -> Result<()> {
        validate_posts(&self.graph, &self.posts)?;
        let mut seen = vec![false; self.posts.len()];
        for &id in self.splits.train.iter().chain(&self.splits.val).chain(&self.splits.test) {
            let slot = seen
                .get_mut(id as usize)
                .ok_or(Error::UnknownPost(id))?;
            if *slot {
                return Err(Error::InvalidArgument(format!("post {id} appears in two splits")));
            }
            *slot = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidArgument(format!("post {missing} is in no split")));
        }
        if self.embeddings.len() != self.posts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} embedding rows for {} posts",
                self.embeddings.len(),
                self.posts.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        save_tables(dir, &self.graph, &self.posts, &self.splits, &self.source)?;
        write_embeddings(&dir.join("embeddings.txt"), &self.embeddings)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta = read_meta(dir)?;
        let edges = read_edge_list(&dir.join("network.tsv"))?;
        let graph = SocialGraph::build(&edges, meta.user_count)?;
        let posts = read_posts(&dir.join("posts.tsv"))?;
        if posts.len() != meta.post_count {
            return Err(Error::InvalidArgument(format!(
                "meta.json declares {} posts, posts.tsv has {}",
                meta.post_count,
                posts.len()
            )));
        }
        let splits = read_splits(&dir.join("splits.tsv"))?;
        let embeddings = read_embeddings(&dir.join("embeddings.txt"))?;
        Self::new(graph, posts, splits, embeddings, meta.source)
    }
}

/// Writes every corpus file except `embeddings.txt`, for corpora whose
/// embeddings are produced afterwards from `posts.tsv`.
pub fn save_tables(dir: &Path, graph: &SocialGraph, posts: &[Post], splits: &Splits, source: &str) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_meta(dir, graph.user_count(), posts.len(), source)?;
    write_edge_list(&dir.join("network.tsv"), graph)?;
    write_posts(&dir.join("posts.tsv"), posts)?;
    write_splits(&dir.join("splits.tsv"), splits)
}

pub(crate) fn validate_posts(graph: &SocialGraph, posts: &[Post]) -> Result<()> {
    for (i, post) in posts.iter().enumerate() {
        if post.id as usize != i {
            return Err(Error::InvalidArgument(format!("post at index {i} has id {}", post.id)));
        }
        graph.check_user(post.creator)?;
        for &u in &post.reposters {
            graph.check_user(u)?;
        }
        if post.reposters.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("post {i}: reposters not sorted and distinct")));
        }
        if post.reposted_by(post.creator) {
            return Err(Error::InvalidArgument(format!("post {i}: creator listed as reposter")));
        }
    }
    Ok(())
}

/// Per-user list of posts they reposted, restricted to a post subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepostHistory {
    by_user: Vec<Vec<PostId>>,
}

impl RepostHistory {
    pub fn build<'a>(user_count: usize, posts: impl IntoIterator<Item = &'a Post>) -> Self {
        let mut by_user = vec![Vec::new(); user_count];
        for post in posts {
            for &u in &post.reposters {
                by_user[u as usize].push(post.id);
            }
        }
        for list in &mut by_user {
            list.sort_unstable();
            list.dedup();
        }
        Self { by_user }
    }

    pub fn from_lists(by_user: Vec<Vec<PostId>>) -> Self {
        Self { by_user }
    }

    pub fn of(&self, user: UserId) -> &[PostId] {
        self.by_user.get(user as usize).map_or(&[], |v| v.as_slice())
    }
}

pub fn escape_field(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(text: &str) -> Option<String> {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(ch) = chars.next() {
        if ch != '\\' {
            out.push(ch);
            continue;
        }
        match chars.next()? {
            '\\' => out.push('\\'),
            't' => out.push('\t'),
            'n' => out.push('\n'),
            'r' => out.push('\r'),
            _ => return None,
        }
    }
    Some(out)
}

fn write_meta(dir: &Path, user_count: usize, post_count: usize, source: &str) -> Result<()> {
    let meta = CorpusMeta {
        format: CORPUS_FORMAT.into(),
        version: CORPUS_VERSION,
        user_count,
        post_count,
        source: source.into(),
    };
    let path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta)? + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

pub fn read_meta(dir: &Path) -> Result<CorpusMeta> {
    let path = dir.join("meta.json");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: CorpusMeta = serde_json::from_str(&text)?;
    if meta.format != CORPUS_FORMAT || meta.version != CORPUS_VERSION {
        return Err(Error::parse(
            &path,
            1,
            format!("unsupported corpus format {} v{}", meta.format, meta.version),
        ));
    }
    Ok(meta)
}

pub const POSTS_HEADER: &str = "#post_id\tcreator\trepost_count\treposters\ttext";

pub fn write_posts(path: &Path, posts: &[Post]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(out, "{POSTS_HEADER}").map_err(io)?;
    for post in posts {
        let reposters = if post.reposters.is_empty() {
            "-".to_string()
        } else {
            post.reposters
                .iter()
                .map(|u| u.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            post.id,
            post.creator,
            post.reposters.len(),
            reposters,
            escape_field(&post.text)
        )
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_posts(path: &Path) -> Result<Vec<Post>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut posts = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let lineno = idx + 1;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let bad = |msg: &str| Error::parse(path, lineno, msg.to_string());
        let fields: Vec<&str> = line.splitn(5, '\t').collect();
        if fields.len() != 5 {
            return Err(bad("expected 5 tab-separated fields"));
        }
        let id: PostId = fields[0].parse().map_err(|_| bad("bad post id"))?;
        let creator: UserId = fields[1].parse().map_err(|_| bad("bad creator id"))?;
        let count: usize = fields[2].parse().map_err(|_| bad("bad repost count"))?;
        let reposters: Vec<UserId> = if fields[3] == "-" {
            Vec::new()
        } else {
            fields[3]
                .split(',')
                .map(|s| s.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("bad reposter list"))?
        };
        if reposters.len() != count {
            return Err(bad("repost count disagrees with reposter list"));
        }
        let text = unescape_field(fields[4]).ok_or_else(|| bad("bad escape in text"))?;
        posts.push(Post {
            id,
            creator,
            text,
            reposters,
        });
    }
    Ok(posts)
}

pub fn write_splits(path: &Path, splits: &Splits) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let mut rows: Vec<(PostId, Split)> = Vec::with_capacity(splits.len());
    for split in [Split::Train, Split::Val, Split::Test] {
        rows.extend(splits.get(split).iter().map(|&id| (id, split)));
    }
    rows.sort_unstable_by_key(|&(id, _)| id);
    for (id, split) in rows {
        writeln!(out, "{id}\t{}", split.as_str()).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Split membership is stored per post; within a split, ids come back ascending.
pub fn read_splits(path: &Path) -> Result<Splits> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut splits = Splits::default();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: &str| Error::parse(path, idx + 1, msg.to_string());
        let (id, name) = line.split_once('\t').ok_or_else(|| bad("expected `post_id<TAB>split`"))?;
        let id: PostId = id.parse().map_err(|_| bad("bad post id"))?;
        if !seen.insert(id) {
            return Err(bad("post listed twice"));
        }
        match name {
            "train" => splits.train.push(id),
            "val" => splits.val.push(id),
            "test" => splits.test.push(id),
            _ => return Err(bad("split must be train, val or test")),
        }
    }
    splits.train.sort_unstable();
    splits.val.sort_unstable();
    splits.test.sort_unstable();
    Ok(splits)
}
