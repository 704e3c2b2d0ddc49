//! Raw dataset files.
//!
//! Three UTF-8 files, one record per line, tab-separated, original string ids:
//!
//! * content:     `post_id<TAB>text` (text is the rest of the line)
//! * network:     `follower_id<TAB>followee_id`
//! * interaction: `post_id<TAB>user_id<TAB>kind`, kind `P` (the user published
//!   the post) or `R` (the user reposted it)
//!
//! Blank lines and lines starting with `#` are skipped. Lines that do not fit
//! the grammar, and interaction lines naming a post absent from the content
//! file, are malformed. Each file may contain at most
//! [`ParseOptions::max_malformed_fraction`] malformed lines.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPaths {
    pub content: PathBuf,
    pub network: PathBuf,
    pub interactions: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParseOptions {
    pub max_malformed_fraction: f64,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            max_malformed_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ActionKind {
    Post,
    Repost,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawAction {
    pub post: String,
    pub user: String,
    pub kind: ActionKind,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MalformedReport {
    /// Record lines read, comments and blank lines excluded.
    pub total: usize,
    /// 1-based line numbers.
    pub lines: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawCorpus {
    pub contents: Vec<(String, String)>,
    pub follows: Vec<(String, String)>,
    pub actions: Vec<RawAction>,
    pub malformed_content: MalformedReport,
    pub malformed_network: MalformedReport,
    pub malformed_interactions: MalformedReport,
}

pub fn parse_raw(paths: &RawPaths, options: &ParseOptions) -> Result<RawCorpus> {
    let mut raw = RawCorpus::default();

    let mut ids = HashSet::new();
    raw.malformed_content = read_records(&paths.content, options, |line| {
        let (id, text) = line.split_once('\t')?;
        let id = id.trim();
        if id.is_empty() || !ids.insert(id.to_string()) {
            return None;
        }
        raw.contents.push((id.to_string(), text.to_string()));
        Some(())
    })?;

    raw.malformed_network = read_records(&paths.network, options, |line| {
        let mut f = line.split('\t');
        let (a, b) = (f.next()?.trim(), f.next()?.trim());
        if f.next().is_some() || a.is_empty() || b.is_empty() {
            return None;
        }
        raw.follows.push((a.to_string(), b.to_string()));
        Some(())
    })?;

    raw.malformed_interactions = read_records(&paths.interactions, options, |line| {
        let mut f = line.split('\t');
        let (post, user, kind) = (f.next()?.trim(), f.next()?.trim(), f.next()?.trim());
        if f.next().is_some() || user.is_empty() || !ids.contains(post) {
            return None;
        }
        let kind = match kind {
            "P" => ActionKind::Post,
            "R" => ActionKind::Repost,
            _ => return None,
        };
        raw.actions.push(RawAction {
            post: post.to_string(),
            user: user.to_string(),
            kind,
        });
        Some(())
    })?;
    Ok(raw)
}

fn read_records(
    path: &Path,
    options: &ParseOptions,
    mut accept: impl FnMut(&str) -> Option<()>,
) -> Result<MalformedReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut report = MalformedReport::default();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        report.total += 1;
        if accept(line).is_none() {
            report.lines.push(idx + 1);
        }
    }
    if !report.lines.is_empty() {
        log::warn!("{}: {} malformed lines", path.display(), report.lines.len());
    }
    if report.lines.len() as f64 > options.max_malformed_fraction * report.total as f64 {
        return Err(Error::TooManyMalformed {
            path: path.to_path_buf(),
            malformed: report.lines.len(),
            total: report.total,
            first_lines: report.lines.iter().take(10).copied().collect(),
        });
    }
    Ok(report)
}
