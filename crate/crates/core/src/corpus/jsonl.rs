use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Corpus, Post, ENTITIES, HASHTAGS, VISUAL_CONCEPTS};
use crate::{Error, Result};

/// One line of the corpus file. Missing channel keys mean empty lists; any
/// additional key holding an array of strings is read as an extra channel.
#[derive(Debug, Serialize, Deserialize)]
struct RawPost {
    post_id: String,
    user_id: String,
    #[serde(default)]
    text: String,
    #[serde(default)]
    visual_concepts: Vec<String>,
    #[serde(default)]
    entities: Vec<String>,
    #[serde(default)]
    hashtags: Vec<String>,
    #[serde(default)]
    reply_to_user: Option<String>,
    #[serde(default)]
    category: Option<String>,
    #[serde(flatten)]
    extra: BTreeMap<String, serde_json::Value>,
}

impl RawPost {
    fn into_post(self, line: usize) -> Result<Post> {
        let malformed = |message: String| Error::MalformedLine { line, message };
        if self.post_id.is_empty() {
            return Err(malformed("empty post_id".into()));
        }
        if self.user_id.is_empty() {
            return Err(malformed("empty user_id".into()));
        }
        let mut channels = BTreeMap::new();
        for (name, tokens) in [
            (VISUAL_CONCEPTS, self.visual_concepts),
            (ENTITIES, self.entities),
            (HASHTAGS, self.hashtags),
        ] {
            insert_channel(&mut channels, name.to_string(), tokens);
        }
        for (key, value) in self.extra {
            let tokens: Vec<String> = serde_json::from_value(value)
                .map_err(|_| malformed(format!("channel `{key}` is not a list of strings")))?;
            insert_channel(&mut channels, key, tokens);
        }
        Ok(Post {
            post_id: self.post_id,
            user_id: self.user_id,
            text: self.text,
            channels,
            reply_to_user: self.reply_to_user.filter(|u| !u.is_empty()),
            category: self.category,
        })
    }

    fn from_post(post: &Post) -> Self {
        let mut extra = BTreeMap::new();
        let mut standard = BTreeMap::new();
        for (name, tokens) in &post.channels {
            if [VISUAL_CONCEPTS, ENTITIES, HASHTAGS].contains(&name.as_str()) {
                standard.insert(name.as_str(), tokens.clone());
            } else {
                extra.insert(name.clone(), serde_json::json!(tokens));
            }
        }
        let mut take = |k| standard.remove(k).unwrap_or_default();
        Self {
            post_id: post.post_id.clone(),
            user_id: post.user_id.clone(),
            text: post.text.clone(),
            visual_concepts: take(VISUAL_CONCEPTS),
            entities: take(ENTITIES),
            hashtags: take(HASHTAGS),
            reply_to_user: post.reply_to_user.clone(),
            category: post.category.clone(),
            extra,
        }
    }
}

fn insert_channel(channels: &mut BTreeMap<String, Vec<String>>, name: String, tokens: Vec<String>) {
    let tokens: Vec<String> = tokens
        .into_iter()
        .filter(|t| !t.trim().is_empty())
        .collect();
    if !tokens.is_empty() {
        channels.insert(name, tokens);
    }
}

/// Parses JSONL posts (1-based line numbers in errors). Blank lines are skipped.
pub fn parse_corpus(reader: impl BufRead, min_posts: usize) -> Result<Corpus> {
    let mut posts = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPost = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: i + 1,
            message: e.to_string(),
        })?;
        posts.push(raw.into_post(i + 1)?);
    }
    Corpus::from_posts(posts, min_posts)
}

pub fn load_corpus(path: impl AsRef<Path>, min_posts: usize) -> Result<Corpus> {
    parse_corpus(BufReader::new(File::open(path)?), min_posts)
}

/// Writes every retained post as one JSON object per line, in post-id order.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write) -> Result<()> {
    for post in corpus.posts() {
        let line = serde_json::to_string(&RawPost::from_post(post))
            .map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}
