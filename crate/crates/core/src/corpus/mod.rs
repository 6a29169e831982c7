//! Annotated multimodal posts, grouped per user and indexed per channel.
//!
//! A corpus is immutable once built. Every channel (the reserved `words`
//! channel derived from post text, plus concept channels such as
//! `visual_concepts`, `entities` and `hashtags`) gets a dense vocabulary and a
//! user-level inverted index: the document unit is the user, i.e. all posts of
//! a user concatenated.

mod jsonl;
mod synth;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::{vectorize, Error, Result};

pub use jsonl::{load_corpus, parse_corpus, write_corpus};
pub use synth::{generate_synthetic, SynthConfig};

pub const WORDS: &str = "words";
pub const VISUAL_CONCEPTS: &str = "visual_concepts";
pub const ENTITIES: &str = "entities";
pub const HASHTAGS: &str = "hashtags";

/// Concept channels in their canonical fusion order.
pub const CONCEPT_CHANNELS: [&str; 3] = [VISUAL_CONCEPTS, ENTITIES, HASHTAGS];

/// Default minimum number of posts for a user to be retained.
pub const DEFAULT_MIN_POSTS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub user_id: String,
    pub text: String,
    /// Concept channel name to tokens. Never contains the `words` channel.
    pub channels: BTreeMap<String, Vec<String>>,
    pub reply_to_user: Option<String>,
    pub category: Option<String>,
}

impl Post {
    pub fn words(&self) -> Vec<String> {
        tokenize(&self.text)
    }

    /// Tokens of `channel`; `words` is derived from the text.
    pub fn tokens(&self, channel: &str) -> Vec<String> {
        if channel == WORDS {
            self.words()
        } else {
            self.channels.get(channel).cloned().unwrap_or_default()
        }
    }

    /// All concept tokens of the post as `(channel, token)` pairs.
    pub fn concepts(&self) -> impl Iterator<Item = (&str, &str)> {
        self.channels
            .iter()
            .flat_map(|(c, toks)| toks.iter().map(move |t| (c.as_str(), t.as_str())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct User {
    pub user_id: String,
    pub post_ids: Vec<String>,
    pub categories: BTreeSet<String>,
}

impl User {
    pub fn post_count(&self) -> usize {
        self.post_ids.len()
    }
}

/// Dense token ids for one channel, ordered lexicographically.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_tokens(tokens: BTreeSet<String>) -> Self {
        let tokens: Vec<String> = tokens.into_iter().collect();
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, ids }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.ids.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Vocabulary plus user-level term counts for a single channel.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChannelIndex {
    pub vocabulary: Vocabulary,
    /// Per user row: `(term id, tf)` sorted by term id.
    user_terms: Vec<Vec<(u32, u32)>>,
    /// Per term id: `(user row, tf)` sorted by user row.
    postings: Vec<Vec<(u32, u32)>>,
}

impl ChannelIndex {
    /// Number of users whose document contains `term`.
    pub fn document_frequency(&self, term: u32) -> usize {
        self.postings[term as usize].len()
    }

    pub fn user_terms(&self, row: usize) -> &[(u32, u32)] {
        &self.user_terms[row]
    }

    pub fn postings(&self, term: u32) -> &[(u32, u32)] {
        &self.postings[term as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub from_user: String,
    pub to_user: String,
    pub count: u32,
    /// Target is not a retained user (suspended, filtered or never seen).
    pub external: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    users: BTreeMap<String, User>,
    posts: BTreeMap<String, Post>,
    user_order: Vec<String>,
    user_rows: HashMap<String, usize>,
    channels: BTreeMap<String, ChannelIndex>,
    /// Sorted by (from_user, to_user).
    edges: Vec<Edge>,
}

impl Corpus {
    /// Builds a corpus from raw posts, dropping users with fewer than
    /// `min_posts` posts (together with their posts).
    pub fn from_posts(posts: Vec<Post>, min_posts: usize) -> Result<Self> {
        let mut by_id: BTreeMap<String, Post> = BTreeMap::new();
        let mut per_user: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for post in posts {
            if post.user_id.is_empty() {
                return Err(Error::InvalidArgument(format!(
                    "post `{}` has an empty user id",
                    post.post_id
                )));
            }
            if by_id.contains_key(&post.post_id) {
                return Err(Error::DuplicatePost(post.post_id));
            }
            per_user
                .entry(post.user_id.clone())
                .or_default()
                .push(post.post_id.clone());
            by_id.insert(post.post_id.clone(), post);
        }

        let mut users = BTreeMap::new();
        for (user_id, post_ids) in per_user {
            if post_ids.len() < min_posts.max(1) {
                for p in &post_ids {
                    by_id.remove(p);
                }
                continue;
            }
            let categories = post_ids
                .iter()
                .filter_map(|p| by_id[p].category.clone())
                .collect();
            users.insert(
                user_id.clone(),
                User {
                    user_id,
                    post_ids,
                    categories,
                },
            );
        }

        let user_order: Vec<String> = users.keys().cloned().collect();
        let user_rows: HashMap<String, usize> = user_order
            .iter()
            .enumerate()
            .map(|(i, u)| (u.clone(), i))
            .collect();

        let mut channel_names: BTreeSet<String> =
            CONCEPT_CHANNELS.iter().map(|c| c.to_string()).collect();
        for post in by_id.values() {
            channel_names.extend(post.channels.keys().cloned());
        }
        channel_names.insert(WORDS.to_string());

        let mut channels = BTreeMap::new();
        for name in channel_names {
            let index = build_channel(&name, &users, &user_order, &by_id);
            channels.insert(name, index);
        }

        let mut edge_counts: BTreeMap<(String, String), u32> = BTreeMap::new();
        for user in users.values() {
            for p in &user.post_ids {
                if let Some(target) = &by_id[p].reply_to_user {
                    if target != &user.user_id && !target.is_empty() {
                        *edge_counts
                            .entry((user.user_id.clone(), target.clone()))
                            .or_default() += 1;
                    }
                }
            }
        }
        let edges = edge_counts
            .into_iter()
            .map(|((from_user, to_user), count)| Edge {
                external: !users.contains_key(&to_user),
                from_user,
                to_user,
                count,
            })
            .collect();

        Ok(Self {
            users,
            posts: by_id,
            user_order,
            user_rows,
            channels,
            edges,
        })
    }

    pub fn n_users(&self) -> usize {
        self.user_order.len()
    }

    pub fn n_posts(&self) -> usize {
        self.posts.len()
    }

    /// User ids in row order (ascending id). Every matrix built from this
    /// corpus uses this order.
    pub fn user_ids(&self) -> &[String] {
        &self.user_order
    }

    pub fn user_row(&self, user_id: &str) -> Option<usize> {
        self.user_rows.get(user_id).copied()
    }

    pub fn user(&self, user_id: &str) -> Result<&User> {
        self.users
            .get(user_id)
            .ok_or_else(|| Error::UnknownUser(user_id.to_string()))
    }

    pub fn users(&self) -> impl Iterator<Item = &User> {
        self.users.values()
    }

    pub fn post(&self, post_id: &str) -> Option<&Post> {
        self.posts.get(post_id)
    }

    pub fn posts(&self) -> impl Iterator<Item = &Post> {
        self.posts.values()
    }

    /// Posts of a user in their original order.
    pub fn user_posts<'a>(&'a self, user: &'a User) -> impl Iterator<Item = &'a Post> + 'a {
        user.post_ids.iter().map(move |p| &self.posts[p])
    }

    /// All channel names: `words` plus every concept channel.
    pub fn channel_names(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(String::as_str)
    }

    /// Concept channel names (every channel except `words`).
    pub fn concept_channels(&self) -> impl Iterator<Item = &str> {
        self.channel_names().filter(|c| *c != WORDS)
    }

    pub fn channel(&self, name: &str) -> Result<&ChannelIndex> {
        self.channels
            .get(name)
            .ok_or_else(|| Error::UnknownChannel(name.to_string()))
    }

    pub fn vocabulary(&self, channel: &str) -> Result<&Vocabulary> {
        Ok(&self.channel(channel)?.vocabulary)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Distinct categories over all retained posts.
    pub fn categories(&self) -> BTreeSet<String> {
        self.users
            .values()
            .flat_map(|u| u.categories.iter().cloned())
            .collect()
    }

    /// Number of posts `user_id` wrote in `category`.
    pub fn posts_in_category(&self, user_id: &str, category: &str) -> usize {
        self.users.get(user_id).map_or(0, |u| {
            self.user_posts(u)
                .filter(|p| p.category.as_deref() == Some(category))
                .count()
        })
    }

    /// Users ranked by the summed TF-IDF weight of the (deduplicated) query
    /// tokens in `channel`. Users with zero weight are omitted; ties go to
    /// the lower user id.
    pub fn search_users(&self, query: &[String], channel: &str) -> Result<Vec<(String, f64)>> {
        let index = self.channel(channel)?;
        let n = self.n_users();
        let terms: BTreeSet<u32> = query
            .iter()
            .flat_map(|q| {
                if channel == WORDS {
                    tokenize(q)
                } else {
                    vec![q.clone()]
                }
            })
            .filter_map(|t| index.vocabulary.id(&t))
            .collect();

        let mut scores = vec![0.0f64; n];
        for &t in &terms {
            let df = index.document_frequency(t);
            for &(row, tf) in index.postings(t) {
                scores[row as usize] += vectorize::tfidf_weight(tf, n, df);
            }
        }
        let mut ranked: Vec<(String, f64)> = scores
            .into_iter()
            .enumerate()
            .filter(|(_, s)| *s > 0.0)
            .map(|(row, s)| (self.user_order[row].clone(), s))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Ok(ranked)
    }

    /// Reply/retweet targets of a user with usage counts. Targets outside the
    /// corpus are excluded.
    pub fn interaction_targets(&self, user_id: &str) -> Result<BTreeMap<String, u32>> {
        self.user(user_id)?;
        // Edges are sorted by (from_user, to_user).
        let start = self
            .edges
            .partition_point(|e| e.from_user.as_str() < user_id);
        let end = start + self.edges[start..].partition_point(|e| e.from_user == user_id);
        Ok(self.edges[start..end]
            .iter()
            .filter(|e| !e.external)
            .map(|e| (e.to_user.clone(), e.count))
            .collect())
    }
}

fn build_channel(
    name: &str,
    users: &BTreeMap<String, User>,
    user_order: &[String],
    posts: &BTreeMap<String, Post>,
) -> ChannelIndex {
    let per_user: Vec<BTreeMap<String, u32>> = user_order
        .iter()
        .map(|u| {
            let mut counts = BTreeMap::new();
            for p in &users[u].post_ids {
                for tok in posts[p].tokens(name) {
                    *counts.entry(tok).or_insert(0) += 1;
                }
            }
            counts
        })
        .collect();

    let vocabulary =
        Vocabulary::from_tokens(per_user.iter().flat_map(|c| c.keys().cloned()).collect());
    let mut postings = vec![Vec::new(); vocabulary.len()];
    let user_terms = per_user
        .into_iter()
        .enumerate()
        .map(|(row, counts)| {
            let terms: Vec<(u32, u32)> = counts
                .into_iter()
                .map(|(tok, tf)| (vocabulary.id(&tok).expect("token in vocabulary"), tf))
                .collect();
            for &(t, tf) in &terms {
                postings[t as usize].push((row as u32, tf));
            }
            terms
        })
        .collect();

    ChannelIndex {
        vocabulary,
        user_terms,
        postings,
    }
}

/// Lowercases and splits on every non-alphanumeric codepoint.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn post(id: &str, user: &str, text: &str) -> Post {
        Post {
            post_id: id.into(),
            user_id: user.into(),
            text: text.into(),
            channels: BTreeMap::new(),
            reply_to_user: None,
            category: None,
        }
    }

    #[test]
    fn tokenize_examples() {
        assert!(tokenize("").is_empty());
        assert_eq!(
            tokenize("White-Pride WORLD wide!"),
            ["white", "pride", "world", "wide"]
        );
        assert_eq!(tokenize("a a a"), ["a", "a", "a"]);
    }

    #[test]
    fn min_posts_filter() {
        let posts = vec![post("1", "a", "x"), post("2", "a", "y")];
        let c = Corpus::from_posts(posts, 3).unwrap();
        assert_eq!(c.n_users(), 0);
        assert_eq!(c.n_posts(), 0);
    }

    #[test]
    fn duplicate_post_rejected() {
        let posts = vec![post("1", "a", "x"), post("1", "b", "y")];
        assert!(matches!(
            Corpus::from_posts(posts, 1),
            Err(Error::DuplicatePost(_))
        ));
    }

    #[test]
    fn df_counts_users_not_posts() {
        let posts = vec![
            post("1", "a", "x x"),
            post("2", "a", "x"),
            post("3", "b", "x y"),
        ];
        let c = Corpus::from_posts(posts, 1).unwrap();
        let words = c.channel(WORDS).unwrap();
        let x = words.vocabulary.id("x").unwrap();
        assert_eq!(words.document_frequency(x), 2);
        assert_eq!(words.user_terms(0), &[(x, 3)]);
    }

    #[test]
    fn interaction_targets_counts_and_external() {
        let mut posts = vec![
            post("1", "a", "x"),
            post("2", "a", "x"),
            post("3", "a", "x"),
            post("4", "a", "x"),
            post("5", "b", "x"),
            post("6", "c", "x"),
        ];
        posts[0].reply_to_user = Some("b".into());
        posts[1].reply_to_user = Some("b".into());
        posts[2].reply_to_user = Some("c".into());
        posts[3].reply_to_user = Some("ghost".into());
        let c = Corpus::from_posts(posts, 1).unwrap();
        let t = c.interaction_targets("a").unwrap();
        assert_eq!(t, BTreeMap::from([("b".into(), 2), ("c".into(), 1)]));
        assert!(c.interaction_targets("b").unwrap().is_empty());
        assert!(c.edges().iter().any(|e| e.to_user == "ghost" && e.external));
        assert!(matches!(
            c.interaction_targets("zz"),
            Err(Error::UnknownUser(_))
        ));
    }

    #[test]
    fn search_unknown_channel_and_absent_token() {
        let posts = vec![post("1", "a", "x"), post("2", "b", "y")];
        let c = Corpus::from_posts(posts, 1).unwrap();
        assert!(matches!(
            c.search_users(&["x".into()], "smells"),
            Err(Error::UnknownChannel(_))
        ));
        assert!(c.search_users(&["nope".into()], WORDS).unwrap().is_empty());
    }

    #[test]
    fn single_token_search_orders_by_weight() {
        let posts = vec![
            post("1", "a", "x"),
            post("2", "b", "x x x"),
            post("3", "c", "x x"),
            post("4", "d", "y"),
        ];
        let c = Corpus::from_posts(posts, 1).unwrap();
        let ranked: Vec<_> = c
            .search_users(&["X".into()], WORDS)
            .unwrap()
            .into_iter()
            .map(|(u, _)| u)
            .collect();
        assert_eq!(ranked, ["b", "c", "a"]);
    }
}
