//! User and community profiles.
//!
//! A profile is a short list of words, concepts and users picked from
//! everything a user (or community) has used. Items are selected one at a
//! time: each round ranks the remaining candidates by usage (descending),
//! total distance to all remaining candidates (ascending) and total distance
//! to the items already selected (descending), aggregates the three rankings
//! with Borda points and moves the winner into the profile.

mod borda;
mod communities;

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embed::{EmbeddingSpace, ItemKey};
use crate::linalg::{axpy, cosine_distance, dot, normalize};
use crate::{Error, Result};

pub use borda::{borda_aggregate, borda_points, order_by_points, tied_positions};
pub use communities::{default_community_count, detect_communities, CommunityAssignment};

pub const DEFAULT_PROFILE_SIZE: usize = 15;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileItem {
    pub key: ItemKey,
    pub usage_count: u32,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subject {
    User(String),
    Community(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub subject: Subject,
    pub nn: usize,
    /// In selection order.
    pub items: Vec<ProfileItem>,
}

/// Flat view of a profile item for JSON output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub id: String,
    /// `word`, `concept` or `user`.
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub channel: Option<String>,
    pub usage: u32,
    /// 1-based selection order.
    pub score_rank: usize,
}

impl Profile {
    pub fn entries(&self) -> Vec<ProfileEntry> {
        self.items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                let (kind, channel) = match &item.key {
                    ItemKey::Word { .. } => ("word", None),
                    ItemKey::Concept { channel, .. } => ("concept", Some(channel.clone())),
                    ItemKey::User { .. } => ("user", None),
                };
                ProfileEntry {
                    id: item.key.name().to_string(),
                    kind: kind.to_string(),
                    channel,
                    usage: item.usage_count,
                    score_rank: i + 1,
                }
            })
            .collect()
    }
}

/// Usage counts of everything a user touched: words, concepts of every
/// channel and interaction targets.
fn usage_counts(corpus: &Corpus, user_id: &str, counts: &mut BTreeMap<ItemKey, u32>) -> Result<()> {
    let user = corpus.user(user_id)?;
    for post in corpus.user_posts(user) {
        for w in post.words() {
            *counts.entry(ItemKey::word(w)).or_insert(0) += 1;
        }
        for (c, t) in post.concepts() {
            *counts.entry(ItemKey::concept(c, t)).or_insert(0) += 1;
        }
    }
    for (target, n) in corpus.interaction_targets(user_id)? {
        *counts.entry(ItemKey::user(target)).or_insert(0) += n;
    }
    Ok(())
}

fn with_vectors(space: &EmbeddingSpace, counts: BTreeMap<ItemKey, u32>) -> Vec<ProfileItem> {
    counts
        .into_iter()
        .filter_map(|(key, usage_count)| {
            let vector = space.item_vector(&key)?.to_vec();
            Some(ProfileItem {
                key,
                usage_count,
                vector,
            })
        })
        .collect()
}

/// Candidate items of a user in ascending key order. Items without a vector
/// in `space` are dropped.
pub fn candidate_set(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    user_id: &str,
) -> Result<Vec<ProfileItem>> {
    let mut counts = BTreeMap::new();
    usage_counts(corpus, user_id, &mut counts)?;
    Ok(with_vectors(space, counts))
}

/// Union of the members' candidate sets with usage counts summed.
pub fn community_candidate_set(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    members: &[&str],
) -> Result<Vec<ProfileItem>> {
    if members.is_empty() {
        return Err(Error::EmptyCommunity);
    }
    let mut counts = BTreeMap::new();
    for m in members {
        usage_counts(corpus, m, &mut counts)?;
    }
    Ok(with_vectors(space, counts))
}

/// Per-item usage, representativeness and diversity scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ItemScores {
    /// Usage count; higher is better.
    pub su: f64,
    /// Summed distance to every candidate; lower is better.
    pub sr: f64,
    /// Summed distance to every selected item; higher is better.
    pub sd: f64,
}

fn distance(a: &ProfileItem, b: &ProfileItem) -> f64 {
    if a.key == b.key {
        0.0
    } else {
        cosine_distance(&a.vector, &b.vector)
    }
}

/// Scores of every item of `candidates` given the already `selected` items.
/// Sums run in slice order.
pub fn score_items(candidates: &[ProfileItem], selected: &[ProfileItem]) -> Vec<ItemScores> {
    candidates
        .iter()
        .map(|i| ItemScores {
            su: i.usage_count as f64,
            sr: candidates.iter().map(|j| distance(i, j)).sum(),
            sd: selected.iter().map(|j| distance(i, j)).sum(),
        })
        .collect()
}

/// Index of the Borda winner among `scores`; ties go to the lowest index.
fn borda_winner(scores: &[ItemScores]) -> usize {
    let col = |f: fn(&ItemScores) -> f64| scores.iter().map(f).collect::<Vec<_>>();
    let positions = [
        tied_positions(&col(|s| s.su), true),
        tied_positions(&col(|s| s.sr), false),
        tied_positions(&col(|s| s.sd), true),
    ];
    order_by_points(&borda_points(&positions, scores.len()))[0]
}

/// Candidate sets up to this size use an explicit distance matrix.
pub const PAIRWISE_LIMIT: usize = 1024;

/// Iterative selection of up to `nn` items from `candidates`.
///
/// Candidates should be in ascending key order, which is the tie-break
/// order. Small candidate sets go through [`select_items_pairwise`], larger
/// ones through [`select_items_summed`].
pub fn select_items(candidates: &[ProfileItem], nn: usize) -> Vec<ProfileItem> {
    if candidates.len() <= PAIRWISE_LIMIT {
        select_items_pairwise(candidates, nn)
    } else {
        select_items_summed(candidates, nn)
    }
}

/// Pairwise distances are computed once; score sums are recomputed each
/// round over the remaining candidates and the selection so far, in index
/// order. Memory is quadratic in the number of candidates.
pub fn select_items_pairwise(candidates: &[ProfileItem], nn: usize) -> Vec<ProfileItem> {
    let m = candidates.len();
    let mut dist = vec![0.0; m * m];
    for i in 0..m {
        for j in i + 1..m {
            let d = distance(&candidates[i], &candidates[j]);
            dist[i * m + j] = d;
            dist[j * m + i] = d;
        }
    }
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < nn && !remaining.is_empty() {
        let scores: Vec<ItemScores> = remaining
            .iter()
            .map(|&i| ItemScores {
                su: candidates[i].usage_count as f64,
                sr: remaining.iter().map(|&j| dist[i * m + j]).sum(),
                sd: selected.iter().map(|&j| dist[i * m + j]).sum(),
            })
            .collect();
        let winner = remaining.remove(borda_winner(&scores));
        selected.push(winner);
    }
    selected
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect()
}

/// Same selection in linear memory. With unit vectors `u`, the summed
/// cosine distance from `i` to a set `A` is `|A| - u_i · Σ_A u`, corrected
/// for `i` itself when it belongs to `A`. Each round costs one dot product
/// per candidate. Sums round differently from the pairwise route, so exact
/// ties can resolve differently.
pub fn select_items_summed(candidates: &[ProfileItem], nn: usize) -> Vec<ProfileItem> {
    let m = candidates.len();
    let dim = candidates.first().map_or(0, |c| c.vector.len());
    let unit: Vec<Vec<f64>> = candidates
        .iter()
        .map(|c| {
            let mut u = c.vector.clone();
            normalize(&mut u);
            u
        })
        .collect();
    let mut remaining_sum = vec![0.0; dim];
    for u in &unit {
        axpy(1.0, u, &mut remaining_sum);
    }
    let mut selected_sum = vec![0.0; dim];
    let mut remaining: Vec<usize> = (0..m).collect();
    let mut selected: Vec<usize> = Vec::new();
    while selected.len() < nn && !remaining.is_empty() {
        let r = remaining.len() as f64;
        let s = selected.len() as f64;
        let scores: Vec<ItemScores> = remaining
            .iter()
            .map(|&i| {
                let u = &unit[i];
                ItemScores {
                    su: candidates[i].usage_count as f64,
                    sr: (r - 1.0) - dot(u, &remaining_sum) + dot(u, u),
                    sd: s - dot(u, &selected_sum),
                }
            })
            .collect();
        let winner = remaining.remove(borda_winner(&scores));
        axpy(-1.0, &unit[winner], &mut remaining_sum);
        axpy(1.0, &unit[winner], &mut selected_sum);
        selected.push(winner);
    }
    selected
        .into_iter()
        .map(|i| candidates[i].clone())
        .collect()
}

pub fn build_profile(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    user_id: &str,
    nn: usize,
) -> Result<Profile> {
    let candidates = candidate_set(corpus, space, user_id)?;
    Ok(Profile {
        subject: Subject::User(user_id.to_string()),
        nn,
        items: select_items(&candidates, nn),
    })
}

pub fn build_community_profile(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    community: usize,
    members: &[&str],
    nn: usize,
) -> Result<Profile> {
    let candidates = community_candidate_set(corpus, space, members)?;
    Ok(Profile {
        subject: Subject::Community(community),
        nn,
        items: select_items(&candidates, nn),
    })
}

/// Memoised profiles keyed by subject, embedding-space checksum and size.
/// Safe to share between threads.
#[derive(Debug, Default)]
pub struct ProfileCache {
    entries: RwLock<HashMap<(Subject, u64, usize), Arc<Profile>>>,
}

impl ProfileCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Returns the cached profile or computes and stores it. Failures are not
    /// cached.
    pub fn get_or_build(
        &self,
        subject: Subject,
        space: &EmbeddingSpace,
        nn: usize,
        build: impl FnOnce() -> Result<Profile>,
    ) -> Result<Arc<Profile>> {
        let key = (subject, space.checksum(), nn);
        if let Some(p) = self.entries.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(p));
        }
        let profile = Arc::new(build()?);
        let mut entries = self.entries.write().expect("cache lock");
        Ok(Arc::clone(entries.entry(key).or_insert(profile)))
    }
}
