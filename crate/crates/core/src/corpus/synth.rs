//! Synthetic community-structured corpora.
//!
//! Users belong to exactly one community, recorded as the category of each of
//! their posts. Two regimes are supported:
//!
//! * **Disjoint pools** (default): every community owns a private pool of
//!   words and of concepts per channel. A post draws `1 - mixing` of its
//!   tokens from the author's pool and the rest from foreign pools.
//! * **Contextual**: all communities share one vocabulary. A community is
//!   characterised only by a joint distribution over (word, concept) pairs:
//!   a few community-specific themes that tie words to concepts, diluted by
//!   a large amount of generic language common to everybody.
//!
//! Reply targets are drawn from the author's community 80% of the time.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, Post, ENTITIES, HASHTAGS, VISUAL_CONCEPTS};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_communities: usize,
    pub users_per_community: usize,
    /// Inclusive range of posts per user.
    pub posts_per_user: (usize, usize),
    pub vocab_per_community: usize,
    pub concepts_per_community: usize,
    /// Fraction of tokens (or themes, in contextual mode) taken from foreign
    /// communities.
    pub mixing: f64,
    pub contextual_mode: bool,
    pub rng_seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_communities: 4,
            users_per_community: 50,
            posts_per_user: (10, 30),
            vocab_per_community: 50,
            concepts_per_community: 20,
            mixing: 0.1,
            contextual_mode: false,
            rng_seed: 7,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.posts_per_user;
        if self.n_communities == 0
            || self.users_per_community == 0
            || lo == 0
            || lo > hi
            || self.vocab_per_community == 0
            || self.concepts_per_community == 0
        {
            return Err(Error::InvalidArgument(
                "synthetic corpus counts must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mixing) {
            return Err(Error::InvalidArgument("mixing must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn community_name(k: usize) -> String {
        format!("c{k}")
    }
}

const REPLY_PROBABILITY: f64 = 0.3;
const INTRA_COMMUNITY_REPLIES: f64 = 0.8;
const IMAGE_PROBABILITY: f64 = 0.5;
const CONCEPTS_PER_IMAGE: usize = 5;

// Contextual regime.
const THEMES_PER_COMMUNITY: usize = 6;
const THEME_WORDS: usize = 4;
const THEME_PAIRS_PER_POST: usize = 2;
const GENERIC_WORDS_PER_POST: (usize, usize) = (8, 14);

/// Zipf-like weights `1 / (rank + 1)`.
fn zipf(n: usize) -> WeightedIndex<f64> {
    WeightedIndex::new((0..n).map(|i| 1.0 / (i as f64 + 1.0))).expect("non-empty pool")
}

struct Pools {
    words: Vec<Vec<String>>,
    concepts: BTreeMap<&'static str, Vec<Vec<String>>>,
}

fn concept_token(channel: &str, k: Option<usize>, j: usize) -> String {
    let prefix = match channel {
        VISUAL_CONCEPTS => "vis",
        ENTITIES => "ent",
        _ => "#tag",
    };
    match k {
        Some(k) => format!("{prefix}{k}x{j}"),
        None => format!("{prefix}{j}"),
    }
}

/// Draws the words and channel tokens of one post for a community.
type PostGenerator =
    dyn FnMut(usize, &mut ChaCha8Rng) -> (Vec<String>, BTreeMap<String, Vec<String>>);

/// Generates a corpus. Identical configs give identical corpora.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let k_total = config.n_communities;
    let n_users = k_total * config.users_per_community;
    let width = n_users.to_string().len().max(4);
    let user_ids: Vec<String> = (0..n_users).map(|i| format!("u{i:0width$}")).collect();
    let community_of = |i: usize| i / config.users_per_community;
    let members: Vec<&[String]> = user_ids.chunks(config.users_per_community).collect();

    let mut posts = Vec::new();
    let mut generator: Box<PostGenerator> = if config.contextual_mode {
        Box::new(contextual_generator(config, &mut rng))
    } else {
        Box::new(disjoint_generator(config))
    };

    for (i, user) in user_ids.iter().enumerate() {
        let k = community_of(i);
        let n_posts = rng.random_range(config.posts_per_user.0..=config.posts_per_user.1);
        for p in 0..n_posts {
            let (words, channels) = generator(k, &mut rng);
            let reply_to_user = if rng.random_bool(REPLY_PROBABILITY) {
                let target_k = if k_total == 1 || rng.random_bool(INTRA_COMMUNITY_REPLIES) {
                    k
                } else {
                    foreign(k, k_total, &mut rng)
                };
                members[target_k]
                    .choose(&mut rng)
                    .filter(|t| *t != user)
                    .cloned()
            } else {
                None
            };
            posts.push(Post {
                post_id: format!("{user}p{p:03}"),
                user_id: user.clone(),
                text: words.join(" "),
                channels,
                reply_to_user,
                category: Some(SynthConfig::community_name(k)),
            });
        }
    }
    Corpus::from_posts(posts, 1)
}

fn foreign(k: usize, k_total: usize, rng: &mut impl Rng) -> usize {
    let j = rng.random_range(0..k_total - 1);
    if j >= k {
        j + 1
    } else {
        j
    }
}

/// Picks the pool community: own with probability `1 - mixing`.
fn pick_community(k: usize, k_total: usize, mixing: f64, rng: &mut impl Rng) -> usize {
    if k_total > 1 && mixing > 0.0 && rng.random_bool(mixing) {
        foreign(k, k_total, rng)
    } else {
        k
    }
}

fn disjoint_generator(
    config: &SynthConfig,
) -> impl FnMut(usize, &mut ChaCha8Rng) -> (Vec<String>, BTreeMap<String, Vec<String>>) {
    let k_total = config.n_communities;
    let pools = Pools {
        words: (0..k_total)
            .map(|k| {
                (0..config.vocab_per_community)
                    .map(|j| format!("w{k}x{j}"))
                    .collect()
            })
            .collect(),
        concepts: [VISUAL_CONCEPTS, ENTITIES, HASHTAGS]
            .into_iter()
            .map(|ch| {
                let per_k = (0..k_total)
                    .map(|k| {
                        (0..config.concepts_per_community)
                            .map(|j| concept_token(ch, Some(k), j))
                            .collect()
                    })
                    .collect();
                (ch, per_k)
            })
            .collect(),
    };
    let word_dist = zipf(config.vocab_per_community);
    let concept_dist = zipf(config.concepts_per_community);
    let mixing = config.mixing;

    move |k, rng| {
        let n_words = rng.random_range(6..=14);
        let words = (0..n_words)
            .map(|_| {
                let src = pick_community(k, k_total, mixing, rng);
                pools.words[src][word_dist.sample(rng)].clone()
            })
            .collect();
        let mut channels = BTreeMap::new();
        let draw = |ch: &'static str, n: usize, rng: &mut ChaCha8Rng| -> Vec<String> {
            let mut out: Vec<String> = Vec::new();
            let mut tries = 0;
            while out.len() < n && tries < 20 * n {
                tries += 1;
                let src = pick_community(k, k_total, mixing, rng);
                let tok = &pools.concepts[ch][src][concept_dist.sample(rng)];
                if !out.contains(tok) {
                    out.push(tok.clone());
                }
            }
            out
        };
        if rng.random_bool(IMAGE_PROBABILITY) {
            channels.insert(
                VISUAL_CONCEPTS.to_string(),
                draw(VISUAL_CONCEPTS, CONCEPTS_PER_IMAGE, rng),
            );
        }
        for ch in [ENTITIES, HASHTAGS] {
            let n = rng.random_range(0..=2);
            if n > 0 {
                channels.insert(ch.to_string(), draw(ch, n, rng));
            }
        }
        (words, channels)
    }
}

/// A community theme: a handful of words tied to concepts, all taken from the
/// shared vocabulary.
struct Theme {
    words: Vec<usize>,
    concepts: Vec<(&'static str, usize)>,
}

fn contextual_generator(
    config: &SynthConfig,
    rng: &mut ChaCha8Rng,
) -> impl FnMut(usize, &mut ChaCha8Rng) -> (Vec<String>, BTreeMap<String, Vec<String>>) {
    let k_total = config.n_communities;
    let n_words = config.vocab_per_community * k_total;
    let n_concepts = config.concepts_per_community * k_total;
    let words: Vec<String> = (0..n_words).map(|j| format!("w{j}")).collect();
    let channels = [VISUAL_CONCEPTS, ENTITIES, HASHTAGS];

    let themes: Vec<Vec<Theme>> = (0..k_total)
        .map(|_| {
            (0..THEMES_PER_COMMUNITY)
                .map(|_| Theme {
                    words: (0..THEME_WORDS)
                        .map(|_| rng.random_range(0..n_words))
                        .collect(),
                    concepts: channels
                        .iter()
                        .map(|&ch| (ch, rng.random_range(0..n_concepts)))
                        .collect(),
                })
                .collect()
        })
        .collect();
    let generic_words = zipf(n_words);
    let generic_concepts = zipf(n_concepts);
    let mixing = config.mixing;

    move |k, rng| {
        let mut post_words = Vec::new();
        let mut post_channels: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let push_concept = |ch: &'static str, j: usize, out: &mut BTreeMap<String, Vec<String>>| {
            let tok = concept_token(ch, None, j);
            let list = out.entry(ch.to_string()).or_default();
            if !list.contains(&tok) {
                list.push(tok);
            }
        };
        for _ in 0..THEME_PAIRS_PER_POST {
            let src = pick_community(k, k_total, mixing, rng);
            let theme = themes[src].choose(rng).expect("themes");
            post_words.extend(theme.words.iter().map(|&w| words[w].clone()));
            for &(ch, j) in &theme.concepts {
                push_concept(ch, j, &mut post_channels);
            }
        }
        let n_generic = rng.random_range(GENERIC_WORDS_PER_POST.0..=GENERIC_WORDS_PER_POST.1);
        post_words.extend((0..n_generic).map(|_| words[generic_words.sample(rng)].clone()));
        if rng.random_bool(IMAGE_PROBABILITY) {
            for _ in 0..CONCEPTS_PER_IMAGE - 1 {
                push_concept(
                    VISUAL_CONCEPTS,
                    generic_concepts.sample(rng),
                    &mut post_channels,
                );
            }
        }
        (post_words, post_channels)
    }
}
