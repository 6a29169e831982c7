//! Joint embedding of words, concepts and users.
//!
//! Posts become bag-of-features documents labelled with their author (and, in
//! the [`Setup::WuC`] setup, with their concepts). A document embeds as the
//! sum of its feature vectors; training pushes its cosine similarity to each
//! positive label above the similarity to `k` sampled negative labels by a
//! margin. Users' label vectors are the resulting user representation.

mod io;
mod loss;
mod train;

use std::collections::HashMap;
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, WORDS};
use crate::linalg::{cosine, Matrix};
use crate::vectorize::{Provenance, UserMatrix, DEFAULT_DIM};
use crate::{Error, Result};

pub use loss::{example_loss, pair_loss, ExampleGradients, PairLoss};
pub use train::{initialize, train};

/// How training examples are derived from a post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setup {
    /// Two examples per post: concept bag → user and word bag → user.
    #[serde(rename = "cwu")]
    CwU,
    /// One example per post: word bag → user and each of the post's concepts.
    #[serde(rename = "wuc")]
    WuC,
}

impl FromStr for Setup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "").as_str() {
            "cwu" => Ok(Setup::CwU),
            "wuc" => Ok(Setup::WuC),
            _ => Err(Error::UnknownSetup(s.to_string())),
        }
    }
}

impl fmt::Display for Setup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setup::CwU => "cwu",
            Setup::WuC => "wuc",
        })
    }
}

/// Identity of anything that can carry a vector: a word, a concept of some
/// channel, or a user. The derived order (words, then concepts by channel,
/// then users) is the tie-break order used throughout.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemKey {
    Word { token: String },
    Concept { channel: String, token: String },
    User { id: String },
}

impl ItemKey {
    pub fn word(token: impl Into<String>) -> Self {
        ItemKey::Word {
            token: token.into(),
        }
    }

    pub fn concept(channel: impl Into<String>, token: impl Into<String>) -> Self {
        ItemKey::Concept {
            channel: channel.into(),
            token: token.into(),
        }
    }

    pub fn user(id: impl Into<String>) -> Self {
        ItemKey::User { id: id.into() }
    }

    /// `word`, the concept channel name, or `user`.
    pub fn kind(&self) -> &str {
        match self {
            ItemKey::Word { .. } => WORDS,
            ItemKey::Concept { channel, .. } => channel,
            ItemKey::User { .. } => "user",
        }
    }

    /// The bare token or user id.
    pub fn name(&self) -> &str {
        match self {
            ItemKey::Word { token } | ItemKey::Concept { token, .. } => token,
            ItemKey::User { id } => id,
        }
    }
}

impl fmt::Display for ItemKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.name())
    }
}

/// Dense ids for a sorted list of keys.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Registry {
    keys: Vec<ItemKey>,
    ids: HashMap<ItemKey, u32>,
}

impl Registry {
    fn new(mut keys: Vec<ItemKey>) -> Self {
        keys.sort();
        keys.dedup();
        let ids = keys
            .iter()
            .enumerate()
            .map(|(i, k)| (k.clone(), i as u32))
            .collect();
        Self { keys, ids }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn id(&self, key: &ItemKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> &ItemKey {
        &self.keys[id as usize]
    }

    pub fn keys(&self) -> &[ItemKey] {
        &self.keys
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrainingExample {
    /// Feature ids; repeated ids count with multiplicity.
    pub input: Vec<u32>,
    /// Label ids.
    pub positives: Vec<u32>,
    pub setup: Setup,
}

/// Examples together with the feature and label registries they index.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub setup: Setup,
    pub features: Registry,
    pub labels: Registry,
    pub examples: Vec<TrainingExample>,
}

/// Builds examples for every post in corpus order.
///
/// * CW-U: concept bag → {user} and word bag → {user}; empty bags give no
///   example.
/// * W-UC: word bag → {user} ∪ concepts of the post. Posts without words give
///   no example.
pub fn build_examples(corpus: &Corpus, setup: Setup) -> TrainingSet {
    let mut feature_keys = Vec::new();
    let mut label_keys: Vec<ItemKey> = corpus.user_ids().iter().map(ItemKey::user).collect();
    for post in corpus.posts() {
        feature_keys.extend(post.words().into_iter().map(ItemKey::word));
        let concepts = post.concepts().map(|(c, t)| ItemKey::concept(c, t));
        match setup {
            Setup::CwU => feature_keys.extend(concepts),
            Setup::WuC => label_keys.extend(concepts),
        }
    }
    let features = Registry::new(feature_keys);
    let labels = Registry::new(label_keys);

    let mut examples = Vec::new();
    for user in corpus.users() {
        let user_label = labels
            .id(&ItemKey::user(&user.user_id))
            .expect("user label");
        for post in corpus.user_posts(user) {
            let words: Vec<u32> = post
                .words()
                .into_iter()
                .map(|w| features.id(&ItemKey::word(w)).expect("word feature"))
                .collect();
            match setup {
                Setup::CwU => {
                    let concepts: Vec<u32> = post
                        .concepts()
                        .map(|(c, t)| {
                            features
                                .id(&ItemKey::concept(c, t))
                                .expect("concept feature")
                        })
                        .collect();
                    for bag in [concepts, words] {
                        if !bag.is_empty() {
                            examples.push(TrainingExample {
                                input: bag,
                                positives: vec![user_label],
                                setup,
                            });
                        }
                    }
                }
                Setup::WuC => {
                    if words.is_empty() {
                        continue;
                    }
                    let mut positives = vec![user_label];
                    for (c, t) in post.concepts() {
                        let id = labels.id(&ItemKey::concept(c, t)).expect("concept label");
                        if !positives.contains(&id) {
                            positives.push(id);
                        }
                    }
                    examples.push(TrainingExample {
                        input: words,
                        positives,
                        setup,
                    });
                }
            }
        }
    }
    TrainingSet {
        setup,
        features,
        labels,
        examples,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub dim: usize,
    pub margin: f64,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial learning rate, decayed linearly to 0 over all updates.
    pub learning_rate: f64,
    pub rng_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            margin: 0.05,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.01,
            rng_seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.margin <= 0.0 || self.negatives == 0 || self.learning_rate < 0.0 {
            return Err(Error::InvalidArgument(
                "embedding hyperparameters need dim > 0, margin > 0, negatives >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which table of an [`EmbeddingSpace`] to search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pool {
    Features,
    Labels,
    /// Only the user entries of the label table.
    Users,
}

/// Trained (or freshly initialised) feature and label tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSpace {
    setup: Setup,
    features: Registry,
    labels: Registry,
    feature_vectors: Matrix,
    label_vectors: Matrix,
    /// Mean pair loss of every completed epoch.
    pub epoch_losses: Vec<f64>,
}

impl EmbeddingSpace {
    pub(crate) fn from_parts(
        setup: Setup,
        features: Registry,
        labels: Registry,
        feature_vectors: Matrix,
        label_vectors: Matrix,
    ) -> Self {
        Self {
            setup,
            features,
            labels,
            feature_vectors,
            label_vectors,
            epoch_losses: Vec::new(),
        }
    }

    /// A space over the registries of `set` with explicit tables, e.g. for a
    /// custom initialisation.
    pub fn with_tables(
        set: &TrainingSet,
        feature_vectors: Matrix,
        label_vectors: Matrix,
    ) -> Result<Self> {
        if feature_vectors.n_rows() != set.features.len()
            || label_vectors.n_rows() != set.labels.len()
            || feature_vectors.n_cols() != label_vectors.n_cols()
            || feature_vectors.n_cols() == 0
        {
            return Err(Error::InvalidArgument(
                "table shapes must match the registries and share d > 0".into(),
            ));
        }
        Ok(Self::from_parts(
            set.setup,
            set.features.clone(),
            set.labels.clone(),
            feature_vectors,
            label_vectors,
        ))
    }

    pub fn setup(&self) -> Setup {
        self.setup
    }

    pub fn dim(&self) -> usize {
        self.feature_vectors.n_cols()
    }

    pub fn features(&self) -> &Registry {
        &self.features
    }

    pub fn labels(&self) -> &Registry {
        &self.labels
    }

    pub fn feature_vector(&self, id: u32) -> &[f64] {
        self.feature_vectors.row(id as usize)
    }

    pub fn label_vector(&self, id: u32) -> &[f64] {
        self.label_vectors.row(id as usize)
    }

    pub(crate) fn feature_vector_mut(&mut self, id: u32) -> &mut [f64] {
        self.feature_vectors.row_mut(id as usize)
    }

    pub(crate) fn label_vector_mut(&mut self, id: u32) -> &mut [f64] {
        self.label_vectors.row_mut(id as usize)
    }

    /// Vector of any item, looked up in whichever table holds it: words are
    /// features, users are labels, and concepts are features in CW-U but
    /// labels in W-UC.
    pub fn item_vector(&self, key: &ItemKey) -> Option<&[f64]> {
        if let Some(id) = self.features.id(key) {
            return Some(self.feature_vector(id));
        }
        self.labels.id(key).map(|id| self.label_vector(id))
    }

    /// Hash of the setup, registries and every coordinate. Stable within a
    /// process; used to key caches of derived results.
    pub fn checksum(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.setup.hash(&mut h);
        self.features.keys.hash(&mut h);
        self.labels.keys.hash(&mut h);
        for x in self
            .feature_vectors
            .as_slice()
            .iter()
            .chain(self.label_vectors.as_slice())
        {
            x.to_bits().hash(&mut h);
        }
        h.finish()
    }

    /// Sum of the feature vectors of `bag`; unknown ids are skipped.
    pub fn embed_document(&self, bag: &[u32]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        let mut any = false;
        for &id in bag {
            if (id as usize) < self.features.len() {
                crate::linalg::axpy(1.0, self.feature_vector(id), &mut out);
                any = true;
            }
        }
        if any {
            Ok(out)
        } else {
            Err(Error::NoEmbeddableContent)
        }
    }

    /// Rows are the users' label vectors in corpus order.
    pub fn user_matrix(&self, corpus: &Corpus) -> Result<UserMatrix> {
        let mut data = Vec::with_capacity(corpus.n_users() * self.dim());
        for u in corpus.user_ids() {
            let id = self
                .labels
                .id(&ItemKey::user(u))
                .ok_or_else(|| Error::UnknownUser(u.clone()))?;
            data.extend_from_slice(self.label_vector(id));
        }
        UserMatrix::new(
            corpus.user_ids().to_vec(),
            Matrix::from_vec(corpus.n_users(), self.dim(), data),
            Provenance::Embedding(self.setup),
        )
    }

    /// The `top_k` most cosine-similar entries of `pool`, ties by ascending key.
    pub fn nearest(&self, query: &[f64], pool: Pool, top_k: usize) -> Result<Vec<(ItemKey, f64)>> {
        if top_k < 1 {
            return Err(Error::InvalidArgument("top_k must be >= 1".into()));
        }
        let (registry, vectors) = match pool {
            Pool::Features => (&self.features, &self.feature_vectors),
            Pool::Labels | Pool::Users => (&self.labels, &self.label_vectors),
        };
        let mut scored: Vec<(ItemKey, f64)> = registry
            .keys()
            .iter()
            .enumerate()
            .filter(|(_, k)| pool != Pool::Users || matches!(k, ItemKey::User { .. }))
            .map(|(i, k)| (k.clone(), cosine(query, vectors.row(i))))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(top_k);
        Ok(scored)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::corpus::{Post, VISUAL_CONCEPTS};

    fn corpus() -> Corpus {
        let mut concepts = BTreeMap::new();
        concepts.insert(
            VISUAL_CONCEPTS.to_string(),
            vec!["flag".to_string(), "crowd".to_string(), "car".to_string()],
        );
        let posts = vec![
            Post {
                post_id: "1".into(),
                user_id: "a".into(),
                text: "one two three four".into(),
                channels: concepts,
                reply_to_user: None,
                category: None,
            },
            Post {
                post_id: "2".into(),
                user_id: "a".into(),
                text: "words only".into(),
                channels: BTreeMap::new(),
                reply_to_user: None,
                category: None,
            },
        ];
        Corpus::from_posts(posts, 1).unwrap()
    }

    #[test]
    fn setup_parsing() {
        assert_eq!("CW-U".parse::<Setup>().unwrap(), Setup::CwU);
        assert_eq!("wuc".parse::<Setup>().unwrap(), Setup::WuC);
        assert!(matches!(
            "uwc".parse::<Setup>(),
            Err(Error::UnknownSetup(_))
        ));
    }

    #[test]
    fn cwu_examples() {
        let set = build_examples(&corpus(), Setup::CwU);
        // post 1 → concepts + words; post 2 → words only
        assert_eq!(set.examples.len(), 3);
        let user = set.labels.id(&ItemKey::user("a")).unwrap();
        assert!(set.examples.iter().all(|e| e.positives == [user]));
        assert_eq!(set.examples[0].input.len(), 3);
        assert_eq!(set.examples[1].input.len(), 4);
        assert_eq!(set.examples[2].input.len(), 2);
        assert_eq!(set.labels.len(), 1);
    }

    #[test]
    fn wuc_examples() {
        let set = build_examples(&corpus(), Setup::WuC);
        assert_eq!(set.examples.len(), 2);
        let first = &set.examples[0];
        assert_eq!(first.input.len(), 4);
        assert_eq!(first.positives.len(), 4);
        assert_eq!(set.labels.key(first.positives[0]), &ItemKey::user("a"));
        assert!(first.positives[1..]
            .iter()
            .all(|&p| matches!(set.labels.key(p), ItemKey::Concept { .. })));
    }

    fn tiny_space() -> EmbeddingSpace {
        let features = Registry::new(vec![
            ItemKey::word("x"),
            ItemKey::word("y"),
            ItemKey::word("z"),
        ]);
        let labels = Registry::new(vec![
            ItemKey::user("a"),
            ItemKey::user("b"),
            ItemKey::concept("hashtags", "#t"),
        ]);
        EmbeddingSpace::from_parts(
            Setup::WuC,
            features,
            labels,
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.5, 2.0], vec![-1.0, 1.0]]),
            // rows follow the sorted registry: concept, then users
            Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]),
        )
    }

    #[test]
    fn document_embedding_is_a_sum() {
        let s = tiny_space();
        assert_eq!(s.embed_document(&[0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(s.embed_document(&[0, 0]).unwrap(), vec![2.0, 0.0]);
        assert_eq!(s.embed_document(&[1, 2]).unwrap(), vec![-0.5, 3.0]);
        assert_eq!(s.embed_document(&[1, 99]).unwrap(), vec![0.5, 2.0]);
        assert!(matches!(
            s.embed_document(&[99]),
            Err(Error::NoEmbeddableContent)
        ));
    }

    #[test]
    fn nearest_orders_and_truncates() {
        let s = tiny_space();
        let q = s.feature_vector(1).to_vec();
        let hits = s.nearest(&q, Pool::Features, 10).unwrap();
        assert_eq!(hits.len(), 3);
        assert_eq!(hits[0].0, ItemKey::word("y"));
        assert!((hits[0].1 - 1.0).abs() < 1e-6);
        let users = s.nearest(&[1.0, 1.0], Pool::Users, 5).unwrap();
        // both users tie at cos = 1/√2, ascending id breaks the tie
        assert_eq!(
            users.iter().map(|h| h.0.name()).collect::<Vec<_>>(),
            ["a", "b"]
        );
        assert!(s.nearest(&q, Pool::Labels, 0).is_err());
    }

    #[test]
    fn item_vector_lookup_by_setup() {
        let s = tiny_space();
        assert_eq!(
            s.item_vector(&ItemKey::concept("hashtags", "#t")).unwrap(),
            &[1.0, 1.0]
        );
        assert_eq!(s.item_vector(&ItemKey::word("z")).unwrap(), &[-1.0, 1.0]);
        assert!(s.item_vector(&ItemKey::user("nobody")).is_none());
    }
}
