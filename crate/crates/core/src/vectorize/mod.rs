//! TF-IDF user vectors per channel, early fusion and PCA reduction.

mod pca;
pub(crate) mod user_matrix;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, CONCEPT_CHANNELS, WORDS};
use crate::linalg::{normalize, Matrix};
use crate::{Error, Result};

pub use pca::{pca_fit, PcaModel};
pub use user_matrix::{Provenance, UserMatrix};

/// Default working dimensionality of user representations.
pub const DEFAULT_DIM: usize = 128;

/// `tf * (ln((1 + n_docs) / (1 + df)) + 1)`, with users as documents.
#[inline]
pub fn tfidf_weight(tf: u32, n_docs: usize, df: usize) -> f64 {
    tf as f64 * (((1.0 + n_docs as f64) / (1.0 + df as f64)).ln() + 1.0)
}

/// User × term weights for one channel. Rows follow the corpus user order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalityMatrix {
    pub channel: String,
    pub user_ids: Vec<String>,
    /// Column labels.
    pub terms: Vec<String>,
    pub values: Matrix,
}

/// TF-IDF matrix over the whole vocabulary of `channel`.
pub fn tfidf(corpus: &Corpus, channel: &str) -> Result<ModalityMatrix> {
    tfidf_min_df(corpus, channel, 1)
}

/// TF-IDF matrix keeping only terms used by at least `min_df` users.
pub fn tfidf_min_df(corpus: &Corpus, channel: &str, min_df: usize) -> Result<ModalityMatrix> {
    let index = corpus.channel(channel)?;
    let vocab = &index.vocabulary;
    let n = corpus.n_users();

    let mut columns = vec![None; vocab.len()];
    let mut terms = Vec::new();
    for t in 0..vocab.len() as u32 {
        if index.document_frequency(t) >= min_df {
            columns[t as usize] = Some(terms.len());
            terms.push(vocab.token(t).to_string());
        }
    }

    let mut values = Matrix::zeros(n, terms.len());
    for row in 0..n {
        for &(t, tf) in index.user_terms(row) {
            if let Some(col) = columns[t as usize] {
                values.row_mut(row)[col] = tfidf_weight(tf, n, index.document_frequency(t));
            }
        }
    }
    Ok(ModalityMatrix {
        channel: channel.to_string(),
        user_ids: corpus.user_ids().to_vec(),
        terms,
        values,
    })
}

/// Scales every non-zero row to unit L2 norm.
pub fn l2_normalize(matrix: &ModalityMatrix) -> ModalityMatrix {
    let mut out = matrix.clone();
    for i in 0..out.values.n_rows() {
        normalize(out.values.row_mut(i));
    }
    out
}

/// Column-wise concatenation in the given order.
pub fn fuse(matrices: &[ModalityMatrix]) -> Result<Matrix> {
    let Some(first) = matrices.first() else {
        return Err(Error::InvalidArgument("nothing to fuse".into()));
    };
    if matrices.iter().any(|m| m.user_ids != first.user_ids) {
        return Err(Error::RowMismatch);
    }
    let n = first.user_ids.len();
    let width: usize = matrices.iter().map(|m| m.values.n_cols()).sum();
    let mut data = Vec::with_capacity(n * width);
    for i in 0..n {
        for m in matrices {
            data.extend_from_slice(m.values.row(i));
        }
    }
    Ok(Matrix::from_vec(n, width, data))
}

/// Where PCA is applied in the TF-IDF pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaMode {
    /// One PCA over the fused vector.
    #[default]
    AfterFusion,
    /// One PCA per channel (dimensions split evenly), then concatenation.
    PerChannel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfOptions {
    pub dim: usize,
    /// Words used by fewer users are dropped before weighting. Concept
    /// channels are never pruned.
    pub min_word_df: usize,
    pub pca_mode: PcaMode,
}

impl Default for TfidfOptions {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            min_word_df: 2,
            pca_mode: PcaMode::AfterFusion,
        }
    }
}

/// The standard channel order used for fusion.
pub fn default_channels() -> Vec<String> {
    std::iter::once(WORDS)
        .chain(CONCEPT_CHANNELS)
        .map(str::to_string)
        .collect()
}

/// TF-IDF per channel → L2 normalisation → fusion → PCA.
pub fn build_tfidf_representation(
    corpus: &Corpus,
    channels: &[String],
    options: &TfidfOptions,
) -> Result<UserMatrix> {
    if channels.is_empty() {
        return Err(Error::InvalidArgument("no channels selected".into()));
    }
    let normalized = channels
        .iter()
        .map(|ch| {
            let min_df = if ch == WORDS { options.min_word_df } else { 1 };
            tfidf_min_df(corpus, ch, min_df).map(|m| l2_normalize(&m))
        })
        .collect::<Result<Vec<_>>>()?;

    let reduced = match options.pca_mode {
        PcaMode::AfterFusion => {
            let fused = fuse(&normalized)?;
            pca_fit(&fused, options.dim)?.transform(&fused)
        }
        PcaMode::PerChannel => {
            let k = channels.len();
            let parts = normalized
                .iter()
                .enumerate()
                .map(|(i, m)| {
                    let share = options.dim / k + usize::from(i < options.dim % k);
                    let reduced = if share == 0 {
                        Matrix::zeros(m.values.n_rows(), 0)
                    } else {
                        pca_fit(&m.values, share)?.transform(&m.values)
                    };
                    Ok(ModalityMatrix {
                        values: reduced,
                        terms: Vec::new(),
                        ..m.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            fuse(&parts)?
        }
    };
    UserMatrix::new(
        corpus.user_ids().to_vec(),
        reduced,
        Provenance::TfidfFusedPca,
    )
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use proptest::prelude::*;

    use super::*;
    use crate::corpus::{generate_synthetic, Post, SynthConfig};
    use crate::linalg::{cosine, norm};

    fn post(id: &str, user: &str, text: &str) -> Post {
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
    fn weight_examples() {
        assert_eq!(tfidf_weight(1, 7, 7), 1.0);
        assert!((tfidf_weight(2, 10, 1) - 5.409_496_184_476_851).abs() < 1e-9);
    }

    #[test]
    fn shared_term_weight_is_one() {
        let posts = vec![
            post("1", "a", "x y"),
            post("2", "b", "x"),
            post("3", "c", "x"),
        ];
        let c = Corpus::from_posts(posts, 1).unwrap();
        let m = tfidf(&c, WORDS).unwrap();
        let x = m.terms.iter().position(|t| t == "x").unwrap();
        let y = m.terms.iter().position(|t| t == "y").unwrap();
        for i in 0..3 {
            assert_eq!(m.values.get(i, x), 1.0);
        }
        assert_eq!(m.values.get(1, y), 0.0);
    }

    #[test]
    fn empty_vocabulary_gives_zero_columns() {
        let c = Corpus::from_posts(vec![post("1", "a", "x")], 1).unwrap();
        let m = tfidf(&c, "hashtags").unwrap();
        assert_eq!((m.values.n_rows(), m.values.n_cols()), (1, 0));
    }

    #[test]
    fn normalize_rows() {
        let m = ModalityMatrix {
            channel: "t".into(),
            user_ids: vec!["a".into(), "b".into(), "c".into()],
            terms: vec!["p".into(), "q".into()],
            values: Matrix::from_rows(&[vec![3.0, 4.0], vec![0.0, 0.0], vec![1.0, 0.0]]),
        };
        let n = l2_normalize(&m);
        assert_eq!(n.values.row(0), &[0.6, 0.8]);
        assert_eq!(n.values.row(1), &[0.0, 0.0]);
        assert_eq!(n.values.row(2), &[1.0, 0.0]);
    }

    fn modality(users: &[&str], rows: Vec<Vec<f64>>) -> ModalityMatrix {
        ModalityMatrix {
            channel: "t".into(),
            user_ids: users.iter().map(|u| u.to_string()).collect(),
            terms: Vec::new(),
            values: Matrix::from_rows(&rows),
        }
    }

    #[test]
    fn fuse_concatenates_and_checks_rows() {
        let a = modality(&["a", "b"], vec![vec![1.0; 5], vec![2.0; 5]]);
        let b = modality(&["a", "b"], vec![vec![3.0; 7], vec![4.0; 7]]);
        assert_eq!(fuse(std::slice::from_ref(&a)).unwrap(), a.values);
        let f = fuse(&[a.clone(), b]).unwrap();
        assert_eq!(f.n_cols(), 12);
        assert_eq!(&f.row(1)[..5], a.values.row(1));
        let c = modality(&["b", "a"], vec![vec![1.0], vec![1.0]]);
        assert!(matches!(fuse(&[a, c]), Err(Error::RowMismatch)));
    }

    proptest! {
        #[test]
        fn fused_norm_bounded_and_channels_recoverable(
            rows in prop::collection::vec(prop::collection::vec(0.0f64..5.0, 6), 3),
        ) {
            let users = ["a", "b", "c"];
            let a = l2_normalize(&modality(&users, rows.iter().map(|r| r[..2].to_vec()).collect()));
            let b = l2_normalize(&modality(&users, rows.iter().map(|r| r[2..].to_vec()).collect()));
            let f = fuse(&[a.clone(), b.clone()]).unwrap();
            for i in 0..3 {
                prop_assert!(norm(f.row(i)) <= 2f64.sqrt() + 1e-12);
                prop_assert_eq!(&f.row(i)[..2], a.values.row(i));
                prop_assert_eq!(&f.row(i)[2..], b.values.row(i));
            }
        }

        #[test]
        fn weight_monotone_in_tf(tf in 0u32..1000, n in 1usize..500, df_frac in 0.0f64..1.0) {
            let df = ((n as f64 * df_frac) as usize).max(1);
            prop_assert!(tfidf_weight(tf + 1, n, df) >= tfidf_weight(tf, n, df));
        }
    }

    #[test]
    fn one_channel_small_vocab_dim_is_rank() {
        let posts = vec![
            post("1", "a", "x y"),
            post("2", "b", "x"),
            post("3", "c", "y z"),
            post("4", "d", "z x"),
        ];
        let c = Corpus::from_posts(posts, 1).unwrap();
        let opts = TfidfOptions {
            min_word_df: 1,
            ..TfidfOptions::default()
        };
        let m = build_tfidf_representation(&c, &[WORDS.to_string()], &opts).unwrap();
        // 4 rows, 3 columns, centred: rank ≤ 3
        assert!(m.dim() <= 3 && m.dim() >= 1);
    }

    #[test]
    fn identical_users_identical_rows() {
        let posts = vec![
            post("1", "a", "x y"),
            post("2", "b", "x y"),
            post("3", "c", "z x"),
            post("4", "d", "y w w"),
        ];
        let c = Corpus::from_posts(posts, 1).unwrap();
        let opts = TfidfOptions {
            min_word_df: 1,
            ..TfidfOptions::default()
        };
        let m = build_tfidf_representation(&c, &[WORDS.to_string()], &opts).unwrap();
        assert_eq!(m.row(0), m.row(1));
    }

    #[test]
    fn synthetic_communities_cluster() {
        let cfg = SynthConfig::default();
        let c = generate_synthetic(&cfg).unwrap();
        for mode in [PcaMode::AfterFusion, PcaMode::PerChannel] {
            let opts = TfidfOptions {
                pca_mode: mode,
                ..TfidfOptions::default()
            };
            let m = build_tfidf_representation(&c, &default_channels(), &opts).unwrap();
            assert!(m.dim() <= DEFAULT_DIM);
            let community: Vec<_> = c.users().map(|u| u.categories.clone()).collect();
            let (mut intra, mut inter) = ((0.0, 0usize), (0.0, 0usize));
            for i in 0..c.n_users() {
                for j in i + 1..c.n_users() {
                    let s = cosine(m.row(i), m.row(j));
                    let acc = if community[i] == community[j] {
                        &mut intra
                    } else {
                        &mut inter
                    };
                    acc.0 += s;
                    acc.1 += 1;
                }
            }
            assert!(intra.0 / intra.1 as f64 > inter.0 / inter.1 as f64 + 0.1);
        }
    }
}
