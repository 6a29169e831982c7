//! Single-threaded SGD with negative sampling.
//!
//! Training is deterministic: initialisation draws from ChaCha stream 0 of
//! the seed, shuffling and negative sampling from stream 1, and every
//! (document, positive) pair is applied immediately as one update.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pair_loss, EmbeddingSpace, Hyperparams, TrainingSet};
use crate::linalg::{axpy, Matrix};
use crate::Result;

const MAX_NEGATIVE_TRIES: usize = 100;

/// Fresh tables with coordinates uniform in `[-1/d, 1/d]`.
pub fn initialize(set: &TrainingSet, dim: usize, rng_seed: u64) -> EmbeddingSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    rng.set_stream(0);
    let bound = 1.0 / dim as f64;
    let mut table = |rows: usize| {
        Matrix::from_vec(
            rows,
            dim,
            (0..rows * dim)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
        )
    };
    let features = table(set.features.len());
    let labels = table(set.labels.len());
    EmbeddingSpace::from_parts(
        set.setup,
        set.features.clone(),
        set.labels.clone(),
        features,
        labels,
    )
}

/// Draws up to `k` label ids uniformly, rejecting the example's positives.
fn sample_negatives(rng: &mut impl Rng, n_labels: usize, positives: &[u32], k: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        for _ in 0..MAX_NEGATIVE_TRIES {
            let candidate = rng.random_range(0..n_labels) as u32;
            if !positives.contains(&candidate) {
                out.push(candidate);
                break;
            }
        }
    }
    out
}

pub fn train(set: &TrainingSet, hp: &Hyperparams) -> Result<EmbeddingSpace> {
    hp.validate()?;
    let mut space = initialize(set, hp.dim, hp.rng_seed);
    let mut rng = ChaCha8Rng::seed_from_u64(hp.rng_seed);
    rng.set_stream(1);

    let pairs_per_epoch: usize = set.examples.iter().map(|e| e.positives.len()).sum();
    let total_updates = (hp.epochs * pairs_per_epoch).max(1) as f64;
    let n_labels = set.labels.len();
    let mut order: Vec<usize> = (0..set.examples.len()).collect();
    let mut step = 0usize;

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for &i in &order {
            let example = &set.examples[i];
            for &positive in &example.positives {
                let negatives =
                    sample_negatives(&mut rng, n_labels, &example.positives, hp.negatives);
                let lr = hp.learning_rate * (1.0 - step as f64 / total_updates);
                step += 1;

                let document = space.embed_document(&example.input)?;
                let pair = {
                    let negs: Vec<&[f64]> =
                        negatives.iter().map(|&n| space.label_vector(n)).collect();
                    pair_loss(&document, space.label_vector(positive), &negs, hp.margin)
                };
                epoch_loss += pair.loss;
                if pair.loss == 0.0 {
                    continue;
                }
                for &f in &example.input {
                    axpy(-lr, &pair.grad_document, space.feature_vector_mut(f));
                }
                axpy(-lr, &pair.grad_positive, space.label_vector_mut(positive));
                for (&n, g) in negatives.iter().zip(&pair.grad_negatives) {
                    axpy(-lr, g, space.label_vector_mut(n));
                }
            }
        }
        space
            .epoch_losses
            .push(epoch_loss / pairs_per_epoch.max(1) as f64);
    }
    Ok(space)
}
