//! Margin ranking loss over cosine similarity and its analytic gradients.

use std::collections::BTreeMap;

use super::{EmbeddingSpace, TrainingExample};
use crate::linalg::{dot, norm};
use crate::{Error, Result};

/// Loss of one (document, positive label) pair against its negatives, with
/// gradients w.r.t. the document vector and every label vector involved.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub grad_document: Vec<f64>,
    pub grad_positive: Vec<f64>,
    pub grad_negatives: Vec<Vec<f64>>,
    /// A zero-norm vector was met; its cosine was taken as 0.
    pub zero_norm: bool,
}

/// Cosine and its gradients w.r.t. both arguments. Zero norms give 0 for all.
fn cosine_with_grads(x: &[f64], y: &[f64]) -> (f64, Vec<f64>, Vec<f64>, bool) {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return (0.0, vec![0.0; x.len()], vec![0.0; y.len()], true);
    }
    let c = dot(x, y) / (nx * ny);
    let gx = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| yi / (nx * ny) - c * xi / (nx * nx))
        .collect();
    let gy = x
        .iter()
        .zip(y)
        .map(|(xi, yi)| xi / (nx * ny) - c * yi / (ny * ny))
        .collect();
    (c, gx, gy, false)
}

/// `Σᵢ max(0, margin − cos(a, b) + cos(a, nᵢ))`.
pub fn pair_loss(
    document: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    margin: f64,
) -> PairLoss {
    let d = document.len();
    let (pos_sim, ga_pos, gb_pos, mut zero_norm) = cosine_with_grads(document, positive);
    let mut out = PairLoss {
        loss: 0.0,
        grad_document: vec![0.0; d],
        grad_positive: vec![0.0; d],
        grad_negatives: Vec::with_capacity(negatives.len()),
        zero_norm: false,
    };
    for neg in negatives {
        let (neg_sim, ga_neg, gn, z) = cosine_with_grads(document, neg);
        zero_norm |= z;
        let hinge = margin - pos_sim + neg_sim;
        if hinge > 0.0 {
            out.loss += hinge;
            for j in 0..d {
                out.grad_document[j] += ga_neg[j] - ga_pos[j];
                out.grad_positive[j] -= gb_pos[j];
            }
            out.grad_negatives.push(gn);
        } else {
            out.grad_negatives.push(vec![0.0; d]);
        }
    }
    out.zero_norm = zero_norm;
    out
}

/// Gradients of an example's loss, keyed by table row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExampleGradients {
    pub loss: f64,
    pub features: BTreeMap<u32, Vec<f64>>,
    pub labels: BTreeMap<u32, Vec<f64>>,
    pub zero_norm: bool,
}

/// Loss of a whole example: one pair term per positive label, each with its
/// own negatives (`negatives[i]` belongs to `example.positives[i]`).
///
/// Negatives must be disjoint from the example's positives.
pub fn example_loss(
    space: &EmbeddingSpace,
    example: &TrainingExample,
    negatives: &[Vec<u32>],
    margin: f64,
) -> Result<ExampleGradients> {
    if negatives.len() != example.positives.len() {
        return Err(Error::InvalidArgument(
            "one negative list per positive label required".into(),
        ));
    }
    if negatives
        .iter()
        .flatten()
        .any(|n| example.positives.contains(n))
    {
        return Err(Error::InvalidArgument(
            "negatives overlap the positive labels".into(),
        ));
    }
    let document = space.embed_document(&example.input)?;
    let d = space.dim();
    let mut out = ExampleGradients::default();
    for (&pos, negs) in example.positives.iter().zip(negatives) {
        let neg_vectors: Vec<&[f64]> = negs.iter().map(|&n| space.label_vector(n)).collect();
        let pair = pair_loss(&document, space.label_vector(pos), &neg_vectors, margin);
        out.loss += pair.loss;
        out.zero_norm |= pair.zero_norm;
        for &f in &example.input {
            let g = out.features.entry(f).or_insert_with(|| vec![0.0; d]);
            g.iter_mut()
                .zip(&pair.grad_document)
                .for_each(|(a, b)| *a += b);
        }
        let mut add_label = |id: u32, grad: &[f64]| {
            let g = out.labels.entry(id).or_insert_with(|| vec![0.0; d]);
            g.iter_mut().zip(grad).for_each(|(a, b)| *a += b);
        };
        add_label(pos, &pair.grad_positive);
        for (&n, g) in negs.iter().zip(&pair.grad_negatives) {
            add_label(n, g);
        }
    }
    Ok(out)
}
