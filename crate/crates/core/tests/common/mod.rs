//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use usermap_core::corpus::{generate_synthetic, Corpus, SynthConfig};
use usermap_core::embed::{
    build_examples, example_loss, EmbeddingSpace, ItemKey, Setup, TrainingSet,
};
use usermap_core::linalg::Matrix;

pub fn random_table(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        dim,
        (0..rows * dim)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect(),
    )
}

/// Lowercase, split on anything that is not alphanumeric, drop empties.
pub fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// eigenvalues in decreasing order with unit eigenvectors as columns.
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| v.iter().map(|row| row[i]).collect())
        .collect();
    (values, vectors)
}

/// Average precision by explicit counting at every cut-off.
pub fn brute_force_ap(relevance: &[bool], n_relevant: usize) -> f64 {
    let mut total = 0.0;
    for k in 1..=relevance.len() {
        if relevance[k - 1] {
            let in_top_k = relevance[..k].iter().filter(|r| **r).count();
            total += in_top_k as f64 / k as f64;
        }
    }
    total / n_relevant as f64
}

/// Literal transcription of the iterative Borda profile selection: usage
/// counts from the raw posts, all three scores recomputed from scratch every
/// iteration, competition ranks, `m - position` points, lowest key on ties.
pub fn brute_force_profile(
    corpus: &Corpus,
    space: &EmbeddingSpace,
    user: &str,
    nn: usize,
) -> Vec<ItemKey> {
    let mut usage: BTreeMap<ItemKey, u32> = BTreeMap::new();
    for post in corpus.posts().filter(|p| p.user_id == user) {
        for w in tokens(&post.text) {
            *usage.entry(ItemKey::word(w)).or_default() += 1;
        }
        for (channel, list) in &post.channels {
            for t in list {
                *usage
                    .entry(ItemKey::concept(channel.clone(), t.clone()))
                    .or_default() += 1;
            }
        }
        if let Some(to) = &post.reply_to_user {
            if to != user && corpus.user_row(to).is_some() {
                *usage.entry(ItemKey::user(to.clone())).or_default() += 1;
            }
        }
    }
    let items: BTreeMap<ItemKey, (u32, Vec<f64>)> = usage
        .into_iter()
        .filter_map(|(k, n)| space.item_vector(&k).map(|v| (k, (n, v.to_vec()))))
        .collect();

    let dist = |a: &ItemKey, b: &ItemKey| -> f64 {
        if a == b {
            return 0.0;
        }
        let (x, y) = (&items[a].1, &items[b].1);
        let dot: f64 = x.iter().zip(y).map(|(p, q)| p * q).sum();
        let nx = x.iter().map(|p| p * p).sum::<f64>().sqrt();
        let ny = y.iter().map(|q| q * q).sum::<f64>().sqrt();
        if nx * ny == 0.0 {
            1.0
        } else {
            1.0 - dot / (nx * ny)
        }
    };
    // 0-based competition position: number of items strictly better.
    let position = |scores: &[f64], i: usize, higher_is_better: bool| -> usize {
        scores
            .iter()
            .filter(|&&s| {
                if higher_is_better {
                    s > scores[i]
                } else {
                    s < scores[i]
                }
            })
            .count()
    };

    let mut p: Vec<ItemKey> = items.keys().cloned().collect();
    let mut s: Vec<ItemKey> = Vec::new();
    while s.len() < nn && !p.is_empty() {
        let m = p.len();
        let su: Vec<f64> = p.iter().map(|i| items[i].0 as f64).collect();
        let sr: Vec<f64> = p
            .iter()
            .map(|i| p.iter().map(|j| dist(i, j)).sum())
            .collect();
        let sd: Vec<f64> = p
            .iter()
            .map(|i| s.iter().map(|j| dist(i, j)).sum())
            .collect();
        let points: Vec<usize> = (0..m)
            .map(|i| {
                (m - position(&su, i, true))
                    + (m - position(&sr, i, false))
                    + (m - position(&sd, i, true))
            })
            .collect();
        let best = *points.iter().max().unwrap();
        let winner = (0..m).find(|&i| points[i] == best).unwrap();
        s.push(p.remove(winner));
    }
    s
}

pub fn small_corpus() -> Corpus {
    generate_synthetic(&SynthConfig {
        users_per_community: 4,
        posts_per_user: (2, 3),
        ..SynthConfig::default()
    })
    .unwrap()
}

fn perturbed(
    set: &TrainingSet,
    fv: &Matrix,
    lv: &Matrix,
    feature: bool,
    row: u32,
    col: usize,
    delta: f64,
) -> EmbeddingSpace {
    let (mut fv, mut lv) = (fv.clone(), lv.clone());
    let table = if feature { &mut fv } else { &mut lv };
    table.row_mut(row as usize)[col] += delta;
    EmbeddingSpace::with_tables(set, fv, lv).unwrap()
}

/// For `instances` random (tables, example, negatives) draws, the relative
/// error `‖a − n‖ / max(‖a‖, ‖n‖)` between the analytic gradient `a` and the
/// central-difference gradient `n` over every touched coordinate. Draws that
/// sit within 1e-3 of a hinge kink are redrawn, since finite differences are
/// meaningless there.
pub fn gradient_errors(setup: Setup, instances: usize, seed: u64) -> Vec<f64> {
    const EPS: f64 = 1e-4;
    const DIM: usize = 6;
    const MARGIN: f64 = 0.05;
    let corpus = small_corpus();
    let set = build_examples(&corpus, setup);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::new();
    while errors.len() < instances {
        let fv = random_table(set.features.len(), DIM, &mut rng);
        let lv = random_table(set.labels.len(), DIM, &mut rng);
        let space = EmbeddingSpace::with_tables(&set, fv.clone(), lv.clone()).unwrap();
        let example = set.examples.choose(&mut rng).unwrap();
        let negatives: Vec<Vec<u32>> = example
            .positives
            .iter()
            .map(|_| {
                let mut negs = Vec::new();
                while negs.len() < 3 {
                    let n = rng.random_range(0..set.labels.len() as u32);
                    if !example.positives.contains(&n) {
                        negs.push(n);
                    }
                }
                negs
            })
            .collect();
        let analytic = example_loss(&space, example, &negatives, MARGIN).unwrap();
        let doc = space.embed_document(&example.input).unwrap();
        let cos = |a: &[f64], b: &[f64]| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot / (a.iter().map(|x| x * x).sum::<f64>().sqrt()
                * b.iter().map(|y| y * y).sum::<f64>().sqrt())
        };
        let near_kink = example.positives.iter().zip(&negatives).any(|(&p, negs)| {
            let pos = cos(&doc, space.label_vector(p));
            negs.iter()
                .any(|&n| (MARGIN - pos + cos(&doc, space.label_vector(n))).abs() < 1e-3)
        });
        if near_kink {
            continue;
        }
        let (mut a_all, mut n_all) = (Vec::new(), Vec::new());
        let mut check = |feature: bool, row: u32, grad: Option<&Vec<f64>>| {
            for col in 0..DIM {
                let loss = |delta| {
                    example_loss(
                        &perturbed(&set, &fv, &lv, feature, row, col, delta),
                        example,
                        &negatives,
                        MARGIN,
                    )
                    .unwrap()
                    .loss
                };
                n_all.push((loss(EPS) - loss(-EPS)) / (2.0 * EPS));
                a_all.push(grad.map_or(0.0, |g| g[col]));
            }
        };
        let features: BTreeSet<u32> = example.input.iter().copied().collect();
        for f in features {
            check(true, f, analytic.features.get(&f));
        }
        let labels: BTreeSet<u32> = example
            .positives
            .iter()
            .chain(negatives.iter().flatten())
            .copied()
            .collect();
        for l in labels {
            check(false, l, analytic.labels.get(&l));
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = a_all.iter().zip(&n_all).map(|(a, n)| a - n).collect();
        let scale = norm(&a_all).max(norm(&n_all));
        let worst = if scale == 0.0 {
            0.0
        } else {
            norm(&diff) / scale
        };
        errors.push(worst);
    }
    errors
}
