//! Relevance-feedback sessions.
//!
//! A session collects relevant/irrelevant judgments on users and, on every
//! rank call, trains a class-weighted linear SVM from scratch on the judged
//! users' vectors, scores everybody and returns the best unjudged users.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::dot;
use crate::vectorize::UserMatrix;
use crate::{Error, Result};

pub const DEFAULT_TOP_N: usize = 15;

/// Stream offset separating bootstrap draws from per-round training streams.
const BOOTSTRAP_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub relevant: bool,
    /// Rank calls completed when the judgment was made.
    pub round: usize,
}

/// A linear scorer `w·x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// Per-class weights `n / (2 n_class)` for labels `y ∈ {-1, +1}`.
pub fn class_weights(labels: &[f64]) -> (f64, f64) {
    let n = labels.len() as f64;
    let pos = labels.iter().filter(|y| **y > 0.0).count() as f64;
    let neg = n - pos;
    (n / (2.0 * pos), n / (2.0 * neg))
}

/// Class-weighted mean hinge loss plus `(λ/2)(‖w‖² + b²)`.
pub fn svm_objective(model: &LinearModel, xs: &[&[f64]], ys: &[f64], lambda: f64) -> f64 {
    let (cp, cn) = class_weights(ys);
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| {
            let c = if y > 0.0 { cp } else { cn };
            c * (1.0 - y * model.score(x)).max(0.0)
        })
        .sum();
    let sq_norm = dot(&model.weights, &model.weights) + model.bias * model.bias;
    hinge / ys.len() as f64 + 0.5 * lambda * sq_norm
}

/// Stochastic subgradient descent with step `1/(λt)`. The bias is treated
/// as the weight of a constant feature and shrinks with the weights. Samples are visited in a fresh shuffle every epoch.
///
/// Returns the iterate with the lowest objective among the zero model and
/// the end of every epoch, so the result is never worse than no model.
pub fn train_svm(
    xs: &[&[f64]],
    ys: &[f64],
    params: &SvmParams,
    rng: &mut ChaCha8Rng,
) -> Result<LinearModel> {
    let pos = ys.iter().filter(|y| **y > 0.0).count();
    if pos == 0 || pos == ys.len() {
        return Err(Error::NeedBothClasses);
    }
    if params.lambda <= 0.0 {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    let dim = xs[0].len();
    let (cp, cn) = class_weights(ys);
    let mut model = LinearModel::zeros(dim);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut t = 0usize;
    let mut best = (svm_objective(&model, xs, ys, params.lambda), model.clone());
    for _ in 0..params.epochs {
        order.shuffle(rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (params.lambda * t as f64);
            let (x, y) = (xs[i], ys[i]);
            let violated = y * model.score(x) < 1.0;
            let shrink = 1.0 - eta * params.lambda;
            model.weights.iter_mut().for_each(|w| *w *= shrink);
            model.bias *= shrink;
            if violated {
                let c = if y > 0.0 { cp } else { cn };
                let step = eta * c * y;
                model
                    .weights
                    .iter_mut()
                    .zip(x)
                    .for_each(|(w, xi)| *w += step * xi);
                model.bias += step;
            }
        }
        let objective = svm_objective(&model, xs, ys, params.lambda);
        if objective < best.0 {
            best = (objective, model.clone());
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    /// 1-based index of the rank call that produced this result.
    pub round: usize,
    /// Score of every user, aligned with the session matrix rows.
    pub scores: Vec<f64>,
    /// Best unjudged users, descending score, ties by ascending id.
    pub top: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Session {
    matrix: Arc<UserMatrix>,
    top_n: usize,
    rng_seed: u64,
    params: SvmParams,
    judgments: BTreeMap<String, Judgment>,
    round: usize,
    bootstrap_draws: u64,
    model: LinearModel,
}

pub fn start_session(matrix: Arc<UserMatrix>, top_n: usize, rng_seed: u64) -> Result<Session> {
    if matrix.n_users() == 0 {
        return Err(Error::InvalidArgument("representation has no users".into()));
    }
    let dim = matrix.dim();
    Ok(Session {
        matrix,
        top_n,
        rng_seed,
        params: SvmParams::default(),
        judgments: BTreeMap::new(),
        round: 0,
        bootstrap_draws: 0,
        model: LinearModel::zeros(dim),
    })
}

impl Session {
    pub fn with_params(mut self, params: SvmParams) -> Self {
        self.params = params;
        self
    }

    pub fn matrix(&self) -> &Arc<UserMatrix> {
        &self.matrix
    }

    pub fn top_n(&self) -> usize {
        self.top_n
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn model(&self) -> &LinearModel {
        &self.model
    }

    pub fn judgments(&self) -> &BTreeMap<String, Judgment> {
        &self.judgments
    }

    pub fn is_judged(&self, user_id: &str) -> bool {
        self.judgments.contains_key(user_id)
    }

    /// Records judgments; a later judgment of the same user replaces the
    /// earlier one. Nothing is recorded if any user is unknown.
    pub fn judge(&mut self, judgments: &[(String, bool)]) -> Result<()> {
        if let Some((u, _)) = judgments
            .iter()
            .find(|(u, _)| self.matrix.row_of(u).is_none())
        {
            return Err(Error::UnknownUser(u.clone()));
        }
        for (u, relevant) in judgments {
            self.judgments.insert(
                u.clone(),
                Judgment {
                    relevant: *relevant,
                    round: self.round,
                },
            );
        }
        Ok(())
    }

    pub fn remove_judgment(&mut self, user_id: &str) -> Option<Judgment> {
        self.judgments.remove(user_id)
    }

    /// Retrains the classifier on all judgments and ranks every user.
    pub fn train_and_rank(&mut self) -> Result<RankResult> {
        let mut xs = Vec::with_capacity(self.judgments.len());
        let mut ys = Vec::with_capacity(self.judgments.len());
        for (u, j) in &self.judgments {
            let row = self.matrix.row_of(u).expect("judged users exist");
            xs.push(self.matrix.row(row));
            ys.push(if j.relevant { 1.0 } else { -1.0 });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(self.round as u64);
        let model = train_svm(&xs, &ys, &self.params, &mut rng)?;
        let scores: Vec<f64> = self
            .matrix
            .vectors()
            .rows()
            .map(|x| model.score(x))
            .collect();
        self.model = model;
        self.round += 1;
        let top = self
            .unjudged_ranking(&scores)
            .into_iter()
            .take(self.top_n)
            .map(|i| self.matrix.user_ids()[i].clone())
            .collect();
        Ok(RankResult {
            round: self.round,
            scores,
            top,
        })
    }

    /// Rows of all unjudged users by descending score, ties by ascending id.
    pub fn unjudged_ranking(&self, scores: &[f64]) -> Vec<usize> {
        let ids = self.matrix.user_ids();
        let mut rows: Vec<usize> = (0..ids.len())
            .filter(|&i| !self.is_judged(&ids[i]))
            .collect();
        rows.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then_with(|| ids[a].cmp(&ids[b]))
        });
        rows
    }

    /// Up to `count` distinct unjudged users drawn uniformly. Each call uses
    /// a fresh random stream, so repeated calls give different samples.
    pub fn bootstrap_negatives(&mut self, count: usize) -> Result<Vec<String>> {
        let sample = self.bootstrap_sample(count, self.bootstrap_draws)?;
        self.bootstrap_draws += 1;
        Ok(sample)
    }

    /// Like [`Session::bootstrap_negatives`] but without touching the
    /// session: the random stream is picked by `draw`, so equal arguments on
    /// an unchanged session give the same sample.
    pub fn bootstrap_sample(&self, count: usize, draw: u64) -> Result<Vec<String>> {
        if count == 0 {
            return Err(Error::InvalidArgument("count must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        rng.set_stream(BOOTSTRAP_STREAM + draw);
        let unjudged: Vec<&String> = self
            .matrix
            .user_ids()
            .iter()
            .filter(|u| !self.is_judged(u))
            .collect();
        Ok(unjudged
            .choose_multiple(&mut rng, count)
            .map(|u| (*u).clone())
            .collect())
    }
}
