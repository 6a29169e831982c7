//! Browser demo: a synthetic collection drawn as a map, user profiles and
//! relevance-feedback ranking, all computed in WebAssembly.
//!
//! [`Demo`] holds the logic and is usable from native Rust; [`WasmDemo`] is
//! the JavaScript binding and exchanges JSON strings.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::Serialize;
use usermap_core::corpus::{generate_synthetic, Corpus, SynthConfig};
use usermap_core::embed::{build_examples, train, EmbeddingSpace, Hyperparams, Setup};
use usermap_core::interactive::{start_session, Session};
use usermap_core::layout::layout_2d;
use usermap_core::profile::{
    build_profile, default_community_count, detect_communities, ProfileEntry,
};
use usermap_core::vectorize::{
    build_tfidf_representation, default_channels, TfidfOptions, UserMatrix,
};
use wasm_bindgen::prelude::*;

const DIM: usize = 32;
const TOP_N: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Point {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub community: usize,
    pub posts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub round: usize,
    pub top: Vec<String>,
    /// Every user's score scaled to [0, 1], in point order.
    pub scores: Vec<f64>,
}

pub struct Demo {
    corpus: Corpus,
    space: EmbeddingSpace,
    users: Arc<UserMatrix>,
    points: Vec<Point>,
    session: Session,
    seed: u64,
}

impl Demo {
    /// Generates a collection of `communities × users_per_community` users
    /// and builds every model the page needs.
    pub fn new(
        communities: usize,
        users_per_community: usize,
        mixing: f64,
        seed: u64,
    ) -> Result<Self, String> {
        let corpus = generate_synthetic(&SynthConfig {
            n_communities: communities,
            users_per_community,
            posts_per_user: (5, 15),
            mixing,
            rng_seed: seed,
            ..SynthConfig::default()
        })
        .map_err(|e| e.to_string())?;
        let options = TfidfOptions {
            dim: DIM,
            ..TfidfOptions::default()
        };
        let users = Arc::new(
            build_tfidf_representation(&corpus, &default_channels(), &options)
                .map_err(|e| e.to_string())?,
        );
        let hp = Hyperparams {
            dim: DIM,
            epochs: 3,
            rng_seed: seed,
            ..Hyperparams::default()
        };
        let space = train(&build_examples(&corpus, Setup::CwU), &hp).map_err(|e| e.to_string())?;
        let k = default_community_count(&corpus);
        let assignment = detect_communities(&users, k, seed).map_err(|e| e.to_string())?;
        let layout = layout_2d(&users).map_err(|e| e.to_string())?;
        let points = corpus
            .user_ids()
            .iter()
            .zip(layout)
            .zip(&assignment.assignment)
            .map(|((id, [x, y]), &community)| Point {
                id: id.clone(),
                x,
                y,
                community,
                posts: corpus.user(id).map(|u| u.post_count()).unwrap_or(0),
            })
            .collect();
        let session = start_session(Arc::clone(&users), TOP_N, seed).map_err(|e| e.to_string())?;
        Ok(Self {
            corpus,
            space,
            users,
            points,
            session,
            seed,
        })
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn profile(&self, user_id: &str, nn: usize) -> Result<Vec<ProfileEntry>, String> {
        build_profile(&self.corpus, &self.space, user_id, nn)
            .map(|p| p.entries())
            .map_err(|e| e.to_string())
    }

    pub fn judge(&mut self, user_id: &str, relevant: bool) -> Result<(), String> {
        self.session
            .judge(&[(user_id.to_string(), relevant)])
            .map_err(|e| e.to_string())
    }

    pub fn judged(&self) -> BTreeSet<(String, bool)> {
        self.session
            .judgments()
            .iter()
            .map(|(u, j)| (u.clone(), j.relevant))
            .collect()
    }

    /// Trains on the judgments so far and returns the best unjudged users.
    pub fn rank(&mut self) -> Result<Ranking, String> {
        let result = self.session.train_and_rank().map_err(|e| e.to_string())?;
        let lo = result.scores.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = result
            .scores
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let scores = result
            .scores
            .iter()
            .map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.5 })
            .collect();
        Ok(Ranking {
            round: result.round,
            top: result.top,
            scores,
        })
    }

    /// Clears all judgments.
    pub fn reset(&mut self) -> Result<(), String> {
        self.session =
            start_session(Arc::clone(&self.users), TOP_N, self.seed).map_err(|e| e.to_string())?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct WasmDemo(Demo);

#[wasm_bindgen]
impl WasmDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        communities: usize,
        users_per_community: usize,
        mixing: f64,
        seed: u32,
    ) -> Result<WasmDemo, JsError> {
        Demo::new(communities, users_per_community, mixing, seed as u64)
            .map(WasmDemo)
            .map_err(|e| JsError::new(&e))
    }

    /// `[{id, x, y, community, posts}]`
    pub fn points(&self) -> Result<String, JsError> {
        to_json(&self.0.points())
    }

    /// `[{id, kind, channel?, usage, score_rank}]`
    pub fn profile(&self, user_id: &str, nn: usize) -> Result<String, JsError> {
        to_json(&self.0.profile(user_id, nn).map_err(|e| JsError::new(&e))?)
    }

    pub fn judge(&mut self, user_id: &str, relevant: bool) -> Result<(), JsError> {
        self.0
            .judge(user_id, relevant)
            .map_err(|e| JsError::new(&e))
    }

    /// `{round, top, scores}`
    pub fn rank(&mut self) -> Result<String, JsError> {
        to_json(&self.0.rank().map_err(|e| JsError::new(&e))?)
    }

    pub fn reset(&mut self) -> Result<(), JsError> {
        self.0.reset().map_err(|e| JsError::new(&e))
    }
}
