//! JSON endpoints. Handlers are thin adapters over the core crate.

use std::collections::BTreeSet;
use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use usermap_core::corpus::WORDS;
use usermap_core::interactive::RankResult;
use usermap_core::profile::{
    build_community_profile, build_profile, Profile, ProfileEntry, Subject, DEFAULT_PROFILE_SIZE,
};

use crate::error::{ApiError, ApiResult};
use crate::state::AppState;

pub const DEFAULT_PAGE_SIZE: usize = 50;
const MAX_PAGE_SIZE: usize = 1000;
const DEFAULT_BOOTSTRAP: usize = 15;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/overview", get(overview))
        .route("/users", get(users))
        .route("/users/{id}/profile", get(user_profile))
        .route("/communities/{idx}/profile", get(community_profile))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", delete(delete_session))
        .route("/sessions/{id}/judgments", post(judge))
        .route("/sessions/{id}/rank", post(rank))
        .route("/sessions/{id}/bootstrap", get(bootstrap))
        .with_state(state)
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(t)| t)
        .map_err(|e| ApiError::bad_request("INVALID_QUERY", e.body_text()))
}

fn body<T>(b: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    b.map(|Json(t)| t)
        .map_err(|e| ApiError::bad_request("INVALID_BODY", e.body_text()))
}

fn unknown_session(id: &str) -> ApiError {
    ApiError::not_found(
        "UNKNOWN_SESSION",
        format!("unknown or expired session `{id}`"),
    )
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> ApiResult<T> + Send + 'static,
) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
}

// ---------------------------------------------------------------------------
// Overview

#[derive(Debug, Deserialize)]
struct OverviewQuery {
    session: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewUser {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub community: usize,
    pub post_count: usize,
    /// Last-round score scaled to [0, 1] over all users.
    pub score: Option<f64>,
    pub judged: bool,
    /// The analyst's label, if judged.
    pub relevant: Option<bool>,
    pub highlighted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverviewPayload {
    pub representation: String,
    pub n_communities: usize,
    pub session: Option<String>,
    pub round: Option<usize>,
    pub users: Vec<OverviewUser>,
}

fn min_max(scores: &[f64]) -> Vec<f64> {
    let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .map(|s| if hi > lo { (s - lo) / (hi - lo) } else { 0.5 })
        .collect()
}

async fn overview(
    State(state): State<Arc<AppState>>,
    q: Result<Query<OverviewQuery>, QueryRejection>,
) -> ApiResult<Json<OverviewPayload>> {
    let q = query(q)?;
    let corpus = &state.corpus;
    let mut users: Vec<OverviewUser> = corpus
        .user_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| OverviewUser {
            id: id.clone(),
            x: state.layout[i][0],
            y: state.layout[i][1],
            community: state.communities.assignment[i],
            post_count: corpus.user(id).map(|u| u.post_count()).unwrap_or(0),
            score: None,
            judged: false,
            relevant: None,
            highlighted: false,
        })
        .collect();
    let mut payload = OverviewPayload {
        representation: state.primary.clone(),
        n_communities: state.communities.k,
        session: None,
        round: None,
        users: Vec::new(),
    };
    if let Some(id) = q.session {
        let entry = state
            .peek_session(&id)
            .ok_or_else(|| unknown_session(&id))?;
        let entry = entry.lock().expect("session");
        let judgments = entry.session.judgments();
        for u in users.iter_mut() {
            if let Some(j) = judgments.get(&u.id) {
                u.judged = true;
                u.relevant = Some(j.relevant);
            }
        }
        // All representations share the corpus row order.
        if let Some(rank) = &entry.last_rank {
            let top: BTreeSet<&String> = rank.top.iter().collect();
            for (u, s) in users.iter_mut().zip(min_max(&rank.scores)) {
                u.score = Some(s);
                u.highlighted = top.contains(&u.id) && !u.judged;
            }
            payload.round = Some(rank.round);
        }
        payload.representation = entry.representation.clone();
        payload.session = Some(id);
    }
    payload.users = users;
    Ok(Json(payload))
}

// ---------------------------------------------------------------------------
// Search

#[derive(Debug, Deserialize)]
struct UsersQuery {
    query: Option<String>,
    channel: Option<String>,
    category: Option<String>,
    page: Option<usize>,
    page_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSummary {
    pub id: String,
    /// Summed TF-IDF weight of the query tokens; absent without a query.
    pub score: Option<f64>,
    pub post_count: usize,
    pub categories: Vec<String>,
    pub community: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsersPage {
    pub total: usize,
    pub page: usize,
    pub page_size: usize,
    pub users: Vec<UserSummary>,
}

async fn users(
    State(state): State<Arc<AppState>>,
    q: Result<Query<UsersQuery>, QueryRejection>,
) -> ApiResult<Json<UsersPage>> {
    let q = query(q)?;
    let corpus = &state.corpus;
    let page_size = q.page_size.unwrap_or(DEFAULT_PAGE_SIZE);
    if page_size == 0 || page_size > MAX_PAGE_SIZE {
        return Err(ApiError::bad_request(
            "INVALID_ARGUMENT",
            format!("page_size must be in 1..={MAX_PAGE_SIZE}"),
        ));
    }
    let channel = q.channel.as_deref().unwrap_or(WORDS);
    let tokens: Vec<String> = q
        .query
        .as_deref()
        .unwrap_or("")
        .split_whitespace()
        .map(str::to_string)
        .collect();
    let ranked: Vec<(String, Option<f64>)> = if tokens.is_empty() {
        corpus.channel(channel)?;
        corpus
            .user_ids()
            .iter()
            .map(|u| (u.clone(), None))
            .collect()
    } else {
        corpus
            .search_users(&tokens, channel)?
            .into_iter()
            .map(|(u, s)| (u, Some(s)))
            .collect()
    };
    let filtered: Vec<(String, Option<f64>)> = match &q.category {
        Some(c) => ranked
            .into_iter()
            .filter(|(u, _)| {
                corpus
                    .user(u)
                    .map(|u| u.categories.contains(c))
                    .unwrap_or(false)
            })
            .collect(),
        None => ranked,
    };
    let page = q.page.unwrap_or(0);
    let users = filtered
        .iter()
        .skip(page.saturating_mul(page_size))
        .take(page_size)
        .map(|(id, score)| {
            let user = corpus.user(id)?;
            let row = corpus.user_row(id).expect("user row");
            Ok(UserSummary {
                id: id.clone(),
                score: *score,
                post_count: user.post_count(),
                categories: user.categories.iter().cloned().collect(),
                community: state.communities.assignment[row],
            })
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(Json(UsersPage {
        total: filtered.len(),
        page,
        page_size,
        users,
    }))
}

// ---------------------------------------------------------------------------
// Profiles

#[derive(Debug, Deserialize)]
struct ProfileQuery {
    nn: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePayload {
    pub subject: Subject,
    pub nn: usize,
    pub items: Vec<ProfileEntry>,
}

impl From<&Profile> for ProfilePayload {
    fn from(p: &Profile) -> Self {
        Self {
            subject: p.subject.clone(),
            nn: p.nn,
            items: p.entries(),
        }
    }
}

fn profile_size(q: Result<Query<ProfileQuery>, QueryRejection>) -> ApiResult<usize> {
    let nn = query(q)?.nn.unwrap_or(DEFAULT_PROFILE_SIZE);
    if nn == 0 {
        return Err(ApiError::bad_request("INVALID_ARGUMENT", "nn must be >= 1"));
    }
    Ok(nn)
}

async fn user_profile(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<ProfileQuery>, QueryRejection>,
) -> ApiResult<Json<ProfilePayload>> {
    let nn = profile_size(q)?;
    blocking(move || {
        let subject = Subject::User(id.clone());
        let profile = state.profiles.get_or_build(subject, &state.space, nn, || {
            build_profile(&state.corpus, &state.space, &id, nn)
        })?;
        Ok(Json(ProfilePayload::from(profile.as_ref())))
    })
    .await
}

async fn community_profile(
    State(state): State<Arc<AppState>>,
    Path(idx): Path<usize>,
    q: Result<Query<ProfileQuery>, QueryRejection>,
) -> ApiResult<Json<ProfilePayload>> {
    let nn = profile_size(q)?;
    if idx >= state.communities.k {
        return Err(ApiError::not_found(
            "UNKNOWN_COMMUNITY",
            format!(
                "community {idx} does not exist (k = {})",
                state.communities.k
            ),
        ));
    }
    blocking(move || {
        let members = state.communities.members(idx);
        let profile =
            state
                .profiles
                .get_or_build(Subject::Community(idx), &state.space, nn, || {
                    build_community_profile(&state.corpus, &state.space, idx, &members, nn)
                })?;
        Ok(Json(ProfilePayload::from(profile.as_ref())))
    })
    .await
}

// ---------------------------------------------------------------------------
// Sessions

#[derive(Debug, Default, Deserialize)]
struct CreateSession {
    rep: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub session_id: String,
    pub representation: String,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    b: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionCreated>)> {
    // An empty body selects the primary representation.
    let req = match b {
        Err(JsonRejection::MissingJsonContentType(_)) => CreateSession::default(),
        other => body(other)?,
    };
    let (session_id, representation) = state.create_session(req.rep.as_deref())?;
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id,
            representation,
        }),
    ))
}

async fn delete_session(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<StatusCode> {
    if state.remove_session(&id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(unknown_session(&id))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentIn {
    pub user_id: String,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentSummary {
    pub judged: usize,
    pub relevant: usize,
    pub irrelevant: usize,
}

async fn judge(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    b: Result<Json<Vec<JudgmentIn>>, JsonRejection>,
) -> ApiResult<Json<JudgmentSummary>> {
    let judgments: Vec<(String, bool)> = body(b)?
        .into_iter()
        .map(|j| (j.user_id, j.relevant))
        .collect();
    let entry = state.session(&id).ok_or_else(|| unknown_session(&id))?;
    let mut entry = entry.lock().expect("session");
    entry.session.judge(&judgments)?;
    let all = entry.session.judgments();
    let relevant = all.values().filter(|j| j.relevant).count();
    Ok(Json(JudgmentSummary {
        judged: all.len(),
        relevant,
        irrelevant: all.len() - relevant,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankPayload {
    pub round: usize,
    /// Where the full, normalised score vector can be read.
    pub scores_ref: String,
    pub top: Vec<String>,
    /// Raw classifier scores of `top`.
    pub top_scores: Vec<f64>,
}

async fn rank(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Json<RankPayload>> {
    let entry = state.session(&id).ok_or_else(|| unknown_session(&id))?;
    blocking(move || {
        let mut entry = entry.lock().expect("session");
        let result: RankResult = entry.session.train_and_rank()?;
        let matrix = entry.session.matrix();
        let top_scores = result
            .top
            .iter()
            .map(|u| result.scores[matrix.row_of(u).expect("ranked user")])
            .collect();
        let payload = RankPayload {
            round: result.round,
            scores_ref: format!("/overview?session={id}"),
            top: result.top.clone(),
            top_scores,
        };
        entry.last_rank = Some(result);
        Ok(Json(payload))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct BootstrapQuery {
    count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapPayload {
    pub users: Vec<String>,
}

/// Random unjudged users to label. The sample depends only on the session
/// state, so repeating the request without judging returns the same users.
async fn bootstrap(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    q: Result<Query<BootstrapQuery>, QueryRejection>,
) -> ApiResult<Json<BootstrapPayload>> {
    let count = query(q)?.count.unwrap_or(DEFAULT_BOOTSTRAP);
    let entry = state
        .peek_session(&id)
        .ok_or_else(|| unknown_session(&id))?;
    let entry = entry.lock().expect("session");
    let draw = entry.session.judgments().len() as u64;
    let users = entry.session.bootstrap_sample(count, draw)?;
    Ok(Json(BootstrapPayload { users }))
}
