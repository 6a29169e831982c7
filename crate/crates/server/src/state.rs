//! Everything the service holds in memory: the corpus, the representations
//! built at start-up, the joint space used for profiles, the overview map and
//! the live sessions.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, TryLockError};
use std::time::{Duration, Instant};

use usermap_core::corpus::Corpus;
use usermap_core::embed::{build_examples, train, EmbeddingSpace, Hyperparams, Setup};
use usermap_core::evaluate::RepConfig;
use usermap_core::interactive::{start_session, RankResult, Session, DEFAULT_TOP_N};
use usermap_core::layout::layout_2d;
use usermap_core::profile::{
    default_community_count, detect_communities, CommunityAssignment, ProfileCache,
};
use usermap_core::vectorize::UserMatrix;
use usermap_core::{Error, Result};

pub const SESSION_TTL: Duration = Duration::from_secs(3600);

pub struct SessionEntry {
    pub representation: String,
    pub session: Session,
    pub last_rank: Option<RankResult>,
    pub last_used: Instant,
}

pub struct AppState {
    pub corpus: Arc<Corpus>,
    /// Keyed by short name (`tfidf`, `cwu`, `wuc`).
    pub representations: BTreeMap<String, Arc<UserMatrix>>,
    /// Representation behind the map layout, the communities and new
    /// sessions without an explicit choice.
    pub primary: String,
    pub space: Arc<EmbeddingSpace>,
    pub communities: CommunityAssignment,
    pub layout: Vec<[f64; 2]>,
    pub profiles: ProfileCache,
    pub top_n: usize,
    pub rng_seed: u64,
    pub session_ttl: Duration,
    sessions: Mutex<HashMap<String, Arc<Mutex<SessionEntry>>>>,
}

impl AppState {
    /// Builds every representation in `reps` (the first is primary). The
    /// joint space for profiles comes from the first embedding
    /// representation, or from a CW-U model trained for the purpose.
    pub fn build(corpus: Corpus, reps: &[RepConfig], rng_seed: u64) -> Result<Self> {
        if reps.is_empty() {
            return Err(Error::InvalidArgument(
                "at least one representation is required".into(),
            ));
        }
        let mut matrices = Vec::new();
        let mut space = None;
        for rep in reps {
            let matrix = match rep {
                RepConfig::Embedding { setup, hyperparams } => {
                    let hp = Hyperparams {
                        rng_seed,
                        ..hyperparams.clone()
                    };
                    let trained = train(&build_examples(&corpus, *setup), &hp)?;
                    let m = trained.user_matrix(&corpus)?;
                    space.get_or_insert(trained);
                    m
                }
                RepConfig::Tfidf { .. } => rep.build(&corpus, rng_seed)?,
            };
            matrices.push(matrix);
        }
        let space = match space {
            Some(s) => s,
            None => {
                let hp = Hyperparams {
                    rng_seed,
                    ..Hyperparams::default()
                };
                train(&build_examples(&corpus, Setup::CwU), &hp)?
            }
        };
        Self::from_parts(corpus, matrices, space, rng_seed)
    }

    /// Assembles the state from ready-made parts. `matrices[0]` is primary.
    pub fn from_parts(
        corpus: Corpus,
        matrices: Vec<UserMatrix>,
        space: EmbeddingSpace,
        rng_seed: u64,
    ) -> Result<Self> {
        let primary_matrix = matrices.first().ok_or_else(|| {
            Error::InvalidArgument("at least one representation is required".into())
        })?;
        for m in &matrices {
            if m.user_ids() != corpus.user_ids() {
                return Err(Error::RowMismatch);
            }
        }
        let primary = primary_matrix.provenance().short_name().to_string();
        let k = default_community_count(&corpus);
        let communities = detect_communities(primary_matrix, k, rng_seed)?;
        let layout = layout_2d(primary_matrix)?;
        let representations = matrices
            .into_iter()
            .map(|m| (m.provenance().short_name().to_string(), Arc::new(m)))
            .collect();
        Ok(Self {
            corpus: Arc::new(corpus),
            representations,
            primary,
            space: Arc::new(space),
            communities,
            layout,
            profiles: ProfileCache::new(),
            top_n: DEFAULT_TOP_N,
            rng_seed,
            session_ttl: SESSION_TTL,
            sessions: Mutex::new(HashMap::new()),
        })
    }

    fn sweep(&self, sessions: &mut HashMap<String, Arc<Mutex<SessionEntry>>>) {
        let ttl = self.session_ttl;
        // A session locked by a running request is in use, hence not idle.
        sessions.retain(|_, s| match s.try_lock() {
            Ok(e) => e.last_used.elapsed() < ttl,
            Err(TryLockError::WouldBlock) => true,
            Err(TryLockError::Poisoned(_)) => false,
        });
    }

    pub fn create_session(&self, representation: Option<&str>) -> Result<(String, String)> {
        let name = representation
            .unwrap_or(&self.primary)
            .to_ascii_lowercase()
            .replace('-', "");
        let matrix = self
            .representations
            .get(&name)
            .ok_or_else(|| Error::UnknownSetup(name.clone()))?;
        let session = start_session(Arc::clone(matrix), self.top_n, self.rng_seed)?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        let entry = SessionEntry {
            representation: name.clone(),
            session,
            last_rank: None,
            last_used: Instant::now(),
        };
        let mut sessions = self.sessions.lock().expect("session map");
        self.sweep(&mut sessions);
        sessions.insert(id.clone(), Arc::new(Mutex::new(entry)));
        Ok((id, name))
    }

    pub fn remove_session(&self, id: &str) -> bool {
        self.sessions
            .lock()
            .expect("session map")
            .remove(id)
            .is_some()
    }

    /// The live session `id`, refreshing its idle timer. Expired sessions
    /// are dropped on the way.
    pub fn session(&self, id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        let mut sessions = self.sessions.lock().expect("session map");
        self.sweep(&mut sessions);
        let entry = sessions.get(id).cloned()?;
        entry.lock().expect("session").last_used = Instant::now();
        Some(entry)
    }

    /// The live session `id` without touching its idle timer, for reads.
    pub fn peek_session(&self, id: &str) -> Option<Arc<Mutex<SessionEntry>>> {
        let sessions = self.sessions.lock().expect("session map");
        let entry = sessions.get(id)?;
        let live = match entry.try_lock() {
            Ok(e) => e.last_used.elapsed() < self.session_ttl,
            Err(TryLockError::WouldBlock) => true,
            Err(TryLockError::Poisoned(_)) => false,
        };
        live.then(|| Arc::clone(entry))
    }

    pub fn n_sessions(&self) -> usize {
        self.sessions.lock().expect("session map").len()
    }
}
