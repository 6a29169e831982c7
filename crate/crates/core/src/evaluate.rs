//! Simulated-analyst evaluation.
//!
//! Each category of the corpus defines an actor whose targets are the users
//! posting in it. An actor starts a session with its most prolific users as
//! positives plus a random sample judged truthfully, then repeatedly ranks,
//! inspects the top N and judges them truthfully. Average precision of every
//! round's ranking of the still-unjudged users is recorded, with the targets
//! not found yet as the relevant set.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embed::{build_examples, train, Hyperparams, Setup};
use crate::interactive::{start_session, DEFAULT_TOP_N};
use crate::vectorize::{build_tfidf_representation, default_channels, TfidfOptions, UserMatrix};
use crate::{Error, Result};

pub const DEFAULT_SEED_SIZE: usize = 15;
pub const BOOTSTRAP_SIZE: usize = 15;
const MAX_BOOTSTRAP_RESAMPLES: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    /// Category the target set comes from.
    pub source: String,
    pub target: BTreeSet<String>,
    pub seed_size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ActorSet {
    pub actors: Vec<Actor>,
    /// Categories whose target set was not larger than the seed size, with
    /// that size.
    pub dropped: Vec<(String, usize)>,
}

/// One actor per category; its target is every user with a post there.
pub fn build_actors(corpus: &Corpus, seed_size: usize) -> Result<ActorSet> {
    let categories = corpus.categories();
    if categories.is_empty() {
        return Err(Error::NoCategories);
    }
    let mut out = ActorSet::default();
    for category in categories {
        let target: BTreeSet<String> = corpus
            .users()
            .filter(|u| u.categories.contains(&category))
            .map(|u| u.user_id.clone())
            .collect();
        if target.len() <= seed_size {
            out.dropped.push((category, target.len()));
            continue;
        }
        out.actors.push(Actor {
            id: category.clone(),
            source: category,
            target,
            seed_size,
        });
    }
    Ok(out)
}

/// The `seed_size` targets with most posts in the actor's category, ties by
/// ascending id.
pub fn seed_examples(actor: &Actor, corpus: &Corpus) -> Result<Vec<String>> {
    if actor.target.len() <= actor.seed_size {
        return Err(Error::InvalidArgument(format!(
            "actor `{}` has {} targets, seed size is {}",
            actor.id,
            actor.target.len(),
            actor.seed_size
        )));
    }
    let mut ranked: Vec<(usize, &String)> = actor
        .target
        .iter()
        .map(|u| (corpus.posts_in_category(u, &actor.source), u))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    Ok(ranked
        .into_iter()
        .take(actor.seed_size)
        .map(|(_, u)| u.clone())
        .collect())
}

/// `(1/|R|) Σ_{k : item k relevant} precision@k`. Relevant items missing
/// from the ranking contribute zero.
pub fn average_precision<S: AsRef<str>>(ranking: &[S], relevant: &BTreeSet<String>) -> Result<f64> {
    if relevant.is_empty() {
        return Err(Error::InvalidArgument("empty relevant set".into()));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, item) in ranking.iter().enumerate() {
        if relevant.contains(item.as_ref()) {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(sum / relevant.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub ap: f64,
    /// Targets judged so far, seeds included, before this round's judgments.
    pub found: usize,
    pub top: Vec<String>,
    pub judgments_added: Vec<(String, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub actor: String,
    pub representation: String,
    pub rng_seed: u64,
    /// Seed and bootstrap judgments made before the first round.
    pub initial_judgments: Vec<(String, bool)>,
    pub rounds: Vec<RoundRecord>,
}

impl EvalRun {
    pub fn ap_per_round(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.ap).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolOptions {
    pub rounds: usize,
    pub top_n: usize,
    pub rng_seed: u64,
}

impl Default for ProtocolOptions {
    fn default() -> Self {
        Self {
            rounds: 10,
            top_n: DEFAULT_TOP_N,
            rng_seed: 0,
        }
    }
}

/// Runs the feedback simulation for one actor on one representation.
///
/// When every user is a target no negative can ever be judged; the run then
/// skips training, presents unjudged users in id order and records AP 1.0.
pub fn run_protocol(
    actor: &Actor,
    corpus: &Corpus,
    users: Arc<UserMatrix>,
    options: &ProtocolOptions,
) -> Result<EvalRun> {
    let truth = |u: &String| (u.clone(), actor.target.contains(u));
    let mut session = start_session(Arc::clone(&users), options.top_n, options.rng_seed)?;
    let seeds = seed_examples(actor, corpus)?;
    let mut initial: Vec<(String, bool)> = seeds.iter().map(truth).collect();
    session.judge(&initial)?;

    let all_targets = users.user_ids().iter().all(|u| actor.target.contains(u));
    if !all_targets {
        let mut draws = 0;
        loop {
            let sample: Vec<(String, bool)> = session
                .bootstrap_negatives(BOOTSTRAP_SIZE)?
                .iter()
                .map(truth)
                .collect();
            session.judge(&sample)?;
            let has_negative = sample.iter().any(|(_, relevant)| !relevant);
            initial.extend(sample);
            if has_negative {
                break;
            }
            draws += 1;
            if draws > MAX_BOOTSTRAP_RESAMPLES {
                return Err(Error::Degenerate(format!(
                    "no negative example for actor `{}` after {MAX_BOOTSTRAP_RESAMPLES} resamples",
                    actor.id
                )));
            }
        }
    }

    let mut rounds = Vec::with_capacity(options.rounds);
    for _ in 0..options.rounds {
        let found = session
            .judgments()
            .iter()
            .filter(|(_, j)| j.relevant)
            .count();
        let (round, ranking) = if all_targets {
            let ids = users.user_ids();
            let mut rows: Vec<usize> = (0..ids.len())
                .filter(|&i| !session.is_judged(&ids[i]))
                .collect();
            rows.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
            (rounds.len() + 1, rows)
        } else {
            let result = session.train_and_rank()?;
            (result.round, session.unjudged_ranking(&result.scores))
        };
        let ranked_ids: Vec<&String> = ranking.iter().map(|&i| &users.user_ids()[i]).collect();
        let remaining: BTreeSet<String> = ranked_ids
            .iter()
            .filter(|u| actor.target.contains(**u))
            .map(|u| (*u).clone())
            .collect();
        let ap = if remaining.is_empty() {
            1.0
        } else {
            average_precision(&ranked_ids, &remaining)?
        };
        let top: Vec<String> = ranked_ids
            .iter()
            .take(options.top_n)
            .map(|u| (*u).clone())
            .collect();
        let added: Vec<(String, bool)> = top.iter().map(truth).collect();
        session.judge(&added)?;
        rounds.push(RoundRecord {
            round,
            ap,
            found,
            top,
            judgments_added: added,
        });
    }

    Ok(EvalRun {
        actor: actor.id.clone(),
        representation: users.provenance().short_name().to_string(),
        rng_seed: options.rng_seed,
        initial_judgments: initial,
        rounds,
    })
}

/// How to build one user representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RepConfig {
    Tfidf {
        channels: Vec<String>,
        options: TfidfOptions,
    },
    Embedding {
        setup: Setup,
        hyperparams: Hyperparams,
    },
}

impl RepConfig {
    pub fn tfidf() -> Self {
        RepConfig::Tfidf {
            channels: default_channels(),
            options: TfidfOptions::default(),
        }
    }

    pub fn embedding(setup: Setup) -> Self {
        RepConfig::Embedding {
            setup,
            hyperparams: Hyperparams::default(),
        }
    }

    /// Short name used in reports: `tfidf`, `cwu` or `wuc`.
    pub fn name(&self) -> String {
        match self {
            RepConfig::Tfidf { .. } => "tfidf".into(),
            RepConfig::Embedding { setup, .. } => setup.to_string(),
        }
    }

    /// Builds the representation; embeddings are trained with `rng_seed`.
    pub fn build(&self, corpus: &Corpus, rng_seed: u64) -> Result<UserMatrix> {
        match self {
            RepConfig::Tfidf { channels, options } => {
                build_tfidf_representation(corpus, channels, options)
            }
            RepConfig::Embedding { setup, hyperparams } => {
                let hp = Hyperparams {
                    rng_seed,
                    ..hyperparams.clone()
                };
                train(&build_examples(corpus, *setup), &hp)?.user_matrix(corpus)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub representations: Vec<RepConfig>,
    pub rounds: usize,
    pub top_n: usize,
    pub seeds: Vec<u64>,
    pub seed_size: usize,
    pub actors: Vec<String>,
    pub dropped_actors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub rep: String,
    pub actor: String,
    pub seed: u64,
    pub ap_per_round: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ReportConfig,
    pub curves: Vec<Curve>,
    /// Mean AP over actors and seeds at every round.
    pub map_per_round: BTreeMap<String, Vec<f64>>,
    /// Mean AP over actors at every round, one curve per seed.
    pub map_per_seed: BTreeMap<String, Vec<Vec<f64>>>,
}

fn mean_curve<'a>(curves: impl Iterator<Item = &'a Vec<f64>>, rounds: usize) -> Vec<f64> {
    let mut sum = vec![0.0; rounds];
    let mut n = 0usize;
    for c in curves {
        sum.iter_mut().zip(c).for_each(|(s, x)| *s += x);
        n += 1;
    }
    sum.into_iter()
        .map(|s| if n == 0 { 0.0 } else { s / n as f64 })
        .collect()
}

/// Runs the protocol for every (representation, seed, actor). The seed is
/// used both to train embeddings and to drive the sessions.
pub fn compare_representations(
    corpus: &Corpus,
    representations: &[RepConfig],
    rounds: usize,
    top_n: usize,
    seeds: &[u64],
) -> Result<Report> {
    if representations.is_empty() || seeds.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one representation and one seed".into(),
        ));
    }
    let actor_set = build_actors(corpus, DEFAULT_SEED_SIZE)?;
    if actor_set.actors.is_empty() {
        return Err(Error::Degenerate(
            "no category has enough users for an actor".into(),
        ));
    }
    let jobs: Vec<(&RepConfig, u64)> = representations
        .iter()
        .flat_map(|r| seeds.iter().map(move |&s| (r, s)))
        .collect();
    let results: Vec<Result<Vec<Curve>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(rep, seed)| {
                let actors = &actor_set.actors;
                scope.spawn(move || -> Result<Vec<Curve>> {
                    let users = Arc::new(rep.build(corpus, seed)?);
                    let options = ProtocolOptions {
                        rounds,
                        top_n,
                        rng_seed: seed,
                    };
                    actors
                        .iter()
                        .map(|actor| {
                            let run = run_protocol(actor, corpus, Arc::clone(&users), &options)?;
                            Ok(Curve {
                                rep: rep.name(),
                                actor: actor.id.clone(),
                                seed,
                                ap_per_round: run.ap_per_round(),
                            })
                        })
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("evaluation worker panicked"))
            .collect()
    });
    let mut curves = Vec::new();
    for r in results {
        curves.extend(r?);
    }

    let mut map_per_round = BTreeMap::new();
    let mut map_per_seed = BTreeMap::new();
    for rep in representations {
        let name = rep.name();
        let of_rep: Vec<&Curve> = curves.iter().filter(|c| c.rep == name).collect();
        map_per_round.insert(
            name.clone(),
            mean_curve(of_rep.iter().map(|c| &c.ap_per_round), rounds),
        );
        let per_seed = seeds
            .iter()
            .map(|&s| {
                mean_curve(
                    of_rep
                        .iter()
                        .filter(|c| c.seed == s)
                        .map(|c| &c.ap_per_round),
                    rounds,
                )
            })
            .collect();
        map_per_seed.insert(name, per_seed);
    }

    Ok(Report {
        config: ReportConfig {
            representations: representations.to_vec(),
            rounds,
            top_n,
            seeds: seeds.to_vec(),
            seed_size: DEFAULT_SEED_SIZE,
            actors: actor_set.actors.iter().map(|a| a.id.clone()).collect(),
            dropped_actors: actor_set.dropped.iter().map(|(c, _)| c.clone()).collect(),
        },
        curves,
        map_per_round,
        map_per_seed,
    })
}

impl Report {
    /// MAP table: one row per round, one column per representation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round");
        for name in self.map_per_round.keys() {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for r in 0..self.config.rounds {
            write!(out, "{}", r + 1).expect("write to string");
            for curve in self.map_per_round.values() {
                write!(out, ",{:.6}", curve[r]).expect("write to string");
            }
            out.push('\n');
        }
        out
    }
}
