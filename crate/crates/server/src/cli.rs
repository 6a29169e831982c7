//! Subcommands of the `usermap` binary.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use usermap_core::corpus::{
    generate_synthetic, load_corpus, write_corpus, Corpus, SynthConfig, DEFAULT_MIN_POSTS,
};
use usermap_core::embed::{build_examples, train, EmbeddingSpace, Hyperparams, Setup};
use usermap_core::evaluate::{compare_representations, RepConfig};
use usermap_core::interactive::{start_session, DEFAULT_TOP_N};
use usermap_core::profile::{
    build_community_profile, build_profile, default_community_count, detect_communities,
    DEFAULT_PROFILE_SIZE,
};
use usermap_core::vectorize::{
    build_tfidf_representation, default_channels, PcaMode, TfidfOptions, UserMatrix,
};

use crate::state::AppState;

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

#[derive(Debug, Parser)]
#[command(
    name = "usermap",
    version,
    about = "Explore collections of social-media users"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// JSONL corpus, one post per line.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Users with fewer posts are dropped on load.
    #[arg(long, default_value_t = DEFAULT_MIN_POSTS)]
    pub min_posts: usize,
}

impl CorpusArgs {
    fn load(&self) -> CliResult<Corpus> {
        Ok(load_corpus(&self.corpus, self.min_posts)?)
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PcaArg {
    AfterFusion,
    PerChannel,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a JSONL corpus and print its statistics.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_POSTS)]
        min_posts: usize,
        /// Write the retained posts here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted communities.
    Synth {
        #[arg(long, default_value_t = 4)]
        communities: usize,
        #[arg(long, default_value_t = 50)]
        users_per_community: usize,
        #[arg(long, default_value_t = 10)]
        posts_min: usize,
        #[arg(long, default_value_t = 30)]
        posts_max: usize,
        #[arg(long, default_value_t = 50)]
        vocab: usize,
        #[arg(long, default_value_t = 20)]
        concepts: usize,
        #[arg(long, default_value_t = 0.1)]
        mixing: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Communities share a vocabulary and differ only in co-occurrence.
        #[arg(long)]
        contextual: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build TF-IDF user vectors and write a matrix file.
    Vectorize {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_delimiter = ',', default_values_t = default_channels())]
        channels: Vec<String>,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, value_enum, default_value = "after-fusion")]
        pca_mode: PcaArg,
        #[arg(long, default_value_t = 2)]
        min_word_df: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a joint embedding and write a space file.
    Embed {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// `cwu` or `wuc`.
        #[arg(long, default_value = "cwu")]
        setup: String,
        #[arg(long, default_value_t = 128)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.05)]
        margin: f64,
        #[arg(long, default_value_t = 5)]
        negatives: usize,
        #[arg(long, default_value_t = 0.01)]
        lr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the user rows as a matrix file.
        #[arg(long)]
        users_out: Option<PathBuf>,
    },
    /// Print a user or community profile as JSON.
    Profile {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Space file written by `embed`.
        #[arg(long)]
        space: PathBuf,
        #[arg(
            long,
            conflicts_with = "community",
            required_unless_present = "community"
        )]
        user: Option<String>,
        #[arg(long)]
        community: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_PROFILE_SIZE)]
        nn: usize,
        /// Number of communities; defaults to one per category.
        #[arg(long)]
        communities: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Replay judgments against a matrix file and rank the remaining users.
    Session {
        #[arg(long)]
        matrix: PathBuf,
        /// JSONL of `{"user_id": ..., "relevant": ...}`.
        #[arg(long)]
        judgments: PathBuf,
        #[arg(long)]
        rank: bool,
        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        top_n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the simulated-analyst evaluation and write a report.
    Evaluate {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long, value_delimiter = ',', default_value = "tfidf,cwu,wuc")]
        reps: Vec<String>,
        #[arg(long, default_value_t = 10)]
        rounds: usize,
        /// Users presented per round.
        #[arg(long, default_value_t = DEFAULT_TOP_N)]
        n: usize,
        /// Number of seeds, run as 0..seeds.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the MAP table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Serve the JSON API.
    Serve {
        #[command(flatten)]
        corpus: CorpusArgs,
        /// Representations to build; the first drives the map.
        #[arg(long, value_delimiter = ',', default_value = "cwu")]
        rep: Vec<String>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

pub fn parse_rep(name: &str) -> CliResult<RepConfig> {
    Ok(match name.trim().to_ascii_lowercase().as_str() {
        "tfidf" | "tf-idf" => RepConfig::tfidf(),
        other => RepConfig::embedding(other.parse::<Setup>()?),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentLine {
    pub user_id: String,
    pub relevant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_users: usize,
    pub n_posts: usize,
    pub n_edges: usize,
    pub vocabulary: Vec<(String, usize)>,
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutput {
    pub judged: usize,
    pub round: Option<usize>,
    pub top: Vec<String>,
    pub top_scores: Vec<f64>,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn stats(corpus: &Corpus) -> CliResult<CorpusStats> {
    let vocabulary = corpus
        .channel_names()
        .map(|c| Ok((c.to_string(), corpus.vocabulary(c)?.len())))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(CorpusStats {
        n_users: corpus.n_users(),
        n_posts: corpus.n_posts(),
        n_edges: corpus.edges().len(),
        vocabulary,
        categories: corpus.categories().into_iter().collect(),
    })
}

pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Ingest {
            input,
            min_posts,
            out,
        } => {
            let corpus = load_corpus(&input, min_posts)?;
            if let Some(out) = out {
                let mut w = create(&out)?;
                write_corpus(&corpus, &mut w)?;
                w.flush()?;
            }
            print_json(&stats(&corpus)?)
        }
        Command::Synth {
            communities,
            users_per_community,
            posts_min,
            posts_max,
            vocab,
            concepts,
            mixing,
            seed,
            contextual,
            out,
        } => {
            let corpus = generate_synthetic(&SynthConfig {
                n_communities: communities,
                users_per_community,
                posts_per_user: (posts_min, posts_max),
                vocab_per_community: vocab,
                concepts_per_community: concepts,
                mixing,
                contextual_mode: contextual,
                rng_seed: seed,
            })?;
            let mut w = create(&out)?;
            write_corpus(&corpus, &mut w)?;
            w.flush()?;
            print_json(&stats(&corpus)?)
        }
        Command::Vectorize {
            corpus,
            channels,
            dim,
            pca_mode,
            min_word_df,
            out,
        } => {
            let corpus = corpus.load()?;
            let options = TfidfOptions {
                dim,
                min_word_df,
                pca_mode: match pca_mode {
                    PcaArg::AfterFusion => PcaMode::AfterFusion,
                    PcaArg::PerChannel => PcaMode::PerChannel,
                },
            };
            let matrix = build_tfidf_representation(&corpus, &channels, &options)?;
            let mut w = create(&out)?;
            matrix.write_to(&mut w)?;
            w.flush()?;
            eprintln!("{} users x {} dims", matrix.n_users(), matrix.dim());
            Ok(())
        }
        Command::Embed {
            corpus,
            setup,
            dim,
            epochs,
            margin,
            negatives,
            lr,
            seed,
            out,
            users_out,
        } => {
            let corpus = corpus.load()?;
            let hp = Hyperparams {
                dim,
                margin,
                negatives,
                epochs,
                learning_rate: lr,
                rng_seed: seed,
            };
            let space = train(&build_examples(&corpus, setup.parse()?), &hp)?;
            let mut w = create(&out)?;
            space.write_to(&mut w)?;
            w.flush()?;
            if let Some(path) = users_out {
                let mut w = create(&path)?;
                space.user_matrix(&corpus)?.write_to(&mut w)?;
                w.flush()?;
            }
            eprintln!(
                "{} features, {} labels, {} dims",
                space.features().len(),
                space.labels().len(),
                space.dim()
            );
            Ok(())
        }
        Command::Profile {
            corpus,
            space,
            user,
            community,
            nn,
            communities,
            seed,
        } => {
            let corpus = corpus.load()?;
            let space = EmbeddingSpace::read_from(BufReader::new(File::open(&space)?))?;
            let profile = match (user, community) {
                (Some(user), _) => build_profile(&corpus, &space, &user, nn)?,
                (None, Some(idx)) => {
                    let users = space.user_matrix(&corpus)?;
                    let k = communities.unwrap_or_else(|| default_community_count(&corpus));
                    let assignment = detect_communities(&users, k, seed)?;
                    build_community_profile(&corpus, &space, idx, &assignment.members(idx), nn)?
                }
                (None, None) => unreachable!("clap requires --user or --community"),
            };
            print_json(&profile.entries())
        }
        Command::Session {
            matrix,
            judgments,
            rank,
            top_n,
            seed,
        } => {
            let matrix = UserMatrix::read_from(BufReader::new(File::open(&matrix)?))?;
            let mut session = start_session(Arc::new(matrix), top_n, seed)?;
            let mut lines = Vec::new();
            for line in BufReader::new(File::open(&judgments)?).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let j: JudgmentLine = serde_json::from_str(&line)?;
                lines.push((j.user_id, j.relevant));
            }
            session.judge(&lines)?;
            let mut output = SessionOutput {
                judged: session.judgments().len(),
                round: None,
                top: Vec::new(),
                top_scores: Vec::new(),
            };
            if rank {
                let result = session.train_and_rank()?;
                let m = session.matrix();
                output.top_scores = result
                    .top
                    .iter()
                    .map(|u| result.scores[m.row_of(u).expect("ranked user")])
                    .collect();
                output.round = Some(result.round);
                output.top = result.top;
            }
            print_json(&output)
        }
        Command::Evaluate {
            corpus,
            reps,
            rounds,
            n,
            seeds,
            out,
            csv,
        } => {
            let corpus = corpus.load()?;
            let reps = reps
                .iter()
                .map(|r| parse_rep(r))
                .collect::<CliResult<Vec<_>>>()?;
            let seeds: Vec<u64> = (0..seeds).collect();
            let report = compare_representations(&corpus, &reps, rounds, n, &seeds)?;
            for dropped in &report.config.dropped_actors {
                eprintln!("warning: category `{dropped}` has too few users for an actor; skipped");
            }
            let mut w = create(&out)?;
            serde_json::to_writer_pretty(&mut w, &report)?;
            w.flush()?;
            if let Some(path) = csv {
                std::fs::write(path, report.to_csv())?;
            }
            for (rep, curve) in &report.map_per_round {
                let last = curve.last().copied().unwrap_or(f64::NAN);
                eprintln!("{rep}: MAP@round{} = {last:.4}", curve.len());
            }
            Ok(())
        }
        Command::Serve {
            corpus,
            rep,
            addr,
            seed,
        } => {
            let corpus = corpus.load()?;
            let reps = rep
                .iter()
                .map(|r| parse_rep(r))
                .collect::<CliResult<Vec<_>>>()?;
            eprintln!(
                "building {} representation(s) for {} users",
                reps.len(),
                corpus.n_users()
            );
            let state = AppState::build(corpus, &reps, seed)?;
            let app = crate::router(Arc::new(state));
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, app).await
            })?;
            Ok(())
        }
    }
}
