use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use amplifier_core::cascade::ProbabilityMode;
use amplifier_core::dataio::synthetic::{generate_synthetic, SyntheticParams};
use amplifier_core::dataio::{
    parse_raw, preprocess, read_embeddings, save_tables, split_posts, Corpus, EmbeddingTable, ParseOptions, PreprocessParams, RawPaths,
};
use amplifier_core::embed::{CommandEmbedder, TextEmbedder};
use amplifier_core::estimator::{EstimatorModel, CONTENT_DIM};
use amplifier_core::experiments::{evaluate_estimator, train_on_corpus, write_report, ExperimentConfig, Harness, Report};
use amplifier_core::llm::LlmMode;
use amplifier_core::prompting::StrategyKind;
use amplifier_core::{rng, Error, Result};

/// Content revision for social influence: data preparation, estimator
/// training and experiment runs.
#[derive(Parser)]
#[command(name = "amplifier", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Normalize raw content/network/interaction files into a corpus directory.
    Prep(PrepArgs),
    /// Generate a synthetic corpus with known topic affinities.
    Synth(SynthArgs),
    /// Train the pairwise estimator on a corpus' training split.
    Train(Common),
    /// Spread of revised test posts for each prompting strategy.
    EvalStrategies(Common),
    /// Per-follower probability lift from follower-specific revisions.
    EvalSingle(Common),
    /// Precision/recall/F1 of learned, fixed and inverse-degree probabilities.
    EvalEstimator(Common),
    /// Gain of the hop-dependent strategies across neighborhood radii.
    Hops(Common),
    /// Gain split by creator follower-count group.
    Groups(Common),
}

#[derive(Args)]
struct PrepArgs {
    #[arg(long)]
    content: PathBuf,
    #[arg(long)]
    network: PathBuf,
    #[arg(long)]
    interactions: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with preprocessing parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Embedding file whose rows follow the prepared post order.
    #[arg(long, conflicts_with = "embed_command")]
    embeddings: Option<PathBuf>,
    /// Program that embeds one JSON string from stdin (see the README).
    #[arg(long)]
    embed_command: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    /// TOML file with generator parameters.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    posts: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated strategy ids, e.g. `1,3.1,4.2`.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<StrategyKind>>,
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    master_seed: Option<u64>,
    #[arg(long)]
    max_posts: Option<usize>,
    #[arg(long, value_parser = parse_mode)]
    llm_mode: Option<LlmMode>,
    #[arg(long)]
    transcript: Option<PathBuf>,
}

fn parse_mode(s: &str) -> std::result::Result<LlmMode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|_| format!("unknown llm mode `{s}`"))
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(v) = &self.corpus {
            c.checkpoint = v.join("model.json");
            c.corpus = v.clone();
        }
        if let Some(v) = &self.checkpoint {
            c.checkpoint = v.clone();
        }
        if let Some(v) = &self.out {
            c.out_dir = v.clone();
        }
        if let Some(v) = &self.strategies {
            c.strategies = v.clone();
        }
        if let Some(v) = self.rounds {
            c.rounds = v;
        }
        if let Some(v) = self.base_seed {
            c.base_seed = v;
        }
        if let Some(v) = self.master_seed {
            c.master_seed = v;
        }
        if let Some(v) = self.max_posts {
            c.max_posts = v;
        }
        if let Some(v) = self.llm_mode {
            c.llm.mode = v;
        }
        if let Some(v) = &self.transcript {
            c.llm.transcript = Some(v.clone());
        }
        c.validate()?;
        Ok(c)
    }
}

fn read_toml<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn emit<R: Report + ?Sized>(config: &ExperimentConfig, report: &R) -> Result<()> {
    print!("{}", report.text());
    for path in write_report(&config.out_dir, report)? {
        log::info!("wrote {}", path.display());
    }
    Ok(())
}

fn prep(args: &PrepArgs) -> Result<()> {
    let params: PreprocessParams = read_toml(args.params.as_deref())?;
    let raw = parse_raw(
        &RawPaths {
            content: args.content.clone(),
            network: args.network.clone(),
            interactions: args.interactions.clone(),
        },
        &ParseOptions::default(),
    )?;
    let prepared = preprocess(&raw, &params)?;
    let ids: Vec<u32> = (0..prepared.posts.len() as u32).collect();
    let splits = split_posts(&ids, &params.split, &mut rng::seeded(args.seed))?;
    let embeddings = if let Some(path) = &args.embeddings {
        Some(read_embeddings(path)?)
    } else if let Some(program) = &args.embed_command {
        let mut parts = program.split_whitespace().map(str::to_string);
        let embedder = CommandEmbedder {
            program: parts.next().unwrap_or_default(),
            args: parts.collect(),
            dim: CONTENT_DIM,
        };
        let mut data = Vec::with_capacity(prepared.posts.len() * CONTENT_DIM);
        for post in &prepared.posts {
            data.extend(embedder.embed(&post.text)?);
        }
        Some(EmbeddingTable::new(CONTENT_DIM, data)?)
    } else {
        None
    };
    let write_ids = |name: &str, ids: &[String]| -> Result<()> {
        let path = args.out.join(name);
        let body: String = ids.iter().enumerate().map(|(i, id)| format!("{i}\t{id}\n")).collect();
        std::fs::write(&path, body).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    };
    match embeddings {
        Some(embeddings) => {
            Corpus::new(prepared.graph, prepared.posts, splits, embeddings, "raw")?.save(&args.out)?;
        }
        None => {
            save_tables(&args.out, &prepared.graph, &prepared.posts, &splits, "raw")?;
            eprintln!(
                "no embeddings given: write {} (one row per line of posts.tsv) before training",
                args.out.join("embeddings.txt").display()
            );
        }
    }
    write_ids("user_ids.tsv", &prepared.user_ids)?;
    write_ids("post_ids.tsv", &prepared.post_ids)?;
    println!("{} users, {} posts -> {}", prepared.user_ids.len(), prepared.post_ids.len(), args.out.display());
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut params: SyntheticParams = read_toml(args.params.as_deref())?;
    if let Some(v) = args.users {
        params.users = v;
    }
    if let Some(v) = args.posts {
        params.posts = v;
    }
    if let Some(v) = args.seed {
        params.seed = v;
    }
    let synthetic = generate_synthetic(&params)?;
    synthetic.save(&args.out)?;
    let corpus = &synthetic.corpus;
    let reposts: usize = corpus.posts.iter().map(|p| p.repost_count()).sum();
    println!(
        "{} users, {} follow edges, {} posts ({:.1} reposts per post) -> {}",
        corpus.graph.user_count(),
        corpus.graph.edge_count(),
        corpus.posts.len(),
        reposts as f64 / corpus.posts.len() as f64,
        args.out.display()
    );
    Ok(())
}

fn train(config: &ExperimentConfig) -> Result<()> {
    let corpus = Corpus::load(&config.corpus)?;
    let (model, outcome) = train_on_corpus(&corpus, &config.training)?;
    model.save(&config.checkpoint)?;
    let history = config.checkpoint.with_extension("loss.json");
    std::fs::write(&history, serde_json::to_string_pretty(&outcome)? + "\n")
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", history.display())))?;
    println!(
        "loss {:.5} -> {:.5} over {} steps; checkpoint {}",
        outcome.loss_history.first().copied().unwrap_or(f64::NAN),
        outcome.loss_history.last().copied().unwrap_or(f64::NAN),
        outcome.steps,
        config.checkpoint.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prep(args) => prep(&args),
        Command::Synth(args) => synth(&args),
        Command::Train(common) => train(&common.resolve()?),
        Command::EvalEstimator(common) => {
            let c = common.resolve()?;
            let corpus = Corpus::load(&c.corpus)?;
            let model = EstimatorModel::load(&c.checkpoint)?;
            let report = evaluate_estimator(&corpus, &model, &ProbabilityMode::standard_sweep(), c.rounds, c.base_seed, c.attribution, c.max_posts)?;
            emit(&c, &report)
        }
        Command::EvalStrategies(common) => {
            let h = Harness::load(common.resolve()?)?;
            emit(&h.config, h.run_strategy_eval()?.as_slice())
        }
        Command::EvalSingle(common) => {
            let h = Harness::load(common.resolve()?)?;
            emit(&h.config, &h.run_singular_user_eval()?)
        }
        Command::Hops(common) => {
            let h = Harness::load(common.resolve()?)?;
            emit(&h.config, &h.run_hop_analysis()?)
        }
        Command::Groups(common) => {
            let h = Harness::load(common.resolve()?)?;
            emit(&h.config, &h.run_group_analysis()?)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
