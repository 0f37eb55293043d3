use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "neighvar", version, about = "Poison node-classification graphs and detect the victims")]
pub struct Cli {
    /// TOML experiment configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Experiment seed (overrides `seed` in the config).
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,

    /// Output location: a directory for generate, run-all and sweep, a file
    /// for train, attack, detect and eval.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an SBM graph and write it as a graph directory.
    Generate(GenerateArgs),
    /// Train the linear surrogate on a graph directory.
    Train(TrainArgs),
    /// Poison a graph and write the perturbation.
    Attack(AttackArgs),
    /// Score every node of a (poisoned) graph.
    Detect(DetectArgs),
    /// AUC of a score file against a perturbation's victims.
    Eval(EvalArgs),
    /// The full pipeline with every configured detector.
    RunAll,
    /// Repeat the pipeline along one parameter axis.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Block sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub blocks: Option<Vec<usize>>,
    #[arg(long)]
    pub p_in: Option<f64>,
    #[arg(long)]
    pub p_out: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub feature_dim: Option<usize>,
    /// Keep every node instead of the largest connected component.
    #[arg(long)]
    pub no_lcc: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "DIR")]
    pub graph: PathBuf,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub weight_decay: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    #[arg(long, value_name = "DIR")]
    pub graph: PathBuf,
    /// Clean surrogate trained on `--graph`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// fga, fga-indirect, dice or random.
    #[arg(long)]
    pub kind: Option<String>,
    /// Flips per target (targeted) or in total (global).
    #[arg(long, group = "budget_rule")]
    pub budget: Option<usize>,
    /// Fraction of each target's degree (targeted) or of the edge count (global).
    #[arg(long, group = "budget_rule")]
    pub budget_frac: Option<f64>,
    /// One flip per unit of target degree.
    #[arg(long, group = "budget_rule")]
    pub budget_degree: bool,
    #[arg(long)]
    pub targets: Option<usize>,
    /// Also write the poisoned graph directory here.
    #[arg(long, value_name = "DIR")]
    pub graph_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, value_name = "DIR")]
    pub graph: PathBuf,
    /// Surrogate trained on `--graph`.
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Score with a baseline (jaccard, prox or jsd) instead of detecta.
    #[arg(long, conflicts_with_all = ["variant", "gamma", "walk_len", "walks", "eta", "kappa", "ascending", "degree_normalize"])]
    pub baseline: Option<String>,
    /// feat or sim.
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub walk_len: Option<usize>,
    #[arg(long)]
    pub walks: Option<usize>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Rank low scores as most suspicious.
    #[arg(long)]
    pub ascending: bool,
    /// Divide the sim score by the neighbor count.
    #[arg(long)]
    pub degree_normalize: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "FILE")]
    pub scores: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub perturbation: PathBuf,
    /// The poisoned graph the scores were computed on.
    #[arg(long, value_name = "DIR")]
    pub graph: PathBuf,
    /// all or matched (targeted attacks only).
    #[arg(long)]
    pub population: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// gamma, walk-len or budget.
    #[arg(long)]
    pub axis: String,
}
