use std::fs;
use std::path::{Path, PathBuf};

use neighvar::baselines::{baseline_scores, BaselineKind};
use neighvar::detect::{read_scores, write_scores, ScoreFile};
use neighvar::graph::{generate_sbm, largest_connected_component, load_graph, normalize_adjacency, save_graph};
use neighvar::harness::{
    auc, matched_population, poison, run_experiment, sweep, ExperimentConfig, PopulationMode, SweepAxis,
};
use neighvar::surrogate::{accuracy, predict, predicted_labels, train_surrogate};
use neighvar::{AttackKind, Error, Perturbation, SurrogateModel};
use serde_json::json;

use crate::args::{AttackArgs, DetectArgs, EvalArgs, GenerateArgs, SweepArgs, TrainArgs};
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Global options shared by every subcommand.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub out: Option<PathBuf>,
}

impl Context {
    pub fn new(config: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let cfg = match config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        let seed = seed.unwrap_or(cfg.seed);
        let out = out.or_else(|| cfg.out_dir.clone());
        Ok(Self {
            cfg: cfg.with_seed(seed),
            out,
        })
    }

    fn out(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("--out {what} is required")))
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(parent) => fs::create_dir_all(parent).map_err(|e| CliError::Io(parent.to_path_buf(), e)),
        None => Ok(()),
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4}"))
}

pub fn generate(ctx: &Context, a: &GenerateArgs) -> Result<()> {
    let out = ctx.out("DIR")?;
    let mut sbm = ctx.cfg.graph.sbm.clone();
    if let Some(b) = &a.blocks {
        sbm.block_sizes = b.clone();
    }
    sbm.p_in = a.p_in.unwrap_or(sbm.p_in);
    sbm.p_out = a.p_out.unwrap_or(sbm.p_out);
    sbm.mu = a.mu.unwrap_or(sbm.mu);
    sbm.sigma = a.sigma.unwrap_or(sbm.sigma);
    sbm.feature_dim = a.feature_dim.unwrap_or(sbm.feature_dim);
    sbm.validate()?;
    let mut g = generate_sbm(&sbm)?;
    if ctx.cfg.graph.lcc && !a.no_lcc {
        g = largest_connected_component(&g)?;
    }
    save_graph(&g, out)?;
    eprintln!("wrote {} nodes, {} edges to {}", g.num_nodes(), g.num_edges(), out.display());
    Ok(())
}

pub fn train(ctx: &Context, a: &TrainArgs) -> Result<()> {
    let out = ctx.out("FILE")?;
    let mut tc = ctx.cfg.train.clone();
    tc.lr = a.lr.unwrap_or(tc.lr);
    tc.epochs = a.epochs.unwrap_or(tc.epochs);
    tc.weight_decay = a.weight_decay.unwrap_or(tc.weight_decay);
    tc.validate()?;
    let g = load_graph(&a.graph)?;
    let adj = normalize_adjacency(&g);
    let m = train_surrogate(&g, &adj, &tc)?;
    m.save(out)?;
    let test: Vec<usize> = g.split().test.iter().copied().filter(|&v| g.labels()[v].is_some()).collect();
    let test_acc = if test.is_empty() {
        None
    } else {
        Some(accuracy(&predicted_labels(&m, &adj)?, g.labels(), &test)?)
    };
    eprintln!(
        "best epoch {}, val accuracy {}, test accuracy {}",
        m.meta().best_epoch,
        fmt_opt(m.meta().best_val_accuracy),
        fmt_opt(test_acc)
    );
    Ok(())
}

pub fn attack(ctx: &Context, a: &AttackArgs) -> Result<()> {
    let out = ctx.out("FILE")?;
    let mut cfg = ctx.cfg.clone();
    if let Some(k) = &a.kind {
        cfg.attack.kind = k.parse::<AttackKind>()?;
    }
    if a.budget.is_some() || a.budget_frac.is_some() || a.budget_degree {
        cfg.attack.budget = a.budget;
        cfg.attack.budget_frac = a.budget_frac;
    }
    if a.budget_degree && !cfg.attack.kind.is_targeted() {
        return Err(CliError::Usage("--budget-degree applies to targeted attacks only".into()));
    }
    cfg.attack.targets = a.targets.unwrap_or(cfg.attack.targets);
    cfg.attack.validate()?;
    if cfg.attack.is_zero_budget() {
        return Err(Error::Config("zero-budget attacks produce no victims".into()).into());
    }
    let g = load_graph(&a.graph)?;
    let m = SurrogateModel::load(&a.model, &g, &normalize_adjacency(&g))?;
    let poisoned = poison(&g, &m, &cfg)?;
    ensure_parent(out)?;
    poisoned.perturbation.save(out)?;
    if let Some(dir) = &a.graph_out {
        save_graph(&poisoned.graph, dir)?;
    }
    eprintln!(
        "{}: {} flips, {} victims",
        cfg.attack.kind,
        poisoned.perturbation.budget_used(),
        poisoned.victims().len()
    );
    Ok(())
}

pub fn detect(ctx: &Context, a: &DetectArgs) -> Result<()> {
    let out = ctx.out("FILE")?;
    let g = load_graph(&a.graph)?;
    let adj = normalize_adjacency(&g);
    let m = SurrogateModel::load(&a.model, &g, &adj)?;
    ensure_parent(out)?;
    if let Some(b) = &a.baseline {
        let kind: BaselineKind = b.parse()?;
        let s = baseline_scores(kind, &g, predict(&m, &adj)?.view())?;
        let wrapped: Vec<Option<f64>> = s.into_iter().map(Some).collect();
        write_scores(out, &wrapped, &json!({ "baseline": kind.as_str() }))?;
        eprintln!("{kind}: scored {} nodes", g.num_nodes());
        return Ok(());
    }
    let mut p = ctx.cfg.detectors.detecta.first().cloned().unwrap_or_default();
    if let Some(v) = &a.variant {
        p.variant = v.parse()?;
    }
    p.gamma = a.gamma.unwrap_or(p.gamma);
    p.walk_len = a.walk_len.unwrap_or(p.walk_len);
    p.walks = a.walks.unwrap_or(p.walks);
    p.eta = a.eta.unwrap_or(p.eta);
    p.kappa = a.kappa.unwrap_or(p.kappa);
    p.ascending |= a.ascending;
    p.degree_normalize |= a.degree_normalize;
    p.seed = ctx.cfg.seed;
    p.validate()?;
    let result = neighvar::detect(&g, &m, &p)?;
    write_scores(out, &result.scores, &result.params)?;
    eprintln!(
        "detecta_{}: {} candidates, {} unconverged",
        p.variant,
        result.candidates.len(),
        result.unconverged.len()
    );
    Ok(())
}

pub fn eval(ctx: &Context, a: &EvalArgs) -> Result<()> {
    let file = read_scores(&a.scores)?;
    let perturbation = Perturbation::load(&a.perturbation)?;
    let g = load_graph(&a.graph)?;
    if file.scores.len() != g.num_nodes() {
        return Err(Error::Evaluation(format!(
            "{} scores for a graph of {} nodes",
            file.scores.len(),
            g.num_nodes()
        ))
        .into());
    }
    let ascending = sidecar_ascending(&a.scores)?;
    let mode = match a.population.as_deref() {
        None => ctx.cfg.eval.population,
        Some("all") => PopulationMode::All,
        Some("matched") => PopulationMode::Matched,
        Some(other) => return Err(CliError::Usage(format!("unknown population {other:?} (expected all or matched)"))),
    };
    let targeted = perturbation.kind.is_targeted();
    let victims = &perturbation.victims;
    let population = if targeted && mode == PopulationMode::Matched {
        matched_population(&g, victims, ctx.cfg.eval.matched_ratio, perturbation.seed)
    } else {
        (0..g.num_nodes()).collect()
    };
    let oriented = |flip: bool| -> Vec<f64> {
        file.scores
            .iter()
            .map(|s| s.map_or(f64::NEG_INFINITY, |x| if flip { -x } else { x }))
            .collect()
    };
    let configured = auc(&oriented(ascending), victims, &population)?;
    let reversed = auc(&oriented(!ascending), victims, &population)?;
    let report = json!({
        "scores": a.scores.file_name().map(|n| n.to_string_lossy().into_owned()),
        "scores_sha256": neighvar::harness::sha256_file(&a.scores)?,
        "attack": perturbation.kind,
        "population": if targeted { mode } else { PopulationMode::All },
        "population_size": population.len(),
        "victims": victims.len(),
        "orientation": if ascending { "ascending" } else { "descending" },
        "auc": configured,
        "auc_reversed": reversed,
    });
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    match &ctx.out {
        Some(p) => write(p, &text)?,
        None => print!("{text}"),
    }
    eprintln!("AUC {configured:.4} (reversed {reversed:.4}) over {} nodes", population.len());
    Ok(())
}

fn sidecar_ascending(scores: &Path) -> Result<bool> {
    let path = ScoreFile::sidecar(scores);
    let Ok(text) = fs::read_to_string(&path) else {
        return Ok(false);
    };
    let v: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    Ok(v.get("ascending").and_then(|a| a.as_bool()).unwrap_or(false))
}

pub fn run_all(ctx: &Context) -> Result<()> {
    let out = ctx.out("DIR")?;
    let outcome = run_experiment(&ctx.cfg, Some(out))?;
    let r = &outcome.report;
    println!(
        "{} on {} nodes: {} flips, {} victims, population {}",
        r.attack.kind, r.graph.num_nodes, r.attack.flips, r.attack.victims, r.population.size
    );
    println!(
        "test accuracy clean {} poisoned {}",
        fmt_opt(r.accuracy.clean_test),
        fmt_opt(r.accuracy.poisoned_test)
    );
    for d in &r.detectors {
        match d.auc_reversed {
            Some(rev) => println!("{:<16} {:.4}  (reversed {:.4})", d.name, d.auc, rev),
            None => println!("{:<16} {:.4}", d.name, d.auc),
        }
    }
    Ok(())
}

pub fn sweep_cmd(ctx: &Context, a: &SweepArgs) -> Result<()> {
    let axis: SweepAxis = a.axis.parse()?;
    let out = ctx.out("DIR")?;
    let result = sweep(&ctx.cfg, axis, Some(out))?;
    print!("{}", result.to_tsv());
    Ok(())
}
