use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::auc::auc;
use super::config::{ExperimentConfig, GraphSourceKind, PopulationMode};
use super::population::matched_population;
use crate::attack::{
    attack_dice, attack_fga, attack_random, dice_labels, select_targets, AttackKind, FgaMode, PoisonedGraph,
};
use crate::baselines::baseline_scores;
use crate::detect::{detect, write_scores, DetectParams, Variant};
use crate::graph::{generate_sbm, largest_connected_component, load_graph, normalize_adjacency, save_graph, Graph};
use crate::seed::{self, stream};
use crate::surrogate::{accuracy, predict, predicted_labels, train_surrogate, SurrogateModel};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Partial,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    /// Nodes before the largest-component restriction.
    pub source_nodes: usize,
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_features: usize,
    pub num_classes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub kind: AttackKind,
    pub budget: usize,
    pub flips: usize,
    pub targets: usize,
    pub victims: usize,
    /// Targets the poisoned model misclassifies (targeted attacks only).
    pub misclassified_targets: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub clean_test: Option<f64>,
    pub poisoned_test: Option<f64>,
    pub retrained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSummary {
    pub mode: PopulationMode,
    pub size: usize,
    pub victims: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorFamily {
    Detecta,
    Baseline,
    Control,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Descending,
    Ascending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorReport {
    pub name: String,
    pub family: DetectorFamily,
    /// AUC of the configured ranking direction.
    pub auc: f64,
    /// AUC with the ranking direction flipped (detecta only).
    pub auc_reversed: Option<f64>,
    /// Direction with the higher AUC (detecta only).
    pub better_orientation: Option<Orientation>,
    pub scores_file: Option<String>,
    pub unconverged: usize,
}

impl DetectorReport {
    /// The larger of the two orientations' AUC.
    pub fn best_auc(&self) -> f64 {
        self.auc_reversed.map_or(self.auc, |r| r.max(self.auc))
    }
}

/// Everything needed to trace a run back to its inputs and score files.
/// Contains no wall-clock values, so reruns with the same configuration
/// serialize identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub status: RunStatus,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub graph: GraphSummary,
    pub attack: AttackSummary,
    pub accuracy: AccuracySummary,
    pub population: PopulationSummary,
    pub detectors: Vec<DetectorReport>,
    /// SHA-256 of every artifact, keyed by path relative to the output
    /// directory.
    pub files: BTreeMap<String, String>,
}

impl Report {
    pub fn detector(&self, name: &str) -> Option<&DetectorReport> {
        self.detectors.iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages_ms: BTreeMap<String, f64>,
    pub detectors_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: Report,
    pub timings: Timings,
    /// Oriented scores per detector (larger is more suspicious).
    pub scores: BTreeMap<String, Vec<f64>>,
    pub victims: Vec<usize>,
    pub population: Vec<usize>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex(&Sha256::digest(&bytes)))
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Names detecta entries `detecta_<variant>`, adding the list index when a
/// variant appears more than once.
pub fn detecta_names(params: &[DetectParams]) -> Vec<String> {
    let count = |v: Variant| params.iter().filter(|p| p.variant == v).count();
    params
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if count(p.variant) > 1 {
                format!("detecta_{}_{i}", p.variant)
            } else {
                format!("detecta_{}", p.variant)
            }
        })
        .collect()
}

struct Output<'a> {
    dir: Option<&'a Path>,
    files: BTreeMap<String, String>,
}

impl Output<'_> {
    fn path(&self, rel: &str) -> Option<PathBuf> {
        self.dir.map(|d| d.join(rel))
    }

    fn record(&mut self, rel: &str) -> Result<()> {
        if let Some(p) = self.path(rel) {
            self.files.insert(rel.to_string(), sha256_file(&p)?);
        }
        Ok(())
    }

    fn record_dir(&mut self, rel: &str) -> Result<()> {
        for name in ["meta.json", "edges.tsv", "features.csv", "labels.csv", "split.json"] {
            self.record(&format!("{rel}/{name}"))?;
        }
        Ok(())
    }

    fn write_json(&self, rel: &str, value: &impl Serialize) -> Result<()> {
        if let Some(p) = self.path(rel) {
            let text = serde_json::to_string_pretty(value)? + "\n";
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        }
        Ok(())
    }
}

fn flush(report: &mut Report, output: &Output<'_>) -> Result<()> {
    report.files = output.files.clone();
    output.write_json("report.json", report)
}

pub fn load_source_graph(cfg: &ExperimentConfig) -> Result<Graph> {
    match cfg.graph.source {
        GraphSourceKind::Sbm => generate_sbm(&cfg.graph.sbm),
        GraphSourceKind::Dir => {
            let path = cfg.graph.path.as_ref().expect("validated");
            load_graph(path)
        }
    }
}

/// Runs the given attack against `g` with the clean surrogate `m`.
pub fn poison(g: &Graph, m: &SurrogateModel, cfg: &ExperimentConfig) -> Result<PoisonedGraph> {
    let a = &cfg.attack;
    let adj = normalize_adjacency(g);
    let pred = predicted_labels(m, &adj)?;
    match a.kind {
        AttackKind::FgaDirect | AttackKind::FgaIndirect => {
            let mode = if a.kind == AttackKind::FgaDirect { FgaMode::Direct } else { FgaMode::Indirect };
            let targets = select_targets(g, &pred, a.targets, cfg.seed);
            attack_fga(g, m, &targets, a.target_budget(), mode, cfg.seed)
        }
        AttackKind::Dice => attack_dice(g, &dice_labels(g, &pred), a.global_budget(g.num_edges()), cfg.seed),
        AttackKind::Random => attack_random(g, a.global_budget(g.num_edges()), cfg.seed),
    }
}

fn test_accuracy(m: &SurrogateModel, g: &Graph) -> Result<Option<f64>> {
    let labeled: Vec<usize> = g.split().test.iter().copied().filter(|&v| g.labels()[v].is_some()).collect();
    if labeled.is_empty() {
        return Ok(None);
    }
    let pred = predicted_labels(m, &normalize_adjacency(g))?;
    accuracy(&pred, g.labels(), &labeled).map(Some)
}

/// Full pipeline: graph → largest component → clean surrogate → attack →
/// retrained surrogate → every configured detector → AUC.
///
/// With `out`, artifacts are written there as they are produced and
/// `report.json` is refreshed after every detector, so an abort leaves a
/// report with `status = "partial"`.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentOutcome> {
    let cfg = cfg.with_seed(cfg.seed);
    cfg.validate()?;
    if cfg.attack.is_zero_budget() {
        return Err(Error::Config("zero-budget attacks produce no victims".into()));
    }
    let started = Instant::now();
    let mut timings = Timings::default();
    let mut output = Output { dir: out, files: BTreeMap::new() };
    if let Some(dir) = out {
        fs::create_dir_all(dir.join("scores")).map_err(|e| Error::io(dir, e))?;
    }

    let t = Instant::now();
    let source = load_source_graph(&cfg)?;
    let g = if cfg.graph.lcc { largest_connected_component(&source)? } else { source.clone() };
    timings.stages_ms.insert("graph".into(), ms(t));
    if let Some(p) = output.path("graph") {
        save_graph(&g, &p)?;
        output.record_dir("graph")?;
    }

    let t = Instant::now();
    let adj = normalize_adjacency(&g);
    let clean = train_surrogate(&g, &adj, &cfg.train)?;
    timings.stages_ms.insert("train".into(), ms(t));
    if let Some(p) = output.path("model_clean.json") {
        clean.save(&p)?;
        output.record("model_clean.json")?;
    }

    let t = Instant::now();
    let poisoned = poison(&g, &clean, &cfg)?;
    timings.stages_ms.insert("attack".into(), ms(t));
    let victims = poisoned.victims().to_vec();
    if victims.is_empty() {
        return Err(Error::Evaluation("the attack produced no victims".into()));
    }
    if let Some(p) = output.path("perturbation.json") {
        poisoned.perturbation.save(&p)?;
        output.record("perturbation.json")?;
        save_graph(&poisoned.graph, output.path("poisoned").expect("dir set"))?;
        output.record_dir("poisoned")?;
    }

    let t = Instant::now();
    let gp = &poisoned.graph;
    let adj_p = normalize_adjacency(gp);
    let model = if cfg.attack.retrain {
        train_surrogate(gp, &adj_p, &cfg.train)?
    } else {
        clean.rebind(gp, &adj_p)?
    };
    timings.stages_ms.insert("retrain".into(), ms(t));
    if let Some(p) = output.path("model_poisoned.json") {
        model.save(&p)?;
        output.record("model_poisoned.json")?;
    }

    let targeted = cfg.attack.kind.is_targeted();
    let misclassified_targets = if targeted {
        let pred = predicted_labels(&model, &adj_p)?;
        Some(
            poisoned
                .perturbation
                .targets
                .iter()
                .filter(|&&t| g.labels()[t].is_some_and(|y| y != pred[t]))
                .count(),
        )
    } else {
        None
    };
    let population = if targeted && cfg.eval.population == PopulationMode::Matched {
        matched_population(gp, &victims, cfg.eval.matched_ratio, cfg.seed)
    } else {
        (0..gp.num_nodes()).collect()
    };
    let mode = if targeted { cfg.eval.population } else { PopulationMode::All };

    let mut report = Report {
        status: RunStatus::Partial,
        seed: cfg.seed,
        config: cfg.clone(),
        graph: GraphSummary {
            source_nodes: source.num_nodes(),
            num_nodes: g.num_nodes(),
            num_edges: g.num_edges(),
            num_features: g.num_features(),
            num_classes: g.num_classes(),
        },
        attack: AttackSummary {
            kind: cfg.attack.kind,
            budget: poisoned.perturbation.budget,
            flips: poisoned.perturbation.budget_used(),
            targets: poisoned.perturbation.targets.len(),
            victims: victims.len(),
            misclassified_targets,
        },
        accuracy: AccuracySummary {
            clean_test: test_accuracy(&clean, &g)?,
            poisoned_test: test_accuracy(&model, gp)?,
            retrained: cfg.attack.retrain,
        },
        population: PopulationSummary {
            mode,
            size: population.len(),
            victims: victims.len(),
        },
        detectors: Vec::new(),
        files: BTreeMap::new(),
    };
    let mut scores = BTreeMap::new();
    flush(&mut report, &output)?;

    let names = detecta_names(&cfg.detectors.detecta);
    for (name, params) in names.iter().zip(&cfg.detectors.detecta) {
        let t = Instant::now();
        let result = detect(gp, &model, params)?;
        timings.detectors_ms.insert(name.clone(), ms(t));
        let oriented = result.oriented_scores();
        let reversed: Vec<f64> = result
            .scores
            .iter()
            .map(|s| s.map_or(f64::NEG_INFINITY, |x| if params.ascending { x } else { -x }))
            .collect();
        let a = auc(&oriented, &victims, &population)?;
        let r = auc(&reversed, &victims, &population)?;
        let configured = if params.ascending { Orientation::Ascending } else { Orientation::Descending };
        let flipped = if params.ascending { Orientation::Descending } else { Orientation::Ascending };
        let rel = format!("scores/{name}.tsv");
        if let Some(p) = output.path(&rel) {
            write_scores(&p, &result.scores, params)?;
            output.record(&rel)?;
        }
        report.detectors.push(DetectorReport {
            name: name.clone(),
            family: DetectorFamily::Detecta,
            auc: a,
            auc_reversed: Some(r),
            better_orientation: Some(if r > a { flipped } else { configured }),
            scores_file: out.map(|_| rel),
            unconverged: result.unconverged.len(),
        });
        scores.insert(name.clone(), oriented);
        flush(&mut report, &output)?;
    }

    let probs = predict(&model, &adj_p)?;
    for &kind in &cfg.detectors.baselines {
        let name = kind.as_str().to_string();
        let t = Instant::now();
        let s = baseline_scores(kind, gp, probs.view())?;
        timings.detectors_ms.insert(name.clone(), ms(t));
        let rel = format!("scores/{name}.tsv");
        if let Some(p) = output.path(&rel) {
            let wrapped: Vec<Option<f64>> = s.iter().copied().map(Some).collect();
            write_scores(&p, &wrapped, &serde_json::json!({ "baseline": name }))?;
            output.record(&rel)?;
        }
        report.detectors.push(DetectorReport {
            name: name.clone(),
            family: DetectorFamily::Baseline,
            auc: auc(&s, &victims, &population)?,
            auc_reversed: None,
            better_orientation: None,
            scores_file: out.map(|_| rel),
            unconverged: 0,
        });
        scores.insert(name, s);
        flush(&mut report, &output)?;
    }

    if cfg.detectors.control {
        let name = "control".to_string();
        let mut rng = seed::rng(cfg.seed, stream::CONTROL);
        let s: Vec<f64> = (0..gp.num_nodes()).map(|_| rng.random::<f64>()).collect();
        let rel = format!("scores/{name}.tsv");
        if let Some(p) = output.path(&rel) {
            let wrapped: Vec<Option<f64>> = s.iter().copied().map(Some).collect();
            write_scores(&p, &wrapped, &serde_json::json!({ "control": "uniform", "seed": cfg.seed }))?;
            output.record(&rel)?;
        }
        report.detectors.push(DetectorReport {
            name: name.clone(),
            family: DetectorFamily::Control,
            auc: auc(&s, &victims, &population)?,
            auc_reversed: None,
            better_orientation: None,
            scores_file: out.map(|_| rel),
            unconverged: 0,
        });
        scores.insert(name, s);
    }

    report.status = RunStatus::Complete;
    flush(&mut report, &output)?;
    timings.total_ms = ms(started);
    output.write_json("timings.json", &timings)?;
    Ok(ExperimentOutcome {
        report,
        timings,
        scores,
        victims,
        population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::DetectorsConfig;

    fn quick() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.attack.targets = 8;
        cfg
    }

    #[test]
    fn reruns_are_identical_and_files_hash_consistently() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ra = run_experiment(&quick(), Some(a.path())).unwrap();
        let rb = run_experiment(&quick(), Some(b.path())).unwrap();
        assert_eq!(ra.report, rb.report);
        let report_a = fs::read(a.path().join("report.json")).unwrap();
        assert_eq!(report_a, fs::read(b.path().join("report.json")).unwrap());
        for (rel, hash) in &ra.report.files {
            assert_eq!(&sha256_file(&a.path().join(rel)).unwrap(), hash, "{rel}");
        }
        assert!(ra.report.files.contains_key("scores/detecta_feat.tsv"));
        assert!(a.path().join("timings.json").exists());
        assert_eq!(ra.report.status, RunStatus::Complete);
    }

    #[test]
    fn every_auc_is_a_probability_and_population_is_matched() {
        let r = run_experiment(&quick(), None).unwrap();
        assert_eq!(r.report.detectors.len(), 6);
        for d in &r.report.detectors {
            assert!((0.0..=1.0).contains(&d.auc), "{}", d.name);
        }
        assert_eq!(r.population.len(), 8 * 6);
        assert_eq!(r.report.attack.targets, 8);
        assert!(r.report.accuracy.clean_test.unwrap() > 0.85);
    }

    #[test]
    fn global_attacks_use_every_node() {
        let mut cfg = quick();
        cfg.attack.kind = AttackKind::Dice;
        cfg.detectors = DetectorsConfig { control: true, ..DetectorsConfig::default() };
        let r = run_experiment(&cfg, None).unwrap();
        assert_eq!(r.population.len(), r.report.graph.num_nodes);
        assert_eq!(r.report.population.mode, PopulationMode::All);
        assert!(r.report.attack.misclassified_targets.is_none());
    }

    #[test]
    fn zero_budget_is_rejected() {
        let mut cfg = quick();
        cfg.attack.budget = Some(0);
        assert!(run_experiment(&cfg, None).unwrap_err().is_usage());
    }

    #[test]
    fn evasion_reuses_clean_weights() {
        let mut cfg = quick();
        cfg.attack.retrain = false;
        let r = run_experiment(&cfg, None).unwrap();
        assert!(!r.report.accuracy.retrained);
    }

    #[test]
    fn duplicate_variants_get_indexed_names() {
        let p = vec![DetectParams::default(), DetectParams { walk_len: 0, ..DetectParams::default() }];
        assert_eq!(detecta_names(&p), vec!["detecta_feat_0", "detecta_feat_1"]);
    }
}
