//! Reproducible experiments: configuration, evaluation populations, AUC,
//! reports and parameter sweeps.

mod auc;
mod config;
mod experiment;
mod population;
mod sweep;

pub use auc::auc;
pub use config::{
    AttackConfig, DetectorsConfig, EvalConfig, ExperimentConfig, GraphConfig, GraphSourceKind, PopulationMode,
    SweepConfig, DEFAULT_GLOBAL_FRACTION,
};
pub use experiment::{
    detecta_names, load_source_graph, poison, run_experiment, sha256_file, AccuracySummary, AttackSummary,
    DetectorFamily, DetectorReport, ExperimentOutcome, GraphSummary, Orientation, PopulationSummary, Report,
    RunStatus, Timings,
};
pub use population::{degree_deciles, matched_population};
pub use sweep::{point_config, sweep, SweepAxis, SweepResult, SweepRow};
