//! Experiment harness.

mod ablation;
pub mod config;
mod experiment;
pub mod stats;
mod synthetic;
mod trace;
mod tune;

pub use ablation::{ablation_csv, ablation_timing_csv, mode_label, run_omp_ablation, AblationRow};
pub use experiment::{
    caption_defaults, configs_for, degrade, results_csv, run_experiment, run_method, run_name, runs_csv,
    timing_csv, write_outputs, BlurSpec, CaptionDefaults, Degraded, ExperimentReport, ExperimentSpec,
    ImageSource, Method, MethodConfigs, MethodRun, QabSettings, ResultRow, RunRecord, TvSettings,
    CAPTION_DEFAULTS, DEFAULT_GAMMA, DEFAULT_ITERS, DEFAULT_REALIZATIONS, DEFAULT_SIGMA_QAB,
};
pub use synthetic::{make_synthetic, SyntheticKind, MIN_SIDE};
pub use trace::{convergence_csv, emit_convergence_trace, increasing_steps, trace_run, TraceRun};
pub use tune::{tune_qab, tune_tv, tuning_csv, GridPoint};
