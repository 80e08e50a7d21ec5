//! Training loop in three modes (cross-entropy only, plus contrastive losses
//! by linear scalarization, or by EPO weights), evaluation, multi-seed runs and
//! hyperparameter sweeps.

mod config;
mod gradsuite;
mod run;
mod step;
mod sweep;

pub use config::{DataConfig, Mode, ModelConfig, RunConfig, SplitKind, SweepGrid, TaskKindConfig, ToyConfig, TrainConfig};
pub use gradsuite::{gradient_suite, GradSuiteConfig, GradSuiteReport, OBJECTIVES};
pub use run::{
    architecture, embed, evaluate, mean_std, run_experiment, run_seed, step_settings, Aggregate,
    EvalRecord, Model, PreparedData, RunReport, SeedRun, SeedSummary,
};
pub use step::{
    batch_gradients, combine, combine_in_place, contrastive_weights, train_step, Combination, GradientSet, StepRecord, StepSettings,
    ZERO_DIRECTION_NORM,
};
pub use sweep::{cell_config, grid, select_best, sweep, SweepCell, SweepReport};

#[cfg(test)]
mod tests;
