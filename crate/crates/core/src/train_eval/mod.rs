//! Training, evaluation, the three split protocols and the two sweeps.

mod eval;
mod protocol;
mod report;
mod stats;
mod train;

pub use eval::{evaluate, predict, report_from_predictions, EvalReport};
pub use protocol::{
    audit_lineage, evaluation_view, restrict_classes, run_pooled_budget, run_protocol, sweep_classes, sweep_job_seed,
    sweep_train_size, train_and_evaluate, RunSettings, SweepPoint, SweepSettings,
};
pub use report::{read_sweep_csv, write_confusion_csv, write_sweep_csv, SWEEP_HEADER};
pub use stats::{mean, population_std, ranks, spearman};
pub use train::{train_model, EpochRecord, TrainHyper, TrainOutcome, TrainedModel};
