//! Seeded sweeps and measured constants at desk scale.

pub mod checks;
pub mod config;
pub mod report;
pub mod sweep;

pub use checks::{
    check_dichotomy, check_major_approx, check_minor_sup, check_unbalanced, dichotomy_boxes, unbalanced_instance,
    DichotomySummary, LawPoint, LawSummary, MinorSupSummary, UnbalancedBucket, UnbalancedSummary, SLOPE_TOL,
};
pub use config::SweepConfig;
pub use report::{emit_report, parse_jsonl, render_csv, render_jsonl, CSV_COLUMNS};
pub use sweep::{
    evaluate_instance, generate_instances, run_sweep, summarize, sweep_bound, BucketStat, ReportRecord,
    SweepSummary,
};
