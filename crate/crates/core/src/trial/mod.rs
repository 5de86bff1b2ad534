//! Experimental trial analysis: log ingestion and cleaning, range of motion,
//! motor torque, repeatability, Friedman statistics, questionnaire summaries
//! and the aggregated study report.

mod likert;
mod log;
mod metrics;
mod report;
mod stats;

pub use likert::{likert_summary, parse_likert_csv, LikertItem, LikertResponse, LikertSummary, LIKERT_CSV_HEADER};
pub(crate) use log::csv_error;
pub use log::{
    parse_trial_csv, read_trial_file, write_trial_csv, Button, LoadCondition, SpringLabel, TrialLog, TrialMeta,
    TrialSample, TRIAL_CSV_HEADER,
};
pub use metrics::{
    clean_interpolate, joint_torque_estimate, repeatability, rms_torque, rom_metrics, torque_series, trial_metrics,
    CleanedTrial, CleaningPolicy, RepeatabilityRecord, Rom, TrialMetrics,
};
pub use report::{
    aggregate_report, build_report, evaluate_trial, quantiles, FriedmanSection, GroupSpread, Quantiles, Rejection,
    RepeatabilityPair, RepeatabilitySection, SpringDistribution, StudyReport, TrialInput, TrialRow,
};
pub use stats::{chi2_sf, friedman_test, ln_gamma, regularized_gamma_q, FriedmanResult};
