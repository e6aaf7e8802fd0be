//! Experiment runner: config parsing, vanishing-viscosity convergence
//! studies against an ideal reference run, corrector scaling studies,
//! function-space identity batches, and CSV/report emission.

mod config;
mod corrector_study;
mod fit;
mod report;
mod study;
mod verify;

pub use config::{parse_config, Config, FitWindow};
pub use corrector_study::{
    corrector_scaling_study, default_cases, CaseResult, CorrectorCase, CorrectorReport,
};
pub use fit::{fit_rate, Fit};
pub use report::fmt_f64;
pub use study::{convergence_study, h2kp1_probe, MemberRow, ProbeBlock, RateReport, StudyConfig};
pub use verify::{verify_spaces, CheckKind, CheckRow, VerifyReport};
