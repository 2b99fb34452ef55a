//! Attack evaluation: rank-based AUC, ROC curves, balanced splits and the
//! per-language report.

mod auc;
mod report;
mod split;

pub use auc::{auc_roc, roc_curve, trapezoid_area, write_roc_csv, RocPoint};
pub use report::{build_report, EvalReport, LanguageCell, MethodReport, ScoredSample, METHODS};
pub use split::{make_splits, LanguageSplit, SplitPlan};
