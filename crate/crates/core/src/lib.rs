//! Structure-aware membership inference for code language models.
//!
//! The crate turns source files into per-character weight masks, projects
//! them onto model tokens, scores token-level logit statistics, trains
//! per-layer probes on hidden-state features and evaluates the resulting
//! membership scores.

pub mod error;
pub mod eval;
pub mod mask;
pub mod ndjson;
pub mod pipeline;
pub mod probe;
pub mod projection;
pub mod sample;
pub mod scoring;
pub mod synthetic;

pub use error::{Error, Result};
pub use mask::{
    build_mask, AnomalyKind, AnomalySpan, CharWeightMask, LintDiagnostic, MaskEngine, MaskRecord,
    Tier,
};
pub use probe::{LayerFeatureVector, ProbeBundle, ProbeParams, TrainConfig};
pub use projection::{project, TokenSpan, TokenWeights};
pub use sample::{Label, Language, SourceSample};
pub use scoring::{MembershipScore, TokenRecord, TokenRecordRow};
