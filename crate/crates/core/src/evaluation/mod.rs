//! Overlap metrics and the emotion-control accuracy.

pub mod acer;
pub mod metrics;
pub mod report;

pub use acer::{acer_score, AcerClassifier, AcerConfig, AcerItem, AcerPair, MatchRule, PlutchikPredictor};
pub use metrics::{bleu, meteor_lite, modified_precision, rouge, RougeVariant};
pub use report::{evaluate, Metric, MetricReport};
