//! Confusion matrices, accuracy/precision/recall/F1 and sweep tables.
//!
//! Multi-class scores are one-vs-rest per class, macro-averaged with equal
//! class weight.

mod metrics;
mod report;

pub use metrics::{compute_metrics, confusion, ClassMetrics, ConfusionMatrix, MetricsReport};
pub use report::{setting_label, sweep_report, Summary, SweepCell, SweepTable};
