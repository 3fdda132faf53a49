//! Dataset assembly, the training loop, prediction and evaluation metrics.

pub mod dataset;
pub mod metrics;
pub mod predict;
pub mod trainer;

pub use dataset::{Dataset, DatasetError};
pub use metrics::{
    accuracy, confusion_from_predictions, per_class_metrics, ranked_classes, topk_accuracy, topk_curve,
    ClassMetrics, ConfusionMatrix, MetricsError, MetricsReport,
};
pub use predict::{argmax, predict};
pub use trainer::{
    evaluate_accuracy, history_csv, train, train_step, HistoryRow, StepStats, TrainConfig, TrainError, TrainOutcome,
};
