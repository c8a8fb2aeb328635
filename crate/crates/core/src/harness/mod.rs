//! Data ingestion, configuration, training loop, metrics and exports.

pub mod config;
pub mod data;
pub mod export;
pub mod metrics;
pub mod train;

pub use config::TrainConfig;
pub use data::{encode, load_tsv, parse_tsv, words, Example, LabeledText, Vocab, PAD_ID, UNK_ID};
pub use export::{export_attention, export_embeddings, read_predictions, write_predictions};
pub use metrics::{disagree, evaluate_predictions, ClassMetrics, DisagreementReport, EvalReport};
pub use train::{evaluate, train, train_files, EpochRecord, Evaluation, RunDir, TrainOutcome, Trained, METRICS_HEADER};
