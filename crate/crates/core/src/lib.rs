//! Disentangling multi-party chat logs into conversations, and measuring how
//! well a disentanglement matches both a gold annotation and human judgment.
//!
//! The crate is organized along the processing pipeline:
//!
//! - [`corpus`] — chat-log ingestion, text normalization, tokenization,
//!   lemmatization, and gold dialog partitions.
//! - [`features`] — numeric feature vectors for (candidate-parent, child)
//!   utterance pairs, including TF-IDF similarity.
//! - [`linker`] — the feedforward reply-link classifier, its training loop,
//!   and connected-component decoding into a [`corpus::Partition`].
//! - [`measures`] — partition-vs-partition scores: ARI, NMI, exact-match F1,
//!   Shen-F, and the edit-effort measure DLD.
//! - [`stats`] — satisfaction-score ingestion and the deviation analysis
//!   suite (RMSE/MAE/Pearson, t-tests, ANOVA, Cohen's kappa).
//! - [`patterns`] — intent/role annotation, Q&A interaction-pattern
//!   matching, and bad-case distributions.

pub mod corpus;
pub mod features;
pub mod linker;
pub mod measures;
pub mod patterns;
pub mod stats;

pub use corpus::{ChatLog, Dialog, Partition, Utterance};
pub use features::{FeatureExtractor, LinkFeatureVector, Vocabulary};
pub use linker::{LinkModel, ReplyGraph, TrainConfig};
pub use measures::{DldParams, MeasureReport};
pub use stats::StatsReport;
