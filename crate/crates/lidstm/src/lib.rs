//! Character-level language identification for short text.
//!
//! A two-layer bidirectional LSTM reads a string one character at a time,
//! produces per-character logits, sum-pools them over the string, and applies
//! a softmax over the supported languages. Training (weighted cross-entropy,
//! backpropagation through time, AdamW) is implemented here directly; the only
//! numeric dependency is `ndarray` for dense matrix storage and matmul.
//!
//! The crate is organised as a pipeline:
//!
//! * [`corpus`] — text cleaning, CoNLL-U / plain-line ingestion, the character
//!   vocabulary, and stratified fold assignment.
//! * [`model`] — parameter containers, initialization, the forward pass, and
//!   the binary model file format.
//! * [`training`] — loss, BPTT gradients, AdamW, the training loop, k-fold
//!   cross-validation, and a finite-difference gradient checker.
//! * [`evaluation`] — accuracy@k, F1 aggregates, confusion matrices, and
//!   report files.
//! * [`cli`] — the `lidstm` command-line tool built on the above.

pub mod cli;
pub mod corpus;
pub mod evaluation;
pub mod float;
mod fsutil;
pub mod model;
pub mod training;

pub use corpus::{FoldedDataset, LanguageSet, Sample, Vocabulary};
pub use evaluation::{ConfusionMatrix, EvalReport};
pub use float::Real;
pub use model::{HyperParams, ModelParams, Prediction};
pub use training::{ArchConfig, ClassWeights, TrainConfig};
