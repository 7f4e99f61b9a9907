//! Emoji prediction for tweets.
//!
//! Pipeline pieces: JSONL corpus ingestion and filtering, emoji label-set
//! derivation, tweet text normalization with hashtag segmentation and
//! application-source canonicalization, vocabulary/bag-of-words encoding,
//! from-scratch linear SVM / random forest / BiLSTM classifiers, and
//! macro-averaged evaluation with an ablation-style experiment runner.

pub mod baselines;
pub mod corpus;
pub mod emoji;
pub mod error;
pub mod eval;
pub mod features;
pub mod neural;
pub mod pipeline;
pub mod textprep;
pub mod util;

pub use error::{Error, Result};
