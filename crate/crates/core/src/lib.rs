//! Global text augmentation for short-text classification: WordNet
//! synonym replacement, word-vector neighbour replacement, round-trip
//! translation and mixup, plus TFIDF/softmax and embedding-average MLP
//! classifiers and a config-driven benchmark harness.
//!
//! Everything random is driven by seeded ChaCha streams (see [`rng`]), so
//! runs with the same seed are byte-identical regardless of thread count.

pub mod augment;
pub mod bench;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod learn;
pub mod rng;
pub mod synth;
pub mod vectorize;
pub mod wordnet;
