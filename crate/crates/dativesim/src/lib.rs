//! Small-scale simulated verb learning: train autoregressive Transformer
//! language models on child-directed utterance corpora, teach them a novel
//! dative verb from a single exposure sentence, and measure how the verb
//! generalizes across the double-object and prepositional constructions.
//!
//! The pipeline, in order:
//!
//! 1. [`corpus`] / [`tokenizer`] — utterance corpora and a shared BPE tokenizer.
//! 2. [`lm`] — a decoder-only Transformer with per-token log-probability scoring.
//! 3. [`stimuli`] — factorial exposure stimuli, givenness preambles, and
//!    generalization sets (natural and synthetic).
//! 4. [`dative`] — detection of DO/PP datives in dependency-parsed utterances.
//! 5. [`verbhood`] — the verb-vs-non-verb validation measure used for model
//!    selection during novel-token learning.
//! 6. [`novel`] — embedding-only learning of the novel verb from one exposure.
//! 7. [`experiments`] — the simulation studies and their CSV exports.
//!
//! See the `examples/` directory for one runnable example per capability,
//! and the thin `dativesim` binary for batch use.

pub mod corpus;
pub mod dative;
pub mod error;
pub mod experiments;
pub mod lm;
pub mod novel;
pub mod stimuli;
pub mod tokenizer;
pub mod verbhood;

pub mod cli;

pub use corpus::{load_corpus, Split, UtteranceCorpus};
pub use error::{Error, Result};
pub use tokenizer::SubwordTokenizer;
