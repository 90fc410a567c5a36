//! Participant-vocabulary consistency scoring.
//!
//! Given a corpus of directed messages and a small seed lexicon of harassment
//! indicators, this crate jointly learns per-user bully scores, per-user
//! victim scores, and per-phrase indicator scores by alternating
//! least-squares on a single consistency objective. It also ships the two
//! classic comparison methods (seed co-occurrence and dynamic query
//! expansion), the evaluation protocol (held-out ROC, standard-deviation
//! lift, top-k rankings), and a synthetic-corpus generator with planted
//! ground truth for end-to-end recovery benchmarks.
//!
//! The crate is `no_std` (with `alloc`); file formats and the command-line
//! front end live in the companion `pvc-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod corpus;
pub mod eval;
pub mod solver;
pub mod synth;

pub use corpus::{
    build_corpus, parse_messages, split_lexicon, tokenize, CorpusError, FeatureId, IndexedCorpus,
    Lexicon, Message, NgramOrders, UserId,
};
pub use solver::{
    fit, objective, solve_exact, FitTrace, ModelParams, SolverConfig, SolverError,
};
