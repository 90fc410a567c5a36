//! Comparison methods: seed co-occurrence and dynamic query expansion.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{FeatureId, IndexedCorpus};

/// Scores every feature 1.0 if it shares at least one message with a seed
/// feature, else 0.0. Seeds co-occur with themselves, so any seed present in
/// the corpus scores 1.0.
pub fn cooccurrence_scores(corpus: &IndexedCorpus, seeds: &BTreeSet<FeatureId>) -> Vec<f64> {
    let mut out = vec![0.0; corpus.n_features()];
    for m in corpus.interactions() {
        if m.features().iter().any(|k| seeds.contains(k)) {
            for &k in m.features() {
                out[k.index()] = 1.0;
            }
        }
    }
    out
}

/// Controls for [`dqe_scores`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DqeConfig {
    /// Keyword budget per iteration.
    pub k: usize,
    pub max_iters: usize,
}

impl Default for DqeConfig {
    fn default() -> Self {
        DqeConfig {
            k: 100,
            max_iters: 10,
        }
    }
}

/// Result of a dynamic-query-expansion run.
#[derive(Debug, Clone, PartialEq)]
pub struct DqeOutcome {
    /// Document-frequency score per feature from the last scoring round.
    pub scores: Vec<f64>,
    /// Final keyword set.
    pub keywords: BTreeSet<FeatureId>,
    /// Scoring rounds performed.
    pub iterations: usize,
    /// Whether two consecutive keyword sets matched before `max_iters`.
    pub stabilized: bool,
    /// True when a relevant-message set came up empty (for example, no seed
    /// occurs in the corpus). The loop ends immediately in that case and all
    /// scores are zero.
    pub degenerate: bool,
}

/// Iterates document-frequency scoring over the seed-relevant messages.
///
/// Each round extracts the messages whose feature set intersects the current
/// keyword set (initially the seeds), scores every feature by the fraction
/// of those messages containing it, then reselects the `k` highest-scoring
/// features (ties broken by ascending feature id) as the next keyword set.
/// The loop stops when the keyword set repeats or `max_iters` is reached.
pub fn dqe_scores(
    corpus: &IndexedCorpus,
    seeds: &BTreeSet<FeatureId>,
    config: &DqeConfig,
) -> DqeOutcome {
    assert!(config.k >= 1, "keyword budget must be at least 1");
    assert!(config.max_iters >= 1, "max_iters must be at least 1");

    let n = corpus.n_features();
    let mut keywords: BTreeSet<FeatureId> = seeds.clone();
    let mut scores = vec![0.0; n];
    let mut iterations = 0;
    let mut stabilized = false;
    let mut degenerate = false;

    for _ in 0..config.max_iters {
        iterations += 1;
        scores = vec![0.0; n];
        let mut relevant = 0usize;
        for m in corpus.interactions() {
            if m.features().iter().any(|k| keywords.contains(k)) {
                relevant += 1;
                for &k in m.features() {
                    scores[k.index()] += 1.0;
                }
            }
        }
        if relevant == 0 {
            degenerate = true;
            keywords = top_k_by_score(&scores, config.k);
            break;
        }
        for s in scores.iter_mut() {
            *s /= relevant as f64;
        }
        let next = top_k_by_score(&scores, config.k);
        if next == keywords {
            stabilized = true;
            break;
        }
        keywords = next;
    }

    DqeOutcome {
        scores,
        keywords,
        iterations,
        stabilized,
        degenerate,
    }
}

/// The `k` highest-scoring feature ids, ties broken by ascending id.
fn top_k_by_score(scores: &[f64], k: usize) -> BTreeSet<FeatureId> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .take(k)
        .map(|i| FeatureId(i as u32))
        .collect()
}
