//! Evaluation protocol: ROC over held-out target words, standard-deviation
//! lift, and top-k rankings.
//!
//! Seed words are supervision, not discoveries, so callers exclude them from
//! the evaluated population: [`roc_curve`] takes an explicit exclusion set,
//! and [`filtered_population`] prepares the same restriction for [`lift`].

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{FeatureId, IndexedCorpus};
use crate::solver::ModelParams;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalError {
    /// No target feature is present in the evaluated population.
    NoTargets,
    /// Every evaluated feature is a target; there is nothing to rank against.
    NoNonTargets,
    /// Target and exclusion sets overlap.
    TargetsOverlapExclude,
    /// All scores are identical; the lift denominator is zero.
    DegenerateScores,
    /// The score population is empty.
    EmptyScores,
}

impl fmt::Display for EvalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalError::NoTargets => write!(f, "no target features among the scored population"),
            EvalError::NoNonTargets => write!(f, "no non-target features among the scored population"),
            EvalError::TargetsOverlapExclude => {
                write!(f, "target set overlaps the excluded (seed) set")
            }
            EvalError::DegenerateScores => {
                write!(f, "degenerate: all scores are identical (zero standard deviation)")
            }
            EvalError::EmptyScores => write!(f, "score population is empty"),
        }
    }
}

impl core::error::Error for EvalError {}

/// A receiver operating characteristic curve with its trapezoidal area.
#[derive(Debug, Clone, PartialEq)]
pub struct RocResult {
    /// (false positive rate, true positive rate) pairs from (0,0) to (1,1),
    /// non-decreasing in both coordinates.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Sweeps a threshold over the distinct score values, descending.
///
/// Features in `exclude` are removed before evaluation; positives are the
/// `targets`. Tied scores enter together, so intra-tie ordering earns no
/// credit, and the area is the trapezoidal integral of the resulting curve.
pub fn roc_curve(
    scores: &[f64],
    targets: &BTreeSet<FeatureId>,
    exclude: &BTreeSet<FeatureId>,
) -> Result<RocResult, EvalError> {
    if !targets.is_disjoint(exclude) {
        return Err(EvalError::TargetsOverlapExclude);
    }
    // (score, is_target) for the retained population, best first.
    let mut items: Vec<(f64, bool)> = Vec::with_capacity(scores.len());
    for (i, &s) in scores.iter().enumerate() {
        let id = FeatureId(i as u32);
        if !exclude.contains(&id) {
            items.push((s, targets.contains(&id)));
        }
    }
    let n_pos = items.iter().filter(|(_, t)| *t).count();
    let n_neg = items.len() - n_pos;
    if n_pos == 0 {
        return Err(EvalError::NoTargets);
    }
    if n_neg == 0 {
        return Err(EvalError::NoNonTargets);
    }
    items.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::new();
    points.push((0.0, 0.0));
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < items.len() {
        let threshold = items[i].0;
        while i < items.len() && items[i].0 == threshold {
            if items[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(RocResult { points, auc })
}

/// How many population standard deviations the mean target score sits above
/// the mean of all scores.
pub fn lift(scores: &[f64], targets: &BTreeSet<FeatureId>) -> Result<f64, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::EmptyScores);
    }
    // Constant scores have zero standard deviation by definition, even when
    // the floating-point mean of identical values is not exactly their value.
    if scores.iter().all(|&s| s == scores[0]) {
        return Err(EvalError::DegenerateScores);
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    let std = libm::sqrt(var);
    if std == 0.0 {
        return Err(EvalError::DegenerateScores);
    }
    let mut target_sum = 0.0;
    let mut target_count = 0usize;
    for &t in targets {
        if let Some(&s) = scores.get(t.index()) {
            target_sum += s;
            target_count += 1;
        }
    }
    if target_count == 0 {
        return Err(EvalError::NoTargets);
    }
    Ok((target_sum / target_count as f64 - mean) / std)
}

/// Restricts `scores` to the features outside `exclude`, remapping `targets`
/// into the filtered index space. Feeds [`lift`] the seed-free population.
pub fn filtered_population(
    scores: &[f64],
    targets: &BTreeSet<FeatureId>,
    exclude: &BTreeSet<FeatureId>,
) -> (Vec<f64>, BTreeSet<FeatureId>) {
    let mut kept = Vec::with_capacity(scores.len());
    let mut remapped = BTreeSet::new();
    for (i, &s) in scores.iter().enumerate() {
        let id = FeatureId(i as u32);
        if exclude.contains(&id) {
            continue;
        }
        if targets.contains(&id) {
            remapped.insert(FeatureId(kept.len() as u32));
        }
        kept.push(s);
    }
    (kept, remapped)
}

/// The `k` highest-scoring non-excluded phrases, descending score, ties by
/// phrase ascending. Returns fewer than `k` when the vocabulary is small.
pub fn top_words(
    scores: &[f64],
    names: &[String],
    k: usize,
    exclude: &BTreeSet<FeatureId>,
) -> Vec<(String, f64)> {
    debug_assert_eq!(scores.len(), names.len());
    let mut order: Vec<usize> = (0..scores.len())
        .filter(|&i| !exclude.contains(&FeatureId(i as u32)))
        .collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(names[a].cmp(&names[b])));
    order
        .into_iter()
        .take(k)
        .map(|i| (names[i].clone(), scores[i]))
        .collect()
}

/// Top users by bully score and by victim score.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRanking {
    pub bullies: Vec<(String, f64)>,
    pub victims: Vec<(String, f64)>,
}

/// Ranks users by each score family, descending, ties by name ascending.
pub fn rank_users(params: &ModelParams, corpus: &IndexedCorpus, k: usize) -> UserRanking {
    let rank = |scores: &[f64]| -> Vec<(String, f64)> {
        let mut order: Vec<usize> = (0..corpus.n_users()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(corpus.users()[a].cmp(&corpus.users()[b]))
        });
        order
            .into_iter()
            .take(k)
            .map(|i| (corpus.users()[i].clone(), scores[i]))
            .collect()
    };
    UserRanking {
        bullies: rank(&params.b),
        victims: rank(&params.v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_corpus, Message, NgramOrders};
    use crate::solver::{fit, SolverConfig};
    use alloc::string::ToString;

    fn ids(v: &[u32]) -> BTreeSet<FeatureId> {
        v.iter().map(|&k| FeatureId(k)).collect()
    }

    #[test]
    fn roc_perfect_separation() {
        let scores = [0.9, 0.8, 0.2, 0.1];
        let roc = roc_curve(&scores, &ids(&[0, 1]), &BTreeSet::new()).unwrap();
        assert_eq!(roc.auc, 1.0);
        assert_eq!(roc.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(roc.points.last(), Some(&(1.0, 1.0)));
    }

    #[test]
    fn roc_constant_scores_is_chance() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let roc = roc_curve(&scores, &ids(&[0, 2]), &BTreeSet::new()).unwrap();
        assert_eq!(roc.points, alloc::vec![(0.0, 0.0), (1.0, 1.0)]);
        assert!((roc.auc - 0.5).abs() < 1e-15);
    }

    #[test]
    fn roc_four_word_fixture() {
        // Hand enumeration of the four threshold steps:
        // (0,0) -> t1 (0,.5) -> n1 (.5,.5) -> t2 (.5,1) -> n2 (1,1),
        // trapezoids: 0 + .25 + 0 + .5 = 0.75.
        let scores = [0.9, 0.8, 0.7, 0.1];
        let roc = roc_curve(&scores, &ids(&[0, 2]), &BTreeSet::new()).unwrap();
        assert!((roc.auc - 0.75).abs() < 1e-12);
    }

    #[test]
    fn roc_exclusion_removes_seeds_before_rates() {
        // Excluding the top-scoring non-target flips a miss into a win.
        let scores = [1.0, 0.9, 0.1];
        let without = roc_curve(&scores, &ids(&[1]), &BTreeSet::new()).unwrap();
        let with = roc_curve(&scores, &ids(&[1]), &ids(&[0])).unwrap();
        assert!(with.auc > without.auc);
        assert_eq!(with.auc, 1.0);
    }

    #[test]
    fn roc_errors() {
        let scores = [0.5, 0.4];
        assert_eq!(
            roc_curve(&scores, &ids(&[0]), &ids(&[0])).unwrap_err(),
            EvalError::TargetsOverlapExclude
        );
        assert_eq!(
            roc_curve(&scores, &BTreeSet::new(), &BTreeSet::new()).unwrap_err(),
            EvalError::NoTargets
        );
        assert_eq!(
            roc_curve(&scores, &ids(&[0, 1]), &BTreeSet::new()).unwrap_err(),
            EvalError::NoNonTargets
        );
    }

    #[test]
    fn lift_of_everything_is_zero() {
        let scores = [0.3, 0.9, 0.1];
        let l = lift(&scores, &ids(&[0, 1, 2])).unwrap();
        assert!(l.abs() < 1e-15);
    }

    #[test]
    fn lift_hand_computed() {
        // mean 0.25, population std sqrt(3)/4, lift = 0.75 / (sqrt(3)/4) = sqrt(3).
        let scores = [1.0, 0.0, 0.0, 0.0];
        let l = lift(&scores, &ids(&[0])).unwrap();
        assert!((l - libm::sqrt(3.0)).abs() < 1e-12, "lift = {l}");
    }

    #[test]
    fn lift_constant_scores_is_degenerate() {
        let scores = [0.7, 0.7, 0.7];
        assert_eq!(
            lift(&scores, &ids(&[0])).unwrap_err(),
            EvalError::DegenerateScores
        );
    }

    #[test]
    fn lift_is_scale_invariant() {
        let scores = [0.9, 0.1, 0.4, 0.3, 0.0];
        let scaled: Vec<f64> = scores.iter().map(|s| 3.7 * s).collect();
        let targets = ids(&[0, 2]);
        let a = lift(&scores, &targets).unwrap();
        let b = lift(&scaled, &targets).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn filtered_population_remaps_targets() {
        let scores = [0.1, 0.2, 0.3, 0.4];
        let (kept, targets) = filtered_population(&scores, &ids(&[2]), &ids(&[1]));
        assert_eq!(kept, alloc::vec![0.1, 0.3, 0.4]);
        assert_eq!(targets, ids(&[1]));
    }

    #[test]
    fn top_words_applies_tie_and_exclusion_rules() {
        let names: Vec<String> = ["zeta", "alpha", "mid", "seed"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let scores = [0.9, 0.9, 0.5, 1.0];
        let top = top_words(&scores, &names, 10, &ids(&[3]));
        assert_eq!(
            top,
            alloc::vec![
                ("alpha".to_string(), 0.9),
                ("zeta".to_string(), 0.9),
                ("mid".to_string(), 0.5)
            ]
        );
        let top1 = top_words(&scores, &names, 1, &ids(&[3]));
        assert_eq!(top1.len(), 1);
        assert_eq!(top1[0].0, "alpha");
    }

    #[test]
    fn rank_users_from_fitted_fixture() {
        let msgs = alloc::vec![Message::new("m1", "u1", "u2", "badword")];
        let corpus = build_corpus(&msgs, &NgramOrders::default(), 1);
        let seeds = ids(&[0]);
        let config = SolverConfig {
            tol: 1e-14,
            max_iters: 200,
            ..SolverConfig::default()
        };
        let (params, _) = fit(&corpus, &seeds, &config).unwrap();
        let ranking = rank_users(&params, &corpus, 2);
        assert_eq!(ranking.bullies[0].0, "u1");
        assert!((ranking.bullies[0].1 - 1.0 / 3.0).abs() < 1e-9);
        assert_eq!(ranking.victims[0].0, "u2");
        assert!((ranking.victims[0].1 - 1.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn rank_users_all_zero_ties_by_name() {
        let msgs = alloc::vec![
            Message::new("m1", "zed", "amy", "hello"),
            Message::new("m2", "amy", "zed", "there"),
        ];
        let corpus = build_corpus(&msgs, &NgramOrders::unigrams(), 1);
        let params = crate::solver::ModelParams::zeros(&corpus, 1.0);
        let ranking = rank_users(&params, &corpus, 5);
        let names: Vec<&str> = ranking.bullies.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, alloc::vec!["amy", "zed"]);
    }
}
