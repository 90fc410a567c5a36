//! The participant-vocabulary consistency objective and its alternating
//! least-squares solver.
//!
//! Every stored message couples three score families: the sender's bully
//! score `b`, the receiver's victim score `v`, and the indicator score `w` of
//! each feature the message contains. The objective
//!
//! ```text
//! J = λ/2 (‖b‖² + ‖v‖² + ‖w‖²)
//!   + 1/2 Σ_m Σ_{k ∈ f(m)} (b_{s(m)} + v_{r(m)} − w_k)²
//! ```
//!
//! penalizes the squared gap between each message's participant sum and each
//! of its feature scores, plus an L2 ridge on all three vectors. Seed
//! features are clamped to 1.0 by substitution: they are initialized to 1.0
//! and never updated. With the clamp in place J is a strictly convex
//! quadratic in the free coordinates, so [`solve_exact`] can recover the
//! global minimum from one dense linear system and serve as an oracle for
//! the iterative [`fit`].
//!
//! Each block update is the exact minimizer of J in that block with the
//! other two held fixed, so the objective never increases. All reductions
//! run in canonical index order: repeated runs are bit-identical.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::corpus::{FeatureId, IndexedCorpus};

/// The three learned score vectors plus the ridge weight used to fit them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Bully score per user id.
    pub b: Vec<f64>,
    /// Victim score per user id.
    pub v: Vec<f64>,
    /// Indicator score per feature id.
    pub w: Vec<f64>,
    /// Ridge regularization weight, strictly positive.
    pub lambda: f64,
}

impl ModelParams {
    /// All-zero scores sized for `corpus`.
    pub fn zeros(corpus: &IndexedCorpus, lambda: f64) -> Self {
        assert!(lambda > 0.0, "lambda must be positive");
        ModelParams {
            b: vec![0.0; corpus.n_users()],
            v: vec![0.0; corpus.n_users()],
            w: vec![0.0; corpus.n_features()],
            lambda,
        }
    }

    /// Zero scores with every seed indicator clamped to 1.0.
    pub fn seeded(corpus: &IndexedCorpus, seeds: &BTreeSet<FeatureId>, lambda: f64) -> Self {
        let mut params = ModelParams::zeros(corpus, lambda);
        for &k in seeds {
            params.w[k.index()] = 1.0;
        }
        params
    }
}

/// Loop controls for [`fit`]. The block update order is fixed as b, v, w:
/// user blocks go first so that the seeded indicator scores propagate to
/// participants in the very first iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Convergence threshold on the largest per-coordinate change of one full
    /// iteration, relative to the largest score magnitude (floored at 1).
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 1.0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// Objective values recorded while fitting.
#[derive(Debug, Clone, PartialEq)]
pub struct FitTrace {
    /// `objectives[0]` is the objective of the initial (seeded) parameters;
    /// `objectives[t]` the value after full iteration `t`. Non-increasing.
    pub objectives: Vec<f64>,
    pub converged: bool,
}

impl FitTrace {
    /// Number of full iterations performed.
    pub fn iterations(&self) -> usize {
        self.objectives.len().saturating_sub(1)
    }

    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("trace holds the initial objective")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// Parameter vector length does not match the corpus.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Training without any seed feature would return the all-zero model.
    EmptySeedSet,
    /// A seed feature id is outside the corpus vocabulary.
    SeedOutOfRange { seed: u32, vocab: usize },
    /// The instance has too many free coordinates for a dense solve.
    InstanceTooLarge { free: usize, max: usize },
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "{what} has length {got}, corpus expects {expected}"),
            SolverError::EmptySeedSet => write!(f, "seed set is empty"),
            SolverError::SeedOutOfRange { seed, vocab } => {
                write!(f, "seed feature id {seed} outside vocabulary of size {vocab}")
            }
            SolverError::InstanceTooLarge { free, max } => write!(
                f,
                "{free} free coordinates exceed the dense-solve limit of {max}; use fit instead"
            ),
        }
    }
}

impl core::error::Error for SolverError {}

fn check_dims(params: &ModelParams, corpus: &IndexedCorpus) -> Result<(), SolverError> {
    let checks = [
        ("b", params.b.len(), corpus.n_users()),
        ("v", params.v.len(), corpus.n_users()),
        ("w", params.w.len(), corpus.n_features()),
    ];
    for (what, got, expected) in checks {
        if got != expected {
            return Err(SolverError::DimensionMismatch {
                what,
                expected,
                got,
            });
        }
    }
    Ok(())
}

fn check_seeds(seeds: &BTreeSet<FeatureId>, corpus: &IndexedCorpus) -> Result<(), SolverError> {
    for &k in seeds {
        if k.index() >= corpus.n_features() {
            return Err(SolverError::SeedOutOfRange {
                seed: k.0,
                vocab: corpus.n_features(),
            });
        }
    }
    Ok(())
}

/// Evaluates the objective at `params`.
///
/// Messages are reduced in stored order and features in ascending id order,
/// so the result is reproducible bit for bit.
pub fn objective(params: &ModelParams, corpus: &IndexedCorpus) -> Result<f64, SolverError> {
    check_dims(params, corpus)?;
    Ok(objective_unchecked(params, corpus))
}

fn objective_unchecked(params: &ModelParams, corpus: &IndexedCorpus) -> f64 {
    let mut ridge = 0.0;
    for &x in params.b.iter().chain(&params.v).chain(&params.w) {
        ridge += x * x;
    }
    let mut consistency = 0.0;
    for m in corpus.interactions() {
        let social = params.b[m.sender.index()] + params.v[m.receiver.index()];
        for &k in m.features() {
            let gap = social - params.w[k.index()];
            consistency += gap * gap;
        }
    }
    0.5 * params.lambda * ridge + 0.5 * consistency
}

/// Closed-form minimizer of the objective over all bully scores, with `v`
/// and `w` fixed. Users who send no messages score 0: the ridge term alone
/// pins them there.
pub fn update_bully(params: &ModelParams, corpus: &IndexedCorpus) -> Vec<f64> {
    debug_assert!(check_dims(params, corpus).is_ok());
    let mut out = vec![0.0; corpus.n_users()];
    for (i, bi) in out.iter_mut().enumerate() {
        let mut numer = 0.0;
        let mut denom = params.lambda;
        for &mi in corpus.sent_by(crate::corpus::UserId(i as u32)) {
            let m = &corpus.interactions()[mi];
            let count = m.feature_count() as f64;
            let sum_w: f64 = m.features().iter().map(|k| params.w[k.index()]).sum();
            numer += sum_w - count * params.v[m.receiver.index()];
            denom += count;
        }
        *bi = numer / denom;
    }
    out
}

/// Closed-form minimizer over all victim scores, with `b` and `w` fixed.
pub fn update_victim(params: &ModelParams, corpus: &IndexedCorpus) -> Vec<f64> {
    debug_assert!(check_dims(params, corpus).is_ok());
    let mut out = vec![0.0; corpus.n_users()];
    for (j, vj) in out.iter_mut().enumerate() {
        let mut numer = 0.0;
        let mut denom = params.lambda;
        for &mi in corpus.received_by(crate::corpus::UserId(j as u32)) {
            let m = &corpus.interactions()[mi];
            let count = m.feature_count() as f64;
            let sum_w: f64 = m.features().iter().map(|k| params.w[k.index()]).sum();
            numer += sum_w - count * params.b[m.sender.index()];
            denom += count;
        }
        *vj = numer / denom;
    }
    out
}

/// Closed-form minimizer over all indicator scores, with `b` and `v` fixed.
/// Seed features are pinned to exactly 1.0; features occurring in no message
/// fall back to 0 through the ridge.
pub fn update_vocab(
    params: &ModelParams,
    corpus: &IndexedCorpus,
    seeds: &BTreeSet<FeatureId>,
) -> Vec<f64> {
    debug_assert!(check_dims(params, corpus).is_ok());
    let mut out = vec![0.0; corpus.n_features()];
    for (k, wk) in out.iter_mut().enumerate() {
        let id = FeatureId(k as u32);
        if seeds.contains(&id) {
            *wk = 1.0;
            continue;
        }
        let containing = corpus.containing(id);
        let mut numer = 0.0;
        for &mi in containing {
            let m = &corpus.interactions()[mi];
            numer += params.b[m.sender.index()] + params.v[m.receiver.index()];
        }
        *wk = numer / (params.lambda + containing.len() as f64);
    }
    out
}

/// Exact partial derivatives of the objective at `params`.
///
/// The seed clamp is ignored here: seed coordinates report their
/// unconstrained partials. Useful for optimality diagnostics and for
/// cross-checking the closed-form updates against finite differences.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveGradient {
    pub b: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

pub fn objective_gradient(
    params: &ModelParams,
    corpus: &IndexedCorpus,
) -> Result<ObjectiveGradient, SolverError> {
    check_dims(params, corpus)?;
    let lambda = params.lambda;
    let mut gb: Vec<f64> = params.b.iter().map(|x| lambda * x).collect();
    let mut gv: Vec<f64> = params.v.iter().map(|x| lambda * x).collect();
    let mut gw: Vec<f64> = params.w.iter().map(|x| lambda * x).collect();
    for m in corpus.interactions() {
        let s = m.sender.index();
        let r = m.receiver.index();
        let social = params.b[s] + params.v[r];
        for &k in m.features() {
            let gap = social - params.w[k.index()];
            gb[s] += gap;
            gv[r] += gap;
            gw[k.index()] -= gap;
        }
    }
    Ok(ObjectiveGradient {
        b: gb,
        v: gv,
        w: gw,
    })
}

/// Fits the model by alternating least-squares.
///
/// Scores start at zero with seeds clamped to 1.0, then the b, v, w blocks
/// are updated in that order until the largest per-coordinate change of a
/// full iteration drops to `tol` (relative to the largest score magnitude,
/// floored at 1) or `max_iters` is reached. The returned trace records the
/// objective after every iteration, starting with the initial value.
pub fn fit(
    corpus: &IndexedCorpus,
    seeds: &BTreeSet<FeatureId>,
    config: &SolverConfig,
) -> Result<(ModelParams, FitTrace), SolverError> {
    assert!(config.lambda > 0.0, "lambda must be positive");
    assert!(config.max_iters >= 1, "max_iters must be at least 1");
    assert!(config.tol >= 0.0, "tol must be nonnegative");
    if seeds.is_empty() {
        return Err(SolverError::EmptySeedSet);
    }
    check_seeds(seeds, corpus)?;

    let mut params = ModelParams::seeded(corpus, seeds, config.lambda);
    let mut objectives = vec![objective_unchecked(&params, corpus)];
    let mut converged = false;

    for _ in 0..config.max_iters {
        let mut delta: f64 = 0.0;

        let new_b = update_bully(&params, corpus);
        delta = delta.max(max_abs_diff(&params.b, &new_b));
        params.b = new_b;

        let new_v = update_victim(&params, corpus);
        delta = delta.max(max_abs_diff(&params.v, &new_v));
        params.v = new_v;

        let new_w = update_vocab(&params, corpus, seeds);
        delta = delta.max(max_abs_diff(&params.w, &new_w));
        params.w = new_w;

        debug_assert!(seeds.iter().all(|k| params.w[k.index()] == 1.0));

        objectives.push(objective_unchecked(&params, corpus));

        let scale = max_abs(&params.b)
            .max(max_abs(&params.v))
            .max(max_abs(&params.w))
            .max(1.0);
        if delta <= config.tol * scale {
            converged = true;
            break;
        }
    }

    Ok((
        params,
        FitTrace {
            objectives,
            converged,
        },
    ))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

/// Free-coordinate cap for [`solve_exact`]'s dense system.
pub const MAX_EXACT_FREE_COORDS: usize = 2000;

/// Solves the seed-constrained objective exactly.
///
/// With seeds clamped, the objective is a strictly convex quadratic in the
/// remaining coordinates, so the global minimum is the unique solution of
/// the normal equations. The system matrix is `λI` plus a positive
/// semidefinite Gram term, hence symmetric positive definite, and a dense
/// Cholesky factorization solves it.
///
/// Intended as a correctness oracle at small scale; instances with more than
/// [`MAX_EXACT_FREE_COORDS`] free coordinates are rejected.
pub fn solve_exact(
    corpus: &IndexedCorpus,
    seeds: &BTreeSet<FeatureId>,
    lambda: f64,
) -> Result<ModelParams, SolverError> {
    assert!(lambda > 0.0, "lambda must be positive");
    check_seeds(seeds, corpus)?;

    let n_users = corpus.n_users();
    let n_features = corpus.n_features();

    // Free layout: b_0..b_{U-1}, v_0..v_{U-1}, then non-seed w in id order.
    let free_features: Vec<usize> = (0..n_features)
        .filter(|k| !seeds.contains(&FeatureId(*k as u32)))
        .collect();
    let mut w_slot = vec![usize::MAX; n_features];
    for (slot, &k) in free_features.iter().enumerate() {
        w_slot[k] = 2 * n_users + slot;
    }
    let dim = 2 * n_users + free_features.len();
    if dim > MAX_EXACT_FREE_COORDS {
        return Err(SolverError::InstanceTooLarge {
            free: dim,
            max: MAX_EXACT_FREE_COORDS,
        });
    }

    let mut a = vec![0.0f64; dim * dim];
    let mut rhs = vec![0.0f64; dim];
    for i in 0..dim {
        a[i * dim + i] = lambda;
    }

    // Each squared term (b_s + v_r - w_k)^2 adds the outer product of its
    // coefficient vector; clamped w_k moves a constant onto the right side.
    for m in corpus.interactions() {
        let bi = m.sender.index();
        let vj = n_users + m.receiver.index();
        for &k in m.features() {
            a[bi * dim + bi] += 1.0;
            a[vj * dim + vj] += 1.0;
            a[bi * dim + vj] += 1.0;
            a[vj * dim + bi] += 1.0;
            let slot = w_slot[k.index()];
            if slot == usize::MAX {
                rhs[bi] += 1.0;
                rhs[vj] += 1.0;
            } else {
                a[slot * dim + slot] += 1.0;
                a[bi * dim + slot] -= 1.0;
                a[slot * dim + bi] -= 1.0;
                a[vj * dim + slot] -= 1.0;
                a[slot * dim + vj] -= 1.0;
            }
        }
    }

    cholesky_solve_in_place(&mut a, dim, &mut rhs);

    let mut params = ModelParams {
        b: rhs[..n_users].to_vec(),
        v: rhs[n_users..2 * n_users].to_vec(),
        w: vec![0.0; n_features],
        lambda,
    };
    for &k in seeds {
        params.w[k.index()] = 1.0;
    }
    for (slot, &k) in free_features.iter().enumerate() {
        params.w[k] = rhs[2 * n_users + slot];
    }
    Ok(params)
}

/// In-place Cholesky factorization (lower triangle) followed by forward and
/// backward substitution. `a` must be symmetric positive definite.
fn cholesky_solve_in_place(a: &mut [f64], n: usize, rhs: &mut [f64]) {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        assert!(d > 0.0, "system matrix must be positive definite");
        let d = libm::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // L y = rhs
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= a[i * n + k] * rhs[k];
        }
        rhs[i] = s / a[i * n + i];
    }
    // Lᵀ x = y
    for i in (0..n).rev() {
        let mut s = rhs[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * rhs[k];
        }
        rhs[i] = s / a[i * n + i];
    }
}
