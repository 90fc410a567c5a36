//! Synthetic corpora with planted ground truth.
//!
//! The generator plants per-user bully and victim scores plus a bully
//! vocabulary, then samples messages whose word mix follows the planted
//! participant scores: the hotter a (sender, receiver) pair, the more bully
//! words appear in their messages. Neutral words are drawn from a Zipf-like
//! frequency profile, so common words co-occur with everything: the exact
//! confound that frequency-based keyword expansion trips over and the
//! consistency objective is meant to untangle. `score_noise` perturbs both
//! the planted scores and the per-slot mixing probability, which also plants
//! occasional innocuous uses of bully words.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Lexicon, Message};

/// Every word slot picks a bully word with probability
/// `SLOT_BULLY_SCALE * clamp(b_sender + v_receiver, 0, 1)` before noise, so
/// even the hottest pairs still mix in neutral vocabulary.
pub const SLOT_BULLY_SCALE: f64 = 0.5;

/// Generated messages carry between 3 and 8 words.
pub const MIN_WORDS_PER_MESSAGE: usize = 3;
pub const MAX_WORDS_PER_MESSAGE: usize = 8;

/// Full-corpus repair passes before coverage is declared infeasible.
const COVERAGE_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_words: usize,
    pub n_bully_words: usize,
    pub n_messages: usize,
    /// Probability that a user is planted as a bully; sampled independently
    /// for victims. Strictly between 0 and 1.
    pub bully_user_fraction: f64,
    /// Nonnegative perturbation applied to planted scores and slot
    /// probabilities.
    pub score_noise: f64,
    pub rng_seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |reason: String| Err(SynthError::InvalidConfig(reason));
        if self.n_users < 1 || self.n_words < 1 || self.n_bully_words < 1 || self.n_messages < 1 {
            return bad("all counts must be at least 1".into());
        }
        if self.n_bully_words > self.n_words {
            return bad(format!(
                "n_bully_words ({}) exceeds n_words ({})",
                self.n_bully_words, self.n_words
            ));
        }
        if !(self.bully_user_fraction > 0.0 && self.bully_user_fraction < 1.0) {
            return bad(format!(
                "bully_user_fraction ({}) must be strictly between 0 and 1",
                self.bully_user_fraction
            ));
        }
        if !(self.score_noise >= 0.0 && self.score_noise.is_finite()) {
            return bad(format!("score_noise ({}) must be nonnegative", self.score_noise));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SynthError {
    InvalidConfig(String),
    /// The repair passes could not get every planted word into the corpus,
    /// e.g. when there are more bully words than messages.
    CoverageInfeasible { attempts: usize },
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidConfig(reason) => write!(f, "invalid synth config: {reason}"),
            SynthError::CoverageInfeasible { attempts } => write!(
                f,
                "could not cover every planted bully word after {attempts} repair passes; \
                 the config likely has more bully words than messages can hold"
            ),
        }
    }
}

impl core::error::Error for SynthError {}

/// A generated corpus together with the ground truth it was grown from.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedWorld {
    /// Planted bully score per user, aligned with `users`.
    pub true_b: Vec<f64>,
    /// Planted victim score per user.
    pub true_v: Vec<f64>,
    /// Planted indicator score per word, aligned with `words`: 1.0 for bully
    /// words, 0.0 otherwise.
    pub true_w: Vec<f64>,
    pub users: Vec<String>,
    pub words: Vec<String>,
    pub messages: Vec<Message>,
    /// The planted bully vocabulary.
    pub bully_words: BTreeSet<String>,
    /// Same words as a lexicon, ready for seed/target splitting.
    pub seed_candidates: Lexicon,
}

struct Generator {
    rng: ChaCha8Rng,
    true_b: Vec<f64>,
    true_v: Vec<f64>,
    n_users: usize,
    n_bully: usize,
    /// Cumulative Zipf weights over the neutral words; empty when every word
    /// is planted.
    neutral_cum: Vec<f64>,
    noise: f64,
}

impl Generator {
    fn noise_term(&mut self) -> f64 {
        if self.noise == 0.0 {
            return 0.0;
        }
        self.noise * (2.0 * self.rng.random::<f64>() - 1.0)
    }

    fn planted_score(&mut self, fraction: f64) -> f64 {
        let base = if self.rng.random::<f64>() < fraction { 1.0 } else { 0.0 };
        let noise = self.noise_term();
        (base + noise).clamp(0.0, 1.0)
    }

    fn pick_bully_word(&mut self) -> usize {
        self.rng.random_range(0..self.n_bully)
    }

    fn pick_neutral_word(&mut self) -> usize {
        if self.neutral_cum.is_empty() {
            // Every word is planted; fall back to the bully vocabulary.
            return self.pick_bully_word();
        }
        let total = *self.neutral_cum.last().unwrap();
        let x = self.rng.random::<f64>() * total;
        let i = self.neutral_cum.partition_point(|&c| c <= x);
        self.n_bully + i.min(self.neutral_cum.len() - 1)
    }

    fn sample_message(&mut self) -> (usize, usize, Vec<usize>) {
        let sender = self.rng.random_range(0..self.n_users);
        let receiver = self.rng.random_range(0..self.n_users);
        let len = self
            .rng
            .random_range(MIN_WORDS_PER_MESSAGE..=MAX_WORDS_PER_MESSAGE);
        let hot = SLOT_BULLY_SCALE * (self.true_b[sender] + self.true_v[receiver]).clamp(0.0, 1.0);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let p = (hot + self.noise_term()).clamp(0.0, 1.0);
            let word = if self.rng.random::<f64>() < p {
                self.pick_bully_word()
            } else {
                self.pick_neutral_word()
            };
            words.push(word);
        }
        (sender, receiver, words)
    }
}

/// Generates a [`PlantedWorld`] from `config`; bit-identical for identical
/// configs. After the initial sample, repair passes resample messages with
/// one forced slot until every planted bully word occurs at least once.
pub fn generate(config: &SynthConfig) -> Result<PlantedWorld, SynthError> {
    config.validate()?;

    let n_users = config.n_users;
    let n_words = config.n_words;
    let n_bully = config.n_bully_words;

    let users: Vec<String> = (0..n_users).map(|i| format!("u{i:04}")).collect();
    let words: Vec<String> = (0..n_words).map(|i| format!("w{i:04}")).collect();

    let mut gen = Generator {
        rng: ChaCha8Rng::seed_from_u64(config.rng_seed),
        true_b: Vec::new(),
        true_v: Vec::new(),
        n_users,
        n_bully,
        neutral_cum: zipf_cumulative(n_words - n_bully),
        noise: config.score_noise,
    };

    let fraction = config.bully_user_fraction;
    for _ in 0..n_users {
        let b = gen.planted_score(fraction);
        let v = gen.planted_score(fraction);
        gen.true_b.push(b);
        gen.true_v.push(v);
    }
    let true_w: Vec<f64> = (0..n_words)
        .map(|i| if i < n_bully { 1.0 } else { 0.0 })
        .collect();

    let mut drafts: Vec<(usize, usize, Vec<usize>)> =
        (0..config.n_messages).map(|_| gen.sample_message()).collect();

    let mut covered = false;
    for _ in 0..COVERAGE_ATTEMPTS {
        let mut used = alloc::vec![false; n_bully];
        for (_, _, ws) in &drafts {
            for &w in ws {
                if w < n_bully {
                    used[w] = true;
                }
            }
        }
        let missing: Vec<usize> = (0..n_bully).filter(|&k| !used[k]).collect();
        if missing.is_empty() {
            covered = true;
            break;
        }
        for k in missing {
            let mi = gen.rng.random_range(0..config.n_messages);
            let (s, r, mut ws) = gen.sample_message();
            let slot = gen.rng.random_range(0..ws.len());
            ws[slot] = k;
            drafts[mi] = (s, r, ws);
        }
    }
    if !covered {
        return Err(SynthError::CoverageInfeasible {
            attempts: COVERAGE_ATTEMPTS,
        });
    }

    let messages: Vec<Message> = drafts
        .iter()
        .enumerate()
        .map(|(i, (s, r, ws))| {
            let text = ws
                .iter()
                .map(|&w| words[w].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            Message::new(format!("m{i:05}"), users[*s].clone(), users[*r].clone(), text)
        })
        .collect();

    let bully_words: BTreeSet<String> = words[..n_bully].iter().cloned().collect();
    let mut seed_candidates = Lexicon::new();
    for w in &words[..n_bully] {
        seed_candidates.insert(w);
    }

    Ok(PlantedWorld {
        true_b: gen.true_b,
        true_v: gen.true_v,
        true_w,
        users,
        words,
        messages,
        bully_words,
        seed_candidates,
    })
}

/// Cumulative harmonic weights `1, 1/2, 1/3, ...` for neutral-word sampling.
fn zipf_cumulative(n: usize) -> Vec<f64> {
    let mut cum = Vec::with_capacity(n);
    let mut total = 0.0;
    for i in 0..n {
        total += 1.0 / (i as f64 + 1.0);
        cum.push(total);
    }
    cum
}
