//! Corpus ingestion and indexing.
//!
//! Raw directed messages are normalized, n-gram features are extracted, and
//! the result is frozen into an [`IndexedCorpus`]: interned user and phrase
//! tables plus inverted indices. Everything downstream (solver, baselines,
//! evaluation) reads from that immutable view.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One directed communication between two users.
///
/// `sender == receiver` is permitted (self-messages). Ids must be unique
/// within a corpus; [`parse_messages`] enforces that.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Message {
    pub id: String,
    pub sender: String,
    pub receiver: String,
    pub text: String,
}

impl Message {
    pub fn new(
        id: impl Into<String>,
        sender: impl Into<String>,
        receiver: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Message {
            id: id.into(),
            sender: sender.into(),
            receiver: receiver.into(),
            text: text.into(),
        }
    }
}

/// Index of an interned user within an [`IndexedCorpus`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

impl UserId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of an interned vocabulary feature (an n-gram phrase).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(pub u32);

impl FeatureId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CorpusError {
    /// A message line did not match `id<TAB>sender<TAB>receiver<TAB>text`.
    MalformedLine { line: usize, reason: String },
    /// Two message lines carried the same id.
    DuplicateId { line: usize, id: String },
    /// An n-gram order outside the supported range was requested.
    InvalidNgramOrder(usize),
    /// No n-gram order was requested at all.
    EmptyNgramOrders,
    /// The operation needs at least one phrase.
    EmptyLexicon,
    /// The seed fraction must lie strictly between 0 and 1.
    InvalidSeedFraction(f64),
}

impl fmt::Display for CorpusError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CorpusError::MalformedLine { line, reason } => {
                write!(f, "malformed message at line {line}: {reason}")
            }
            CorpusError::DuplicateId { line, id } => {
                write!(f, "duplicate message id {id:?} at line {line}")
            }
            CorpusError::InvalidNgramOrder(n) => {
                write!(
                    f,
                    "n-gram order {n} is outside the supported range 1..={}",
                    NgramOrders::MAX_ORDER
                )
            }
            CorpusError::EmptyNgramOrders => write!(f, "at least one n-gram order is required"),
            CorpusError::EmptyLexicon => write!(f, "lexicon is empty"),
            CorpusError::InvalidSeedFraction(x) => {
                write!(f, "seed fraction {x} must be strictly between 0 and 1")
            }
        }
    }
}

impl core::error::Error for CorpusError {}

/// A validated, duplicate-free set of n-gram orders drawn from `1..=3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramOrders {
    orders: Vec<usize>,
}

impl NgramOrders {
    pub const MAX_ORDER: usize = 3;

    pub fn new(orders: &[usize]) -> Result<Self, CorpusError> {
        if orders.is_empty() {
            return Err(CorpusError::EmptyNgramOrders);
        }
        let mut sorted: Vec<usize> = Vec::new();
        for &n in orders {
            if n == 0 || n > Self::MAX_ORDER {
                return Err(CorpusError::InvalidNgramOrder(n));
            }
            if !sorted.contains(&n) {
                sorted.push(n);
            }
        }
        sorted.sort_unstable();
        Ok(NgramOrders { orders: sorted })
    }

    pub fn unigrams() -> Self {
        NgramOrders { orders: alloc::vec![1] }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.orders
    }
}

impl Default for NgramOrders {
    /// Unigrams and bigrams.
    fn default() -> Self {
        NgramOrders { orders: alloc::vec![1, 2] }
    }
}

/// Characters that may appear inside a token. Keeping `*`, `_`, and `'`
/// preserves masked profanity ("d*ck") and contractions as single tokens.
#[inline]
fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '*' | '_' | '\'')
}

/// Lowercases `text` and splits it into maximal runs of token characters.
/// Every other character separates tokens.
pub fn tokens(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in lower.chars() {
        if is_token_char(c) {
            cur.push(c);
        } else if !cur.is_empty() {
            out.push(core::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Extracts every contiguous n-gram of each requested order from `text`.
///
/// Output is grouped by ascending order and left-to-right within each order,
/// with duplicates preserved; n-grams are the tokens joined by single spaces.
/// Text without token characters yields an empty sequence.
pub fn tokenize(text: &str, orders: &NgramOrders) -> Vec<String> {
    let toks = tokens(text);
    let mut out = Vec::new();
    for &n in orders.as_slice() {
        if toks.len() < n {
            continue;
        }
        for window in toks.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Normalizes a single phrase with the same rules as [`tokenize`]: lowercased
/// token runs joined by single spaces. Returns `None` when nothing survives.
pub fn normalize_phrase(raw: &str) -> Option<String> {
    let toks = tokens(raw);
    if toks.is_empty() {
        None
    } else {
        Some(toks.join(" "))
    }
}

/// An ordered, duplicate-free set of normalized phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    phrases: Vec<String>,
    index: BTreeSet<String>,
}

impl Lexicon {
    pub fn new() -> Self {
        Lexicon::default()
    }

    /// Normalizes `raw` and inserts it. Returns `false` when the phrase
    /// normalizes to nothing or was already present.
    pub fn insert(&mut self, raw: &str) -> bool {
        match normalize_phrase(raw) {
            Some(p) if !self.index.contains(&p) => {
                self.index.insert(p.clone());
                self.phrases.push(p);
                true
            }
            _ => false,
        }
    }

    /// Builds a lexicon from raw lines, keeping first-occurrence order and
    /// dropping blanks and duplicates.
    pub fn from_lines<'a>(lines: impl IntoIterator<Item = &'a str>) -> Self {
        let mut lex = Lexicon::new();
        for line in lines {
            lex.insert(line);
        }
        lex
    }

    /// Parses one phrase per line of `input`.
    pub fn parse(input: &str) -> Self {
        Lexicon::from_lines(input.lines())
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn contains(&self, phrase: &str) -> bool {
        self.index.contains(phrase)
    }

    pub fn len(&self) -> usize {
        self.phrases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phrases.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.phrases.iter().map(String::as_str)
    }
}

/// Deterministically partitions `lex` into a seed set and a held-out target
/// set. The seed side receives `max(1, round(seed_fraction * len))` phrases
/// chosen by a seeded shuffle; both sides keep the original phrase order.
pub fn split_lexicon(
    lex: &Lexicon,
    seed_fraction: f64,
    rng_seed: u64,
) -> Result<(Lexicon, Lexicon), CorpusError> {
    if lex.is_empty() {
        return Err(CorpusError::EmptyLexicon);
    }
    if !(seed_fraction > 0.0 && seed_fraction < 1.0) {
        return Err(CorpusError::InvalidSeedFraction(seed_fraction));
    }
    let n = lex.len();
    let n_seed = (libm::round(seed_fraction * n as f64) as usize).clamp(1, n);

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    order.shuffle(&mut rng);
    let chosen: BTreeSet<usize> = order[..n_seed].iter().copied().collect();

    let mut seed = Lexicon::new();
    let mut target = Lexicon::new();
    for (i, phrase) in lex.phrases.iter().enumerate() {
        if chosen.contains(&i) {
            seed.insert(phrase);
        } else {
            target.insert(phrase);
        }
    }
    Ok((seed, target))
}

/// Parses the line-delimited message format
/// `id<TAB>sender<TAB>receiver<TAB>text`.
///
/// Text may contain any character except tab and newline. Errors name the
/// 1-based offending line.
pub fn parse_messages(input: &str) -> Result<Vec<Message>, CorpusError> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let malformed = |reason: &str| CorpusError::MalformedLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let mut parts = line.splitn(4, '\t');
        let id = parts.next().unwrap_or("");
        let sender = parts.next().ok_or_else(|| malformed("missing sender field"))?;
        let receiver = parts
            .next()
            .ok_or_else(|| malformed("missing receiver field"))?;
        let text = parts.next().ok_or_else(|| malformed("missing text field"))?;
        if id.is_empty() {
            return Err(malformed("empty id field"));
        }
        if sender.is_empty() {
            return Err(malformed("empty sender field"));
        }
        if receiver.is_empty() {
            return Err(malformed("empty receiver field"));
        }
        if text.contains('\t') {
            return Err(malformed("too many fields (text may not contain tabs)"));
        }
        if !seen.insert(id.to_string()) {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: id.to_string(),
            });
        }
        out.push(Message::new(id, sender, receiver, text));
    }
    Ok(out)
}

/// Sender, receiver, and the distinct surviving features of one stored
/// message. Features are sorted ascending; that order is the canonical
/// reduction order everywhere downstream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub sender: UserId,
    pub receiver: UserId,
    features: Vec<FeatureId>,
}

impl Interaction {
    pub fn features(&self) -> &[FeatureId] {
        &self.features
    }

    /// `|f(m)|`: the number of distinct features in this message.
    pub fn feature_count(&self) -> usize {
        self.features.len()
    }
}

/// Immutable, fully indexed view of a message corpus.
///
/// Construction drops messages with no surviving features; every stored
/// interaction has at least one feature, and users are interned only from
/// stored interactions. Ids are assigned in first-occurrence order, so
/// identical inputs always produce identical indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedCorpus {
    phrases: Vec<String>,
    phrase_ids: BTreeMap<String, FeatureId>,
    users: Vec<String>,
    user_ids: BTreeMap<String, UserId>,
    interactions: Vec<Interaction>,
    by_sender: Vec<Vec<usize>>,
    by_receiver: Vec<Vec<usize>>,
    by_feature: Vec<Vec<usize>>,
}

/// Result of matching a lexicon against a corpus vocabulary.
#[derive(Debug, Clone, Default)]
pub struct ResolvedLexicon {
    /// Feature ids of the phrases present in the vocabulary.
    pub found: BTreeSet<FeatureId>,
    /// Phrases absent from the vocabulary, in lexicon order.
    pub missing: Vec<String>,
}

impl IndexedCorpus {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_features(&self) -> usize {
        self.phrases.len()
    }

    pub fn n_interactions(&self) -> usize {
        self.interactions.len()
    }

    pub fn interactions(&self) -> &[Interaction] {
        &self.interactions
    }

    pub fn phrase(&self, id: FeatureId) -> &str {
        &self.phrases[id.index()]
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn user(&self, id: UserId) -> &str {
        &self.users[id.index()]
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn feature_id(&self, phrase: &str) -> Option<FeatureId> {
        self.phrase_ids.get(phrase).copied()
    }

    pub fn user_id(&self, name: &str) -> Option<UserId> {
        self.user_ids.get(name).copied()
    }

    /// Indices of the interactions sent by `user`.
    pub fn sent_by(&self, user: UserId) -> &[usize] {
        &self.by_sender[user.index()]
    }

    /// Indices of the interactions received by `user`.
    pub fn received_by(&self, user: UserId) -> &[usize] {
        &self.by_receiver[user.index()]
    }

    /// Indices of the interactions containing `feature`.
    pub fn containing(&self, feature: FeatureId) -> &[usize] {
        &self.by_feature[feature.index()]
    }

    /// Looks up every lexicon phrase in the vocabulary, separating hits from
    /// misses.
    pub fn resolve_lexicon(&self, lex: &Lexicon) -> ResolvedLexicon {
        let mut resolved = ResolvedLexicon::default();
        for phrase in lex.iter() {
            match self.feature_id(phrase) {
                Some(id) => {
                    resolved.found.insert(id);
                }
                None => resolved.missing.push(phrase.to_string()),
            }
        }
        resolved
    }
}

/// Builds an [`IndexedCorpus`] from raw messages.
///
/// Features with document frequency below `min_df` are excluded from the
/// vocabulary; messages whose surviving feature set is empty are dropped.
pub fn build_corpus(messages: &[Message], orders: &NgramOrders, min_df: usize) -> IndexedCorpus {
    assert!(min_df >= 1, "min_df must be at least 1");

    // Pass 1: distinct phrases per message (first-occurrence order) and
    // document frequencies.
    let mut per_message: Vec<Vec<String>> = Vec::with_capacity(messages.len());
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    for msg in messages {
        let mut distinct: Vec<String> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for phrase in tokenize(&msg.text, orders) {
            if seen.insert(phrase.clone()) {
                distinct.push(phrase);
            }
        }
        for phrase in &distinct {
            *df.entry(phrase.clone()).or_insert(0) += 1;
        }
        per_message.push(distinct);
    }

    // Pass 2: intern surviving features and the users of surviving messages,
    // in first-occurrence order.
    let mut corpus = IndexedCorpus {
        phrases: Vec::new(),
        phrase_ids: BTreeMap::new(),
        users: Vec::new(),
        user_ids: BTreeMap::new(),
        interactions: Vec::new(),
        by_sender: Vec::new(),
        by_receiver: Vec::new(),
        by_feature: Vec::new(),
    };

    for (msg, distinct) in messages.iter().zip(&per_message) {
        let surviving: Vec<&String> = distinct.iter().filter(|p| df[*p] >= min_df).collect();
        if surviving.is_empty() {
            continue;
        }

        let sender = intern_user(&mut corpus, &msg.sender);
        let receiver = intern_user(&mut corpus, &msg.receiver);
        let mut features: Vec<FeatureId> = surviving
            .iter()
            .map(|p| intern_phrase(&mut corpus, p))
            .collect();
        features.sort_unstable();

        let idx = corpus.interactions.len();
        corpus.by_sender[sender.index()].push(idx);
        corpus.by_receiver[receiver.index()].push(idx);
        for k in &features {
            corpus.by_feature[k.index()].push(idx);
        }
        corpus.interactions.push(Interaction {
            sender,
            receiver,
            features,
        });
    }

    corpus
}

fn intern_user(corpus: &mut IndexedCorpus, name: &str) -> UserId {
    if let Some(&id) = corpus.user_ids.get(name) {
        return id;
    }
    let id = UserId(corpus.users.len() as u32);
    corpus.users.push(name.to_string());
    corpus.user_ids.insert(name.to_string(), id);
    corpus.by_sender.push(Vec::new());
    corpus.by_receiver.push(Vec::new());
    id
}

fn intern_phrase(corpus: &mut IndexedCorpus, phrase: &str) -> FeatureId {
    if let Some(&id) = corpus.phrase_ids.get(phrase) {
        return id;
    }
    let id = FeatureId(corpus.phrases.len() as u32);
    corpus.phrases.push(phrase.to_string());
    corpus.phrase_ids.insert(phrase.to_string(), id);
    corpus.by_feature.push(Vec::new());
    id
}
