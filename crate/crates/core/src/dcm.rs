//! Dirichlet compound multinomial (DCM) word likelihoods.
//!
//! With the per-topic word multinomials integrated out under a symmetric
//! Dirichlet prior, the probability of a bag of words depends only on word
//! counts, through ratios of gamma functions. A document's probability given
//! its per-paragraph topic assignments factorizes over topics, each factor a
//! DCM conditioned on the words assigned to that topic elsewhere in the
//! corpus.
//!
//! Because the sampler re-evaluates a document under many slight variations
//! of its topic assignment, [`SpanCache`] memoizes the probability of each
//! contiguous paragraph span under each topic, keyed by `(i, j, k)` and reset
//! between documents (the conditioning changes only there). Filling a span
//! records every intermediate prefix, which bounds the work per document and
//! sweep by `O(n_paragraphs^2 * n_topics)` single-paragraph evaluations.

use std::collections::HashMap;

use crate::corpus::{Document, Paragraph, WordId};

/// Log probability of a count vector `x` under a DCM with concentration
/// vector `alpha`. Reference implementation over dense vectors.
pub fn log_dcm(x: &[u64], alpha: &[f64]) -> f64 {
    assert_eq!(x.len(), alpha.len(), "dimension mismatch");
    assert!(
        alpha.iter().all(|&a| a > 0.0),
        "concentrations must be positive"
    );
    let alpha_sum: f64 = alpha.iter().sum();
    let n: u64 = x.iter().sum();
    let mut out = libm::lgamma(alpha_sum) - libm::lgamma(alpha_sum + n as f64);
    for (&cnt, &a) in x.iter().zip(alpha) {
        if cnt > 0 {
            out += libm::lgamma(a + cnt as f64) - libm::lgamma(a);
        }
    }
    out
}

/// Log posterior predictive probability of `x` after observing `y`:
/// the DCM with each concentration updated by the counts in `y`.
pub fn log_dcm_posterior(x: &[u64], y: &[u64], alpha: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dimension mismatch");
    let updated: Vec<f64> = alpha
        .iter()
        .zip(y)
        .map(|(&a, &cnt)| a + cnt as f64)
        .collect();
    log_dcm(x, &updated)
}

/// Word-topic count tables with their symmetric concentration: the
/// sufficient statistics each topic's language model is collapsed onto.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicWordCounts {
    n_topics: usize,
    n_words: usize,
    beta0: f64,
    counts: Vec<u32>,
    totals: Vec<u64>,
}

impl TopicWordCounts {
    pub fn new(n_topics: usize, n_words: usize, beta0: f64) -> Self {
        assert!(beta0 > 0.0, "concentration must be positive");
        TopicWordCounts {
            n_topics,
            n_words,
            beta0,
            counts: vec![0; n_topics * n_words],
            totals: vec![0; n_topics],
        }
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn n_words(&self) -> usize {
        self.n_words
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn count(&self, topic: usize, word: WordId) -> u32 {
        self.counts[topic * self.n_words + word as usize]
    }

    pub fn total(&self, topic: usize) -> u64 {
        self.totals[topic]
    }

    pub fn add(&mut self, topic: usize, word: WordId, n: u32) {
        self.counts[topic * self.n_words + word as usize] += n;
        self.totals[topic] += n as u64;
    }

    pub fn sub(&mut self, topic: usize, word: WordId, n: u32) {
        let cell = &mut self.counts[topic * self.n_words + word as usize];
        debug_assert!(*cell >= n);
        *cell -= n;
        self.totals[topic] -= n as u64;
    }

    pub fn add_paragraph(&mut self, topic: usize, paragraph: &Paragraph) {
        for &(w, c) in &paragraph.counts {
            self.add(topic, w, c);
        }
    }

    pub fn remove_paragraph(&mut self, topic: usize, paragraph: &Paragraph) {
        for &(w, c) in &paragraph.counts {
            self.sub(topic, w, c);
        }
    }
}

/// Log probability of a document's words given per-paragraph topics `z` and
/// word-topic counts from the rest of the corpus. Pools the paragraphs of
/// each topic and evaluates one DCM factor per topic against the external
/// counts; topics absent from `z` contribute nothing. Direct (uncached)
/// evaluation; handles arbitrary `z`.
pub fn doc_log_prob(doc: &Document, z: &[usize], external: &TopicWordCounts) -> f64 {
    assert_eq!(z.len(), doc.paragraphs.len(), "one topic per paragraph");
    assert!(
        z.iter().all(|&k| k < external.n_topics()),
        "topic index out of range"
    );
    let beta0 = external.beta0();
    let prior_total = external.n_words() as f64 * beta0;
    let mut out = 0.0;
    let mut bag: HashMap<WordId, u64> = HashMap::new();
    for k in 0..external.n_topics() {
        bag.clear();
        let mut bag_total = 0u64;
        for (para, _) in doc.paragraphs.iter().zip(z).filter(|&(_, &zp)| zp == k) {
            for &(w, c) in &para.counts {
                *bag.entry(w).or_insert(0) += c as u64;
                bag_total += c as u64;
            }
        }
        if bag_total == 0 {
            continue;
        }
        // Sum in word-id order; map iteration order varies per process.
        let mut entries: Vec<(WordId, u64)> = bag.iter().map(|(&w, &c)| (w, c)).collect();
        entries.sort_unstable();
        for (w, c) in entries {
            let prior = beta0 + external.count(k, w) as f64;
            out += libm::lgamma(prior + c as f64) - libm::lgamma(prior);
        }
        let base = prior_total + external.total(k) as f64;
        out += libm::lgamma(base) - libm::lgamma(base + bag_total as f64);
    }
    out
}

/// Cache hit/miss instrumentation; `paragraph_evals` counts single-paragraph
/// probability computations, the unit of the per-sweep work bound.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub paragraph_evals: u64,
}

/// Memoized span probabilities for one document at a time.
///
/// `span_log_prob(i, j, k)` is the log DCM probability of paragraphs `i..=j`
/// under topic `k` given external counts. Values are built left to right and
/// every prefix `(i, l, k)` computed on the way is stored too. Call
/// [`SpanCache::begin_document`] whenever the document or the external
/// conditioning changes.
pub struct SpanCache {
    beta0: f64,
    n_words: usize,
    // A document's spans live either in an epoch-tagged dense array (small
    // documents, no hashing) or in a hash map (fallback for very long ones).
    epoch: u64,
    doc_len: usize,
    n_topics: usize,
    sized: bool,
    use_dense: bool,
    dense_limit: usize,
    dense: Vec<(u64, f64)>,
    sparse: HashMap<u64, f64>,
    lg_word: Vec<f64>,
    lg_total: Vec<f64>,
    acc: Vec<u32>,
    touched: Vec<WordId>,
    pub stats: CacheStats,
}

/// Above this many `(i, j, k)` cells the dense backing would get too large
/// and the cache falls back to a hash map.
const DENSE_CELL_LIMIT: usize = 1 << 23;

impl SpanCache {
    pub fn new(beta0: f64, n_words: usize) -> Self {
        assert!(beta0 > 0.0);
        SpanCache {
            beta0,
            n_words,
            epoch: 1,
            doc_len: 0,
            n_topics: 0,
            sized: false,
            use_dense: false,
            dense_limit: DENSE_CELL_LIMIT,
            dense: Vec::new(),
            sparse: HashMap::new(),
            lg_word: Vec::new(),
            lg_total: Vec::new(),
            acc: vec![0; n_words],
            touched: Vec::new(),
            stats: CacheStats::default(),
        }
    }

    /// Drop all memoized spans; the conditioning is about to change.
    pub fn begin_document(&mut self) {
        self.epoch += 1;
        self.sized = false;
        if !self.sparse.is_empty() {
            self.sparse.clear();
        }
    }

    fn size_for(&mut self, doc_len: usize, n_topics: usize) {
        if self.sized {
            debug_assert_eq!((doc_len, n_topics), (self.doc_len, self.n_topics));
            return;
        }
        self.doc_len = doc_len;
        self.n_topics = n_topics;
        let cells = doc_len.saturating_mul(doc_len).saturating_mul(n_topics);
        self.use_dense = cells <= self.dense_limit;
        if self.use_dense && self.dense.len() < cells {
            self.dense.resize(cells, (0, 0.0));
        }
        self.sized = true;
    }

    fn cell(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.doc_len + j) * self.n_topics + k
    }

    fn get(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        if self.use_dense {
            let (tag, value) = self.dense[self.cell(i, j, k)];
            (tag == self.epoch).then_some(value)
        } else {
            self.sparse.get(&pack(i, j, k)).copied()
        }
    }

    fn put(&mut self, i: usize, j: usize, k: usize, value: f64) {
        if self.use_dense {
            let cell = self.cell(i, j, k);
            self.dense[cell] = (self.epoch, value);
        } else {
            self.sparse.insert(pack(i, j, k), value);
        }
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        self.sized && self.get(i, j, k).is_some()
    }

    fn lg_word(&mut self, n: u64) -> f64 {
        let idx = n as usize;
        while self.lg_word.len() <= idx {
            self.lg_word
                .push(libm::lgamma(self.beta0 + self.lg_word.len() as f64));
        }
        self.lg_word[idx]
    }

    fn lg_total(&mut self, n: u64) -> f64 {
        let idx = n as usize;
        while self.lg_total.len() <= idx {
            self.lg_total.push(libm::lgamma(
                self.n_words as f64 * self.beta0 + self.lg_total.len() as f64,
            ));
        }
        self.lg_total[idx]
    }

    /// Log probability of paragraphs `i..=j` of `doc` under topic `k`.
    pub fn span_log_prob(
        &mut self,
        doc: &Document,
        external: &TopicWordCounts,
        i: usize,
        j: usize,
        k: usize,
    ) -> f64 {
        assert!(i <= j && j < doc.paragraphs.len(), "span out of range");
        assert!(k < external.n_topics(), "topic out of range");
        debug_assert_eq!(external.beta0(), self.beta0);
        debug_assert_eq!(external.n_words(), self.n_words);
        self.size_for(doc.paragraphs.len(), external.n_topics());

        if let Some(v) = self.get(i, j, k) {
            self.stats.hits += 1;
            return v;
        }
        self.stats.misses += 1;

        // Longest memoized prefix of this span, if any.
        let mut value = 0.0;
        let mut next = i;
        for l in (i..j).rev() {
            if let Some(v) = self.get(i, l, k) {
                value = v;
                next = l + 1;
                break;
            }
        }

        // Accumulated in-span counts for the already-covered prefix.
        debug_assert!(self.touched.is_empty());
        let mut acc_total = 0u64;
        for para in &doc.paragraphs[i..next] {
            for &(w, c) in &para.counts {
                if self.acc[w as usize] == 0 {
                    self.touched.push(w);
                }
                self.acc[w as usize] += c;
            }
            acc_total += para.token_total as u64;
        }

        let ext_total = external.total(k);
        for l in next..=j {
            self.stats.paragraph_evals += 1;
            let para = &doc.paragraphs[l];
            let mut delta = 0.0;
            for &(w, c) in &para.counts {
                let prev = external.count(k, w) as u64 + self.acc[w as usize] as u64;
                delta += self.lg_word(prev + c as u64) - self.lg_word(prev);
                if self.acc[w as usize] == 0 {
                    self.touched.push(w);
                }
                self.acc[w as usize] += c;
            }
            let prev_total = ext_total + acc_total;
            delta +=
                self.lg_total(prev_total) - self.lg_total(prev_total + para.token_total as u64);
            acc_total += para.token_total as u64;
            value += delta;
            self.put(i, l, k, value);
        }

        for &w in &self.touched {
            self.acc[w as usize] = 0;
        }
        self.touched.clear();
        value
    }

    /// Document log probability for a topic-contiguous assignment `z`,
    /// summing one cached span per topic run.
    pub fn doc_log_prob(&mut self, doc: &Document, external: &TopicWordCounts, z: &[usize]) -> f64 {
        assert_eq!(z.len(), doc.paragraphs.len());
        let mut total = 0.0;
        let mut i = 0;
        while i < z.len() {
            let k = z[i];
            let mut j = i;
            while j + 1 < z.len() && z[j + 1] == k {
                j += 1;
            }
            total += self.span_log_prob(doc, external, i, j, k);
            i = j + 1;
        }
        total
    }
}

fn pack(i: usize, j: usize, k: usize) -> u64 {
    debug_assert!(i < (1 << 24) && j < (1 << 24) && k < (1 << 16));
    ((i as u64) << 40) | ((j as u64) << 16) | k as u64
}
