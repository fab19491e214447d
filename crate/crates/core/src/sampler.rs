//! Collapsed Gibbs sampling over topic bags, inversion counts, and
//! dispersions.
//!
//! The chain state holds, per document, an indexed bag of topic draws `t`,
//! an inversion vector `v` (with its permutation), and the derived
//! per-paragraph assignment `z`; globally it holds the dispersions `rho` and
//! the count tables (topic draws, word-topic) the collapsed conditionals are
//! computed from.
//!
//! One sweep visits every document in corpus order, resampling each topic
//! draw, then each inversion coordinate, and finally resamples every
//! dispersion once. While a document is being resampled its words are
//! removed from the word-topic table, so all of its candidate assignments
//! condition on the same external counts and span probabilities can be
//! memoized; the memo is dropped when moving to the next document.

use std::fmt;
use std::io::{self, BufRead, Write};

use rand::Rng;
use thiserror::Error;

use crate::corpus::{Corpus, WordId};
use crate::dcm::{SpanCache, TopicWordCounts};
use crate::gmm::{self, GmmPrior, InversionVector, Permutation};
use crate::util::sample_from_log_weights;

/// How the ordering component is treated during inference.
///
/// `Full` learns per-coordinate dispersions; `Constrained` pins every
/// inversion count to zero so all documents share the canonical order;
/// `Uniform` makes every ordering equally likely (dispersions pinned to
/// zero). Both variants keep topic contiguity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Full,
    Constrained,
    Uniform,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Constrained => "constrained",
            Variant::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        match s {
            "full" => Some(Variant::Full),
            "constrained" => Some(Variant::Constrained),
            "uniform" => Some(Variant::Uniform),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("topics must be >= 1")]
    Topics,
    #[error("iterations must be >= 1")]
    Iterations,
    #[error("chains must be >= 1")]
    Chains,
    #[error("hyperparameter {name} must be positive and finite")]
    Hyperparameter { name: &'static str },
    #[error("corpus has no documents")]
    EmptyCorpus,
}

/// Sampler settings. `nu0_scale` is a multiplier on the number of documents:
/// the effective prior strength is `nu0_scale * n_docs`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub topics: usize,
    pub iterations: usize,
    pub chains: usize,
    pub theta0: f64,
    pub beta0: f64,
    pub rho0: f64,
    pub nu0_scale: f64,
    pub variant: Variant,
    pub seed: u64,
    /// Record the joint log probability after every sweep.
    pub trace_joint: bool,
}

impl SamplerConfig {
    /// Defaults: 10,000 iterations, 5 chains, `theta0 = beta0 = 0.1`,
    /// `rho0 = 1`, `nu0 = 0.1 * n_docs`, full variant.
    pub fn new(topics: usize) -> Self {
        SamplerConfig {
            topics,
            iterations: 10_000,
            chains: 5,
            theta0: 0.1,
            beta0: 0.1,
            rho0: 1.0,
            nu0_scale: 0.1,
            variant: Variant::Full,
            seed: 0,
            trace_joint: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.topics < 1 {
            return Err(ConfigError::Topics);
        }
        if self.iterations < 1 {
            return Err(ConfigError::Iterations);
        }
        if self.chains < 1 {
            return Err(ConfigError::Chains);
        }
        for (name, value) in [
            ("theta0", self.theta0),
            ("beta0", self.beta0),
            ("rho0", self.rho0),
        ] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ConfigError::Hyperparameter { name });
            }
        }
        if !self.nu0_scale.is_finite() || self.nu0_scale < 0.0 {
            return Err(ConfigError::Hyperparameter { name: "nu0_scale" });
        }
        Ok(())
    }

    /// Effective dispersion prior strength for a corpus of `n_docs`.
    pub fn nu0(&self, n_docs: usize) -> f64 {
        self.nu0_scale * n_docs as f64
    }
}

/// Place topics into paragraph positions: walk the ordering and emit each
/// topic as many times as it was drawn, so equal topics are always
/// contiguous.
pub fn compute_z(topic_counts: &[u32], ordering: &Permutation) -> Vec<usize> {
    let mut z = Vec::with_capacity(topic_counts.iter().map(|&c| c as usize).sum());
    compute_z_into(topic_counts, ordering, &mut z);
    z
}

fn compute_z_into(topic_counts: &[u32], ordering: &Permutation, out: &mut Vec<usize>) {
    assert_eq!(topic_counts.len(), ordering.k(), "dimension mismatch");
    out.clear();
    for &k in ordering.as_slice() {
        for _ in 0..topic_counts[k] {
            out.push(k);
        }
    }
}

/// Reusable per-chain working memory: the span memo plus candidate buffers.
pub struct SamplerScratch {
    pub cache: SpanCache,
    zbuf: Vec<usize>,
    logw: Vec<f64>,
}

impl SamplerScratch {
    pub fn new(beta0: f64, n_words: usize) -> Self {
        SamplerScratch {
            cache: SpanCache::new(beta0, n_words),
            zbuf: Vec::new(),
            logw: Vec::new(),
        }
    }

    pub fn for_config(config: &SamplerConfig, corpus: &Corpus) -> Self {
        SamplerScratch::new(config.beta0, corpus.vocabulary.len())
    }
}

/// Mutable state of one Gibbs chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    variant: Variant,
    theta0: f64,
    /// Indexed topic draws `t[d][i]`; their multiset is the bag of topics.
    draws: Vec<Vec<usize>>,
    /// Per-document topic occurrence counts (the bag, as a count vector).
    doc_topic_counts: Vec<Vec<u32>>,
    inversions: Vec<InversionVector>,
    orderings: Vec<Permutation>,
    z: Vec<Vec<usize>>,
    rho: Vec<f64>,
    /// Global topic draw counts over all documents.
    topic_draw_counts: Vec<u64>,
    total_draws: u64,
    word_topic: TopicWordCounts,
}

impl ChainState {
    pub fn k(&self) -> usize {
        self.topic_draw_counts.len()
    }

    pub fn n_docs(&self) -> usize {
        self.draws.len()
    }

    pub fn z(&self, d: usize) -> &[usize] {
        &self.z[d]
    }

    pub fn draws(&self, d: usize) -> &[usize] {
        &self.draws[d]
    }

    pub fn inversions(&self, d: usize) -> &InversionVector {
        &self.inversions[d]
    }

    pub fn ordering(&self, d: usize) -> &Permutation {
        &self.orderings[d]
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn topic_draw_counts(&self) -> &[u64] {
        &self.topic_draw_counts
    }

    pub fn word_topic(&self) -> &TopicWordCounts {
        &self.word_topic
    }

    /// Recompute every derived quantity from scratch and compare with the
    /// incrementally maintained tables.
    pub fn verify_consistency(&self, corpus: &Corpus) -> Result<(), String> {
        let k = self.k();
        let mut topic_draws = vec![0u64; k];
        let mut word_topic =
            TopicWordCounts::new(k, self.word_topic.n_words(), self.word_topic.beta0());
        for d in 0..self.n_docs() {
            let mut counts = vec![0u32; k];
            for &t in &self.draws[d] {
                counts[t] += 1;
                topic_draws[t] += 1;
            }
            if counts != self.doc_topic_counts[d] {
                return Err(format!("doc {d}: bag counts diverge"));
            }
            let pi = self.inversions[d].to_permutation();
            if pi != self.orderings[d] {
                return Err(format!("doc {d}: stale ordering"));
            }
            let z = compute_z(&counts, &pi);
            if z != self.z[d] {
                return Err(format!("doc {d}: stale topic assignment"));
            }
            for (para, &zp) in corpus.documents[d].paragraphs.iter().zip(&z) {
                word_topic.add_paragraph(zp, para);
            }
        }
        if topic_draws != self.topic_draw_counts {
            return Err("global topic draw counts diverge".into());
        }
        if self.total_draws != topic_draws.iter().sum::<u64>() {
            return Err("total draw count diverges".into());
        }
        if word_topic != self.word_topic {
            return Err("word-topic table diverges".into());
        }
        Ok(())
    }

    /// Every topic must occupy at most one contiguous block per document.
    pub fn verify_contiguity(&self) -> Result<(), String> {
        for (d, z) in self.z.iter().enumerate() {
            let mut seen = vec![false; self.k()];
            let mut prev = usize::MAX;
            for &t in z {
                if t != prev {
                    if seen[t] {
                        return Err(format!("doc {d}: topic {t} split across blocks"));
                    }
                    seen[t] = true;
                    prev = t;
                }
            }
        }
        Ok(())
    }

    fn externalize_document(&mut self, corpus: &Corpus, d: usize) {
        for (para, &zp) in corpus.documents[d].paragraphs.iter().zip(&self.z[d]) {
            self.word_topic.remove_paragraph(zp, para);
        }
    }

    fn internalize_document(&mut self, corpus: &Corpus, d: usize) {
        for (para, &zp) in corpus.documents[d].paragraphs.iter().zip(&self.z[d]) {
            self.word_topic.add_paragraph(zp, para);
        }
    }

    /// Conditional log weights for the `i`-th topic draw of document `d`,
    /// one per candidate topic. Assumes document `d` is externalized and the
    /// draw has already been deducted from the count tables.
    fn topic_draw_log_weights(&mut self, corpus: &Corpus, scratch: &mut SamplerScratch, d: usize) {
        let k = self.k();
        let doc = &corpus.documents[d];
        scratch.logw.clear();
        for c in 0..k {
            self.doc_topic_counts[d][c] += 1;
            compute_z_into(
                &self.doc_topic_counts[d],
                &self.orderings[d],
                &mut scratch.zbuf,
            );
            let prior = (self.topic_draw_counts[c] as f64 + self.theta0).ln();
            let like = scratch
                .cache
                .doc_log_prob(doc, &self.word_topic, &scratch.zbuf);
            scratch.logw.push(prior + like);
            self.doc_topic_counts[d][c] -= 1;
        }
    }

    fn gibbs_topic_draw(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        i: usize,
        rng: &mut impl Rng,
    ) {
        let old = self.draws[d][i];
        self.doc_topic_counts[d][old] -= 1;
        self.topic_draw_counts[old] -= 1;

        self.topic_draw_log_weights(corpus, scratch, d);
        let chosen = sample_from_log_weights(&scratch.logw, rng);

        self.draws[d][i] = chosen;
        self.doc_topic_counts[d][chosen] += 1;
        self.topic_draw_counts[chosen] += 1;
        compute_z_into(
            &self.doc_topic_counts[d],
            &self.orderings[d],
            &mut scratch.zbuf,
        );
        std::mem::swap(&mut self.z[d], &mut scratch.zbuf);
    }

    /// Conditional log weights for inversion coordinate `j` of document `d`,
    /// one per admissible count. Assumes document `d` is externalized.
    fn inversion_log_weights(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        j: usize,
    ) {
        let k = self.k();
        let doc = &corpus.documents[d];
        scratch.logw.clear();
        for v in 0..=gmm::max_inversions(k, j) {
            self.inversions[d].set(j, v);
            let pi = self.inversions[d].to_permutation();
            compute_z_into(&self.doc_topic_counts[d], &pi, &mut scratch.zbuf);
            let prior = match self.variant {
                Variant::Full => gmm::gmm_marginal_log_pmf(v, self.rho[j], k, j),
                Variant::Uniform => 0.0,
                Variant::Constrained => {
                    unreachable!("constrained variant never resamples inversions")
                }
            };
            let like = scratch
                .cache
                .doc_log_prob(doc, &self.word_topic, &scratch.zbuf);
            scratch.logw.push(prior + like);
        }
    }

    fn gibbs_inversion(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        j: usize,
        rng: &mut impl Rng,
    ) {
        if self.variant == Variant::Constrained {
            return;
        }
        let old = self.inversions[d].get(j);
        self.inversion_log_weights(corpus, scratch, d, j);
        let chosen = sample_from_log_weights(&scratch.logw, rng);

        self.inversions[d].set(j, chosen);
        if chosen != old {
            self.orderings[d] = self.inversions[d].to_permutation();
        }
        compute_z_into(
            &self.doc_topic_counts[d],
            &self.orderings[d],
            &mut scratch.zbuf,
        );
        std::mem::swap(&mut self.z[d], &mut scratch.zbuf);
    }

    /// One full pass over document `d`: every topic draw, then every
    /// inversion coordinate. The document's words are removed from the
    /// word-topic table once up front, so all steps share one conditioning
    /// and the span memo stays valid across them.
    pub fn resample_document(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        rng: &mut impl Rng,
    ) {
        let k = self.k();
        self.externalize_document(corpus, d);
        scratch.cache.begin_document();
        for i in 0..corpus.documents[d].paragraphs.len() {
            self.gibbs_topic_draw(corpus, scratch, d, i, rng);
        }
        if self.variant != Variant::Constrained {
            for j in 0..k.saturating_sub(1) {
                self.gibbs_inversion(corpus, scratch, d, j, rng);
            }
        }
        self.internalize_document(corpus, d);
    }

    /// Resample one topic draw, conditioning on everything else. This is the
    /// standalone form; [`ChainState::resample_document`] fuses the
    /// per-document steps so the memo survives across them.
    pub fn resample_topic_draw(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        i: usize,
        rng: &mut impl Rng,
    ) {
        self.externalize_document(corpus, d);
        scratch.cache.begin_document();
        self.gibbs_topic_draw(corpus, scratch, d, i, rng);
        self.internalize_document(corpus, d);
    }

    /// Resample inversion coordinate `j` of document `d`. Skipped under the
    /// constrained variant, which pins every inversion to zero.
    pub fn resample_inversion(
        &mut self,
        corpus: &Corpus,
        scratch: &mut SamplerScratch,
        d: usize,
        j: usize,
        rng: &mut impl Rng,
    ) {
        if self.variant == Variant::Constrained {
            return;
        }
        self.externalize_document(corpus, d);
        scratch.cache.begin_document();
        self.gibbs_inversion(corpus, scratch, d, j, rng);
        self.internalize_document(corpus, d);
    }

    /// Resample every dispersion from its posterior. Skipped under the
    /// constrained variant (the dispersions are irrelevant) and the uniform
    /// variant (they are pinned to zero).
    pub fn resample_dispersions(&mut self, prior: &GmmPrior, rng: &mut impl Rng) {
        if self.variant != Variant::Full {
            return;
        }
        let k = self.k();
        let n_docs = self.n_docs();
        for j in 0..k.saturating_sub(1) {
            let sum_v: u64 = self.inversions.iter().map(|v| v.get(j) as u64).sum();
            self.rho[j] = gmm::resample_rho_j(sum_v, n_docs, prior, j, rng);
        }
    }

    /// Joint log probability of the current state with the topic and word
    /// multinomials integrated out; used for trace monitoring.
    pub fn joint_log_prob(&self, prior: &GmmPrior) -> f64 {
        let k = self.k();
        let theta0 = self.theta0;
        let beta0 = self.word_topic.beta0();
        let n_words = self.word_topic.n_words();

        // Collapsed bag-of-topics term: one DCM over all topic draws.
        let mut out = libm::lgamma(k as f64 * theta0)
            - libm::lgamma(k as f64 * theta0 + self.total_draws as f64);
        for &c in &self.topic_draw_counts {
            out += libm::lgamma(theta0 + c as f64) - libm::lgamma(theta0);
        }

        // Ordering term.
        match self.variant {
            Variant::Full => {
                for d in 0..self.n_docs() {
                    for j in 0..k.saturating_sub(1) {
                        out +=
                            gmm::gmm_marginal_log_pmf(self.inversions[d].get(j), self.rho[j], k, j);
                    }
                }
                for (j, &r) in self.rho.iter().enumerate() {
                    out += gmm::prior_log_density(r, prior.vj0(j), prior.nu0(), k, j);
                }
            }
            Variant::Uniform => {
                for j in 0..k.saturating_sub(1) {
                    out -= self.n_docs() as f64 * ((k - j) as f64).ln();
                }
            }
            Variant::Constrained => {}
        }

        // Collapsed word term: one DCM per topic over the whole corpus.
        for topic in 0..k {
            out += libm::lgamma(n_words as f64 * beta0)
                - libm::lgamma(n_words as f64 * beta0 + self.word_topic.total(topic) as f64);
            for w in 0..n_words {
                let c = self.word_topic.count(topic, w as WordId);
                if c > 0 {
                    out += libm::lgamma(beta0 + c as f64) - libm::lgamma(beta0);
                }
            }
        }
        out
    }
}

/// Fresh chain state: topic draws uniform, inversions zero, dispersions at
/// the prior value (zero under the uniform variant), tables built to match.
pub fn init_state(corpus: &Corpus, config: &SamplerConfig, rng: &mut impl Rng) -> ChainState {
    let k = config.topics;
    let n_docs = corpus.n_documents();
    let mut draws = Vec::with_capacity(n_docs);
    let mut doc_topic_counts = Vec::with_capacity(n_docs);
    let mut inversions = Vec::with_capacity(n_docs);
    let mut orderings = Vec::with_capacity(n_docs);
    let mut z = Vec::with_capacity(n_docs);
    let mut topic_draw_counts = vec![0u64; k];
    let mut word_topic = TopicWordCounts::new(k, corpus.vocabulary.len(), config.beta0);

    for doc in &corpus.documents {
        let n = doc.paragraphs.len();
        let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let mut counts = vec![0u32; k];
        for &ti in &t {
            counts[ti] += 1;
            topic_draw_counts[ti] += 1;
        }
        let v = InversionVector::zeros(k);
        let pi = v.to_permutation();
        let zd = compute_z(&counts, &pi);
        for (para, &zp) in doc.paragraphs.iter().zip(&zd) {
            word_topic.add_paragraph(zp, para);
        }
        draws.push(t);
        doc_topic_counts.push(counts);
        inversions.push(v);
        orderings.push(pi);
        z.push(zd);
    }

    let rho_init = match config.variant {
        Variant::Uniform => 0.0,
        _ => config.rho0,
    };
    let total_draws = topic_draw_counts.iter().sum();
    ChainState {
        variant: config.variant,
        theta0: config.theta0,
        draws,
        doc_topic_counts,
        inversions,
        orderings,
        z,
        rho: vec![rho_init; k.saturating_sub(1)],
        topic_draw_counts,
        total_draws,
        word_topic,
    }
}

/// Run one chain to completion and return its final state as a posterior
/// sample. One sweep resamples, for each document in corpus order, every
/// topic draw and then every inversion coordinate, and finally the
/// dispersions.
pub fn run_chain(
    corpus: &Corpus,
    config: &SamplerConfig,
    rng: &mut impl Rng,
) -> Result<PosteriorSample, ConfigError> {
    config.validate()?;
    if corpus.n_documents() == 0 {
        return Err(ConfigError::EmptyCorpus);
    }
    let k = config.topics;
    let prior = GmmPrior::new(config.rho0, config.nu0(corpus.n_documents()), k)
        .map_err(|_| ConfigError::Hyperparameter { name: "rho0" })?;
    let mut state = init_state(corpus, config, rng);
    let mut scratch = SamplerScratch::for_config(config, corpus);
    let mut trace = Vec::new();

    for _sweep in 0..config.iterations {
        for d in 0..corpus.n_documents() {
            state.resample_document(corpus, &mut scratch, d, rng);
        }
        state.resample_dispersions(&prior, rng);
        if config.trace_joint {
            trace.push(state.joint_log_prob(&prior));
        }
    }

    Ok(PosteriorSample::from_state(state, corpus, config, trace))
}

/// The final state of one chain, decoupled from the corpus it was trained
/// on except for document ids and the vocabulary checksum.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub config: SamplerConfig,
    pub vocab_size: usize,
    pub vocab_checksum: String,
    pub doc_ids: Vec<String>,
    pub draws: Vec<Vec<usize>>,
    pub inversions: Vec<Vec<usize>>,
    pub z: Vec<Vec<usize>>,
    pub rho: Vec<f64>,
    pub topic_draw_counts: Vec<u64>,
    pub word_topic: TopicWordCounts,
    pub trace: Vec<f64>,
}

impl PosteriorSample {
    fn from_state(
        state: ChainState,
        corpus: &Corpus,
        config: &SamplerConfig,
        trace: Vec<f64>,
    ) -> Self {
        PosteriorSample {
            config: config.clone(),
            vocab_size: corpus.vocabulary.len(),
            vocab_checksum: corpus.vocabulary.checksum(),
            doc_ids: corpus.documents.iter().map(|d| d.id.clone()).collect(),
            draws: state.draws,
            inversions: state
                .inversions
                .iter()
                .map(|v| v.as_slice().to_vec())
                .collect(),
            z: state.z,
            rho: state.rho,
            topic_draw_counts: state.topic_draw_counts,
            word_topic: state.word_topic,
            trace,
        }
    }

    pub fn k(&self) -> usize {
        self.config.topics
    }

    pub fn n_docs(&self) -> usize {
        self.doc_ids.len()
    }

    /// Total paragraphs across all documents.
    pub fn n_paragraphs(&self) -> u64 {
        self.topic_draw_counts.iter().sum()
    }
}

/// Point estimate of each topic's word distribution from the sampled
/// word-topic counts: `(count + beta0) / (total + n_words * beta0)`.
pub fn estimate_beta(sample: &PosteriorSample) -> Vec<Vec<f64>> {
    let wt = &sample.word_topic;
    let beta0 = wt.beta0();
    let denom_base = wt.n_words() as f64 * beta0;
    (0..wt.n_topics())
        .map(|k| {
            let denom = wt.total(k) as f64 + denom_base;
            (0..wt.n_words())
                .map(|w| (wt.count(k, w as WordId) as f64 + beta0) / denom)
                .collect()
        })
        .collect()
}

/// Point estimate of the topic prior from sampled paragraph-topic counts:
/// `(count + theta0) / (total + k * theta0)`.
pub fn estimate_theta(sample: &PosteriorSample) -> Vec<f64> {
    let k = sample.k();
    let theta0 = sample.config.theta0;
    let total = sample.n_paragraphs() as f64 + k as f64 * theta0;
    sample
        .topic_draw_counts
        .iter()
        .map(|&c| (c as f64 + theta0) / total)
        .collect()
}

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported sample file header: {0:?}")]
    Version(String),
}

const SAMPLE_MAGIC: &str = "mallows-content-sample v1";

fn join<T: fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

impl PosteriorSample {
    /// Line-delimited text serialization; floating-point values use the
    /// shortest representation that round-trips exactly, so a rewritten
    /// sample is byte-identical. The format is documented field by field in
    /// the repository README.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        let c = &self.config;
        writeln!(w, "{SAMPLE_MAGIC}")?;
        writeln!(w, "topics {}", c.topics)?;
        writeln!(w, "iterations {}", c.iterations)?;
        writeln!(w, "chains {}", c.chains)?;
        writeln!(w, "theta0 {}", c.theta0)?;
        writeln!(w, "beta0 {}", c.beta0)?;
        writeln!(w, "rho0 {}", c.rho0)?;
        writeln!(w, "nu0_scale {}", c.nu0_scale)?;
        writeln!(w, "variant {}", c.variant)?;
        writeln!(w, "seed {}", c.seed)?;
        writeln!(w, "trace_joint {}", c.trace_joint)?;
        writeln!(w, "vocab_size {}", self.vocab_size)?;
        writeln!(w, "vocab_checksum {}", self.vocab_checksum)?;
        writeln!(w, "rho {}", join(&self.rho))?;
        for d in 0..self.n_docs() {
            writeln!(w, "doc {}", self.doc_ids[d])?;
            writeln!(w, "t {}", join(&self.draws[d]))?;
            writeln!(w, "v {}", join(&self.inversions[d]))?;
            writeln!(w, "z {}", join(&self.z[d]))?;
        }
        writeln!(w, "topic_draws {}", join(&self.topic_draw_counts))?;
        for k in 0..self.word_topic.n_topics() {
            let mut parts = Vec::new();
            for word in 0..self.word_topic.n_words() {
                let count = self.word_topic.count(k, word as WordId);
                if count > 0 {
                    parts.push(format!("{word}:{count}"));
                }
            }
            writeln!(w, "word_topic {k} {}", parts.join(" "))?;
        }
        if !self.trace.is_empty() {
            writeln!(w, "trace {}", join(&self.trace))?;
        }
        writeln!(w, "end")?;
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, ModelIoError> {
        let mut lines = r.lines().enumerate();
        let parse_err = |line: usize, message: &str| ModelIoError::Parse {
            line: line + 1,
            message: message.to_string(),
        };

        let (_, first) = lines
            .next()
            .ok_or_else(|| parse_err(0, "empty sample file"))?;
        let first = first?;
        if first != SAMPLE_MAGIC {
            return Err(ModelIoError::Version(first));
        }

        let mut config = SamplerConfig::new(1);
        config.trace_joint = false;
        let mut vocab_size = 0usize;
        let mut vocab_checksum = String::new();
        let mut rho = Vec::new();
        let mut doc_ids = Vec::new();
        let mut draws: Vec<Vec<usize>> = Vec::new();
        let mut inversions: Vec<Vec<usize>> = Vec::new();
        let mut z: Vec<Vec<usize>> = Vec::new();
        let mut topic_draw_counts: Vec<u64> = Vec::new();
        let mut word_topic_rows: Vec<(usize, Vec<(WordId, u32)>)> = Vec::new();
        let mut trace: Vec<f64> = Vec::new();
        let mut ended = false;

        fn parse_vec<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
            s.split_whitespace()
                .map(|tok| tok.parse::<T>().map_err(|_| format!("bad value {tok:?}")))
                .collect()
        }

        for (line_no, line) in lines {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(' ').unwrap_or((line.as_str(), ""));
            match key {
                "topics" => {
                    config.topics = rest.parse().map_err(|_| parse_err(line_no, "bad topics"))?
                }
                "iterations" => {
                    config.iterations = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad iterations"))?
                }
                "chains" => {
                    config.chains = rest.parse().map_err(|_| parse_err(line_no, "bad chains"))?
                }
                "theta0" => {
                    config.theta0 = rest.parse().map_err(|_| parse_err(line_no, "bad theta0"))?
                }
                "beta0" => {
                    config.beta0 = rest.parse().map_err(|_| parse_err(line_no, "bad beta0"))?
                }
                "rho0" => config.rho0 = rest.parse().map_err(|_| parse_err(line_no, "bad rho0"))?,
                "nu0_scale" => {
                    config.nu0_scale = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad nu0_scale"))?
                }
                "variant" => {
                    config.variant =
                        Variant::parse(rest).ok_or_else(|| parse_err(line_no, "unknown variant"))?
                }
                "seed" => config.seed = rest.parse().map_err(|_| parse_err(line_no, "bad seed"))?,
                "trace_joint" => {
                    config.trace_joint = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad trace_joint"))?
                }
                "vocab_size" => {
                    vocab_size = rest
                        .parse()
                        .map_err(|_| parse_err(line_no, "bad vocab_size"))?
                }
                "vocab_checksum" => vocab_checksum = rest.to_string(),
                "rho" => rho = parse_vec(rest).map_err(|m| parse_err(line_no, &m))?,
                "doc" => doc_ends_ok(&doc_ids, &draws, &inversions, &z)
                    .map_err(|m| parse_err(line_no, m))
                    .map(|_| doc_ids.push(rest.to_string()))?,
                "t" => draws.push(parse_vec(rest).map_err(|m| parse_err(line_no, &m))?),
                "v" => inversions.push(parse_vec(rest).map_err(|m| parse_err(line_no, &m))?),
                "z" => z.push(parse_vec(rest).map_err(|m| parse_err(line_no, &m))?),
                "topic_draws" => {
                    topic_draw_counts = parse_vec(rest).map_err(|m| parse_err(line_no, &m))?
                }
                "word_topic" => {
                    let (topic, pairs) = rest.split_once(' ').unwrap_or((rest, ""));
                    let topic: usize =
                        topic.parse().map_err(|_| parse_err(line_no, "bad topic"))?;
                    let mut row = Vec::new();
                    for pair in pairs.split_whitespace() {
                        let (word, count) = pair
                            .split_once(':')
                            .ok_or_else(|| parse_err(line_no, "bad word:count pair"))?;
                        row.push((
                            word.parse()
                                .map_err(|_| parse_err(line_no, "bad word id"))?,
                            count.parse().map_err(|_| parse_err(line_no, "bad count"))?,
                        ));
                    }
                    word_topic_rows.push((topic, row));
                }
                "trace" => trace = parse_vec(rest).map_err(|m| parse_err(line_no, &m))?,
                "end" => {
                    ended = true;
                    break;
                }
                other => return Err(parse_err(line_no, &format!("unknown field {other:?}"))),
            }
        }
        if !ended {
            return Err(ModelIoError::Parse {
                line: 0,
                message: "missing end marker".into(),
            });
        }

        let structural = |message: String| ModelIoError::Parse { line: 0, message };
        let n = doc_ids.len();
        if draws.len() != n || inversions.len() != n || z.len() != n {
            return Err(structural("incomplete document blocks".into()));
        }
        if config.topics == 0 || rho.len() + 1 != config.topics {
            return Err(structural(format!(
                "{} dispersion values for {} topics",
                rho.len(),
                config.topics
            )));
        }
        if topic_draw_counts.len() != config.topics {
            return Err(structural("bad topic_draws length".into()));
        }
        for d in 0..n {
            if draws[d].len() != z[d].len() || inversions[d].len() + 1 != config.topics {
                return Err(structural(format!(
                    "doc {}: inconsistent lengths",
                    doc_ids[d]
                )));
            }
            if draws[d].iter().chain(&z[d]).any(|&t| t >= config.topics) {
                return Err(structural(format!(
                    "doc {}: topic out of range",
                    doc_ids[d]
                )));
            }
        }

        let mut word_topic = TopicWordCounts::new(config.topics, vocab_size, config.beta0);
        for (topic, row) in word_topic_rows {
            if topic >= config.topics {
                return Err(structural(format!("word_topic row for topic {topic}")));
            }
            for (word, count) in row {
                if word as usize >= vocab_size {
                    return Err(structural(format!("word id {word} outside vocabulary")));
                }
                word_topic.add(topic, word, count);
            }
        }

        Ok(PosteriorSample {
            config,
            vocab_size,
            vocab_checksum,
            doc_ids,
            draws,
            inversions,
            z,
            rho,
            topic_draw_counts,
            word_topic,
            trace,
        })
    }
}

fn doc_ends_ok(
    doc_ids: &[String],
    draws: &[Vec<usize>],
    inversions: &[Vec<usize>],
    z: &[Vec<usize>],
) -> Result<(), &'static str> {
    let n = doc_ids.len();
    if draws.len() != n || inversions.len() != n || z.len() != n {
        return Err("incomplete document block");
    }
    Ok(())
}
