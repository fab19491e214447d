//! Metrics for the three tasks, a paired randomization significance test,
//! and a synthetic corpus generator that follows the model's generative
//! process end to end.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use thiserror::Error;

use crate::corpus::{Corpus, Document, Paragraph, Vocabulary};
use crate::gmm::{self, DispersionVector, RHO_MAX, RHO_MIN};
use crate::sampler::compute_z;
use crate::slice::{slice_sample, SliceParams};
use crate::tasks::Segmentation;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("empty input")]
    Empty,
    #[error("inputs are not paired: lengths differ")]
    LengthMismatch,
    #[error("window {window} must be >= 1 and < document length {len}")]
    BadWindow { window: usize, len: usize },
    #[error("need at least two sections to score an ordering")]
    TooFewSections,
    #[error("orderings are not over the same items")]
    ItemMismatch,
}

/// Recall, precision, and their harmonic mean for a clustering scored
/// against reference labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignmentScores {
    pub recall: f64,
    pub precision: f64,
    pub f: f64,
}

/// Score cluster assignments against reference headings over the same
/// paragraphs. Recall credits, per heading, the largest number of its
/// paragraphs landing in a single cluster; precision credits, per cluster,
/// the largest number of its paragraphs sharing a heading.
pub fn alignment_scores(labels: &[usize], headings: &[&str]) -> Result<AlignmentScores, EvalError> {
    if labels.len() != headings.len() {
        return Err(EvalError::LengthMismatch);
    }
    if labels.is_empty() {
        return Err(EvalError::Empty);
    }
    let total = labels.len() as f64;
    let mut joint: HashMap<(&str, usize), usize> = HashMap::new();
    for (&label, &heading) in labels.iter().zip(headings) {
        *joint.entry((heading, label)).or_insert(0) += 1;
    }
    let mut best_per_heading: HashMap<&str, usize> = HashMap::new();
    let mut best_per_label: HashMap<usize, usize> = HashMap::new();
    for (&(heading, label), &count) in &joint {
        let h = best_per_heading.entry(heading).or_insert(0);
        *h = (*h).max(count);
        let l = best_per_label.entry(label).or_insert(0);
        *l = (*l).max(count);
    }
    let recall = best_per_heading.values().sum::<usize>() as f64 / total;
    let precision = best_per_label.values().sum::<usize>() as f64 / total;
    let f = if recall + precision > 0.0 {
        2.0 * recall * precision / (recall + precision)
    } else {
        0.0
    };
    Ok(AlignmentScores {
        recall,
        precision,
        f,
    })
}

fn boundary_prefix(seg: &Segmentation) -> Vec<u32> {
    // prefix[x] = number of boundaries at gap positions <= x.
    let n = seg.total();
    let mut prefix = vec![0u32; n + 1];
    for b in seg.boundaries() {
        prefix[b] += 1;
    }
    for x in 1..=n {
        prefix[x] += prefix[x - 1];
    }
    prefix
}

fn check_windowed(
    hyp: &Segmentation,
    reference: &Segmentation,
    window: usize,
) -> Result<usize, EvalError> {
    let n = reference.total();
    if hyp.total() != n {
        return Err(EvalError::LengthMismatch);
    }
    if window < 1 || window >= n {
        return Err(EvalError::BadWindow { window, len: n });
    }
    Ok(n)
}

/// Sliding-window segmentation penalty: the fraction of unit pairs at
/// distance `window` on which hypothesis and reference disagree about
/// being in the same segment. Lower is better.
pub fn pk(hyp: &Segmentation, reference: &Segmentation, window: usize) -> Result<f64, EvalError> {
    let n = check_windowed(hyp, reference, window)?;
    let hp = boundary_prefix(hyp);
    let rp = boundary_prefix(reference);
    let mut errors = 0usize;
    let probes = n - window;
    for i in 0..probes {
        let same_h = hp[i + window] == hp[i];
        let same_r = rp[i + window] == rp[i];
        if same_h != same_r {
            errors += 1;
        }
    }
    Ok(errors as f64 / probes as f64)
}

/// Stricter sliding-window penalty: the fraction of windows in which the
/// number of boundaries differs between hypothesis and reference.
pub fn window_diff(
    hyp: &Segmentation,
    reference: &Segmentation,
    window: usize,
) -> Result<f64, EvalError> {
    let n = check_windowed(hyp, reference, window)?;
    let hp = boundary_prefix(hyp);
    let rp = boundary_prefix(reference);
    let mut errors = 0usize;
    let probes = n - window;
    for i in 0..probes {
        if hp[i + window] - hp[i] != rp[i + window] - rp[i] {
            errors += 1;
        }
    }
    Ok(errors as f64 / probes as f64)
}

/// Conventional window size: half the mean reference segment length,
/// rounded down, never below 2.
pub fn default_window(reference: &Segmentation) -> usize {
    (reference.total() / (2 * reference.n_segments())).max(2)
}

/// Kendall rank correlation between two orderings of the same items:
/// `1 - 2 * discordant_pairs / C(n, 2)`, from 1 (identical) to -1
/// (reversed). A uniformly random ordering scores zero in expectation.
pub fn kendall_tau(pred: &[usize], reference: &[usize]) -> Result<f64, EvalError> {
    if pred.len() != reference.len() {
        return Err(EvalError::LengthMismatch);
    }
    let n = pred.len();
    if n < 2 {
        return Err(EvalError::TooFewSections);
    }
    let mut rank: HashMap<usize, usize> = HashMap::with_capacity(n);
    for (r, &item) in reference.iter().enumerate() {
        if rank.insert(item, r).is_some() {
            return Err(EvalError::ItemMismatch);
        }
    }
    let mapped: Vec<usize> = pred
        .iter()
        .map(|item| rank.get(item).copied().ok_or(EvalError::ItemMismatch))
        .collect::<Result<_, _>>()?;
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if mapped[i] > mapped[j] {
                discordant += 1;
            }
        }
    }
    let pairs = n * (n - 1) / 2;
    Ok(1.0 - 2.0 * discordant as f64 / pairs as f64)
}

/// Paired approximate-randomization test: swap the two systems' outputs
/// per document with probability one half, and count shuffles whose
/// absolute metric difference reaches the observed one. Returns the
/// add-one p-value `(count + 1) / (n_shuffles + 1)`, always in (0, 1].
pub fn approx_randomization<T: Clone>(
    a: &[T],
    b: &[T],
    metric: impl Fn(&[T]) -> f64,
    n_shuffles: usize,
    rng: &mut impl Rng,
) -> Result<f64, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch);
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    assert!(n_shuffles >= 1);
    let observed = (metric(a) - metric(b)).abs();
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    let mut count = 0usize;
    for _ in 0..n_shuffles {
        for i in 0..a.len() {
            if rng.random::<bool>() {
                sa[i] = b[i].clone();
                sb[i] = a[i].clone();
            } else {
                sa[i] = a[i].clone();
                sb[i] = b[i].clone();
            }
        }
        if (metric(&sa) - metric(&sb)).abs() >= observed {
            count += 1;
        }
    }
    Ok((count as f64 + 1.0) / (n_shuffles as f64 + 1.0))
}

/// Conventional significance label for a randomization p-value, reported at
/// the 0.01 and 0.001 thresholds.
pub fn significance_label(p: f64) -> &'static str {
    if p < 0.001 {
        "p<0.001"
    } else if p < 0.01 {
        "p<0.01"
    } else {
        "ns"
    }
}

/// Reference structures recoverable from section headings: per-paragraph
/// labels for alignment and heading-run boundaries for segmentation.
#[derive(Debug, Clone)]
pub struct ReferenceAnnotation {
    pub headings: Vec<Vec<String>>,
    pub segmentations: Vec<Segmentation>,
}

/// Derive reference annotations from a corpus whose paragraphs all carry
/// headings; `None` if any heading is missing. Paragraphs are aligned
/// exactly when their headings are string-identical, and segments are
/// maximal runs of one heading.
pub fn reference_from_headings(corpus: &Corpus) -> Option<ReferenceAnnotation> {
    let mut headings = Vec::with_capacity(corpus.n_documents());
    let mut segmentations = Vec::with_capacity(corpus.n_documents());
    for doc in &corpus.documents {
        let hs: Option<Vec<String>> = doc.paragraphs.iter().map(|p| p.heading.clone()).collect();
        let hs = hs?;
        let mut lengths = Vec::new();
        let mut run = 1;
        for pair in hs.windows(2) {
            if pair[0] == pair[1] {
                run += 1;
            } else {
                lengths.push(run);
                run = 1;
            }
        }
        lengths.push(run);
        segmentations.push(Segmentation::from_lengths(lengths));
        headings.push(hs);
    }
    Some(ReferenceAnnotation {
        headings,
        segmentations,
    })
}

/// Settings for the synthetic corpus generator. Ranges are inclusive and
/// sampled uniformly. `nu0` is the absolute prior strength (not a
/// multiplier).
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub topics: usize,
    pub documents: usize,
    pub paragraphs_per_doc: (usize, usize),
    pub words_per_paragraph: (usize, usize),
    pub vocabulary: usize,
    pub theta0: f64,
    pub beta0: f64,
    pub rho0: f64,
    pub nu0: f64,
}

impl SynthConfig {
    fn validate(&self) {
        assert!(self.topics >= 1 && self.documents >= 1 && self.vocabulary >= 1);
        assert!(
            self.paragraphs_per_doc.0 >= 1
                && self.paragraphs_per_doc.0 <= self.paragraphs_per_doc.1
        );
        assert!(self.words_per_paragraph.0 <= self.words_per_paragraph.1);
        assert!(self.theta0 > 0.0 && self.beta0 > 0.0 && self.rho0 > 0.0 && self.nu0 >= 0.0);
    }
}

/// A generated corpus together with every latent quantity that produced it.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub z: Vec<Vec<usize>>,
    pub inversions: Vec<Vec<usize>>,
    pub rho: Vec<f64>,
    pub beta: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

fn sample_dirichlet_symmetric(alpha: f64, n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive shape");
    let mut draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
    let sum: f64 = draws.iter().sum();
    if sum > 0.0 {
        for d in &mut draws {
            *d /= sum;
        }
    } else {
        draws.fill(1.0 / n as f64);
    }
    draws
}

fn sample_categorical_cdf(cdf: &[f64], rng: &mut impl Rng) -> usize {
    let u = rng.random::<f64>() * cdf[cdf.len() - 1];
    cdf.partition_point(|&c| c < u).min(cdf.len() - 1)
}

fn cumsum(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|&w| {
            acc += w;
            acc
        })
        .collect()
}

/// Run the generative process start to finish: draw per-topic language
/// models and the topic distribution from their Dirichlet priors, draw
/// each dispersion from its conjugate prior by slice sampling, then per
/// document draw a bag of topics, an inversion vector, the induced
/// paragraph assignment, and finally the words. Returns the corpus and
/// all ground truth for recovery testing; paragraph headings carry the
/// true topic so heading-based evaluation applies unchanged.
pub fn generate_synthetic(config: &SynthConfig, rng: &mut impl Rng) -> SyntheticCorpus {
    config.validate();
    let k = config.topics;
    let w = config.vocabulary;

    let beta: Vec<Vec<f64>> = (0..k)
        .map(|_| sample_dirichlet_symmetric(config.beta0, w, rng))
        .collect();
    let beta_cdf: Vec<Vec<f64>> = beta.iter().map(|row| cumsum(row)).collect();
    let theta = sample_dirichlet_symmetric(config.theta0, k, rng);
    let theta_cdf = cumsum(&theta);

    let slice_params = SliceParams::bounded(RHO_MIN, RHO_MAX);
    let rho: Vec<f64> = (0..k.saturating_sub(1))
        .map(|j| {
            let vj0 = gmm::mean_inversions(config.rho0, k, j);
            slice_sample(
                |r| gmm::prior_log_density(r, vj0, config.nu0, k, j),
                config.rho0,
                &slice_params,
                rng,
            )
        })
        .collect();
    let dispersion = DispersionVector::new(rho.clone()).expect("slice draws are positive");

    let tokens: Vec<String> = (0..w).map(|i| format!("w{i:05}")).collect();
    let vocabulary = Vocabulary::from_token_list(tokens).expect("distinct tokens");

    let mut documents = Vec::with_capacity(config.documents);
    let mut all_z = Vec::with_capacity(config.documents);
    let mut all_v = Vec::with_capacity(config.documents);
    for d in 0..config.documents {
        let n_paras = rng.random_range(config.paragraphs_per_doc.0..=config.paragraphs_per_doc.1);
        let mut counts = vec![0u32; k];
        for _ in 0..n_paras {
            counts[sample_categorical_cdf(&theta_cdf, rng)] += 1;
        }
        let v = gmm::sample_inversions(&dispersion, rng);
        let pi = v.to_permutation();
        let z = compute_z(&counts, &pi);

        let mut paragraphs = Vec::with_capacity(n_paras);
        for &topic in &z {
            let n_words =
                rng.random_range(config.words_per_paragraph.0..=config.words_per_paragraph.1);
            let words: Vec<String> = (0..n_words)
                .map(|_| {
                    let word = sample_categorical_cdf(&beta_cdf[topic], rng);
                    format!("w{word:05}")
                })
                .collect();
            let raw_text = words.join(" ");
            paragraphs.push(Paragraph::from_tokens(
                &words,
                &vocabulary,
                raw_text,
                Some(format!("t{topic}")),
            ));
        }
        documents.push(Document {
            id: format!("synth{d:04}"),
            paragraphs,
        });
        all_z.push(z);
        all_v.push(v.as_slice().to_vec());
    }

    SyntheticCorpus {
        corpus: Corpus {
            documents,
            vocabulary,
        },
        z: all_z,
        inversions: all_v,
        rho,
        beta,
        theta,
    }
}

/// Per-metric values across chains with their mean, rendered as a plain
/// text table.
#[derive(Debug, Clone, Default)]
pub struct MetricReport {
    rows: Vec<(String, Vec<f64>)>,
}

impl MetricReport {
    pub fn new() -> Self {
        MetricReport::default()
    }

    pub fn push(&mut self, metric: impl Into<String>, per_chain: Vec<f64>) {
        self.rows.push((metric.into(), per_chain));
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|(name, _)| name == metric)
            .map(|(_, values)| values.iter().sum::<f64>() / values.len() as f64)
    }
}

impl fmt::Display for MetricReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let chains = self.rows.iter().map(|(_, v)| v.len()).max().unwrap_or(0);
        write!(f, "{:<24}", "metric")?;
        for c in 0..chains {
            write!(f, " {:>10}", format!("chain{c}"))?;
        }
        writeln!(f, " {:>10}", "mean")?;
        for (name, values) in &self.rows {
            write!(f, "{name:<24}")?;
            for v in values {
                write!(f, " {v:>10.4}")?;
            }
            for _ in values.len()..chains {
                write!(f, " {:>10}", "-")?;
            }
            let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
            writeln!(f, " {mean:>10.4}")?;
        }
        Ok(())
    }
}
