//! Task outputs derived from posterior samples: cross-document alignment,
//! segmentation, and section ordering.
//!
//! Alignment reads the sampled per-paragraph topics as cluster labels;
//! segmentation keeps only the boundaries where the topic changes; ordering
//! scores unseen sections against the point-estimated topic distributions
//! and sorts them by most probable topic, whose index order is the learned
//! canonical order.

use crate::corpus::WordId;
use crate::sampler::PosteriorSample;

/// Cluster labels for every paragraph of every document, straight from the
/// sampled topic assignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub doc_ids: Vec<String>,
    pub labels: Vec<Vec<usize>>,
}

/// Read the topic assignment of each paragraph as its cluster label.
pub fn extract_alignment(sample: &PosteriorSample) -> Alignment {
    Alignment {
        doc_ids: sample.doc_ids.clone(),
        labels: sample.z.clone(),
    }
}

/// One document's segmentation as ordered positive segment lengths.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segmentation {
    lengths: Vec<usize>,
}

impl Segmentation {
    pub fn from_lengths(lengths: Vec<usize>) -> Self {
        assert!(!lengths.is_empty(), "a segmentation needs a segment");
        assert!(lengths.iter().all(|&l| l > 0), "segments must be non-empty");
        Segmentation { lengths }
    }

    /// Build from strictly increasing internal boundary positions over a
    /// document of `total` units.
    pub fn from_boundaries(total: usize, boundaries: &[usize]) -> Self {
        assert!(total > 0);
        assert!(boundaries.windows(2).all(|w| w[0] < w[1]));
        assert!(boundaries.iter().all(|&b| b > 0 && b < total));
        let mut lengths = Vec::with_capacity(boundaries.len() + 1);
        let mut prev = 0;
        for &b in boundaries {
            lengths.push(b - prev);
            prev = b;
        }
        lengths.push(total - prev);
        Segmentation { lengths }
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    pub fn n_segments(&self) -> usize {
        self.lengths.len()
    }

    pub fn total(&self) -> usize {
        self.lengths.iter().sum()
    }

    /// Internal boundary positions: the prefix sums short of the total.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.lengths.len().saturating_sub(1));
        let mut acc = 0;
        for &l in &self.lengths[..self.lengths.len() - 1] {
            acc += l;
            out.push(acc);
        }
        out
    }
}

/// Cut wherever adjacent paragraphs change topic; the topic identities are
/// discarded.
pub fn extract_segmentation(z: &[usize]) -> Segmentation {
    assert!(!z.is_empty(), "cannot segment an empty document");
    let mut lengths = Vec::new();
    let mut run = 1;
    for pair in z.windows(2) {
        if pair[0] == pair[1] {
            run += 1;
        } else {
            lengths.push(run);
            run = 1;
        }
    }
    lengths.push(run);
    Segmentation { lengths }
}

/// Most probable topic for a bag of words under point estimates: the
/// maximizer of `log p(bag | topic) + log p(topic)`, ties resolved toward
/// the smaller topic index. An empty bag falls back to the topic prior.
pub fn assign_topic_map(
    section: &[(WordId, u32)],
    beta_hat: &[Vec<f64>],
    theta_hat: &[f64],
) -> usize {
    assert_eq!(beta_hat.len(), theta_hat.len());
    assert!(!beta_hat.is_empty());
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (k, (beta_k, &theta_k)) in beta_hat.iter().zip(theta_hat).enumerate() {
        let mut score = theta_k.ln();
        for &(w, c) in section {
            score += c as f64 * beta_k[w as usize].ln();
        }
        if score > best_score {
            best_score = score;
            best = k;
        }
    }
    best
}

/// A predicted ordering over input sections: `order[r]` is the input index
/// ranked `r`-th, and `zhat[i]` is section `i`'s most probable topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectionOrdering {
    pub order: Vec<usize>,
    pub zhat: Vec<usize>,
}

impl SectionOrdering {
    /// Rank of each input section (inverse of `order`).
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.order.len()];
        for (rank, &idx) in self.order.iter().enumerate() {
            ranks[idx] = rank;
        }
        ranks
    }
}

/// Order sections by their most probable topic, ascending; the canonical
/// ordering is the identity, so low topics come early. Sections tied on a
/// topic keep their input order, which makes the result deterministic.
/// Costs exactly `sections.len() * k` score evaluations.
pub fn order_sections(
    sections: &[Vec<(WordId, u32)>],
    beta_hat: &[Vec<f64>],
    theta_hat: &[f64],
) -> SectionOrdering {
    let zhat: Vec<usize> = sections
        .iter()
        .map(|s| assign_topic_map(s, beta_hat, theta_hat))
        .collect();
    let mut order: Vec<usize> = (0..sections.len()).collect();
    order.sort_by_key(|&i| (zhat[i], i));
    SectionOrdering { order, zhat }
}
