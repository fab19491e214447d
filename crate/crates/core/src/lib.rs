//! A Bayesian content model for collections of related documents.
//!
//! Documents are modeled as ordered sequences of single-topic paragraphs. Each
//! document draws a bag of topics from a shared multinomial and a topic
//! ordering from a Generalized Mallows Model (GMM) over permutations, so that
//! topic selection and topic order are both biased to be similar across the
//! collection and every topic occupies one contiguous block per document.
//! Inference is collapsed Gibbs sampling over per-document topic bags,
//! permutation inversion counts, and the GMM dispersion parameters; word and
//! topic multinomials are integrated out analytically.
//!
//! The crate is organized around that pipeline:
//!
//! - [`corpus`]: tokenization, vocabulary construction, and corpus file I/O
//! - [`gmm`]: permutations, inversion counts, and the Generalized Mallows
//!   Model with its conjugate prior
//! - [`dcm`]: Dirichlet compound multinomial word likelihoods and the
//!   per-document span-probability cache
//! - [`sampler`]: the collapsed Gibbs sampler, chain state, and posterior
//!   sample serialization
//! - [`tasks`]: turning posterior samples into alignments, segmentations, and
//!   section orderings
//! - [`eval`]: task metrics, a randomization significance test, and a
//!   synthetic corpus generator for end-to-end checks
//!
//! ```
//! use mallows_content::eval::{generate_synthetic, SynthConfig};
//! use mallows_content::sampler::{run_chain, SamplerConfig};
//! use mallows_content::tasks::extract_segmentation;
//! use rand::SeedableRng;
//!
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let synth = generate_synthetic(
//!     &SynthConfig {
//!         topics: 3,
//!         documents: 8,
//!         paragraphs_per_doc: (3, 6),
//!         words_per_paragraph: (5, 10),
//!         vocabulary: 30,
//!         theta0: 1.0,
//!         beta0: 0.1,
//!         rho0: 1.0,
//!         nu0: 1.0,
//!     },
//!     &mut rng,
//! );
//! let config = SamplerConfig {
//!     iterations: 50,
//!     chains: 1,
//!     ..SamplerConfig::new(3)
//! };
//! let sample = run_chain(&synth.corpus, &config, &mut rng).unwrap();
//! for z in &sample.z {
//!     let segments = extract_segmentation(z);
//!     assert_eq!(segments.total(), z.len());
//! }
//! ```

pub mod corpus;
pub mod dcm;
pub mod eval;
pub mod gmm;
pub mod sampler;
pub mod slice;
pub mod tasks;
pub mod util;

pub use corpus::{Corpus, Document, Paragraph, Vocabulary};
pub use gmm::{DispersionVector, GmmPrior, InversionVector, Permutation};
pub use sampler::{ChainState, PosteriorSample, SamplerConfig, Variant};
pub use tasks::{Alignment, SectionOrdering, Segmentation};
