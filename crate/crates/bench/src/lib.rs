//! Shared fixtures for the benchmarks.

use mallows_content::eval::{generate_synthetic, SynthConfig, SyntheticCorpus};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A mid-sized synthetic corpus: 20 documents, 10 topics, moderately sharp
/// language models.
pub fn bench_corpus() -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    generate_synthetic(
        &SynthConfig {
            topics: 10,
            documents: 20,
            paragraphs_per_doc: (10, 18),
            words_per_paragraph: (20, 50),
            vocabulary: 2_000,
            theta0: 1.0,
            beta0: 0.05,
            rho0: 1.0,
            nu0: 2.0,
        },
        &mut rng,
    )
}
