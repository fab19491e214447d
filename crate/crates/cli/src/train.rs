use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use clap::Args;
use mallows_content::sampler::{run_chain, PosteriorSample, SamplerConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common::{self, PreprocessArgs, VariantArg};
use crate::error::CliError;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus file to train on.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Upper bound on the number of topics.
    #[arg(long)]
    pub topics: usize,
    /// Gibbs sweeps per chain.
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    /// Independent chains to run.
    #[arg(long, default_value_t = 5)]
    pub chains: usize,
    /// Topic-distribution concentration.
    #[arg(long, default_value_t = 0.1)]
    pub theta0: f64,
    /// Language-model concentration.
    #[arg(long, default_value_t = 0.1)]
    pub beta0: f64,
    /// Prior dispersion of the ordering model.
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
    /// Dispersion prior strength as a multiple of the document count.
    #[arg(long = "nu0-scale", default_value_t = 0.1)]
    pub nu0_scale: f64,
    /// Ordering treatment: full, constrained, or uniform.
    #[arg(long, value_enum, default_value_t = VariantArg::Full)]
    pub variant: VariantArg,
    /// Base seed; chain c uses stream c of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for the chain pool (default: available parallelism).
    #[arg(long, env = "MALLOWS_CONTENT_WORKERS")]
    pub workers: Option<usize>,
    /// Record the joint log probability after every sweep.
    #[arg(long)]
    pub trace: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let config = SamplerConfig {
        topics: args.topics,
        iterations: args.iters,
        chains: args.chains,
        theta0: args.theta0,
        beta0: args.beta0,
        rho0: args.rho0,
        nu0_scale: args.nu0_scale,
        variant: args.variant.to_variant(),
        seed: args.seed,
        trace_joint: args.trace,
    };
    config
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let started = Instant::now();
    let (corpus, report, corpus_sha) = common::read_corpus(&args.corpus, &args.preprocess)?;
    common::create_out_dir(&args.out)?;
    corpus
        .vocabulary
        .write_file(args.out.join("vocab.txt"))
        .map_err(|e| CliError::io("vocab.txt", e))?;
    common::write_text_file(&args.out.join("load_report.txt"), &report.to_string())?;

    let workers = args
        .workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .clamp(1, config.chains.max(1));

    let results = run_chain_pool(&corpus, &config, workers);
    let mut manifest = Manifest::new("train");
    manifest
        .field("corpus", args.corpus.display())
        .field("corpus_sha256", &corpus_sha)
        .field("preprocess", args.preprocess.describe())
        .field(
            "config",
            format!(
                "topics={} iterations={} chains={} theta0={} beta0={} rho0={} nu0_scale={} variant={} seed={} trace={}",
                config.topics,
                config.iterations,
                config.chains,
                config.theta0,
                config.beta0,
                config.rho0,
                config.nu0_scale,
                config.variant,
                config.seed,
                config.trace_joint,
            ),
        )
        .field("vocab_size", corpus.vocabulary.len())
        .field("vocab_sha256", corpus.vocabulary.checksum())
        .field(
            "corpus_stats",
            format!(
                "docs={} paragraphs={} tokens={}",
                corpus.n_documents(),
                corpus.n_paragraphs(),
                corpus.n_tokens()
            ),
        )
        .field("workers", workers);

    for (chain, (sample, elapsed)) in results.iter().enumerate() {
        let name = format!("chain_{chain}.sample");
        let file = File::create(args.out.join(&name)).map_err(|e| CliError::io(&name, e))?;
        sample
            .write_to(BufWriter::new(file))
            .map_err(|e| CliError::io(&name, e))?;
        manifest.field(
            "chain",
            format!(
                "{chain} stream={chain} file={name} wall_ms={}",
                elapsed.as_millis()
            ),
        );
        println!(
            "chain {chain}: {} sweeps in {:.1}s -> {name}",
            config.iterations,
            elapsed.as_secs_f64()
        );
    }
    manifest.field("total_wall_ms", started.elapsed().as_millis());
    manifest.write(&args.out)?;
    println!(
        "trained {} chains on {} documents in {:.1}s; outputs in {}",
        config.chains,
        corpus.n_documents(),
        started.elapsed().as_secs_f64(),
        args.out.display()
    );
    Ok(())
}

/// Run all chains on a fixed-size worker pool; each worker owns one chain
/// at a time and chains are deterministic in (seed, stream) regardless of
/// scheduling.
fn run_chain_pool(
    corpus: &mallows_content::Corpus,
    config: &SamplerConfig,
    workers: usize,
) -> Vec<(PosteriorSample, Duration)> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<(PosteriorSample, Duration)>>> =
        Mutex::new((0..config.chains).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let chain = next.fetch_add(1, Ordering::Relaxed);
                if chain >= config.chains {
                    break;
                }
                let started = Instant::now();
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(chain as u64);
                let sample =
                    run_chain(corpus, config, &mut rng).expect("config validated before pool");
                results.lock().unwrap()[chain] = Some((sample, started.elapsed()));
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every chain completed"))
        .collect()
}
