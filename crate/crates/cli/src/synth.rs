use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use mallows_content::eval::{generate_synthetic, SynthConfig};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::common;
use crate::error::CliError;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub topics: usize,
    #[arg(long)]
    pub docs: usize,
    #[arg(long, default_value_t = 8)]
    pub paragraphs_min: usize,
    #[arg(long, default_value_t = 12)]
    pub paragraphs_max: usize,
    #[arg(long, default_value_t = 20)]
    pub words_min: usize,
    #[arg(long, default_value_t = 40)]
    pub words_max: usize,
    #[arg(long, default_value_t = 100)]
    pub vocab_size: usize,
    #[arg(long, default_value_t = 1.0)]
    pub theta0: f64,
    #[arg(long, default_value_t = 0.1)]
    pub beta0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho0: f64,
    /// Absolute dispersion prior strength; defaults to 0.1 * docs.
    #[arg(long)]
    pub nu0: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &SynthArgs) -> Result<(), CliError> {
    if args.topics < 1 || args.docs < 1 || args.vocab_size < 1 {
        return Err(CliError::Config(
            "topics, docs, and vocab-size must all be >= 1".into(),
        ));
    }
    if args.paragraphs_min < 1 || args.paragraphs_min > args.paragraphs_max {
        return Err(CliError::Config("bad paragraphs range".into()));
    }
    if args.words_min > args.words_max {
        return Err(CliError::Config("bad words range".into()));
    }
    let config = SynthConfig {
        topics: args.topics,
        documents: args.docs,
        paragraphs_per_doc: (args.paragraphs_min, args.paragraphs_max),
        words_per_paragraph: (args.words_min, args.words_max),
        vocabulary: args.vocab_size,
        theta0: args.theta0,
        beta0: args.beta0,
        rho0: args.rho0,
        nu0: args.nu0.unwrap_or(0.1 * args.docs as f64),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let synth = generate_synthetic(&config, &mut rng);

    common::create_out_dir(&args.out)?;
    synth
        .corpus
        .write_jsonl_file(args.out.join("corpus.jsonl"))
        .map_err(|e| CliError::io("corpus.jsonl", e))?;

    let mut truth = String::new();
    writeln!(truth, "mallows-content-truth v1").unwrap();
    writeln!(truth, "topics {}", config.topics).unwrap();
    writeln!(truth, "vocabulary {}", config.vocabulary).unwrap();
    writeln!(truth, "rho {}", join(&synth.rho)).unwrap();
    writeln!(truth, "theta {}", join(&synth.theta)).unwrap();
    for (k, row) in synth.beta.iter().enumerate() {
        writeln!(truth, "beta {k} {}", join(row)).unwrap();
    }
    for (d, doc) in synth.corpus.documents.iter().enumerate() {
        writeln!(truth, "doc {}", doc.id).unwrap();
        writeln!(truth, "z {}", join(&synth.z[d])).unwrap();
        writeln!(truth, "v {}", join(&synth.inversions[d])).unwrap();
    }
    writeln!(truth, "end").unwrap();
    common::write_text_file(&args.out.join("ground_truth.txt"), &truth)?;

    let mut manifest = Manifest::new("synth");
    manifest
        .field(
            "config",
            format!(
                "topics={} docs={} paragraphs={}..{} words={}..{} vocab_size={} theta0={} beta0={} rho0={} nu0={} seed={}",
                config.topics,
                config.documents,
                config.paragraphs_per_doc.0,
                config.paragraphs_per_doc.1,
                config.words_per_paragraph.0,
                config.words_per_paragraph.1,
                config.vocabulary,
                config.theta0,
                config.beta0,
                config.rho0,
                config.nu0,
                args.seed,
            ),
        )
        .field("corpus", args.out.join("corpus.jsonl").display())
        .field("ground_truth", args.out.join("ground_truth.txt").display());
    manifest.write(&args.out)?;

    println!(
        "generated {} documents over {} topics into {}",
        config.documents,
        config.topics,
        args.out.display()
    );
    Ok(())
}

fn join<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}
