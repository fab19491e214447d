use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use mallows_content::corpus::{Vocabulary, WordId};
use mallows_content::eval::{kendall_tau, MetricReport};
use mallows_content::sampler::{estimate_beta, estimate_theta};
use mallows_content::tasks::order_sections;

use crate::common::{self, PreprocessArgs};
use crate::error::CliError;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct OrderArgs {
    /// Held-out corpus whose sections are to be ordered; its file order is
    /// the evaluation reference.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Training vocabulary file (written by `train`); out-of-vocabulary
    /// tokens in the test corpus are discarded.
    #[arg(long)]
    pub vocab: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Posterior sample files, one per chain.
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
}

/// One document's sections: maximal heading runs when headings are present,
/// otherwise individual paragraphs.
fn sections_of(doc: &mallows_content::Document, use_headings: bool) -> Vec<Vec<(WordId, u32)>> {
    let n = doc.paragraphs.len();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    if use_headings {
        let mut start = 0;
        for i in 1..=n {
            if i == n || doc.paragraphs[i].heading != doc.paragraphs[start].heading {
                groups.push((start, i));
                start = i;
            }
        }
    } else {
        groups.extend((0..n).map(|i| (i, i + 1)));
    }
    groups
        .into_iter()
        .map(|(start, end)| {
            let mut bag: HashMap<WordId, u32> = HashMap::new();
            for para in &doc.paragraphs[start..end] {
                for &(w, c) in &para.counts {
                    *bag.entry(w).or_insert(0) += c;
                }
            }
            let mut bag: Vec<(WordId, u32)> = bag.into_iter().collect();
            bag.sort_unstable();
            bag
        })
        .collect()
}

pub fn run(args: &OrderArgs) -> Result<(), CliError> {
    let vocabulary = Vocabulary::read_file(&args.vocab)
        .map_err(|e| CliError::io(&args.vocab.display().to_string(), e))?;
    let (corpus, load_report, corpus_sha) =
        common::read_corpus_with_vocabulary(&args.corpus, &args.preprocess, &vocabulary)?;
    let models = common::read_models(&args.models)?;
    common::check_vocab_checksum(&models, &args.models, &vocabulary.checksum())?;
    common::create_out_dir(&args.out)?;
    common::write_text_file(&args.out.join("load_report.txt"), &load_report.to_string())?;

    let use_headings = corpus.has_headings();
    let doc_sections: Vec<Vec<Vec<(WordId, u32)>>> = corpus
        .documents
        .iter()
        .map(|d| sections_of(d, use_headings))
        .collect();

    let mut taus_per_chain = Vec::new();
    let mut warnings = String::new();
    for (chain, model) in models.iter().enumerate() {
        let beta_hat = estimate_beta(model);
        let theta_hat = estimate_theta(model);
        let mut tsv = String::new();
        let mut taus = Vec::new();
        for (doc, sections) in corpus.documents.iter().zip(&doc_sections) {
            let ordering = order_sections(sections, &beta_hat, &theta_hat);
            for (rank, &section) in ordering.order.iter().enumerate() {
                writeln!(
                    tsv,
                    "{}\t{section}\t{rank}\t{}",
                    doc.id, ordering.zhat[section]
                )
                .unwrap();
            }
            if sections.len() < 2 {
                if chain == 0 {
                    writeln!(
                        warnings,
                        "warning: doc {} has a single section; tau undefined, excluded",
                        doc.id
                    )
                    .unwrap();
                }
                continue;
            }
            if sections.iter().all(|s| s.is_empty()) {
                if chain == 0 {
                    writeln!(
                        warnings,
                        "warning: doc {} is empty after vocabulary filtering; tau undefined, excluded",
                        doc.id
                    )
                    .unwrap();
                }
                continue;
            }
            let reference: Vec<usize> = (0..sections.len()).collect();
            let tau = kendall_tau(&ordering.order, &reference)
                .map_err(|e| CliError::Consistency(e.to_string()))?;
            taus.push(tau);
        }
        common::write_text_file(&args.out.join(format!("ordering_chain{chain}.tsv")), &tsv)?;
        if taus.is_empty() {
            return Err(CliError::Consistency(
                "no document in the test corpus is scoreable (need >= 2 non-empty sections)".into(),
            ));
        }
        taus_per_chain.push(taus.iter().sum::<f64>() / taus.len() as f64);
    }

    let mut report = MetricReport::new();
    report.push("kendall_tau", taus_per_chain);
    let report_text = format!("{report}{warnings}");
    common::write_text_file(&args.out.join("ordering_report.txt"), &report_text)?;
    print!("{report_text}");

    let mut manifest = Manifest::new("order");
    manifest
        .field("corpus", args.corpus.display())
        .field("corpus_sha256", &corpus_sha)
        .field("vocab", args.vocab.display())
        .field("vocab_sha256", vocabulary.checksum())
        .field("preprocess", args.preprocess.describe());
    for model in &args.models {
        manifest.field("model", model.display());
    }
    manifest.write(&args.out)
}
