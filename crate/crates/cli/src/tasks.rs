use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use mallows_content::eval::{
    alignment_scores, default_window, pk, reference_from_headings, window_diff, MetricReport,
};
use mallows_content::tasks::{extract_alignment, extract_segmentation};

use crate::common::{self, PreprocessArgs};
use crate::error::CliError;
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct TaskArgs {
    /// The corpus the models were trained on.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub preprocess: PreprocessArgs,
    /// Posterior sample files, one per chain.
    #[arg(required = true)]
    pub models: Vec<PathBuf>,
}

fn load_checked(
    args: &TaskArgs,
) -> Result<
    (
        mallows_content::Corpus,
        Vec<mallows_content::PosteriorSample>,
        String,
    ),
    CliError,
> {
    let (corpus, report, corpus_sha) = common::read_corpus(&args.corpus, &args.preprocess)?;
    let models = common::read_models(&args.models)?;
    common::check_vocab_checksum(&models, &args.models, &corpus.vocabulary.checksum())?;
    common::check_documents_match(&models, &args.models, &corpus)?;
    common::create_out_dir(&args.out)?;
    common::write_text_file(&args.out.join("load_report.txt"), &report.to_string())?;
    Ok((corpus, models, corpus_sha))
}

fn write_manifest(command: &str, args: &TaskArgs, corpus_sha: &str) -> Result<(), CliError> {
    let mut manifest = Manifest::new(command);
    manifest
        .field("corpus", args.corpus.display())
        .field("corpus_sha256", corpus_sha)
        .field("preprocess", args.preprocess.describe());
    for model in &args.models {
        manifest.field("model", model.display());
    }
    manifest.write(&args.out)
}

pub fn run_align(args: &TaskArgs) -> Result<(), CliError> {
    let (corpus, models, corpus_sha) = load_checked(args)?;

    let reference = reference_from_headings(&corpus);
    let mut report = MetricReport::new();
    let mut recalls = Vec::new();
    let mut precisions = Vec::new();
    let mut fs = Vec::new();

    for (chain, model) in models.iter().enumerate() {
        let alignment = extract_alignment(model);
        let mut tsv = String::new();
        for (doc_idx, labels) in alignment.labels.iter().enumerate() {
            for (para, &cluster) in labels.iter().enumerate() {
                writeln!(tsv, "{}\t{para}\t{cluster}", alignment.doc_ids[doc_idx]).unwrap();
            }
        }
        common::write_text_file(&args.out.join(format!("alignment_chain{chain}.tsv")), &tsv)?;

        if let Some(reference) = &reference {
            let labels: Vec<usize> = alignment.labels.iter().flatten().copied().collect();
            let headings: Vec<&str> = reference
                .headings
                .iter()
                .flatten()
                .map(|s| s.as_str())
                .collect();
            let scores = alignment_scores(&labels, &headings)
                .map_err(|e| CliError::Consistency(e.to_string()))?;
            recalls.push(scores.recall);
            precisions.push(scores.precision);
            fs.push(scores.f);
        }
    }

    let report_text = if reference.is_some() {
        report.push("recall", recalls);
        report.push("precision", precisions);
        report.push("f_score", fs);
        report.to_string()
    } else {
        "metrics unavailable: corpus has no headings\n".to_string()
    };
    common::write_text_file(&args.out.join("alignment_report.txt"), &report_text)?;
    print!("{report_text}");
    write_manifest("align", args, &corpus_sha)
}

pub fn run_segment(args: &TaskArgs) -> Result<(), CliError> {
    let (corpus, models, corpus_sha) = load_checked(args)?;

    let reference = reference_from_headings(&corpus);
    let mut pks = Vec::new();
    let mut wds = Vec::new();
    let mut seg_counts = Vec::new();

    for (chain, model) in models.iter().enumerate() {
        let segmentations: Vec<_> = model.z.iter().map(|z| extract_segmentation(z)).collect();
        let mut tsv = String::new();
        for (doc_idx, seg) in segmentations.iter().enumerate() {
            let boundaries = seg.boundaries();
            let rendered = if boundaries.is_empty() {
                "-".to_string()
            } else {
                boundaries
                    .iter()
                    .map(|b| b.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            writeln!(tsv, "{}\t{rendered}", model.doc_ids[doc_idx]).unwrap();
        }
        common::write_text_file(
            &args.out.join(format!("segmentation_chain{chain}.tsv")),
            &tsv,
        )?;

        seg_counts.push(
            segmentations
                .iter()
                .map(|s| s.n_segments() as f64)
                .sum::<f64>()
                / segmentations.len() as f64,
        );
        if let Some(reference) = &reference {
            let mut pk_sum = 0.0;
            let mut wd_sum = 0.0;
            let mut scored = 0usize;
            for (seg, truth) in segmentations.iter().zip(&reference.segmentations) {
                let window = default_window(truth);
                if window >= truth.total() {
                    continue;
                }
                pk_sum +=
                    pk(seg, truth, window).map_err(|e| CliError::Consistency(e.to_string()))?;
                wd_sum += window_diff(seg, truth, window)
                    .map_err(|e| CliError::Consistency(e.to_string()))?;
                scored += 1;
            }
            if scored == 0 {
                return Err(CliError::Consistency(
                    "no document is long enough for windowed segmentation metrics".into(),
                ));
            }
            pks.push(pk_sum / scored as f64);
            wds.push(wd_sum / scored as f64);
        }
    }

    let mut report = MetricReport::new();
    let report_text = if reference.is_some() {
        report.push("pk", pks);
        report.push("window_diff", wds);
        report.push("segments", seg_counts);
        report.to_string()
    } else {
        let mut report = MetricReport::new();
        report.push("segments", seg_counts);
        format!("{report}metrics unavailable: corpus has no headings\n")
    };
    common::write_text_file(&args.out.join("segmentation_report.txt"), &report_text)?;
    print!("{report_text}");
    write_manifest("segment", args, &corpus_sha)
}
