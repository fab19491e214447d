use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use mallows_content::corpus::{
    self, Corpus, CorpusFormat, LoadReport, PreprocessOptions, TokenizerOptions, Vocabulary,
};
use mallows_content::sampler::{PosteriorSample, Variant};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Jsonl,
    Text,
}

impl FormatArg {
    pub fn to_format(self) -> CorpusFormat {
        match self {
            FormatArg::Jsonl => CorpusFormat::Jsonl,
            FormatArg::Text => CorpusFormat::PlainText,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Full,
    Constrained,
    Uniform,
}

impl VariantArg {
    pub fn to_variant(self) -> Variant {
        match self {
            VariantArg::Full => Variant::Full,
            VariantArg::Constrained => Variant::Constrained,
            VariantArg::Uniform => Variant::Uniform,
        }
    }
}

/// Corpus ingestion flags shared by every command that reads documents.
/// Task commands must use the same settings as the training run so the
/// rebuilt vocabulary matches; the checksum recorded in each model file
/// catches disagreements.
#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// Corpus file format; sniffed from content when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Drop tokens appearing fewer than this many times corpus-wide.
    #[arg(long, default_value_t = 2)]
    pub min_count: usize,
    /// Drop tokens shorter than this many characters.
    #[arg(long, default_value_t = 1)]
    pub min_token_len: usize,
    /// Keep original casing instead of lowercasing.
    #[arg(long)]
    pub keep_case: bool,
    /// File with one stop word per line to drop during tokenization.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
}

impl PreprocessArgs {
    pub fn to_options(&self) -> Result<PreprocessOptions, CliError> {
        if self.min_count < 1 {
            return Err(CliError::Config("min-count must be >= 1".into()));
        }
        let stopwords = match &self.stopwords {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::io(&path.display().to_string(), e))?;
                Some(
                    text.lines()
                        .map(|l| l.trim().to_string())
                        .filter(|l| !l.is_empty())
                        .collect::<HashSet<String>>(),
                )
            }
            None => None,
        };
        Ok(PreprocessOptions {
            tokenizer: TokenizerOptions {
                keep_case: self.keep_case,
                min_token_len: self.min_token_len,
                stopwords,
            },
            min_count: self.min_count,
        })
    }

    pub fn describe(&self) -> String {
        format!(
            "lowercase={} min_token_len={} min_count={} stopwords={}",
            !self.keep_case,
            self.min_token_len,
            self.min_count,
            self.stopwords
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "-".into()),
        )
    }
}

fn map_corpus_error(path: &Path, err: corpus::CorpusError) -> CliError {
    match err {
        corpus::CorpusError::EmptyVocabulary => CliError::Config(format!(
            "{}: vocabulary is empty after pruning; lower --min-count",
            path.display()
        )),
        other => CliError::io(&path.display().to_string(), other),
    }
}

/// Load a corpus building its own vocabulary; returns the corpus, the load
/// report, and the SHA-256 of the raw file.
pub fn read_corpus(
    path: &Path,
    args: &PreprocessArgs,
) -> Result<(Corpus, LoadReport, String), CliError> {
    let options = args.to_options()?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let content =
        String::from_utf8(bytes).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let checksum = corpus::sha256_hex(content.as_bytes());
    let format = args
        .format
        .map(FormatArg::to_format)
        .unwrap_or_else(|| CorpusFormat::sniff(&content));
    let (corpus, report) = corpus::load_corpus(content.as_bytes(), format, &options)
        .map_err(|e| map_corpus_error(path, e))?;
    Ok((corpus, report, checksum))
}

/// Load a corpus against a fixed vocabulary (out-of-vocabulary tokens are
/// discarded).
pub fn read_corpus_with_vocabulary(
    path: &Path,
    args: &PreprocessArgs,
    vocabulary: &Vocabulary,
) -> Result<(Corpus, LoadReport, String), CliError> {
    let options = args.to_options()?;
    let bytes = std::fs::read(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let content =
        String::from_utf8(bytes).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    let checksum = corpus::sha256_hex(content.as_bytes());
    let format = args
        .format
        .map(FormatArg::to_format)
        .unwrap_or_else(|| CorpusFormat::sniff(&content));
    let (corpus, report) =
        corpus::load_corpus_with_vocabulary(content.as_bytes(), format, &options, vocabulary)
            .map_err(|e| map_corpus_error(path, e))?;
    Ok((corpus, report, checksum))
}

pub fn read_models(paths: &[PathBuf]) -> Result<Vec<PosteriorSample>, CliError> {
    paths
        .iter()
        .map(|path| {
            let file =
                File::open(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
            PosteriorSample::read_from(BufReader::new(file))
                .map_err(|e| CliError::io(&path.display().to_string(), e))
        })
        .collect()
}

/// Every model must have been trained against the given vocabulary.
pub fn check_vocab_checksum(
    models: &[PosteriorSample],
    paths: &[PathBuf],
    expected: &str,
) -> Result<(), CliError> {
    for (model, path) in models.iter().zip(paths) {
        if model.vocab_checksum != expected {
            return Err(CliError::Consistency(format!(
                "{}: model vocabulary checksum {} does not match corpus vocabulary {}",
                path.display(),
                &model.vocab_checksum[..12.min(model.vocab_checksum.len())],
                &expected[..12.min(expected.len())],
            )));
        }
    }
    Ok(())
}

/// Task outputs must refer to the same documents, in the same order, as the
/// corpus they are evaluated against.
pub fn check_documents_match(
    models: &[PosteriorSample],
    paths: &[PathBuf],
    corpus: &Corpus,
) -> Result<(), CliError> {
    for (model, path) in models.iter().zip(paths) {
        let ids: Vec<&str> = corpus.documents.iter().map(|d| d.id.as_str()).collect();
        let model_ids: Vec<&str> = model.doc_ids.iter().map(|s| s.as_str()).collect();
        if ids != model_ids {
            return Err(CliError::Consistency(format!(
                "{}: model documents do not match the corpus",
                path.display()
            )));
        }
    }
    Ok(())
}

pub fn create_out_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(&path.display().to_string(), e))
}

pub fn write_text_file(path: &Path, content: &str) -> Result<(), CliError> {
    let mut file = File::create(path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
    file.write_all(content.as_bytes())
        .map_err(|e| CliError::io(&path.display().to_string(), e))
}
