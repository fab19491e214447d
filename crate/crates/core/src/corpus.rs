//! Corpus representation and ingestion.
//!
//! A corpus is a set of documents, each an ordered sequence of paragraphs;
//! every paragraph is a bag of word ids over a shared [`Vocabulary`].
//! Paragraphs may carry a section heading, which is held only for evaluation
//! and never consumed by inference.
//!
//! Two file formats are supported:
//!
//! - JSON lines, one document per line:
//!   `{"id": "...", "paragraphs": [{"text": "...", "heading": "..."?}]}`
//! - plain text: documents separated by a `====` line, paragraphs separated
//!   by blank lines, no headings.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type WordId = u32;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: document {doc} has no paragraphs")]
    EmptyDocument { doc: String, line: usize },
    #[error("line {line}: duplicate document id {doc}")]
    DuplicateDocument { doc: String, line: usize },
    #[error("vocabulary is empty after pruning (min_count too high?)")]
    EmptyVocabulary,
    #[error("duplicate token {0:?} in vocabulary")]
    DuplicateToken(String),
    #[error("corpus has no documents")]
    EmptyCorpus,
}

/// Tokenization settings. Defaults: lowercase, Unicode alphanumeric token
/// boundaries, no length filter, no stop list.
#[derive(Debug, Clone, Default)]
pub struct TokenizerOptions {
    pub keep_case: bool,
    pub min_token_len: usize,
    pub stopwords: Option<HashSet<String>>,
}

/// Split `text` on non-alphanumeric boundaries, lowercasing and filtering
/// per `options`.
pub fn tokenize(text: &str, options: &TokenizerOptions) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| {
            if options.keep_case {
                t.to_string()
            } else {
                t.to_lowercase()
            }
        })
        .filter(|t| t.chars().count() >= options.min_token_len)
        .filter(|t| match &options.stopwords {
            Some(stop) => !stop.contains(t),
            None => true,
        })
        .collect()
}

/// Full preprocessing settings: tokenizer plus the corpus-wide frequency
/// cutoff used when building a vocabulary.
#[derive(Debug, Clone)]
pub struct PreprocessOptions {
    pub tokenizer: TokenizerOptions,
    pub min_count: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            tokenizer: TokenizerOptions::default(),
            min_count: 2,
        }
    }
}

/// Bidirectional map between token strings and dense word ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, WordId>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as WordId))
            .collect();
        Vocabulary { tokens, index }
    }

    /// Build from an explicit id-ordered token list.
    pub fn from_token_list(tokens: Vec<String>) -> Result<Self, CorpusError> {
        if tokens.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        let mut seen = HashSet::new();
        for t in &tokens {
            if !seen.insert(t.as_str()) {
                return Err(CorpusError::DuplicateToken(t.clone()));
            }
        }
        Ok(Vocabulary::from_tokens(tokens))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<WordId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: WordId) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Hex SHA-256 over the id-ordered token list; models record this to
    /// detect corpus/vocabulary mismatches.
    pub fn checksum(&self) -> String {
        let mut hasher = Sha256::new();
        for t in &self.tokens {
            hasher.update(t.as_bytes());
            hasher.update(b"\n");
        }
        hex(&hasher.finalize())
    }

    /// One token per line, in id order.
    pub fn write_to(&self, mut w: impl Write) -> io::Result<()> {
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl BufRead) -> Result<Self, CorpusError> {
        let mut tokens = Vec::new();
        for line in r.lines() {
            tokens.push(line?);
        }
        if tokens.is_empty() {
            return Err(CorpusError::EmptyVocabulary);
        }
        Ok(Vocabulary::from_tokens(tokens))
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Vocabulary::read_from(BufReader::new(File::open(path)?))
    }
}

/// Keep tokens appearing at least `min_count` times across all paragraphs;
/// ids are assigned in first-appearance order, so identical input always
/// yields identical ids.
pub fn build_vocabulary(
    docs: &[Vec<Vec<String>>],
    min_count: usize,
) -> Result<Vocabulary, CorpusError> {
    assert!(min_count >= 1);
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        for para in doc {
            for tok in para {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
    }
    let mut tokens = Vec::new();
    let mut seen: HashSet<&str> = HashSet::new();
    for doc in docs {
        for para in doc {
            for tok in para {
                if counts[tok.as_str()] >= min_count && seen.insert(tok.as_str()) {
                    tokens.push(tok.clone());
                }
            }
        }
    }
    if tokens.is_empty() {
        return Err(CorpusError::EmptyVocabulary);
    }
    Ok(Vocabulary::from_tokens(tokens))
}

/// A bag of word counts with its source text and optional section heading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    /// Word counts sorted by id.
    pub counts: Vec<(WordId, u32)>,
    /// Total in-vocabulary tokens.
    pub token_total: u32,
    pub raw_text: String,
    /// Evaluation-only label; inference never reads it.
    pub heading: Option<String>,
}

impl Paragraph {
    pub fn from_tokens(
        tokens: &[String],
        vocabulary: &Vocabulary,
        raw_text: String,
        heading: Option<String>,
    ) -> Self {
        let mut map: HashMap<WordId, u32> = HashMap::new();
        let mut total = 0u32;
        for tok in tokens {
            if let Some(id) = vocabulary.id(tok) {
                *map.entry(id).or_insert(0) += 1;
                total += 1;
            }
        }
        let mut counts: Vec<(WordId, u32)> = map.into_iter().collect();
        counts.sort_unstable();
        Paragraph {
            counts,
            token_total: total,
            raw_text,
            heading,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.token_total == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub paragraphs: Vec<Paragraph>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub vocabulary: Vocabulary,
}

impl Corpus {
    pub fn n_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn n_paragraphs(&self) -> usize {
        self.documents.iter().map(|d| d.paragraphs.len()).sum()
    }

    pub fn n_tokens(&self) -> u64 {
        self.documents
            .iter()
            .flat_map(|d| &d.paragraphs)
            .map(|p| p.token_total as u64)
            .sum()
    }

    /// True when every paragraph carries a heading, so heading-based
    /// reference structures can be derived.
    pub fn has_headings(&self) -> bool {
        self.documents
            .iter()
            .flat_map(|d| &d.paragraphs)
            .all(|p| p.heading.is_some())
    }

    pub fn write_jsonl(&self, mut w: impl Write) -> io::Result<()> {
        for doc in &self.documents {
            let record = RawDocument {
                id: doc.id.clone(),
                paragraphs: doc
                    .paragraphs
                    .iter()
                    .map(|p| RawParagraph {
                        text: p.raw_text.clone(),
                        heading: p.heading.clone(),
                    })
                    .collect(),
            };
            serde_json::to_writer(&mut w, &record)?;
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_jsonl_file(&self, path: impl AsRef<Path>) -> io::Result<()> {
        self.write_jsonl(BufWriter::new(File::create(path)?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    PlainText,
}

impl CorpusFormat {
    /// Guess the format from content: JSON lines start with `{`.
    pub fn sniff(content: &str) -> CorpusFormat {
        match content.trim_start().chars().next() {
            Some('{') => CorpusFormat::Jsonl,
            _ => CorpusFormat::PlainText,
        }
    }
}

/// Summary of one ingestion run, written alongside outputs as a text report.
#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub documents: usize,
    pub paragraphs: usize,
    pub kept_tokens: u64,
    pub dropped_tokens: u64,
    /// Paragraphs whose bags came out empty (for example, all tokens unseen
    /// by a fixed vocabulary), as `(document id, paragraph index)`.
    pub empty_paragraphs: Vec<(String, usize)>,
    pub vocabulary_size: usize,
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "documents            {}", self.documents)?;
        writeln!(f, "paragraphs           {}", self.paragraphs)?;
        writeln!(f, "vocabulary size      {}", self.vocabulary_size)?;
        writeln!(f, "tokens kept          {}", self.kept_tokens)?;
        writeln!(f, "tokens dropped       {}", self.dropped_tokens)?;
        writeln!(f, "empty paragraphs     {}", self.empty_paragraphs.len())?;
        for (doc, idx) in &self.empty_paragraphs {
            writeln!(f, "  empty: doc {doc} paragraph {idx}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawParagraph {
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    heading: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawDocument {
    id: String,
    paragraphs: Vec<RawParagraph>,
}

struct ParsedDocument {
    id: String,
    line: usize,
    paragraphs: Vec<RawParagraph>,
}

fn parse_jsonl(content: &str) -> Result<Vec<ParsedDocument>, CorpusError> {
    let mut docs = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawDocument = serde_json::from_str(line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        docs.push(ParsedDocument {
            id: raw.id,
            line: line_no,
            paragraphs: raw.paragraphs,
        });
    }
    Ok(docs)
}

fn parse_plain_text(content: &str) -> Result<Vec<ParsedDocument>, CorpusError> {
    let mut docs: Vec<ParsedDocument> = Vec::new();
    let mut paragraphs: Vec<RawParagraph> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut doc_start_line = 1;

    fn flush_paragraph(current: &mut Vec<&str>, paragraphs: &mut Vec<RawParagraph>) {
        if !current.is_empty() {
            paragraphs.push(RawParagraph {
                text: current.join("\n"),
                heading: None,
            });
            current.clear();
        }
    }

    for (i, line) in content.lines().enumerate() {
        if line.trim() == "====" {
            flush_paragraph(&mut current, &mut paragraphs);
            docs.push(ParsedDocument {
                id: format!("doc{:04}", docs.len() + 1),
                line: doc_start_line,
                paragraphs: std::mem::take(&mut paragraphs),
            });
            doc_start_line = i + 2;
        } else if line.trim().is_empty() {
            flush_paragraph(&mut current, &mut paragraphs);
        } else {
            current.push(line);
        }
    }
    flush_paragraph(&mut current, &mut paragraphs);
    if !paragraphs.is_empty() || docs.is_empty() {
        docs.push(ParsedDocument {
            id: format!("doc{:04}", docs.len() + 1),
            line: doc_start_line,
            paragraphs,
        });
    }
    Ok(docs)
}

fn assemble(
    parsed: Vec<ParsedDocument>,
    options: &PreprocessOptions,
    fixed_vocabulary: Option<&Vocabulary>,
) -> Result<(Corpus, LoadReport), CorpusError> {
    if parsed.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let mut ids: HashSet<&str> = HashSet::new();
    for doc in &parsed {
        if doc.paragraphs.is_empty() {
            return Err(CorpusError::EmptyDocument {
                doc: doc.id.clone(),
                line: doc.line,
            });
        }
        if !ids.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateDocument {
                doc: doc.id.clone(),
                line: doc.line,
            });
        }
    }

    let tokenized: Vec<Vec<Vec<String>>> = parsed
        .iter()
        .map(|d| {
            d.paragraphs
                .iter()
                .map(|p| tokenize(&p.text, &options.tokenizer))
                .collect()
        })
        .collect();

    let vocabulary = match fixed_vocabulary {
        Some(v) => v.clone(),
        None => build_vocabulary(&tokenized, options.min_count)?,
    };

    let mut report = LoadReport {
        vocabulary_size: vocabulary.len(),
        ..LoadReport::default()
    };

    let mut documents = Vec::with_capacity(parsed.len());
    for (doc, doc_tokens) in parsed.into_iter().zip(tokenized) {
        let mut paragraphs = Vec::with_capacity(doc.paragraphs.len());
        for (idx, (raw, tokens)) in doc.paragraphs.into_iter().zip(doc_tokens).enumerate() {
            let para = Paragraph::from_tokens(&tokens, &vocabulary, raw.text, raw.heading);
            report.kept_tokens += para.token_total as u64;
            report.dropped_tokens += (tokens.len() as u64) - para.token_total as u64;
            if para.is_empty() {
                report.empty_paragraphs.push((doc.id.clone(), idx));
            }
            paragraphs.push(para);
        }
        report.paragraphs += paragraphs.len();
        documents.push(Document {
            id: doc.id,
            paragraphs,
        });
    }
    report.documents = documents.len();

    Ok((
        Corpus {
            documents,
            vocabulary,
        },
        report,
    ))
}

/// Load a corpus, building its vocabulary from the data.
pub fn load_corpus(
    mut reader: impl Read,
    format: CorpusFormat,
    options: &PreprocessOptions,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let mut content = String::new();
    reader.read_to_string(&mut content)?;
    let parsed = match format {
        CorpusFormat::Jsonl => parse_jsonl(&content)?,
        CorpusFormat::PlainText => parse_plain_text(&content)?,
    };
    assemble(parsed, options, None)
}

/// Load a corpus against a fixed (training) vocabulary; tokens outside it
/// are discarded and paragraphs left empty are flagged in the report.
pub fn load_corpus_with_vocabulary(
    mut reader: impl Read,
    format: CorpusFormat,
    options: &PreprocessOptions,
    vocabulary: &Vocabulary,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let mut content = String::new();
    reader.read_to_string(&mut content)?;
    let parsed = match format {
        CorpusFormat::Jsonl => parse_jsonl(&content)?,
        CorpusFormat::PlainText => parse_plain_text(&content)?,
    };
    assemble(parsed, options, Some(vocabulary))
}

pub fn load_corpus_file(
    path: impl AsRef<Path>,
    format: Option<CorpusFormat>,
    options: &PreprocessOptions,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let content = std::fs::read_to_string(path)?;
    let format = format.unwrap_or_else(|| CorpusFormat::sniff(&content));
    load_corpus(content.as_bytes(), format, options)
}

pub fn load_corpus_file_with_vocabulary(
    path: impl AsRef<Path>,
    format: Option<CorpusFormat>,
    options: &PreprocessOptions,
    vocabulary: &Vocabulary,
) -> Result<(Corpus, LoadReport), CorpusError> {
    let content = std::fs::read_to_string(path)?;
    let format = format.unwrap_or_else(|| CorpusFormat::sniff(&content));
    load_corpus_with_vocabulary(content.as_bytes(), format, options, vocabulary)
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Hex SHA-256 of arbitrary bytes (used for corpus file checksums).
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}
