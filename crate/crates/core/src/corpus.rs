//! Corpus ingestion: select final-version documents, clean extracted text,
//! split sentences, build token-bounded chunks, and sample chunks per document.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::tokenize::Tokenizer;

/// Error from corpus operations.
#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("sample fraction must be in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// One source document with pre-extracted text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SourceDocument {
    pub doc_id: String,
    pub filename: String,
    pub raw_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agency: Option<String>,
}

/// A sentence-aligned text span from one document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub doc_id: String,
    pub seq: usize,
    pub text: String,
    pub n_tokens: usize,
}

/// Keeps filenames that look like complete final versions: any include phrase
/// present and no exclude phrase. Matching is case-insensitive.
pub fn filter_final_documents(filenames: &[String]) -> Vec<String> {
    const INCLUDE: [&str; 3] = ["final eis", "final volume", "final vol"];
    const EXCLUDE: [&str; 3] = ["appendix", "executive summary", "comment"];
    filenames
        .iter()
        .filter(|name| {
            let lower = name.to_lowercase();
            INCLUDE.iter().any(|p| lower.contains(p)) && !EXCLUDE.iter().any(|p| lower.contains(p))
        })
        .cloned()
        .collect()
}

/// Options for [`clean_text`].
#[derive(Debug, Clone)]
pub struct CleanOptions {
    /// A line repeated verbatim on at least this many pages is treated as a
    /// running header or footer and removed everywhere.
    pub header_min_pages: usize,
}

impl Default for CleanOptions {
    fn default() -> Self {
        Self {
            header_min_pages: 3,
        }
    }
}

fn page_number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*(?:page\s*)?\d+(?:\s*(?:of|/)\s*-?\d+)?\s*$").expect("valid regex")
    })
}

/// Removes repeated page headers/footers, standalone page-number lines, and
/// control characters. Pages are delimited by form feeds; tabs become spaces.
/// Idempotent: cleaning cleaned text changes nothing.
pub fn clean_text(raw: &str) -> String {
    clean_text_with(raw, &CleanOptions::default())
}

pub fn clean_text_with(raw: &str, opts: &CleanOptions) -> String {
    let normalized = raw.replace("\r\n", "\n").replace('\r', "\n");
    let pages: Vec<&str> = normalized.split('\x0c').collect();

    // Count, per distinct trimmed line, how many pages it appears on.
    let mut page_counts: HashMap<&str, usize> = HashMap::new();
    for page in &pages {
        let mut seen: Vec<&str> = Vec::new();
        for line in page.lines() {
            let t = line.trim();
            if t.is_empty() || seen.contains(&t) {
                continue;
            }
            seen.push(t);
            *page_counts.entry(t).or_insert(0) += 1;
        }
    }

    let mut out = String::with_capacity(normalized.len());
    let mut first_line = true;
    for page in &pages {
        for line in page.lines() {
            let t = line.trim();
            if !t.is_empty() {
                if page_counts.get(t).copied().unwrap_or(0) >= opts.header_min_pages {
                    continue;
                }
                if page_number_re().is_match(t) {
                    continue;
                }
            }
            if !first_line {
                out.push('\n');
            }
            first_line = false;
            for ch in line.chars() {
                if ch == '\t' {
                    out.push(' ');
                } else if !ch.is_control() {
                    out.push(ch);
                }
            }
        }
    }
    out
}

/// Lowercased abbreviations (with trailing period) that never end a sentence.
const ABBREVIATIONS: [&str; 44] = [
    "al.", "apr.", "approx.", "art.", "aug.", "ch.", "cf.", "co.", "col.", "corp.", "dec.",
    "dept.", "dr.", "e.g.", "est.", "etc.", "feb.", "fig.", "figs.", "gen.", "gov.", "i.e.",
    "inc.", "jan.", "jr.", "jul.", "jun.", "ltd.", "mar.", "mr.", "mrs.", "ms.", "no.", "nos.",
    "nov.", "oct.", "p.", "pp.", "prof.", "sec.", "sept.", "sr.", "u.k.", "u.s.",
];

fn is_sentence_end(word: &str, next: Option<&str>) -> bool {
    let core = word.trim_end_matches(|c| matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}' | '\u{00bb}'));
    let Some(last) = core.chars().last() else {
        return false;
    };
    if !matches!(last, '.' | '!' | '?' | '\u{2026}') {
        return false;
    }
    if last == '.' && ABBREVIATIONS.contains(&core.to_lowercase().as_str()) {
        return false;
    }
    match next {
        None => true,
        // A following lowercase word continues the sentence.
        Some(next) => !next
            .chars()
            .find(|c| c.is_alphanumeric())
            .map(|c| c.is_lowercase())
            .unwrap_or(false),
    }
}

/// Splits whitespace-normalized text into sentences. Joining the result with
/// single spaces reproduces the whitespace-normalized input exactly.
pub fn split_sentences(text: &str) -> Vec<String> {
    let words: Vec<&str> = text.split_whitespace().collect();
    let mut sentences = Vec::new();
    let mut current = String::new();
    for (i, word) in words.iter().enumerate() {
        if !current.is_empty() {
            current.push(' ');
        }
        current.push_str(word);
        if is_sentence_end(word, words.get(i + 1).copied()) {
            sentences.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    sentences
}

/// Greedily packs sentences into chunks of at most `max_tokens` tokens without
/// splitting any sentence. A single sentence over the budget becomes its own
/// chunk. `seq` starts at 0 and increases by 1; chunk ids are `{doc_id}:{seq}`.
pub fn chunk_sentences(
    doc_id: &str,
    sentences: &[String],
    max_tokens: usize,
    tokenizer: &dyn Tokenizer,
) -> Vec<Chunk> {
    assert!(max_tokens >= 1, "max_tokens must be at least 1");
    let mut chunks: Vec<Chunk> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut current_tokens = 0usize;

    let flush = |current: &mut Vec<&str>, chunks: &mut Vec<Chunk>| {
        if current.is_empty() {
            return;
        }
        let seq = chunks.len();
        let text = current.join(" ");
        let n_tokens = tokenizer.count(&text);
        chunks.push(Chunk {
            chunk_id: format!("{doc_id}:{seq}"),
            doc_id: doc_id.to_string(),
            seq,
            text,
            n_tokens,
        });
        current.clear();
    };

    for sentence in sentences {
        let t = tokenizer.count(sentence);
        if !current.is_empty() && current_tokens + t > max_tokens {
            flush(&mut current, &mut chunks);
            current_tokens = 0;
        }
        current.push(sentence.as_str());
        current_tokens += t;
        if current_tokens > max_tokens {
            // Oversized single sentence: keep it whole in its own chunk.
            flush(&mut current, &mut chunks);
            current_tokens = 0;
        }
    }
    flush(&mut current, &mut chunks);
    chunks
}

/// Cleans, splits, and chunks one document.
pub fn chunk_document(
    doc: &SourceDocument,
    max_tokens: usize,
    tokenizer: &dyn Tokenizer,
    clean: &CleanOptions,
) -> Vec<Chunk> {
    let cleaned = clean_text_with(&doc.raw_text, clean);
    let sentences = split_sentences(&cleaned);
    chunk_sentences(&doc.doc_id, &sentences, max_tokens, tokenizer)
}

fn fnv1a64(data: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in data.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// ceil(fraction * n) with a snap to the nearest integer to absorb binary
/// representation error in products like 0.3 * 10.
fn ceil_fraction(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let r = x.round();
    let v = if (x - r).abs() < 1e-9 { r } else { x.ceil() };
    (v as usize).clamp(1, n)
}

/// Selects ceil(fraction * n) chunks per document, uniformly without
/// replacement. Deterministic for a fixed seed regardless of document order;
/// selected chunks keep their original order within each document.
pub fn sample_chunks(
    chunks: &[Chunk],
    fraction: f64,
    seed: u64,
) -> Result<Vec<Chunk>, CorpusError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CorpusError::InvalidFraction(fraction));
    }
    // Group by doc_id in first-seen order.
    let mut doc_order: Vec<&str> = Vec::new();
    let mut by_doc: HashMap<&str, Vec<&Chunk>> = HashMap::new();
    for chunk in chunks {
        by_doc
            .entry(chunk.doc_id.as_str())
            .or_insert_with(|| {
                doc_order.push(chunk.doc_id.as_str());
                Vec::new()
            })
            .push(chunk);
    }

    let mut out = Vec::new();
    for doc_id in doc_order {
        let doc_chunks = &by_doc[doc_id];
        let n = doc_chunks.len();
        let n_sel = ceil_fraction(fraction, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(doc_id));
        let mut picked = rand::seq::index::sample(&mut rng, n, n_sel).into_vec();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|i| doc_chunks[i].clone()));
    }
    Ok(out)
}

/// Reads every `.txt` file under `dir` (recursively, in sorted path order)
/// into [`SourceDocument`]s. `doc_id` is the path relative to `dir` without
/// the extension, with path separators replaced by `_`.
pub fn read_corpus_dir(dir: &Path, final_only: bool) -> Result<Vec<SourceDocument>, CorpusError> {
    let mut files = Vec::new();
    collect_txt_files(dir, &mut files)?;
    files.sort();

    let mut docs = Vec::new();
    for path in files {
        let filename = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        if final_only && filter_final_documents(std::slice::from_ref(&filename)).is_empty() {
            continue;
        }
        let raw_text = std::fs::read_to_string(&path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let rel = path.strip_prefix(dir).unwrap_or(&path);
        let doc_id = rel
            .with_extension("")
            .to_string_lossy()
            .replace(std::path::MAIN_SEPARATOR, "_");
        docs.push(SourceDocument {
            doc_id,
            filename,
            raw_text,
            agency: None,
        });
    }
    Ok(docs)
}

fn collect_txt_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let entries = std::fs::read_dir(dir).map_err(|source| CorpusError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for entry in entries {
        let entry = entry.map_err(|source| CorpusError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        let path = entry.path();
        if path.is_dir() {
            collect_txt_files(&path, out)?;
        } else if path.extension().map(|e| e == "txt").unwrap_or(false) {
            out.push(path);
        }
    }
    Ok(())
}
