//! Hard-negative mining and training-triplet assembly: for each query, the
//! top-ranked contexts that are semantically close to the query but distinct
//! from the gold context, mined over the whole corpus.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::embed::EmbeddingSet;
use crate::qagen::QAPair;
use crate::retrieve::{Index, RetrieveError};

/// Error from mining operations.
#[derive(Debug, thiserror::Error)]
pub enum MineError {
    #[error("gold context '{0}' is not in the index")]
    GoldMissing(String),
    #[error("no text known for context '{0}'")]
    MissingText(String),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
}

/// A query with its gold context and ordered hard negatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingTriplet {
    pub qid: String,
    pub query: String,
    pub positive_id: String,
    pub negative_ids: Vec<String>,
}

/// Mines up to `n` hard negatives for one query: the top-ranked contexts
/// excluding the gold id and any context whose text is byte-identical to the
/// gold text, in descending score order. A corpus of one context yields an
/// empty list (the caller records the warning).
pub fn mine_negatives(
    qid: &str,
    queries: &EmbeddingSet,
    index: &Index,
    gold_id: &str,
    texts: &HashMap<String, String>,
    n: usize,
) -> Result<Vec<String>, MineError> {
    if !index.contains(gold_id) {
        return Err(MineError::GoldMissing(gold_id.to_string()));
    }
    let gold_text = texts
        .get(gold_id)
        .ok_or_else(|| MineError::MissingText(gold_id.to_string()))?;
    if index.len() <= 1 {
        return Ok(Vec::new());
    }
    let full = index.rank(qid, queries, index.len())?;
    let mut negatives = Vec::with_capacity(n);
    for entry in &full.ranked {
        if negatives.len() == n {
            break;
        }
        if entry.id == gold_id {
            continue;
        }
        let text = texts
            .get(&entry.id)
            .ok_or_else(|| MineError::MissingText(entry.id.clone()))?;
        if text == gold_text {
            continue;
        }
        negatives.push(entry.id.clone());
    }
    Ok(negatives)
}

/// A pair that could not be turned into a triplet, with the reason.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SkippedPair {
    pub qid: String,
    pub reason: String,
}

/// Assembly report: triplet counts per source document plus skipped pairs
/// and non-fatal warnings.
#[derive(Debug, Default, Serialize, Deserialize)]
pub struct MiningReport {
    pub triplets_per_doc: BTreeMap<String, usize>,
    pub skipped: Vec<SkippedPair>,
    pub warnings: Vec<String>,
}

/// Builds one triplet per QA pair by mining hard negatives over the whole
/// corpus. Pairs whose gold context or query embedding cannot be resolved are
/// skipped and listed in the report.
pub fn assemble_triplets(
    pairs: &[QAPair],
    queries: &EmbeddingSet,
    index: &Index,
    chunks: &[Chunk],
    n_negatives: usize,
) -> (Vec<TrainingTriplet>, MiningReport) {
    let texts: HashMap<String, String> = chunks
        .iter()
        .map(|c| (c.chunk_id.clone(), c.text.clone()))
        .collect();
    let doc_of: HashMap<&str, &str> = chunks
        .iter()
        .map(|c| (c.chunk_id.as_str(), c.doc_id.as_str()))
        .collect();

    let mined: Vec<Result<Vec<String>, MineError>> = pairs
        .par_iter()
        .map(|pair| {
            if !queries.contains(&pair.qid) {
                return Err(MineError::MissingText(format!(
                    "query embedding for '{}'",
                    pair.qid
                )));
            }
            mine_negatives(
                &pair.qid,
                queries,
                index,
                &pair.gold_chunk_id,
                &texts,
                n_negatives,
            )
        })
        .collect();

    let mut triplets = Vec::with_capacity(pairs.len());
    let mut report = MiningReport::default();
    for (pair, outcome) in pairs.iter().zip(mined) {
        match outcome {
            Ok(negative_ids) => {
                if negative_ids.is_empty() {
                    report
                        .warnings
                        .push(format!("'{}': no negatives available", pair.qid));
                }
                if let Some(doc) = doc_of.get(pair.gold_chunk_id.as_str()) {
                    *report
                        .triplets_per_doc
                        .entry((*doc).to_string())
                        .or_insert(0) += 1;
                }
                triplets.push(TrainingTriplet {
                    qid: pair.qid.clone(),
                    query: pair.question.clone(),
                    positive_id: pair.gold_chunk_id.clone(),
                    negative_ids,
                });
            }
            Err(e) => report.skipped.push(SkippedPair {
                qid: pair.qid.clone(),
                reason: e.to_string(),
            }),
        }
    }
    (triplets, report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qagen::QuestionType;
    use crate::retrieve::ScoringMode;
    use std::sync::Arc;

    fn unit(v: Vec<f32>) -> Vec<f32> {
        let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    /// Corpus of 5 contexts on a 2D fan around the query direction, gold
    /// closest, plus a byte-identical duplicate of the gold text.
    fn fixture() -> (Index, EmbeddingSet, Vec<Chunk>) {
        let mut contexts = EmbeddingSet::new();
        let angles = [0.05f32, 0.2, 0.4, 0.6, 0.8];
        for (i, a) in angles.iter().enumerate() {
            contexts
                .insert(format!("c{i}"), unit(vec![a.cos(), a.sin()]))
                .unwrap();
        }
        let index = Index::build(Arc::new(contexts), ScoringMode::Cosine).unwrap();

        let mut queries = EmbeddingSet::new();
        queries.insert("q0", vec![1.0, 0.0]).unwrap();

        let mut chunks: Vec<Chunk> = (0..5)
            .map(|i| Chunk {
                chunk_id: format!("c{i}"),
                doc_id: "d".to_string(),
                seq: i,
                text: format!("text {i}"),
                n_tokens: 2,
            })
            .collect();
        // c1 duplicates the gold's text byte for byte.
        chunks[1].text = "text 0".to_string();
        (index, queries, chunks)
    }

    fn texts(chunks: &[Chunk]) -> HashMap<String, String> {
        chunks
            .iter()
            .map(|c| (c.chunk_id.clone(), c.text.clone()))
            .collect()
    }

    #[test]
    fn negatives_exclude_gold_and_duplicates() {
        let (index, queries, chunks) = fixture();
        let negatives =
            mine_negatives("q0", &queries, &index, "c0", &texts(&chunks), 10).unwrap();
        // c0 is the gold, c1 duplicates its text: both excluded.
        assert_eq!(negatives, vec!["c2", "c3", "c4"]);
    }

    #[test]
    fn negatives_clamp_to_available() {
        let (index, queries, chunks) = fixture();
        let negatives =
            mine_negatives("q0", &queries, &index, "c2", &texts(&chunks), 10).unwrap();
        assert_eq!(negatives.len(), 4);
        assert!(!negatives.contains(&"c2".to_string()));
    }

    #[test]
    fn negatives_descend_in_score() {
        let (index, queries, chunks) = fixture();
        let negatives =
            mine_negatives("q0", &queries, &index, "c4", &texts(&chunks), 3).unwrap();
        assert_eq!(negatives, vec!["c0", "c1", "c2"]);
    }

    #[test]
    fn gold_missing_is_error() {
        let (index, queries, chunks) = fixture();
        let err = mine_negatives("q0", &queries, &index, "nope", &texts(&chunks), 5).unwrap_err();
        assert!(matches!(err, MineError::GoldMissing(_)));
    }

    #[test]
    fn singleton_corpus_yields_empty_list() {
        let mut contexts = EmbeddingSet::new();
        contexts.insert("only", vec![1.0, 0.0]).unwrap();
        let index = Index::build(Arc::new(contexts), ScoringMode::Cosine).unwrap();
        let mut queries = EmbeddingSet::new();
        queries.insert("q0", vec![1.0, 0.0]).unwrap();
        let texts: HashMap<String, String> =
            [("only".to_string(), "t".to_string())].into_iter().collect();
        let negatives = mine_negatives("q0", &queries, &index, "only", &texts, 10).unwrap();
        assert!(negatives.is_empty());
    }

    fn pair(qid: &str, gold: &str) -> QAPair {
        QAPair {
            qid: qid.to_string(),
            question: format!("question for {gold}"),
            answer: "a".to_string(),
            gold_chunk_id: gold.to_string(),
            qtype: QuestionType::Unspecified,
        }
    }

    #[test]
    fn assemble_one_triplet_per_pair() {
        let (index, mut queries, chunks) = fixture();
        queries.insert("q1", unit(vec![0.9, 0.1])).unwrap();
        let pairs = vec![pair("q0", "c0"), pair("q1", "c3")];
        let (triplets, report) = assemble_triplets(&pairs, &queries, &index, &chunks, 10);
        assert_eq!(triplets.len(), 2);
        assert!(report.skipped.is_empty());
        assert_eq!(report.triplets_per_doc.get("d"), Some(&2));
        for t in &triplets {
            assert!(!t.negative_ids.contains(&t.positive_id));
            assert!(t.negative_ids.len() <= 10);
        }
    }

    #[test]
    fn assemble_empty_input() {
        let (index, queries, chunks) = fixture();
        let (triplets, report) = assemble_triplets(&[], &queries, &index, &chunks, 10);
        assert!(triplets.is_empty());
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn assemble_skips_unresolvable_gold() {
        let (index, queries, chunks) = fixture();
        let pairs = vec![pair("q0", "ghost")];
        let (triplets, report) = assemble_triplets(&pairs, &queries, &index, &chunks, 10);
        assert!(triplets.is_empty());
        assert_eq!(report.skipped.len(), 1);
        assert_eq!(report.skipped[0].qid, "q0");
    }
}
