//! Exact scoring and ranking of contexts for a query: pooled cosine or
//! token-level late interaction (MaxSim). Brute force over the whole corpus;
//! benchmark corpora are small and the evaluation contract ranks everything.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{EmbeddingSet, TokenMatrix};

/// Error from scoring or ranking.
#[derive(Debug, thiserror::Error)]
pub enum RetrieveError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("empty token matrix")]
    EmptyMatrix,
    #[error("unknown query id '{0}'")]
    UnknownQuery(String),
    #[error("index is empty")]
    EmptyIndex,
    #[error("'{0}' has no token matrix required for maxsim scoring")]
    MissingTokens(String),
    #[error("k must be at least 1")]
    InvalidK,
}

/// How query/context similarity is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringMode {
    Cosine,
    MaxSim,
}

impl std::fmt::Display for ScoringMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoringMode::Cosine => write!(f, "cosine"),
            ScoringMode::MaxSim => write!(f, "maxsim"),
        }
    }
}

/// Dot product of two unit vectors, in [-1, 1].
pub fn cosine_score(q: &[f32], d: &[f32]) -> Result<f64, RetrieveError> {
    if q.len() != d.len() {
        return Err(RetrieveError::DimensionMismatch(q.len(), d.len()));
    }
    Ok(q.iter()
        .zip(d)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum())
}

/// Late-interaction score: sum over query rows of the maximum dot product
/// with any document row. Not symmetric; the first argument is the query.
pub fn maxsim_score(query: &TokenMatrix, doc: &TokenMatrix) -> Result<f64, RetrieveError> {
    if query.rows() == 0 || doc.rows() == 0 {
        return Err(RetrieveError::EmptyMatrix);
    }
    if query.dim() != doc.dim() {
        return Err(RetrieveError::DimensionMismatch(query.dim(), doc.dim()));
    }
    let mut total = 0.0;
    for q in query.iter_rows() {
        let mut best = f64::NEG_INFINITY;
        for d in doc.iter_rows() {
            let dot: f64 = q
                .iter()
                .zip(d)
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum();
            if dot > best {
                best = dot;
            }
        }
        total += best;
    }
    Ok(total)
}

/// One context with its retrieval score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredContext {
    pub id: String,
    pub score: f64,
}

/// Contexts ranked for one query, scores non-increasing, ids distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub qid: String,
    pub ranked: Vec<ScoredContext>,
}

/// Immutable scoring index over an embedding set.
#[derive(Debug)]
pub struct Index {
    embeddings: Arc<EmbeddingSet>,
    mode: ScoringMode,
}

impl Index {
    /// Builds an index; in maxsim mode every context must carry a token
    /// matrix.
    pub fn build(embeddings: Arc<EmbeddingSet>, mode: ScoringMode) -> Result<Self, RetrieveError> {
        if embeddings.is_empty() {
            return Err(RetrieveError::EmptyIndex);
        }
        if mode == ScoringMode::MaxSim {
            for id in embeddings.ids() {
                if embeddings.tokens(id).is_none() {
                    return Err(RetrieveError::MissingTokens(id.clone()));
                }
            }
        }
        Ok(Self { embeddings, mode })
    }

    pub fn mode(&self) -> ScoringMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.embeddings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.is_empty()
    }

    /// Context ids in insertion order.
    pub fn ids(&self) -> &[String] {
        self.embeddings.ids()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.embeddings.contains(id)
    }

    fn score_against(&self, query: &QueryVectors, context_id: &str) -> Result<f64, RetrieveError> {
        match self.mode {
            ScoringMode::Cosine => {
                let doc = self
                    .embeddings
                    .pooled(context_id)
                    .expect("context id resolvable");
                cosine_score(&query.pooled, doc)
            }
            ScoringMode::MaxSim => {
                let doc = self
                    .embeddings
                    .tokens(context_id)
                    .expect("token matrix checked at build");
                maxsim_score(query.tokens(), doc)
            }
        }
    }

    /// Ranks the top `k` contexts for a query vector. Exact: scores every
    /// context, sorts by (score desc, id asc) so ties are deterministic.
    pub fn rank_query(
        &self,
        qid: &str,
        query: &QueryVectors,
        k: usize,
    ) -> Result<RankedList, RetrieveError> {
        if k == 0 {
            return Err(RetrieveError::InvalidK);
        }
        let mut scored = Vec::with_capacity(self.len());
        for id in self.ids() {
            scored.push(ScoredContext {
                id: id.clone(),
                score: self.score_against(query, id)?,
            });
        }
        scored.sort_unstable_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.id.cmp(&b.id))
        });
        scored.truncate(k);
        Ok(RankedList {
            qid: qid.to_string(),
            ranked: scored,
        })
    }

    /// Ranks a query drawn from a query embedding set by id.
    pub fn rank(
        &self,
        qid: &str,
        queries: &EmbeddingSet,
        k: usize,
    ) -> Result<RankedList, RetrieveError> {
        let query = QueryVectors::from_set(qid, queries)?;
        self.rank_query(qid, &query, k)
    }

    /// Ranks many queries in parallel; output order follows `qids`.
    pub fn rank_all(
        &self,
        qids: &[String],
        queries: &EmbeddingSet,
        k: usize,
    ) -> Result<Vec<RankedList>, RetrieveError> {
        qids.par_iter()
            .map(|qid| self.rank(qid, queries, k))
            .collect()
    }
}

/// The representations of one query: always a pooled vector, plus a token
/// matrix when available (falls back to the pooled vector as a single row).
pub struct QueryVectors {
    pooled: Vec<f32>,
    tokens: Option<TokenMatrix>,
    fallback: TokenMatrix,
}

impl QueryVectors {
    pub fn from_set(qid: &str, queries: &EmbeddingSet) -> Result<Self, RetrieveError> {
        let pooled = queries
            .pooled(qid)
            .ok_or_else(|| RetrieveError::UnknownQuery(qid.to_string()))?
            .to_vec();
        let fallback =
            TokenMatrix::from_rows(vec![pooled.clone()]).expect("one-row matrix");
        Ok(Self {
            pooled,
            tokens: queries.tokens(qid).cloned(),
            fallback,
        })
    }

    pub fn from_pooled(pooled: Vec<f32>) -> Self {
        let fallback = TokenMatrix::from_rows(vec![pooled.clone()]).expect("one-row matrix");
        Self {
            pooled,
            tokens: None,
            fallback,
        }
    }

    fn tokens(&self) -> &TokenMatrix {
        self.tokens.as_ref().unwrap_or(&self.fallback)
    }
}
