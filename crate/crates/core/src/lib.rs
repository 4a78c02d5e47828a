//! Core library for benchlens: a toolkit that builds retrieval training data
//! from a document corpus (chunking, synthetic QA, hard-negative mining),
//! profiles evaluation benchmarks by topic diversity, and scores ranked
//! retrieval runs with NDCG.
//!
//! The pipeline stages hand off through line-delimited files so each stage is
//! re-runnable on its own:
//!
//! - [`corpus`] — document filtering, cleaning, sentence splitting, token-bounded
//!   chunking, per-document sampling
//! - [`qagen`] — prompt construction and synthetic question/answer generation
//!   against a text-generation service (HTTP or canned mock)
//! - [`embed`] — pooled and token-level embedding sets, file formats, providers
//! - [`retrieve`] — exact cosine and late-interaction (MaxSim) ranking
//! - [`mine`] — hard-negative mining and training-triplet assembly
//! - [`diagnose`] — topic-diversity profiling: pairwise cosine distance,
//!   k-means with silhouette-selected k, topic entropy, 2D projection
//! - [`evalkit`] — NDCG@k scoring, gain curves, improvement reports

pub mod corpus;
pub mod diagnose;
pub mod embed;
pub mod evalkit;
pub mod jsonl;
pub mod mine;
pub mod qagen;
pub mod retrieve;
pub mod tokenize;
