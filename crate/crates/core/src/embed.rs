//! Embedding sets: pooled unit vectors (and optional per-token matrices)
//! keyed by context or query id, with text and binary file formats and
//! embedding providers (deterministic random, canned, HTTP service).

use std::collections::HashMap;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::tokenize::Tokenizer;

/// Unit-norm tolerance: vectors within this of 1.0 are stored as-is, which
/// keeps save/load round trips bit-exact.
const NORM_TOLERANCE: f64 = 1e-6;

/// Error from embedding storage and retrieval.
#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("vector for '{id}' has dimension {got}, expected {expected}")]
    DimensionMismatch {
        id: String,
        expected: usize,
        got: usize,
    },
    #[error("vector for '{id}' has zero norm")]
    ZeroVector { id: String },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("empty token matrix for '{id}'")]
    EmptyTokenMatrix { id: String },
    #[error("record for '{id}' has neither a vector nor tokens")]
    EmptyRecord { id: String },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A row-major token embedding matrix (n_tokens x dim), rows unit-normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
}

impl TokenMatrix {
    pub fn from_rows(rows: Vec<Vec<f32>>) -> Option<Self> {
        let n = rows.len();
        let dim = rows.first()?.len();
        if rows.iter().any(|r| r.len() != dim) {
            return None;
        }
        let mut data = Vec::with_capacity(n * dim);
        for row in rows {
            data.extend_from_slice(&row);
        }
        Some(Self { rows: n, dim, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }

    fn to_nested(&self) -> Vec<Vec<f32>> {
        self.iter_rows().map(|r| r.to_vec()).collect()
    }
}

fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

fn normalize(id: &str, v: &mut [f32]) -> Result<(), EmbedError> {
    let norm = l2_norm(v);
    if norm == 0.0 {
        return Err(EmbedError::ZeroVector { id: id.to_string() });
    }
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        for x in v.iter_mut() {
            *x = (f64::from(*x) / norm) as f32;
        }
    }
    Ok(())
}

/// Pooled unit vectors keyed by id, with optional token matrices, all of one
/// dimension. Immutable in practice once built; ids keep insertion order.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingSet {
    dim: usize,
    ids: Vec<String>,
    by_id: HashMap<String, usize>,
    pooled: Vec<Vec<f32>>,
    tokens: HashMap<String, TokenMatrix>,
}

impl EmbeddingSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn contains(&self, id: &str) -> bool {
        self.by_id.contains_key(id)
    }

    pub fn pooled(&self, id: &str) -> Option<&[f32]> {
        self.by_id.get(id).map(|&i| self.pooled[i].as_slice())
    }

    pub fn tokens(&self, id: &str) -> Option<&TokenMatrix> {
        self.tokens.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .zip(self.pooled.iter())
            .map(|(id, v)| (id.as_str(), v.as_slice()))
    }

    fn check_dim(&mut self, id: &str, dim: usize) -> Result<(), EmbedError> {
        if self.dim == 0 {
            self.dim = dim;
        }
        if dim != self.dim {
            return Err(EmbedError::DimensionMismatch {
                id: id.to_string(),
                expected: self.dim,
                got: dim,
            });
        }
        Ok(())
    }

    /// Inserts a pooled vector, re-normalizing to unit L2 when needed.
    pub fn insert(&mut self, id: impl Into<String>, mut vector: Vec<f32>) -> Result<(), EmbedError> {
        let id = id.into();
        if self.by_id.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        self.check_dim(&id, vector.len())?;
        normalize(&id, &mut vector)?;
        self.by_id.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.pooled.push(vector);
        Ok(())
    }

    /// Inserts a token matrix (rows re-normalized), deriving the pooled
    /// vector from the rows unless one is given explicitly.
    pub fn insert_with_tokens(
        &mut self,
        id: impl Into<String>,
        pooled: Option<Vec<f32>>,
        mut tokens: TokenMatrix,
    ) -> Result<(), EmbedError> {
        let id = id.into();
        if self.by_id.contains_key(&id) {
            return Err(EmbedError::DuplicateId(id));
        }
        if tokens.rows == 0 {
            return Err(EmbedError::EmptyTokenMatrix { id });
        }
        self.check_dim(&id, tokens.dim)?;
        for r in 0..tokens.rows {
            let row = &mut tokens.data[r * tokens.dim..(r + 1) * tokens.dim];
            normalize(&id, row)?;
        }
        let pooled = match pooled {
            Some(v) => v,
            None => pool_tokens(&tokens).expect("non-empty matrix pools"),
        };
        self.tokens.insert(id.clone(), tokens);
        self.insert(id, pooled)
    }
}

/// Arithmetic mean of the rows, re-normalized to unit L2.
pub fn pool_tokens(matrix: &TokenMatrix) -> Result<Vec<f32>, EmbedError> {
    if matrix.rows() == 0 {
        return Err(EmbedError::EmptyTokenMatrix { id: String::new() });
    }
    let dim = matrix.dim();
    let mut mean = vec![0.0f64; dim];
    for row in matrix.iter_rows() {
        for (m, &x) in mean.iter_mut().zip(row) {
            *m += f64::from(x);
        }
    }
    let n = matrix.rows() as f64;
    let mut pooled: Vec<f32> = mean.iter().map(|m| (m / n) as f32).collect();
    normalize("", &mut pooled).map_err(|_| EmbedError::ZeroVector { id: String::new() })?;
    Ok(pooled)
}

#[derive(Serialize, Deserialize)]
struct TextRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vector: Option<Vec<f32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tokens: Option<Vec<Vec<f32>>>,
}

/// Loads the text format: one JSON record per line, `{id, vector}` with an
/// optional `tokens` matrix.
pub fn load_text(path: &Path) -> Result<EmbeddingSet, EmbedError> {
    let records: Vec<TextRecord> =
        crate::jsonl::read_jsonl(path).map_err(|e| EmbedError::Format {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let mut set = EmbeddingSet::new();
    for rec in records {
        match (rec.vector, rec.tokens) {
            (pooled, Some(rows)) => {
                let matrix =
                    TokenMatrix::from_rows(rows).ok_or_else(|| EmbedError::Format {
                        path: path.display().to_string(),
                        message: format!("ragged token matrix for '{}'", rec.id),
                    })?;
                set.insert_with_tokens(rec.id, pooled, matrix)?;
            }
            (Some(v), None) => set.insert(rec.id, v)?,
            (None, None) => {
                return Err(EmbedError::EmptyRecord { id: rec.id });
            }
        }
    }
    Ok(set)
}

pub fn save_text(set: &EmbeddingSet, path: &Path) -> Result<(), EmbedError> {
    let records: Vec<TextRecord> = set
        .ids()
        .iter()
        .map(|id| TextRecord {
            id: id.clone(),
            vector: Some(set.pooled(id).expect("id present").to_vec()),
            tokens: set.tokens(id).map(TokenMatrix::to_nested),
        })
        .collect();
    crate::jsonl::write_jsonl(path, &records).map_err(|e| EmbedError::Format {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

const BINARY_MAGIC: &[u8; 4] = b"EMB1";

/// Saves pooled vectors in the bit-exact binary format: magic `EMB1`,
/// u32 LE dim, u32 LE count, then per record a u16 LE id byte-length, the id
/// bytes, and dim f32 LE values.
pub fn save_binary(set: &EmbeddingSet, path: &Path) -> Result<(), EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(BINARY_MAGIC).map_err(io_err)?;
    w.write_all(&(set.dim() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(set.len() as u32).to_le_bytes()).map_err(io_err)?;
    for (id, vector) in set.iter() {
        let id_bytes = id.as_bytes();
        assert!(id_bytes.len() <= u16::MAX as usize, "id too long for format");
        w.write_all(&(id_bytes.len() as u16).to_le_bytes()).map_err(io_err)?;
        w.write_all(id_bytes).map_err(io_err)?;
        for &x in vector {
            w.write_all(&x.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_binary(path: &Path) -> Result<EmbeddingSet, EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let fmt_err = |message: String| EmbedError::Format {
        path: path.display().to_string(),
        message,
    };
    let file = std::fs::File::open(path).map_err(io_err)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != BINARY_MAGIC {
        return Err(fmt_err("bad magic bytes".into()));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf).map_err(io_err)?;
    let count = u32::from_le_bytes(u32buf) as usize;

    let mut set = EmbeddingSet::new();
    for i in 0..count {
        let mut u16buf = [0u8; 2];
        r.read_exact(&mut u16buf)
            .map_err(|_| fmt_err(format!("truncated at record {i}")))?;
        let id_len = u16::from_le_bytes(u16buf) as usize;
        let mut id_bytes = vec![0u8; id_len];
        r.read_exact(&mut id_bytes)
            .map_err(|_| fmt_err(format!("truncated id at record {i}")))?;
        let id = String::from_utf8(id_bytes)
            .map_err(|_| fmt_err(format!("id at record {i} is not UTF-8")))?;
        let mut vector = vec![0.0f32; dim];
        for x in vector.iter_mut() {
            let mut f32buf = [0u8; 4];
            r.read_exact(&mut f32buf)
                .map_err(|_| fmt_err(format!("truncated vector for '{id}'")))?;
            *x = f32::from_le_bytes(f32buf);
        }
        set.insert(id, vector)?;
    }
    Ok(set)
}

/// Loads either format, sniffing the magic bytes.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingSet, EmbedError> {
    let mut magic = [0u8; 4];
    {
        let mut file = std::fs::File::open(path).map_err(|source| EmbedError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if file.read_exact(&mut magic).is_err() {
            return Ok(EmbeddingSet::new());
        }
    }
    if &magic == BINARY_MAGIC {
        load_binary(path)
    } else {
        load_text(path)
    }
}

/// Error from an embedding provider.
#[derive(Debug, thiserror::Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("bad response: {0}")]
    BadResponse(String),
}

/// Produces one vector per input text.
pub trait EmbeddingProvider: Send + Sync {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError>;
}

/// Deterministic pseudo-random embeddings: the vector for a text depends only
/// on (seed, text bytes). Identical texts map to identical vectors.
pub struct RandomProvider {
    pub seed: u64,
    pub dim: usize,
}

impl EmbeddingProvider for RandomProvider {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        Ok(texts
            .iter()
            .map(|text| {
                let digest = Sha256::digest(text.as_bytes());
                let mut eight = [0u8; 8];
                eight.copy_from_slice(&digest[..8]);
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ u64::from_le_bytes(eight));
                (0..self.dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect()
            })
            .collect())
    }
}

/// Canned provider for tests: a fixed function of the text.
pub struct FnProvider<F>(pub F);

impl<F> EmbeddingProvider for FnProvider<F>
where
    F: Fn(&str) -> Result<Vec<f32>, ProviderError> + Send + Sync,
{
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        texts.iter().map(|t| (self.0)(t)).collect()
    }
}

/// HTTP embedding service client. POSTs `{"texts": [...]}` to the endpoint
/// and expects `{"vectors": [[...], ...]}` back.
pub struct HttpEmbeddingClient {
    endpoint: String,
    auth_token: Option<String>,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct EmbedRequestBody<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponseBody {
    vectors: Vec<Vec<f32>>,
}

impl HttpEmbeddingClient {
    pub fn new(endpoint: impl Into<String>, auth_token: Option<String>, timeout: Duration) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("client builds");
        Self {
            endpoint: endpoint.into(),
            auth_token,
            client,
        }
    }
}

impl EmbeddingProvider for HttpEmbeddingClient {
    fn embed_batch(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequestBody { texts });
        if let Some(token) = &self.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(ProviderError::Transport(format!(
                "status {}",
                resp.status()
            )));
        }
        let body: EmbedResponseBody = resp
            .json()
            .map_err(|e| ProviderError::BadResponse(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(ProviderError::BadResponse(format!(
                "{} vectors for {} texts",
                body.vectors.len(),
                texts.len()
            )));
        }
        Ok(body.vectors)
    }
}

/// Options for [`fetch_embeddings`].
#[derive(Debug, Clone)]
pub struct FetchOptions {
    /// Texts are cut to this many tokens before the request.
    pub truncate_at: usize,
    pub batch_size: usize,
    /// Bounded number of batches in flight at once.
    pub concurrency: usize,
    pub max_attempts: u32,
    pub retry_base_delay: Duration,
}

impl Default for FetchOptions {
    fn default() -> Self {
        Self {
            truncate_at: 512,
            batch_size: 32,
            concurrency: 4,
            max_attempts: 3,
            retry_base_delay: Duration::from_millis(200),
        }
    }
}

/// One id the provider failed to embed, with the final error.
#[derive(Debug, Clone, Serialize)]
pub struct FetchFailure {
    pub id: String,
    pub error: String,
}

/// Result of a fetch: the (possibly partial) set plus failures by id.
pub struct FetchOutcome {
    pub set: EmbeddingSet,
    pub missing: Vec<FetchFailure>,
}

/// Embeds `(id, text)` pairs through a provider: truncates each text to
/// `truncate_at` tokens, issues batched requests with bounded concurrency and
/// retries, and normalizes the returned vectors. Transport failures leave a
/// partial set plus an error report listing the missing ids.
pub fn fetch_embeddings(
    provider: &dyn EmbeddingProvider,
    texts: &[(String, String)],
    tokenizer: &dyn Tokenizer,
    opts: &FetchOptions,
) -> Result<FetchOutcome, EmbedError> {
    let truncated: Vec<(usize, Vec<String>)> = texts
        .chunks(opts.batch_size.max(1))
        .enumerate()
        .map(|(i, batch)| {
            let body: Vec<String> = batch
                .iter()
                .map(|(_, text)| tokenizer.truncate(text, opts.truncate_at).to_string())
                .collect();
            (i, body)
        })
        .collect();

    let n_batches = truncated.len();
    let results: Mutex<Vec<Option<Result<Vec<Vec<f32>>, ProviderError>>>> =
        Mutex::new((0..n_batches).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = opts.concurrency.clamp(1, n_batches.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_batches {
                    break;
                }
                let batch = &truncated[i].1;
                let mut attempt = 0;
                let outcome = loop {
                    attempt += 1;
                    match provider.embed_batch(batch) {
                        Ok(v) => break Ok(v),
                        Err(e) if attempt >= opts.max_attempts.max(1) => break Err(e),
                        Err(_) => {
                            let backoff = opts.retry_base_delay * 2u32.pow(attempt - 1);
                            std::thread::sleep(backoff);
                        }
                    }
                };
                results.lock().expect("no poisoned lock")[i] = Some(outcome);
            });
        }
    });

    let mut set = EmbeddingSet::new();
    let mut missing = Vec::new();
    let results = results.into_inner().expect("no poisoned lock");
    for (batch_idx, outcome) in results.into_iter().enumerate() {
        let batch = &texts[batch_idx * opts.batch_size.max(1)..]
            [..truncated[batch_idx].1.len()];
        match outcome.expect("all batches processed") {
            Ok(vectors) => {
                for ((id, _), vector) in batch.iter().zip(vectors) {
                    set.insert(id.clone(), vector)?;
                }
            }
            Err(e) => {
                for (id, _) in batch {
                    missing.push(FetchFailure {
                        id: id.clone(),
                        error: e.to_string(),
                    });
                }
            }
        }
    }
    Ok(FetchOutcome { set, missing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::WhitespaceTokenizer;
    use std::sync::atomic::AtomicU32;

    #[test]
    fn insert_normalizes_to_unit() {
        let mut set = EmbeddingSet::new();
        set.insert("a", vec![3.0, 4.0]).unwrap();
        let v = set.pooled("a").unwrap();
        assert!((v[0] - 0.6).abs() < 1e-7);
        assert!((v[1] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn insert_rejects_zero_vector() {
        let mut set = EmbeddingSet::new();
        let err = set.insert("z", vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, EmbedError::ZeroVector { .. }));
    }

    #[test]
    fn dimension_mismatch_names_offending_id() {
        let mut set = EmbeddingSet::new();
        set.insert("first", vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let err = set.insert("second", vec![1.0; 8]).unwrap_err();
        match err {
            EmbedError::DimensionMismatch { id, expected, got } => {
                assert_eq!(id, "second");
                assert_eq!(expected, 4);
                assert_eq!(got, 8);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn pool_tokens_mean_then_normalize() {
        let matrix = TokenMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let pooled = pool_tokens(&matrix).unwrap();
        let inv_sqrt2 = 1.0 / 2.0f32.sqrt();
        assert!((pooled[0] - inv_sqrt2).abs() < 1e-7);
        assert!((pooled[1] - inv_sqrt2).abs() < 1e-7);
    }

    #[test]
    fn pool_tokens_single_row_identity() {
        let matrix = TokenMatrix::from_rows(vec![vec![0.6, 0.8]]).unwrap();
        assert_eq!(pool_tokens(&matrix).unwrap(), vec![0.6, 0.8]);
    }

    #[test]
    fn pool_tokens_duplicate_rows_idempotent() {
        let v = vec![0.6, 0.8];
        let matrix = TokenMatrix::from_rows(vec![v.clone(), v.clone()]).unwrap();
        let pooled = pool_tokens(&matrix).unwrap();
        assert!((pooled[0] - 0.6).abs() < 1e-7);
        assert!((pooled[1] - 0.8).abs() < 1e-7);
    }

    #[test]
    fn text_format_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.jsonl");
        let mut set = EmbeddingSet::new();
        set.insert("a", vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        set.insert("b", vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        save_text(&set, &path).unwrap();
        let back = load_text(&path).unwrap();
        assert_eq!(back.dim(), 4);
        assert_eq!(back.ids(), set.ids());
        assert_eq!(back.pooled("a"), set.pooled("a"));
    }

    #[test]
    fn binary_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.bin");
        let mut set = EmbeddingSet::new();
        set.insert("ctx:0", vec![0.3, -0.2, 0.9]).unwrap();
        set.insert("ctx:1", vec![-0.5, 0.5, 0.1]).unwrap();
        save_binary(&set, &path).unwrap();
        let back = load_binary(&path).unwrap();
        assert_eq!(back.ids(), set.ids());
        for id in set.ids() {
            let a: Vec<u32> = set.pooled(id).unwrap().iter().map(|f| f.to_bits()).collect();
            let b: Vec<u32> = back.pooled(id).unwrap().iter().map(|f| f.to_bits()).collect();
            assert_eq!(a, b, "bit mismatch for {id}");
        }
        // Saving the loaded set reproduces the file exactly.
        let path2 = dir.path().join("emb2.bin");
        save_binary(&back, &path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn load_binary_rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        std::fs::write(&path, b"NOPE\x00\x00\x00\x00").unwrap();
        assert!(matches!(
            load_binary(&path),
            Err(EmbedError::Format { .. })
        ));
    }

    #[test]
    fn token_matrix_round_trips_in_text_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tok.jsonl");
        let mut set = EmbeddingSet::new();
        let m = TokenMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        set.insert_with_tokens("q1", None, m.clone()).unwrap();
        save_text(&set, &path).unwrap();
        let back = load_text(&path).unwrap();
        assert_eq!(back.tokens("q1").unwrap(), &m);
    }

    #[test]
    fn fetch_truncates_to_limit() {
        let seen = Mutex::new(Vec::new());
        let provider = FnProvider(|text: &str| {
            seen.lock().unwrap().push(text.to_string());
            Ok(vec![1.0, 0.0])
        });
        let long_text = vec!["tok"; 600].join(" ");
        let texts = vec![("long".to_string(), long_text)];
        let outcome = fetch_embeddings(
            &provider,
            &texts,
            &WhitespaceTokenizer,
            &FetchOptions::default(),
        )
        .unwrap();
        assert!(outcome.missing.is_empty());
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 1);
        assert_eq!(seen[0].split_whitespace().count(), 512);
    }

    #[test]
    fn fetch_empty_input() {
        let provider = RandomProvider { seed: 1, dim: 4 };
        let outcome =
            fetch_embeddings(&provider, &[], &WhitespaceTokenizer, &FetchOptions::default())
                .unwrap();
        assert!(outcome.set.is_empty());
        assert!(outcome.missing.is_empty());
    }

    #[test]
    fn fetch_reports_missing_ids_on_failure() {
        let provider = FnProvider(|_: &str| {
            Err(ProviderError::Transport("down".into()))
        });
        let texts = vec![("a".to_string(), "x".to_string())];
        let opts = FetchOptions {
            max_attempts: 2,
            retry_base_delay: Duration::ZERO,
            ..FetchOptions::default()
        };
        let outcome =
            fetch_embeddings(&provider, &texts, &WhitespaceTokenizer, &opts).unwrap();
        assert!(outcome.set.is_empty());
        assert_eq!(outcome.missing.len(), 1);
        assert_eq!(outcome.missing[0].id, "a");
    }

    #[test]
    fn fetch_retries_until_success() {
        let calls = AtomicU32::new(0);
        let provider = FnProvider(|_: &str| {
            if calls.fetch_add(1, Ordering::SeqCst) == 0 {
                Err(ProviderError::Transport("flaky".into()))
            } else {
                Ok(vec![0.0, 1.0])
            }
        });
        let texts = vec![("a".to_string(), "x".to_string())];
        let opts = FetchOptions {
            max_attempts: 3,
            retry_base_delay: Duration::ZERO,
            batch_size: 1,
            ..FetchOptions::default()
        };
        let outcome =
            fetch_embeddings(&provider, &texts, &WhitespaceTokenizer, &opts).unwrap();
        assert!(outcome.missing.is_empty());
        assert_eq!(outcome.set.len(), 1);
    }

    #[test]
    fn random_provider_is_deterministic_by_text() {
        let provider = RandomProvider { seed: 7, dim: 8 };
        let texts = vec!["alpha".to_string(), "beta".to_string(), "alpha".to_string()];
        let a = provider.embed_batch(&texts).unwrap();
        let b = provider.embed_batch(&texts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0], a[2]);
        assert_ne!(a[0], a[1]);
    }
}
