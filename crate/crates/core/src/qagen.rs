//! Synthetic question/answer generation: prompt construction, a transport
//! abstraction over the text-generation service (HTTP or canned directory
//! mock), tolerant response parsing, and the per-chunk generation driver.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Chunk;

/// The six question types plus a catch-all for untyped training pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuestionType {
    Inference,
    ClosedEnded,
    Comparison,
    Process,
    Divergent,
    Evaluation,
    Unspecified,
}

impl QuestionType {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_lowercase().replace('_', "-").as_str() {
            "inference" => Self::Inference,
            "closed-ended" | "closedended" | "closed" => Self::ClosedEnded,
            "comparison" => Self::Comparison,
            "process" => Self::Process,
            "divergent" => Self::Divergent,
            "evaluation" => Self::Evaluation,
            _ => Self::Unspecified,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Inference => "inference",
            Self::ClosedEnded => "closed-ended",
            Self::Comparison => "comparison",
            Self::Process => "process",
            Self::Divergent => "divergent",
            Self::Evaluation => "evaluation",
            Self::Unspecified => "unspecified",
        }
    }
}

/// A synthetic question/answer bound to the chunk it was generated from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub qid: String,
    pub question: String,
    pub answer: String,
    pub gold_chunk_id: String,
    pub qtype: QuestionType,
}

const TRAINING_PROMPT_PREFIX: &str = "You are an expert AI assisting in creating a high-quality, \
diverse synthetic dataset to train information retrieval models. Analyze the following document \
chunk and generate potential queries along with their corresponding answers based on the \
information present. If the context does not contain sufficient information, return empty lists.";

/// Builds the per-chunk training prompt. Byte-stable for identical input.
pub fn build_training_prompt(chunk: &Chunk) -> String {
    format!("{TRAINING_PROMPT_PREFIX}\n\nContext: {}", chunk.text)
}

const BENCHMARK_PROMPT_PREFIX: &str = "You are an advanced AI system with expertise in natural \
language processing and question generation. Your task is to assist in creating a high-quality, \
diverse synthetic dataset for training information retrieval models.

Given the entire report below, perform the following steps:

1. Carefully read and analyze the report to understand its content, main ideas, and key details.
2. Generate thought-provoking questions based on the content of the report, along with their \
corresponding contexts. For each pair:
   - Select a relevant context from the report that is 3-4 lines long and provides a \
comprehensive picture to answer the question without requiring external knowledge.
   - Generate a question that is directly relevant to the selected context.
   - The question should cover one of the following types:
     - Closed-ended: Questions that can be answered with a simple 'yes' or 'no' based on the \
information provided in the context.
     - Comparison: Questions that require comparing and contrasting information from the \
context, involving similarities, differences, or temporal changes.
     - Divergent: Open-ended questions that require using information from the context to \
extrapolate, infer, or explore possibilities.
     - Evaluation: Questions that ask for an assessment or judgment based on the information \
in the context.
     - Inference: Questions that require reading between the lines and drawing conclusions \
based on the information provided.
     - Process: Questions that ask about how something works or the steps involved in a \
process described in the context.
   - Ensure that each question is concise, clear, and grammatically correct.
   - Confirm that the selected context contains all the necessary details to answer the \
generated question. The answer should be directly derivable from the given context without \
requiring external knowledge.
3. Provide the generated question-context pairs.

Remember: The goal is to create a diverse set of challenging questions that effectively test \
the model's ability to retrieve and understand relevant information from the given report. \
Maintain high-quality standards throughout the dataset generation process.";

/// Builds the whole-report benchmark prompt covering all six question types.
pub fn build_benchmark_prompt(report_text: &str) -> String {
    format!("{BENCHMARK_PROMPT_PREFIX}\n\nReport: {report_text}")
}

/// A request to the generation service, with its retry budget and per-request
/// timeout.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub prompt: String,
    pub max_attempts: u32,
    pub timeout_ms: u64,
}

impl GenerationRequest {
    pub fn new(prompt: impl Into<String>) -> Self {
        Self {
            prompt: prompt.into(),
            max_attempts: 3,
            timeout_ms: 30_000,
        }
    }
}

/// Terminal status of one generation request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseStatus {
    Ok,
    Empty,
    TransportError,
    ParseError,
}

/// Raw text returned by the service plus the terminal status.
#[derive(Debug, Clone)]
pub struct GenerationResponse {
    pub raw_text: String,
    pub status: ResponseStatus,
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct TransportError(pub String);

/// Sends one request to a text-generation service and returns the raw output.
pub trait Transport: Send + Sync {
    fn send(&self, request: &GenerationRequest) -> Result<String, TransportError>;
}

/// Transport backed by a closure over the prompt; used for scripted tests.
pub struct FnTransport<F>(pub F);

impl<F> Transport for FnTransport<F>
where
    F: Fn(&str) -> Result<String, TransportError> + Send + Sync,
{
    fn send(&self, request: &GenerationRequest) -> Result<String, TransportError> {
        (self.0)(&request.prompt)
    }
}

/// Stable file-name key for a prompt: first 16 hex chars of its SHA-256.
pub fn prompt_key(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Mock transport that serves canned responses from a directory. A prompt is
/// answered by the file `<prompt_key>.json` when present, else `default.json`.
pub struct MockTransport {
    dir: PathBuf,
}

impl MockTransport {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// The canned-response path this transport would consult for a prompt.
    pub fn response_path(&self, prompt: &str) -> PathBuf {
        self.dir.join(format!("{}.json", prompt_key(prompt)))
    }
}

impl Transport for MockTransport {
    fn send(&self, request: &GenerationRequest) -> Result<String, TransportError> {
        let keyed = self.response_path(&request.prompt);
        let path = if keyed.exists() {
            keyed
        } else {
            let fallback = self.dir.join("default.json");
            if !fallback.exists() {
                return Err(TransportError(format!(
                    "no canned response {} and no default.json in {}",
                    keyed.display(),
                    self.dir.display()
                )));
            }
            fallback
        };
        std::fs::read_to_string(&path)
            .map_err(|e| TransportError(format!("read {}: {e}", path.display())))
    }
}

/// HTTP client for a generation service: POSTs `{prompt, max_output_tokens}`
/// and expects `{"text": "..."}` back.
pub struct HttpGenerationClient {
    endpoint: String,
    auth_token: Option<String>,
    max_output_tokens: u32,
    client: reqwest::blocking::Client,
}

#[derive(Serialize)]
struct GenerateRequestBody<'a> {
    prompt: &'a str,
    max_output_tokens: u32,
}

#[derive(Deserialize)]
struct GenerateResponseBody {
    text: String,
}

impl HttpGenerationClient {
    pub fn new(
        endpoint: impl Into<String>,
        auth_token: Option<String>,
        max_output_tokens: u32,
        timeout: Duration,
    ) -> Self {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .expect("client builds");
        Self {
            endpoint: endpoint.into(),
            auth_token,
            max_output_tokens,
            client,
        }
    }
}

impl Transport for HttpGenerationClient {
    fn send(&self, request: &GenerationRequest) -> Result<String, TransportError> {
        let mut req = self
            .client
            .post(&self.endpoint)
            .timeout(Duration::from_millis(request.timeout_ms))
            .json(&GenerateRequestBody {
                prompt: &request.prompt,
                max_output_tokens: self.max_output_tokens,
            });
        if let Some(token) = &self.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| TransportError(e.to_string()))?;
        if !resp.status().is_success() {
            return Err(TransportError(format!("status {}", resp.status())));
        }
        let body: GenerateResponseBody =
            resp.json().map_err(|e| TransportError(e.to_string()))?;
        Ok(body.text)
    }
}

/// Retry policy for generation requests: exponential backoff.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub timeout_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: Duration::from_millis(200),
            timeout_ms: 30_000,
        }
    }
}

/// Sends a request through the transport with exponentially backed-off
/// retries; transport failure after the attempt budget is reported in the
/// response status, never a panic.
pub fn execute(
    transport: &dyn Transport,
    request: &GenerationRequest,
    base_delay: Duration,
) -> GenerationResponse {
    let attempts = request.max_attempts.max(1);
    let mut last_error = String::new();
    for attempt in 0..attempts {
        match transport.send(request) {
            Ok(raw_text) => {
                let status = if raw_text.trim().is_empty() {
                    ResponseStatus::Empty
                } else {
                    ResponseStatus::Ok
                };
                return GenerationResponse { raw_text, status };
            }
            Err(e) => {
                last_error = e.0;
                if attempt + 1 < attempts {
                    std::thread::sleep(base_delay * 2u32.pow(attempt));
                }
            }
        }
    }
    GenerationResponse {
        raw_text: last_error,
        status: ResponseStatus::TransportError,
    }
}

/// Parse failure for a non-empty response with no extractable pair.
#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("no structured question/answer payload found")]
    NotStructured,
    #[error("structured payload contained no valid question/answer pair")]
    NoValidPairs,
}

/// A question/answer extracted from raw model output.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPair {
    pub question: String,
    pub answer: String,
    pub qtype: Option<QuestionType>,
}

fn strip_code_fences(text: &str) -> &str {
    let trimmed = text.trim();
    let Some(rest) = trimmed.strip_prefix("```") else {
        return trimmed;
    };
    // Drop the fence line (possibly "```json") and the closing fence.
    let rest = match rest.find('\n') {
        Some(i) => &rest[i + 1..],
        None => rest,
    };
    rest.trim_end().trim_end_matches("```").trim()
}

fn find_json_payload(text: &str) -> Option<serde_json::Value> {
    if let Ok(v) = serde_json::from_str(text) {
        return Some(v);
    }
    // Tolerate leading/trailing prose around a JSON array or object.
    for (open, close) in [('[', ']'), ('{', '}')] {
        if let (Some(start), Some(end)) = (text.find(open), text.rfind(close)) {
            if start < end {
                if let Ok(v) = serde_json::from_str(&text[start..=end]) {
                    return Some(v);
                }
            }
        }
    }
    None
}

fn string_field(obj: &serde_json::Map<String, serde_json::Value>, keys: &[&str]) -> Option<String> {
    for key in keys {
        for (k, v) in obj {
            if k.eq_ignore_ascii_case(key) {
                if let Some(s) = v.as_str() {
                    return Some(s.trim().to_string());
                }
            }
        }
    }
    None
}

fn pair_from_value(value: &serde_json::Value) -> Option<ParsedPair> {
    let obj = value.as_object()?;
    let question = string_field(obj, &["question", "query", "q"])?;
    let answer = string_field(obj, &["answer", "response", "a"])?;
    if question.is_empty() || answer.is_empty() {
        return None;
    }
    let qtype = string_field(obj, &["type", "qtype", "question_type"])
        .map(|s| QuestionType::parse(&s));
    Some(ParsedPair {
        question,
        answer,
        qtype,
    })
}

/// Extracts question/answer pairs from raw model output. Tolerates code
/// fences and surrounding prose; an explicit empty list parses to no pairs;
/// non-empty text with nothing extractable is a parse error. Never invents
/// content: pairs with empty question or answer are dropped.
pub fn parse_response(raw_text: &str) -> Result<Vec<ParsedPair>, ParseError> {
    let body = strip_code_fences(raw_text);
    if body.is_empty() {
        return Ok(Vec::new());
    }
    let value = find_json_payload(body).ok_or(ParseError::NotStructured)?;
    let items: Vec<serde_json::Value> = match value {
        serde_json::Value::Array(items) => items,
        serde_json::Value::Object(obj) => {
            let nested = ["pairs", "questions", "qa_pairs", "data", "items"]
                .iter()
                .find_map(|k| obj.get(*k).and_then(|v| v.as_array()).cloned());
            match nested {
                Some(items) => items,
                // A bare {question, answer} object is a single pair.
                None => vec![serde_json::Value::Object(obj)],
            }
        }
        _ => return Err(ParseError::NotStructured),
    };
    if items.is_empty() {
        return Ok(Vec::new());
    }
    let pairs: Vec<ParsedPair> = items.iter().filter_map(pair_from_value).collect();
    if pairs.is_empty() {
        return Err(ParseError::NoValidPairs);
    }
    Ok(pairs)
}

/// Options for [`generate_pairs`].
#[derive(Debug, Clone)]
pub struct GenerateOptions {
    pub retry: RetryPolicy,
    /// Bounded number of requests in flight.
    pub concurrency: usize,
    /// Drop exact duplicate (question, answer) pairs, keeping the first.
    pub dedup_exact: bool,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        Self {
            retry: RetryPolicy::default(),
            concurrency: 4,
            dedup_exact: false,
        }
    }
}

/// A chunk whose generation request terminally failed; not fatal to the run.
#[derive(Debug, Clone, Serialize)]
pub struct GenFailure {
    pub chunk_id: String,
    pub status: ResponseStatus,
    pub message: String,
}

/// Outcome of a generation run over a chunk list.
#[derive(Debug)]
pub struct GenerationRun {
    pub pairs: Vec<QAPair>,
    pub failures: Vec<GenFailure>,
}

impl GenerationRun {
    /// Dataset statistics for the run report.
    pub fn stats(&self, n_chunks: usize) -> GenerationStats {
        let mut per_type = BTreeMap::new();
        for pair in &self.pairs {
            *per_type.entry(pair.qtype.as_str().to_string()).or_insert(0usize) += 1;
        }
        GenerationStats {
            n_chunks,
            n_pairs: self.pairs.len(),
            n_failures: self.failures.len(),
            pairs_per_type: per_type,
        }
    }
}

/// Summary counts written alongside the generated pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationStats {
    pub n_chunks: usize,
    pub n_pairs: usize,
    pub n_failures: usize,
    pub pairs_per_type: BTreeMap<String, usize>,
}

/// Generates QA pairs for every chunk through the transport. Each pair's
/// `gold_chunk_id` is the chunk that produced it; per-chunk failures are
/// recorded, not fatal. Deterministic given a deterministic transport.
pub fn generate_pairs(
    chunks: &[Chunk],
    transport: &dyn Transport,
    opts: &GenerateOptions,
) -> GenerationRun {
    let n = chunks.len();
    let results: Mutex<Vec<Option<GenerationResponse>>> =
        Mutex::new((0..n).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let workers = opts.concurrency.clamp(1, n.max(1));

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let request = GenerationRequest {
                    prompt: build_training_prompt(&chunks[i]),
                    max_attempts: opts.retry.max_attempts,
                    timeout_ms: opts.retry.timeout_ms,
                };
                let response = execute(transport, &request, opts.retry.base_delay);
                results.lock().expect("no poisoned lock")[i] = Some(response);
            });
        }
    });

    let mut pairs = Vec::new();
    let mut failures = Vec::new();
    let responses = results.into_inner().expect("no poisoned lock");
    for (chunk, response) in chunks.iter().zip(responses) {
        let response = response.expect("all chunks processed");
        match response.status {
            ResponseStatus::TransportError => failures.push(GenFailure {
                chunk_id: chunk.chunk_id.clone(),
                status: ResponseStatus::TransportError,
                message: response.raw_text,
            }),
            ResponseStatus::Empty => {}
            _ => match parse_response(&response.raw_text) {
                Ok(parsed) => {
                    for (j, p) in parsed.into_iter().enumerate() {
                        pairs.push(QAPair {
                            qid: format!("{}-q{j}", chunk.chunk_id),
                            question: p.question,
                            answer: p.answer,
                            gold_chunk_id: chunk.chunk_id.clone(),
                            qtype: p.qtype.unwrap_or(QuestionType::Unspecified),
                        });
                    }
                }
                Err(e) => failures.push(GenFailure {
                    chunk_id: chunk.chunk_id.clone(),
                    status: ResponseStatus::ParseError,
                    message: e.to_string(),
                }),
            },
        }
    }

    if opts.dedup_exact {
        let mut seen = std::collections::HashSet::new();
        pairs.retain(|p| seen.insert((p.question.clone(), p.answer.clone())));
    }

    GenerationRun { pairs, failures }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(id: &str, text: &str) -> Chunk {
        Chunk {
            chunk_id: id.to_string(),
            doc_id: "d".to_string(),
            seq: 0,
            text: text.to_string(),
            n_tokens: text.split_whitespace().count(),
        }
    }

    #[test]
    fn training_prompt_substitutes_context() {
        let prompt = build_training_prompt(&chunk("c", "X"));
        assert!(prompt.contains("Context: X"));
        assert!(prompt.contains("return empty lists"));
    }

    #[test]
    fn training_prompt_is_deterministic() {
        let a = build_training_prompt(&chunk("c", "same text"));
        let b = build_training_prompt(&chunk("c", "same text"));
        assert_eq!(a, b);
    }

    #[test]
    fn training_prompt_preserves_newlines() {
        let prompt = build_training_prompt(&chunk("c", "line one\nline two"));
        assert!(prompt.contains("Context: line one\nline two"));
    }

    #[test]
    fn benchmark_prompt_lists_all_six_types() {
        let prompt = build_benchmark_prompt("the report");
        for label in [
            "Closed-ended:",
            "Comparison:",
            "Divergent:",
            "Evaluation:",
            "Inference:",
            "Process:",
        ] {
            assert!(prompt.contains(label), "missing {label}");
        }
        assert!(prompt.contains("Report: the report"));
        assert!(prompt.contains("Generate thought-provoking questions"));
    }

    #[test]
    fn parse_structured_pairs_in_order() {
        let raw = r#"[
            {"question": "Q1?", "answer": "A1", "type": "inference"},
            {"question": "Q2?", "answer": "A2"}
        ]"#;
        let pairs = parse_response(raw).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].question, "Q1?");
        assert_eq!(pairs[0].qtype, Some(QuestionType::Inference));
        assert_eq!(pairs[1].answer, "A2");
        assert_eq!(pairs[1].qtype, None);
    }

    #[test]
    fn parse_declared_empty_list() {
        assert!(parse_response("[]").unwrap().is_empty());
        assert!(parse_response("").unwrap().is_empty());
    }

    #[test]
    fn parse_garbage_is_error() {
        assert!(matches!(
            parse_response("garbage"),
            Err(ParseError::NotStructured)
        ));
    }

    #[test]
    fn parse_tolerates_code_fence_and_prose() {
        let raw = "Here you go:\n```json\n[{\"question\":\"Q?\",\"answer\":\"A\"}]\n```";
        // The fence strip handles a leading fence; prose before JSON is
        // handled by bracket scanning.
        let pairs = parse_response(raw).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn parse_skips_pairs_with_empty_fields() {
        let raw = r#"[{"question": "", "answer": "A"}, {"question": "Q?", "answer": "B"}]"#;
        let pairs = parse_response(raw).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].answer, "B");
    }

    #[test]
    fn parse_object_with_nested_array() {
        let raw = r#"{"pairs": [{"question": "Q?", "answer": "A"}]}"#;
        assert_eq!(parse_response(raw).unwrap().len(), 1);
    }

    #[test]
    fn parse_all_invalid_is_error() {
        let raw = r#"[{"foo": 1}]"#;
        assert!(matches!(
            parse_response(raw),
            Err(ParseError::NoValidPairs)
        ));
    }

    fn no_delay() -> GenerateOptions {
        GenerateOptions {
            retry: RetryPolicy {
                max_attempts: 2,
                base_delay: Duration::ZERO,
                timeout_ms: 1_000,
            },
            concurrency: 2,
            dedup_exact: false,
        }
    }

    #[test]
    fn generate_two_pairs_per_chunk() {
        let transport = FnTransport(|_: &str| {
            Ok(r#"[{"question":"Q1?","answer":"A1"},{"question":"Q2?","answer":"A2"}]"#.to_string())
        });
        let chunks = vec![chunk("c0", "t0"), chunk("c1", "t1"), chunk("c2", "t2")];
        let run = generate_pairs(&chunks, &transport, &no_delay());
        assert_eq!(run.pairs.len(), 6);
        assert!(run.failures.is_empty());
        for pair in &run.pairs {
            assert!(["c0", "c1", "c2"].contains(&pair.gold_chunk_id.as_str()));
        }
        assert_eq!(run.pairs[0].qid, "c0-q0");
    }

    #[test]
    fn generate_empty_responses_not_errors() {
        let transport = FnTransport(|_: &str| Ok("[]".to_string()));
        let chunks = vec![chunk("c0", "t0"), chunk("c1", "t1")];
        let run = generate_pairs(&chunks, &transport, &no_delay());
        assert!(run.pairs.is_empty());
        assert!(run.failures.is_empty());
    }

    #[test]
    fn generate_retries_then_succeeds() {
        let failed_once = Mutex::new(false);
        let transport = FnTransport(|_: &str| {
            let mut f = failed_once.lock().unwrap();
            if *f {
                Ok(r#"[{"question":"Q?","answer":"A"}]"#.to_string())
            } else {
                *f = true;
                Err(TransportError("flaky".into()))
            }
        });
        let chunks = vec![chunk("c0", "t0")];
        let run = generate_pairs(&chunks, &transport, &no_delay());
        assert_eq!(run.pairs.len(), 1);
        assert!(run.failures.is_empty());
    }

    #[test]
    fn generate_records_terminal_transport_failure() {
        let transport = FnTransport(|_: &str| Err(TransportError("down".into())));
        let chunks = vec![chunk("c0", "t0")];
        let run = generate_pairs(&chunks, &transport, &no_delay());
        assert!(run.pairs.is_empty());
        assert_eq!(run.failures.len(), 1);
        assert_eq!(run.failures[0].status, ResponseStatus::TransportError);
    }

    #[test]
    fn mock_transport_serves_keyed_then_default() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockTransport::new(dir.path());
        let prompt = "some prompt";
        std::fs::write(mock.response_path(prompt), "[{\"question\":\"K?\",\"answer\":\"V\"}]")
            .unwrap();
        std::fs::write(dir.path().join("default.json"), "[]").unwrap();
        let keyed = mock.send(&GenerationRequest::new(prompt)).unwrap();
        assert!(keyed.contains("K?"));
        let fallback = mock.send(&GenerationRequest::new("other prompt")).unwrap();
        assert_eq!(fallback, "[]");
    }

    #[test]
    fn mock_transport_errors_without_files() {
        let dir = tempfile::tempdir().unwrap();
        let mock = MockTransport::new(dir.path());
        assert!(mock.send(&GenerationRequest::new("anything")).is_err());
    }

    #[test]
    fn dedup_drops_exact_duplicates() {
        let transport =
            FnTransport(|_: &str| Ok(r#"[{"question":"Q?","answer":"A"}]"#.to_string()));
        let chunks = vec![chunk("c0", "t0"), chunk("c1", "t1")];
        let mut opts = no_delay();
        opts.dedup_exact = true;
        let run = generate_pairs(&chunks, &transport, &opts);
        assert_eq!(run.pairs.len(), 1);
    }

    #[test]
    fn qtype_round_trips_kebab_case() {
        let json = serde_json::to_string(&QuestionType::ClosedEnded).unwrap();
        assert_eq!(json, "\"closed-ended\"");
        let back: QuestionType = serde_json::from_str(&json).unwrap();
        assert_eq!(back, QuestionType::ClosedEnded);
    }
}
