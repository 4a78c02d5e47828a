//! Pluggable tokenization.
//!
//! The default token is a maximal run of non-whitespace characters. Token
//! counts drive the chunk budget and request truncation; a subword tokenizer
//! can be substituted by implementing [`Tokenizer`].

/// Counts tokens and locates token boundaries in text.
pub trait Tokenizer: Send + Sync {
    /// Byte spans `(start, end)` of each token, in order.
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)>;

    /// Number of tokens in `text`.
    fn count(&self, text: &str) -> usize {
        self.token_spans(text).len()
    }

    /// Truncates `text` to its first `max_tokens` tokens, preserving the
    /// original bytes up to the end of the last kept token.
    fn truncate<'a>(&self, text: &'a str, max_tokens: usize) -> &'a str {
        let spans = self.token_spans(text);
        if spans.len() <= max_tokens {
            return text;
        }
        if max_tokens == 0 {
            return "";
        }
        &text[..spans[max_tokens - 1].1]
    }
}

/// Whitespace tokenizer: a token is a maximal run of non-whitespace.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn token_spans(&self, text: &str) -> Vec<(usize, usize)> {
        let mut spans = Vec::new();
        let mut start = None;
        for (i, ch) in text.char_indices() {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    spans.push((s, i));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            spans.push((s, text.len()));
        }
        spans
    }

    fn count(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}
