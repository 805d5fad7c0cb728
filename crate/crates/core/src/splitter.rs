//! Rule-based sentence segmentation for response text.
//!
//! A response is first cut into blocks at paragraph breaks (a blank line) and
//! at the start of every list item line. Inside each block a boundary falls
//! after `.`, `!` or `?` (plus any closing quotes or brackets) when it is
//! followed by whitespace and then an uppercase letter, a digit or an opening
//! quote. Periods that close a known abbreviation, a dotted acronym, an
//! initial, or a leading enumerator such as `2.` are not boundaries.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("response contains no non-whitespace characters")]
    EmptyResponse,
}

/// One sentence of a response, addressed by its byte range in the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceSpan {
    pub index: usize,
    pub text: String,
    pub byte_range: Range<usize>,
}

/// Anything that can cut a response into sentences.
pub trait Segmenter: Send + Sync {
    fn split(&self, response: &str) -> Result<Vec<SentenceSpan>, SplitError>;
}

/// Words that end with a period without ending the sentence. Compared
/// case-insensitively against the token before the period.
const ABBREVIATIONS: &[&str] = &[
    // honorifics and titles
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "rev", "hon", "gen", "capt", "lt", "col", "sgt", "messrs", "mme",
    // latin and references
    "e.g", "i.e", "cf", "viz", "vs", "approx", "fig", "figs", "vol", "vols", "sec", "ch", "eq", "pp", "p", "ed", "dept",
    "est", // months
    "jan", "feb", "mar", "apr", "jun", "jul", "aug", "sep", "sept", "oct", "nov", "dec",
];

/// Abbreviations that only bind to a following number ("No. 5", "Nos. 3").
const NUMERIC_ABBREVIATIONS: &[&str] = &["no", "nos", "art", "para"];

/// Clock suffixes that look like dotted acronyms but routinely end sentences.
const CLOCK_SUFFIXES: &[&str] = &["a.m", "p.m"];

const CLOSERS: &[char] = &['"', '\'', ')', ']', '\u{201D}', '\u{2019}'];
const OPEN_QUOTES: &[char] = &['"', '\'', '\u{201C}', '\u{2018}'];

/// The built-in rule-based segmenter.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSegmenter;

impl Segmenter for RuleSegmenter {
    fn split(&self, response: &str) -> Result<Vec<SentenceSpan>, SplitError> {
        split_response(response)
    }
}

/// Splits `response` into ordered, non-overlapping sentence spans.
pub fn split_response(response: &str) -> Result<Vec<SentenceSpan>, SplitError> {
    if response.trim().is_empty() {
        return Err(SplitError::EmptyResponse);
    }
    let mut spans = Vec::new();
    for block in blocks(response) {
        for segment in sentences_in(response, block) {
            if let Some(range) = trimmed(response, segment) {
                spans.push(SentenceSpan {
                    index: spans.len(),
                    text: response[range.clone()].to_string(),
                    byte_range: range,
                });
            }
        }
    }
    Ok(spans)
}

fn trimmed(text: &str, range: Range<usize>) -> Option<Range<usize>> {
    let slice = &text[range.clone()];
    let start = range.start + (slice.len() - slice.trim_start().len());
    let end = range.end - (slice.len() - slice.trim_end().len());
    (start < end).then_some(start..end)
}

/// Line-level pass: paragraph breaks and list items start new blocks.
fn blocks(text: &str) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut pos = 0;
    let mut prev_blank = false;
    for line in text.split_inclusive('\n') {
        let line_start = pos;
        pos += line.len();
        let content = line.trim();
        if content.is_empty() {
            prev_blank = true;
            continue;
        }
        if line_start > start && (prev_blank || is_list_item(content)) {
            out.push(start..line_start);
            start = line_start;
        }
        prev_blank = false;
    }
    out.push(start..text.len());
    out
}

fn is_list_item(line: &str) -> bool {
    let mut chars = line.chars();
    match chars.next() {
        Some('-' | '*' | '\u{2022}') => matches!(chars.next(), None | Some(' ' | '\t')),
        Some(c) if c.is_ascii_digit() => {
            let digits = line.bytes().take_while(u8::is_ascii_digit).count();
            let rest = &line[digits..];
            let mut rest = rest.chars();
            matches!(rest.next(), Some('.' | ')')) && matches!(rest.next(), None | Some(' ' | '\t'))
        }
        _ => false,
    }
}

/// Sentence-level pass over one block. Returned ranges are untrimmed.
fn sentences_in(text: &str, block: Range<usize>) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut seg_start = block.start;
    let bytes = text.as_bytes();
    let mut i = block.start;
    while i < block.end {
        let b = bytes[i];
        if !matches!(b, b'.' | b'!' | b'?') {
            i += 1;
            continue;
        }
        // Run of terminators ("?!", "...") then closing quotes or brackets.
        let term_start = i;
        let mut j = i;
        while j < block.end && matches!(bytes[j], b'.' | b'!' | b'?') {
            j += 1;
        }
        let mut after = j;
        while let Some(c) = text[after..block.end].chars().next() {
            if CLOSERS.contains(&c) {
                after += c.len_utf8();
            } else {
                break;
            }
        }
        let rest = &text[after..block.end];
        let ws_len = rest.len() - rest.trim_start().len();
        if ws_len == 0 {
            i = after.max(i + 1);
            continue;
        }
        let next = rest[ws_len..].chars().next();
        let opens = matches!(next, Some(c) if c.is_uppercase() || c.is_ascii_digit() || OPEN_QUOTES.contains(&c));
        let single_period = j - term_start == 1 && bytes[term_start] == b'.';
        let suppressed = single_period && period_is_not_boundary(&text[seg_start..term_start], next);
        if opens && !suppressed {
            out.push(seg_start..after);
            seg_start = after;
        }
        i = after;
    }
    out.push(seg_start..block.end);
    out
}

/// Decides whether a single `.` closes a non-terminal token. `before` is the
/// current segment text up to (not including) the period.
fn period_is_not_boundary(before: &str, next: Option<char>) -> bool {
    let token_start = before
        .rfind(|c: char| c.is_whitespace() || c == '(' || OPEN_QUOTES.contains(&c))
        .map(|p| p + before[p..].chars().next().map_or(1, char::len_utf8))
        .unwrap_or(0);
    let token = &before[token_start..];
    if token.is_empty() {
        return false;
    }
    let lower = token.to_lowercase();
    if CLOCK_SUFFIXES.contains(&lower.as_str()) {
        return false;
    }
    if ABBREVIATIONS.contains(&lower.as_str()) {
        return true;
    }
    if NUMERIC_ABBREVIATIONS.contains(&lower.as_str()) {
        return matches!(next, Some(c) if c.is_ascii_digit());
    }
    // Initials ("J. Smith") and dotted acronyms ("U.S.", "e.g.").
    let mut parts = token.split('.');
    if parts.all(|p| p.chars().count() == 1 && p.chars().all(char::is_alphabetic)) {
        return true;
    }
    // A leading enumerator ("2. Bring your badge.").
    before[..token_start].trim().is_empty() && token.bytes().all(|b| b.is_ascii_digit())
}
