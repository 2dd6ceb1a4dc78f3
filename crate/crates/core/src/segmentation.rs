//! Review preprocessing: thinking-trace extraction, sentence segmentation and
//! the format reward.

use std::sync::OnceLock;

use thiserror::Error;

use crate::model::Review;

const THINK_OPEN: &str = "<think>";
const THINK_CLOSE: &str = "</think>";

/// The protected abbreviation list shipped with the crate.
pub const ABBREVIATIONS_RESOURCE: &str = include_str!("../resources/abbreviations.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SegmentationError {
    #[error("`<think>` at byte {0} has no matching `</think>`")]
    MalformedTrace(usize),
}

/// Splits a leading `<think>…</think>` block off `raw`.
///
/// Only a block that opens the text (after leading whitespace) counts as a
/// trace. Anything after the first closing tag, including further think
/// blocks, stays in the body verbatim.
pub fn extract_thinking(raw: &str) -> Result<(Option<String>, String), SegmentationError> {
    let lead = raw.len() - raw.trim_start().len();
    let rest = &raw[lead..];
    if let Some(inner) = rest.strip_prefix(THINK_OPEN) {
        return match inner.find(THINK_CLOSE) {
            Some(close) => Ok((
                Some(inner[..close].to_string()),
                inner[close + THINK_CLOSE.len()..].to_string(),
            )),
            None => Err(SegmentationError::MalformedTrace(lead)),
        };
    }
    if let Some(open) = raw.find(THINK_OPEN) {
        if !raw[open..].contains(THINK_CLOSE) {
            return Err(SegmentationError::MalformedTrace(open));
        }
    }
    Ok((None, raw.to_string()))
}

/// Binary format reward: 1.0 iff a nonblank trace precedes a nonblank body.
pub fn format_reward(trace: Option<&str>, body: &str) -> f64 {
    match trace {
        Some(t) if !t.trim().is_empty() && !body.trim().is_empty() => 1.0,
        _ => 0.0,
    }
}

impl Review {
    /// Extracts the trace and segments the body.
    pub fn from_raw(raw: impl Into<String>) -> Result<Self, SegmentationError> {
        let raw = raw.into();
        let (thinking_trace, body) = extract_thinking(&raw)?;
        let sentences = split_sentences(&body);
        Ok(Review {
            raw,
            thinking_trace,
            body,
            sentences,
        })
    }

    /// Like [`Review::from_raw`], but an unclosed `<think>` degrades to "no
    /// trace" instead of failing: the dangling tag is dropped and the rest of
    /// the text is treated as the body.
    pub fn from_raw_lenient(raw: impl Into<String>) -> Self {
        let raw = raw.into();
        match extract_thinking(&raw) {
            Ok((thinking_trace, body)) => {
                let sentences = split_sentences(&body);
                Review {
                    raw,
                    thinking_trace,
                    body,
                    sentences,
                }
            }
            Err(SegmentationError::MalformedTrace(at)) => {
                let body = format!("{}{}", &raw[..at], &raw[at + THINK_OPEN.len()..]);
                let sentences = split_sentences(&body);
                Review {
                    raw,
                    thinking_trace: None,
                    body,
                    sentences,
                }
            }
        }
    }

    pub fn format_reward(&self) -> f64 {
        format_reward(self.thinking_trace.as_deref(), &self.body)
    }
}

/// Parses an abbreviation resource: one entry per line, `#` starts a comment
/// line, blank lines ignored.
pub fn parse_abbreviations(resource: &str) -> Vec<String> {
    resource
        .lines()
        .map(str::trim)
        .filter(|line| !line.is_empty() && !line.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

fn default_abbreviations() -> &'static [String] {
    static LIST: OnceLock<Vec<String>> = OnceLock::new();
    LIST.get_or_init(|| parse_abbreviations(ABBREVIATIONS_RESOURCE))
}

/// Rule-based sentence splitter.
///
/// Boundaries fall after a run of `.`, `!` or `?` (plus closing quotes or
/// brackets) that is followed by end-of-text or by whitespace and an uppercase
/// letter, unless the period ends a protected abbreviation. List items
/// (`-`, `*`, `+`, `•`, `1.`, `1)`, `(1)`) and markdown headings start new
/// segments, headings end at their line break, and blank lines always
/// separate segments. Output fragments are trimmed; blank ones are dropped.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: Vec<String>,
}

impl Default for SentenceSplitter {
    fn default() -> Self {
        SentenceSplitter {
            abbreviations: default_abbreviations().to_vec(),
        }
    }
}

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '\u{201d}' | '\u{2019}')
}

fn is_hspace(c: char) -> bool {
    c.is_whitespace() && c != '\n'
}

/// If a list marker starts at `at`, returns the index just past it.
fn list_marker_end(chars: &[(usize, char)], at: usize) -> Option<usize> {
    let ch = |i: usize| chars.get(i).map(|&(_, c)| c);
    let followed_by_space = |i: usize| ch(i).is_some_and(is_hspace);
    match ch(at)? {
        '-' | '*' | '+' | '\u{2022}' if followed_by_space(at + 1) => Some(at + 1),
        '(' => {
            let mut k = at + 1;
            while ch(k).is_some_and(|c| c.is_ascii_digit()) && k - at <= 3 {
                k += 1;
            }
            (k > at + 1 && ch(k) == Some(')') && followed_by_space(k + 1)).then_some(k + 1)
        }
        c if c.is_ascii_digit() => {
            let mut k = at;
            while ch(k).is_some_and(|c| c.is_ascii_digit()) && k - at < 3 {
                k += 1;
            }
            (matches!(ch(k), Some('.') | Some(')')) && followed_by_space(k + 1)).then_some(k + 1)
        }
        _ => None,
    }
}

fn is_heading(chars: &[(usize, char)], at: usize) -> bool {
    let mut k = at;
    while chars.get(k).is_some_and(|&(_, c)| c == '#') {
        k += 1;
    }
    k > at && chars.get(k).is_some_and(|&(_, c)| is_hspace(c))
}

impl SentenceSplitter {
    pub fn with_abbreviations(abbreviations: &[&str]) -> Self {
        SentenceSplitter {
            abbreviations: abbreviations.iter().map(|a| a.to_lowercase()).collect(),
        }
    }

    fn ends_with_abbreviation(&self, text: &str) -> bool {
        let lower = text.to_lowercase();
        self.abbreviations.iter().any(|abbr| {
            lower.ends_with(abbr.as_str())
                && lower[..lower.len() - abbr.len()]
                    .chars()
                    .next_back()
                    .is_none_or(|c| !c.is_alphanumeric())
        })
    }

    pub fn split(&self, body: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = body.char_indices().collect();
        let n = chars.len();
        let byte_at = |i: usize| chars.get(i).map_or(body.len(), |&(b, _)| b);

        let mut out = Vec::new();
        let mut seg_start = 0usize;
        let mut flush = |end: usize, seg_start: &mut usize| {
            let piece = body[*seg_start..end].trim();
            if !piece.is_empty() {
                out.push(piece.to_string());
            }
            *seg_start = end;
        };

        let mut i = 0;
        let mut at_line_start = true;
        let mut in_heading = false;
        while i < n {
            if at_line_start {
                at_line_start = false;
                let mut j = i;
                while j < n && is_hspace(chars[j].1) {
                    j += 1;
                }
                if j < n && chars[j].1 == '\n' && i > 0 {
                    flush(byte_at(i), &mut seg_start);
                } else if let Some(end) = list_marker_end(&chars, j) {
                    flush(byte_at(i), &mut seg_start);
                    i = end;
                    continue;
                } else if is_heading(&chars, j) {
                    flush(byte_at(i), &mut seg_start);
                    in_heading = true;
                }
            }

            let c = chars[i].1;
            if c == '\n' {
                if in_heading {
                    flush(byte_at(i), &mut seg_start);
                    in_heading = false;
                }
                at_line_start = true;
                i += 1;
                continue;
            }

            if is_terminal(c) {
                let mut k = i + 1;
                while k < n && is_terminal(chars[k].1) {
                    k += 1;
                }
                let terminals_end = k;
                while k < n && is_closer(chars[k].1) {
                    k += 1;
                }
                let boundary = if k == n {
                    true
                } else if chars[k].1.is_whitespace() {
                    let mut m = k;
                    while m < n && chars[m].1.is_whitespace() {
                        m += 1;
                    }
                    m == n || chars[m].1.is_uppercase()
                } else {
                    false
                };
                let protected = terminals_end == i + 1
                    && c == '.'
                    && self.ends_with_abbreviation(&body[seg_start..byte_at(terminals_end)]);
                if boundary && !protected {
                    flush(byte_at(k), &mut seg_start);
                }
                i = k;
                continue;
            }
            i += 1;
        }
        flush(body.len(), &mut seg_start);
        out
    }
}

/// Splits `body` with the shipped abbreviation list.
pub fn split_sentences(body: &str) -> Vec<String> {
    static SPLITTER: OnceLock<SentenceSplitter> = OnceLock::new();
    SPLITTER.get_or_init(SentenceSplitter::default).split(body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn extracts_leading_trace() {
        assert_eq!(
            extract_thinking("<think>plan</think>Good paper."),
            Ok((Some("plan".into()), "Good paper.".into()))
        );
        assert_eq!(
            extract_thinking("  \n<think>a</think> b"),
            Ok((Some("a".into()), " b".into()))
        );
    }

    #[test]
    fn no_trace_is_identity() {
        assert_eq!(
            extract_thinking("Good paper."),
            Ok((None, "Good paper.".into()))
        );
    }

    #[test]
    fn unclosed_trace_is_malformed() {
        assert_eq!(
            extract_thinking("<think>plan with no close … "),
            Err(SegmentationError::MalformedTrace(0))
        );
        assert_eq!(
            extract_thinking("Text then <think> dangling"),
            Err(SegmentationError::MalformedTrace(10))
        );
    }

    #[test]
    fn later_think_blocks_stay_in_body() {
        let (trace, body) = extract_thinking("<think>a</think>x<think>b</think>y").unwrap();
        assert_eq!(trace.as_deref(), Some("a"));
        assert_eq!(body, "x<think>b</think>y");

        let (trace, body) = extract_thinking("x <think>b</think> y").unwrap();
        assert_eq!(trace, None);
        assert_eq!(body, "x <think>b</think> y");
    }

    #[test]
    fn lenient_review_drops_dangling_tag() {
        let review = Review::from_raw_lenient("<think>Plan. The paper is fine.");
        assert_eq!(review.thinking_trace, None);
        assert_eq!(review.body, "Plan. The paper is fine.");
        assert_eq!(review.sentences, ["Plan.", "The paper is fine."]);
        assert_eq!(review.format_reward(), 0.0);
    }

    #[test]
    fn format_reward_cases() {
        assert_eq!(format_reward(Some("plan"), "Review."), 1.0);
        assert_eq!(format_reward(None, "Review."), 0.0);
        assert_eq!(format_reward(Some("plan"), ""), 0.0);
        assert_eq!(format_reward(Some("  \n"), "Review."), 0.0);
        assert_eq!(format_reward(Some("plan"), " \n "), 0.0);
    }

    #[test]
    fn basic_split() {
        assert_eq!(split_sentences("Good. Bad."), ["Good.", "Bad."]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences(" \n\t ").is_empty());
    }

    // Hand trace of "See Fig. 2 for the trend. It is clear.":
    //   '.' after "Fig" -> next non-space is '2' (not uppercase), and "fig." is
    //   protected anyway -> no split.
    //   '.' after "trend" -> next non-space 'I' is uppercase, "trend." is not an
    //   abbreviation -> split.
    //   final '.' -> end of text -> split.
    #[test]
    fn figure_abbreviation_is_protected() {
        assert_eq!(
            split_sentences("See Fig. 2 for the trend. It is clear."),
            ["See Fig. 2 for the trend.", "It is clear."]
        );
        assert_eq!(
            split_sentences("As in Smith et al. The method differs. Compare Eq. A."),
            ["As in Smith et al. The method differs.", "Compare Eq. A."]
        );
        assert_eq!(
            split_sentences("Use priors, e.g. Gaussian ones. Done."),
            ["Use priors, e.g. Gaussian ones.", "Done."]
        );
    }

    #[test]
    fn abbreviation_needs_word_boundary() {
        // "config." ends with "fig." but is not the abbreviation.
        assert_eq!(
            split_sentences("Check the config. Then run."),
            ["Check the config.", "Then run."]
        );
    }

    #[test]
    fn decimals_and_lowercase_continuations_do_not_split() {
        assert_eq!(
            split_sentences("Accuracy is 0.95 on test. it drops to 3.5 later."),
            ["Accuracy is 0.95 on test. it drops to 3.5 later."]
        );
    }

    #[test]
    fn terminal_runs_and_closers() {
        assert_eq!(
            split_sentences("Really?! Yes. He said \"Stop.\" Then left."),
            ["Really?!", "Yes.", "He said \"Stop.\"", "Then left."]
        );
        assert_eq!(split_sentences("Wait... Then go"), ["Wait...", "Then go"]);
    }

    #[test]
    fn list_items_are_sentences() {
        let body = "Strengths:\n- clear writing\n- strong baselines\n1. add ablations\n2) fix typos\n(3) cite prior work";
        assert_eq!(
            split_sentences(body),
            [
                "Strengths:",
                "- clear writing",
                "- strong baselines",
                "1. add ablations",
                "2) fix typos",
                "(3) cite prior work"
            ]
        );
    }

    #[test]
    fn headings_and_blank_lines_separate() {
        let body = "### Summary\nthe paper studies rewards\n\nit is fine";
        assert_eq!(
            split_sentences(body),
            ["### Summary", "the paper studies rewards", "it is fine"]
        );
    }

    #[test]
    fn custom_abbreviations() {
        let splitter = SentenceSplitter::with_abbreviations(&["Thm."]);
        assert_eq!(splitter.split("See Thm. Two. Done."), ["See Thm. Two.", "Done."]);
        assert_eq!(
            splitter.split("See Fig. Two. Done."),
            ["See Fig.", "Two.", "Done."]
        );
    }

    #[test]
    fn resource_parses() {
        let list = parse_abbreviations(ABBREVIATIONS_RESOURCE);
        for required in ["fig.", "et al.", "eq.", "cf.", "vs.", "i.e.", "e.g."] {
            assert!(list.iter().any(|a| a == required), "{required}");
        }
    }

    proptest! {
        #[test]
        fn split_preserves_non_whitespace(body in "[A-Za-z0-9 .!?\n\\-#()\"]{0,120}") {
            let joined = split_sentences(&body).join(" ");
            let strip = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            prop_assert_eq!(strip(&joined), strip(&body));
        }

        #[test]
        fn sentences_are_trimmed_and_nonempty(body in "\\PC{0,80}") {
            for s in split_sentences(&body) {
                prop_assert!(!s.is_empty());
                prop_assert_eq!(s.trim(), s.as_str());
            }
        }

        #[test]
        fn trace_reconstruction(lead in "[ \n\t]{0,3}", trace in "[a-z .]{0,20}", body in "[A-Za-z .]{0,30}") {
            let raw = format!("{lead}<think>{trace}</think>{body}");
            let (t, b) = extract_thinking(&raw).unwrap();
            let t = t.unwrap();
            prop_assert_eq!(format!("<think>{t}</think>{b}"), raw.trim_start());
        }

        #[test]
        fn format_reward_is_binary(trace in proptest::option::of("\\PC{0,10}"), body in "\\PC{0,10}") {
            let r = format_reward(trace.as_deref(), &body);
            prop_assert!(r == 0.0 || r == 1.0);
        }
    }
}
