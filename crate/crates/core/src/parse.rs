//! Tolerant extraction of node labels from free-form model output.
//!
//! The focus segment is the first fenced code block if present, then the
//! first `[...]` group inside it. If every comma-separated piece of that
//! segment is a single bare token, those tokens are the answer (this admits
//! non-numeric labels). Otherwise the segment is treated as prose and every
//! standalone decimal integer is taken in order.

use crate::error::{Error, Result};
use crate::graph::Label;

fn focus(text: &str) -> &str {
    let mut segment = text;
    if let Some(open) = segment.find("```") {
        let rest = &segment[open + 3..];
        // skip an info string such as ```text
        let body_start = rest.find('\n').map_or(0, |i| i + 1);
        let body = &rest[body_start..];
        if let Some(close) = body.find("```") {
            segment = &body[..close];
        }
    }
    if let Some(open) = segment.find('[') {
        if let Some(len) = segment[open + 1..].find(']') {
            segment = &segment[open + 1..open + 1 + len];
        }
    }
    segment.trim()
}

fn bare_tokens(segment: &str) -> Option<Vec<String>> {
    let trim = |s: &str| {
        s.trim()
            .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '(' | ')' | '{' | '}' | '.'))
            .trim()
            .to_string()
    };
    let pieces: Vec<String> = segment
        .split([',', ';', '\n'])
        .map(trim)
        .filter(|s| !s.is_empty())
        .collect();
    let bare = !pieces.is_empty()
        && pieces.iter().all(|p| {
            p.chars()
                .all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | ':'))
        });
    bare.then_some(pieces)
}

fn integer_tokens(segment: &str) -> Vec<String> {
    segment
        .split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|w| !w.is_empty() && w.bytes().all(|b| b.is_ascii_digit()))
        .map(str::to_string)
        .collect()
}

fn extract(text: &str) -> Vec<Label> {
    let segment = focus(text);
    let tokens = bare_tokens(segment).unwrap_or_else(|| integer_tokens(segment));
    tokens.iter().map(|t| Label::parse(t)).collect()
}

/// Extracts node labels in order. Membership and length are left to the
/// validators; `expected_len` is accepted for interface symmetry and unused
/// beyond debug logging.
pub fn parse_node_list(text: &str, expected_len: Option<usize>) -> Result<Vec<Label>> {
    let labels = extract(text);
    if labels.is_empty() {
        return Err(Error::ResponseParse { raw: text.to_string() });
    }
    if let Some(n) = expected_len {
        if n != labels.len() {
            log::debug!("parsed {} labels, expected {n}", labels.len());
        }
    }
    Ok(labels)
}

/// Parses a `(remove, add)` answer; anything other than two labels fails.
pub fn parse_swap_pair(text: &str) -> Result<(Label, Label)> {
    let mut labels = extract(text);
    if labels.len() != 2 {
        return Err(Error::ResponseParse { raw: text.to_string() });
    }
    let add = labels.pop().expect("two labels");
    let remove = labels.pop().expect("two labels");
    Ok((remove, add))
}

pub fn format_node_list(labels: &[Label]) -> String {
    labels.iter().map(Label::to_string).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[u64]) -> Vec<Label> {
        v.iter().map(|&x| Label::Int(x)).collect()
    }

    #[test]
    fn canonical_list() {
        assert_eq!(parse_node_list("12, 7, 33", Some(3)).unwrap(), ints(&[12, 7, 33]));
    }

    #[test]
    fn fenced_list_with_prose() {
        let text = "```\n[5, 9]\n``` These maximize spread.";
        assert_eq!(parse_node_list(text, None).unwrap(), ints(&[5, 9]));
    }

    #[test]
    fn prose_sentence() {
        let text = "The best seeds are nodes 3 and 14.";
        assert_eq!(parse_node_list(text, None).unwrap(), ints(&[3, 14]));
    }

    #[test]
    fn named_labels() {
        let labels = parse_node_list("c, l1, l4", None).unwrap();
        assert_eq!(labels, vec![Label::from("c"), Label::from("l1"), Label::from("l4")]);
    }

    #[test]
    fn prose_ignores_digits_inside_words() {
        let text = "Using GPT4 I pick node 8, then 2x and 11.";
        assert_eq!(parse_node_list(text, None).unwrap(), ints(&[8, 11]));
    }

    #[test]
    fn nothing_extractable_keeps_raw_text() {
        match parse_node_list("no idea", None) {
            Err(Error::ResponseParse { raw }) => assert_eq!(raw, "no idea"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn swap_pairs() {
        assert_eq!(parse_swap_pair("[4, 17]").unwrap(), (Label::Int(4), Label::Int(17)));
        assert_eq!(parse_swap_pair("Remove 4, add 17").unwrap(), (Label::Int(4), Label::Int(17)));
        assert!(parse_swap_pair("17").is_err());
        assert!(parse_swap_pair("1, 2, 3").is_err());
    }

    #[test]
    fn format_then_parse_is_identity() {
        let labels = ints(&[0, 42, 7]);
        assert_eq!(parse_node_list(&format_node_list(&labels), None).unwrap(), labels);
    }
}
