//! From BIO tag sequences to scored aspect mentions. Spans are decoded
//! leniently, each mention is scored against an opinion lexicon within a
//! token window (negation-aware), and the score maps onto the 1-5 star
//! scale as `a = 3 + 2·tanh(raw)`.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::cnn::BioTag;
use crate::corpus::{stable_stem as stem_fixed, Token, TokenSeq};
use crate::error::{Error, Result};

pub const DEFAULT_OPINION_LEXICON: &str = include_str!("../data/opinion_lexicon.tsv");
pub const DEFAULT_NEGATIONS: &str = include_str!("../data/negations.txt");

pub const DEFAULT_SCORE_WINDOW: usize = 4;
/// Negation applies when a negation word sits within this many tokens
/// before a lexicon term.
const NEGATION_REACH: usize = 2;

/// Term-polarity table plus negation word set. Keys are stemmed on load
/// so either surface forms or stems work in the files.
#[derive(Debug, Clone)]
pub struct OpinionLexicon {
    polarities: HashMap<String, f64>,
    negations: HashSet<String>,
}

fn stable_stem(word: &str) -> String {
    stem_fixed(&word.to_ascii_lowercase())
}

impl OpinionLexicon {
    pub fn parse(lexicon_tsv: &str, negations_txt: &str) -> Result<Self> {
        let mut polarities = HashMap::new();
        for (lineno, line) in lexicon_tsv.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (term, value) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("opinion lexicon line {}: missing tab", lineno + 1))
            })?;
            let polarity: f64 = value.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "opinion lexicon line {}: bad polarity {value:?}",
                    lineno + 1
                ))
            })?;
            if !polarity.is_finite() || !(-1.0..=1.0).contains(&polarity) {
                return Err(Error::Format(format!(
                    "opinion lexicon line {}: polarity {polarity} outside [-1,1]",
                    lineno + 1
                )));
            }
            polarities.insert(stable_stem(term.trim()), polarity);
        }
        let negations = negations_txt
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(stable_stem)
            .collect();
        Ok(OpinionLexicon {
            polarities,
            negations,
        })
    }

    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_OPINION_LEXICON, DEFAULT_NEGATIONS)
            .expect("bundled opinion lexicon is well-formed")
    }

    pub fn load(lexicon: &Path, negations: Option<&Path>) -> Result<Self> {
        let lex_raw =
            fs::read_to_string(lexicon).map_err(|e| Error::io(lexicon.display().to_string(), e))?;
        let neg_raw = match negations {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?,
            None => DEFAULT_NEGATIONS.to_string(),
        };
        Self::parse(&lex_raw, &neg_raw)
    }

    pub fn polarity(&self, stem: &str) -> Option<f64> {
        self.polarities.get(stem).copied()
    }

    pub fn is_negation(&self, stem: &str) -> bool {
        self.negations.contains(stem)
    }

    pub fn len(&self) -> usize {
        self.polarities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polarities.is_empty()
    }
}

/// Token span `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

/// Lenient BIO decode: maximal B(I)* runs; an I at position 0 or after O
/// opens a span as if it were B.
pub fn decode_bio(tags: &[BioTag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<usize> = None;
    for (t, &tag) in tags.iter().enumerate() {
        match tag {
            BioTag::B => {
                if let Some(start) = open.take() {
                    spans.push(Span { start, end: t });
                }
                open = Some(t);
            }
            BioTag::I => {
                if open.is_none() {
                    open = Some(t);
                }
            }
            BioTag::O => {
                if let Some(start) = open.take() {
                    spans.push(Span { start, end: t });
                }
            }
        }
    }
    if let Some(start) = open {
        spans.push(Span {
            start,
            end: tags.len(),
        });
    }
    spans
}

/// Encode spans back to BIO; inverse of `decode_bio` for well-formed
/// span sets.
pub fn encode_bio(spans: &[Span], len: usize) -> Vec<BioTag> {
    let mut tags = vec![BioTag::O; len];
    for span in spans {
        for t in span.start..span.end.min(len) {
            tags[t] = if t == span.start {
                BioTag::B
            } else {
                BioTag::I
            };
        }
    }
    tags
}

/// Sum of signed lexicon polarities within `window` tokens of the span
/// (span tokens excluded), each flipped when a negation word occurs
/// within two tokens before it; squashed with tanh.
pub fn score_mention(span: Span, tokens: &[Token], lexicon: &OpinionLexicon, window: usize) -> f64 {
    let lo = span.start.saturating_sub(window);
    let hi = (span.end + window).min(tokens.len());
    let mut raw = 0.0;
    for (t, token) in tokens.iter().enumerate().take(hi).skip(lo) {
        if t >= span.start && t < span.end {
            continue;
        }
        let Some(polarity) = lexicon.polarity(&token.stem) else {
            continue;
        };
        let neg_lo = t.saturating_sub(NEGATION_REACH);
        let negated = tokens[neg_lo..t]
            .iter()
            .any(|q| lexicon.is_negation(&q.stem));
        raw += if negated { -polarity } else { polarity };
    }
    raw.tanh()
}

/// One extracted aspect mention with its lexicon score and star-scale
/// rating `a = 3 + 2s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AspectMention {
    pub user_id: String,
    pub item_id: String,
    pub start: usize,
    pub end: usize,
    pub head_stem: String,
    pub score: f64,
    pub rating: f64,
}

/// Decode, score, and materialize every mention in a tagged sequence.
pub fn extract_mentions(
    seq: &TokenSeq,
    tags: &[BioTag],
    lexicon: &OpinionLexicon,
    window: usize,
) -> Result<Vec<AspectMention>> {
    if seq.tokens.len() != tags.len() {
        return Err(Error::Shape(format!(
            "tags ({}) misaligned with tokens ({})",
            tags.len(),
            seq.tokens.len()
        )));
    }
    Ok(decode_bio(tags)
        .into_iter()
        .map(|span| {
            let score = score_mention(span, &seq.tokens, lexicon, window);
            AspectMention {
                user_id: seq.user_id.clone(),
                item_id: seq.item_id.clone(),
                start: span.start,
                end: span.end,
                head_stem: seq.tokens[span.end - 1].stem.clone(),
                score,
                rating: 3.0 + 2.0 * score,
            }
        })
        .collect())
}
