//! Deterministic part-of-speech tagger: a word lexicon with suffix-rule
//! and default-tag fallback, over the 45-tag Penn Treebank set. Tags feed
//! the network's second channel as 45-dimensional one-hot vectors.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const DEFAULT_TAG_LEXICON: &str = include_str!("../data/tagger_lexicon.tsv");

pub const TAG_COUNT: usize = 45;

/// Penn Treebank tag set. Index order is fixed: the 36 word-level tags in
/// alphabetical order, then the 9 symbol tags; saved models rely on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[allow(clippy::upper_case_acronyms)]
pub enum PosTag {
    CC,
    CD,
    DT,
    EX,
    FW,
    IN,
    JJ,
    JJR,
    JJS,
    LS,
    MD,
    NN,
    NNP,
    NNPS,
    NNS,
    PDT,
    POS,
    PRP,
    PRPS,
    RB,
    RBR,
    RBS,
    RP,
    SYM,
    TO,
    UH,
    VB,
    VBD,
    VBG,
    VBN,
    VBP,
    VBZ,
    WDT,
    WP,
    WPS,
    WRB,
    Pound,
    Dollar,
    CloseQuote,
    OpenParen,
    CloseParen,
    Comma,
    Period,
    Colon,
    OpenQuote,
}

pub const ALL_TAGS: [PosTag; TAG_COUNT] = [
    PosTag::CC,
    PosTag::CD,
    PosTag::DT,
    PosTag::EX,
    PosTag::FW,
    PosTag::IN,
    PosTag::JJ,
    PosTag::JJR,
    PosTag::JJS,
    PosTag::LS,
    PosTag::MD,
    PosTag::NN,
    PosTag::NNP,
    PosTag::NNPS,
    PosTag::NNS,
    PosTag::PDT,
    PosTag::POS,
    PosTag::PRP,
    PosTag::PRPS,
    PosTag::RB,
    PosTag::RBR,
    PosTag::RBS,
    PosTag::RP,
    PosTag::SYM,
    PosTag::TO,
    PosTag::UH,
    PosTag::VB,
    PosTag::VBD,
    PosTag::VBG,
    PosTag::VBN,
    PosTag::VBP,
    PosTag::VBZ,
    PosTag::WDT,
    PosTag::WP,
    PosTag::WPS,
    PosTag::WRB,
    PosTag::Pound,
    PosTag::Dollar,
    PosTag::CloseQuote,
    PosTag::OpenParen,
    PosTag::CloseParen,
    PosTag::Comma,
    PosTag::Period,
    PosTag::Colon,
    PosTag::OpenQuote,
];

impl PosTag {
    pub fn index(self) -> usize {
        ALL_TAGS
            .iter()
            .position(|&t| t == self)
            .expect("tag in table")
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PosTag::CC => "CC",
            PosTag::CD => "CD",
            PosTag::DT => "DT",
            PosTag::EX => "EX",
            PosTag::FW => "FW",
            PosTag::IN => "IN",
            PosTag::JJ => "JJ",
            PosTag::JJR => "JJR",
            PosTag::JJS => "JJS",
            PosTag::LS => "LS",
            PosTag::MD => "MD",
            PosTag::NN => "NN",
            PosTag::NNP => "NNP",
            PosTag::NNPS => "NNPS",
            PosTag::NNS => "NNS",
            PosTag::PDT => "PDT",
            PosTag::POS => "POS",
            PosTag::PRP => "PRP",
            PosTag::PRPS => "PRP$",
            PosTag::RB => "RB",
            PosTag::RBR => "RBR",
            PosTag::RBS => "RBS",
            PosTag::RP => "RP",
            PosTag::SYM => "SYM",
            PosTag::TO => "TO",
            PosTag::UH => "UH",
            PosTag::VB => "VB",
            PosTag::VBD => "VBD",
            PosTag::VBG => "VBG",
            PosTag::VBN => "VBN",
            PosTag::VBP => "VBP",
            PosTag::VBZ => "VBZ",
            PosTag::WDT => "WDT",
            PosTag::WP => "WP",
            PosTag::WPS => "WP$",
            PosTag::WRB => "WRB",
            PosTag::Pound => "#",
            PosTag::Dollar => "$",
            PosTag::CloseQuote => "''",
            PosTag::OpenParen => "(",
            PosTag::CloseParen => ")",
            PosTag::Comma => ",",
            PosTag::Period => ".",
            PosTag::Colon => ":",
            PosTag::OpenQuote => "``",
        }
    }

    pub fn parse(s: &str) -> Option<PosTag> {
        ALL_TAGS.iter().copied().find(|t| t.as_str() == s)
    }
}

/// Unit basis vector at the tag's fixed index.
pub fn one_hot(tag: PosTag) -> Vec<f64> {
    let mut v = vec![0.0; TAG_COUNT];
    v[tag.index()] = 1.0;
    v
}

/// Word-to-tag lexicon with ordered suffix rules and an NN default.
pub struct TagLexicon {
    words: HashMap<String, PosTag>,
    /// (suffix, tag), tried in order; longest suffixes first.
    suffix_rules: Vec<(&'static str, PosTag)>,
}

/// Minimum remaining-stem length for a suffix rule to apply.
const MIN_SUFFIX_STEM: usize = 3;

fn default_suffix_rules() -> Vec<(&'static str, PosTag)> {
    vec![
        ("ing", PosTag::VBG),
        ("est", PosTag::JJS),
        ("ed", PosTag::VBD),
        ("ly", PosTag::RB),
        ("er", PosTag::JJR),
        ("s", PosTag::NNS),
    ]
}

impl TagLexicon {
    pub fn parse(tsv: &str) -> Result<Self> {
        let mut words = HashMap::new();
        for (lineno, line) in tsv.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, tag) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!("tag lexicon line {}: missing tab", lineno + 1))
            })?;
            let tag = PosTag::parse(tag.trim()).ok_or_else(|| {
                Error::Format(format!(
                    "tag lexicon line {}: unknown tag {tag:?}",
                    lineno + 1
                ))
            })?;
            words.insert(word.to_ascii_lowercase(), tag);
        }
        Ok(TagLexicon {
            words,
            suffix_rules: default_suffix_rules(),
        })
    }

    pub fn default_lexicon() -> Self {
        Self::parse(DEFAULT_TAG_LEXICON).expect("bundled tag lexicon is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&raw)
    }

    /// Merge an override lexicon on top of this one.
    pub fn merge_overrides(&mut self, other: &str) -> Result<()> {
        let parsed = Self::parse(other)?;
        self.words.extend(parsed.words);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn tag_word(&self, word: &str) -> PosTag {
        if let Some(&tag) = self.words.get(word) {
            return tag;
        }
        for &(suffix, tag) in &self.suffix_rules {
            if word.len() >= suffix.len() + MIN_SUFFIX_STEM && word.ends_with(suffix) {
                return tag;
            }
        }
        PosTag::NN
    }
}

/// Tag each token; output length always equals input length.
pub fn tag_sequence(tokens: &[impl AsRef<str>], lexicon: &TagLexicon) -> Vec<PosTag> {
    tokens
        .iter()
        .map(|t| lexicon.tag_word(t.as_ref()))
        .collect()
}
