//! Review ingestion and the text-normalization chain.
//!
//! The chain applies, in order: markup stripping, contraction expansion,
//! non-ASCII removal, number-to-word conversion, lowercasing, punctuation
//! removal, whitespace tokenization, stopword removal, and stemming.
//! The order is fixed; re-normalizing normalized output is a no-op.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::stem::porter_stem;

pub const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");
pub const DEFAULT_CONTRACTIONS: &str = include_str!("../data/contractions.tsv");

/// One user-item review as it appears in the dataset dump.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReviewRecord {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub text: String,
    pub category: Option<String>,
}

/// Review polarity derived from the star rating alone. Ratings of exactly
/// three carry no label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PolarityLabel {
    Negative,
    Positive,
}

/// rating < 3 is negative, rating > 3 positive, rating = 3 unlabeled.
pub fn derive_label(rating: f64) -> Result<Option<PolarityLabel>> {
    if !rating.is_finite() || !(1.0..=5.0).contains(&rating) {
        return Err(Error::Domain(format!("rating {rating} outside [1,5]")));
    }
    Ok(if rating < 3.0 {
        Some(PolarityLabel::Negative)
    } else if rating > 3.0 {
        Some(PolarityLabel::Positive)
    } else {
        None
    })
}

/// A normalized token: the lowercase surface form that survived the chain
/// and its stem.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Token {
    pub surface: String,
    pub stem: String,
}

/// Normalized token sequence for one review.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TokenSeq {
    pub tokens: Vec<Token>,
    pub label: Option<PolarityLabel>,
    pub user_id: String,
    pub item_id: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// Newline-delimited JSON with `reviewerID`, `asin`, `overall`,
    /// `reviewText`, and optional `category` fields.
    AmazonJsonl,
}

/// Result of loading a dataset file.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub records: Vec<ReviewRecord>,
    /// well-formed lines that were missing text/rating or had out-of-range
    /// fields
    pub skipped: usize,
    /// lines that were not parseable at all
    pub malformed: usize,
}

pub fn load_reviews(path: &Path, format: DatasetFormat) -> Result<LoadedCorpus> {
    let DatasetFormat::AmazonJsonl = format;
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut records = Vec::new();
    let mut skipped = 0usize;
    let mut malformed = 0usize;
    let mut total = 0usize;
    for line in raw.lines() {
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => {
                malformed += 1;
                continue;
            }
        };
        let user_id = value.get("reviewerID").and_then(|v| v.as_str());
        let item_id = value.get("asin").and_then(|v| v.as_str());
        let rating = value.get("overall").and_then(|v| v.as_f64());
        let text = value.get("reviewText").and_then(|v| v.as_str());
        let category = value
            .get("category")
            .and_then(|v| v.as_str())
            .map(str::to_string);
        match (user_id, item_id, rating, text) {
            (Some(u), Some(i), Some(r), Some(t))
                if !u.is_empty() && !i.is_empty() && !t.is_empty() && (1.0..=5.0).contains(&r) =>
            {
                records.push(ReviewRecord {
                    user_id: u.to_string(),
                    item_id: i.to_string(),
                    rating: r,
                    text: t.to_string(),
                    category,
                });
            }
            _ => skipped += 1,
        }
    }
    if total > 0 && malformed * 2 > total {
        return Err(Error::Format(format!(
            "{malformed} of {total} lines malformed in {}",
            path.display()
        )));
    }
    Ok(LoadedCorpus {
        records,
        skipped,
        malformed,
    })
}

/// Remove `<...>` tag spans (unclosed tags are dropped to end of string)
/// and decode the basic character entities.
pub fn strip_markup(text: &str) -> String {
    let mut untagged = String::with_capacity(text.len());
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '<' {
            // Skip to the closing '>'; if there is none the rest of the
            // string belongs to the unclosed tag.
            for t in chars.by_ref() {
                if t == '>' {
                    break;
                }
            }
        } else {
            untagged.push(c);
        }
    }
    decode_entities(&untagged)
}

fn decode_entities(text: &str) -> String {
    let bytes = text.as_bytes();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    let chars: Vec<char> = text.chars().collect();
    let _ = bytes;
    while i < chars.len() {
        if chars[i] == '&' {
            if let Some(semi) = chars[i..].iter().position(|&c| c == ';') {
                let entity: String = chars[i + 1..i + semi].iter().collect();
                let decoded = match entity.as_str() {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    _ => entity
                        .strip_prefix('#')
                        .and_then(|num| num.parse::<u32>().ok())
                        .and_then(char::from_u32),
                };
                if let Some(d) = decoded {
                    out.push(d);
                    i += semi + 1;
                    continue;
                }
            }
        }
        out.push(chars[i]);
        i += 1;
    }
    out
}

/// Fixed contraction table plus the generic `n't` suffix rule. Matches are
/// case-insensitive on word boundaries; an uppercase first letter is
/// preserved in the expansion.
pub struct ContractionTable {
    entries: HashMap<String, String>,
}

impl ContractionTable {
    pub fn parse(tsv: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (lineno, line) in tsv.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, expansion) = line.split_once('\t').ok_or_else(|| {
                Error::Format(format!(
                    "contraction table line {}: missing tab",
                    lineno + 1
                ))
            })?;
            entries.insert(key.to_ascii_lowercase(), expansion.to_string());
        }
        Ok(ContractionTable { entries })
    }

    pub fn default_table() -> Self {
        Self::parse(DEFAULT_CONTRACTIONS).expect("bundled contraction table is well-formed")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&raw)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn expand(&self, text: &str) -> String {
        let chars: Vec<char> = text.chars().collect();
        let mut out = String::with_capacity(text.len());
        let mut i = 0;
        while i < chars.len() {
            if !chars[i].is_ascii_alphabetic() {
                out.push(chars[i]);
                i += 1;
                continue;
            }
            // Consume a word: ASCII letters with internal apostrophes.
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphabetic() {
                i += 1;
                if i + 1 < chars.len() && chars[i] == '\'' && chars[i + 1].is_ascii_alphabetic() {
                    i += 1;
                }
            }
            let word: String = chars[start..i].iter().collect();
            let lower = word.to_ascii_lowercase();
            if let Some(expansion) = self.entries.get(&lower) {
                out.push_str(&capitalize_like(&word, expansion));
            } else if let Some(stem) = lower.strip_suffix("n't") {
                if !stem.is_empty() {
                    // Generic rule: keep the original prefix, replace n't.
                    let prefix: String = chars[start..i - 3].iter().collect();
                    out.push_str(&prefix);
                    out.push_str(" not");
                } else {
                    out.push_str(&word);
                }
            } else {
                out.push_str(&word);
            }
        }
        out
    }
}

fn capitalize_like(original: &str, expansion: &str) -> String {
    let first_upper = original
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_uppercase());
    if first_upper {
        let mut chars = expansion.chars();
        match chars.next() {
            Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
            None => String::new(),
        }
    } else {
        expansion.to_string()
    }
}

const ONES: [&str; 20] = [
    "zero",
    "one",
    "two",
    "three",
    "four",
    "five",
    "six",
    "seven",
    "eight",
    "nine",
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];
const TENS: [&str; 10] = [
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety",
];

fn words_below_thousand(n: u64, out: &mut Vec<&'static str>) {
    let n = n as usize;
    if n >= 100 {
        out.push(ONES[n / 100]);
        out.push("hundred");
    }
    let rest = n % 100;
    if rest == 0 {
        return;
    }
    if rest < 20 {
        out.push(ONES[rest]);
    } else {
        out.push(TENS[rest / 10]);
        if rest % 10 != 0 {
            out.push(ONES[rest % 10]);
        }
    }
}

/// Spell out a number in `[0, 999_999_999]` without "and" or hyphens.
fn spell_number(n: u64) -> String {
    if n == 0 {
        return "zero".to_string();
    }
    let mut parts: Vec<&'static str> = Vec::new();
    let millions = n / 1_000_000;
    let thousands = (n / 1_000) % 1_000;
    let units = n % 1_000;
    if millions > 0 {
        words_below_thousand(millions, &mut parts);
        parts.push("million");
    }
    if thousands > 0 {
        words_below_thousand(thousands, &mut parts);
        parts.push("thousand");
    }
    if units > 0 {
        words_below_thousand(units, &mut parts);
    }
    parts.join(" ")
}

/// Replace each maximal digit run of at most nine digits with English
/// words, splitting the run off from adjacent word characters. Longer
/// runs (serial numbers) are left verbatim.
pub fn number_to_words(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let run: String = chars[start..i].iter().collect();
            if run.len() <= 9 {
                let value: u64 = run.parse().expect("digit run fits in u64");
                if !out.is_empty() && !out.ends_with(char::is_whitespace) {
                    out.push(' ');
                }
                out.push_str(&spell_number(value));
                if i < chars.len() && !chars[i].is_whitespace() {
                    out.push(' ');
                }
            } else {
                out.push_str(&run);
            }
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    out
}

/// Stopword set: one lowercase word per line, `#` comments allowed.
#[derive(Debug, Clone)]
pub struct StopwordList {
    words: HashSet<String>,
}

impl StopwordList {
    pub fn parse(raw: &str) -> Self {
        let words = raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_ascii_lowercase())
            .collect();
        StopwordList { words }
    }

    pub fn default_list() -> Self {
        Self::parse(DEFAULT_STOPWORDS)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Ok(Self::parse(&raw))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Stem to a fixed point. A single stemmer pass is not always stable
/// ("agreed" -> "agre" -> "agr"); the chain needs stable stems so that
/// normalization is idempotent on its own output.
pub fn stable_stem(word: &str) -> String {
    let mut current = word.to_string();
    for _ in 0..8 {
        let next = porter_stem(&current);
        if next == current {
            return current;
        }
        current = next;
    }
    current
}

/// Run the full normalization chain over raw review text.
pub fn normalize(
    text: &str,
    stopwords: &StopwordList,
    contractions: &ContractionTable,
) -> Vec<Token> {
    let stripped = strip_markup(text);
    let expanded = contractions.expand(&stripped);
    let ascii: String = expanded.chars().filter(char::is_ascii).collect();
    let numbered = number_to_words(&ascii);
    let lowered = numbered.to_ascii_lowercase();
    let unpunctuated: String = lowered
        .chars()
        .map(|c| {
            if c == '\'' {
                // Apostrophes vanish entirely so possessives stay one token.
                '\0'
            } else if c.is_ascii_punctuation() {
                ' '
            } else {
                c
            }
        })
        .filter(|&c| c != '\0')
        .collect();
    let mut tokens = Vec::new();
    for word in unpunctuated.split_whitespace() {
        if word.is_empty() || !word.bytes().all(|b| b.is_ascii_lowercase()) {
            // Tokens with residual digits (long serial numbers) are dropped:
            // stems must stay purely alphabetic.
            continue;
        }
        if stopwords.contains(word) {
            continue;
        }
        let stem = stable_stem(word);
        if stem.is_empty() || stopwords.contains(&stem) {
            continue;
        }
        tokens.push(Token {
            surface: word.to_string(),
            stem,
        });
    }
    tokens
}

/// Stem-to-id map. Id 0 is padding; in-vocabulary stems take 1..=n in
/// descending frequency order (ties lexicographic); the OOV id is n+1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    ids: BTreeMap<String, u32>,
    oov_id: u32,
}

pub const PAD_ID: u32 = 0;

impl Vocabulary {
    pub fn id(&self, stem: &str) -> u32 {
        *self.ids.get(stem).unwrap_or(&self.oov_id)
    }

    pub fn contains(&self, stem: &str) -> bool {
        self.ids.contains_key(stem)
    }

    pub fn oov_id(&self) -> u32 {
        self.oov_id
    }

    /// Total number of ids including padding and OOV.
    pub fn size(&self) -> usize {
        self.ids.len() + 2
    }

    pub fn stems(&self) -> impl Iterator<Item = (&str, u32)> {
        self.ids.iter().map(|(s, &i)| (s.as_str(), i))
    }

    /// FNV-1a over `(stem, id)` pairs in id order; identifies the
    /// vocabulary a model artifact was trained with.
    pub fn hash(&self) -> u64 {
        let mut pairs: Vec<(&str, u32)> = self.ids.iter().map(|(s, &i)| (s.as_str(), i)).collect();
        pairs.sort_by_key(|&(_, id)| id);
        let mut h: u64 = 0xcbf29ce484222325;
        for (stem, id) in pairs {
            for b in stem.bytes().chain([0u8]).chain(id.to_le_bytes()) {
                h ^= u64::from(b);
                h = h.wrapping_mul(0x100000001b3);
            }
        }
        h
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (String, u32)>) -> Result<Self> {
        let ids: BTreeMap<String, u32> = entries.into_iter().collect();
        let n = ids.len() as u32;
        for (stem, &id) in &ids {
            if id == PAD_ID || id > n {
                return Err(Error::Format(format!(
                    "vocabulary id {id} for {stem:?} out of range"
                )));
            }
        }
        Ok(Vocabulary { ids, oov_id: n + 1 })
    }
}

pub fn build_vocabulary(seqs: &[TokenSeq], min_count: usize) -> Result<Vocabulary> {
    if min_count < 1 {
        return Err(Error::Domain("min_count must be >= 1".into()));
    }
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for seq in seqs {
        for token in &seq.tokens {
            *counts.entry(&token.stem).or_insert(0) += 1;
        }
    }
    if counts.is_empty() {
        return Err(Error::Domain("empty corpus: no stems to index".into()));
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_count)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let ids: BTreeMap<String, u32> = ranked
        .into_iter()
        .enumerate()
        .map(|(rank, (stem, _))| (stem.to_string(), rank as u32 + 1))
        .collect();
    let oov_id = ids.len() as u32 + 1;
    Ok(Vocabulary { ids, oov_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn default_env() -> (StopwordList, ContractionTable) {
        (
            StopwordList::default_list(),
            ContractionTable::default_table(),
        )
    }

    #[test]
    fn default_stopword_list_has_40_entries() {
        let list = StopwordList::default_list();
        assert_eq!(list.len(), 40);
        assert!(list.contains("the"));
        // Negations must stay out so lexicon scoring can see them.
        assert!(!list.contains("not"));
        assert!(!list.contains("no"));
        assert!(!list.contains("never"));
    }

    #[test]
    fn default_contraction_table_has_60_entries() {
        assert_eq!(ContractionTable::default_table().len(), 60);
    }

    #[test]
    fn derive_label_partitions_ratings() {
        assert_eq!(derive_label(1.0).unwrap(), Some(PolarityLabel::Negative));
        assert_eq!(derive_label(2.9).unwrap(), Some(PolarityLabel::Negative));
        assert_eq!(derive_label(3.0).unwrap(), None);
        assert_eq!(derive_label(3.5).unwrap(), Some(PolarityLabel::Positive));
        assert_eq!(derive_label(5.0).unwrap(), Some(PolarityLabel::Positive));
        assert!(derive_label(0.5).is_err());
        assert!(derive_label(5.1).is_err());
        assert!(derive_label(f64::NAN).is_err());
    }

    #[test]
    fn strip_markup_removes_tags_and_decodes_entities() {
        assert_eq!(strip_markup("<b>great</b>"), "great");
        assert_eq!(strip_markup("a &amp; b"), "a & b");
        assert_eq!(strip_markup("nice <br product"), "nice ");
        assert_eq!(
            strip_markup("x &lt;3 &gt; y &quot;z&quot;"),
            "x <3 > y \"z\""
        );
        assert_eq!(strip_markup("&#65;&#66;"), "AB");
        assert_eq!(strip_markup("&bogus; stays"), "&bogus; stays");
        assert_eq!(strip_markup(""), "");
    }

    #[test]
    fn contractions_expand_via_table_and_generic_rule() {
        let (_, table) = default_env();
        assert_eq!(table.expand("don't"), "do not");
        assert_eq!(table.expand("I'm happy"), "I am happy");
        assert_eq!(table.expand("can't won't"), "can not will not");
        assert_eq!(table.expand("blorpn't"), "blorp not");
        assert_eq!(table.expand("Doesn't work"), "Does not work");
        assert_eq!(table.expand("plain text"), "plain text");
    }

    #[test]
    fn number_to_words_examples() {
        assert_eq!(number_to_words("5 stars"), "five stars");
        assert_eq!(number_to_words("0"), "zero");
        assert_eq!(number_to_words("123"), "one hundred twenty three");
        assert_eq!(number_to_words("mp3 player"), "mp three player");
        assert_eq!(
            number_to_words("abc123def"),
            "abc one hundred twenty three def"
        );
        // Ten or more digits stay verbatim.
        assert_eq!(number_to_words("1234567890"), "1234567890");
        assert_eq!(number_to_words("999999999"),
            "nine hundred ninety nine million nine hundred ninety nine thousand nine hundred ninety nine");
        assert_eq!(number_to_words("1001"), "one thousand one");
        assert_eq!(number_to_words("100"), "one hundred");
        assert_eq!(number_to_words("20"), "twenty");
        assert_eq!(number_to_words("21"), "twenty one");
    }

    #[test]
    fn normalize_follows_documented_order() {
        let (stop, contr) = default_env();
        let tokens = normalize("<b>Great sound!</b> 5 stars", &stop, &contr);
        let pairs: Vec<(&str, &str)> = tokens
            .iter()
            .map(|t| (t.surface.as_str(), t.stem.as_str()))
            .collect();
        assert_eq!(
            pairs,
            vec![
                ("great", "great"),
                ("sound", "sound"),
                ("five", "five"),
                ("stars", "star")
            ]
        );
    }

    #[test]
    fn normalize_empty_and_all_stopwords() {
        let (stop, contr) = default_env();
        assert!(normalize("", &stop, &contr).is_empty());
        assert!(normalize("the the the", &stop, &contr).is_empty());
    }

    #[test]
    fn normalize_drops_long_digit_runs() {
        let (stop, contr) = default_env();
        let tokens = normalize("serial 1234567890 works", &stop, &contr);
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        assert_eq!(surfaces, vec!["serial", "works"]);
    }

    #[test]
    fn normalize_is_idempotent_on_its_output() {
        let (stop, contr) = default_env();
        for text in [
            "<b>Great sound!</b> 5 stars",
            "I agreed, the battery ceased working. Isn't that awful?!",
            "don't buy this 100% useless thing &amp; run",
            "caresses ponies agreed cease y'all 42",
        ] {
            let once = normalize(text, &stop, &contr);
            let joined = once
                .iter()
                .map(|t| t.stem.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let twice = normalize(&joined, &stop, &contr);
            let once_stems: Vec<&str> = once.iter().map(|t| t.stem.as_str()).collect();
            let twice_stems: Vec<&str> = twice.iter().map(|t| t.stem.as_str()).collect();
            assert_eq!(once_stems, twice_stems, "input {text:?}");
        }
    }

    #[test]
    fn build_vocabulary_orders_by_frequency_then_stem() {
        let seq = |stems: &[&str]| TokenSeq {
            tokens: stems
                .iter()
                .map(|s| Token {
                    surface: s.to_string(),
                    stem: s.to_string(),
                })
                .collect(),
            label: None,
            user_id: "u".into(),
            item_id: "i".into(),
        };
        let seqs = vec![seq(&["a", "a", "a", "b", "c"]), seq(&["b", "b"])];
        let vocab = build_vocabulary(&seqs, 2).unwrap();
        assert_eq!(vocab.id("a"), 1);
        assert_eq!(vocab.id("b"), 2);
        assert_eq!(vocab.id("c"), vocab.oov_id());
        assert_eq!(vocab.oov_id(), 3);
        assert_eq!(vocab.size(), 4);

        let single = build_vocabulary(&[seq(&["x"])], 1).unwrap();
        assert_eq!(single.id("x"), 1);

        assert!(build_vocabulary(&seqs, 0).is_err());
        assert!(build_vocabulary(&[], 1).is_err());
    }

    #[test]
    fn vocabulary_hash_is_stable_and_input_sensitive() {
        let entries = vec![("great".to_string(), 1u32), ("sound".to_string(), 2u32)];
        let v1 = Vocabulary::from_entries(entries.clone()).unwrap();
        let v2 = Vocabulary::from_entries(entries).unwrap();
        assert_eq!(v1.hash(), v2.hash());
        let v3 = Vocabulary::from_entries(vec![("great".to_string(), 2), ("sound".to_string(), 1)])
            .unwrap();
        assert_ne!(v1.hash(), v3.hash());
    }

    #[test]
    fn load_reviews_counts_and_order() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            file,
            r#"{{"reviewerID":"u1","asin":"i1","overall":5.0,"reviewText":"great"}}"#
        )
        .unwrap();
        writeln!(file, r#"{{"reviewerID":"u2","asin":"i2","overall":4.0}}"#).unwrap();
        writeln!(
            file,
            r#"{{"reviewerID":"u3","asin":"i3","overall":1.0,"reviewText":"bad"}}"#
        )
        .unwrap();
        let out = load_reviews(file.path(), DatasetFormat::AmazonJsonl).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped, 1);
        assert_eq!(out.malformed, 0);
        assert_eq!(out.records[0].user_id, "u1");
        assert_eq!(out.records[1].user_id, "u3");
    }

    #[test]
    fn load_reviews_empty_file_is_ok() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let out = load_reviews(file.path(), DatasetFormat::AmazonJsonl).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.skipped, 0);
    }

    #[test]
    fn load_reviews_majority_malformed_is_error() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "not json at all").unwrap();
        writeln!(file, "{{broken").unwrap();
        writeln!(
            file,
            r#"{{"reviewerID":"u1","asin":"i1","overall":5.0,"reviewText":"ok"}}"#
        )
        .unwrap();
        assert!(load_reviews(file.path(), DatasetFormat::AmazonJsonl).is_err());
    }

    #[test]
    fn load_reviews_exactly_half_malformed_is_tolerated() {
        // The error fires strictly above 50%.
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "{{broken").unwrap();
        writeln!(
            file,
            r#"{{"reviewerID":"u1","asin":"i1","overall":5.0,"reviewText":"ok"}}"#
        )
        .unwrap();
        let out = load_reviews(file.path(), DatasetFormat::AmazonJsonl).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed, 1);
    }

    #[test]
    fn labeled_set_size_arithmetic() {
        // labeled = total - count(rating = 3), given none skipped
        let ratings = [1.0, 2.0, 3.0, 3.0, 4.0, 5.0, 3.0, 2.5];
        let labeled = ratings
            .iter()
            .filter(|&&r| derive_label(r).unwrap().is_some())
            .count();
        let threes = ratings.iter().filter(|&&r| r == 3.0).count();
        assert_eq!(labeled, ratings.len() - threes);
    }

    #[test]
    fn load_reviews_missing_file_is_io_error() {
        let err = load_reviews(
            Path::new("/nonexistent/reviews.jsonl"),
            DatasetFormat::AmazonJsonl,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
