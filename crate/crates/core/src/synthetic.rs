//! Seeded synthetic data: a planted-aspect review corpus with a known
//! aspect vocabulary and opinion words, matching word vectors with a
//! built-in cluster structure, and a low-rank rating matrix. Everything
//! is deterministic per seed so fixtures never need to be large or
//! checked in.

use std::fs;
use std::path::Path;

use crate::corpus::{stable_stem, ReviewRecord};
use crate::error::{Error, Result};
use crate::recommend::RatingTriple;
use crate::rng::Lcg;

/// Aspect surfaces grouped by embedding similarity; group index drives
/// the generated word vectors so clustering has real structure.
const ASPECT_GROUPS: [&[&str]; 4] = [
    &["battery", "cable", "charger"],
    &["screen", "camera", "lens"],
    &["sound", "speaker"],
    &["price", "button", "strap"],
];

/// One multi-token aspect phrase exercises I tags.
const ASPECT_PHRASE: [&str; 2] = ["battery", "life"];

const POSITIVE_OPINIONS: [&str; 8] = [
    "great",
    "excellent",
    "amazing",
    "perfect",
    "wonderful",
    "fantastic",
    "solid",
    "sturdy",
];
const NEGATIVE_OPINIONS: [&str; 8] = [
    "terrible", "awful", "horrible", "bad", "poor", "broken", "useless", "flimsy",
];

const FILLERS: [&str; 16] = [
    "item",
    "arrived",
    "box",
    "ordered",
    "package",
    "delivery",
    "yesterday",
    "unit",
    "device",
    "product",
    "model",
    "version",
    "edition",
    "bought",
    "week",
    "store",
];

#[derive(Debug)]
pub struct SyntheticCorpus {
    pub records: Vec<ReviewRecord>,
    /// aspect term lines for the weak-gold matcher (stems, phrases
    /// space-separated)
    pub aspect_terms: Vec<String>,
    /// (stem, embedding group) for every word the corpus can produce
    pub stem_groups: Vec<(String, usize)>,
}

fn all_aspects() -> Vec<&'static str> {
    ASPECT_GROUPS
        .iter()
        .flat_map(|g| g.iter().copied())
        .collect()
}

/// Generate `n` reviews with planted aspects. Ratings come from latent
/// item quality and user strictness, skewed positive so the polarity
/// classes are imbalanced and SMOTE has work to do; review text polarity
/// follows the rating.
pub fn planted_review_corpus(n: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = Lcg::new(seed);
    let aspects = all_aspects();
    let n_users = (n / 8).max(4);
    let n_items = (n / 12).max(3);
    let item_quality: Vec<f64> = (0..n_items).map(|_| rng.uniform_in(-1.4, 1.2)).collect();
    let user_strictness: Vec<f64> = (0..n_users).map(|_| rng.uniform_in(-0.4, 0.4)).collect();

    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let user = rng.below(n_users);
        let item = rng.below(n_items);
        let propensity =
            3.45 + 1.3 * item_quality[item] - user_strictness[user] + rng.gaussian() * 0.4;
        let rating = propensity.round().clamp(1.0, 5.0);
        let positive = rating >= 3.0; // three-star text leans mildly positive
        let opinions: &[&str] = if positive {
            &POSITIVE_OPINIONS
        } else {
            &NEGATIVE_OPINIONS
        };

        let mut words: Vec<String> = Vec::new();
        let n_mentions = 1 + rng.below(3);
        for m in 0..n_mentions {
            for _ in 0..rng.below(3) {
                words.push(FILLERS[rng.below(FILLERS.len())].to_string());
            }
            words.push(opinions[rng.below(opinions.len())].to_string());
            // One in six mentions uses the two-token phrase.
            if m == 0 && rng.below(6) == 0 {
                words.push(ASPECT_PHRASE[0].to_string());
                words.push(ASPECT_PHRASE[1].to_string());
            } else {
                words.push(aspects[rng.below(aspects.len())].to_string());
            }
            for _ in 0..rng.below(2) {
                words.push(FILLERS[rng.below(FILLERS.len())].to_string());
            }
        }
        let mut text = words.join(" ");
        // Exercise the normalization chain on a slice of the corpus.
        match rng.below(6) {
            0 => text = format!("<b>{text}</b>"),
            1 => text = format!("{text} {} stars", if positive { 5 } else { 2 }),
            2 => text = format!("I'm sure: {text}"),
            _ => {}
        }
        records.push(ReviewRecord {
            user_id: format!("user{user:03}"),
            item_id: format!("item{item:03}"),
            rating,
            text,
            category: None,
        });
    }

    let mut aspect_terms: Vec<String> = aspects.iter().map(|a| stable_stem(a)).collect();
    aspect_terms.push(
        ASPECT_PHRASE
            .iter()
            .map(|w| stable_stem(w))
            .collect::<Vec<_>>()
            .join(" "),
    );

    let mut stem_groups: Vec<(String, usize)> = Vec::new();
    for (group, members) in ASPECT_GROUPS.iter().enumerate() {
        for m in *members {
            stem_groups.push((stable_stem(m), group));
        }
    }
    stem_groups.push((stable_stem(ASPECT_PHRASE[1]), ASPECT_GROUPS.len()));
    // Opinions and fillers land in per-word singleton groups so they stay
    // far from the aspect clusters.
    let mut next_group = ASPECT_GROUPS.len() + 1;
    for w in POSITIVE_OPINIONS
        .iter()
        .chain(&NEGATIVE_OPINIONS)
        .chain(&FILLERS)
        .chain(["stars", "sure", "i", "am"].iter())
    {
        stem_groups.push((stable_stem(w), next_group));
        next_group += 1;
    }
    stem_groups.sort();
    stem_groups.dedup();

    SyntheticCorpus {
        records,
        aspect_terms,
        stem_groups,
    }
}

/// Word vectors for every corpus stem in the interchange format: a unit
/// group-direction vector plus small per-stem noise, so same-group stems
/// sit at cosine >= ~0.9 and cross-group stems near 0.
pub fn word_vectors_text(corpus: &SyntheticCorpus, dim: usize, seed: u64) -> String {
    let n_groups = corpus
        .stem_groups
        .iter()
        .map(|&(_, g)| g + 1)
        .max()
        .unwrap_or(1);
    let mut rng = Lcg::new(seed);
    let mut bases: Vec<Vec<f64>> = Vec::with_capacity(n_groups);
    for _ in 0..n_groups {
        let v: Vec<f64> = (0..dim).map(|_| rng.gaussian()).collect();
        bases.push(normalized(v));
    }
    let mut lines = vec![format!("{} {dim}", corpus.stem_groups.len())];
    for (stem, group) in &corpus.stem_groups {
        let noise: Vec<f64> = (0..dim).map(|_| rng.gaussian() * 0.15).collect();
        let v: Vec<f64> = bases[*group]
            .iter()
            .zip(&noise)
            .map(|(b, n)| b + n)
            .collect();
        let v = normalized(v);
        let coords: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
        lines.push(format!("{stem} {}", coords.join(" ")));
    }
    lines.join("\n") + "\n"
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.into_iter().map(|x| x / norm).collect()
    } else {
        v
    }
}

/// JSONL dump of the corpus in the dataset interchange schema.
pub fn reviews_jsonl(records: &[ReviewRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let line = serde_json::json!({
            "reviewerID": r.user_id,
            "asin": r.item_id,
            "overall": r.rating,
            "reviewText": r.text,
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Exactly rank-3 generative ratings `r = c_i + a_u + d_u * e_i` plus
/// Gaussian noise, clamped to [1, 5]; each cell is observed independently
/// with probability `density`. User spread dominates item spread so the
/// structure is recoverable from a handful of observations per user.
pub fn rank3_rating_triples(
    n_users: usize,
    n_items: usize,
    density: f64,
    noise_sigma: f64,
    seed: u64,
) -> Vec<RatingTriple> {
    let mut rng = Lcg::new(seed);
    let a: Vec<f64> = (0..n_users).map(|_| rng.uniform_in(-0.7, 0.7)).collect();
    let d: Vec<f64> = (0..n_users).map(|_| rng.uniform_in(-0.3, 0.3)).collect();
    let c: Vec<f64> = (0..n_items)
        .map(|_| 3.3 + rng.uniform_in(-0.15, 0.15))
        .collect();
    let e: Vec<f64> = (0..n_items).map(|_| rng.uniform_in(-0.3, 0.3)).collect();
    let mut triples = Vec::new();
    for u in 0..n_users {
        for i in 0..n_items {
            if rng.uniform() >= density {
                continue;
            }
            let value = c[i] + a[u] + d[u] * e[i] + rng.gaussian() * noise_sigma;
            triples.push(RatingTriple {
                user: format!("u{u:04}"),
                item: format!("i{i:04}"),
                rating: value.clamp(1.0, 5.0),
            });
        }
    }
    triples
}

/// Write the demo fixture set: reviews, word vectors, aspect terms, and
/// a ready-to-run pipeline config. The config refers to the files via
/// `config_prefix` (keep it relative so the fixtures stay portable).
pub fn write_fixture_set(
    dir: &Path,
    config_prefix: &Path,
    n_reviews: usize,
    dim: usize,
    seed: u64,
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let corpus = planted_review_corpus(n_reviews, seed);
    let write = |name: &str, content: String| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))
    };
    write("synthetic_reviews.jsonl", reviews_jsonl(&corpus.records))?;
    write(
        "embeddings.txt",
        word_vectors_text(&corpus, dim, seed ^ 0x9e3779b97f4a7c15),
    )?;
    write("aspect_terms.txt", corpus.aspect_terms.join("\n") + "\n")?;
    let config = serde_json::json!({
        "dataset": config_prefix.join("synthetic_reviews.jsonl"),
        "embeddings": config_prefix.join("embeddings.txt"),
        "aspect_terms": config_prefix.join("aspect_terms.txt"),
        "out_dir": config_prefix.join("out"),
        "seed": seed,
        "seq_len": 16,
        "embed_dim": dim,
        "word_filters": 8,
        "pos_filters": 4,
        "epochs": 60,
        "batch_size": 16,
        "svd_rank": 8,
        "min_count": 1
    });
    write(
        "config.json",
        serde_json::to_string_pretty(&config).expect("json") + "\n",
    )?;
    Ok(())
}
