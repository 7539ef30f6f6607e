//! Flat pipeline configuration: one JSON file, every default visible
//! here rather than scattered through the stages. The seed is mandatory;
//! everything else has a documented default.

use std::fs;
use std::path::{Path, PathBuf};

use crate::artifact::fnv1a_hex;
use crate::error::{Error, Result};

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    // inputs
    pub dataset: PathBuf,
    /// word-vector file in the `<count> <dim>` interchange format;
    /// missing stems fall back to hashed pseudo-embeddings
    #[serde(default)]
    pub embeddings: Option<PathBuf>,
    #[serde(default)]
    pub stopwords: Option<PathBuf>,
    #[serde(default)]
    pub contractions: Option<PathBuf>,
    #[serde(default)]
    pub opinion_lexicon: Option<PathBuf>,
    #[serde(default)]
    pub negations: Option<PathBuf>,
    #[serde(default)]
    pub tagger_lexicon: Option<PathBuf>,
    /// merged on top of the tagger lexicon when present
    #[serde(default)]
    pub tagger_overrides: Option<PathBuf>,
    /// aspect stems/phrases providing the weak gold BIO labels
    #[serde(default)]
    pub aspect_terms: Option<PathBuf>,
    pub out_dir: PathBuf,

    // reproducibility: no default on purpose
    pub seed: u64,

    // sequence/model geometry
    #[serde(default = "default_seq_len")]
    pub seq_len: usize,
    #[serde(default = "default_embed_dim")]
    pub embed_dim: usize,
    #[serde(default = "default_word_filters")]
    pub word_filters: usize,
    #[serde(default = "default_pos_filters")]
    pub pos_filters: usize,
    #[serde(default = "default_dropout")]
    pub dropout: f64,

    // training
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_min_count")]
    pub min_count: usize,

    // balancing
    #[serde(default = "default_smote_k")]
    pub smote_k: usize,

    // aspects
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_score_window")]
    pub score_window: usize,
    #[serde(default = "default_cp_rank")]
    pub cp_rank: usize,
    #[serde(default = "default_cp_iters")]
    pub cp_iters: usize,

    // recommender
    #[serde(default = "default_svd_rank")]
    pub svd_rank: usize,
    #[serde(default = "default_knn")]
    pub k_nn: usize,
    #[serde(default = "default_top_n")]
    pub top_n: usize,

    // evaluation
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
}

fn default_seq_len() -> usize {
    100
}
fn default_embed_dim() -> usize {
    300
}
fn default_word_filters() -> usize {
    128
}
fn default_pos_filters() -> usize {
    32
}
fn default_dropout() -> f64 {
    0.5
}
fn default_lr() -> f64 {
    1e-3
}
fn default_epochs() -> usize {
    30
}
fn default_batch_size() -> usize {
    32
}
fn default_lambda() -> f64 {
    1.0
}
fn default_min_count() -> usize {
    1
}
fn default_smote_k() -> usize {
    5
}
fn default_theta() -> f64 {
    0.6
}
fn default_alpha() -> f64 {
    0.5
}
fn default_score_window() -> usize {
    4
}
fn default_cp_rank() -> usize {
    3
}
fn default_cp_iters() -> usize {
    30
}
fn default_svd_rank() -> usize {
    20
}
fn default_knn() -> usize {
    30
}
fn default_top_n() -> usize {
    5
}
fn default_train_fraction() -> f64 {
    0.8
}

impl PipelineConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let config: PipelineConfig = serde_json::from_str(&raw)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(msg.to_string()))
            }
        };
        check(self.seq_len >= 1, "seq_len must be >= 1")?;
        check(self.embed_dim >= 1, "embed_dim must be >= 1")?;
        check(self.word_filters >= 1, "word_filters must be >= 1")?;
        check(self.pos_filters >= 1, "pos_filters must be >= 1")?;
        check(
            (0.0..1.0).contains(&self.dropout),
            "dropout must be in [0,1)",
        )?;
        check(
            self.lr >= 0.0 && self.lr.is_finite(),
            "lr must be finite and >= 0",
        )?;
        check(self.batch_size >= 1, "batch_size must be >= 1")?;
        check(self.lambda >= 0.0, "lambda must be >= 0")?;
        check(self.min_count >= 1, "min_count must be >= 1")?;
        check(self.smote_k >= 1, "smote_k must be >= 1")?;
        check(self.theta.is_finite(), "theta must be finite")?;
        check((0.0..=1.0).contains(&self.alpha), "alpha must be in [0,1]")?;
        check(self.cp_rank >= 1, "cp_rank must be >= 1")?;
        check(self.cp_iters >= 1, "cp_iters must be >= 1")?;
        check(self.svd_rank >= 1, "svd_rank must be >= 1")?;
        check(self.k_nn >= 1, "k_nn must be >= 1")?;
        check(
            self.train_fraction > 0.0 && self.train_fraction < 1.0,
            "train_fraction must be in (0,1)",
        )?;
        Ok(())
    }

    /// Hash of the canonical JSON form; embedded in every artifact.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        fnv1a_hex(canonical.as_bytes())
    }
}
