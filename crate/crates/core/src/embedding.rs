//! Pre-trained word-vector loading and the embedding table used by the
//! network's word channel. Vectors are loaded from file and frozen; stems
//! without a vector get a deterministic pseudo-embedding hashed from the
//! stem bytes, so every stem always has exactly one vector.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::corpus::{TokenSeq, Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::Lcg;

/// Word vectors as read from the interchange format: a `<count> <dim>`
/// header line, then `<word> <v1> ... <vdim>` per line.
#[derive(Debug)]
pub struct WordVectors {
    pub dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn parse(raw: &str) -> Result<Self> {
        let mut lines = raw.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty embeddings file".into()))?;
        let mut parts = header.split_whitespace();
        let count: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("embeddings header: bad count".into()))?;
        let dim: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("embeddings header: bad dim".into()))?;
        if dim == 0 {
            return Err(Error::Format("embeddings dim must be positive".into()));
        }
        let mut vectors = HashMap::with_capacity(count);
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields
                .next()
                .ok_or_else(|| Error::Format(format!("embeddings line {}: empty", lineno + 2)))?;
            let values: Vec<f64> = fields
                .map(|f| {
                    f.parse::<f64>().map_err(|_| {
                        Error::Format(format!("embeddings line {}: bad float {f:?}", lineno + 2))
                    })
                })
                .collect::<Result<_>>()?;
            if values.len() != dim {
                return Err(Error::Format(format!(
                    "embeddings line {}: expected {dim} floats, got {}",
                    lineno + 2,
                    values.len()
                )));
            }
            vectors.insert(word.to_string(), values);
        }
        Ok(WordVectors { dim, vectors })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(&raw)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Deterministic unit-norm pseudo-embedding for a stem with no loaded
/// vector: the stem bytes seed the generator, coordinates are drawn
/// uniformly from [-0.5, 0.5) and the result is normalized.
pub fn hashed_embedding(stem: &str, dim: usize) -> Vec<f64> {
    let mut rng = Lcg::from_bytes(stem.as_bytes());
    let mut v: Vec<f64> = (0..dim).map(|_| rng.uniform_in(-0.5, 0.5)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in &mut v {
            *x /= norm;
        }
    }
    v
}

/// Token name whose hashed vector backs the out-of-vocabulary row.
const OOV_TOKEN: &str = "<unk>";

/// Frozen embedding matrix, one row per vocabulary id. Row 0 (padding) is
/// all zeros and never updated.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub dim: usize,
    rows: Mat,
}

impl EmbeddingTable {
    /// Build the table for a vocabulary: loaded vector when available,
    /// hashed fallback otherwise.
    pub fn build(vocab: &Vocabulary, vectors: Option<&WordVectors>, dim: usize) -> Result<Self> {
        if let Some(v) = vectors {
            if v.dim != dim {
                return Err(Error::Shape(format!(
                    "embeddings dim {} does not match configured dim {dim}",
                    v.dim
                )));
            }
        }
        let mut rows = Mat::zeros(vocab.size(), dim);
        for (stem, id) in vocab.stems() {
            let row = rows.row_mut(id as usize);
            match vectors.and_then(|v| v.get(stem)) {
                Some(vec) => row.copy_from_slice(vec),
                None => row.copy_from_slice(&hashed_embedding(stem, dim)),
            }
        }
        rows.row_mut(vocab.oov_id() as usize)
            .copy_from_slice(&hashed_embedding(OOV_TOKEN, dim));
        Ok(EmbeddingTable { dim, rows })
    }

    pub fn row(&self, id: u32) -> &[f64] {
        self.rows.row(id as usize)
    }

    pub fn vocab_rows(&self) -> usize {
        self.rows.rows
    }

    /// Embed a token sequence as an L×dim matrix, truncating or
    /// zero-padding to exactly `len` rows.
    pub fn embed_seq(&self, seq: &TokenSeq, vocab: &Vocabulary, len: usize) -> Mat {
        let mut out = Mat::zeros(len, self.dim);
        for (t, token) in seq.tokens.iter().take(len).enumerate() {
            let id = vocab.id(&token.stem);
            if id != PAD_ID {
                out.row_mut(t).copy_from_slice(self.row(id));
            }
        }
        out
    }
}

/// Embedding lookup for one stem directly (clustering path): loaded
/// vector if present, hashed fallback otherwise.
pub fn stem_vector(stem: &str, vectors: Option<&WordVectors>, dim: usize) -> Vec<f64> {
    match vectors.and_then(|v| v.get(stem)) {
        Some(v) => v.to_vec(),
        None => hashed_embedding(stem, dim),
    }
}
