//! SMOTE oversampling of the minority polarity class.
//!
//! Synthetic samples are drawn on the segment between a minority sample
//! and one of its k nearest minority neighbors: `x' = x + δ·(x_nn − x)`
//! with δ uniform in [0,1). Base samples rotate round-robin through the
//! minority class; per synthetic the generator draws the neighbor choice
//! first, then δ.

use crate::corpus::{PolarityLabel, TokenSeq};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::Lcg;
use crate::tagger::{one_hot, PosTag, TAG_COUNT};

/// A fixed-dimension feature vector with its polarity label.
#[derive(Debug, Clone)]
pub struct FeatureSample {
    pub features: Vec<f64>,
    pub label: PolarityLabel,
    pub synthetic: bool,
}

/// How one synthetic sample was generated; indices refer to the original
/// sample list.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticTrace {
    pub base: usize,
    pub neighbor: usize,
    pub delta: f64,
}

#[derive(Debug)]
pub struct SmoteOutcome {
    /// Originals in input order, synthetics appended.
    pub samples: Vec<FeatureSample>,
    pub trace: Vec<SyntheticTrace>,
    /// Set when k was clamped to minority_size - 1.
    pub k_clamped: bool,
}

impl SmoteOutcome {
    pub fn synthetic_count(&self) -> usize {
        self.trace.len()
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k nearest neighbors of `of` among `indices` (excluding itself), by
/// Euclidean distance with ties broken by index.
pub fn nearest_neighbors(
    samples: &[FeatureSample],
    indices: &[usize],
    of: usize,
    k: usize,
) -> Vec<usize> {
    let mut dists: Vec<(f64, usize)> = indices
        .iter()
        .filter(|&&i| i != of)
        .map(|&i| {
            (
                squared_distance(&samples[i].features, &samples[of].features),
                i,
            )
        })
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    dists.into_iter().take(k).map(|(_, i)| i).collect()
}

/// Balance the two classes exactly by appending synthetic minority
/// samples. Originals are never modified.
pub fn smote(samples: &[FeatureSample], k: usize, seed: u64) -> Result<SmoteOutcome> {
    if k < 1 {
        return Err(Error::Domain("smote: k must be >= 1".into()));
    }
    let dim = samples.first().map(|s| s.features.len()).unwrap_or(0);
    for s in samples {
        if s.features.len() != dim {
            return Err(Error::Shape(
                "smote: inconsistent feature dimensions".into(),
            ));
        }
        if !s.features.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("smote: non-finite feature".into()));
        }
    }
    let negatives: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].label == PolarityLabel::Negative)
        .collect();
    let positives: Vec<usize> = (0..samples.len())
        .filter(|&i| samples[i].label == PolarityLabel::Positive)
        .collect();
    if negatives.is_empty() || positives.is_empty() {
        return Err(Error::Domain("smote: need both classes present".into()));
    }
    let (minority, majority) = if negatives.len() < positives.len() {
        (negatives, positives)
    } else if positives.len() < negatives.len() {
        (positives, negatives)
    } else {
        // Already balanced: nothing to do.
        return Ok(SmoteOutcome {
            samples: samples.to_vec(),
            trace: Vec::new(),
            k_clamped: false,
        });
    };
    if minority.len() < 2 {
        return Err(Error::Domain("insufficient minority samples".into()));
    }
    let k_clamped = k >= minority.len();
    let k_eff = k.min(minority.len() - 1);
    let label = samples[minority[0]].label;

    let neighbor_table: Vec<Vec<usize>> = minority
        .iter()
        .map(|&i| nearest_neighbors(samples, &minority, i, k_eff))
        .collect();

    let deficit = majority.len() - minority.len();
    let mut rng = Lcg::new(seed);
    let mut out = samples.to_vec();
    let mut trace = Vec::with_capacity(deficit);
    for t in 0..deficit {
        let slot = t % minority.len();
        let base = minority[slot];
        let neighbors = &neighbor_table[slot];
        let neighbor = neighbors[rng.below(neighbors.len())];
        let delta = rng.uniform();
        let features: Vec<f64> = samples[base]
            .features
            .iter()
            .zip(&samples[neighbor].features)
            .map(|(&x, &nn)| x + delta * (nn - x))
            .collect();
        out.push(FeatureSample {
            features,
            label,
            synthetic: true,
        });
        trace.push(SyntheticTrace {
            base,
            neighbor,
            delta,
        });
    }
    Ok(SmoteOutcome {
        samples: out,
        trace,
        k_clamped,
    })
}

/// Flatten a token sequence into the SMOTE feature space: the L×dim word
/// embedding matrix (padded/truncated to L rows) concatenated with the
/// L×45 POS one-hot matrix.
pub fn embed_for_smote(
    seq: &TokenSeq,
    tags: &[PosTag],
    table: &EmbeddingTable,
    vocab: &crate::corpus::Vocabulary,
    len: usize,
) -> Result<FeatureSample> {
    let label = seq.label.ok_or_else(|| {
        Error::Domain("embed_for_smote: sequence carries no polarity label".into())
    })?;
    let word = table.embed_seq(seq, vocab, len);
    let mut features = word.data;
    features.reserve(len * TAG_COUNT);
    for t in 0..len {
        if t < tags.len() && t < seq.tokens.len() {
            features.extend_from_slice(&one_hot(tags[t]));
        } else {
            features.extend_from_slice(&[0.0; TAG_COUNT]);
        }
    }
    Ok(FeatureSample {
        features,
        label,
        synthetic: false,
    })
}

/// Split a flattened feature vector back into its word and POS matrices
/// so synthetic samples can feed the convolution stage directly.
pub fn split_features(features: &[f64], len: usize, dim: usize) -> Result<(Mat, Mat)> {
    let expected = len * (dim + TAG_COUNT);
    if features.len() != expected {
        return Err(Error::Shape(format!(
            "feature vector length {} does not match L*(d+45) = {expected}",
            features.len()
        )));
    }
    let word = Mat::from_vec(len, dim, features[..len * dim].to_vec());
    let pos = Mat::from_vec(len, TAG_COUNT, features[len * dim..].to_vec());
    Ok((word, pos))
}
