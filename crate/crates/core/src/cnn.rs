//! Two-channel convolutional network: a word-embedding channel and a POS
//! one-hot channel, each run through parallel same-padded filter banks of
//! widths 5 and 3. Per-token features from all four banks concatenate into
//! a shared representation feeding two heads:
//!
//!   - a token-level tag head (dense + softmax over B/I/O) for aspect
//!     extraction, taking the dropout-regularized features;
//!   - a review-level sentiment head (global max pool + dense + sigmoid)
//!     taking the pre-dropout features.
//!
//! Forward, backward, and the Adam trainer are hand-written; embeddings
//! are frozen inputs, so backward only produces parameter gradients.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::rng::Lcg;
use crate::tagger::TAG_COUNT;

/// Token-level aspect tag. Class order is fixed as (B, I, O).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum BioTag {
    B,
    I,
    O,
}

impl BioTag {
    pub fn index(self) -> usize {
        match self {
            BioTag::B => 0,
            BioTag::I => 1,
            BioTag::O => 2,
        }
    }

    pub fn from_index(i: usize) -> BioTag {
        match i {
            0 => BioTag::B,
            1 => BioTag::I,
            _ => BioTag::O,
        }
    }

    pub fn is_aspect(self) -> bool {
        !matches!(self, BioTag::O)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Same,
    Valid,
}

/// One bank of width-`width` filters over depth-`depth` input.
#[derive(Debug, Clone)]
pub struct ConvBlock {
    pub filters: usize,
    pub width: usize,
    pub depth: usize,
    /// filters × width × depth, row-major
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
    pub padding: Padding,
}

impl ConvBlock {
    pub fn zeros(filters: usize, width: usize, depth: usize, padding: Padding) -> Self {
        ConvBlock {
            filters,
            width,
            depth,
            kernels: vec![0.0; filters * width * depth],
            bias: vec![0.0; filters],
            padding,
        }
    }
}

fn conv1d_raw(
    input: &Mat,
    kernels: &[f64],
    bias: &[f64],
    filters: usize,
    width: usize,
    padding: Padding,
) -> Result<Mat> {
    let len = input.rows;
    let depth = input.cols;
    debug_assert_eq!(kernels.len(), filters * width * depth);
    let (out_len, offset) = match padding {
        Padding::Same => (len, (width - 1) / 2),
        Padding::Valid => {
            if len < width {
                return Err(Error::Shape(format!(
                    "valid convolution needs length >= width ({len} < {width})"
                )));
            }
            (len - width + 1, 0)
        }
    };
    let mut out = Mat::zeros(out_len, filters);
    for t in 0..out_len {
        for f in 0..filters {
            let mut acc = bias[f];
            for j in 0..width {
                let src = t + j;
                let src = match padding {
                    Padding::Same => {
                        if src < offset || src - offset >= len {
                            continue;
                        }
                        src - offset
                    }
                    Padding::Valid => src,
                };
                let krow = &kernels[(f * width + j) * depth..(f * width + j + 1) * depth];
                let irow = input.row(src);
                for (kv, iv) in krow.iter().zip(irow) {
                    acc += kv * iv;
                }
            }
            *out.at_mut(t, f) = acc;
        }
    }
    Ok(out)
}

/// Convolve and apply ReLU.
pub fn conv1d_forward(input: &Mat, block: &ConvBlock) -> Result<Mat> {
    if input.cols != block.depth {
        return Err(Error::Shape(format!(
            "conv input depth {} != block depth {}",
            input.cols, block.depth
        )));
    }
    if input.rows == 0 {
        return Err(Error::Shape("conv input must have length >= 1".into()));
    }
    let mut out = conv1d_raw(
        input,
        &block.kernels,
        &block.bias,
        block.filters,
        block.width,
        block.padding,
    )?;
    for v in &mut out.data {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(out)
}

/// Column-wise max with first-index tie breaking; argmax is kept for the
/// backward pass.
pub fn global_max_pool(features: &Mat) -> (Vec<f64>, Vec<usize>) {
    assert!(features.rows >= 1, "max pool needs at least one row");
    let mut values = features.row(0).to_vec();
    let mut argmax = vec![0usize; features.cols];
    for t in 1..features.rows {
        for (c, &v) in features.row(t).iter().enumerate() {
            if v > values[c] {
                values[c] = v;
                argmax[c] = t;
            }
        }
    }
    (values, argmax)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

const PROB_FLOOR: f64 = 1e-12;

fn ln_clamped(p: f64) -> f64 {
    p.max(PROB_FLOOR).ln()
}

/// Network hyperparameters. `widths` applies to both channels.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CnnConfig {
    pub embed_dim: usize,
    pub word_filters: usize,
    pub pos_filters: usize,
    pub widths: [usize; 2],
    pub dropout: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            embed_dim: 300,
            word_filters: 128,
            pos_filters: 32,
            widths: [5, 3],
            dropout: 0.5,
        }
    }
}

impl CnnConfig {
    /// Concatenated per-token feature width across all four banks.
    pub fn feature_width(&self) -> usize {
        2 * self.word_filters + 2 * self.pos_filters
    }
}

/// Named view into the flat parameter vector.
#[derive(Debug, Clone)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub range: Range<usize>,
}

/// All trainable parameters live in one flat vector; `tensors()` names
/// the slices. Input embeddings are not parameters.
#[derive(Debug, Clone)]
pub struct CnnModel {
    pub cfg: CnnConfig,
    pub theta: Vec<f64>,
}

impl CnnModel {
    pub fn tensors(&self) -> Vec<TensorSpec> {
        let c = &self.cfg;
        let mut specs = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: String, shape: Vec<usize>| {
            let len: usize = shape.iter().product();
            let spec = TensorSpec {
                name,
                shape,
                range: offset..offset + len,
            };
            offset += len;
            specs.push(spec);
        };
        for (b, &w) in c.widths.iter().enumerate() {
            push(
                format!("word_conv{b}.kernel"),
                vec![c.word_filters, w, c.embed_dim],
            );
            push(format!("word_conv{b}.bias"), vec![c.word_filters]);
        }
        for (b, &w) in c.widths.iter().enumerate() {
            push(
                format!("pos_conv{b}.kernel"),
                vec![c.pos_filters, w, TAG_COUNT],
            );
            push(format!("pos_conv{b}.bias"), vec![c.pos_filters]);
        }
        let fw = c.feature_width();
        push("tag_head.weight".into(), vec![fw, 3]);
        push("tag_head.bias".into(), vec![3]);
        push("sentiment_head.weight".into(), vec![fw]);
        push("sentiment_head.bias".into(), vec![1]);
        specs
    }

    pub fn param_count(&self) -> usize {
        self.tensors().last().map(|t| t.range.end).unwrap_or(0)
    }

    fn range(&self, name: &str) -> Range<usize> {
        self.tensors()
            .into_iter()
            .find(|t| t.name == name)
            .map(|t| t.range)
            .unwrap_or_else(|| panic!("unknown tensor {name}"))
    }

    pub fn slice(&self, name: &str) -> &[f64] {
        &self.theta[self.range(name)]
    }

    pub fn slice_mut(&mut self, name: &str) -> &mut [f64] {
        let r = self.range(name);
        &mut self.theta[r]
    }

    /// Zero-initialized model (useful for fixtures).
    pub fn zeros(cfg: CnnConfig) -> Self {
        let mut model = CnnModel {
            cfg,
            theta: Vec::new(),
        };
        let total = model.tensors().last().map(|t| t.range.end).unwrap_or(0);
        model.theta = vec![0.0; total];
        model
    }

    /// Seeded uniform init scaled per tensor fan-in.
    pub fn init(cfg: CnnConfig, seed: u64) -> Self {
        let mut model = Self::zeros(cfg);
        let mut rng = Lcg::new(seed);
        for spec in model.tensors() {
            let fan_in: usize = if spec.shape.len() > 1 {
                spec.shape[1..].iter().product::<usize>().max(1)
            } else {
                spec.shape[0].max(1)
            };
            let bound = if spec.name.ends_with(".bias") {
                0.0
            } else {
                (6.0 / fan_in as f64).sqrt()
            };
            for v in &mut model.theta[spec.range.clone()] {
                *v = rng.uniform_in(-bound, bound);
            }
        }
        model
    }

    fn block(&self, name: &str, width: usize, depth: usize, filters: usize) -> ConvBlock {
        ConvBlock {
            filters,
            width,
            depth,
            kernels: self.slice(&format!("{name}.kernel")).to_vec(),
            bias: self.slice(&format!("{name}.bias")).to_vec(),
            padding: Padding::Same,
        }
    }

    pub fn word_block(&self, idx: usize) -> ConvBlock {
        self.block(
            &format!("word_conv{idx}"),
            self.cfg.widths[idx],
            self.cfg.embed_dim,
            self.cfg.word_filters,
        )
    }

    pub fn pos_block(&self, idx: usize) -> ConvBlock {
        self.block(
            &format!("pos_conv{idx}"),
            self.cfg.widths[idx],
            TAG_COUNT,
            self.cfg.pos_filters,
        )
    }
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone)]
pub struct Cache {
    word: Mat,
    pos: Mat,
    /// pre-ReLU conv outputs: word banks then pos banks
    raw: [Mat; 4],
    /// L×W post-ReLU concatenated features (pre-dropout)
    h: Mat,
    /// dropout scale factors (0 or 1/(1-p)); None in eval mode
    mask: Option<Mat>,
    h_dropped: Mat,
    pooled: Vec<f64>,
    argmax: Vec<usize>,
    pub tag_logits: Mat,
}

#[derive(Debug, Clone)]
pub struct Forward {
    /// L×3 softmax rows over (B, I, O)
    pub tag_probs: Mat,
    pub sentiment_prob: f64,
    pub cache: Cache,
}

pub fn forward(
    model: &CnnModel,
    word: &Mat,
    pos: &Mat,
    train_mode: bool,
    mask_seed: u64,
) -> Result<Forward> {
    let cfg = &model.cfg;
    if word.cols != cfg.embed_dim {
        return Err(Error::Shape(format!(
            "word channel depth {} != embed dim {}",
            word.cols, cfg.embed_dim
        )));
    }
    if pos.cols != TAG_COUNT {
        return Err(Error::Shape(format!(
            "pos channel depth {} != {TAG_COUNT}",
            pos.cols
        )));
    }
    if word.rows != pos.rows || word.rows == 0 {
        return Err(Error::Shape(format!(
            "channel lengths differ or empty: word {} vs pos {}",
            word.rows, pos.rows
        )));
    }
    let len = word.rows;
    let fw = cfg.feature_width();

    let mut raw: Vec<Mat> = Vec::with_capacity(4);
    for idx in 0..2 {
        let b = model.word_block(idx);
        raw.push(conv1d_raw(
            word,
            &b.kernels,
            &b.bias,
            b.filters,
            b.width,
            Padding::Same,
        )?);
    }
    for idx in 0..2 {
        let b = model.pos_block(idx);
        raw.push(conv1d_raw(
            pos,
            &b.kernels,
            &b.bias,
            b.filters,
            b.width,
            Padding::Same,
        )?);
    }

    let mut h = Mat::zeros(len, fw);
    let mut col0 = 0usize;
    for block in &raw {
        for t in 0..len {
            for f in 0..block.cols {
                *h.at_mut(t, col0 + f) = block.at(t, f).max(0.0);
            }
        }
        col0 += block.cols;
    }

    let mask = if train_mode && cfg.dropout > 0.0 {
        let keep = 1.0 - cfg.dropout;
        let mut rng = Lcg::new(mask_seed);
        let mut m = Mat::zeros(len, fw);
        for v in &mut m.data {
            *v = if rng.uniform() >= cfg.dropout {
                1.0 / keep
            } else {
                0.0
            };
        }
        Some(m)
    } else {
        None
    };
    let h_dropped = match &mask {
        Some(m) => {
            let mut hd = h.clone();
            for (v, s) in hd.data.iter_mut().zip(&m.data) {
                *v *= s;
            }
            hd
        }
        None => h.clone(),
    };

    // Sentiment pools the pre-dropout features.
    let (pooled, argmax) = global_max_pool(&h);

    let tag_w = model.slice("tag_head.weight");
    let tag_b = model.slice("tag_head.bias");
    let mut tag_logits = Mat::zeros(len, 3);
    for t in 0..len {
        let hrow = h_dropped.row(t);
        for c in 0..3 {
            let mut acc = tag_b[c];
            for (w, &hv) in hrow.iter().enumerate() {
                acc += tag_w[w * 3 + c] * hv;
            }
            *tag_logits.at_mut(t, c) = acc;
        }
    }
    let mut tag_probs = Mat::zeros(len, 3);
    for t in 0..len {
        let row = tag_logits.row(t);
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| (x - m).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for c in 0..3 {
            *tag_probs.at_mut(t, c) = exps[c] / sum;
        }
    }

    let sent_w = model.slice("sentiment_head.weight");
    let sent_b = model.slice("sentiment_head.bias")[0];
    let sent_logit = sent_b + pooled.iter().zip(sent_w).map(|(p, w)| p * w).sum::<f64>();
    let sentiment_prob = sigmoid(sent_logit);

    Ok(Forward {
        tag_probs,
        sentiment_prob,
        cache: Cache {
            word: word.clone(),
            pos: pos.clone(),
            raw: [
                raw[0].clone(),
                raw[1].clone(),
                raw[2].clone(),
                raw[3].clone(),
            ],
            h,
            mask,
            h_dropped,
            pooled,
            argmax,
            tag_logits,
        },
    })
}

/// Mean per-token cross-entropy over (B, I, O) plus `lambda` times the
/// sentiment binary cross-entropy. SMOTE-synthetic samples carry no token
/// alignment, so their tag term is skipped.
pub fn loss(
    tag_probs: &Mat,
    gold_tags: Option<&[BioTag]>,
    sentiment_prob: f64,
    gold_label: f64,
    lambda: f64,
) -> f64 {
    let mut total = 0.0;
    if let Some(gold) = gold_tags {
        assert_eq!(gold.len(), tag_probs.rows, "gold tags misaligned");
        let mut ce = 0.0;
        for (t, &g) in gold.iter().enumerate() {
            ce -= ln_clamped(tag_probs.at(t, g.index()));
        }
        total += ce / gold.len() as f64;
    }
    let p = sentiment_prob;
    let bce = -(gold_label * ln_clamped(p) + (1.0 - gold_label) * ln_clamped(1.0 - p));
    total + lambda * bce
}

/// Analytic gradients for every parameter, flat like `theta`. Embedding
/// inputs are frozen, so no input gradients exist.
pub fn backward(
    model: &CnnModel,
    fwd: &Forward,
    gold_tags: Option<&[BioTag]>,
    gold_label: f64,
    lambda: f64,
) -> Vec<f64> {
    let cfg = &model.cfg;
    let cache = &fwd.cache;
    let len = cache.h.rows;
    let fw = cfg.feature_width();
    let mut grad = vec![0.0; model.param_count()];

    // Tag head.
    let mut d_h = Mat::zeros(len, fw);
    if let Some(gold) = gold_tags {
        let inv_len = 1.0 / len as f64;
        let mut d_logits = Mat::zeros(len, 3);
        for t in 0..len {
            for c in 0..3 {
                let y = if gold[t].index() == c { 1.0 } else { 0.0 };
                *d_logits.at_mut(t, c) = (fwd.tag_probs.at(t, c) - y) * inv_len;
            }
        }
        let tag_w = model.slice("tag_head.weight");
        {
            let specs = model.tensors();
            let wr = specs.iter().find(|s| s.name == "tag_head.weight").unwrap();
            let br = specs.iter().find(|s| s.name == "tag_head.bias").unwrap();
            for t in 0..len {
                let hrow = cache.h_dropped.row(t);
                let drow = d_logits.row(t);
                for (w, &hv) in hrow.iter().enumerate() {
                    for (c, &dv) in drow.iter().enumerate() {
                        grad[wr.range.start + w * 3 + c] += hv * dv;
                    }
                }
                for (c, &dv) in drow.iter().enumerate() {
                    grad[br.range.start + c] += dv;
                }
            }
        }
        // Back through the dense layer and dropout into the features.
        for t in 0..len {
            let drow = d_logits.row(t);
            for w in 0..fw {
                let mut acc = 0.0;
                for (c, &dv) in drow.iter().enumerate() {
                    acc += tag_w[w * 3 + c] * dv;
                }
                let scale = cache.mask.as_ref().map(|m| m.at(t, w)).unwrap_or(1.0);
                *d_h.at_mut(t, w) += acc * scale;
            }
        }
    }

    // Sentiment head (pre-dropout features through the max pool).
    let d_sent_logit = lambda * (fwd.sentiment_prob - gold_label);
    {
        let specs = model.tensors();
        let wr = specs
            .iter()
            .find(|s| s.name == "sentiment_head.weight")
            .unwrap();
        let br = specs
            .iter()
            .find(|s| s.name == "sentiment_head.bias")
            .unwrap();
        for (w, &p) in cache.pooled.iter().enumerate() {
            grad[wr.range.start + w] += d_sent_logit * p;
        }
        grad[br.range.start] += d_sent_logit;
        let sent_w = model.slice("sentiment_head.weight");
        for w in 0..fw {
            *d_h.at_mut(cache.argmax[w], w) += d_sent_logit * sent_w[w];
        }
    }

    // Split the feature gradient per bank, gate by ReLU, accumulate conv
    // parameter gradients.
    let bank_meta: [(String, usize, usize, &Mat); 4] = [
        (
            "word_conv0".to_string(),
            cfg.widths[0],
            cfg.word_filters,
            &cache.word,
        ),
        (
            "word_conv1".to_string(),
            cfg.widths[1],
            cfg.word_filters,
            &cache.word,
        ),
        (
            "pos_conv0".to_string(),
            cfg.widths[0],
            cfg.pos_filters,
            &cache.pos,
        ),
        (
            "pos_conv1".to_string(),
            cfg.widths[1],
            cfg.pos_filters,
            &cache.pos,
        ),
    ];
    let specs = model.tensors();
    let mut col0 = 0usize;
    for (bank, (name, width, filters, input)) in bank_meta.iter().enumerate() {
        let depth = input.cols;
        let offset = (width - 1) / 2;
        let kr = specs
            .iter()
            .find(|s| s.name == format!("{name}.kernel"))
            .unwrap();
        let br = specs
            .iter()
            .find(|s| s.name == format!("{name}.bias"))
            .unwrap();
        for t in 0..len {
            for f in 0..*filters {
                if cache.raw[bank].at(t, f) <= 0.0 {
                    continue;
                }
                let dv = d_h.at(t, col0 + f);
                if dv == 0.0 {
                    continue;
                }
                grad[br.range.start + f] += dv;
                for j in 0..*width {
                    let src = t + j;
                    if src < offset || src - offset >= len {
                        continue;
                    }
                    let irow = input.row(src - offset);
                    let kbase = kr.range.start + (f * width + j) * depth;
                    for (c, &iv) in irow.iter().enumerate() {
                        grad[kbase + c] += dv * iv;
                    }
                }
            }
        }
        col0 += filters;
    }
    grad
}

#[derive(Debug, Clone)]
pub struct TrainSample {
    pub word: Mat,
    pub pos: Mat,
    /// None for SMOTE-synthetic samples.
    pub tags: Option<Vec<BioTag>>,
    /// 0.0 negative, 1.0 positive
    pub label: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            batch_size: 32,
            lr: 1e-3,
            lambda: 1.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct TrainReport {
    pub epoch_loss: Vec<f64>,
    pub steps: usize,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Mini-batch Adam over seeded shuffles. Deterministic given the seed:
/// single-threaded with a fixed accumulation order.
pub fn train(
    model: &mut CnnModel,
    data: &[TrainSample],
    opts: &TrainOptions,
) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Domain("train: empty dataset".into()));
    }
    if opts.batch_size == 0 {
        return Err(Error::Domain("train: batch_size must be >= 1".into()));
    }
    let n_params = model.param_count();
    let mut m = vec![0.0; n_params];
    let mut v = vec![0.0; n_params];
    let mut step = 0usize;
    let mut rng = Lcg::new(opts.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_loss = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        for batch in order.chunks(opts.batch_size) {
            let mut grad_acc = vec![0.0; n_params];
            for &idx in batch {
                let sample = &data[idx];
                let mask_seed = rng.next_u64();
                let fwd = forward(model, &sample.word, &sample.pos, true, mask_seed)?;
                let sample_loss = loss(
                    &fwd.tag_probs,
                    sample.tags.as_deref(),
                    fwd.sentiment_prob,
                    sample.label,
                    opts.lambda,
                );
                if !sample_loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "non-finite loss at epoch {epoch}, sample {idx}"
                    )));
                }
                loss_sum += sample_loss;
                let grad = backward(
                    model,
                    &fwd,
                    sample.tags.as_deref(),
                    sample.label,
                    opts.lambda,
                );
                for (a, g) in grad_acc.iter_mut().zip(&grad) {
                    *a += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(step as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(step as i32);
            for i in 0..n_params {
                let g = grad_acc[i] * scale;
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * g;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                model.theta[i] -= opts.lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
            }
        }
        epoch_loss.push(loss_sum / data.len() as f64);
    }
    Ok(TrainReport {
        epoch_loss,
        steps: step,
    })
}

/// Eval-mode prediction: BIO tag per token plus the sentiment probability.
pub fn predict(model: &CnnModel, word: &Mat, pos: &Mat) -> Result<(Vec<BioTag>, f64)> {
    let fwd = forward(model, word, pos, false, 0)?;
    let tags = (0..fwd.tag_probs.rows)
        .map(|t| {
            let row = fwd.tag_probs.row(t);
            let mut best = 0usize;
            for c in 1..3 {
                if row[c] > row[best] {
                    best = c;
                }
            }
            BioTag::from_index(best)
        })
        .collect();
    Ok((tags, fwd.sentiment_prob))
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub worst_index: Option<usize>,
    pub worst_tensor: Option<String>,
    pub checked: usize,
    pub failures: usize,
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn loss_at(
    model: &mut CnnModel,
    sample: &TrainSample,
    lambda: f64,
    train_mode: bool,
    mask_seed: u64,
) -> Result<f64> {
    let fwd = forward(model, &sample.word, &sample.pos, train_mode, mask_seed)?;
    Ok(loss(
        &fwd.tag_probs,
        sample.tags.as_deref(),
        fwd.sentiment_prob,
        sample.label,
        lambda,
    ))
}

/// Compare a provided analytic gradient against central finite differences
/// on the given parameter indices.
pub fn compare_gradients(
    model: &CnnModel,
    sample: &TrainSample,
    epsilon: f64,
    lambda: f64,
    analytic: &[f64],
    indices: &[usize],
    tolerance: f64,
    train_mode: bool,
    mask_seed: u64,
) -> Result<GradCheckReport> {
    let mut probe = model.clone();
    let tensors = model.tensors();
    let tensor_of = |i: usize| {
        tensors
            .iter()
            .find(|t| t.range.contains(&i))
            .map(|t| t.name.clone())
    };
    let mut report = GradCheckReport {
        max_rel_err: 0.0,
        worst_index: None,
        worst_tensor: None,
        checked: 0,
        failures: 0,
    };
    for &i in indices {
        let saved = probe.theta[i];
        probe.theta[i] = saved + epsilon;
        let up = loss_at(&mut probe, sample, lambda, train_mode, mask_seed)?;
        probe.theta[i] = saved - epsilon;
        let down = loss_at(&mut probe, sample, lambda, train_mode, mask_seed)?;
        probe.theta[i] = saved;
        let numeric = (up - down) / (2.0 * epsilon);
        let err = rel_err(analytic[i], numeric);
        report.checked += 1;
        if err > report.max_rel_err {
            report.max_rel_err = err;
            report.worst_index = Some(i);
            report.worst_tensor = tensor_of(i);
        }
        if err > tolerance {
            report.failures += 1;
        }
    }
    Ok(report)
}

/// Check every parameter's analytic gradient against central finite
/// differences (a seeded subsample above 10k parameters). Failures are
/// reported, never thrown.
pub fn gradient_check(
    model: &CnnModel,
    sample: &TrainSample,
    epsilon: f64,
    tolerance: f64,
) -> Result<GradCheckReport> {
    let lambda = 1.0;
    let fwd = forward(model, &sample.word, &sample.pos, false, 0)?;
    let analytic = backward(model, &fwd, sample.tags.as_deref(), sample.label, lambda);
    let n = model.param_count();
    let indices: Vec<usize> = if n > 10_000 {
        let mut rng = Lcg::new(0x5eed);
        let mut picked: Vec<usize> = (0..10_000).map(|_| rng.below(n)).collect();
        picked.sort_unstable();
        picked.dedup();
        picked
    } else {
        (0..n).collect()
    };
    compare_gradients(
        model, sample, epsilon, lambda, &analytic, &indices, tolerance, false, 0,
    )
}
