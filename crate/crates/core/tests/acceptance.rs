//! Acceptance suite: one test per shipping criterion, each printing a
//! PASS line with its measured numbers (run with `-- --nocapture` to see
//! them). Tolerances are pinned here, not configurable.

use std::collections::BTreeSet;
use std::time::Instant;

use aspectrec::balance::{nearest_neighbors, smote, FeatureSample};
use aspectrec::cnn::{self, BioTag, CnnConfig, CnnModel, TrainOptions, TrainSample};
use aspectrec::config::PipelineConfig;
use aspectrec::corpus::{
    build_vocabulary, normalize, ContractionTable, PolarityLabel, StopwordList, TokenSeq,
};
use aspectrec::embedding::{EmbeddingTable, WordVectors};
use aspectrec::eval::{self, EvalPair};
use aspectrec::linalg::Mat;
use aspectrec::pipeline::{self, gold_tags};
use aspectrec::recommend::{baseline_mf, fit_rating_model, MfOptions, RatingMatrix};
use aspectrec::rng::Lcg;
use aspectrec::svd::{jacobi_svd, randomized_svd};
use aspectrec::synthetic;
use aspectrec::tagger::{tag_sequence, TagLexicon, TAG_COUNT};
use aspectrec::tensor::{cp_weights, AspectTensor};

// ----------------------------------------------------------------------
// criterion 1: gradient fidelity
// ----------------------------------------------------------------------

#[test]
fn criterion_1_gradient_fidelity() {
    let start = Instant::now();
    let cfg = CnnConfig {
        embed_dim: 8,
        word_filters: 8,
        pos_filters: 4,
        widths: [5, 3],
        dropout: 0.5,
    };
    let mut model = CnnModel::zeros(cfg);
    let mut rng = Lcg::new(0xACCE97);
    for v in &mut model.theta {
        *v = rng.uniform_in(-0.4, 0.4);
    }
    let len = 12;
    let mut word = Mat::zeros(len, 8);
    for v in &mut word.data {
        *v = rng.uniform_in(-1.0, 1.0);
    }
    let mut pos = Mat::zeros(len, TAG_COUNT);
    for t in 0..len {
        let idx = rng.below(TAG_COUNT);
        *pos.at_mut(t, idx) = 1.0;
    }
    let tags: Vec<BioTag> = (0..len).map(|_| BioTag::from_index(rng.below(3))).collect();
    let sample = TrainSample {
        word,
        pos,
        tags: Some(tags),
        label: 1.0,
    };

    let report = cnn::gradient_check(&model, &sample, 1e-5, 1e-4).expect("gradient check runs");
    let elapsed = start.elapsed();
    assert_eq!(
        report.checked,
        model.param_count(),
        "all parameters checked"
    );
    assert!(
        report.max_rel_err <= 1e-4,
        "FAIL criterion 1: max rel err {} at {:?}",
        report.max_rel_err,
        report.worst_tensor
    );
    assert!(
        elapsed.as_secs() < 60,
        "FAIL criterion 1: took {elapsed:?} (limit 60 s)"
    );
    println!(
        "PASS criterion 1 (gradient fidelity): {} params, max rel err {:.3e}, {:.2?}",
        report.checked, report.max_rel_err, elapsed
    );
}

// ----------------------------------------------------------------------
// criterion 2: overfit sanity
// ----------------------------------------------------------------------

struct AssembledSample {
    train: TrainSample,
    n_tokens: usize,
    gold: Vec<BioTag>,
    label: f64,
}

/// Normalize/tag/weak-label a planted corpus into network inputs.
fn assemble_samples(
    n_reviews: usize,
    n_labeled: usize,
    seq_len: usize,
    dim: usize,
    seed: u64,
) -> Vec<AssembledSample> {
    let corpus = synthetic::planted_review_corpus(n_reviews, seed);
    let vectors =
        WordVectors::parse(&synthetic::word_vectors_text(&corpus, dim, seed ^ 0xABCD)).unwrap();
    let stopwords = StopwordList::default_list();
    let contractions = ContractionTable::default_table();
    let tag_lexicon = TagLexicon::default_lexicon();
    let terms: Vec<Vec<String>> = corpus
        .aspect_terms
        .iter()
        .map(|t| t.split_whitespace().map(str::to_string).collect())
        .collect();

    let mut seqs: Vec<(TokenSeq, Vec<aspectrec::tagger::PosTag>, Vec<BioTag>, f64)> = Vec::new();
    for record in &corpus.records {
        let label = match aspectrec::corpus::derive_label(record.rating).unwrap() {
            Some(PolarityLabel::Positive) => 1.0,
            Some(PolarityLabel::Negative) => 0.0,
            None => continue,
        };
        let tokens = normalize(&record.text, &stopwords, &contractions);
        if tokens.is_empty() {
            continue;
        }
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let pos = tag_sequence(&surfaces, &tag_lexicon);
        let stems: Vec<&str> = tokens.iter().map(|t| t.stem.as_str()).collect();
        let gold = gold_tags(&stems, &terms);
        let seq = TokenSeq {
            tokens,
            label: None,
            user_id: record.user_id.clone(),
            item_id: record.item_id.clone(),
        };
        seqs.push((seq, pos, gold, label));
        if seqs.len() == n_labeled {
            break;
        }
    }
    assert_eq!(seqs.len(), n_labeled, "corpus large enough");

    let vocab = build_vocabulary(
        &seqs
            .iter()
            .map(|(s, _, _, _)| s.clone())
            .collect::<Vec<_>>(),
        1,
    )
    .unwrap();
    let table = EmbeddingTable::build(&vocab, Some(&vectors), dim).unwrap();

    seqs.into_iter()
        .map(|(seq, pos, gold, label)| {
            let n_tokens = seq.tokens.len().min(seq_len);
            let word = table.embed_seq(&seq, &vocab, seq_len);
            let mut pos_mat = Mat::zeros(seq_len, TAG_COUNT);
            for (t, tag) in pos.iter().enumerate().take(seq_len) {
                *pos_mat.at_mut(t, tag.index()) = 1.0;
            }
            let mut padded_gold = gold.clone();
            padded_gold.truncate(seq_len);
            padded_gold.resize(seq_len, BioTag::O);
            AssembledSample {
                train: TrainSample {
                    word,
                    pos: pos_mat,
                    tags: Some(padded_gold),
                    label,
                },
                n_tokens,
                gold: gold.into_iter().take(seq_len).collect(),
                label,
            }
        })
        .collect()
}

#[test]
fn criterion_2_overfit_sanity() {
    let start = Instant::now();
    let seq_len = 16;
    let dim = 16;
    let samples = assemble_samples(110, 64, seq_len, dim, 0xBEEF);

    let cfg = CnnConfig {
        embed_dim: dim,
        word_filters: 8,
        pos_filters: 4,
        widths: [5, 3],
        dropout: 0.5,
    };
    let mut model = CnnModel::init(cfg, 7);
    let train_set: Vec<TrainSample> = samples.iter().map(|s| s.train.clone()).collect();
    let opts = TrainOptions {
        epochs: 200,
        batch_size: 16,
        lr: 1e-3,
        lambda: 1.0,
        seed: 7,
    };
    cnn::train(&mut model, &train_set, &opts).unwrap();

    let mut tag_hits = 0usize;
    let mut tag_total = 0usize;
    let mut label_hits = 0usize;
    for s in &samples {
        let (tags, sentiment) = cnn::predict(&model, &s.train.word, &s.train.pos).unwrap();
        for t in 0..s.n_tokens {
            tag_total += 1;
            if tags[t] == s.gold[t] {
                tag_hits += 1;
            }
        }
        let predicted = if sentiment >= 0.5 { 1.0 } else { 0.0 };
        if predicted == s.label {
            label_hits += 1;
        }
    }
    let tag_acc = tag_hits as f64 / tag_total as f64;
    let sent_acc = label_hits as f64 / samples.len() as f64;
    let elapsed = start.elapsed();
    assert!(
        tag_acc >= 0.95,
        "FAIL criterion 2: token-tag accuracy {tag_acc:.4} < 0.95"
    );
    assert!(
        sent_acc >= 0.95,
        "FAIL criterion 2: sentiment accuracy {sent_acc:.4} < 0.95"
    );
    assert!(
        elapsed.as_secs() < 300,
        "FAIL criterion 2: took {elapsed:?} (limit 5 min)"
    );
    println!(
        "PASS criterion 2 (overfit sanity): token-tag acc {tag_acc:.4}, sentiment acc {sent_acc:.4}, {elapsed:.2?}"
    );
}

// ----------------------------------------------------------------------
// criterion 3: SMOTE correctness
// ----------------------------------------------------------------------

#[test]
fn criterion_3_smote_correctness() {
    let start = Instant::now();
    let mut rng = Lcg::new(0x5A05);
    let n = 200;
    let dim = 6;
    let samples: Vec<FeatureSample> = (0..n)
        .map(|i| FeatureSample {
            features: (0..dim).map(|_| rng.uniform_in(-3.0, 3.0)).collect(),
            label: if i < 60 {
                PolarityLabel::Negative
            } else {
                PolarityLabel::Positive
            },
            synthetic: false,
        })
        .collect();

    let out = smote(&samples, 5, 42).unwrap();

    // exact balance
    let negatives = out
        .samples
        .iter()
        .filter(|s| s.label == PolarityLabel::Negative)
        .count();
    let positives = out.samples.len() - negatives;
    assert_eq!(negatives, positives, "FAIL criterion 3: classes not equal");
    assert_eq!(out.synthetic_count(), 80);

    // every synthetic on its base-neighbor segment within 1e-9
    for (synth, trace) in out.samples[n..].iter().zip(&out.trace) {
        let base = &samples[trace.base].features;
        let neighbor = &samples[trace.neighbor].features;
        let mut err = 0.0f64;
        for ((s, b), nn) in synth.features.iter().zip(base).zip(neighbor) {
            let expected = b + trace.delta * (nn - b);
            err += (s - expected) * (s - expected);
        }
        assert!(
            err.sqrt() <= 1e-9,
            "FAIL criterion 3: synthetic off segment by {}",
            err.sqrt()
        );
        assert!((0.0..1.0).contains(&trace.delta));
        assert!(synth.synthetic);
    }

    // neighbor sets equal an independently-coded brute-force oracle
    let minority: Vec<usize> = (0..60).collect();
    for &of in &minority {
        let got = nearest_neighbors(&samples, &minority, of, 5);
        let mut all: Vec<(f64, usize)> = minority
            .iter()
            .filter(|&&j| j != of)
            .map(|&j| {
                let mut d = 0.0;
                for c in 0..dim {
                    let diff = samples[j].features[c] - samples[of].features[c];
                    d += diff * diff;
                }
                (d, j)
            })
            .collect();
        all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let oracle: Vec<usize> = all.into_iter().take(5).map(|(_, j)| j).collect();
        assert_eq!(
            got, oracle,
            "FAIL criterion 3: neighbor set mismatch at {of}"
        );
    }

    // deterministic per seed
    let again = smote(&samples, 5, 42).unwrap();
    assert_eq!(out.samples.len(), again.samples.len());
    for (a, b) in out.samples.iter().zip(&again.samples) {
        assert_eq!(a.features, b.features);
    }
    let different = smote(&samples, 5, 43).unwrap();
    assert!(
        out.samples[n].features != different.samples[n].features,
        "different seeds should give different synthetics"
    );

    println!(
        "PASS criterion 3 (SMOTE): 80 synthetics, segment err <= 1e-9, neighbors match oracle, deterministic ({:.2?})",
        start.elapsed()
    );
}

// ----------------------------------------------------------------------
// criterion 4: planted-aspect end-to-end
// ----------------------------------------------------------------------

#[test]
fn criterion_4_planted_aspect_end_to_end() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    synthetic::write_fixture_set(dir.path(), dir.path(), 500, 16, 2024).unwrap();
    let config = PipelineConfig::from_file(&dir.path().join("config.json")).unwrap();
    let metrics = pipeline::run_pipeline(&config).unwrap();
    let elapsed = start.elapsed();
    assert!(
        metrics.f1 >= 0.90,
        "FAIL criterion 4: held-out token F1 {:.4} < 0.90",
        metrics.f1
    );
    assert!(
        elapsed.as_secs() < 600,
        "FAIL criterion 4: took {elapsed:?} (limit 10 min)"
    );
    println!(
        "PASS criterion 4 (planted-aspect e2e): F1 {:.4} (P {:.4} / R {:.4}) on {} held-out records, {elapsed:.2?}",
        metrics.f1, metrics.precision, metrics.recall, metrics.n_test
    );
}

// ----------------------------------------------------------------------
// criterion 5: rating prediction
// ----------------------------------------------------------------------

#[test]
fn criterion_5_rating_prediction() {
    let start = Instant::now();
    let triples = synthetic::rank3_rating_triples(200, 100, 0.10, 0.1, 0xCF);
    let (train, test) = eval::split(&triples, 0.8, 99).unwrap();
    let matrix = RatingMatrix::from_triples(&train).unwrap();

    let model = fit_rating_model(&matrix, 20, 5, 30, 5).unwrap();
    let pairs: Vec<EvalPair> = test
        .iter()
        .map(|t| EvalPair {
            predicted: model.predict(&t.user, &t.item),
            actual: t.rating,
        })
        .collect();
    let pipeline_rmse = eval::rmse(&pairs).unwrap();

    let train_mean = train.iter().map(|t| t.rating).sum::<f64>() / train.len() as f64;
    let mean_pairs: Vec<EvalPair> = test
        .iter()
        .map(|t| EvalPair {
            predicted: train_mean,
            actual: t.rating,
        })
        .collect();
    let mean_rmse = eval::rmse(&mean_pairs).unwrap();

    let mf = baseline_mf(
        &matrix,
        &MfOptions {
            rank: 20,
            epochs: 60,
            lr: 0.01,
            reg: 0.05,
            seed: 5,
        },
    )
    .unwrap();
    let mf_pairs: Vec<EvalPair> = test
        .iter()
        .map(|t| EvalPair {
            predicted: mf.predict(&t.user, &t.item),
            actual: t.rating,
        })
        .collect();
    let mf_rmse = eval::rmse(&mf_pairs).unwrap();

    let elapsed = start.elapsed();
    assert!(
        pipeline_rmse <= 0.25,
        "FAIL criterion 5: pipeline RMSE {pipeline_rmse:.4} > 0.25"
    );
    assert!(
        pipeline_rmse <= 0.5 * mean_rmse,
        "FAIL criterion 5: pipeline RMSE {pipeline_rmse:.4} > 0.5 x mean RMSE {mean_rmse:.4}"
    );
    assert!(
        pipeline_rmse <= mf_rmse * 1.05,
        "FAIL criterion 5: pipeline RMSE {pipeline_rmse:.4} not within 5% of MF {mf_rmse:.4}"
    );
    println!(
        "PASS criterion 5 (rating prediction): pipeline RMSE {pipeline_rmse:.4}, mean {mean_rmse:.4}, MF {mf_rmse:.4}, {elapsed:.2?}"
    );
}

// ----------------------------------------------------------------------
// criterion 6: metric oracles
// ----------------------------------------------------------------------

#[test]
fn criterion_6_metric_oracles() {
    let start = Instant::now();
    let mut rng = Lcg::new(0x0E6);
    for case in 0..100 {
        let n = rng.below(40) + 1;
        let pairs: Vec<EvalPair> = (0..n)
            .map(|_| EvalPair {
                predicted: rng.uniform_in(1.0, 5.0),
                actual: rng.uniform_in(1.0, 5.0),
            })
            .collect();
        // brute-force oracles, written as plain loops
        let mut abs_sum = 0.0;
        let mut sq_sum = 0.0;
        for p in &pairs {
            let d = p.predicted - p.actual;
            abs_sum += d.abs();
            sq_sum += d * d;
        }
        let mae_oracle = abs_sum / n as f64;
        let rmse_oracle = (sq_sum / n as f64).sqrt();
        let mae = eval::mae(&pairs).unwrap();
        let rmse = eval::rmse(&pairs).unwrap();
        assert!(
            (mae - mae_oracle).abs() <= 1e-12,
            "FAIL criterion 6: mae case {case}"
        );
        assert!(
            (rmse - rmse_oracle).abs() <= 1e-12,
            "FAIL criterion 6: rmse case {case}"
        );
        assert!(
            rmse >= mae - 1e-12,
            "FAIL criterion 6: rmse {rmse} < mae {mae} in case {case}"
        );

        // tag F1 oracle
        let len = rng.below(30) + 1;
        let a: Vec<BioTag> = (0..len).map(|_| BioTag::from_index(rng.below(3))).collect();
        let b: Vec<BioTag> = (0..len).map(|_| BioTag::from_index(rng.below(3))).collect();
        let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
        for (x, y) in a.iter().zip(&b) {
            let px = !matches!(x, BioTag::O);
            let gy = !matches!(y, BioTag::O);
            match (px, gy) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        let p_oracle = if tp + fp == 0 {
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let r_oracle = if tp + fn_ == 0 {
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1_oracle = if p_oracle + r_oracle == 0.0 {
            0.0
        } else {
            2.0 * p_oracle * r_oracle / (p_oracle + r_oracle)
        };
        let got = eval::tag_f1(&a, &b).unwrap();
        assert!((got.precision - p_oracle).abs() <= 1e-12);
        assert!((got.recall - r_oracle).abs() <= 1e-12);
        assert!((got.f1 - f1_oracle).abs() <= 1e-12);
        assert_eq!(
            (got.counts.tp, got.counts.fp, got.counts.fn_, got.counts.tn),
            (tp, fp, fn_, tn)
        );

        // accuracy oracle
        let labels_a: Vec<u8> = (0..len).map(|_| (rng.below(2)) as u8).collect();
        let labels_b: Vec<u8> = (0..len).map(|_| (rng.below(2)) as u8).collect();
        let hits = labels_a
            .iter()
            .zip(&labels_b)
            .filter(|(x, y)| x == y)
            .count();
        let acc_oracle = hits as f64 / len as f64;
        let acc = eval::sentiment_accuracy(&labels_a, &labels_b).unwrap();
        assert!((acc - acc_oracle).abs() <= 1e-12);
    }
    println!(
        "PASS criterion 6 (metric oracles): 100 seeded cases within 1e-12, rmse >= mae everywhere ({:.2?})",
        start.elapsed()
    );
}

// ----------------------------------------------------------------------
// criterion 7: SVD oracle
// ----------------------------------------------------------------------

fn exact_rank_matrix(rows: usize, cols: usize, rank: usize, rng: &mut Lcg) -> Mat {
    let mut a = Mat::zeros(rows, rank);
    let mut b = Mat::zeros(rank, cols);
    for v in &mut a.data {
        *v = rng.uniform_in(-1.0, 1.0);
    }
    for v in &mut b.data {
        *v = rng.uniform_in(-1.0, 1.0);
    }
    a.matmul(&b)
}

#[test]
fn criterion_7_svd_oracle() {
    let start = Instant::now();
    let mut rng = Lcg::new(0x57D);
    let mut checked = 0usize;
    for &(rows, cols) in &[(20, 15), (60, 40), (120, 90), (200, 200)] {
        for &rank in &[1usize, 2, 3, 5, 10, 20] {
            if rank > rows.min(cols) {
                continue;
            }
            let matrix = exact_rank_matrix(rows, cols, rank, &mut rng);
            let fast = randomized_svd(&matrix, rank, 5, 0xF00D + rank as u64).unwrap();
            let rel = {
                let recon = fast.reconstruct();
                let mut num = 0.0;
                for (a, b) in recon.data.iter().zip(&matrix.data) {
                    num += (a - b) * (a - b);
                }
                num.sqrt() / matrix.frobenius_norm()
            };
            assert!(
                rel <= 1e-6,
                "FAIL criterion 7: {rows}x{cols} rank {rank}: reconstruction {rel:.2e}"
            );
            let exact = jacobi_svd(&matrix);
            for i in 0..rank {
                let diff = (fast.singular_values[i] - exact.singular_values[i]).abs();
                assert!(
                    diff <= 1e-6,
                    "FAIL criterion 7: sigma_{i} differs by {diff:.2e} on {rows}x{cols} rank {rank}"
                );
            }
            // singular values non-increasing
            for w in fast.singular_values.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            checked += 1;
        }
    }
    // f > true rank: extra singular values vanish, reconstruction holds
    let matrix = exact_rank_matrix(80, 60, 4, &mut rng);
    let fat = randomized_svd(&matrix, 20, 5, 0xF00D).unwrap();
    let recon = fat.reconstruct();
    let mut num = 0.0;
    for (a, b) in recon.data.iter().zip(&matrix.data) {
        num += (a - b) * (a - b);
    }
    let rel = num.sqrt() / matrix.frobenius_norm();
    assert!(
        rel <= 1e-6,
        "FAIL criterion 7: f>rank reconstruction {rel:.2e}"
    );
    assert!(fat.singular_values[4..].iter().all(|&s| s.abs() <= 1e-6));
    checked += 1;

    println!(
        "PASS criterion 7 (SVD oracle): {checked} instances <= 1e-6 vs dense Jacobi ({:.2?})",
        start.elapsed()
    );
}

// ----------------------------------------------------------------------
// criterion 8: CP weights
// ----------------------------------------------------------------------

#[test]
fn criterion_8_cp_weights() {
    let start = Instant::now();
    // u (x) v (x) (2,1): weights must come out (0.8, 0.2)
    let u = [1.0, 1.7, 0.6, 2.2, 1.1];
    let v = [0.9, 1.4, 0.7, 1.8];
    let w = [2.0, 1.0];
    let mut values = Vec::new();
    for &uu in &u {
        for &vv in &v {
            for &ww in &w {
                values.push(uu * vv * ww);
            }
        }
    }
    let tensor = AspectTensor::dense(u.len(), v.len(), w.len(), &values);
    let cp = cp_weights(&tensor, 3, 30, 0xCB).unwrap();
    assert!(
        (cp.weights[0] - 0.8).abs() <= 1e-4 && (cp.weights[1] - 0.2).abs() <= 1e-4,
        "FAIL criterion 8: weights {:?} != (0.8, 0.2)",
        cp.weights
    );

    // invariance under uniform scaling
    for &scale in &[0.3, 12.5, 400.0] {
        let scaled = cp_weights(&tensor.scaled(scale), 3, 30, 0xCB).unwrap();
        for (a, b) in cp.weights.iter().zip(&scaled.weights) {
            assert!(
                (a - b).abs() <= 1e-6,
                "FAIL criterion 8: weights moved by {} under scale {scale}",
                (a - b).abs()
            );
        }
    }
    println!(
        "PASS criterion 8 (CP weights): ({:.6}, {:.6}) within 1e-4, scale-invariant within 1e-6 ({:.2?})",
        cp.weights[0],
        cp.weights[1],
        start.elapsed()
    );
}

// ----------------------------------------------------------------------
// criterion 9: pipeline determinism
// ----------------------------------------------------------------------

#[test]
fn criterion_9_pipeline_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    synthetic::write_fixture_set(dir.path(), dir.path(), 150, 12, 77).unwrap();
    // shrink for speed
    let config_path = dir.path().join("config.json");
    let mut parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&config_path).unwrap()).unwrap();
    parsed["epochs"] = serde_json::json!(10);
    parsed["embed_dim"] = serde_json::json!(12);
    std::fs::write(&config_path, serde_json::to_string_pretty(&parsed).unwrap()).unwrap();
    let config = PipelineConfig::from_file(&config_path).unwrap();

    pipeline::run_pipeline(&config).unwrap();
    let out = config.out_dir.clone();
    let files = [
        "metrics.json",
        "model.manifest.json",
        "rating_model.manifest.json",
        "model.blob",
        "rating_model.blob",
    ];
    let first: Vec<Vec<u8>> = files
        .iter()
        .map(|f| std::fs::read(out.join(f)).unwrap())
        .collect();

    pipeline::run_pipeline(&config).unwrap();
    for (f, before) in files.iter().zip(&first) {
        let after = std::fs::read(out.join(f)).unwrap();
        assert_eq!(
            &after, before,
            "FAIL criterion 9: {f} differs between identical runs"
        );
    }
    println!(
        "PASS criterion 9 (determinism): {} artifacts byte-identical across two runs ({:.2?})",
        files.len(),
        start.elapsed()
    );
}

// ----------------------------------------------------------------------
// shared sanity: the seen-set plumbing used by criterion 4's top-5 output
// ----------------------------------------------------------------------

#[test]
fn top_n_excludes_seen_and_orders_descending() {
    let triples = synthetic::rank3_rating_triples(40, 25, 0.3, 0.05, 3);
    let matrix = RatingMatrix::from_triples(&triples).unwrap();
    let model = fit_rating_model(&matrix, 5, 5, 10, 3).unwrap();
    for user in matrix.users.iter().take(10) {
        let seen = model.seen_items(user);
        let recs = model.top_n(user, 5, &seen);
        assert!(recs.len() <= 5);
        let rec_set: BTreeSet<&str> = recs.iter().map(|(i, _)| i.as_str()).collect();
        assert!(rec_set.iter().all(|i| !seen.contains(*i)));
        for w in recs.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }
}
