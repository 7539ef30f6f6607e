//! Stage orchestration: preprocess -> train -> extract -> recommend ->
//! evaluate, each reading its predecessors' artifacts from the output
//! directory and writing versioned artifacts of its own. `run_pipeline`
//! is exactly the composition of the five stages.

use std::fs;
use std::path::{Path, PathBuf};

use crate::artifact::{self, Manifest, TensorEntry};
use crate::aspects::{extract_mentions, AspectMention, OpinionLexicon};
use crate::balance::{embed_for_smote, smote, split_features, FeatureSample};
use crate::cluster::{cluster_aspects, cluster_assignment, AspectStem};
use crate::cnn::{self, BioTag, CnnConfig, CnnModel, TrainOptions, TrainSample};
use crate::config::PipelineConfig;
use crate::corpus::{
    build_vocabulary, load_reviews, normalize, stable_stem, ContractionTable, DatasetFormat,
    PolarityLabel, StopwordList, Token, TokenSeq, Vocabulary,
};
use crate::embedding::{stem_vector, EmbeddingTable, WordVectors};
use crate::error::{Error, Result};
use crate::eval::{self, EvalPair};
use crate::recommend::{fit_rating_model, RatingMatrix, RatingModel, RatingTriple};
use crate::tagger::{tag_sequence, PosTag, TagLexicon};
use crate::tensor::{build_tensor, cp_weights, weighted_rating_matrix};

pub const CORPUS_FILE: &str = "corpus.norm.jsonl";
pub const VOCAB_FILE: &str = "vocab.tsv";
pub const PREPROCESS_SUMMARY_FILE: &str = "preprocess_summary.json";
pub const MODEL_PREFIX: &str = "model";
pub const TRAIN_REPORT_FILE: &str = "training_report.json";
pub const ASPECTS_FILE: &str = "aspects.tsv";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const WEIGHTED_RATINGS_FILE: &str = "weighted_ratings.tsv";
pub const RATING_MODEL_PREFIX: &str = "rating_model";
pub const RECOMMENDATIONS_FILE: &str = "recommendations.tsv";
pub const METRICS_FILE: &str = "metrics.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProcessedToken {
    pub surface: String,
    pub stem: String,
    pub pos: String,
}

/// One normalized, tagged, split-assigned review as stored in
/// `corpus.norm.jsonl`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ProcessedReview {
    pub user_id: String,
    pub item_id: String,
    pub rating: f64,
    pub label: Option<PolarityLabel>,
    pub split: Split,
    pub tokens: Vec<ProcessedToken>,
    /// weak gold BIO tags from the aspect-term list, when configured
    pub gold: Option<Vec<BioTag>>,
}

impl ProcessedReview {
    pub fn token_seq(&self) -> TokenSeq {
        TokenSeq {
            tokens: self
                .tokens
                .iter()
                .map(|t| Token {
                    surface: t.surface.clone(),
                    stem: t.stem.clone(),
                })
                .collect(),
            label: self.label,
            user_id: self.user_id.clone(),
            item_id: self.item_id.clone(),
        }
    }

    pub fn pos_tags(&self) -> Result<Vec<PosTag>> {
        self.tokens
            .iter()
            .map(|t| {
                PosTag::parse(&t.pos)
                    .ok_or_else(|| Error::Format(format!("unknown POS tag {:?}", t.pos)))
            })
            .collect()
    }
}

#[derive(Debug, serde::Serialize)]
pub struct PreprocessSummary {
    pub n_records: usize,
    pub skipped: usize,
    pub malformed: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub n_labeled_train: usize,
    pub vocab_size: usize,
    pub config_hash: String,
    pub seed: u64,
}

/// Aspect-term list: one term per line, multi-word phrases allowed;
/// words are stemmed so surface forms work too. Sorted longest-first so
/// phrase matches win over their single-word prefixes.
pub fn parse_aspect_terms(raw: &str) -> Vec<Vec<String>> {
    let mut terms: Vec<Vec<String>> = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(stable_stem).collect())
        .collect();
    terms.sort_by(|a, b| b.len().cmp(&a.len()).then(a.cmp(b)));
    terms.dedup();
    terms
}

fn load_aspect_terms(path: &Path) -> Result<Vec<Vec<String>>> {
    require_config_path(path, "aspect terms")?;
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(parse_aspect_terms(&raw))
}

/// Mark gold B/I tags wherever an aspect term's stems occur.
pub fn gold_tags(stems: &[&str], terms: &[Vec<String>]) -> Vec<BioTag> {
    let mut tags = vec![BioTag::O; stems.len()];
    let mut t = 0;
    while t < stems.len() {
        let mut matched = 0;
        for term in terms {
            if term.len() <= stems.len() - t && term.iter().zip(&stems[t..]).all(|(a, &b)| a == b) {
                tags[t] = BioTag::B;
                for g in tags.iter_mut().take(t + term.len()).skip(t + 1) {
                    *g = BioTag::I;
                }
                matched = term.len();
                break;
            }
        }
        t += matched.max(1);
    }
    tags
}

/// A path the config names must exist; its absence is a config error,
/// not an i/o error.
fn require_config_path(path: &Path, what: &str) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "configured {what} path {} does not exist",
            path.display()
        )))
    }
}

fn stopwords_for(config: &PipelineConfig) -> Result<StopwordList> {
    match &config.stopwords {
        Some(p) => {
            require_config_path(p, "stopwords")?;
            StopwordList::load(p)
        }
        None => Ok(StopwordList::default_list()),
    }
}

fn contractions_for(config: &PipelineConfig) -> Result<ContractionTable> {
    match &config.contractions {
        Some(p) => {
            require_config_path(p, "contractions")?;
            ContractionTable::load(p)
        }
        None => Ok(ContractionTable::default_table()),
    }
}

fn tag_lexicon_for(config: &PipelineConfig) -> Result<TagLexicon> {
    let mut lexicon = match &config.tagger_lexicon {
        Some(p) => {
            require_config_path(p, "tagger lexicon")?;
            TagLexicon::load(p)?
        }
        None => TagLexicon::default_lexicon(),
    };
    if let Some(p) = &config.tagger_overrides {
        require_config_path(p, "tagger overrides")?;
        let raw = fs::read_to_string(p).map_err(|e| Error::io(p.display().to_string(), e))?;
        lexicon.merge_overrides(&raw)?;
    }
    Ok(lexicon)
}

fn opinion_lexicon_for(config: &PipelineConfig) -> Result<OpinionLexicon> {
    match &config.opinion_lexicon {
        Some(p) => {
            require_config_path(p, "opinion lexicon")?;
            if let Some(n) = &config.negations {
                require_config_path(n, "negations")?;
            }
            OpinionLexicon::load(p, config.negations.as_deref())
        }
        None => Ok(OpinionLexicon::default_lexicon()),
    }
}

fn write_out(config: &PipelineConfig, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    let path = config.out_dir.join(name);
    fs::write(&path, content).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(path)
}

/// Normalize, tag, weak-label, split, and index the dataset.
pub fn run_preprocess(config: &PipelineConfig) -> Result<PreprocessSummary> {
    config.validate()?;
    let loaded = load_reviews(&config.dataset, DatasetFormat::AmazonJsonl)?;
    let stopwords = stopwords_for(config)?;
    let contractions = contractions_for(config)?;
    let tag_lexicon = tag_lexicon_for(config)?;
    let terms = match &config.aspect_terms {
        Some(p) => Some(load_aspect_terms(p)?),
        None => None,
    };

    let mut processed: Vec<ProcessedReview> = Vec::with_capacity(loaded.records.len());
    for record in &loaded.records {
        let tokens = normalize(&record.text, &stopwords, &contractions);
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        let pos = tag_sequence(&surfaces, &tag_lexicon);
        let stems: Vec<&str> = tokens.iter().map(|t| t.stem.as_str()).collect();
        let gold = terms.as_ref().map(|t| gold_tags(&stems, t));
        processed.push(ProcessedReview {
            user_id: record.user_id.clone(),
            item_id: record.item_id.clone(),
            rating: record.rating,
            // in-range ratings only reach this point, so no error path
            label: crate::corpus::derive_label(record.rating)?,
            split: Split::Train,
            tokens: tokens
                .iter()
                .zip(&pos)
                .map(|(t, p)| ProcessedToken {
                    surface: t.surface.clone(),
                    stem: t.stem.clone(),
                    pos: p.as_str().to_string(),
                })
                .collect(),
            gold,
        });
    }

    // Seeded 80/20 (by default) split over record indices.
    let indices: Vec<usize> = (0..processed.len()).collect();
    let (_, test_idx) = eval::split(&indices, config.train_fraction, config.seed)?;
    for &i in &test_idx {
        processed[i].split = Split::Test;
    }

    let seqs: Vec<TokenSeq> = processed.iter().map(|p| p.token_seq()).collect();
    let vocab = build_vocabulary(&seqs, config.min_count)?;

    let mut corpus_out = String::new();
    for p in &processed {
        corpus_out.push_str(
            &serde_json::to_string(p).map_err(|e| Error::Format(format!("corpus write: {e}")))?,
        );
        corpus_out.push('\n');
    }
    write_out(config, CORPUS_FILE, &corpus_out)?;

    let mut vocab_out = String::new();
    let mut entries: Vec<(u32, &str)> = vocab.stems().map(|(s, id)| (id, s)).collect();
    entries.sort();
    for (id, stem) in entries {
        vocab_out.push_str(&format!("{stem}\t{id}\n"));
    }
    write_out(config, VOCAB_FILE, &vocab_out)?;

    let summary = PreprocessSummary {
        n_records: processed.len(),
        skipped: loaded.skipped,
        malformed: loaded.malformed,
        n_train: processed.iter().filter(|p| p.split == Split::Train).count(),
        n_test: processed.iter().filter(|p| p.split == Split::Test).count(),
        n_labeled_train: processed
            .iter()
            .filter(|p| p.split == Split::Train && p.label.is_some())
            .count(),
        vocab_size: vocab.size(),
        config_hash: config.hash(),
        seed: config.seed,
    };
    write_out(
        config,
        PREPROCESS_SUMMARY_FILE,
        &(serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Format(format!("summary write: {e}")))?
            + "\n"),
    )?;
    Ok(summary)
}

pub fn read_corpus(config: &PipelineConfig) -> Result<Vec<ProcessedReview>> {
    let path = config.out_dir.join(CORPUS_FILE);
    if !path.exists() {
        return Err(Error::MissingStage {
            stage: "preprocess".into(),
            detail: format!("{} not found", path.display()),
        });
    }
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    raw.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Format(format!("corpus parse: {e}"))))
        .collect()
}

pub fn read_vocab(config: &PipelineConfig) -> Result<Vocabulary> {
    let path = config.out_dir.join(VOCAB_FILE);
    if !path.exists() {
        return Err(Error::MissingStage {
            stage: "preprocess".into(),
            detail: format!("{} not found", path.display()),
        });
    }
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let entries: Result<Vec<(String, u32)>> = raw
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let (stem, id) = l
                .split_once('\t')
                .ok_or_else(|| Error::Format("vocab line missing tab".into()))?;
            let id: u32 = id
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad vocab id {id:?}")))?;
            Ok((stem.to_string(), id))
        })
        .collect();
    Vocabulary::from_entries(entries?)
}

fn word_vectors_for(config: &PipelineConfig) -> Result<Option<WordVectors>> {
    match &config.embeddings {
        Some(p) => {
            require_config_path(p, "embeddings")?;
            Ok(Some(WordVectors::load(p)?))
        }
        None => Ok(None),
    }
}

fn cnn_config_for(config: &PipelineConfig) -> CnnConfig {
    CnnConfig {
        embed_dim: config.embed_dim,
        word_filters: config.word_filters,
        pos_filters: config.pos_filters,
        widths: [5, 3],
        dropout: config.dropout,
    }
}

/// Feature samples (with aligned gold tags) for the labeled train split.
fn labeled_train_samples(
    config: &PipelineConfig,
    corpus: &[ProcessedReview],
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Result<(Vec<FeatureSample>, Vec<(Option<Vec<BioTag>>, f64)>)> {
    let mut features = Vec::new();
    let mut supervision = Vec::new();
    for review in corpus {
        if review.split != Split::Train {
            continue;
        }
        let Some(label) = review.label else { continue };
        let seq = review.token_seq();
        let tags = review.pos_tags()?;
        features.push(embed_for_smote(&seq, &tags, table, vocab, config.seq_len)?);
        let gold = review.gold.as_ref().map(|g| {
            let mut padded = g.clone();
            padded.truncate(config.seq_len);
            padded.resize(config.seq_len, BioTag::O);
            padded
        });
        supervision.push((
            gold,
            if label == PolarityLabel::Positive {
                1.0
            } else {
                0.0
            },
        ));
    }
    Ok((features, supervision))
}

#[derive(Debug, serde::Serialize)]
pub struct TrainSummary {
    pub n_train_samples: usize,
    pub n_synthetic: usize,
    pub smote_k_clamped: bool,
    pub epochs: usize,
    pub final_loss: f64,
    pub config_hash: String,
    pub seed: u64,
}

/// SMOTE-balance the labeled train split and fit the network.
pub fn run_train(config: &PipelineConfig) -> Result<TrainSummary> {
    config.validate()?;
    let corpus = read_corpus(config)?;
    let vocab = read_vocab(config)?;
    let vectors = word_vectors_for(config)?;
    let table = EmbeddingTable::build(&vocab, vectors.as_ref(), config.embed_dim)?;

    let (features, supervision) = labeled_train_samples(config, &corpus, &vocab, &table)?;
    if features.is_empty() {
        return Err(Error::Domain(
            "no labeled training samples (all ratings = 3?)".into(),
        ));
    }
    let balanced = smote(&features, config.smote_k, config.seed)?;
    let minority_label = balanced
        .samples
        .iter()
        .skip(features.len())
        .map(|s| s.label)
        .next();

    let mut samples: Vec<TrainSample> = Vec::with_capacity(balanced.samples.len());
    for (i, sample) in balanced.samples.iter().enumerate() {
        let (word, pos) = split_features(&sample.features, config.seq_len, config.embed_dim)?;
        let (tags, label) = if i < features.len() {
            supervision[i].clone()
        } else {
            // synthetic: sentiment supervision only
            let label = minority_label.expect("synthetics imply a minority label");
            (
                None,
                if label == PolarityLabel::Positive {
                    1.0
                } else {
                    0.0
                },
            )
        };
        samples.push(TrainSample {
            word,
            pos,
            tags,
            label,
        });
    }

    let mut model = CnnModel::init(cnn_config_for(config), config.seed);
    let opts = TrainOptions {
        epochs: config.epochs,
        batch_size: config.batch_size,
        lr: config.lr,
        lambda: config.lambda,
        seed: config.seed,
    };
    let report = cnn::train(&mut model, &samples, &opts)?;

    let tensors: Vec<TensorEntry> = model
        .tensors()
        .into_iter()
        .map(|t| TensorEntry {
            name: t.name,
            shape: t.shape,
            offset: t.range.start,
            len: t.range.len(),
        })
        .collect();
    let manifest = Manifest {
        format_version: artifact::FORMAT_VERSION,
        kind: "cnn".into(),
        seed: config.seed,
        config_hash: config.hash(),
        vocab_hash: Some(format!("{:016x}", vocab.hash())),
        hyperparams: serde_json::to_value(&model.cfg)
            .map_err(|e| Error::Format(format!("hyperparams: {e}")))?,
        tensors,
        extra: serde_json::json!({
            "seq_len": config.seq_len,
            "epochs": config.epochs,
            "lr": config.lr,
            "lambda": config.lambda,
            "batch_size": config.batch_size,
        }),
    };
    fs::create_dir_all(&config.out_dir)
        .map_err(|e| Error::io(config.out_dir.display().to_string(), e))?;
    artifact::save(&config.out_dir.join(MODEL_PREFIX), &manifest, &model.theta)?;

    let summary = TrainSummary {
        n_train_samples: samples.len(),
        n_synthetic: balanced.synthetic_count(),
        smote_k_clamped: balanced.k_clamped,
        epochs: report.epoch_loss.len(),
        final_loss: report.epoch_loss.last().copied().unwrap_or(f64::NAN),
        config_hash: config.hash(),
        seed: config.seed,
    };
    let report_json = serde_json::json!({
        "epoch_loss": report.epoch_loss,
        "steps": report.steps,
        "summary": summary,
    });
    write_out(
        config,
        TRAIN_REPORT_FILE,
        &(serde_json::to_string_pretty(&report_json)
            .map_err(|e| Error::Format(format!("report: {e}")))?
            + "\n"),
    )?;
    Ok(summary)
}

/// Load the trained network back from its artifact.
pub fn load_cnn_model(config: &PipelineConfig) -> Result<(Manifest, CnnModel)> {
    let (manifest, values) = artifact::load(&config.out_dir.join(MODEL_PREFIX), "train")?;
    let cfg: CnnConfig = serde_json::from_value(manifest.hyperparams.clone())
        .map_err(|e| Error::Format(format!("model hyperparams: {e}")))?;
    let mut model = CnnModel::zeros(cfg);
    if model.param_count() != values.len() {
        return Err(Error::Format(format!(
            "model blob has {} parameters, expected {}",
            values.len(),
            model.param_count()
        )));
    }
    model.theta = values;
    Ok((manifest, model))
}

/// Eval-mode BIO prediction for one processed review.
fn predict_tags(
    config: &PipelineConfig,
    model: &CnnModel,
    review: &ProcessedReview,
    vocab: &Vocabulary,
    table: &EmbeddingTable,
) -> Result<(Vec<BioTag>, f64)> {
    let seq = review.token_seq();
    let word = table.embed_seq(&seq, vocab, config.seq_len);
    let mut pos = crate::linalg::Mat::zeros(config.seq_len, crate::tagger::TAG_COUNT);
    for (t, tag) in review.pos_tags()?.iter().enumerate().take(config.seq_len) {
        *pos.at_mut(t, tag.index()) = 1.0;
    }
    let (mut tags, sentiment) = cnn::predict(model, &word, &pos)?;
    tags.truncate(review.tokens.len().min(config.seq_len));
    Ok((tags, sentiment))
}

#[derive(Debug, serde::Serialize)]
pub struct ExtractSummary {
    pub n_mentions: usize,
    pub n_clusters: usize,
    pub weights: Vec<f64>,
    pub n_weighted_cells: usize,
    pub config_hash: String,
    pub seed: u64,
}

/// Predict tags on the train split, score mentions, cluster aspect heads,
/// weight clusters by CP decomposition, and write the weighted rating
/// matrix.
pub fn run_extract(config: &PipelineConfig) -> Result<ExtractSummary> {
    config.validate()?;
    let corpus = read_corpus(config)?;
    let vocab = read_vocab(config)?;
    let vectors = word_vectors_for(config)?;
    let table = EmbeddingTable::build(&vocab, vectors.as_ref(), config.embed_dim)?;
    let (_, model) = load_cnn_model(config)?;
    let lexicon = opinion_lexicon_for(config)?;

    let mut mentions: Vec<AspectMention> = Vec::new();
    for review in corpus.iter().filter(|r| r.split == Split::Train) {
        if review.tokens.is_empty() {
            continue;
        }
        let (tags, _) = predict_tags(config, &model, review, &vocab, &table)?;
        let mut seq = review.token_seq();
        seq.tokens.truncate(tags.len());
        mentions.extend(extract_mentions(
            &seq,
            &tags,
            &lexicon,
            config.score_window,
        )?);
    }

    // Cluster the mention head stems.
    let mut freq: std::collections::BTreeMap<&str, usize> = std::collections::BTreeMap::new();
    for m in &mentions {
        *freq.entry(m.head_stem.as_str()).or_insert(0) += 1;
    }
    let stems: Vec<AspectStem> = freq
        .iter()
        .map(|(&stem, &frequency)| AspectStem {
            stem: stem.to_string(),
            frequency,
            vector: stem_vector(stem, vectors.as_ref(), config.embed_dim),
        })
        .collect();
    let mut clusters = cluster_aspects(&stems, config.theta)?;
    let assignment = cluster_assignment(&clusters);

    let tensor = build_tensor(&mentions, &assignment, clusters.len())?;
    let weights: Vec<f64> = if tensor.is_empty() {
        vec![]
    } else {
        let cp = cp_weights(&tensor, config.cp_rank, config.cp_iters, config.seed)?;
        cp.weights
    };
    for (cluster, &w) in clusters.iter_mut().zip(&weights) {
        cluster.weight = w;
    }

    // Overall ratings from the train split.
    let overall_triples: Vec<RatingTriple> = corpus
        .iter()
        .filter(|r| r.split == Split::Train)
        .map(|r| RatingTriple {
            user: r.user_id.clone(),
            item: r.item_id.clone(),
            rating: r.rating,
        })
        .collect();
    let overall = RatingMatrix::from_triples(&overall_triples)?;
    let weighted = if tensor.is_empty() {
        overall_triples.clone()
    } else {
        weighted_rating_matrix(&tensor, &weights, &overall, config.alpha)?
    };

    let mut aspects_out = String::from("user\titem\tstart\tend\thead\ta\ts\tcluster\n");
    for m in &mentions {
        let cluster = assignment.get(&m.head_stem).copied().unwrap_or(0);
        aspects_out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{}\n",
            m.user_id, m.item_id, m.start, m.end, m.head_stem, m.rating, m.score, cluster
        ));
    }
    write_out(config, ASPECTS_FILE, &aspects_out)?;

    let clusters_json = serde_json::json!({
        "config_hash": config.hash(),
        "seed": config.seed,
        "clusters": clusters.iter().map(|c| serde_json::json!({
            "id": c.id,
            "medoid": c.medoid,
            "members": c.members,
            "weight": c.weight,
        })).collect::<Vec<_>>(),
    });
    write_out(
        config,
        CLUSTERS_FILE,
        &(serde_json::to_string_pretty(&clusters_json)
            .map_err(|e| Error::Format(format!("clusters: {e}")))?
            + "\n"),
    )?;

    let mut weighted_out = String::from("user\titem\trating\n");
    for t in &weighted {
        weighted_out.push_str(&format!("{}\t{}\t{:.9}\n", t.user, t.item, t.rating));
    }
    write_out(config, WEIGHTED_RATINGS_FILE, &weighted_out)?;

    Ok(ExtractSummary {
        n_mentions: mentions.len(),
        n_clusters: clusters.len(),
        weights,
        n_weighted_cells: weighted.len(),
        config_hash: config.hash(),
        seed: config.seed,
    })
}

pub fn read_weighted_ratings(config: &PipelineConfig) -> Result<Vec<RatingTriple>> {
    let path = config.out_dir.join(WEIGHTED_RATINGS_FILE);
    if !path.exists() {
        return Err(Error::MissingStage {
            stage: "extract".into(),
            detail: format!("{} not found", path.display()),
        });
    }
    let raw = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut triples = Vec::new();
    for (lineno, line) in raw.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Format(format!(
                "weighted ratings line {}: expected 3 fields",
                lineno + 1
            )));
        }
        triples.push(RatingTriple {
            user: fields[0].to_string(),
            item: fields[1].to_string(),
            rating: fields[2]
                .parse()
                .map_err(|_| Error::Format(format!("bad rating {:?}", fields[2])))?,
        });
    }
    Ok(triples)
}

/// Persist the fitted rating model in the manifest+blob format.
fn save_rating_model(
    config: &PipelineConfig,
    model: &RatingModel,
    observed: &[RatingTriple],
) -> Result<()> {
    let n_users = model.users.len();
    let n_items = model.items.len();
    let rank = model.user_factors.cols;
    let mut values = Vec::new();
    let mut tensors = Vec::new();
    let mut push = |name: &str, shape: Vec<usize>, data: &[f64], values: &mut Vec<f64>| {
        tensors.push(TensorEntry {
            name: name.to_string(),
            shape,
            offset: values.len(),
            len: data.len(),
        });
        values.extend_from_slice(data);
    };
    push(
        "user_factors",
        vec![n_users, rank],
        &model.user_factors.data,
        &mut values,
    );
    push(
        "item_factors",
        vec![n_items, rank],
        &model.item_factors.data,
        &mut values,
    );
    push("user_means", vec![n_users], &model.user_means, &mut values);
    push("item_bias", vec![n_items], &model.item_bias, &mut values);
    push(
        "singular_values",
        vec![model.singular_values.len()],
        &model.singular_values,
        &mut values,
    );
    push("global_mean", vec![1], &[model.global_mean], &mut values);
    let mut observed_flat = Vec::with_capacity(observed.len() * 3);
    for t in observed {
        let u = model.user_id(&t.user).unwrap_or(usize::MAX);
        let i = model.item_id(&t.item).unwrap_or(usize::MAX);
        if u == usize::MAX || i == usize::MAX {
            continue;
        }
        observed_flat.extend_from_slice(&[u as f64, i as f64, t.rating]);
    }
    push(
        "observed",
        vec![observed_flat.len() / 3, 3],
        &observed_flat,
        &mut values,
    );

    let manifest = Manifest {
        format_version: artifact::FORMAT_VERSION,
        kind: "rating".into(),
        seed: config.seed,
        config_hash: config.hash(),
        vocab_hash: None,
        hyperparams: serde_json::json!({
            "rank": rank,
            "k_nn": model.k_nn,
        }),
        tensors,
        extra: serde_json::json!({
            "users": model.users,
            "items": model.items,
        }),
    };
    artifact::save(
        &config.out_dir.join(RATING_MODEL_PREFIX),
        &manifest,
        &values,
    )
}

/// Rebuild the rating model from its artifact (f32 precision).
pub fn load_rating_model(config: &PipelineConfig) -> Result<(Manifest, RatingModel)> {
    let (manifest, values) =
        artifact::load(&config.out_dir.join(RATING_MODEL_PREFIX), "recommend")?;
    let users: Vec<String> = serde_json::from_value(manifest.extra["users"].clone())
        .map_err(|e| Error::Format(format!("rating model users: {e}")))?;
    let items: Vec<String> = serde_json::from_value(manifest.extra["items"].clone())
        .map_err(|e| Error::Format(format!("rating model items: {e}")))?;
    let k_nn = manifest.hyperparams["k_nn"].as_u64().unwrap_or(30) as usize;
    let slice = |name: &str| -> Result<Vec<f64>> {
        let t = manifest.tensor(name)?;
        Ok(values[t.offset..t.offset + t.len].to_vec())
    };
    let observed_raw = slice("observed")?;
    let triples: Vec<RatingTriple> = observed_raw
        .chunks_exact(3)
        .map(|c| RatingTriple {
            user: users[c[0] as usize].clone(),
            item: items[c[1] as usize].clone(),
            rating: c[2],
        })
        .collect();
    // Refit from the persisted matrix with the persisted geometry; the
    // factor tensors are stored for inspection, the neighbor tables are
    // cheaper to rebuild than to serialize.
    let matrix = RatingMatrix::from_triples(&triples)?;
    let rank = manifest.hyperparams["rank"].as_u64().unwrap_or(1) as usize;
    let model = fit_rating_model(&matrix, rank.max(1), 5, k_nn, manifest.seed)?;
    Ok((manifest, model))
}

#[derive(Debug, serde::Serialize)]
pub struct RecommendSummary {
    pub n_users: usize,
    pub n_items: usize,
    pub n_recommendations: usize,
    pub config_hash: String,
    pub seed: u64,
}

/// Fit the rating model on the weighted matrix, persist it, and write
/// top-n recommendations (for one user, or every user).
pub fn run_recommend(
    config: &PipelineConfig,
    user: Option<&str>,
    n: usize,
) -> Result<RecommendSummary> {
    config.validate()?;
    let triples = read_weighted_ratings(config)?;
    let matrix = RatingMatrix::from_triples(&triples)?;
    let model = fit_rating_model(&matrix, config.svd_rank, 5, config.k_nn, config.seed)?;
    save_rating_model(config, &model, &triples)?;

    let users: Vec<String> = match user {
        Some(u) => vec![u.to_string()],
        None => model.users.clone(),
    };
    let mut out = String::from("user\titem\trank\tpredicted_rating\n");
    let mut n_recommendations = 0usize;
    for u in &users {
        let seen = model.seen_items(u);
        for (rank, (item, score)) in model.top_n(u, n, &seen).iter().enumerate() {
            out.push_str(&format!("{u}\t{item}\t{}\t{score:.6}\n", rank + 1));
            n_recommendations += 1;
        }
    }
    write_out(config, RECOMMENDATIONS_FILE, &out)?;
    Ok(RecommendSummary {
        n_users: model.users.len(),
        n_items: model.items.len(),
        n_recommendations,
        config_hash: config.hash(),
        seed: config.seed,
    })
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub n_test: usize,
    pub config_hash: String,
    pub seed: u64,
}

/// Held-out evaluation: token F1 and sentiment accuracy from the network,
/// MAE/RMSE from the rating model. Refuses artifacts whose config hash
/// does not match.
pub fn run_evaluate(config: &PipelineConfig) -> Result<Metrics> {
    config.validate()?;
    let corpus = read_corpus(config)?;
    let vocab = read_vocab(config)?;
    let vectors = word_vectors_for(config)?;
    let table = EmbeddingTable::build(&vocab, vectors.as_ref(), config.embed_dim)?;
    let (manifest, model) = load_cnn_model(config)?;
    if manifest.config_hash != config.hash() {
        return Err(Error::Config(format!(
            "model artifact was produced by a different config (hash {} != {}); re-run the pipeline",
            manifest.config_hash,
            config.hash()
        )));
    }
    let (rating_manifest, rating_model) = load_rating_model(config)?;
    if rating_manifest.config_hash != config.hash() {
        return Err(Error::Config(format!(
            "rating-model artifact was produced by a different config (hash {} != {}); re-run the pipeline",
            rating_manifest.config_hash,
            config.hash()
        )));
    }

    let mut predicted_tags: Vec<BioTag> = Vec::new();
    let mut gold_tags_all: Vec<BioTag> = Vec::new();
    let mut predicted_labels: Vec<PolarityLabel> = Vec::new();
    let mut gold_labels: Vec<PolarityLabel> = Vec::new();
    let mut rating_pairs: Vec<EvalPair> = Vec::new();
    let mut n_test = 0usize;

    for review in corpus.iter().filter(|r| r.split == Split::Test) {
        n_test += 1;
        if !review.tokens.is_empty() {
            let (tags, sentiment) = predict_tags(config, &model, review, &vocab, &table)?;
            if let Some(gold) = &review.gold {
                let limit = tags.len();
                predicted_tags.extend_from_slice(&tags);
                gold_tags_all.extend(gold.iter().copied().take(limit));
            }
            if let Some(label) = review.label {
                predicted_labels.push(if sentiment >= 0.5 {
                    PolarityLabel::Positive
                } else {
                    PolarityLabel::Negative
                });
                gold_labels.push(label);
            }
        }
        rating_pairs.push(EvalPair {
            predicted: rating_model.predict(&review.user_id, &review.item_id),
            actual: review.rating,
        });
    }

    let tag = if gold_tags_all.is_empty() {
        None
    } else {
        Some(eval::tag_f1(&predicted_tags, &gold_tags_all)?)
    };
    let accuracy = if gold_labels.is_empty() {
        0.0
    } else {
        eval::sentiment_accuracy(&predicted_labels, &gold_labels)?
    };
    let metrics = Metrics {
        mae: eval::mae(&rating_pairs)?,
        rmse: eval::rmse(&rating_pairs)?,
        precision: tag.map(|t| t.precision).unwrap_or(0.0),
        recall: tag.map(|t| t.recall).unwrap_or(0.0),
        f1: tag.map(|t| t.f1).unwrap_or(0.0),
        accuracy,
        n_test,
        config_hash: config.hash(),
        seed: config.seed,
    };
    write_out(
        config,
        METRICS_FILE,
        &(serde_json::to_string_pretty(&metrics)
            .map_err(|e| Error::Format(format!("metrics: {e}")))?
            + "\n"),
    )?;
    Ok(metrics)
}

/// The five stages in order.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Metrics> {
    run_preprocess(config)?;
    run_train(config)?;
    run_extract(config)?;
    run_recommend(config, None, config.top_n)?;
    run_evaluate(config)
}
