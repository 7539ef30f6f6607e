//! Dataset splitting and evaluation metrics: MAE, RMSE, token-level
//! precision/recall/F1 for aspect tagging, and sentiment accuracy.

use crate::cnn::BioTag;
use crate::error::{Error, Result};
use crate::rng::Lcg;

/// One held-out prediction versus its actual rating.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPair {
    pub predicted: f64,
    pub actual: f64,
}

/// Token-level confusion counts with positive class {B, I}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// Seeded shuffle split: first ⌊n·fraction⌋ records train, rest test.
pub fn split<T: Clone>(records: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train fraction {train_fraction} outside (0,1)"
        )));
    }
    if records.len() < 2 {
        return Err(Error::Domain("need at least 2 records to split".into()));
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut rng = Lcg::new(seed);
    rng.shuffle(&mut order);
    let cut = (records.len() as f64 * train_fraction).floor() as usize;
    let train = order[..cut].iter().map(|&i| records[i].clone()).collect();
    let test = order[cut..].iter().map(|&i| records[i].clone()).collect();
    Ok((train, test))
}

/// Mean absolute error `Σ|R̂ - R| / |T|`.
pub fn mae(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Domain("mae of an empty test set".into()));
    }
    Ok(pairs
        .iter()
        .map(|p| (p.predicted - p.actual).abs())
        .sum::<f64>()
        / pairs.len() as f64)
}

/// Root mean squared error `sqrt(Σ(R̂ - R)² / |T|)`.
pub fn rmse(pairs: &[EvalPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Domain("rmse of an empty test set".into()));
    }
    let mean_sq = pairs
        .iter()
        .map(|p| (p.predicted - p.actual) * (p.predicted - p.actual))
        .sum::<f64>()
        / pairs.len() as f64;
    Ok(mean_sq.sqrt())
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TagF1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub counts: ConfusionCounts,
}

/// Token-level binary evaluation with positive class {B, I}; any 0/0
/// ratio is 0 by convention.
pub fn tag_f1(predicted: &[BioTag], gold: &[BioTag]) -> Result<TagF1> {
    if predicted.len() != gold.len() {
        return Err(Error::Shape(format!(
            "tag sequences differ in length: {} vs {}",
            predicted.len(),
            gold.len()
        )));
    }
    let mut counts = ConfusionCounts::default();
    for (&p, &g) in predicted.iter().zip(gold) {
        match (p.is_aspect(), g.is_aspect()) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(TagF1 {
        precision,
        recall,
        f1,
        counts,
    })
}

/// Fraction of positions where the labels agree.
pub fn sentiment_accuracy<T: PartialEq>(predicted: &[T], gold: &[T]) -> Result<f64> {
    if predicted.len() != gold.len() {
        return Err(Error::Shape(format!(
            "label sequences differ in length: {} vs {}",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Domain("accuracy of an empty label set".into()));
    }
    let hits = predicted.iter().zip(gold).filter(|(p, g)| p == g).count();
    Ok(hits as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(data: &[(f64, f64)]) -> Vec<EvalPair> {
        data.iter()
            .map(|&(predicted, actual)| EvalPair { predicted, actual })
            .collect()
    }

    #[test]
    fn split_80_20_partition() {
        let records: Vec<usize> = (0..10).collect();
        let (train, test) = split(&records, 0.8, 42).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(test.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, records);
    }

    #[test]
    fn split_is_deterministic_per_seed() {
        let records: Vec<usize> = (0..50).collect();
        let (t1, e1) = split(&records, 0.8, 7).unwrap();
        let (t2, e2) = split(&records, 0.8, 7).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(e1, e2);
        let (t3, _) = split(&records, 0.8, 8).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn split_contract_errors() {
        let records = vec![1];
        assert!(split(&records, 0.8, 1).is_err());
        let records = vec![1, 2, 3];
        assert!(split(&records, 0.0, 1).is_err());
        assert!(split(&records, 1.0, 1).is_err());
    }

    #[test]
    fn mae_cases() {
        assert_eq!(mae(&pairs(&[(1.0, 1.0), (4.0, 4.0)])).unwrap(), 0.0);
        assert_eq!(mae(&pairs(&[(1.0, 3.0), (2.0, 4.0)])).unwrap(), 2.0);
        // (|2-3| + |4-1|) / 2 = 2
        assert_eq!(mae(&pairs(&[(2.0, 3.0), (4.0, 1.0)])).unwrap(), 2.0);
        assert!(mae(&[]).is_err());
    }

    #[test]
    fn rmse_cases() {
        assert_eq!(rmse(&pairs(&[(1.0, 1.0)])).unwrap(), 0.0);
        // constant error 2: rmse = mae = 2
        assert_eq!(rmse(&pairs(&[(1.0, 3.0), (2.0, 4.0)])).unwrap(), 2.0);
        // sqrt((1 + 9)/2) = sqrt(5)
        let got = rmse(&pairs(&[(2.0, 3.0), (4.0, 1.0)])).unwrap();
        assert!((got - 5f64.sqrt()).abs() < 1e-12);
        assert!((got - 2.2360680).abs() < 1e-6);
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn tag_f1_cases() {
        use BioTag::*;
        let perfect = tag_f1(&[B, I, O], &[B, I, O]).unwrap();
        assert_eq!(perfect.f1, 1.0);

        let none_predicted = tag_f1(&[O, O, O], &[B, I, O]).unwrap();
        assert_eq!(none_predicted.f1, 0.0);
        assert_eq!(none_predicted.precision, 0.0);

        // TP=2, FP=1, FN=1 -> P = R = F1 = 2/3
        let mixed = tag_f1(&[B, I, B, O, O], &[B, I, O, I, O]).unwrap();
        assert_eq!(mixed.counts.tp, 2);
        assert_eq!(mixed.counts.fp, 1);
        assert_eq!(mixed.counts.fn_, 1);
        assert!((mixed.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((mixed.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((mixed.f1 - 2.0 / 3.0).abs() < 1e-12);

        assert!(tag_f1(&[B], &[B, O]).is_err());
    }

    #[test]
    fn tag_f1_mirror_symmetry() {
        use BioTag::*;
        let a = [B, O, I, O, B, B];
        let b = [O, O, I, B, B, O];
        let ab = tag_f1(&a, &b).unwrap();
        let ba = tag_f1(&b, &a).unwrap();
        // swapping roles swaps precision and recall, F1 unchanged
        assert_eq!(ab.precision, ba.recall);
        assert_eq!(ab.recall, ba.precision);
        assert!((ab.f1 - ba.f1).abs() < 1e-15);
    }

    #[test]
    fn sentiment_accuracy_cases() {
        assert_eq!(sentiment_accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(sentiment_accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(
            sentiment_accuracy(&[1, 1, 0, 0], &[1, 1, 0, 1]).unwrap(),
            0.75
        );
        assert!(sentiment_accuracy::<u8>(&[], &[]).is_err());
        assert!(sentiment_accuracy(&[1], &[1, 2]).is_err());
    }

    #[test]
    fn rmse_dominates_mae_on_random_instances() {
        let mut rng = Lcg::new(3);
        for _ in 0..100 {
            let n = rng.below(20) + 1;
            let ps: Vec<EvalPair> = (0..n)
                .map(|_| EvalPair {
                    predicted: rng.uniform_in(1.0, 5.0),
                    actual: rng.uniform_in(1.0, 5.0),
                })
                .collect();
            assert!(rmse(&ps).unwrap() >= mae(&ps).unwrap() - 1e-12);
        }
    }
}
