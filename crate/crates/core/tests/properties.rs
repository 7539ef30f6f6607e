//! Property tests for the stated invariants that hold over arbitrary
//! inputs, not just fixtures.

use std::collections::BTreeSet;

use proptest::prelude::*;

use aspectrec::aspects::{decode_bio, encode_bio, score_mention, OpinionLexicon, Span};
use aspectrec::balance::{smote, FeatureSample};
use aspectrec::corpus::{
    build_vocabulary, normalize, stable_stem, ContractionTable, PolarityLabel, StopwordList, Token,
    TokenSeq,
};
use aspectrec::eval;
use aspectrec::stem::porter_stem;

fn env() -> (StopwordList, ContractionTable) {
    (
        StopwordList::default_list(),
        ContractionTable::default_table(),
    )
}

proptest! {
    // Every stem the chain emits is pure lowercase ASCII letters.
    #[test]
    fn normalize_emits_only_lowercase_alpha(text in "\\PC{0,200}") {
        let (stop, contr) = env();
        for token in normalize(&text, &stop, &contr) {
            prop_assert!(!token.stem.is_empty());
            prop_assert!(token.stem.bytes().all(|b| b.is_ascii_lowercase()),
                "stem {:?} from {:?}", token.stem, text);
            prop_assert!(token.surface.bytes().all(|b| b.is_ascii_lowercase()));
        }
    }

    // Re-normalizing the joined stems is a no-op.
    #[test]
    fn normalize_is_idempotent(text in "\\PC{0,200}") {
        let (stop, contr) = env();
        let once = normalize(&text, &stop, &contr);
        let joined = once.iter().map(|t| t.stem.as_str()).collect::<Vec<_>>().join(" ");
        let twice = normalize(&joined, &stop, &contr);
        let a: Vec<&str> = once.iter().map(|t| t.stem.as_str()).collect();
        let b: Vec<&str> = twice.iter().map(|t| t.stem.as_str()).collect();
        prop_assert_eq!(a, b, "input {:?}", text);
    }

    // The stemmer never grows a word and keeps the alphabet.
    #[test]
    fn porter_never_grows(word in "[a-z]{1,20}") {
        let stem = porter_stem(&word);
        prop_assert!(stem.len() <= word.len());
        prop_assert!(stem.bytes().all(|b| b.is_ascii_lowercase()) || stem.is_empty());
    }

    // The fixed-point helper really is a fixed point.
    #[test]
    fn stable_stem_is_fixed_point(word in "[a-z]{1,20}") {
        let stem = stable_stem(&word);
        prop_assert_eq!(porter_stem(&stem), stem.clone(), "word {:?}", word);
    }

    // BIO encode/decode round trip for arbitrary well-formed span sets.
    #[test]
    fn bio_round_trip(len in 1usize..40, cuts in proptest::collection::vec(0usize..40, 0..8)) {
        // build disjoint spans from sorted cut points
        let mut points: Vec<usize> = cuts.into_iter().map(|c| c % (len + 1)).collect();
        points.sort_unstable();
        points.dedup();
        let mut spans = Vec::new();
        for pair in points.chunks(2) {
            if let [a, b] = pair {
                if a < b {
                    spans.push(Span { start: *a, end: *b });
                }
            }
        }
        let tags = encode_bio(&spans, len);
        prop_assert_eq!(decode_bio(&tags), spans);
    }

    // Mention scores stay inside the open interval and map into (1, 5).
    #[test]
    fn mention_scores_bounded(words in proptest::collection::vec("[a-z]{2,8}", 1..12)) {
        let lexicon = OpinionLexicon::default_lexicon();
        let tokens: Vec<Token> = words.iter().map(|w| Token {
            surface: w.clone(),
            stem: w.clone(),
        }).collect();
        let span = Span { start: 0, end: 1 };
        let s = score_mention(span, &tokens, &lexicon, 4);
        prop_assert!(s > -1.0 && s < 1.0);
        let a = 3.0 + 2.0 * s;
        prop_assert!(a > 1.0 && a < 5.0);
    }

    // SMOTE balances exactly and every synthetic is a convex blend.
    #[test]
    fn smote_balances_and_interpolates(
        n_min in 2usize..8,
        n_maj in 8usize..20,
        dim in 1usize..5,
        seed in 0u64..1000,
    ) {
        let mut rng = aspectrec::rng::Lcg::new(seed);
        let mut samples = Vec::new();
        for _ in 0..n_min {
            samples.push(FeatureSample {
                features: (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect(),
                label: PolarityLabel::Negative,
                synthetic: false,
            });
        }
        for _ in 0..n_maj {
            samples.push(FeatureSample {
                features: (0..dim).map(|_| rng.uniform_in(-2.0, 2.0)).collect(),
                label: PolarityLabel::Positive,
                synthetic: false,
            });
        }
        let out = smote(&samples, 3, seed).unwrap();
        let neg = out.samples.iter().filter(|s| s.label == PolarityLabel::Negative).count();
        let pos = out.samples.len() - neg;
        prop_assert_eq!(neg, pos);
        for (synth, trace) in out.samples[samples.len()..].iter().zip(&out.trace) {
            for ((s, b), nn) in synth.features.iter()
                .zip(&samples[trace.base].features)
                .zip(&samples[trace.neighbor].features)
            {
                let expected = b + trace.delta * (nn - b);
                prop_assert!((s - expected).abs() <= 1e-9);
                let lo = b.min(*nn) - 1e-9;
                let hi = b.max(*nn) + 1e-9;
                prop_assert!(*s >= lo && *s <= hi, "off segment");
            }
        }
    }

    // Splits partition their input for every fraction and seed.
    #[test]
    fn split_partitions(n in 2usize..60, seed in 0u64..500, pct in 1usize..99) {
        let records: Vec<usize> = (0..n).collect();
        let fraction = pct as f64 / 100.0;
        let (train, test) = eval::split(&records, fraction, seed).unwrap();
        prop_assert_eq!(train.len(), (n as f64 * fraction).floor() as usize);
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, records);
    }

    // Vocabulary ids are contiguous from 1 and deterministic.
    #[test]
    fn vocabulary_ids_contiguous(words in proptest::collection::vec("[a-z]{1,6}", 1..30)) {
        let seq = TokenSeq {
            tokens: words.iter().map(|w| Token { surface: w.clone(), stem: w.clone() }).collect(),
            label: None,
            user_id: "u".into(),
            item_id: "i".into(),
        };
        let vocab = build_vocabulary(std::slice::from_ref(&seq), 1).unwrap();
        let ids: BTreeSet<u32> = seq.tokens.iter().map(|t| vocab.id(&t.stem)).collect();
        let distinct: BTreeSet<&str> = words.iter().map(|s| s.as_str()).collect();
        prop_assert_eq!(ids.len(), distinct.len());
        prop_assert_eq!(*ids.iter().max().unwrap() as usize, distinct.len());
        prop_assert!(!ids.contains(&0));
        let again = build_vocabulary(std::slice::from_ref(&seq), 1).unwrap();
        prop_assert_eq!(vocab, again);
    }
}
