mod common;

use codemia::eval::{auc_roc, make_splits};
use codemia::mask::{AnomalyKind, LintRule, MaskEngine};
use codemia::scoring::{anomaly_score, loss_score, mink_score, sigmoid, zscore};
use codemia::{
    build_mask, project, Label, Language, LintDiagnostic, SourceSample, TokenRecord, TokenSpan,
    TokenWeights,
};
use proptest::prelude::*;

const WEIGHTS: [f64; 5] = [0.1, 1.0, 3.0, 5.0, 10.0];

fn language() -> impl Strategy<Value = Language> {
    prop::sample::select(Language::ALL.to_vec())
}

/// Code-flavoured text: fragments that exercise every extractor, glued with
/// arbitrary characters.
fn code_text() -> impl Strategy<Value = String> {
    let fragment = prop_oneof![
        Just("calculateTotalRevenue".to_string()),
        Just("hesaplaToplam".to_string()),
        Just("x = 1".to_string()),
        Just("\"str ing\"".to_string()),
        Just("'c'".to_string()),
        Just("# TODO fix\n".to_string()),
        Just("// FIXME\n".to_string()),
        Just("/* block */".to_string()),
        Just("\n\n\n\n".to_string()),
        Just("\t  ".to_string()),
        Just("   \n".to_string()),
        Just("def f(a):\n    return a\n".to_string()),
        Just("fn main() { let v = vec![1]; }\n".to_string()),
        Just("日本語 café".to_string()),
        "[a-zA-Z_]{1,14}",
        "[ -~]{0,20}",
        any::<char>().prop_map(String::from),
    ];
    prop::collection::vec(fragment, 0..24).prop_map(|v| v.concat())
}

fn sample() -> impl Strategy<Value = SourceSample> {
    (language(), code_text()).prop_map(|(lang, text)| SourceSample::new("p", lang, text))
}

/// A mask over `n` characters together with a random contiguous
/// tokenization (zero-width tokens allowed).
fn mask_and_tokens() -> impl Strategy<Value = (codemia::CharWeightMask, Vec<TokenSpan>)> {
    (1usize..80)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0usize..5, n),
                prop::collection::vec(0usize..n + 1, 0..12),
            )
        })
        .prop_map(|(tiers, cuts)| {
            let n = tiers.len();
            let tiers: Vec<_> = tiers
                .iter()
                .map(|&t| codemia::Tier::from_weight(WEIGHTS[t]).unwrap())
                .collect();
            let mask = codemia::CharWeightMask::from_tiers("m", &tiers, false);
            let mut cuts = cuts;
            cuts.push(0);
            cuts.push(n);
            cuts.sort_unstable();
            let spans = cuts
                .windows(2)
                .enumerate()
                .map(|(i, w)| TokenSpan::new(i, w[0], w[1]))
                .collect();
            (mask, spans)
        })
}

fn brute_auc(scores: &[f64], labels: &[Label]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, li) in labels.iter().enumerate() {
        for (j, lj) in labels.iter().enumerate() {
            if li.is_member() && !lj.is_member() {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    wins += 1.0;
                } else if scores[i] == scores[j] {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

fn scored_instance() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
    (2usize..50)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0i32..8, n),
                prop::collection::vec(any::<bool>(), n),
            )
        })
        .prop_filter("both classes", |(_, l)| {
            l.iter().any(|&b| b) && l.iter().any(|&b| !b)
        })
        .prop_map(|(s, l)| {
            (
                s.into_iter().map(f64::from).collect(),
                l.into_iter().map(Label::from).collect(),
            )
        })
}

fn records(z: &[f64]) -> Vec<TokenRecord> {
    z.iter()
        .enumerate()
        .map(|(i, &z)| TokenRecord {
            index: i + 1,
            start: 0,
            end: 0,
            z,
            logprob: -z.abs(),
        })
        .collect()
}

/// Token weights whose scored part (positions 1..) is `scored`.
fn weights(scored: &[f64]) -> TokenWeights {
    let mut raw = vec![0.1];
    raw.extend_from_slice(scored);
    TokenWeights::from_raw("w", raw).unwrap()
}

fn weighted_z() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec(
        (prop::sample::select(WEIGHTS.to_vec()), -6.0f64..6.0),
        1..40,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn mask_closure_and_length(s in sample()) {
        let w = build_mask(&s, None).materialize();
        prop_assert_eq!(w.len(), s.content.chars().count());
        prop_assert!(w.iter().all(|x| WEIGHTS.contains(x)));
    }

    #[test]
    fn mask_is_idempotent(s in sample()) {
        let engine = MaskEngine::default();
        let a = engine.analyze(&s, None);
        let b = engine.analyze(&s, None);
        prop_assert_eq!(a.spans, b.spans);
        prop_assert_eq!(a.mask, b.mask);
    }

    #[test]
    fn extra_spans_never_lower_weights(s in sample(), a in 0usize..200, len in 1usize..20) {
        let n = s.content.chars().count();
        prop_assume!(n > 0);
        let start = a % n;
        let end = (start + len).min(n);
        let before = build_mask(&s, None).materialize();
        let extra = [LintDiagnostic::new(start, end, LintRule::TrailingWhitespace)];
        let after = build_mask(&s, Some(&extra)).materialize();
        for (i, (b, a)) in before.iter().zip(&after).enumerate() {
            prop_assert!(a >= b);
            if (start..end).contains(&i) {
                prop_assert!(*a >= 5.0);
            }
        }
    }

    #[test]
    fn tags_inside_comments_keep_comment_weight(lang in language(), tag in prop::sample::select(codemia::mask::PSYCH_TAGS.to_vec()), word in "[a-z]{3,8}") {
        let marker = match lang {
            Language::Python | Language::Ruby => "#",
            _ => "//",
        };
        let text = format!("{marker} {word} {tag} {word}\n");
        let s = SourceSample::new("t", lang, text.as_str());
        let analysis = MaskEngine::default().analyze(&s, None);
        let w = analysis.mask.materialize();
        let comment_len = text.trim_end().chars().count();
        prop_assert!(w[..comment_len].iter().all(|&x| x == 10.0));
        prop_assert!(analysis.spans.iter().any(|s| s.kind == AnomalyKind::PsychTag));
    }

    #[test]
    fn projection_sums_to_one_and_takes_max((mask, spans) in mask_and_tokens()) {
        let tw = project(&mask, &spans).unwrap();
        let total: f64 = tw.normalized.iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-6);
        let chars = mask.materialize();
        for (s, &raw) in spans.iter().zip(&tw.raw) {
            let expect = if s.start == s.end {
                0.1
            } else {
                chars[s.start..s.end].iter().cloned().fold(f64::MIN, f64::max)
            };
            prop_assert_eq!(raw, expect);
        }
    }

    #[test]
    fn projection_ignores_span_order((mask, spans) in mask_and_tokens(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = spans.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(project(&mask, &spans).unwrap(), project(&mask, &shuffled).unwrap());
    }

    #[test]
    fn refining_a_token_keeps_its_max((mask, spans) in mask_and_tokens(), pick in any::<prop::sample::Index>(), cut in any::<prop::sample::Index>()) {
        let candidates: Vec<usize> = (0..spans.len()).filter(|&i| spans[i].end - spans[i].start >= 2).collect();
        prop_assume!(!candidates.is_empty());
        let t = candidates[pick.index(candidates.len())];
        let s = spans[t];
        let mid = s.start + 1 + cut.index(s.end - s.start - 1);
        let mut refined = Vec::new();
        for sp in &spans {
            if sp.index == t {
                refined.push(TokenSpan::new(refined.len(), sp.start, mid));
                refined.push(TokenSpan::new(refined.len(), mid, sp.end));
            } else {
                refined.push(TokenSpan::new(refined.len(), sp.start, sp.end));
            }
        }
        let before = project(&mask, &spans).unwrap().raw[t];
        let after = project(&mask, &refined).unwrap().raw;
        let (a, b) = (after[t], after[t + 1]);
        prop_assert!(a <= before && b <= before);
        prop_assert_eq!(a.max(b), before);
    }

    #[test]
    fn anomaly_is_permutation_invariant(pairs in weighted_z(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let score = |p: &[(f64, f64)]| {
            let (w, z): (Vec<f64>, Vec<f64>) = p.iter().cloned().unzip();
            anomaly_score(&records(&z), &weights(&w)).unwrap()
        };
        prop_assert!((score(&pairs) - score(&shuffled)).abs() <= 1e-12);
    }

    #[test]
    fn anomaly_is_scale_invariant(pairs in weighted_z(), c in 0.01f64..100.0) {
        let (w, z): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let scaled: Vec<f64> = w.iter().map(|x| x * c).collect();
        let a = anomaly_score(&records(&z), &weights(&w)).unwrap();
        let b = anomaly_score(&records(&z), &weights(&scaled)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
        prop_assert!(a > 0.0 && a < 1.0);
    }

    #[test]
    fn anomaly_is_monotone_in_z(pairs in weighted_z(), i in any::<prop::sample::Index>(), dz in 0.01f64..3.0) {
        let (w, mut z): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let a = anomaly_score(&records(&z), &weights(&w)).unwrap();
        let k = i.index(z.len());
        z[k] += dz;
        let b = anomaly_score(&records(&z), &weights(&w)).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn anomaly_matches_direct_sum(pairs in weighted_z()) {
        let (w, z): (Vec<f64>, Vec<f64>) = pairs.iter().cloned().unzip();
        let total: f64 = w.iter().sum();
        let direct: f64 = w.iter().zip(&z).map(|(w, z)| w / total / (1.0 + (-z).exp())).sum();
        let got = anomaly_score(&records(&z), &weights(&w)).unwrap();
        prop_assert!((got - direct).abs() <= 1e-12);
    }

    #[test]
    fn mink_full_equals_loss(z in prop::collection::vec(-8.0f64..8.0, 1..60)) {
        let r = records(&z);
        prop_assert_eq!(mink_score(&r, 100.0).unwrap(), loss_score(&r).unwrap());
    }

    #[test]
    fn zscore_shift_and_scale(logits in prop::collection::vec(-20.0f64..20.0, 2..64), shift in -50.0f64..50.0, scale in 0.05f64..20.0, pick in any::<prop::sample::Index>()) {
        let c = pick.index(logits.len());
        let base = zscore(&logits, c).unwrap();
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let scaled: Vec<f64> = logits.iter().map(|x| x * scale).collect();
        prop_assert!((zscore(&shifted, c).unwrap().value - base.value).abs() <= 1e-9);
        prop_assert!((zscore(&scaled, c).unwrap().value - base.value).abs() <= 1e-9);
    }

    #[test]
    fn auc_matches_pairwise_count((scores, labels) in scored_instance()) {
        prop_assert!((auc_roc(&scores, &labels).unwrap() - brute_auc(&scores, &labels)).abs() <= 1e-12);
    }

    #[test]
    fn auc_complement((scores, labels) in scored_instance()) {
        let neg: Vec<f64> = scores.iter().map(|s| -s).collect();
        let sum = auc_roc(&scores, &labels).unwrap() + auc_roc(&neg, &labels).unwrap();
        prop_assert!((sum - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn auc_ignores_monotone_transforms((scores, labels) in scored_instance()) {
        let t: Vec<f64> = scores.iter().map(|s| sigmoid(s * 0.7 - 1.0).ln() + s.powi(3)).collect();
        prop_assert_eq!(auc_roc(&scores, &labels).unwrap(), auc_roc(&t, &labels).unwrap());
    }

    #[test]
    fn splits_are_disjoint_and_balanced(seed in any::<u64>(), half in 1usize..12, extra in 0usize..6, frac in 0.1f64..0.9) {
        let mut manifest = Vec::new();
        for lang in [Language::Python, Language::Go] {
            for i in 0..(half + extra) * 2 {
                manifest.push(
                    SourceSample::new(format!("{lang}-{i}"), lang, "x")
                        .with_label(Label::from(i % 2 == 0)),
                );
            }
        }
        let plan = make_splits(&manifest, seed, half * 2, frac).unwrap();
        prop_assert_eq!(&plan, &make_splits(&manifest, seed, half * 2, frac).unwrap());
        let label = |id: &str| manifest.iter().find(|s| s.id == id).unwrap().label.unwrap();
        for split in plan.languages.values() {
            prop_assert_eq!(split.train.len() + split.inference.len(), half * 2);
            prop_assert!(split.train.iter().all(|id| !split.inference.contains(id)));
            for side in [&split.train, &split.inference] {
                let members = side.iter().filter(|id| label(id).is_member()).count();
                prop_assert_eq!(members * 2, side.len());
            }
        }
    }
}

#[test]
fn degenerate_logits_give_zero() {
    let z = zscore(&[2.0, 2.0, 2.0], 1).unwrap();
    assert_eq!(z.value, 0.0);
    assert!(z.degenerate);
}

#[test]
fn real_files_obey_closure() {
    for s in common::realworld().iter().take(50) {
        let w = build_mask(s, None).materialize();
        assert_eq!(w.len(), s.content.chars().count(), "{}", s.id);
        assert!(w.iter().all(|x| WEIGHTS.contains(x)), "{}", s.id);
    }
}
