use proptest::prelude::*;

use synproj::dsl::{Action, ActionProgram, Skeleton};
use synproj::embedding::{cosine, embed, EmbeddingProvider, HashedEmbedding};
use synproj::eval::{metric_em, metric_f1, normalize_answer};
use synproj::fixtures;
use synproj::generator::generate_dataset;
use synproj::projection::{loss_and_gradient, SkeletonClassifier};

fn phrase() -> impl Strategy<Value = String> {
    prop::collection::vec("[A-Za-z0-9'-]{1,8}", 1..4).prop_map(|w| w.join(" "))
}

fn leaf() -> impl Strategy<Value = ActionProgram> {
    (prop::bool::ANY, phrase()).prop_map(|(date, arg)| {
        let action = if date { Action::FindDate } else { Action::Find };
        ActionProgram::leaf(action, arg).unwrap()
    })
}

/// Arity-correct trees of any typing.
fn tree() -> impl Strategy<Value = ActionProgram> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let unary = [
            Action::Filter,
            Action::Relocate,
            Action::Count,
            Action::Max,
            Action::Min,
            Action::FindNum,
            Action::FindSpan,
            Action::YearDiffSingleEvent,
        ];
        let binary = [Action::YearDifference, Action::CompareDateLesserThan, Action::CompareDateGreaterThan];
        prop_oneof![
            (prop::sample::select(unary.to_vec()), inner.clone(), phrase())
                .prop_map(|(a, c, arg)| { ActionProgram::new(a, a.takes_argument().then_some(arg), vec![c]).unwrap() }),
            (prop::sample::select(binary.to_vec()), inner.clone(), inner)
                .prop_map(|(a, l, r)| ActionProgram::new(a, None, vec![l, r]).unwrap()),
        ]
    })
}

proptest! {
    #[test]
    fn serialization_round_trips(p in tree()) {
        prop_assert_eq!(ActionProgram::parse(&p.serialize()).unwrap(), p);
    }

    #[test]
    fn skeletonize_is_idempotent(p in tree()) {
        let s = p.skeleton();
        prop_assert_eq!(s.program().skeleton(), s.clone());
        prop_assert_eq!(s.program().node_count(), p.node_count());
        prop_assert_eq!(Skeleton::parse(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn embedding_ignores_word_order(words in prop::collection::vec("[a-z]{2,7}", 1..8), seed in any::<u64>()) {
        let table = fixtures::vectors();
        let mut shuffled = words.clone();
        let n = shuffled.len();
        shuffled.rotate_left((seed as usize) % n);
        let a = embed(&table, &words.join(" "));
        let b = embed(&table, &shuffled.join(" "));
        prop_assert_eq!(a.known_token_count, b.known_token_count);
        if a.known_token_count > 0 {
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cosine_is_scale_invariant(q in "[a-z ]{3,40}", factor in 0.01f64..100.0) {
        let table = fixtures::vectors();
        let scaled = table.scaled(factor);
        let probe = "who threw the longest touchdown pass";
        let (a, b) = (table.embed(&q).values, table.embed(probe).values);
        let (sa, sb) = (scaled.embed(&q).values, scaled.embed(probe).values);
        if let (Ok(x), Ok(y)) = (cosine(&a, &b), cosine(&sa, &sb)) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(u in prop::collection::vec(-5.0f64..5.0, 8), v in prop::collection::vec(-5.0f64..5.0, 8)) {
        if let (Ok(a), Ok(b)) = (cosine(&u, &v), cosine(&v, &u)) {
            prop_assert_eq!(a, b);
            prop_assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn hashed_embedding_is_unit_length(text in "[a-zA-Z ]{1,30}") {
        let v = HashedEmbedding { dim: 32 }.embed(&text).values;
        let n: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!(n == 0.0 || (n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn probabilities_form_a_simplex(weights in prop::collection::vec(-3.0f64..3.0, 3 * 5), x in prop::collection::vec(-2.0f64..2.0, 4)) {
        let labels: Vec<Skeleton> = ["count -> find", "max -> find", "min -> find"].iter().map(|s| Skeleton::parse(s).unwrap()).collect();
        let clf = SkeletonClassifier::new(labels, 4, weights).unwrap();
        let c = clf.classify_vector(&x).unwrap();
        prop_assert!(c.probabilities.iter().all(|p| (0.0..=1.0).contains(p)));
        prop_assert!((c.probabilities.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let best = c.probabilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(c.probabilities[c.top], best);
    }

    #[test]
    fn gradient_matches_finite_differences(
        weights in prop::collection::vec(-1.0f64..1.0, 3 * 4),
        xs in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..6),
        label_seed in any::<u64>(),
    ) {
        let ys: Vec<usize> = (0..xs.len()).map(|i| ((label_seed >> (2 * i)) % 3) as usize).collect();
        let batch: Vec<usize> = (0..xs.len()).collect();
        let (_, grad) = loss_and_gradient(&weights, 3, 3, &xs, &ys, &batch, 0.1);
        let h = 1e-6;
        for k in 0..weights.len() {
            let mut plus = weights.clone();
            let mut minus = weights.clone();
            plus[k] += h;
            minus[k] -= h;
            let numeric = (loss_and_gradient(&plus, 3, 3, &xs, &ys, &batch, 0.1).0
                - loss_and_gradient(&minus, 3, 3, &xs, &ys, &batch, 0.1).0) / (2.0 * h);
            prop_assert!((numeric - grad[k]).abs() <= 1e-6 * (1.0 + numeric.abs()));
        }
    }

    #[test]
    fn exact_match_implies_full_f1(a in "[a-zA-Z0-9 .,]{0,20}", b in "[a-zA-Z0-9 .,]{0,20}") {
        let f = metric_f1(&a, &b);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(f, metric_f1(&b, &a));
        if metric_em(&a, &b) == 1.0 {
            prop_assert_eq!(f, 1.0);
        }
        prop_assert_eq!(metric_em(&a, &a), 1.0);
    }

    #[test]
    fn normalization_is_idempotent(text in "[a-zA-Z0-9 .,'!]{0,30}") {
        let once = normalize_answer(&text);
        prop_assert_eq!(normalize_answer(&once.join(" ")), once);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generation_is_seed_deterministic(seed in any::<u64>(), n in 1usize..60) {
        let templates = fixtures::templates();
        let corpus = fixtures::corpus();
        let a = generate_dataset(&templates, &corpus, n, seed).unwrap();
        let b = generate_dataset(&templates, &corpus, n, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for e in &a {
            let t = templates.iter().find(|t| Some(&t.id) == e.template_id.as_ref()).unwrap();
            prop_assert!(e.question.to_lowercase().starts_with(&t.prefix.to_lowercase()));
            prop_assert_eq!(&e.skeleton(), &t.skeleton);
        }
    }
}
