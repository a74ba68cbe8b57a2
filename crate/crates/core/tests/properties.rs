mod common;

use std::cmp::Ordering;

use common::*;
use elicit_core::case_space::{
    canonical_index, case_at, enumerate_cases, normalize_sums, weight_sum, CaseVector,
};
use elicit_core::density::{
    em_fit, em_step, select_component_count, EmOptions, GaussianComponent, GaussianMixture,
    KernelDensity,
};
use elicit_core::explain::{
    build_lattice, enumerate_concepts, enumerate_concepts_parallel, FormalContext,
    ProbabilityCategory, CATEGORIES,
};
use elicit_core::io::{parse_cxt, parse_scores_csv, scores_csv, write_cxt};
use elicit_core::normal::std_normal_cdf;
use elicit_core::pipeline::prepare;
use elicit_core::questionnaire::{
    apply_merge, default_questionnaire, default_weights, load_questionnaire, mean_weights,
    WeightMatrix,
};
use elicit_core::scores::{ApproachScores, ScoreRow, ScoreTable};
use fixedbitset::FixedBitSet;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::Rng;

fn mixture_strategy() -> impl Strategy<Value = GaussianMixture> {
    vec((0.05f64..1.0, -2.0f64..2.0, 0.02f64..1.0), 1..4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|p| p.0).sum();
        GaussianMixture::new(
            parts
                .into_iter()
                .map(|(w, mean, std_dev)| GaussianComponent {
                    weight: w / total,
                    mean,
                    std_dev,
                })
                .collect(),
        )
        .unwrap()
    })
}

fn support(m: &GaussianMixture) -> (f64, f64) {
    let lo = m.components().iter().map(|c| c.mean - 10.0 * c.std_dev).fold(f64::INFINITY, f64::min);
    let hi = m.components().iter().map(|c| c.mean + 10.0 * c.std_dev).fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn context_strategy() -> impl Strategy<Value = FormalContext> {
    (0usize..=8, 0usize..=8)
        .prop_flat_map(|(n, m)| vec(vec(any::<bool>(), m), n).prop_map(move |rows| (m, rows)))
        .prop_map(|(m, rows)| {
            FormalContext::new(
                (0..rows.len()).map(|i| format!("o{i}")).collect(),
                (0..m).map(|j| format!("a{j}")).collect(),
                &rows,
            )
            .unwrap()
        })
}

fn bits(len: usize, ones: &[usize]) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(len);
    ones.iter().for_each(|&i| b.insert(i));
    b
}

/// `a` precedes `b` lectically: the smallest element where they differ is in `b`.
fn lectically_before(a: &FixedBitSet, b: &FixedBitSet) -> bool {
    a.symmetric_difference(b).min().is_some_and(|i| b.contains(i))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn em_log_likelihood_never_decreases(
        data in vec(-5.0f64..5.0, 12..80),
        m in 1usize..4,
    ) {
        let opts = EmOptions { max_iterations: 300, ..EmOptions::default() };
        let (_, summary) = em_fit(&data, m, &opts).unwrap();
        for w in summary.trace.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn mixture_mass_is_one(m in mixture_strategy()) {
        let (lo, hi) = support(&m);
        let mass = integrate(&|x| m.pdf(x), lo, hi, 1e-10);
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn kde_mass_is_one(points in vec(-1.0f64..1.0, 1..30), h in 0.01f64..0.5) {
        let kde = KernelDensity::new(points.clone(), h).unwrap();
        let lo = points.iter().copied().fold(f64::INFINITY, f64::min) - 10.0 * h;
        let hi = points.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 10.0 * h;
        let mass = integrate(&|x| kde.pdf(x), lo, hi, 1e-10);
        prop_assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn cdfs_are_monotone(m in mixture_strategy(), points in vec(-1.0f64..1.0, 1..20), h in 0.01f64..0.5) {
        let kde = KernelDensity::new(points, h).unwrap();
        let (lo, hi) = support(&m);
        let mut prev = (0.0, 0.0);
        for x in grid(lo.min(-2.0), hi.max(2.0), 10_000) {
            let cur = (m.cdf(x), kde.cdf(x));
            prop_assert!(cur.0 >= prev.0 && cur.1 >= prev.1);
            prop_assert!((0.0..=1.0).contains(&cur.0) && (0.0..=1.0).contains(&cur.1));
            prev = cur;
        }
    }

    #[test]
    fn posteriors_sum_to_one(m in mixture_strategy(), x in -50.0f64..50.0) {
        let p = m.posteriors(x);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn normalization_preserves_order(raw in vec(-400i32..400, 2..60)) {
        let sums: Vec<f64> = raw.iter().map(|&r| r as f64 * 0.25).collect();
        prop_assume!(sums.iter().any(|&s| s != sums[0]));
        let t = normalize_sums(&sums).unwrap();
        for i in 0..sums.len() {
            for j in 0..sums.len() {
                prop_assert_eq!(
                    sums[i].partial_cmp(&sums[j]),
                    t.normalized()[i].partial_cmp(&t.normalized()[j])
                );
            }
        }
    }

    #[test]
    fn weight_sum_is_additive_over_questions(index in 0usize..1536) {
        let q = default_questionnaire();
        let v = mean_weights(&default_weights()).unwrap().aligned_to(&q).unwrap();
        let case = case_at(&q, index).unwrap();
        let total = weight_sum(&case, &v).unwrap();
        let mut parts = 0.0;
        for (i, question) in q.questions().iter().enumerate() {
            let range = q.offset(i)..q.offset(i) + question.answers.len();
            let partial: Vec<bool> = (0..q.answer_count())
                .map(|p| range.contains(&p) && case.is_true(p))
                .collect();
            parts += weight_sum(&CaseVector::new(partial), &v).unwrap();
        }
        prop_assert!((parts - total).abs() < 1e-12);
    }

    #[test]
    fn canonical_order_round_trips(shape in vec((any::<bool>(), 1usize..5), 1..5)) {
        let mut text = String::new();
        for (qi, (multi, k)) in shape.iter().enumerate() {
            let answers: Vec<String> = (0..*k).map(|a| format!("{{ id = \"a{a}_q{qi}\" }}")).collect();
            let mode = if *multi { "multi_select_with_exclusive_none" } else { "exclusive" };
            text.push_str(&format!("[[questions]]\nid = \"q{qi}\"\nmode = \"{mode}\"\nanswers = [{}]\n", answers.join(", ")));
            if *multi {
                text.push_str(&format!("none_answer_id = \"a0_q{qi}\"\n"));
            }
        }
        let q = load_questionnaire(&text).unwrap().questionnaire;
        let expected: usize = shape
            .iter()
            .map(|&(multi, k)| if multi { 1 << (k - 1) } else { k })
            .product();
        let cases = enumerate_cases(&q).unwrap();
        prop_assert_eq!(cases.len(), expected);
        for (i, c) in cases.iter().enumerate() {
            prop_assert_eq!(canonical_index(c, &q).unwrap(), i);
        }
    }

    #[test]
    fn merged_mean_is_mean_of_source_means(
        rows in vec(vec(-4i32..=12, 5), 1..8),
    ) {
        let text = r#"
[[questions]]
id = "q1"
mode = "multi_select_with_exclusive_none"
none_answer_id = "none"
answers = [{ id = "none" }, { id = "s1" }, { id = "s2" }, { id = "s3" }, { id = "other" }]
"#;
        let doc = load_questionnaire(text).unwrap();
        let ids: Vec<String> = ["none", "s1", "s2", "s3", "other"].iter().map(|s| s.to_string()).collect();
        let doctors: Vec<String> = (0..rows.len()).map(|d| format!("d{d}")).collect();
        let cells = rows.iter().flatten().map(|&w| Some(w as f64 * 0.25)).collect();
        let wm = WeightMatrix::new(doctors, ids, cells).unwrap();
        let rule = elicit_core::questionnaire::MergeRule {
            source_answer_ids: vec!["s1".into(), "s2".into(), "s3".into()],
            merged_answer: elicit_core::questionnaire::MergedAnswer { id: "merged".into(), label: String::new() },
        };
        let merged = apply_merge(&wm, &rule, &doc.questionnaire).unwrap();
        let before = mean_weights(&wm).unwrap();
        let after = mean_weights(&merged).unwrap();
        let expected = (before.get("s1").unwrap() + before.get("s2").unwrap() + before.get("s3").unwrap()) / 3.0;
        prop_assert!((after.get("merged").unwrap() - expected).abs() < 1e-12);
        prop_assert_eq!(after.get("other"), before.get("other"));
        prop_assert_eq!(after.answer_ids(), &["none", "merged", "other"].map(String::from)[..]);
    }

    #[test]
    fn scores_csv_round_trips(
        rows in vec((vec(any::<bool>(), 3), any::<f64>(), 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 0usize..3), 0..20),
    ) {
        let table = ScoreTable {
            answer_ids: vec!["x".into(), "y".into(), "z".into()],
            rows: rows
                .into_iter()
                .enumerate()
                .map(|(i, (answers, raw, a, b, c, k))| ScoreRow {
                    case_index: i * 7,
                    answers: CaseVector::new(answers),
                    raw_sum: if raw.is_finite() { raw } else { 0.0 },
                    normalized_sum: a,
                    scores: ApproachScores { gmm_cdf: a, kde_cdf: b, posterior: c },
                    category: CATEGORIES[k],
                })
                .collect(),
        };
        let parsed = parse_scores_csv(&scores_csv(&table).unwrap()).unwrap();
        prop_assert_eq!(parsed.rows.len(), table.rows.len());
        for (p, t) in parsed.rows.iter().zip(&table.rows) {
            prop_assert_eq!(p.raw_sum.to_bits(), t.raw_sum.to_bits());
            prop_assert_eq!(p.scores.posterior.to_bits(), t.scores.posterior.to_bits());
        }
        prop_assert_eq!(parsed, table);
    }
}

proptest! {
    // the contexts below are the 50 random contexts of up to 8 x 8
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn galois_connection_laws(ctx in context_strategy(), a_mask in any::<u8>(), b_mask in any::<u8>()) {
        let n = ctx.object_count();
        let objs = |mask: u8| bits(n, &(0..n).filter(|&i| mask >> i & 1 == 1).collect::<Vec<_>>());
        let a = objs(a_mask);
        let mut ab = a.clone();
        ab.union_with(&objs(b_mask));
        prop_assert!(a.is_subset(&ctx.close_objects(&a)));
        prop_assert!(ctx.up(&ab).is_subset(&ctx.up(&a)));
        prop_assert_eq!(ctx.up(&ctx.down(&ctx.up(&a))), ctx.up(&a));

        let m = ctx.attribute_count();
        let attrs = bits(m, &(0..m).filter(|&j| a_mask >> j & 1 == 1).collect::<Vec<_>>());
        prop_assert!(attrs.is_subset(&ctx.close_attributes(&attrs)));
        prop_assert_eq!(ctx.down(&ctx.up(&ctx.down(&attrs))), ctx.down(&attrs));
    }

    #[test]
    fn next_closure_matches_brute_force(ctx in context_strategy()) {
        let concepts = enumerate_concepts(&ctx);
        let oracle = brute_force_concepts(&ctx);
        prop_assert_eq!(concepts.len(), oracle.len());

        let mut found: Vec<(Vec<usize>, Vec<usize>)> = concepts
            .iter()
            .map(|c| (c.extent.ones().collect(), c.intent.ones().collect()))
            .collect();
        found.sort_by(|a, b| a.1.cmp(&b.1));
        prop_assert_eq!(&found, &oracle);

        for w in concepts.windows(2) {
            prop_assert!(lectically_before(&w[0].intent, &w[1].intent));
        }
        prop_assert_eq!(enumerate_concepts_parallel(&ctx), concepts.clone());

        let lattice = build_lattice(concepts).unwrap();
        let extents: Vec<Vec<usize>> = lattice.concepts().iter().map(|c| c.extent.ones().collect()).collect();
        let mut edges = lattice.edges().to_vec();
        edges.sort_unstable();
        prop_assert_eq!(edges, brute_force_covers(&extents));
        prop_assert_eq!(lattice.concepts()[lattice.top()].extent.count_ones(..), ctx.object_count());
        let mut all = FixedBitSet::with_capacity(ctx.attribute_count());
        all.insert_range(..);
        prop_assert_eq!(&lattice.concepts()[lattice.bottom()].intent, &ctx.close_attributes(&all));
    }

    #[test]
    fn cxt_round_trips(ctx in context_strategy()) {
        let text = write_cxt(&ctx).unwrap();
        prop_assert_eq!(parse_cxt(&text).unwrap(), ctx);
    }
}

#[test]
fn std_normal_cdf_matches_oracle() {
    for &(x, expected) in PHI_ORACLE {
        let got = std_normal_cdf(x);
        assert!((got - expected).abs() <= 1e-10, "x={x}: {got} vs {expected}");
    }
}

#[test]
fn gmm_cdf_matches_quadrature() {
    let m = published_mixture();
    let lo = -3.0;
    let mut rng = rng(7);
    for _ in 0..100 {
        let x: f64 = rng.random_range(-0.5..1.5);
        let q = integrate(&|t| m.pdf(t), lo, x, 1e-12);
        assert!((m.cdf(x) - q).abs() < 1e-7, "x={x}: {} vs {q}", m.cdf(x));
    }
}

#[test]
fn published_reference_values() {
    let m = published_mixture();
    assert!((m.cdf(0.0) - scipy::GMM_CDF_AT_0).abs() < 1e-12);
    assert!((m.cdf(1.0) - scipy::GMM_CDF_AT_1).abs() < 1e-12);
    assert!((m.cdf(0.5) - scipy::GMM_CDF_AT_HALF).abs() < 1e-12);
    assert!((m.posteriors(0.0)[1] - scipy::POSTERIOR_AT_0).abs() < 1e-12);
}

#[test]
fn tight_gaussian_selects_one_component() {
    let mut rng = rng(11);
    let data: Vec<f64> = (0..500)
        .map(|_| {
            // Box-Muller
            let (u, v): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random());
            0.5 + 0.01 * (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
        })
        .collect();
    let sel = select_component_count(&data, 4, &EmOptions::default()).unwrap();
    assert_eq!(sel.bic_choice, 1);
    assert_eq!(sel.selected, 1);
    assert_eq!(select_component_count(&data, 1, &EmOptions::default()).unwrap().selected, 1);
}

fn largest_step(model: &GaussianMixture, data: &[f64]) -> f64 {
    let next = em_step(model, data, 1e-6);
    model
        .components()
        .iter()
        .zip(next.components())
        .flat_map(|(a, b)| [a.weight - b.weight, a.mean - b.mean, a.std_dev - b.std_dev])
        .fold(0.0, |m: f64, d| m.max(d.abs()))
}

#[test]
fn converged_fit_is_an_em_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let prep = prepare(&fitted_config(dir.path())).unwrap();
    let data = prep.sums.normalized();

    // the default 1e-9 likelihood rule stops while weights still move by ~7e-6 per step
    let (model, summary) = em_fit(data, 2, &EmOptions::default()).unwrap();
    assert!(summary.converged && summary.is_monotone());
    assert!(largest_step(&model, data) < 1e-5);

    let tight = EmOptions {
        tolerance: 1e-12,
        max_iterations: 100_000,
        ..EmOptions::default()
    };
    let (model, summary) = em_fit(data, 2, &tight).unwrap();
    assert!(summary.converged && summary.is_monotone());
    assert!(largest_step(&model, data) < 1e-6);
}

#[test]
fn lectic_helper_agrees_with_definition() {
    assert!(lectically_before(&bits(3, &[2]), &bits(3, &[1])));
    assert!(!lectically_before(&bits(3, &[0]), &bits(3, &[1, 2])));
    assert_eq!(
        ProbabilityCategory::Low.cmp(&ProbabilityCategory::High),
        Ordering::Less
    );
}
