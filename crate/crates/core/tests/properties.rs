//! Invariants checked over generated inputs.

use fusemine_core::ensemble::vote_predict;
use fusemine_core::eval::{self, auc_binary};
use fusemine_core::learners::{self, Algorithm, LearnerParams, Model, Structure};
use fusemine_core::preprocess::{min_max_normalize, BinningConfig, BinningParams};
use fusemine_core::select::{symmetric_uncertainty, CfsEvaluator};
use fusemine_core::{AttributeSpec, DataTable, Role, Value};
use proptest::prelude::*;

/// Rows of small nominal codes plus a class in the last position.
fn nominal_rows(max_attrs: usize) -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (1..=max_attrs, 8usize..40)
        .prop_flat_map(|(d, n)| (Just(d), prop::collection::vec(prop::collection::vec(0usize..3, d + 1), n)))
}

fn nominal_table(d: usize, rows: &[Vec<usize>]) -> DataTable {
    let labels = ["x", "y", "z"];
    let mut specs: Vec<AttributeSpec> = (0..d).map(|a| AttributeSpec::nominal(&format!("a{a}"), &labels)).collect();
    specs.push(AttributeSpec::nominal("class", &["p", "q", "r"]).with_role(Role::Class));
    DataTable::new(specs, rows.iter().map(|r| r.iter().map(|&v| Value::Nominal(v)).collect()).collect()).unwrap()
}

fn mixed_table(rows: &[(f64, usize, usize)]) -> DataTable {
    let specs = vec![
        AttributeSpec::numeric("num"),
        AttributeSpec::nominal("nom", &["u", "v", "w"]),
        AttributeSpec::nominal("class", &["p", "q", "r"]).with_role(Role::Class),
    ];
    let rows = rows
        .iter()
        .map(|&(x, a, c)| {
            let x = if x < -90.0 { Value::Missing } else { Value::Numeric(x) };
            vec![x, Value::Nominal(a), Value::Nominal(c)]
        })
        .collect();
    DataTable::new(specs, rows).unwrap()
}

fn argmax(d: &[f64]) -> usize {
    d.iter().enumerate().fold(0, |b, (i, x)| if *x > d[b] { i } else { b })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn su_is_symmetric_and_bounded(pairs in prop::collection::vec((0usize..4, 0usize..3), 1..80)) {
        let (a, b): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let ab = symmetric_uncertainty(&a, &b);
        prop_assert!((ab - symmetric_uncertainty(&b, &a)).abs() <= 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&ab));
    }

    #[test]
    fn normalization_is_monotone_onto_unit_interval(xs in prop::collection::vec(prop::option::weighted(0.9, -1e6f64..1e6), 2..60)) {
        prop_assume!(xs.iter().flatten().count() >= 1);
        let (ys, _) = min_max_normalize(&xs).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert_eq!(x.is_some(), y.is_some());
            if let Some(y) = y {
                prop_assert!((0.0..=1.0).contains(y));
            }
        }
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                if let (Some(a), Some(b), Some(ya), Some(yb)) = (xs[i], xs[j], ys[i], ys[j]) {
                    prop_assert!(a >= b || ya <= yb);
                }
            }
        }
    }

    #[test]
    fn bins_are_ordered_like_values(xs in prop::collection::vec(-1e3f64..1e3, 2..60)) {
        let col: Vec<Option<f64>> = xs.iter().copied().map(Some).collect();
        let p = BinningParams::fit(&col, &BinningConfig::default()).unwrap();
        for &a in &xs {
            for &b in &xs {
                prop_assert!(a > b || p.bin(a) <= p.bin(b));
            }
            prop_assert!(p.bin(a) < 3);
        }
    }

    #[test]
    fn folds_partition_rows_and_balance_sizes(classes in prop::collection::vec(0usize..3, 12..80), k in 2usize..8, seed in any::<u64>()) {
        let mut classes = classes;
        classes[..3].copy_from_slice(&[0, 1, 2]);
        let t = nominal_table(1, &classes.iter().map(|&c| vec![0, c]).collect::<Vec<_>>());
        let plan = eval::stratified_kfold(&t, k, seed).unwrap();
        let mut all: Vec<usize> = plan.folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..classes.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for c in 0..3 {
            let per: Vec<usize> = plan.folds.iter().map(|f| f.iter().filter(|&&r| classes[r] == c).count()).collect();
            prop_assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn auc_matches_pairwise_count(pairs in prop::collection::vec((0u8..6, any::<bool>()), 2..60)) {
        let scores: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
        let pos: Vec<bool> = pairs.iter().map(|p| p.1).collect();
        let (mut wins, mut n) = (0.0, 0.0);
        for i in 0..pos.len() {
            for j in 0..pos.len() {
                if pos[i] && !pos[j] {
                    n += 1.0;
                    wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
                }
            }
        }
        match auc_binary(&scores, &pos) {
            Some(a) => prop_assert!((a - wins / n).abs() <= 1e-9),
            None => prop_assert!(n == 0.0),
        }
    }

    #[test]
    fn vote_is_invariant_to_weight_scale(
        parts in prop::collection::vec((1u8..5, prop::collection::vec(0.01f64..1.0, 3)), 1..5),
        shift in -8i32..8,
        c in 0.01f64..100.0,
    ) {
        let norm: Vec<(f64, Vec<f64>)> = parts
            .iter()
            .map(|(w, p)| (f64::from(*w), p.iter().map(|x| x / p.iter().sum::<f64>()).collect()))
            .collect();
        let base: Vec<(f64, &[f64])> = norm.iter().map(|(w, p)| (*w, p.as_slice())).collect();
        let reference = vote_predict(&base).unwrap();
        let pow2: Vec<(f64, &[f64])> = norm.iter().map(|(w, p)| (w * 2f64.powi(shift), p.as_slice())).collect();
        prop_assert_eq!(&vote_predict(&pow2).unwrap(), &reference);
        let any: Vec<(f64, &[f64])> = norm.iter().map(|(w, p)| (w * c, p.as_slice())).collect();
        for (a, b) in vote_predict(&any).unwrap().iter().zip(&reference) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        prop_assert!((reference.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn merit_ignores_relabeling((d, rows) in nominal_rows(4), perm in Just([2usize, 0, 1])) {
        let t = nominal_table(d, &rows);
        let relabeled: Vec<Vec<usize>> = rows.iter().map(|r| {
            let mut r = r.clone();
            r[0] = perm[r[0]];
            r
        }).collect();
        let u = nominal_table(d, &relabeled);
        let (e, f) = (CfsEvaluator::new(&t).unwrap(), CfsEvaluator::new(&u).unwrap());
        let all: Vec<usize> = (0..d).collect();
        prop_assert!((e.merit(&all).unwrap() - f.merit(&all).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn duplicating_a_lone_feature_keeps_merit((d, rows) in nominal_rows(4)) {
        let dup: Vec<Vec<usize>> = rows.iter().map(|r| {
            let mut out = r[..d].to_vec();
            out.push(r[0]);
            out.push(r[d]);
            out
        }).collect();
        let e = CfsEvaluator::new(&nominal_table(d + 1, &dup)).unwrap();
        prop_assert!((e.merit(&[0, d]).unwrap() - e.merit(&[0]).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn merit_follows_the_formula((d, rows) in nominal_rows(5)) {
        let e = CfsEvaluator::new(&nominal_table(d, &rows)).unwrap();
        let subset: Vec<usize> = (0..d).collect();
        let k = d as f64;
        let rcf: f64 = subset.iter().map(|&a| e.class_su(a)).sum::<f64>() / k;
        let mut pairs = Vec::new();
        for i in 0..d {
            for j in i + 1..d {
                pairs.push(e.pair_su(i, j));
            }
        }
        let rff = if pairs.is_empty() { 0.0 } else { pairs.iter().sum::<f64>() / pairs.len() as f64 };
        let denom = (k + k * (k - 1.0) * rff).sqrt();
        let oracle = if denom > 0.0 { k * rcf / denom } else { 0.0 };
        prop_assert!((e.merit(&subset).unwrap() - oracle).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn every_learner_returns_distributions(
        rows in prop::collection::vec((-100.0f64..100.0, 0usize..3, 0usize..3), 4..40),
        seed in any::<u64>(),
    ) {
        let t = mixed_table(&rows);
        let probe = mixed_table(&[(-95.0, 0, 0), (0.0, 1, 0), (1e4, 2, 0), (-1e4, 1, 0)]);
        for alg in Algorithm::ALL {
            let m = learners::train(alg, &t, &LearnerParams::default(), seed).unwrap();
            for d in m.predict_table(&t).unwrap().iter().chain(m.predict_table(&probe).unwrap().iter()) {
                prop_assert_eq!(d.len(), 3);
                prop_assert!(d.iter().all(|p| (0.0..=1.0).contains(p)));
                prop_assert!((d.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn rendered_rules_predict_like_the_model(
        // Rule text carries no imputation values, so rows are complete.
        rows in prop::collection::vec((-90.0f64..100.0, 0usize..3, 0usize..3), 4..40),
        seed in any::<u64>(),
    ) {
        let t = mixed_table(&rows);
        for alg in [Algorithm::Ripper, Algorithm::Part] {
            let m = learners::train(alg, &t, &LearnerParams::default(), seed).unwrap();
            prop_assert!(matches!(m.structure, Structure::Rules(_)));
            let parsed = Model::from_rule_text(&m.render(), &m.attributes, &m.class).unwrap();
            prop_assert_eq!(parsed.render(), m.render());
            let a: Vec<usize> = m.predict_table(&t).unwrap().iter().map(|d| argmax(d)).collect();
            let b: Vec<usize> = parsed.predict_table(&t).unwrap().iter().map(|d| argmax(d)).collect();
            prop_assert_eq!(a, b);
        }
    }
}
