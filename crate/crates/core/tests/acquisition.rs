mod common;

use bal::acquisition::{
    bald_score, max_entropy_score, random_score, rank_pool, score, score_pool, variation_ratio_score, AcquisitionKind,
};
use bal::bayes::PredictiveSamples;
use bal::nn::{Arch, Network};
use common::{bald_via_kl, entropy_compensated, mean_compensated, random_samples, random_window, rng};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

fn samples(id: &str, rows: Vec<Vec<f64>>) -> PredictiveSamples {
    PredictiveSamples::new(id, rows, vec![]).unwrap()
}

fn random_pool(r: &mut rand_chacha::ChaCha8Rng, n: usize, classes: usize) -> Vec<PredictiveSamples> {
    (0..n)
        .map(|i| {
            let passes = r.random_range(1..12);
            samples(&format!("w{i:03}"), random_samples(r, passes, classes))
        })
        .collect()
}

/// Scores everything, sorts the whole list, then truncates.
fn brute_force_rank(pool: &[PredictiveSamples], kind: AcquisitionKind, budget: usize, seed: u64) -> Vec<String> {
    let mut all: Vec<(String, f64)> = pool
        .iter()
        .map(|s| (s.window_id.clone(), score(kind, s, seed)))
        .collect();
    all.sort_by(|a, b| {
        if a.1 != b.1 {
            b.1.partial_cmp(&a.1).unwrap()
        } else {
            a.0.cmp(&b.0)
        }
    });
    all.truncate(budget);
    all.into_iter().map(|(id, _)| id).collect()
}

#[test]
fn rank_examples() {
    let pool = vec![
        samples("w0", vec![vec![0.95, 0.05]]),
        samples("w1", vec![vec![0.5, 0.5]]),
        samples("w2", vec![vec![0.75, 0.25]]),
    ];
    assert_eq!(
        rank_pool(&pool, AcquisitionKind::VariationRatios, 2, 0).unwrap(),
        ["w1", "w2"]
    );
    assert!(rank_pool(&pool, AcquisitionKind::VariationRatios, 0, 0)
        .unwrap()
        .is_empty());
    assert!(rank_pool(&pool, AcquisitionKind::VariationRatios, 4, 0).is_err());
}

#[test]
fn ties_go_to_smaller_id() {
    let pool = vec![
        samples("b", vec![vec![0.6, 0.4]]),
        samples("a", vec![vec![0.4, 0.6]]),
        samples("c", vec![vec![0.6, 0.4]]),
    ];
    assert_eq!(
        rank_pool(&pool, AcquisitionKind::MaxEntropy, 3, 0).unwrap(),
        ["a", "b", "c"]
    );
}

#[test]
fn matches_full_sort_oracle() {
    let mut r = rng(50);
    for trial in 0..50 {
        let classes = [2, 3, 5][trial % 3];
        let n = r.random_range(1..40);
        let pool = random_pool(&mut r, n, classes);
        let budget = r.random_range(0..=n);
        for kind in AcquisitionKind::ALL {
            assert_eq!(
                rank_pool(&pool, kind, budget, trial as u64).unwrap(),
                brute_force_rank(&pool, kind, budget, trial as u64),
                "trial {trial} {kind}"
            );
        }
    }
}

#[test]
fn scores_agree_with_compensated_oracles() {
    let mut r = rng(9);
    for _ in 0..200 {
        let classes = r.random_range(2..6);
        let passes = r.random_range(1..20);
        let rows = random_samples(&mut r, passes, classes);
        let s = samples("w", rows.clone());
        let mean = mean_compensated(&rows);
        assert!((max_entropy_score(&s) - entropy_compensated(&mean)).abs() < 1e-9);
        assert!((bald_score(&s) - bald_via_kl(&rows)).abs() < 1e-9);
        let top = mean.iter().cloned().fold(0.0, f64::max);
        assert!((variation_ratio_score(&s) - (1.0 - top)).abs() < 1e-12);
    }
}

#[test]
fn random_scores_are_uniform_and_model_free() {
    let mean = (0..10_000).map(|i| random_score(&format!("w{i}"), 17)).sum::<f64>() / 10_000.0;
    assert!((0.49..=0.51).contains(&mean), "{mean}");
    assert_eq!(random_score("w3", 4), random_score("w3", 4));

    let mut r = rng(2);
    let pool: Vec<_> = (0..20)
        .map(|i| random_window(&mut r, &format!("p{i}"), 2, 32, None))
        .collect();
    let a = Network::<f32>::init(Arch::default(), 1).unwrap();
    let b = Network::<f32>::init(Arch::default(), 2).unwrap();
    let sa = score_pool(&a, &pool, AcquisitionKind::RandomSampling, 10, 5, 0).unwrap();
    let sb = score_pool(&b, &pool, AcquisitionKind::RandomSampling, 10, 5, 1).unwrap();
    let ids =
        |v: &[bal::acquisition::AcquisitionScore]| v.iter().map(|s| (s.window_id.clone(), s.score)).collect::<Vec<_>>();
    assert_eq!(ids(&sa), ids(&sb));
}

#[test]
fn pool_scores_do_not_depend_on_pool_order() {
    let mut r = rng(4);
    let net = Network::<f32>::init(Arch::default(), 4).unwrap();
    let mut pool: Vec<_> = (0..30)
        .map(|i| random_window(&mut r, &format!("p{i}"), 2, 32, None))
        .collect();
    let a = score_pool(&net, &pool, AcquisitionKind::Bald, 10, 8, 3).unwrap();
    pool.shuffle(&mut r);
    let b = score_pool(&net, &pool, AcquisitionKind::Bald, 10, 8, 3).unwrap();
    assert_eq!(a, b);
    assert!(a.iter().all(|s| s.model_version == 3 && s.mean_probs.len() == 2));
    assert!(a.windows(2).all(|p| p[0].score >= p[1].score));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn scores_within_bounds(seed in any::<u64>(), passes in 1usize..20, classes in 2usize..6) {
        let mut r = rng(seed);
        let s = samples("w", random_samples(&mut r, passes, classes));
        let c = classes as f64;
        let h = max_entropy_score(&s);
        prop_assert!((0.0..=c.ln() + 1e-9).contains(&h));
        let b = bald_score(&s);
        prop_assert!(b >= 0.0 && b <= c.ln() + 1e-9);
        let v = variation_ratio_score(&s);
        prop_assert!((0.0..=1.0 - 1.0 / c + 1e-9).contains(&v));
        let u = random_score(&format!("w{seed}"), seed);
        prop_assert!((0.0..1.0).contains(&u));
    }

    #[test]
    fn identical_rows_carry_no_information(seed in any::<u64>(), passes in 1usize..20, classes in 2usize..6) {
        let mut r = rng(seed);
        let row = random_samples(&mut r, 1, classes).remove(0);
        let s = samples("w", vec![row; passes]);
        prop_assert!(bald_score(&s).abs() <= 1e-9);
    }

    #[test]
    fn binary_entropy_and_variation_ratio_rank_alike(seed in any::<u64>(), n in 1usize..40) {
        let mut r = rng(seed);
        let pool = random_pool(&mut r, n, 2);
        let mut vr: Vec<f64> = pool.iter().map(variation_ratio_score).collect();
        vr.sort_by(f64::total_cmp);
        prop_assume!(vr.windows(2).all(|p| p[1] - p[0] > 1e-12));
        let budget = r.random_range(0..=n);
        prop_assert_eq!(
            rank_pool(&pool, AcquisitionKind::MaxEntropy, budget, 0).unwrap(),
            rank_pool(&pool, AcquisitionKind::VariationRatios, budget, 0).unwrap()
        );
    }

    #[test]
    fn ranking_ignores_pool_order(seed in any::<u64>(), n in 1usize..40, kind in 0usize..4) {
        let mut r = rng(seed);
        let kind = AcquisitionKind::ALL[kind];
        let mut pool = random_pool(&mut r, n, 3);
        let budget = r.random_range(0..=n);
        let before = rank_pool(&pool, kind, budget, seed).unwrap();
        pool.shuffle(&mut r);
        prop_assert_eq!(before, rank_pool(&pool, kind, budget, seed).unwrap());
    }
}
