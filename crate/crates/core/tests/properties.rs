use proptest::prelude::*;
use rand::Rng;

use tripletboost::boost::{init_weights, run_round, sample_reference_pair, train, BoostConfig, WeightDistribution};
use tripletboost::bounds::{empirical_margin_bound, margin_quantile, margins};
use tripletboost::dataset::{Dataset, LabelDict};
use tripletboost::predict::score_training;
use tripletboost::rng::seeded;
use tripletboost::synthetic::moons;
use tripletboost::triplets::{generate_subsampled, Metric, Side, Triplet, TripletStore};
use tripletboost::weak_learner::contains;

fn instance(n: usize, l: usize, density: f64, seed: u64) -> (Dataset, TripletStore) {
    let mut rng = seeded(seed);
    let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..l)).collect();
    labels[0] = 0;
    labels[1] = 1;
    let names: Vec<String> = (0..l).map(|y| format!("y{y}")).collect();
    let ds = Dataset::new(LabelDict::from_names(names).unwrap(), labels, None).unwrap();
    let mut t = Vec::new();
    for i in 0..n as u32 {
        for j in 0..n as u32 {
            for k in j + 1..n as u32 {
                if i != j && i != k && rng.gen_bool(density) {
                    t.push(if rng.gen_bool(0.5) { Triplet::new(i, j, k) } else { Triplet::new(i, k, j) });
                }
            }
        }
    }
    (ds, TripletStore::from_triplets(n, t).unwrap())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn more_triplets_give_larger_margins() {
    let mean_median = |proportion: f64| {
        (0..10u64)
            .map(|seed| {
                let ds = moons(100, 0.1, seed).unwrap();
                let ts = generate_subsampled(&ds, Metric::Euclidean, proportion, seed).unwrap();
                let model = train(&ds, &ts, &BoostConfig::new(2000, seed)).unwrap();
                let preds = score_training(&model, &ts).unwrap();
                median(&mut margins(&model, &preds, ds.labels()).unwrap())
            })
            .sum::<f64>()
            / 10.0
    };
    let (sparse, dense) = (mean_median(0.01), mean_median(0.1));
    assert!(dense >= sparse, "median margin {sparse} at 1% vs {dense} at 10%");
}

#[test]
fn reference_pairs_follow_the_weights() {
    // labels a, a, b, b; marginals 0.1, 0.2, 0.3, 0.4
    let ds = Dataset::from_label_names(&["a", "a", "b", "b"]);
    let w = WeightDistribution::from_values(4, 2, vec![0.05, 0.05, 0.1, 0.1, 0.15, 0.15, 0.2, 0.2]).unwrap();
    let m = [0.1, 0.2, 0.3, 0.4];
    let mut expected = [[0.0; 4]; 4];
    for j in 0..4 {
        let others: Vec<usize> = (0..4).filter(|&k| (k < 2) != (j < 2)).collect();
        let mass: f64 = others.iter().map(|&k| m[k]).sum();
        for &k in &others {
            expected[j][k] = m[j] * m[k] / mass;
        }
    }
    let draws = 100_000;
    let mut counts = [[0usize; 4]; 4];
    let mut rng = seeded(17);
    for _ in 0..draws {
        let (j, k) = sample_reference_pair(&ds, &w, &mut rng).unwrap();
        counts[j as usize][k as usize] += 1;
    }
    for j in 0..4 {
        for k in 0..4 {
            let q = expected[j][k];
            let f = counts[j][k] as f64 / draws as f64;
            let sigma = (q * (1.0 - q) / draws as f64).sqrt();
            assert!((f - q).abs() <= 3.0 * sigma.max(1e-9), "({j}, {k}): {f} vs {q}");
        }
    }
}

#[test]
fn training_is_deterministic() {
    let (ds, ts) = instance(30, 3, 0.3, 4);
    let cfg = BoostConfig {
        stats_every: 10,
        ..BoostConfig::new(200, 9)
    };
    let (a, b) = (train(&ds, &ts, &cfg).unwrap(), train(&ds, &ts, &cfg).unwrap());
    assert_eq!(a.classifiers(), b.classifiers());
    assert_eq!(a.round_stats(), b.round_stats());
    assert_eq!(a.checkpoints(), b.checkpoints());
    assert_ne!(a.classifiers(), train(&ds, &ts, &BoostConfig::new(200, 10)).unwrap().classifiers());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn margin_bound_holds(n in 6usize..30, l in 2usize..5, density in 0.1f64..0.9, seed in any::<u64>(), theta in 0.0f64..0.5) {
        let (ds, ts) = instance(n, l, density, seed);
        let model = train(&ds, &ts, &BoostConfig::new(150, seed)).unwrap();
        prop_assume!(model.total_alpha() > 0.0);
        let preds = score_training(&model, &ts).unwrap();
        let m = margins(&model, &preds, ds.labels()).unwrap();
        prop_assert!(margin_quantile(&m, theta) <= empirical_margin_bound(l, model.round_stats(), n, theta));
    }

    #[test]
    fn rounds_keep_a_distribution_and_move_mass_the_right_way(
        n in 4usize..25, l in 2usize..5, density in 0.1f64..0.9, seed in any::<u64>()
    ) {
        let (ds, ts) = instance(n, l, density, seed);
        let mut w = init_weights(n, l).unwrap();
        let mut rng = seeded(seed);
        for _ in 0..40 {
            let before = w.clone();
            let round = run_round(&ds, &ts, &mut w, &mut rng).unwrap();
            prop_assert!((w.total() - 1.0).abs() < 1e-12);
            let h = round.classifier;
            let z = round.stats.z;
            for i in 0..n {
                for y in 0..l {
                    let (old, new) = (before.get(i, y), w.get(i, y));
                    if old == 0.0 {
                        continue;
                    }
                    let factor = match h.predict(round.sides[i]) {
                        _ if h.alpha == 0.0 => 1.0,
                        None => 1.0 / z,
                        Some(set) if (y == ds.label(i)) == contains(set, y) => (-h.alpha).exp() / z,
                        Some(_) => h.alpha.exp() / z,
                    };
                    prop_assert!((new / old - factor).abs() <= 1e-9 * factor, "({}, {}) {} vs {}", i, y, new / old, factor);
                }
            }
            if h.alpha > 0.0 && round.sides.iter().any(|&s| s != Side::Absent) {
                prop_assert!(round.stats.w_plus > round.stats.w_minus);
            }
        }
    }
}
