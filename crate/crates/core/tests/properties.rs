#[path = "support/naive.rs"]
mod naive;

use proptest::prelude::*;
use somfs_core::dataset::{decode_sfv1, encode_sfv1};
use somfs_core::{
    cosine_distance, euclidean_distance, gaussian_activity, label_som, schedule_value, DecaySchedule, FeatureDataset,
    GridShape, Init, Metric, Samples, SomMap, TrainConfig, Workers,
};

fn vec_pair(max_len: usize) -> impl Strategy<Value = (Vec<f32>, Vec<f32>)> {
    (1..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f32..100.0, n),
            prop::collection::vec(-100.0f32..100.0, n),
        )
    })
}

fn metric() -> impl Strategy<Value = Metric> {
    prop_oneof![Just(Metric::Euclidean), Just(Metric::Cosine)]
}

fn nonzero(v: &[f32]) -> bool {
    v.iter().map(|&x| f64::from(x).powi(2)).sum::<f64>() > 1e-6
}

proptest! {
    #[test]
    fn distances_are_symmetric((v, w) in vec_pair(64), m in metric()) {
        prop_assert_eq!(m.distance(&v, &w).unwrap().to_bits(), m.distance(&w, &v).unwrap().to_bits());
    }

    #[test]
    fn cosine_ignores_positive_scale((v, w) in vec_pair(64), scale in 1e-3f32..1e3) {
        prop_assume!(nonzero(&v) && nonzero(&w));
        let scaled: Vec<f32> = v.iter().map(|x| x * scale).collect();
        let a = cosine_distance(&v, &w).unwrap();
        let b = cosine_distance(&scaled, &w).unwrap();
        prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
    }

    #[test]
    fn euclidean_matches_naive_sum((v, w) in vec_pair(1024)) {
        let got = euclidean_distance(&v, &w).unwrap();
        let want = naive::distance(Metric::Euclidean, &v, &w);
        prop_assert!((got - want).abs() <= 1e-6 * want.max(1.0), "{} vs {}", got, want);
    }

    #[test]
    fn cosine_matches_naive_and_stays_in_range((v, w) in vec_pair(256)) {
        let got = cosine_distance(&v, &w).unwrap();
        let want = naive::distance(Metric::Cosine, &v, &w);
        prop_assert!((0.0..=2.0).contains(&got));
        prop_assert!((got - want).abs() <= 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn activity_reverses_distance_order(a in 0.0f64..50.0, b in 0.0f64..50.0, alpha in 0.05f64..10.0) {
        let (fa, fb) = (gaussian_activity(a, alpha).unwrap(), gaussian_activity(b, alpha).unwrap());
        prop_assert!((0.0..=1.0).contains(&fa));
        if a < b {
            prop_assert!(fa >= fb);
        }
    }

    #[test]
    fn winner_is_nearest_and_most_active(
        rows in 1usize..5, cols in 1usize..5, dim in 1usize..12, seed in any::<u64>(), m in metric(),
        v in prop::collection::vec(-2.0f32..2.0, 12),
    ) {
        let som = SomMap::init(GridShape::new(rows, cols).unwrap(), dim, m, seed, Init::Uniform).unwrap();
        let v = &v[..dim];
        let (winner, d) = som.find_winner(v).unwrap();
        let dist = som.distances(v).unwrap();
        prop_assert_eq!(d, dist[winner]);
        prop_assert!(dist.iter().all(|&x| x >= d));
        prop_assert!(dist[..winner].iter().all(|&x| x > d));
        let act: Vec<f64> = dist.iter().map(|&x| gaussian_activity(x, 1.0).unwrap()).collect();
        prop_assert!(act.iter().all(|&a| a <= act[winner]));
    }

    #[test]
    fn update_stays_between_prototype_and_input(
        dim in 1usize..10, seed in any::<u64>(), eps in 0.0f64..=1.0, sigma in 0.05f64..20.0,
        v in prop::collection::vec(-3.0f32..3.0, 10),
    ) {
        let mut som = SomMap::init(GridShape::new(3, 3).unwrap(), dim, Metric::Euclidean, seed, Init::Uniform).unwrap();
        let before = som.weights().to_vec();
        let v = &v[..dim];
        som.train_step(v, eps, sigma).unwrap();
        for (i, (&old, &new)) in before.iter().zip(som.weights()).enumerate() {
            let x = v[i % dim];
            prop_assert!(new >= old.min(x) && new <= old.max(x), "{} not in [{}, {}]", new, old, x);
        }
    }

    #[test]
    fn schedule_hits_endpoints_and_decreases(
        init in 0.01f64..100.0, ratio in 1e-4f64..1.0, epochs in 1usize..50,
    ) {
        let fin = init * ratio;
        let s = DecaySchedule::new(init, fin, epochs).unwrap();
        prop_assert_eq!(schedule_value(&s, 0).unwrap(), init);
        prop_assert_eq!(schedule_value(&s, epochs).unwrap(), fin);
        for t in 0..epochs {
            prop_assert!(s.value(t + 1).unwrap() <= s.value(t).unwrap());
        }
    }

    #[test]
    fn training_is_deterministic_across_workers(
        n in 2usize..30, dim in 1usize..9, seed in any::<u64>(), m in metric(), workers in 2usize..5,
    ) {
        let data: Vec<f32> = (0..n * dim).map(|i| ((i as f32 + seed as f32 * 0.001) * 0.37).sin()).collect();
        let samples = Samples::new(dim, &data).unwrap();
        let cfg = TrainConfig::default().with_epochs(2).with_seed(seed);
        let fresh = SomMap::init(GridShape::new(3, 4).unwrap(), dim, m, seed, Init::Uniform).unwrap();
        let mut a = fresh.clone();
        let mut b = fresh.clone();
        let mut c = fresh;
        a.train(samples, &cfg, &Workers::sequential()).unwrap();
        b.train(samples, &cfg, &Workers::sequential()).unwrap();
        c.train(samples, &cfg, &Workers::new(workers).unwrap()).unwrap();
        let bits = |s: &SomMap| s.weights().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(bits(&a), bits(&c));
    }

    #[test]
    fn sfv1_round_trips(
        classes in 1usize..4, extra in 0usize..6, dim in 1usize..8,
        values in prop::collection::vec(0.01f32..5.0, 64),
    ) {
        let n = classes + extra;
        let labels: Vec<u32> = (0..n).map(|i| (i % classes) as u32).collect();
        let features: Vec<f32> = (0..n * dim).map(|i| values[i % values.len()] * if i % 3 == 0 { -1.0 } else { 1.0 }).collect();
        let ds = FeatureDataset::new(dim, classes, labels, features).unwrap();
        let bytes = encode_sfv1(&ds).unwrap();
        prop_assert_eq!(bytes.len(), 16 + n * (4 + 4 * dim));
        prop_assert_eq!(decode_sfv1(&bytes).unwrap(), ds);
    }

    #[test]
    fn cosine_labels_ignore_sample_scale(
        seed in any::<u64>(), scales in prop::collection::vec(0.1f32..10.0, 8),
    ) {
        let dim = 5;
        let som = SomMap::init(GridShape::new(2, 3).unwrap(), dim, Metric::Cosine, seed, Init::Uniform).unwrap();
        let vs: Vec<Vec<f32>> = (0..8)
            .map(|i| (0..dim).map(|j| ((i * dim + j) as f32 * 0.9 + seed as f32 * 1e-3).sin()).collect())
            .collect();
        let scaled: Vec<Vec<f32>> = vs.iter().zip(&scales).map(|(v, s)| v.iter().map(|x| x * s).collect()).collect();
        let classes = |i: usize| (i % 3) as u32;
        let a = label_som(som.clone(), vs.iter().enumerate().map(|(i, v)| (v.as_slice(), classes(i))), 3, 1.0).unwrap();
        let b = label_som(som, scaled.iter().enumerate().map(|(i, v)| (v.as_slice(), classes(i))), 3, 1.0).unwrap();
        for (x, y) in a.accumulators().table().iter().zip(b.accumulators().table()) {
            prop_assert!((x - y).abs() <= 1e-6);
        }
        for n in 0..6 {
            let row = a.accumulators().row(n);
            let mut sorted = row.to_vec();
            sorted.sort_by(|p, q| q.total_cmp(p));
            if sorted[0] - sorted[1] > 1e-5 {
                prop_assert_eq!(a.labels()[n], b.labels()[n]);
            }
        }
    }

    #[test]
    fn relabeling_classes_permutes_labels(
        seed in any::<u64>(), perm_index in 0usize..6, m in metric(),
    ) {
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let perm = perms[perm_index];
        let dim = 4;
        let som = SomMap::init(GridShape::new(3, 3).unwrap(), dim, m, seed, Init::Uniform).unwrap();
        let vs: Vec<Vec<f32>> = (0..7)
            .map(|i| (0..dim).map(|j| ((i * dim + j) as f32 * 1.3 + seed as f32 * 1e-3).cos()).collect())
            .collect();
        let class = |i: usize| (i % 3) as u32;
        let a = label_som(som.clone(), vs.iter().enumerate().map(|(i, v)| (v.as_slice(), class(i))), 3, 1.0).unwrap();
        let b = label_som(som, vs.iter().enumerate().map(|(i, v)| (v.as_slice(), perm[class(i) as usize])), 3, 1.0).unwrap();
        for n in 0..9 {
            for c in 0..3 {
                prop_assert_eq!(a.accumulators().get(n, c).to_bits(), b.accumulators().get(n, perm[c] as usize).to_bits());
            }
            let la = a.labels()[n];
            let expected = if la < 0 { la } else { perm[la as usize] as i32 };
            let row = a.accumulators().row(n);
            let ties = row.iter().filter(|&&x| x == row.iter().copied().fold(0.0, f64::max)).count();
            if ties == 1 || la < 0 {
                prop_assert_eq!(b.labels()[n], expected);
            }
        }
    }
}
