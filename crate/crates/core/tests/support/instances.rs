//! Random small labeling problems: at most 9 neurons, 3 classes and 12
//! labeled samples.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use somfs_core::{GridShape, Metric, SomMap};

pub struct Instance {
    pub som: SomMap,
    pub rows: Vec<Vec<f32>>,
    pub samples: Vec<(Vec<f32>, u32)>,
    pub classes: usize,
}

pub fn instance(rng: &mut ChaCha8Rng, metric: Metric) -> Instance {
    let (r, c) = [(1, 1), (1, 2), (2, 2), (1, 5), (2, 3), (2, 4), (3, 3)][rng.random_range(0..7)];
    let dim = rng.random_range(1..=6);
    let classes = rng.random_range(1..=3);
    let weights: Vec<f32> = (0..r * c * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let rows = weights.chunks(dim).map(<[f32]>::to_vec).collect();
    let n = rng.random_range(1..=12);
    let samples = (0..n)
        .map(|_| {
            let v = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            (v, rng.random_range(0..classes as u32))
        })
        .collect();
    let som = SomMap::from_weights(GridShape::new(r, c).unwrap(), dim, metric, weights).unwrap();
    Instance {
        som,
        rows,
        samples,
        classes,
    }
}
