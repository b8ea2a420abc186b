//! Straightforward reference implementations, written independently of the
//! library kernels, used as oracles.
#![allow(dead_code)]

use somfs_core::Metric;

pub fn distance(metric: Metric, v: &[f32], w: &[f32]) -> f64 {
    let v: Vec<f64> = v.iter().map(|&x| f64::from(x)).collect();
    let w: Vec<f64> = w.iter().map(|&x| f64::from(x)).collect();
    match metric {
        Metric::Euclidean => v.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
        Metric::Cosine => {
            let nv = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            let nw = w.iter().map(|a| a * a).sum::<f64>().sqrt();
            if nv < 1e-12 || nw < 1e-12 {
                return 1.0;
            }
            let dot: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            (1.0 - dot / (nv * nw)).clamp(0.0, 2.0)
        }
    }
}

/// Per-neuron class table and labels, following the five labeling steps
/// literally.
pub fn label(
    weights: &[Vec<f32>],
    metric: Metric,
    samples: &[(Vec<f32>, u32)],
    num_classes: usize,
    alpha: f64,
) -> (Vec<Vec<f64>>, Vec<i32>) {
    let k = weights.len();
    let mut table = vec![vec![0.0; num_classes]; k];
    let mut counts = vec![0u32; num_classes];
    for (v, class) in samples {
        let act: Vec<f64> = weights.iter().map(|w| (-distance(metric, v, w) / alpha).exp()).collect();
        let mut s = 0;
        for n in 0..k {
            if act[n] > act[s] {
                s = n;
            }
        }
        for n in 0..k {
            if act[s] > 0.0 {
                table[n][*class as usize] += act[n] / act[s];
            }
        }
        counts[*class as usize] += 1;
    }
    for row in &mut table {
        for c in 0..num_classes {
            if counts[c] > 0 {
                row[c] /= f64::from(counts[c]);
            }
        }
    }
    let labels = table
        .iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..num_classes {
                if row[c] > row[best] {
                    best = c;
                }
            }
            if row[best] > 0.0 {
                best as i32
            } else {
                -1
            }
        })
        .collect();
    (table, labels)
}

/// `(slope, intercept, r_squared)` from the normal equations.
pub fn ols(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let (sx, sy) = points.iter().fold((0.0, 0.0), |(a, b), p| (a + p.0, b + p.1));
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let mean = sy / n;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - mean).powi(2)).sum();
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}
