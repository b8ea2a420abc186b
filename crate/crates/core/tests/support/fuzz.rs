//! Byte-stream mutation and independent validity checks for the feature
//! and model formats.
#![allow(dead_code)]

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::Rng;
use somfs_core::dataset::{decode_sfv1, encode_sfv1};
use somfs_core::model::decode_model;
use somfs_core::{label_som, make_blobs, Init, Metric, Model, SomMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Sfv1,
    Som1,
}

#[derive(Debug, Default)]
pub struct Tally {
    pub accepted: usize,
    pub rejected: usize,
    /// Panics and accepted streams that break the format's invariants.
    pub failures: Vec<String>,
}

/// Valid streams to start mutating from.
pub fn seeds() -> Vec<(Format, Vec<u8>)> {
    let mut out = Vec::new();
    for (ways, per, dim) in [(2, 1, 1), (3, 4, 5), (5, 3, 8)] {
        let ds = make_blobs(ways, per, dim, 1.0, 5.0, 3).unwrap();
        out.push((Format::Sfv1, encode_sfv1(&ds).unwrap()));
    }
    let ds = make_blobs(3, 4, 6, 1.0, 5.0, 4).unwrap();
    for (rows, cols, metric) in [(1, 1, Metric::Euclidean), (2, 3, Metric::Cosine), (3, 3, Metric::Euclidean)] {
        let shape = somfs_core::GridShape::new(rows, cols).unwrap();
        let som = SomMap::init(shape, 6, metric, 7, Init::Uniform).unwrap();
        out.push((Format::Som1, Model::Unlabeled(som.clone()).encode().unwrap()));
        let labeled = label_som(som, ds.iter(), ds.num_classes(), 1.0).unwrap();
        out.push((Format::Som1, Model::Labeled(labeled).encode().unwrap()));
    }
    out
}

const INTERESTING: [u32; 9] = [
    0,
    1,
    2,
    0xFFFF_FFFF,
    0x7FFF_FFFF,
    0x8000_0000,
    0x7F80_0000, // +inf
    0x7FC0_0000, // NaN
    0x0000_0001, // smallest subnormal
];

pub fn mutate<R: Rng>(rng: &mut R, base: &[u8]) -> Vec<u8> {
    let mut b = base.to_vec();
    let rounds = rng.random_range(1..=3);
    for _ in 0..rounds {
        let len = b.len();
        match rng.random_range(0..8) {
            0 if len > 0 => {
                let i = rng.random_range(0..len);
                b[i] ^= 1 << rng.random_range(0..8);
            }
            1 if len > 0 => {
                let i = rng.random_range(0..len);
                b[i] = rng.random();
            }
            2 if len >= 4 => {
                let i = rng.random_range(0..len / 4) * 4;
                let v = match rng.random_range(0..3) {
                    0 => INTERESTING[rng.random_range(0..INTERESTING.len())],
                    1 => u32::from_le_bytes([b[i], b[i + 1], b[i + 2], b[i + 3]]).wrapping_add(rng.random_range(0..3)).wrapping_sub(1),
                    _ => rng.random(),
                };
                b[i..i + 4].copy_from_slice(&v.to_le_bytes());
            }
            3 => b.truncate(rng.random_range(0..=len)),
            4 => {
                let extra = rng.random_range(1..=16);
                b.extend((0..extra).map(|_| rng.random::<u8>()));
            }
            5 if len > 0 => {
                let i = rng.random_range(0..len);
                let n = rng.random_range(1..=8.min(len - i));
                b.drain(i..i + n);
            }
            6 => {
                let i = rng.random_range(0..=len);
                let n = rng.random_range(1..=8);
                let bytes: Vec<u8> = (0..n).map(|_| rng.random()).collect();
                b.splice(i..i, bytes);
            }
            _ if len > 0 => {
                let i = rng.random_range(0..len);
                let n = rng.random_range(1..=16.min(len - i));
                let chunk = b[i..i + n].to_vec();
                let at = rng.random_range(0..=b.len());
                b.splice(at..at, chunk);
            }
            _ => b.push(rng.random()),
        }
    }
    b
}

fn u32_at(b: &[u8], at: usize) -> usize {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]]) as usize
}

/// Checks an accepted SFV1 stream against the format rules, reading the
/// raw bytes rather than trusting the decoder.
fn sfv1_violation(bytes: &[u8], ds: &somfs_core::FeatureDataset) -> Option<String> {
    if bytes.len() < 16 || &bytes[..4] != b"SFV1" {
        return Some("accepted a stream without a complete SFV1 header".into());
    }
    let (n, m, c) = (u32_at(bytes, 4), u32_at(bytes, 8), u32_at(bytes, 12));
    if n == 0 || m == 0 || c == 0 {
        return Some(format!("accepted empty header fields n={n} m={m} c={c}"));
    }
    if bytes.len() != 16 + n * (4 + 4 * m) {
        return Some(format!("length {} does not match header", bytes.len()));
    }
    if ds.len() != n || ds.dim() != m || ds.num_classes() != c {
        return Some("decoded shape differs from header".into());
    }
    let mut seen = vec![false; c];
    for r in 0..n {
        let at = 16 + r * (4 + 4 * m);
        let class = u32_at(bytes, at);
        if class >= c {
            return Some(format!("record {r}: class {class} >= {c}"));
        }
        seen[class] = true;
        let mut sq = 0.0f64;
        for j in 0..m {
            let o = at + 4 + 4 * j;
            let x = f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
            if !x.is_finite() {
                return Some(format!("record {r}: non-finite component"));
            }
            sq += f64::from(x) * f64::from(x);
        }
        if sq.sqrt() < 1e-12 {
            return Some(format!("record {r}: zero vector"));
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Some(format!("class {missing} has no records"));
    }
    match encode_sfv1(ds) {
        Ok(again) if again == bytes => None,
        Ok(_) => Some("re-encoding differs from the accepted bytes".into()),
        Err(e) => Some(format!("accepted dataset fails to encode: {e}")),
    }
}

fn som1_violation(bytes: &[u8], model: &Model) -> Option<String> {
    if bytes.len() < 18 || &bytes[..4] != b"SOM1" {
        return Some("accepted a stream without a complete SOM1 header".into());
    }
    let (rows, cols, dim) = (u32_at(bytes, 4), u32_at(bytes, 8), u32_at(bytes, 12));
    let (tag, flag) = (bytes[16], bytes[17]);
    if rows == 0 || cols == 0 || dim == 0 || tag > 1 || flag > 1 {
        return Some(format!("accepted header rows={rows} cols={cols} dim={dim} tag={tag} flag={flag}"));
    }
    let som = model.som();
    if som.shape().rows() != rows || som.shape().cols() != cols || som.dim() != dim {
        return Some("decoded shape differs from header".into());
    }
    if som.weights().iter().any(|x| !x.is_finite()) {
        return Some("accepted non-finite weights".into());
    }
    if model.is_labeled() != (flag == 1) {
        return Some("labeled flag ignored".into());
    }
    if let Model::Labeled(l) = model {
        let c = l.num_classes();
        let acc = l.accumulators();
        for (n, &label) in l.labels().iter().enumerate() {
            let row = acc.row(n);
            if row.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Some(format!("neuron {n}: invalid accumulator"));
            }
            let max = row.iter().copied().fold(0.0, f64::max);
            let ok = match label {
                -1 => max == 0.0,
                l if l >= 0 && (l as usize) < c => row[l as usize] == max,
                _ => false,
            };
            if !ok {
                return Some(format!("neuron {n}: label {label} contradicts its accumulators"));
            }
        }
    }
    match model.encode() {
        Ok(again) if again == bytes => None,
        Ok(_) => Some("re-encoding differs from the accepted bytes".into()),
        Err(e) => Some(format!("accepted model fails to encode: {e}")),
    }
}

/// Decodes `bytes` and records the outcome.
pub fn check(format: Format, bytes: &[u8], tally: &mut Tally) {
    let outcome = catch_unwind(AssertUnwindSafe(|| match format {
        Format::Sfv1 => decode_sfv1(bytes).map(|ds| sfv1_violation(bytes, &ds)),
        Format::Som1 => decode_model(bytes).map(|m| som1_violation(bytes, &m)),
    }));
    match outcome {
        Err(_) => tally.failures.push(format!("{format:?}: decoder panicked on {} bytes", bytes.len())),
        Ok(Err(_)) => tally.rejected += 1,
        Ok(Ok(None)) => tally.accepted += 1,
        Ok(Ok(Some(why))) => tally.failures.push(format!("{format:?}: {why}")),
    }
}

/// Runs `iterations` mutated streams, with panic output silenced.
pub fn run<R: Rng>(rng: &mut R, iterations: usize) -> Tally {
    let bases = seeds();
    let mut tally = Tally::default();
    let hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for _ in 0..iterations {
        let (format, base) = &bases[rng.random_range(0..bases.len())];
        // Occasionally feed a stream to the other decoder as well.
        let format = if rng.random_ratio(1, 20) {
            match format {
                Format::Sfv1 => Format::Som1,
                Format::Som1 => Format::Sfv1,
            }
        } else {
            *format
        };
        let bytes = mutate(rng, base);
        check(format, &bytes, &mut tally);
    }
    std::panic::set_hook(hook);
    tally
}
