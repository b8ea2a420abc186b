//! Distance, activity and prototype-update kernels shared by training,
//! labeling and testing.
//!
//! Vectors are stored as `f32`; every reduction accumulates in `f64` over a
//! fixed number of interleaved lanes, so a given pair of vectors always
//! yields the same bits no matter which caller or worker evaluates it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Norms below this are treated as degenerate by the cosine metric.
pub const MIN_NORM: f64 = 1e-12;
const MIN_SQ_NORM: f64 = MIN_NORM * MIN_NORM;

const LANES: usize = 8;

/// Distance used to compare inputs with neuron prototypes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
#[repr(u8)]
pub enum Metric {
    Euclidean = 0,
    #[default]
    Cosine = 1,
}

impl Metric {
    /// Stable on-disk tag.
    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Metric::Euclidean),
            1 => Some(Metric::Cosine),
            _ => None,
        }
    }

    pub fn distance(self, v: &[f32], w: &[f32]) -> Result<f64> {
        match self {
            Metric::Euclidean => euclidean_distance(v, w),
            Metric::Cosine => cosine_distance(v, w),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::invalid(format!("unknown metric {other:?}"))),
        }
    }
}

/// An input vector widened to f64 once, with its squared norm, for
/// comparison against many `f32` prototypes.
#[derive(Debug, Clone, Default)]
pub(crate) struct Probe {
    metric: Metric,
    v: Vec<f64>,
    sq_norm: f64,
}

impl Probe {
    pub(crate) fn new(metric: Metric, v: &[f32]) -> Self {
        let mut p = Self::default();
        p.load(metric, v);
        p
    }

    /// Replaces the probed vector, reusing the buffer.
    pub(crate) fn load(&mut self, metric: Metric, v: &[f32]) {
        self.metric = metric;
        self.v.clear();
        self.v.extend(v.iter().map(|&x| f64::from(x)));
        self.sq_norm = match metric {
            Metric::Euclidean => 0.0,
            Metric::Cosine => sq_norm(v),
        };
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.v
    }

    /// Distance to `w`; callers guarantee equal lengths.
    #[inline]
    pub(crate) fn distance(&self, w: &[f32]) -> f64 {
        debug_assert_eq!(self.v.len(), w.len());
        match self.metric {
            Metric::Euclidean => sq_l2(&self.v, w).sqrt(),
            Metric::Cosine => {
                let (dot, w_sq) = dot_and_sq_norm(&self.v, w);
                cosine_from_parts(dot, self.sq_norm, w_sq)
            }
        }
    }
}

fn check_dims(v: &[f32], w: &[f32]) -> Result<()> {
    if v.is_empty() || v.len() != w.len() {
        return Err(Error::invalid(format!(
            "dimension mismatch: {} vs {}",
            v.len(),
            w.len()
        )));
    }
    Ok(())
}

/// L2 norm of `v - w`.
pub fn euclidean_distance(v: &[f32], w: &[f32]) -> Result<f64> {
    check_dims(v, w)?;
    Ok(Probe::new(Metric::Euclidean, v).distance(w))
}

/// `1 - cos(v, w)`, clamped to `[0, 2]`.
///
/// If either vector has a norm below [`MIN_NORM`] the distance is 1.0.
pub fn cosine_distance(v: &[f32], w: &[f32]) -> Result<f64> {
    check_dims(v, w)?;
    Ok(Probe::new(Metric::Cosine, v).distance(w))
}

/// Afferent activity `exp(-d / alpha)`.
pub fn gaussian_activity(d: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    if !(d >= 0.0) {
        return Err(Error::invalid(format!("distance must be nonnegative, got {d}")));
    }
    Ok(activity(d, alpha))
}

#[inline]
pub(crate) fn activity(d: f64, alpha: f64) -> f64 {
    (-d / alpha).exp()
}

#[inline]
fn cosine_from_parts(dot: f64, v_sq: f64, w_sq: f64) -> f64 {
    if v_sq < MIN_SQ_NORM || w_sq < MIN_SQ_NORM {
        return 1.0;
    }
    (1.0 - dot / (v_sq * w_sq).sqrt()).clamp(0.0, 2.0)
}

#[inline]
fn sq_l2(v: &[f64], w: &[f32]) -> f64 {
    #[cfg(target_arch = "x86_64")]
    if avx::available() {
        // SAFETY: AVX support was just checked.
        return unsafe { avx::sq_l2(v, w) };
    }
    sq_l2_portable(v, w)
}

fn sq_l2_portable(v: &[f64], w: &[f32]) -> f64 {
    let (vc, vr) = v.as_chunks::<LANES>();
    let (wc, wr) = w.as_chunks::<LANES>();
    let mut acc = [0f64; LANES];
    for (a, b) in vc.iter().zip(wc) {
        for i in 0..LANES {
            let d = a[i] - f64::from(b[i]);
            acc[i] += d * d;
        }
    }
    fold_lanes(acc) + sq_l2_tail(vr, wr)
}

fn sq_l2_tail(v: &[f64], w: &[f32]) -> f64 {
    v.iter()
        .zip(w)
        .map(|(&a, &b)| {
            let d = a - f64::from(b);
            d * d
        })
        .sum()
}

#[inline]
pub(crate) fn sq_norm(v: &[f32]) -> f64 {
    let (vc, vr) = v.as_chunks::<LANES>();
    let mut acc = [0f64; LANES];
    for a in vc {
        for i in 0..LANES {
            let x = f64::from(a[i]);
            acc[i] += x * x;
        }
    }
    let tail: f64 = vr.iter().map(|&a| f64::from(a) * f64::from(a)).sum();
    fold_lanes(acc) + tail
}

/// Returns `(v . w, |w|^2)` in one pass; `|w|^2` sums exactly as
/// [`sq_norm`] does.
#[inline]
fn dot_and_sq_norm(v: &[f64], w: &[f32]) -> (f64, f64) {
    #[cfg(target_arch = "x86_64")]
    if avx::available() {
        // SAFETY: AVX support was just checked.
        return unsafe { avx::dot_and_sq_norm(v, w) };
    }
    dot_and_sq_norm_portable(v, w)
}

fn dot_and_sq_norm_portable(v: &[f64], w: &[f32]) -> (f64, f64) {
    let (vc, vr) = v.as_chunks::<LANES>();
    let (wc, wr) = w.as_chunks::<LANES>();
    let mut dot = [0f64; LANES];
    let mut sq = [0f64; LANES];
    for (a, b) in vc.iter().zip(wc) {
        for i in 0..LANES {
            let x = f64::from(b[i]);
            dot[i] += a[i] * x;
            sq[i] += x * x;
        }
    }
    let (dot_tail, sq_tail) = dot_tail(vr, wr);
    (fold_lanes(dot) + dot_tail, fold_lanes(sq) + sq_tail)
}

fn dot_tail(v: &[f64], w: &[f32]) -> (f64, f64) {
    let (mut dot, mut sq) = (0.0, 0.0);
    for (&a, &b) in v.iter().zip(w) {
        let x = f64::from(b);
        dot += a * x;
        sq += x * x;
    }
    (dot, sq)
}

/// The same lane layout as the portable kernels, written with explicit
/// 256-bit operations because the autovectorizer shuffles the lanes.
/// Multiplies and adds stay separate (no FMA) so the bits match.
#[cfg(target_arch = "x86_64")]
mod avx {
    use std::arch::x86_64::*;
    use std::sync::OnceLock;

    use super::{dot_tail, fold_lanes, sq_l2_tail, LANES};

    pub(super) fn available() -> bool {
        static AVX: OnceLock<bool> = OnceLock::new();
        *AVX.get_or_init(|| is_x86_feature_detected!("avx"))
    }

    #[target_feature(enable = "avx")]
    unsafe fn lanes(lo: __m256d, hi: __m256d) -> [f64; LANES] {
        let mut out = [0f64; LANES];
        _mm256_storeu_pd(out.as_mut_ptr(), lo);
        _mm256_storeu_pd(out.as_mut_ptr().add(4), hi);
        out
    }

    #[target_feature(enable = "avx")]
    pub(super) unsafe fn sq_l2(v: &[f64], w: &[f32]) -> f64 {
        let n = v.len().min(w.len()) / LANES * LANES;
        let (vp, wp) = (v.as_ptr(), w.as_ptr());
        let (mut lo, mut hi) = (_mm256_setzero_pd(), _mm256_setzero_pd());
        let mut i = 0;
        while i < n {
            let d0 = _mm256_sub_pd(_mm256_loadu_pd(vp.add(i)), _mm256_cvtps_pd(_mm_loadu_ps(wp.add(i))));
            let d1 = _mm256_sub_pd(_mm256_loadu_pd(vp.add(i + 4)), _mm256_cvtps_pd(_mm_loadu_ps(wp.add(i + 4))));
            lo = _mm256_add_pd(lo, _mm256_mul_pd(d0, d0));
            hi = _mm256_add_pd(hi, _mm256_mul_pd(d1, d1));
            i += LANES;
        }
        fold_lanes(lanes(lo, hi)) + sq_l2_tail(&v[n..], &w[n..])
    }

    #[target_feature(enable = "avx")]
    pub(super) unsafe fn dot_and_sq_norm(v: &[f64], w: &[f32]) -> (f64, f64) {
        let n = v.len().min(w.len()) / LANES * LANES;
        let (vp, wp) = (v.as_ptr(), w.as_ptr());
        let (mut dlo, mut dhi) = (_mm256_setzero_pd(), _mm256_setzero_pd());
        let (mut slo, mut shi) = (_mm256_setzero_pd(), _mm256_setzero_pd());
        let mut i = 0;
        while i < n {
            let x0 = _mm256_cvtps_pd(_mm_loadu_ps(wp.add(i)));
            let x1 = _mm256_cvtps_pd(_mm_loadu_ps(wp.add(i + 4)));
            dlo = _mm256_add_pd(dlo, _mm256_mul_pd(_mm256_loadu_pd(vp.add(i)), x0));
            dhi = _mm256_add_pd(dhi, _mm256_mul_pd(_mm256_loadu_pd(vp.add(i + 4)), x1));
            slo = _mm256_add_pd(slo, _mm256_mul_pd(x0, x0));
            shi = _mm256_add_pd(shi, _mm256_mul_pd(x1, x1));
            i += LANES;
        }
        let (dot_tail, sq_tail) = dot_tail(&v[n..], &w[n..]);
        (fold_lanes(lanes(dlo, dhi)) + dot_tail, fold_lanes(lanes(slo, shi)) + sq_tail)
    }

}

/// Below this rate `rate * (v - w)` is under half the smallest f32
/// subnormal for any finite f32 inputs, so the rounded result is `w` itself.
/// Skipping also avoids slow subnormal arithmetic far from the winner.
const NEGLIGIBLE_RATE: f64 = 1e-300;

/// `w += rate * (v - w)`, evaluated in f64 so that `rate = 1` lands exactly
/// on `v` and results never leave the segment `[w, v]`.
#[inline]
pub(crate) fn pull_toward(w: &mut [f32], v: &[f64], rate: f64) {
    if rate < NEGLIGIBLE_RATE {
        return;
    }
    for (wi, &vi) in w.iter_mut().zip(v) {
        let cur = f64::from(*wi);
        *wi = (cur + rate * (vi - cur)) as f32;
    }
}

#[inline]
fn fold_lanes(acc: [f64; LANES]) -> f64 {
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]))
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.367_879_441_171_442_3;

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(euclidean_distance(&[1.5, -2.0], &[1.5, -2.0]).unwrap(), 0.0);
        assert_eq!(euclidean_distance(&[1.0; 4], &[0.0; 4]).unwrap(), 2.0);
    }

    #[test]
    fn cosine_examples() {
        let orth = cosine_distance(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let par = cosine_distance(&[1.0, 1.0], &[2.0, 2.0]).unwrap();
        let anti = cosine_distance(&[1.0, 0.0], &[-1.0, 0.0]).unwrap();
        assert!((orth - 1.0).abs() < 1e-12);
        assert!(par.abs() < 1e-12);
        assert!((anti - 2.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_degenerate_is_neutral() {
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(cosine_distance(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(matches!(
            euclidean_distance(&[1.0], &[1.0, 2.0]),
            Err(Error::InvalidArgument(_))
        ));
        assert!(cosine_distance(&[], &[]).is_err());
    }

    #[test]
    fn activity_examples() {
        assert_eq!(gaussian_activity(0.0, 1.0).unwrap(), 1.0);
        assert!((gaussian_activity(1.0, 1.0).unwrap() - E_INV).abs() < 1e-12);
        assert!((gaussian_activity(2.0, 2.0).unwrap() - E_INV).abs() < 1e-12);
        assert!(gaussian_activity(1.0, 0.0).is_err());
        assert!(gaussian_activity(1.0, -1.0).is_err());
        assert!(gaussian_activity(-1.0, 1.0).is_err());
    }

    #[test]
    fn probe_matches_public_kernels() {
        let v: Vec<f32> = (0..37).map(|i| (i as f32 * 0.37).sin()).collect();
        let w: Vec<f32> = (0..37).map(|i| (i as f32 * 0.11).cos()).collect();
        for metric in [Metric::Euclidean, Metric::Cosine] {
            let direct = metric.distance(&v, &w).unwrap();
            assert_eq!(Probe::new(metric, &v).distance(&w).to_bits(), direct.to_bits());
            assert_eq!(metric.distance(&w, &v).unwrap().to_bits(), direct.to_bits());
        }
    }

    #[test]
    fn vector_kernels_match_portable_bitwise() {
        for len in [1usize, 7, 8, 9, 31, 784] {
            let v: Vec<f64> = (0..len).map(|i| f64::from((i as f32 * 0.37).sin())).collect();
            let w: Vec<f32> = (0..len).map(|i| (i as f32 * 0.11).cos() * 3.0).collect();
            assert_eq!(sq_l2(&v, &w).to_bits(), sq_l2_portable(&v, &w).to_bits());
            let (a, b) = dot_and_sq_norm(&v, &w);
            let (c, d) = dot_and_sq_norm_portable(&v, &w);
            assert_eq!((a.to_bits(), b.to_bits()), (c.to_bits(), d.to_bits()));
        }
    }

    #[test]
    fn negligible_rates_leave_weights_unchanged() {
        let w = [f32::MAX, -f32::MAX, 1.0, f32::MIN_POSITIVE, 1e-45, 0.0];
        let v = [-f64::from(f32::MAX), f64::from(f32::MAX), -1.0, 3.0, -1e-45, 1.0];
        for rate in [0.0, 1e-320, 1e-310, 0.999e-300] {
            let mut skipped = w;
            pull_toward(&mut skipped, &v, rate);
            for ((&wi, &vi), &si) in w.iter().zip(&v).zip(&skipped) {
                let direct = (f64::from(wi) + rate * (vi - f64::from(wi))) as f32;
                assert_eq!(si.to_bits(), direct.to_bits());
            }
        }
    }

    #[test]
    fn metric_tags_are_stable() {
        assert_eq!(Metric::Euclidean.tag(), 0);
        assert_eq!(Metric::Cosine.tag(), 1);
        assert_eq!(Metric::from_tag(1), Some(Metric::Cosine));
        assert_eq!(Metric::from_tag(2), None);
        assert_eq!("Cosine".parse::<Metric>().unwrap(), Metric::Cosine);
    }
}
