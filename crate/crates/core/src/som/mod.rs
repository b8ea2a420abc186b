//! Two-dimensional self-organizing map: lattice, prototypes, winner search
//! and the neighborhood-weighted online update.

mod schedule;
mod train;

pub use schedule::{
    schedule_value, DecaySchedule, TrainConfig, DEFAULT_ALPHA, DEFAULT_EPOCHS, DEFAULT_EPS_FINAL,
    DEFAULT_EPS_INITIAL, DEFAULT_SIGMA_FINAL, DEFAULT_SIGMA_INITIAL,
};
pub use train::TrainReport;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::Samples;
use crate::distance::{pull_toward, Metric, Probe};
use crate::error::{Error, Result};
use crate::parallel::Workers;
use crate::rng::{stream_rng, STREAM_INIT};

/// Lattice dimensions. Neuron `n` sits at `(n / cols, n % cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridShape {
    rows: usize,
    cols: usize,
}

impl GridShape {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("grid {rows}x{cols} has no neurons")));
        }
        rows.checked_mul(cols)
            .ok_or_else(|| Error::invalid(format!("grid {rows}x{cols} overflows")))?;
        Ok(Self { rows, cols })
    }

    /// The most square grid with exactly `k` neurons.
    pub fn for_neurons(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("neuron count must be at least 1"));
        }
        let rows = (1..=k.isqrt()).rev().find(|&r| k.is_multiple_of(r)).unwrap_or(1);
        Self::new(rows, k / rows)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Number of neurons `k`.
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self, n: usize) -> (usize, usize) {
        (n / self.cols, n % self.cols)
    }
}

impl fmt::Display for GridShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

/// Gaussian falloff `exp(-|p_n - p_s|^2 / (2 sigma^2))` over lattice
/// coordinates. `sigma` must be positive.
pub fn neighborhood(p_n: (usize, usize), p_s: (usize, usize), sigma: f64) -> f64 {
    debug_assert!(sigma > 0.0);
    let dr = p_n.0 as f64 - p_s.0 as f64;
    let dc = p_n.1 as f64 - p_s.1 as f64;
    (-(dr * dr + dc * dc) / (2.0 * sigma * sigma)).exp()
}

/// Weight initialization.
#[derive(Debug, Clone, Copy)]
pub enum Init<'a> {
    /// Each component i.i.d. from U[0, 1).
    Uniform,
    /// Copies of training vectors drawn without replacement while enough
    /// remain, then with replacement.
    Sample(Samples<'a>),
}

/// Initialization mode without the data it draws from, for configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    #[default]
    Uniform,
    Sample,
}

impl fmt::Display for InitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitMode::Uniform => "uniform",
            InitMode::Sample => "sample",
        })
    }
}

impl FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(InitMode::Uniform),
            "sample" => Ok(InitMode::Sample),
            other => Err(Error::invalid(format!("unknown init mode {other:?}"))),
        }
    }
}

impl InitMode {
    pub fn with<'a>(self, data: Samples<'a>) -> Init<'a> {
        match self {
            InitMode::Uniform => Init::Uniform,
            InitMode::Sample => Init::Sample(data),
        }
    }
}

/// Neuron prototypes on a 2-D lattice. Row `n` of the `k x dim` weight
/// matrix is the prototype of neuron `n`; all entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct SomMap {
    shape: GridShape,
    dim: usize,
    metric: Metric,
    weights: Vec<f32>,
}

impl SomMap {
    pub fn init(shape: GridShape, dim: usize, metric: Metric, seed: u64, init: Init<'_>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("weight dimension must be at least 1"));
        }
        let k = shape.len();
        let len = k
            .checked_mul(dim)
            .ok_or_else(|| Error::invalid("weight matrix too large"))?;
        let mut rng = stream_rng(seed, STREAM_INIT);
        let weights = match init {
            Init::Uniform => (0..len).map(|_| rng.random::<f32>()).collect(),
            Init::Sample(data) => {
                if data.dim() != dim {
                    return Err(Error::invalid(format!(
                        "init data has dimension {}, map has {dim}",
                        data.dim()
                    )));
                }
                let n = data.len();
                let mut picks = index::sample(&mut rng, n, k.min(n)).into_vec();
                picks.extend((picks.len()..k).map(|_| rng.random_range(0..n)));
                let mut w = Vec::with_capacity(len);
                for i in picks {
                    w.extend_from_slice(data.row(i));
                }
                w
            }
        };
        Self::from_weights(shape, dim, metric, weights)
    }

    pub fn from_weights(shape: GridShape, dim: usize, metric: Metric, weights: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("weight dimension must be at least 1"));
        }
        if weights.len() != shape.len() * dim {
            return Err(Error::invalid(format!(
                "expected {} weights for {shape} x {dim}, got {}",
                shape.len() * dim,
                weights.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::invalid(format!(
                "weight of neuron {} component {} is not finite",
                i / dim,
                i % dim
            )));
        }
        Ok(Self {
            shape,
            dim,
            metric,
            weights,
        })
    }

    pub fn shape(&self) -> GridShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    /// Number of neurons.
    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn weights(&self) -> &[f32] {
        &self.weights
    }

    pub fn weight(&self, n: usize) -> &[f32] {
        &self.weights[n * self.dim..(n + 1) * self.dim]
    }

    fn check_input(&self, v: &[f32]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::invalid(format!(
                "input has dimension {}, map has {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Distances from `v` to every prototype.
    pub fn distances(&self, v: &[f32]) -> Result<Vec<f64>> {
        self.check_input(v)?;
        let probe = Probe::new(self.metric, v);
        Ok(self.weights.chunks_exact(self.dim).map(|w| probe.distance(w)).collect())
    }

    /// Nearest neuron to `v` and its distance; ties go to the lowest index.
    pub fn find_winner(&self, v: &[f32]) -> Result<(usize, f64)> {
        Ok(argmin(&self.distances(v)?))
    }

    /// Mean winner distance over `data`.
    pub fn quantization_error(&self, data: Samples<'_>) -> Result<f64> {
        if data.dim() != self.dim {
            return Err(Error::invalid("data dimension does not match map"));
        }
        let mut probe = Probe::default();
        let mut dist = vec![0.0; self.len()];
        let mut total = 0.0;
        for v in data.rows() {
            probe.load(self.metric, v);
            self.fill_distances(&probe, &mut dist, None);
            total += argmin(&dist).1;
        }
        Ok(total / data.len() as f64)
    }

    /// One online update toward `v` with learning rate `eps` and
    /// neighborhood width `sigma`. Every neuron moves; returns the winner.
    pub fn train_step(&mut self, v: &[f32], eps: f64, sigma: f64) -> Result<usize> {
        self.check_input(v)?;
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("input component {i} is not finite")));
        }
        check_rates(eps, sigma)?;
        let probe = Probe::new(self.metric, v);
        let mut dist = vec![0.0; self.len()];
        self.fill_distances(&probe, &mut dist, None);
        let (winner, _) = argmin(&dist);
        self.update(&probe, winner, eps, sigma, None, None);
        Ok(winner)
    }

    /// `workers` is `None` or a pool the caller is already running inside.
    pub(crate) fn fill_distances(&self, probe: &Probe, dist: &mut [f64], workers: Option<&Workers>) {
        let dim = self.dim;
        let fill = |d: &mut [f64], block: &[f32]| {
            for (di, wi) in d.iter_mut().zip(block.chunks_exact(dim)) {
                *di = probe.distance(wi);
            }
        };
        match workers.filter(|w| w.is_parallel()) {
            Some(w) => {
                let chunk = w.chunk_len(dist.len());
                dist.par_chunks_mut(chunk)
                    .zip(self.weights.par_chunks(chunk * dim))
                    .for_each(|(d, block)| fill(d, block));
            }
            None => fill(dist, &self.weights),
        }
    }

    /// Moves every prototype toward `probe` around `winner`. With `next`,
    /// each updated prototype's distance to the next input is written while
    /// the row is still in cache; the values are the same as a separate
    /// [`Self::fill_distances`] pass afterwards.
    pub(crate) fn update(
        &mut self,
        probe: &Probe,
        winner: usize,
        eps: f64,
        sigma: f64,
        next: Option<(&Probe, &mut [f64])>,
        workers: Option<&Workers>,
    ) {
        let shape = self.shape;
        let dim = self.dim;
        let p_s = shape.position(winner);
        let v = probe.values();
        let update_block = |first: usize, block: &mut [f32], next: Option<(&Probe, &mut [f64])>| match next {
            Some((np, dist)) => {
                for ((j, w), d) in block.chunks_exact_mut(dim).enumerate().zip(dist) {
                    pull_toward(w, v, eps * neighborhood(shape.position(first + j), p_s, sigma));
                    *d = np.distance(w);
                }
            }
            None => {
                for (j, w) in block.chunks_exact_mut(dim).enumerate() {
                    pull_toward(w, v, eps * neighborhood(shape.position(first + j), p_s, sigma));
                }
            }
        };
        match workers.filter(|w| w.is_parallel()) {
            Some(w) => {
                let chunk = w.chunk_len(shape.len());
                let blocks = self.weights.par_chunks_mut(chunk * dim).enumerate();
                match next {
                    Some((np, dist)) => blocks
                        .zip(dist.par_chunks_mut(chunk))
                        .for_each(|((c, block), d)| update_block(c * chunk, block, Some((np, d)))),
                    None => blocks.for_each(|(c, block)| update_block(c * chunk, block, None)),
                }
            }
            None => update_block(0, &mut self.weights, next),
        }
    }
}

fn check_rates(eps: f64, sigma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::invalid(format!("learning rate {eps} outside [0, 1]")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("neighborhood width must be positive, got {sigma}")));
    }
    Ok(())
}

/// Lowest-index minimum.
pub(crate) fn argmin(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &d) in values.iter().enumerate().skip(1) {
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}
