//! Training throughput: sequential baseline against multi-worker training
//! across map sizes, with a linear fit of time against neuron count.

use std::io::Write;
use std::time::Instant;

use rand::Rng;

use crate::dataset::Samples;
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::parallel::{available_workers, Workers};
use crate::rng::{stream_rng, DEFAULT_SEED, STREAM_DATA};
use crate::som::{GridShape, Init, SomMap, TrainConfig};
use crate::stats::median;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub neuron_counts: Vec<usize>,
    pub dim: usize,
    pub samples_per_epoch: usize,
    pub epochs: usize,
    /// Must include 1, the baseline.
    pub worker_counts: Vec<usize>,
    pub seed: u64,
    /// Timed repetitions per cell; the median is reported.
    pub repeats: usize,
    /// Run one untimed epoch on a throwaway copy before the first timed
    /// run of each cell.
    pub warmup: bool,
    pub metric: Metric,
}

impl Default for BenchConfig {
    /// 10,000 samples of 784 dimensions for 10 epochs over 100 to 2,500
    /// neurons, on one worker and on every available CPU.
    fn default() -> Self {
        let mut worker_counts = vec![1];
        if available_workers() > 1 {
            worker_counts.push(available_workers());
        }
        Self {
            neuron_counts: vec![100, 400, 1600, 2500],
            dim: 784,
            samples_per_epoch: 10_000,
            epochs: 10,
            worker_counts,
            seed: DEFAULT_SEED,
            repeats: 3,
            warmup: true,
            metric: Metric::Euclidean,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.neuron_counts.is_empty() || self.neuron_counts.contains(&0) {
            return Err(Error::invalid("neuron counts must be nonempty and at least 1"));
        }
        if self.dim == 0 || self.samples_per_epoch == 0 || self.epochs == 0 || self.repeats == 0 {
            return Err(Error::invalid(format!(
                "dim ({}), samples ({}), epochs ({}) and repeats ({}) must all be at least 1",
                self.dim, self.samples_per_epoch, self.epochs, self.repeats
            )));
        }
        if self.worker_counts.contains(&0) {
            return Err(Error::invalid("worker counts must be at least 1"));
        }
        if !self.worker_counts.contains(&1) {
            return Err(Error::invalid("worker counts must include the 1-worker baseline"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRun {
    pub neurons: usize,
    pub workers: usize,
    pub run: usize,
    pub seconds: f64,
    pub samples_per_sec: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCell {
    pub neurons: usize,
    /// Requested worker count.
    pub workers: usize,
    /// Worker count actually used after clamping to the platform.
    pub effective_workers: usize,
    pub median_seconds: f64,
    pub samples_per_sec: f64,
    /// Baseline median time over this cell's median time.
    pub speedup: f64,
    /// Final weights equal the 1-worker run bit for bit.
    pub identical: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub cells: Vec<BenchCell>,
    /// Time against neuron count, per requested worker count. Present when
    /// at least three distinct neuron counts were measured.
    pub fits: Vec<(usize, LinearFit)>,
    /// `(requested, effective)` for every clamped worker count.
    pub clamped: Vec<(usize, usize)>,
}

impl BenchReport {
    pub fn cell(&self, neurons: usize, workers: usize) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.neurons == neurons && c.workers == workers)
    }

    pub fn fit(&self, workers: usize) -> Option<LinearFit> {
        self.fits.iter().find(|(w, _)| *w == workers).map(|(_, f)| *f)
    }

    /// `k,workers,run,seconds,samples_per_sec,speedup` per timed run, then a
    /// blank line and `workers,slope,intercept,r_squared` per fit.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let io = |e| Error::io("<bench csv>", e);
        writeln!(out, "k,workers,run,seconds,samples_per_sec,speedup").map_err(io)?;
        for r in &self.runs {
            let speedup = self.cell(r.neurons, r.workers).map_or(f64::NAN, |c| c.speedup);
            writeln!(
                out,
                "{},{},{},{:.6},{:.1},{:.4}",
                r.neurons, r.workers, r.run, r.seconds, r.samples_per_sec, speedup
            )
            .map_err(io)?;
        }
        writeln!(out).map_err(io)?;
        writeln!(out, "workers,slope,intercept,r_squared").map_err(io)?;
        for (w, f) in &self.fits {
            writeln!(out, "{w},{:.9},{:.6},{:.6}", f.slope, f.intercept, f.r_squared).map_err(io)?;
        }
        for (requested, effective) in &self.clamped {
            writeln!(out, "clamped,{requested},{effective},").map_err(io)?;
        }
        Ok(())
    }
}

/// Ordinary least squares of `y` on `x`. A zero-variance `y` is fit exactly
/// and reports `r_squared = 1`.
pub fn fit_linear(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 3 {
        return Err(Error::invalid("linear fit needs at least 3 points"));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("linear fit needs distinct x values"));
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let ss_res: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Synthetic stand-in data: i.i.d. U[0, 1) components.
pub fn synthetic_data(samples: usize, dim: usize, seed: u64) -> Vec<f32> {
    let mut rng = stream_rng(seed, STREAM_DATA);
    (0..samples * dim).map(|_| rng.random::<f32>()).collect()
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let available = available_workers();
    let mut clamped = Vec::new();
    let mut plan = Vec::new();
    for &w in &cfg.worker_counts {
        let effective = w.min(available);
        if effective < w {
            log::warn!("{w} workers requested but only {available} available; clamping");
            if !clamped.contains(&(w, effective)) {
                clamped.push((w, effective));
            }
        }
        if !plan.iter().any(|&(r, _)| r == w) {
            plan.push((w, effective));
        }
    }
    // baseline first, so every other cell can be checked against it
    plan.sort_by_key(|&(r, _)| r != 1);

    let data = synthetic_data(cfg.samples_per_epoch, cfg.dim, cfg.seed);
    let samples = Samples::new(cfg.dim, &data)?;
    let train_cfg = TrainConfig::default()
        .with_epochs(cfg.epochs)
        .with_seed(cfg.seed);
    let warm_cfg = TrainConfig::default().with_epochs(1).with_seed(cfg.seed);
    let total_samples = (cfg.samples_per_epoch * cfg.epochs) as f64;

    let mut runs = Vec::new();
    let mut cells = Vec::new();
    for &k in &cfg.neuron_counts {
        let shape = GridShape::for_neurons(k)?;
        let fresh = SomMap::init(shape, cfg.dim, cfg.metric, cfg.seed, Init::Uniform)?;
        let mut baseline: Option<(Vec<f32>, f64)> = None;
        for &(requested, effective) in &plan {
            let workers = Workers::new(effective)?;
            let mut times = Vec::with_capacity(cfg.repeats);
            let mut final_weights = None;
            for run in 0..cfg.repeats {
                if cfg.warmup && run == 0 {
                    let mut scratch = fresh.clone();
                    scratch.train(samples, &warm_cfg, &workers)?;
                }
                let mut som = fresh.clone();
                let start = Instant::now();
                som.train(samples, &train_cfg, &workers)?;
                let seconds = start.elapsed().as_secs_f64();
                log::info!("k={k} workers={requested} run={run}: {seconds:.3}s");
                times.push(seconds);
                runs.push(BenchRun {
                    neurons: k,
                    workers: requested,
                    run,
                    seconds,
                    samples_per_sec: total_samples / seconds,
                });
                final_weights.get_or_insert_with(|| som.weights().to_vec());
            }
            let weights = final_weights.expect("repeats >= 1");
            let med = median(&times);
            let (identical, speedup) = match &baseline {
                None => {
                    baseline = Some((weights, med));
                    (true, 1.0)
                }
                Some((base_w, base_t)) => {
                    let same = base_w.len() == weights.len()
                        && base_w.iter().zip(&weights).all(|(a, b)| a.to_bits() == b.to_bits());
                    if !same {
                        return Err(Error::InvalidState(format!(
                            "k={k}: {requested}-worker weights differ from the baseline"
                        )));
                    }
                    (true, base_t / med)
                }
            };
            cells.push(BenchCell {
                neurons: k,
                workers: requested,
                effective_workers: effective,
                median_seconds: med,
                samples_per_sec: total_samples / med,
                speedup,
                identical,
            });
        }
    }

    let mut fits = Vec::new();
    for &(w, _) in &plan {
        let points: Vec<(f64, f64)> = cells
            .iter()
            .filter(|c| c.workers == w)
            .map(|c| (c.neurons as f64, c.median_seconds))
            .collect();
        if let Ok(fit) = fit_linear(&points) {
            fits.push((w, fit));
        }
    }

    Ok(BenchReport {
        runs,
        cells,
        fits,
        clamped,
    })
}
