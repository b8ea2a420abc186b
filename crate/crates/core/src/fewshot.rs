//! N-way few-shot evaluation: sample an episode, train a fresh map on all of
//! its vectors without labels, label neurons with the support set, and
//! score the query set.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;

use crate::dataset::{FeatureDataset, Samples};
use crate::distance::Metric;
use crate::error::{Error, Result};
use crate::labeling::label_som;
use crate::parallel::Workers;
use crate::rng::{episode_rng, DEFAULT_SEED};
use crate::som::{GridShape, InitMode, SomMap, TrainConfig, DEFAULT_ALPHA};
use crate::stats::{summarize, Summary};

pub const DEFAULT_WAYS: usize = 5;
pub const DEFAULT_RUNS: usize = 10_000;

/// 25 neurons for one shot, 100 otherwise.
pub fn default_grid(shots: usize) -> GridShape {
    let side = if shots <= 1 { 5 } else { 10 };
    GridShape::new(side, side).expect("nonzero grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSpec {
    pub ways: usize,
    /// Labeled samples per class (`s`).
    pub shots: usize,
    /// Unlabeled query samples per class (`q`).
    pub queries: usize,
    pub runs: usize,
    pub seed: u64,
    pub shape: GridShape,
    pub train: TrainConfig,
    pub metric: Metric,
    /// Kernel width used while labeling.
    pub label_alpha: f64,
    pub init: InitMode,
}

impl EpisodeSpec {
    /// Five ways, 10,000 runs, default grid for `shots`, default training
    /// schedule, cosine metric.
    pub fn new(shots: usize, queries: usize) -> Self {
        Self {
            ways: DEFAULT_WAYS,
            shots,
            queries,
            runs: DEFAULT_RUNS,
            seed: DEFAULT_SEED,
            shape: default_grid(shots),
            train: TrainConfig::default(),
            metric: Metric::Cosine,
            label_alpha: DEFAULT_ALPHA,
            init: InitMode::Uniform,
        }
    }

    /// Total number of queries per episode, `Q = q * ways`.
    pub fn total_queries(&self) -> usize {
        self.queries * self.ways
    }

    pub fn validate(&self) -> Result<()> {
        if self.ways == 0 || self.shots == 0 || self.queries == 0 || self.runs == 0 {
            return Err(Error::invalid(format!(
                "ways ({}), shots ({}), queries ({}) and runs ({}) must all be at least 1",
                self.ways, self.shots, self.queries, self.runs
            )));
        }
        if !(self.label_alpha > 0.0 && self.label_alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "labeling alpha must be positive, got {}",
                self.label_alpha
            )));
        }
        self.train.validate()
    }

    fn check_dataset(&self, ds: &FeatureDataset) -> Result<()> {
        self.validate()?;
        if self.ways > ds.num_classes() {
            return Err(Error::invalid(format!(
                "{} ways requested but the dataset has {} classes",
                self.ways,
                ds.num_classes()
            )));
        }
        Ok(())
    }
}

/// One draw: `ways` classes remapped to `0..ways`, `shots` support and
/// `queries` query vectors per class, disjoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// Original class id of each episode class.
    pub classes: Vec<u32>,
    pub support: FeatureDataset,
    pub query: FeatureDataset,
    init_seed: u64,
    train_seed: u64,
}

impl Episode {
    /// Support vectors followed by query vectors, without labels.
    pub fn training_vectors(&self) -> Vec<f32> {
        let mut v = Vec::with_capacity(self.support.features().len() + self.query.features().len());
        v.extend_from_slice(self.support.features());
        v.extend_from_slice(self.query.features());
        v
    }
}

pub fn sample_episode(ds: &FeatureDataset, spec: &EpisodeSpec, run_index: u64) -> Result<Episode> {
    spec.check_dataset(ds)?;
    let mut rng = episode_rng(spec.seed, run_index);
    let by_class = ds.class_indices();
    let per_class = spec.shots + spec.queries;
    let classes: Vec<u32> = index::sample(&mut rng, ds.num_classes(), spec.ways)
        .into_iter()
        .map(|c| c as u32)
        .collect();

    let dim = ds.dim();
    let (mut s_labels, mut s_feat) = (Vec::new(), Vec::new());
    let (mut q_labels, mut q_feat) = (Vec::new(), Vec::new());
    for (episode_class, &class) in classes.iter().enumerate() {
        let pool = &by_class[class as usize];
        if pool.len() < per_class {
            return Err(Error::invalid(format!(
                "class {class} has {} samples, episode needs {per_class}",
                pool.len()
            )));
        }
        let picks = index::sample(&mut rng, pool.len(), per_class);
        for (j, p) in picks.into_iter().enumerate() {
            let v = ds.vector(pool[p]);
            if j < spec.shots {
                s_labels.push(episode_class as u32);
                s_feat.extend_from_slice(v);
            } else {
                q_labels.push(episode_class as u32);
                q_feat.extend_from_slice(v);
            }
        }
    }
    Ok(Episode {
        classes,
        support: FeatureDataset::new(dim, spec.ways, s_labels, s_feat)?,
        query: FeatureDataset::new(dim, spec.ways, q_labels, q_feat)?,
        init_seed: rng.random(),
        train_seed: rng.random(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeResult {
    pub run_index: u64,
    pub accuracy: f64,
    pub train_ms: f64,
    pub label_ms: f64,
    pub eval_ms: f64,
}

/// Trains, labels and scores one episode on a single thread.
pub fn run_episode(ds: &FeatureDataset, spec: &EpisodeSpec, run_index: u64) -> Result<EpisodeResult> {
    let episode = sample_episode(ds, spec, run_index)?;
    let train_data = episode.training_vectors();
    let samples = Samples::new(ds.dim(), &train_data)?;

    let start = Instant::now();
    let mut som = SomMap::init(spec.shape, ds.dim(), spec.metric, episode.init_seed, spec.init.with(samples))?;
    let cfg = spec.train.clone().with_seed(episode.train_seed);
    som.train(samples, &cfg, &Workers::sequential())?;
    let train_ms = ms_since(start);

    let start = Instant::now();
    let labeled = label_som(som, episode.support.iter(), spec.ways, spec.label_alpha)?;
    let label_ms = ms_since(start);

    let start = Instant::now();
    let accuracy = labeled.evaluate(episode.query.iter())?;
    let eval_ms = ms_since(start);

    Ok(EpisodeResult {
        run_index,
        accuracy,
        train_ms,
        label_ms,
        eval_ms,
    })
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateResult {
    /// Ordered by run index.
    pub episodes: Vec<EpisodeResult>,
    pub summary: Summary,
}

impl AggregateResult {
    pub fn mean(&self) -> f64 {
        self.summary.mean
    }

    pub fn ci95(&self) -> f64 {
        self.summary.ci95
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.accuracy).collect()
    }

    /// `run_index,accuracy,train_ms,label_ms,eval_ms` rows, then a final
    /// `mean,<mean>,ci95,<ci95>,` row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["run_index", "accuracy", "train_ms", "label_ms", "eval_ms"])?;
        for e in &self.episodes {
            wtr.write_record([
                e.run_index.to_string(),
                e.accuracy.to_string(),
                format!("{:.3}", e.train_ms),
                format!("{:.3}", e.label_ms),
                format!("{:.3}", e.eval_ms),
            ])?;
        }
        wtr.write_record([
            "mean".to_string(),
            self.mean().to_string(),
            "ci95".to_string(),
            self.ci95().to_string(),
            String::new(),
        ])?;
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

impl fmt::Display for AggregateResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.2}% ± {:.2} ({} runs)",
            self.mean() * 100.0,
            self.ci95() * 100.0,
            self.summary.n
        )
    }
}

/// Runs episodes `0..spec.runs`, spread over `workers`, and aggregates
/// their accuracies in run order.
pub fn run_protocol(ds: &FeatureDataset, spec: &EpisodeSpec, workers: &Workers) -> Result<AggregateResult> {
    spec.check_dataset(ds)?;
    let runs = spec.runs as u64;
    let episodes: Vec<EpisodeResult> = if workers.is_parallel() {
        workers.install(|| {
            (0..runs)
                .into_par_iter()
                .map(|i| run_episode(ds, spec, i))
                .collect::<Result<_>>()
        })?
    } else {
        (0..runs).map(|i| run_episode(ds, spec, i)).collect::<Result<_>>()?
    };
    let acc: Vec<f64> = episodes.iter().map(|e| e.accuracy).collect();
    let summary = summarize(&acc).expect("runs >= 1");
    Ok(AggregateResult { episodes, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::make_blobs;

    fn blobs() -> FeatureDataset {
        make_blobs(8, 24, 16, 1.0, 10.0, 5).unwrap()
    }

    #[test]
    fn episode_sizes() {
        let ds = blobs();
        let spec = EpisodeSpec::new(1, 15);
        let ep = sample_episode(&ds, &spec, 0).unwrap();
        assert_eq!(ep.support.len(), 5);
        assert_eq!(ep.query.len(), 75);
        assert_eq!(spec.total_queries(), 75);
        assert_eq!(ep.support.num_classes(), 5);
        let mut classes = ep.classes.clone();
        classes.sort();
        classes.dedup();
        assert_eq!(classes.len(), 5);
    }

    #[test]
    fn support_and_query_are_disjoint() {
        let ds = blobs();
        let spec = EpisodeSpec::new(3, 10);
        let ep = sample_episode(&ds, &spec, 4).unwrap();
        for (s, _) in ep.support.iter() {
            assert!(ep.query.iter().all(|(q, _)| q != s));
        }
    }

    #[test]
    fn zero_queries_rejected() {
        let spec = EpisodeSpec::new(5, 0);
        assert!(sample_episode(&blobs(), &spec, 0).is_err());
    }

    #[test]
    fn insufficient_samples_names_the_class() {
        let spec = EpisodeSpec::new(10, 15);
        let err = sample_episode(&blobs(), &spec, 0).unwrap_err().to_string();
        assert!(err.contains("class"), "{err}");
        let mut spec = EpisodeSpec::new(1, 1);
        spec.ways = 9;
        assert!(sample_episode(&blobs(), &spec, 0).is_err());
    }

    #[test]
    fn episodes_are_reproducible() {
        let ds = blobs();
        let spec = EpisodeSpec::new(1, 15);
        assert_eq!(sample_episode(&ds, &spec, 7).unwrap(), sample_episode(&ds, &spec, 7).unwrap());
        assert_ne!(sample_episode(&ds, &spec, 7).unwrap(), sample_episode(&ds, &spec, 8).unwrap());
    }

    #[test]
    fn separable_blobs_are_classified_perfectly() {
        let ds = make_blobs(6, 20, 8, 0.0, 5.0, 2).unwrap();
        let spec = EpisodeSpec::new(1, 15);
        for i in 0..5 {
            assert_eq!(run_episode(&ds, &spec, i).unwrap().accuracy, 1.0);
        }
    }

    #[test]
    fn protocol_is_independent_of_workers() {
        let ds = blobs();
        let mut spec = EpisodeSpec::new(1, 5);
        spec.runs = 12;
        spec.train = TrainConfig::default().with_epochs(3);
        let seq = run_protocol(&ds, &spec, &Workers::sequential()).unwrap();
        let par = run_protocol(&ds, &spec, &Workers::new(3).unwrap()).unwrap();
        assert_eq!(seq.accuracies(), par.accuracies());
        assert_eq!(seq.mean(), par.mean());
        for (i, e) in seq.episodes.iter().enumerate() {
            assert_eq!(e.run_index, i as u64);
            assert_eq!(e.accuracy, run_episode(&ds, &spec, i as u64).unwrap().accuracy);
        }
    }

    #[test]
    fn csv_has_final_summary_row() {
        let ds = blobs();
        let mut spec = EpisodeSpec::new(1, 5);
        spec.runs = 2;
        let agg = run_protocol(&ds, &spec, &Workers::sequential()).unwrap();
        let mut out = Vec::new();
        agg.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "run_index,accuracy,train_ms,label_ms,eval_ms");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("mean,"));
        assert!(lines[3].contains(",ci95,"));
    }

    #[test]
    fn default_grids() {
        assert_eq!(default_grid(1).len(), 25);
        assert_eq!(default_grid(3).len(), 100);
        assert_eq!(default_grid(5).len(), 100);
    }
}
