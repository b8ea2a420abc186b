use std::time::Instant;

use rand::seq::SliceRandom;

use super::{argmin, SomMap, TrainConfig};
use crate::dataset::Samples;
use crate::distance::Probe;
use crate::error::{Error, Result};
use crate::parallel::Workers;
use crate::rng::{stream_rng, STREAM_SHUFFLE};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: usize,
    pub steps: u64,
    pub epoch_seconds: Vec<f64>,
    /// Schedule values after the last epoch.
    pub final_eps: f64,
    pub final_sigma: f64,
}

impl TrainReport {
    pub fn total_seconds(&self) -> f64 {
        self.epoch_seconds.iter().sum()
    }
}

impl SomMap {
    /// Online training: each epoch presents every sample once, in a
    /// freshly shuffled order when `cfg.shuffle_each_epoch` is set. The
    /// learning rate and neighborhood width are held fixed within an epoch
    /// and advanced after it.
    ///
    /// The result depends only on the map, the data and `cfg`, never on the
    /// number of workers.
    pub fn train(&mut self, data: Samples<'_>, cfg: &TrainConfig, workers: &Workers) -> Result<TrainReport> {
        cfg.validate()?;
        if data.dim() != self.dim {
            return Err(Error::invalid(format!(
                "data has dimension {}, map has {}",
                data.dim(),
                self.dim
            )));
        }
        if let Some(i) = data.as_slice().iter().position(|x| !x.is_finite()) {
            return Err(Error::invalid(format!(
                "sample {} component {} is not finite",
                i / data.dim(),
                i % data.dim()
            )));
        }

        let mut rng = stream_rng(cfg.seed, STREAM_SHUFFLE);
        let mut order: Vec<usize> = (0..data.len()).collect();
        let mut dist = vec![0.0; self.len()];
        let (mut cur, mut next) = (Probe::default(), Probe::default());
        let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
        let mut steps = 0u64;

        workers.install(|| -> Result<()> {
            for t in 0..cfg.epochs {
                let start = Instant::now();
                let eps = cfg.eps.value(t)?;
                let sigma = cfg.sigma.value(t)?;
                if cfg.shuffle_each_epoch {
                    order.shuffle(&mut rng);
                }
                // Each update pass also computes the distances for the next
                // sample, so the prototypes are swept once per step.
                cur.load(self.metric, data.row(order[0]));
                self.fill_distances(&cur, &mut dist, Some(workers));
                for j in 0..order.len() {
                    let (winner, _) = argmin(&dist);
                    let lookahead = match order.get(j + 1) {
                        Some(&i) => {
                            next.load(self.metric, data.row(i));
                            Some((&next, dist.as_mut_slice()))
                        }
                        None => None,
                    };
                    self.update(&cur, winner, eps, sigma, lookahead, Some(workers));
                    std::mem::swap(&mut cur, &mut next);
                }
                steps += order.len() as u64;
                epoch_seconds.push(start.elapsed().as_secs_f64());
                log::debug!("epoch {t}: eps={eps:.4} sigma={sigma:.4}");
            }
            Ok(())
        })?;

        Ok(TrainReport {
            epochs: cfg.epochs,
            steps,
            epoch_seconds,
            final_eps: cfg.eps.value(cfg.epochs)?,
            final_sigma: cfg.sigma.value(cfg.epochs)?,
        })
    }
}
