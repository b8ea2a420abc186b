use crate::error::{Error, Result};
use crate::rng::DEFAULT_SEED;

/// Exponential interpolation from `initial` to `final_value` over
/// `total_epochs`: `initial * (final / initial)^(t / total_epochs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecaySchedule {
    initial: f64,
    final_value: f64,
    total_epochs: usize,
}

impl DecaySchedule {
    pub fn new(initial: f64, final_value: f64, total_epochs: usize) -> Result<Self> {
        for (name, v) in [("initial", initial), ("final", final_value)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "schedule {name} value must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            initial,
            final_value,
            total_epochs,
        })
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn final_value(&self) -> f64 {
        self.final_value
    }

    pub fn total_epochs(&self) -> usize {
        self.total_epochs
    }

    /// Value at epoch `t`, for `0 <= t <= total_epochs`. Both endpoints are
    /// returned exactly. A zero-length schedule only has `t = 0`, which maps
    /// to `initial`.
    pub fn value(&self, t: usize) -> Result<f64> {
        if t > self.total_epochs {
            return Err(Error::invalid(format!(
                "epoch {t} outside schedule of {} epochs",
                self.total_epochs
            )));
        }
        Ok(if t == 0 {
            self.initial
        } else if t == self.total_epochs {
            self.final_value
        } else {
            let frac = t as f64 / self.total_epochs as f64;
            self.initial * (self.final_value / self.initial).powf(frac)
        })
    }

    pub(crate) fn with_epochs(self, total_epochs: usize) -> Self {
        Self {
            total_epochs,
            ..self
        }
    }
}

/// Free-function form of [`DecaySchedule::value`].
pub fn schedule_value(schedule: &DecaySchedule, t: usize) -> Result<f64> {
    schedule.value(t)
}

/// Training hyper-parameters. `Default` gives the reference setting:
/// learning rate 1 -> 0.01, neighborhood width 10 -> 0.1, 10 epochs,
/// kernel width 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub eps: DecaySchedule,
    pub sigma: DecaySchedule,
    pub epochs: usize,
    /// Kernel width of the activity function. Winner search minimizes the
    /// distance directly, so this has no effect on training.
    pub alpha: f64,
    pub seed: u64,
    pub shuffle_each_epoch: bool,
}

pub const DEFAULT_EPS_INITIAL: f64 = 1.0;
pub const DEFAULT_EPS_FINAL: f64 = 0.01;
pub const DEFAULT_SIGMA_INITIAL: f64 = 10.0;
pub const DEFAULT_SIGMA_FINAL: f64 = 0.1;
pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_ALPHA: f64 = 1.0;

impl Default for TrainConfig {
    fn default() -> Self {
        Self::new(
            DEFAULT_EPOCHS,
            (DEFAULT_EPS_INITIAL, DEFAULT_EPS_FINAL),
            (DEFAULT_SIGMA_INITIAL, DEFAULT_SIGMA_FINAL),
        )
        .expect("default schedules are valid")
    }
}

impl TrainConfig {
    /// Builds schedules for `epochs` from `(initial, final)` pairs.
    pub fn new(epochs: usize, eps: (f64, f64), sigma: (f64, f64)) -> Result<Self> {
        let cfg = Self {
            eps: DecaySchedule::new(eps.0, eps.1, epochs)?,
            sigma: DecaySchedule::new(sigma.0, sigma.1, epochs)?,
            epochs,
            alpha: DEFAULT_ALPHA,
            seed: DEFAULT_SEED,
            shuffle_each_epoch: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Changes the epoch count, stretching both schedules to match.
    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self.eps = self.eps.with_epochs(epochs);
        self.sigma = self.sigma.with_epochs(epochs);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.total_epochs != self.epochs || self.sigma.total_epochs != self.epochs {
            return Err(Error::invalid(format!(
                "schedule lengths ({}, {}) must equal epochs {}",
                self.eps.total_epochs, self.sigma.total_epochs, self.epochs
            )));
        }
        if self.eps.initial > 1.0 || self.eps.final_value > 1.0 {
            return Err(Error::invalid("learning rate must stay within (0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        Ok(())
    }
}
