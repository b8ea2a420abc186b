//! Self-organizing maps for post-labeled few-shot classification.
//!
//! A 2-D map is trained on unlabeled feature vectors with the online
//! Kohonen rule, its neurons are then labeled from a few annotated samples,
//! and the resulting nearest-prototype classifier is scored on few-shot
//! episodes. Training can be split across worker threads without changing
//! a single bit of the result.

pub mod bench;
mod codec;
pub mod dataset;
pub mod distance;
pub mod error;
pub mod fewshot;
pub mod labeling;
pub mod model;
pub mod parallel;
pub mod rng;
pub mod som;
pub mod stats;

pub use codec::write_atomic;
pub use dataset::{load_features, make_blobs, save_features, FeatureDataset, FeatureFormat, Samples};
pub use distance::{cosine_distance, euclidean_distance, gaussian_activity, Metric};
pub use error::{Error, Result};
pub use fewshot::{run_episode, run_protocol, sample_episode, AggregateResult, EpisodeResult, EpisodeSpec};
pub use labeling::{label_som, ClassAccumulators, LabeledSom, UNLABELED};
pub use model::{load_model, save_model, Model};
pub use parallel::Workers;
pub use som::{
    neighborhood, schedule_value, DecaySchedule, GridShape, Init, InitMode, SomMap, TrainConfig, TrainReport,
};
