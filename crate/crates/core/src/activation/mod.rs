//! Beam activation: choosing the serving beam for each user, the cost of the
//! CCR signalling round and the RSS classifier used with the omnidirectional
//! uplink.

mod dataset;
mod mlp;
mod select;
mod timing;

pub use dataset::{
    activation_accuracy, generate_training_set, RssDataset, RssRow, RssSetup, UplinkTx,
};
pub use mlp::{
    predict_beam, train_mlp, MlpModel, OutputKind, Prediction, Scaler, Target, TrainConfig,
    TrainOutcome,
};
pub use select::{
    benchmark_select, select_beam_ccr, select_beam_sss, similar_within_db, sss_at, BenchmarkScheme,
    SIMILAR_POWER_DB,
};
pub use timing::{effective_throughput, Throughput, TimingParams};
