//! Polynomial convolutional networks: layers, training, metrics and the
//! model container.

pub mod dense;
pub mod gradcheck;
pub mod init;
pub mod io;
pub mod layer;
pub mod metrics;
pub mod model;
pub mod pool;
pub mod train;
pub mod width;

pub use dense::{softmax, Dense};
pub use init::{init_output_bias, Architecture};
pub use io::{load_model, save_model};
pub use layer::{Activation, PolyConvGrads, PolyConvLayer};
pub use metrics::{evaluate_metrics, ConfusionMatrix, Metrics};
pub use model::{argmax, Layer, ModelSpec};
pub use pool::MaxPool;
pub use train::{train, EpochLog, Sample, TrainConfig};
pub use width::{equivalent_param_count, solve_equivalent_width};
