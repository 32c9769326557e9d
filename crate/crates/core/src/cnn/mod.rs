//! A small 1D convolutional regressor with hand-written backpropagation.

mod adam;
mod io;
mod layers;
mod model;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use io::{encode_weights, load_model, save_model, CnnHeader, CNN_SCHEMA_VERSION, HEADER_FILE, WEIGHTS_FILE};
pub use layers::{
    batchnorm_backward, batchnorm_forward_infer, batchnorm_forward_train, conv1d_backward, conv1d_forward,
    dense_backward, dense_forward, maxpool_backward, maxpool_forward, relu_backward_inplace, relu_inplace, BnCache,
    Tensor1D, KERNEL,
};
pub use model::{CnnArch, CnnModel, ForwardCache, Normalization, ParamCount};
pub use train::{history_csv, train, EpochRecord, TrainConfig, TrainOutcome};
