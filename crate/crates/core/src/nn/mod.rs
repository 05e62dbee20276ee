//! Two-LSTM, two-dense sequence classifier with hand-written reverse mode.
//!
//! Layout conventions: every weight matrix is row-major `out × in`; LSTM
//! gate blocks are stacked `[i, f, g, o]`; sequences are time-major `T × D`.

mod activation;
mod checkpoint;
mod dense;
pub mod extended;
mod gradcheck;
mod init;
mod loss;
mod lstm;
mod model;
mod optim;

pub use activation::{hard_sigmoid, hard_sigmoid_grad, relu, HARD_SIGMOID_KINK};
pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use dense::{Activation, DenseCache, DenseLayer};
pub use gradcheck::{grad_check, grad_check_coords, grad_check_with, GradCheckReport, ParamGroup};
pub use init::{glorot_limit, init_params};
pub use loss::softmax_cross_entropy;
pub use lstm::{CellActivation, LstmCache, LstmLayer};
pub use model::{
    argmax, forward_batch, loss_and_gradients, model_forward, model_forward_padded, ForwardPass, ModelParams,
    ModelShape, ParamSet, TrainSample,
};
pub use optim::{clip_global_norm, rmsprop_update, train_step, OptState, RmspropHyper, StepStats};
