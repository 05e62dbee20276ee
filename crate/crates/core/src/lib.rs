//! Online handwritten-character recognition from a pen-mounted IMU.
//!
//! The crate covers the whole pipeline: decoding the pen's binary frame
//! stream into per-character sensor sequences, min-max scaling and
//! window/noise augmentation, a two-LSTM + two-dense classifier with
//! hand-written backpropagation through time and RMSprop, the three
//! train/test protocols plus the class-count and train-size sweeps, a
//! synthetic pen-motion generator, and a dictionary word corrector.
//!
//! Every sensor matrix uses the row order `[ax, ay, az, gx, gy, gz]`
//! (accelerometer in g, gyroscope in degrees per second), sampled every
//! 10 ms. All arithmetic is `f64`.

pub mod config;
pub mod decode;
pub mod error;
pub mod ingest;
pub mod nn;
pub mod preprocess;
pub mod rng;
pub mod synth;
pub mod train_eval;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Alphabet, ChannelMatrix, CharacterLabel, Dataset, LabeledSequence, Origin, SensorSample, SensorSequence, Violation,
};
