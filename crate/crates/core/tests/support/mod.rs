//! Oracles and checks shared by the test targets.
#![allow(dead_code)]

pub mod decode;
pub mod ingest;
pub mod nn;
pub mod preprocess;
pub mod synth;
