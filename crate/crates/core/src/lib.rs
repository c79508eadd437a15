//! Quantum-kernel LSTM forecasting.
//!
//! The crate is layered bottom-up:
//!
//! * [`sim`]: dense statevector simulation of H / Ry / Rz / CNOT circuits.
//! * [`qkernel`]: the data-encoding feature map and the fidelity kernel with
//!   parameter-shift gradients.
//! * [`lstm`]: a classical LSTM and a kernel-gated LSTM, both with BPTT.
//! * [`preprocess`]: CSV ingestion, AQI sub-indices, z-score cleaning, linear
//!   interpolation, min-max scaling and windowing.
//! * [`training`]: MSE loss, SGD / Adam and the epoch loop.
//! * [`metrics`]: RMSE, MAE, MAPE and R².
//! * [`cli`]: the `qklstm` command line.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod error;
pub mod lstm;
pub mod metrics;
pub mod preprocess;
pub mod qkernel;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
