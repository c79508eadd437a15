//! Recurrent cells: a classical LSTM baseline and the kernel-gated LSTM.
//!
//! Both read the concatenation `v_t = [h_{t-1}; x_t]` (hidden state first) and
//! finish with a dense scalar head on the final hidden state.

pub mod activation;
mod classical;
mod model;
mod qk;

use serde::{Deserialize, Serialize};

pub use classical::{classical_cell_forward, ClassicalLstm, ClassicalStep};
pub use model::{
    bptt_backward, param_count, sequence_forward, Model, ModelConfig, ModelForward, ModelKind, ParamCounts,
};
pub use qk::{qk_cell_forward, GateWeighting, QkLstm, QkStep};

use crate::error::{Error, Result};

/// Number of LSTM gates (forget, input, candidate, output).
pub const GATES: usize = 4;

pub const FORGET: usize = 0;
pub const INPUT: usize = 1;
pub const CANDIDATE: usize = 2;
pub const OUTPUT: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl CellState {
    pub fn zeros(hidden: usize) -> Self {
        CellState {
            h: vec![0.0; hidden],
            c: vec![0.0; hidden],
        }
    }
}

/// Result of running a cell over a sequence, with per-step caches for BPTT.
#[derive(Debug, Clone)]
pub struct Forward<S> {
    /// Head applied to the final hidden state.
    pub prediction: f64,
    /// Head applied to every hidden state, in time order.
    pub step_outputs: Vec<f64>,
    pub final_state: CellState,
    pub steps: Vec<S>,
}

pub(crate) fn concat(h: &[f64], x: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(h.len() + x.len());
    v.extend_from_slice(h);
    v.extend_from_slice(x);
    v
}

pub(crate) fn check_sequence(seq: &[Vec<f64>]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::Input("input sequence is empty".into()));
    }
    Ok(())
}
