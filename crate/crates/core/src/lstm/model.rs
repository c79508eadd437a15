use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::classical::{ClassicalLstm, ClassicalStep};
use super::qk::{GateWeighting, QkLstm, QkStep};
use super::{CellState, Forward, GATES};
use crate::error::{Error, Result};
use crate::qkernel::{AssignmentMode, FeatureMap, ReferenceSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Classical,
    Qk,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Classical => "classical",
            ModelKind::Qk => "qk",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" | "lstm" => Ok(ModelKind::Classical),
            "qk" | "qk-lstm" | "qklstm" => Ok(ModelKind::Qk),
            other => Err(Error::Config(format!(
                "unknown model kind '{other}' (expected classical or qk)"
            ))),
        }
    }
}

/// Architecture hyperparameters. Defaults reproduce the 16-unit, 4-qubit,
/// 47-reference configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub seq_len: usize,
    pub n_qubits: usize,
    pub n_refs: usize,
    pub angle_scale: f64,
    pub assignment: AssignmentMode,
    pub per_gate_kernels: bool,
    pub trainable_refs: bool,
    pub weighting: GateWeighting,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Qk,
            input_dim: 12,
            hidden: 16,
            seq_len: 3,
            n_qubits: 4,
            n_refs: 47,
            angle_scale: PI,
            assignment: AssignmentMode::RoundRobin,
            per_gate_kernels: false,
            trainable_refs: false,
            weighting: GateWeighting::Scalar,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.seq_len == 0 {
            return Err(Error::Config("input_dim, hidden and seq_len must be positive".into()));
        }
        if self.kind == ModelKind::Qk && self.n_refs == 0 {
            return Err(Error::Config("n_refs must be at least 1 for the kernel LSTM".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Classical(ClassicalLstm),
    Qk(QkLstm),
}

#[derive(Debug, Clone)]
pub enum ModelForward {
    Classical(Forward<ClassicalStep>),
    Qk(Forward<QkStep>),
}

impl ModelForward {
    pub fn prediction(&self) -> f64 {
        match self {
            ModelForward::Classical(f) => f.prediction,
            ModelForward::Qk(f) => f.prediction,
        }
    }

    pub fn step_outputs(&self) -> &[f64] {
        match self {
            ModelForward::Classical(f) => &f.step_outputs,
            ModelForward::Qk(f) => &f.step_outputs,
        }
    }

    pub fn final_state(&self) -> &CellState {
        match self {
            ModelForward::Classical(f) => &f.final_state,
            ModelForward::Qk(f) => &f.final_state,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub cell: usize,
    pub head: usize,
}

impl ParamCounts {
    pub fn total(&self) -> usize {
        self.cell + self.head
    }
}

/// Picks `n` rows from `pool`; without replacement when the pool is large
/// enough.
fn sample_rows(pool: &[Vec<f64>], n: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    if pool.len() >= n {
        sample(rng, pool.len(), n)
            .into_iter()
            .map(|i| pool[i].clone())
            .collect()
    } else {
        (0..n).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect()
    }
}

impl Model {
    /// Builds a freshly initialised model. For the kernel LSTM the reference
    /// vectors are `[0; x]` with `x` sampled from `ref_pool`.
    pub fn init(config: &ModelConfig, ref_pool: &[Vec<f64>], seed: u64) -> Result<Model> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match config.kind {
            ModelKind::Classical => Ok(Model::Classical(ClassicalLstm::init(
                config.input_dim,
                config.hidden,
                &mut rng,
            )?)),
            ModelKind::Qk => {
                if ref_pool.is_empty() {
                    return Err(Error::Config(
                        "no training vectors available to seed reference vectors".into(),
                    ));
                }
                if let Some(bad) = ref_pool.iter().find(|x| x.len() != config.input_dim) {
                    return Err(Error::Shape(format!(
                        "reference candidate has {} components, input_dim is {}",
                        bad.len(),
                        config.input_dim
                    )));
                }
                let vectors = sample_rows(ref_pool, config.n_refs, &mut rng)
                    .into_iter()
                    .map(|x| {
                        let mut v = vec![0.0; config.hidden];
                        v.extend(x);
                        v
                    })
                    .collect();
                let refs = ReferenceSet::new(vectors, config.trainable_refs)?;
                let vdim = config.hidden + config.input_dim;
                let map = FeatureMap::new(config.n_qubits, vdim, config.angle_scale, config.assignment)?;
                let maps = if config.per_gate_kernels {
                    vec![map; GATES]
                } else {
                    vec![map]
                };
                Ok(Model::Qk(QkLstm::init(
                    config.input_dim,
                    config.hidden,
                    config.weighting,
                    maps,
                    refs,
                    &mut rng,
                )?))
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Classical(_) => ModelKind::Classical,
            Model::Qk(_) => ModelKind::Qk,
        }
    }

    pub fn hidden(&self) -> usize {
        match self {
            Model::Classical(m) => m.hidden,
            Model::Qk(m) => m.hidden,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Classical(m) => m.input_dim,
            Model::Qk(m) => m.input_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Classical(m) => m.validate(),
            Model::Qk(m) => m.validate(),
        }
    }

    pub fn forward(&self, seq: &[Vec<f64>]) -> Result<ModelForward> {
        let init = CellState::zeros(self.hidden());
        sequence_forward(self, seq, &init)
    }

    pub fn predict(&self, seq: &[Vec<f64>]) -> Result<f64> {
        self.forward(seq).map(|f| f.prediction())
    }

    /// Squared error on one window and its gradient.
    pub fn loss_and_grad(&self, seq: &[Vec<f64>], target: f64) -> Result<(f64, Model)> {
        let fwd = self.forward(seq)?;
        let residual = fwd.prediction() - target;
        let grads = bptt_backward(self, &fwd, 2.0 * residual)?;
        Ok((residual * residual, grads))
    }

    pub fn param_counts(&self) -> ParamCounts {
        match self {
            Model::Classical(m) => ParamCounts {
                cell: m.cell_param_count(),
                head: m.head_param_count(),
            },
            Model::Qk(m) => ParamCounts {
                cell: m.cell_param_count(),
                head: m.head_param_count(),
            },
        }
    }

    pub fn visit(&self, f: &mut dyn FnMut(f64)) {
        match self {
            Model::Classical(m) => m.visit(f),
            Model::Qk(m) => m.visit(f),
        }
    }

    pub fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        match self {
            Model::Classical(m) => m.visit_mut(f),
            Model::Qk(m) => m.visit_mut(f),
        }
    }

    /// Every trainable scalar in a fixed order. Gradients produced by
    /// [`bptt_backward`] flatten to the same layout.
    pub fn trainable(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |x| out.push(x));
        out
    }

    pub fn set_trainable(&mut self, values: &[f64]) -> Result<()> {
        let expected = param_count(self);
        if values.len() != expected {
            return Err(Error::Internal(format!(
                "{} values supplied for {expected} trainable parameters",
                values.len()
            )));
        }
        let mut it = values.iter();
        self.visit_mut(&mut |x| *x = *it.next().expect("length checked"));
        Ok(())
    }
}

/// Runs `params` over `x_seq` starting from `initial`.
pub fn sequence_forward(params: &Model, x_seq: &[Vec<f64>], initial: &CellState) -> Result<ModelForward> {
    match params {
        Model::Classical(m) => m.forward(x_seq, initial).map(ModelForward::Classical),
        Model::Qk(m) => m.forward(x_seq, initial).map(ModelForward::Qk),
    }
}

/// Backpropagation through time from `∂L/∂ŷ` at the final prediction.
/// The result has the same structure as `params`.
pub fn bptt_backward(params: &Model, caches: &ModelForward, d_output: f64) -> Result<Model> {
    match (params, caches) {
        (Model::Classical(m), ModelForward::Classical(f)) => m.backward(f, d_output).map(Model::Classical),
        (Model::Qk(m), ModelForward::Qk(f)) => m.backward(f, d_output).map(Model::Qk),
        _ => Err(Error::Internal(
            "forward cache belongs to a different model kind".into(),
        )),
    }
}

/// Number of trainable scalars, head included, frozen references excluded.
pub fn param_count(params: &Model) -> usize {
    params.param_counts().total()
}
