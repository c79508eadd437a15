use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, sigmoid_grad, tanh, tanh_grad};
use super::{check_sequence, concat, CellState, Forward, GATES};
use crate::error::{Error, Result};

/// Standard LSTM with a scalar regression head.
///
/// Gate blocks are stored in the order forget, input, candidate, output.
/// Each weight block is row-major `hidden × (hidden + input_dim)` acting on
/// `[h_{t-1}; x_t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLstm {
    pub input_dim: usize,
    pub hidden: usize,
    pub weights: [Vec<f64>; GATES],
    pub biases: [Vec<f64>; GATES],
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

#[derive(Debug, Clone)]
pub struct ClassicalStep {
    v: Vec<f64>,
    c_prev: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl ClassicalLstm {
    pub fn zeros(input_dim: usize, hidden: usize) -> Self {
        let cols = input_dim + hidden;
        ClassicalLstm {
            input_dim,
            hidden,
            weights: std::array::from_fn(|_| vec![0.0; hidden * cols]),
            biases: std::array::from_fn(|_| vec![0.0; hidden]),
            head_w: vec![0.0; hidden],
            head_b: 0.0,
        }
    }

    /// Gate weights uniform in `±1/√(input + hidden)`, head weights uniform
    /// in `±1/√hidden`, all biases zero.
    pub fn init(input_dim: usize, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config("LSTM input and hidden sizes must be positive".into()));
        }
        let mut m = Self::zeros(input_dim, hidden);
        let bound = 1.0 / ((input_dim + hidden) as f64).sqrt();
        for w in m.weights.iter_mut() {
            for x in w.iter_mut() {
                *x = rng.gen_range(-bound..bound);
            }
        }
        let head_bound = 1.0 / (hidden as f64).sqrt();
        for x in m.head_w.iter_mut() {
            *x = rng.gen_range(-head_bound..head_bound);
        }
        Ok(m)
    }

    pub fn cols(&self) -> usize {
        self.input_dim + self.hidden
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let cols = self.cols();
        let ok = self.weights.iter().all(|w| w.len() == self.hidden * cols)
            && self.biases.iter().all(|b| b.len() == self.hidden)
            && self.head_w.len() == self.hidden;
        if !ok {
            return Err(Error::Shape(
                "classical LSTM parameter blocks have inconsistent sizes".into(),
            ));
        }
        Ok(())
    }

    fn check_step(&self, prev: &CellState, x: &[f64]) -> Result<()> {
        if prev.h.len() != self.hidden || prev.c.len() != self.hidden {
            return Err(Error::Shape(format!(
                "cell state has sizes ({}, {}), model hidden size is {}",
                prev.h.len(),
                prev.c.len(),
                self.hidden
            )));
        }
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input has {} components, model expects {}",
                x.len(),
                self.input_dim
            )));
        }
        Ok(())
    }

    fn step(&self, prev: &CellState, x: &[f64]) -> Result<(CellState, ClassicalStep)> {
        self.check_step(prev, x)?;
        let v = concat(&prev.h, x);
        let cols = self.cols();
        let mut pre: [Vec<f64>; GATES] = std::array::from_fn(|_| vec![0.0; self.hidden]);
        for (gate, out) in pre.iter_mut().enumerate() {
            let w = &self.weights[gate];
            for (u, z) in out.iter_mut().enumerate() {
                let row = &w[u * cols..(u + 1) * cols];
                *z = row.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() + self.biases[gate][u];
            }
        }
        let [zf, zi, zg, zo] = pre;
        let f: Vec<f64> = zf.into_iter().map(sigmoid).collect();
        let i: Vec<f64> = zi.into_iter().map(sigmoid).collect();
        let g: Vec<f64> = zg.into_iter().map(tanh).collect();
        let o: Vec<f64> = zo.into_iter().map(sigmoid).collect();
        let c: Vec<f64> = (0..self.hidden).map(|u| f[u] * prev.c[u] + i[u] * g[u]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
        let h: Vec<f64> = (0..self.hidden).map(|u| o[u] * tanh_c[u]).collect();
        let cache = ClassicalStep {
            v,
            c_prev: prev.c.clone(),
            f,
            i,
            g,
            o,
            tanh_c,
        };
        Ok((CellState { h, c }, cache))
    }

    pub fn cell_forward(&self, prev: &CellState, x: &[f64]) -> Result<CellState> {
        self.step(prev, x).map(|(s, _)| s)
    }

    pub fn head(&self, h: &[f64]) -> f64 {
        self.head_w.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + self.head_b
    }

    pub fn forward(&self, seq: &[Vec<f64>], initial: &CellState) -> Result<Forward<ClassicalStep>> {
        check_sequence(seq)?;
        let mut state = initial.clone();
        let mut steps = Vec::with_capacity(seq.len());
        let mut outputs = Vec::with_capacity(seq.len());
        for x in seq {
            let (next, cache) = self.step(&state, x)?;
            outputs.push(self.head(&next.h));
            steps.push(cache);
            state = next;
        }
        Ok(Forward {
            prediction: *outputs.last().expect("non-empty sequence"),
            step_outputs: outputs,
            final_state: state,
            steps,
        })
    }

    /// Gradients of a loss with `∂L/∂ŷ = d_pred` at the final prediction.
    pub fn backward(&self, fwd: &Forward<ClassicalStep>, d_pred: f64) -> Result<ClassicalLstm> {
        let hsz = self.hidden;
        let cols = self.cols();
        if fwd.final_state.h.len() != hsz || fwd.steps.iter().any(|s| s.v.len() != cols) {
            return Err(Error::Internal(
                "forward cache does not match classical parameters".into(),
            ));
        }
        let mut grads = ClassicalLstm::zeros(self.input_dim, hsz);
        grads.head_b = d_pred;
        for (g, h) in grads.head_w.iter_mut().zip(&fwd.final_state.h) {
            *g = d_pred * h;
        }
        let mut dh: Vec<f64> = self.head_w.iter().map(|w| w * d_pred).collect();
        let mut dc = vec![0.0; hsz];
        for s in fwd.steps.iter().rev() {
            let mut dz: [Vec<f64>; GATES] = std::array::from_fn(|_| vec![0.0; hsz]);
            for u in 0..hsz {
                let d_o = dh[u] * s.tanh_c[u];
                let dct = dc[u] + dh[u] * s.o[u] * tanh_grad(s.tanh_c[u]);
                dz[0][u] = dct * s.c_prev[u] * sigmoid_grad(s.f[u]);
                dz[1][u] = dct * s.g[u] * sigmoid_grad(s.i[u]);
                dz[2][u] = dct * s.i[u] * tanh_grad(s.g[u]);
                dz[3][u] = d_o * sigmoid_grad(s.o[u]);
                dc[u] = dct * s.f[u];
            }
            let mut dv = vec![0.0; cols];
            for gate in 0..GATES {
                let w = &self.weights[gate];
                let gw = &mut grads.weights[gate];
                for u in 0..hsz {
                    let d = dz[gate][u];
                    if d == 0.0 {
                        continue;
                    }
                    grads.biases[gate][u] += d;
                    let row = u * cols..(u + 1) * cols;
                    for ((gk, wk), (dvk, vk)) in gw[row.clone()].iter_mut().zip(&w[row]).zip(dv.iter_mut().zip(&s.v)) {
                        *gk += d * vk;
                        *dvk += d * wk;
                    }
                }
            }
            dh = dv[..hsz].to_vec();
        }
        Ok(grads)
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(f64)) {
        for w in &self.weights {
            w.iter().for_each(|&x| f(x));
        }
        for b in &self.biases {
            b.iter().for_each(|&x| f(x));
        }
        self.head_w.iter().for_each(|&x| f(x));
        f(self.head_b);
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        for w in self.weights.iter_mut() {
            w.iter_mut().for_each(&mut *f);
        }
        for b in self.biases.iter_mut() {
            b.iter_mut().for_each(&mut *f);
        }
        self.head_w.iter_mut().for_each(&mut *f);
        f(&mut self.head_b);
    }

    /// Trainable scalars in the recurrent cell (everything except the head).
    pub fn cell_param_count(&self) -> usize {
        GATES * (self.hidden * self.cols() + self.hidden)
    }

    pub fn head_param_count(&self) -> usize {
        self.hidden + 1
    }
}

/// One step of the classical cell.
pub fn classical_cell_forward(params: &ClassicalLstm, prev: &CellState, x: &[f64]) -> Result<CellState> {
    params.cell_forward(prev, x)
}
