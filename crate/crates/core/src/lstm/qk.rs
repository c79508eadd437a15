use rand::Rng;
use serde::{Deserialize, Serialize};

use super::activation::{sigmoid, sigmoid_grad, tanh, tanh_grad};
use super::{check_sequence, concat, CellState, Forward, GATES};
use crate::error::{Error, Result};
use crate::qkernel::{row_angle_grads, row_from_angles, AssignmentMode, FeatureMap, ReferenceSet};

/// Shape of a gate pre-activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GateWeighting {
    /// `Σ_j α_j k_j + b` is a single scalar broadcast over all hidden units.
    #[default]
    Scalar,
    /// Each hidden unit `u` has its own `α_{u,j}` and `b_u`.
    PerUnit,
}

/// LSTM whose gate pre-activations are weighted sums of fidelity kernels
/// between `v_t = [h_{t-1}; x_t]` and a set of reference vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QkLstm {
    pub input_dim: usize,
    pub hidden: usize,
    pub weighting: GateWeighting,
    /// Forget, input, candidate, output. Length `N`, or `hidden × N`
    /// row-major for [`GateWeighting::PerUnit`].
    pub alphas: [Vec<f64>; GATES],
    /// Length 1, or `hidden` for [`GateWeighting::PerUnit`].
    pub biases: [Vec<f64>; GATES],
    /// One shared map, or one per gate.
    pub maps: Vec<FeatureMap>,
    pub refs: ReferenceSet,
    pub head_w: Vec<f64>,
    pub head_b: f64,
}

#[derive(Debug, Clone)]
pub struct QkStep {
    v: Vec<f64>,
    angles: Vec<Vec<f64>>,
    rows: Vec<Vec<f64>>,
    c_prev: Vec<f64>,
    f: Vec<f64>,
    i: Vec<f64>,
    g: Vec<f64>,
    o: Vec<f64>,
    tanh_c: Vec<f64>,
}

impl QkStep {
    /// Kernel rows evaluated at this step, one per feature map.
    pub fn kernel_rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

impl QkLstm {
    /// All-zero weights around the given maps and references.
    pub fn zeros(
        input_dim: usize,
        hidden: usize,
        weighting: GateWeighting,
        maps: Vec<FeatureMap>,
        refs: ReferenceSet,
    ) -> Result<Self> {
        let n = refs.len();
        let (alpha_len, bias_len) = match weighting {
            GateWeighting::Scalar => (n, 1),
            GateWeighting::PerUnit => (hidden * n, hidden),
        };
        let m = QkLstm {
            input_dim,
            hidden,
            weighting,
            alphas: std::array::from_fn(|_| vec![0.0; alpha_len]),
            biases: std::array::from_fn(|_| vec![0.0; bias_len]),
            maps,
            refs,
            head_w: vec![0.0; hidden],
            head_b: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    /// `α` uniform in `±1/√N`, head weights uniform in `±1/√hidden`, biases
    /// zero.
    pub fn init(
        input_dim: usize,
        hidden: usize,
        weighting: GateWeighting,
        maps: Vec<FeatureMap>,
        refs: ReferenceSet,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut m = Self::zeros(input_dim, hidden, weighting, maps, refs)?;
        let bound = 1.0 / (m.refs.len() as f64).sqrt();
        for a in m.alphas.iter_mut() {
            for x in a.iter_mut() {
                *x = rng.gen_range(-bound..bound);
            }
        }
        let head_bound = 1.0 / (hidden as f64).sqrt();
        for x in m.head_w.iter_mut() {
            *x = rng.gen_range(-head_bound..head_bound);
        }
        Ok(m)
    }

    pub fn n_refs(&self) -> usize {
        self.refs.len()
    }

    pub fn shared_map(&self) -> bool {
        self.maps.len() == 1
    }

    fn map_index(&self, gate: usize) -> usize {
        if self.shared_map() {
            0
        } else {
            gate
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 {
            return Err(Error::Config("LSTM input and hidden sizes must be positive".into()));
        }
        self.refs.validate()?;
        let vdim = self.hidden + self.input_dim;
        if self.refs.dim() != vdim {
            return Err(Error::Shape(format!(
                "reference vectors have {} components, [h; x] has {vdim}",
                self.refs.dim()
            )));
        }
        if self.maps.len() != 1 && self.maps.len() != GATES {
            return Err(Error::Config(format!(
                "expected 1 shared or {GATES} per-gate feature maps, got {}",
                self.maps.len()
            )));
        }
        for m in &self.maps {
            m.validate()?;
            if m.input_dim != vdim {
                return Err(Error::Shape(format!(
                    "feature map input_dim {} does not match [h; x] size {vdim}",
                    m.input_dim
                )));
            }
        }
        let n = self.refs.len();
        let (alpha_len, bias_len) = match self.weighting {
            GateWeighting::Scalar => (n, 1),
            GateWeighting::PerUnit => (self.hidden * n, self.hidden),
        };
        if self.alphas.iter().any(|a| a.len() != alpha_len)
            || self.biases.iter().any(|b| b.len() != bias_len)
            || self.head_w.len() != self.hidden
        {
            return Err(Error::Shape(
                "kernel LSTM parameter blocks have inconsistent sizes".into(),
            ));
        }
        Ok(())
    }

    fn ref_angles(&self) -> Result<Vec<Vec<Vec<f64>>>> {
        self.maps
            .iter()
            .map(|m| self.refs.vectors.iter().map(|r| m.angles(r)).collect())
            .collect()
    }

    fn gate_preactivation(&self, gate: usize, row: &[f64]) -> Vec<f64> {
        let alpha = &self.alphas[gate];
        let bias = &self.biases[gate];
        match self.weighting {
            GateWeighting::Scalar => {
                let z = alpha.iter().zip(row).map(|(a, k)| a * k).sum::<f64>() + bias[0];
                vec![z; self.hidden]
            }
            GateWeighting::PerUnit => {
                let n = row.len();
                (0..self.hidden)
                    .map(|u| {
                        alpha[u * n..(u + 1) * n]
                            .iter()
                            .zip(row)
                            .map(|(a, k)| a * k)
                            .sum::<f64>()
                            + bias[u]
                    })
                    .collect()
            }
        }
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

    fn step(&self, ref_angles: &[Vec<Vec<f64>>], prev: &CellState, x: &[f64]) -> Result<(CellState, QkStep)> {
        self.check_step(prev, x)?;
        let v = concat(&prev.h, x);
        let mut angles = Vec::with_capacity(self.maps.len());
        let mut rows = Vec::with_capacity(self.maps.len());
        for (m, map) in self.maps.iter().enumerate() {
            let a = map.angles(&v)?;
            rows.push(row_from_angles(map, &a, &ref_angles[m])?);
            angles.push(a);
        }
        let pre: [Vec<f64>; GATES] = std::array::from_fn(|g| self.gate_preactivation(g, &rows[self.map_index(g)]));
        let [zf, zi, zg, zo] = pre;
        let f: Vec<f64> = zf.into_iter().map(sigmoid).collect();
        let i: Vec<f64> = zi.into_iter().map(sigmoid).collect();
        let g: Vec<f64> = zg.into_iter().map(tanh).collect();
        let o: Vec<f64> = zo.into_iter().map(sigmoid).collect();
        let c: Vec<f64> = (0..self.hidden).map(|u| f[u] * prev.c[u] + i[u] * g[u]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|x| x.tanh()).collect();
        let h: Vec<f64> = (0..self.hidden).map(|u| o[u] * tanh_c[u]).collect();
        let cache = QkStep {
            v,
            angles,
            rows,
            c_prev: prev.c.clone(),
            f,
            i,
            g,
            o,
            tanh_c,
        };
        Ok((CellState { h, c }, cache))
    }

    /// One cell step; also returns the kernel rows (one per feature map).
    pub fn cell_forward(&self, prev: &CellState, x: &[f64]) -> Result<(CellState, Vec<Vec<f64>>)> {
        let ref_angles = self.ref_angles()?;
        let (s, cache) = self.step(&ref_angles, prev, x)?;
        Ok((s, cache.rows))
    }

    pub fn head(&self, h: &[f64]) -> f64 {
        self.head_w.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + self.head_b
    }

    pub fn forward(&self, seq: &[Vec<f64>], initial: &CellState) -> Result<Forward<QkStep>> {
        check_sequence(seq)?;
        let ref_angles = self.ref_angles()?;
        let mut state = initial.clone();
        let mut steps = Vec::with_capacity(seq.len());
        let mut outputs = Vec::with_capacity(seq.len());
        for x in seq {
            let (next, cache) = self.step(&ref_angles, &state, x)?;
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

    /// Same layout as `self` with every value zeroed; used for gradients.
    pub fn zeros_like(&self) -> QkLstm {
        let mut g = self.clone();
        g.visit_all_mut(&mut |x| *x = 0.0);
        g
    }

    fn visit_all_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        for a in self.alphas.iter_mut().chain(self.biases.iter_mut()) {
            a.iter_mut().for_each(&mut *f);
        }
        for m in self.maps.iter_mut() {
            m.projection.iter_mut().for_each(&mut *f);
        }
        for r in self.refs.vectors.iter_mut() {
            r.iter_mut().for_each(&mut *f);
        }
        self.head_w.iter_mut().for_each(&mut *f);
        f(&mut self.head_b);
    }

    pub fn backward(&self, fwd: &Forward<QkStep>, d_pred: f64) -> Result<QkLstm> {
        let hsz = self.hidden;
        let n = self.refs.len();
        if fwd.final_state.h.len() != hsz
            || fwd
                .steps
                .iter()
                .any(|s| s.rows.len() != self.maps.len() || s.rows.iter().any(|r| r.len() != n))
        {
            return Err(Error::Internal(
                "forward cache does not match kernel LSTM parameters".into(),
            ));
        }
        let ref_angles = self.ref_angles()?;
        let mut grads = self.zeros_like();
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

            // ∂L/∂k(v_t, v_j) per feature map
            let mut d_rows = vec![vec![0.0; n]; self.maps.len()];
            for gate in 0..GATES {
                let m = self.map_index(gate);
                let row = &s.rows[m];
                let alpha = &self.alphas[gate];
                match self.weighting {
                    GateWeighting::Scalar => {
                        let d: f64 = dz[gate].iter().sum();
                        grads.biases[gate][0] += d;
                        for j in 0..n {
                            grads.alphas[gate][j] += d * row[j];
                            d_rows[m][j] += d * alpha[j];
                        }
                    }
                    GateWeighting::PerUnit => {
                        for u in 0..hsz {
                            let d = dz[gate][u];
                            grads.biases[gate][u] += d;
                            for j in 0..n {
                                grads.alphas[gate][u * n + j] += d * row[j];
                                d_rows[m][j] += d * alpha[u * n + j];
                            }
                        }
                    }
                }
            }

            let mut dv = vec![0.0; s.v.len()];
            for (m, map) in self.maps.iter().enumerate() {
                let projection = map.mode == AssignmentMode::Projection;
                let with_refs = self.refs.trainable || projection;
                let (d_query, d_refs) = row_angle_grads(map, &s.angles[m], &ref_angles[m], &d_rows[m], with_refs)?;
                for (acc, d) in dv.iter_mut().zip(map.input_grad(&d_query)) {
                    *acc += d;
                }
                if projection {
                    let out = &mut grads.maps[m].projection;
                    map.accumulate_projection_grad(&s.v, &d_query, out);
                    for (r, d) in self.refs.vectors.iter().zip(&d_refs) {
                        map.accumulate_projection_grad(r, d, out);
                    }
                }
                if self.refs.trainable {
                    for (gr, d) in grads.refs.vectors.iter_mut().zip(&d_refs) {
                        for (acc, x) in gr.iter_mut().zip(map.input_grad(d)) {
                            *acc += x;
                        }
                    }
                }
            }
            dh = dv[..hsz].to_vec();
        }
        Ok(grads)
    }

    pub(crate) fn visit(&self, f: &mut dyn FnMut(f64)) {
        for a in self.alphas.iter().chain(self.biases.iter()) {
            a.iter().for_each(|&x| f(x));
        }
        for m in &self.maps {
            if m.mode == AssignmentMode::Projection {
                m.projection.iter().for_each(|&x| f(x));
            }
        }
        if self.refs.trainable {
            for r in &self.refs.vectors {
                r.iter().for_each(|&x| f(x));
            }
        }
        self.head_w.iter().for_each(|&x| f(x));
        f(self.head_b);
    }

    pub(crate) fn visit_mut(&mut self, f: &mut dyn FnMut(&mut f64)) {
        for a in self.alphas.iter_mut().chain(self.biases.iter_mut()) {
            a.iter_mut().for_each(&mut *f);
        }
        for m in self.maps.iter_mut() {
            if m.mode == AssignmentMode::Projection {
                m.projection.iter_mut().for_each(&mut *f);
            }
        }
        if self.refs.trainable {
            for r in self.refs.vectors.iter_mut() {
                r.iter_mut().for_each(&mut *f);
            }
        }
        self.head_w.iter_mut().for_each(&mut *f);
        f(&mut self.head_b);
    }

    /// Trainable scalars outside the head: gate weights and biases, any
    /// projection matrices, and the references when they are trainable.
    pub fn cell_param_count(&self) -> usize {
        let gates: usize = self.alphas.iter().chain(self.biases.iter()).map(Vec::len).sum();
        let maps: usize = self.maps.iter().map(FeatureMap::trainable_len).sum();
        let refs = if self.refs.trainable {
            self.refs.len() * self.refs.dim()
        } else {
            0
        };
        gates + maps + refs
    }

    pub fn head_param_count(&self) -> usize {
        self.hidden + 1
    }
}

/// One step of the kernel cell, returning the kernel rows alongside the new
/// state.
pub fn qk_cell_forward(params: &QkLstm, prev: &CellState, x: &[f64]) -> Result<(CellState, Vec<Vec<f64>>)> {
    params.cell_forward(prev, x)
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::qkernel::kernel;

    fn tiny(refs: Vec<Vec<f64>>) -> QkLstm {
        let map = FeatureMap::round_robin(2, 5).unwrap();
        QkLstm::zeros(
            2,
            3,
            GateWeighting::Scalar,
            vec![map],
            ReferenceSet::new(refs, false).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_alpha_matches_zero_classical() {
        let m = tiny(vec![vec![0.1, 0.2, 0.3, 0.4, 0.5]]);
        let prev = CellState {
            h: vec![0.2, -0.4, 0.6],
            c: vec![1.0, -0.5, 2.0],
        };
        let (next, _) = m.cell_forward(&prev, &[0.3, 0.7]).unwrap();
        let classical = super::super::ClassicalLstm::zeros(2, 3)
            .cell_forward(&prev, &[0.3, 0.7])
            .unwrap();
        assert_eq!(next, classical);
    }

    #[test]
    fn self_reference_gives_exact_preactivation() {
        let prev = CellState {
            h: vec![0.1, 0.2, -0.3],
            c: vec![0.0; 3],
        };
        let x = [0.5, 0.9];
        let v = concat(&prev.h, &x);
        let mut m = tiny(vec![v.clone()]);
        m.alphas[0] = vec![1.7];
        m.biases[0] = vec![-0.4];
        let (_, rows) = m.cell_forward(&prev, &x).unwrap();
        assert!((rows[0][0] - 1.0).abs() < 1e-12);
        let z = m.gate_preactivation(0, &rows[0]);
        assert!(z.iter().all(|&zi| (zi - (1.7 * rows[0][0] - 0.4)).abs() < 1e-15));
        assert!((z[0] - 1.3).abs() < 1e-12);
    }

    #[test]
    fn rows_match_naive_kernel_calls() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let refs: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let m = QkLstm::init(
            2,
            3,
            GateWeighting::Scalar,
            vec![FeatureMap::round_robin(2, 5).unwrap()],
            ReferenceSet::new(refs.clone(), false).unwrap(),
            &mut rng,
        )
        .unwrap();
        let prev = CellState {
            h: vec![0.3, -0.1, 0.2],
            c: vec![0.5, 0.1, -0.2],
        };
        let x = [0.25, 0.75];
        let (next, rows) = m.cell_forward(&prev, &x).unwrap();
        let v = concat(&prev.h, &x);
        let naive: Vec<f64> = refs.iter().map(|r| kernel(&v, r, &m.maps[0]).unwrap()).collect();
        let mut pre = [0.0; 4];
        for g in 0..4 {
            pre[g] = m.biases[g][0];
            for j in 0..4 {
                pre[g] += m.alphas[g][j] * naive[j];
            }
        }
        for j in 0..4 {
            assert!((rows[0][j] - naive[j]).abs() < 1e-12);
        }
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        for u in 0..3 {
            let c = sig(pre[0]) * prev.c[u] + sig(pre[1]) * pre[2].tanh();
            let h = sig(pre[3]) * c.tanh();
            assert!((next.c[u] - c).abs() < 1e-12);
            assert!((next.h[u] - h).abs() < 1e-12);
        }
    }

    #[test]
    fn param_counts() {
        let refs = ReferenceSet::new(vec![vec![0.0; 28]; 47], false).unwrap();
        let m = QkLstm::zeros(
            12,
            16,
            GateWeighting::Scalar,
            vec![FeatureMap::round_robin(4, 28).unwrap()],
            refs,
        )
        .unwrap();
        assert_eq!(m.cell_param_count() + m.head_param_count(), 209);

        let one = tiny(vec![vec![0.0; 5]]);
        assert_eq!(one.cell_param_count(), 8);
    }

    #[test]
    fn mismatched_reference_dim_is_rejected() {
        let map = FeatureMap::round_robin(2, 5).unwrap();
        let refs = ReferenceSet::new(vec![vec![0.0; 4]], false).unwrap();
        assert!(matches!(
            QkLstm::zeros(2, 3, GateWeighting::Scalar, vec![map], refs),
            Err(Error::Shape(_))
        ));
    }
}
