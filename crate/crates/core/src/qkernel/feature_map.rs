use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Circuit, Gate, MAX_QUBITS};

/// How input components become rotation angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AssignmentMode {
    /// Component `i` feeds slot `i mod 2n`; each angle is `scale × mean` of
    /// its slot. No trainable parameters.
    #[default]
    RoundRobin,
    /// Each angle is `scale × (W v)_l` with a trainable `2n × input_dim`
    /// matrix `W`, initialised to the round-robin averaging matrix.
    Projection,
}

/// Data-encoding circuit `U(v)`: a Hadamard layer, per-qubit `Rz(φ_k)` then
/// `Ry(θ_k)`, then a CNOT ladder `(0,1), (1,2), …`.
///
/// Angle slots are interleaved: slot `2k` is `θ_k`, slot `2k+1` is `φ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    pub n_qubits: usize,
    pub input_dim: usize,
    pub angle_scale: f64,
    pub mode: AssignmentMode,
    /// Row-major `n_slots × input_dim`; empty unless `mode` is `Projection`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub projection: Vec<f64>,
}

impl FeatureMap {
    pub fn new(n_qubits: usize, input_dim: usize, angle_scale: f64, mode: AssignmentMode) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::Config(format!(
                "feature map qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
            )));
        }
        if input_dim == 0 {
            return Err(Error::Config("feature map input_dim must be positive".into()));
        }
        if !angle_scale.is_finite() {
            return Err(Error::Config("angle_scale must be finite".into()));
        }
        let mut map = FeatureMap {
            n_qubits,
            input_dim,
            angle_scale,
            mode,
            projection: Vec::new(),
        };
        if mode == AssignmentMode::Projection {
            map.projection = map.round_robin_matrix();
        }
        Ok(map)
    }

    /// Round-robin map with the default scale of π.
    pub fn round_robin(n_qubits: usize, input_dim: usize) -> Result<Self> {
        Self::new(n_qubits, input_dim, PI, AssignmentMode::RoundRobin)
    }

    pub fn n_slots(&self) -> usize {
        2 * self.n_qubits
    }

    pub fn slot_of(&self, component: usize) -> usize {
        component % self.n_slots()
    }

    /// Number of input components routed to each slot under round-robin.
    pub fn slot_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_slots()];
        for i in 0..self.input_dim {
            sizes[self.slot_of(i)] += 1;
        }
        sizes
    }

    fn round_robin_matrix(&self) -> Vec<f64> {
        let sizes = self.slot_sizes();
        let mut w = vec![0.0; self.n_slots() * self.input_dim];
        for i in 0..self.input_dim {
            let l = self.slot_of(i);
            w[l * self.input_dim + i] = 1.0 / sizes[l] as f64;
        }
        w
    }

    pub fn trainable_len(&self) -> usize {
        match self.mode {
            AssignmentMode::RoundRobin => 0,
            AssignmentMode::Projection => self.projection.len(),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.mode == AssignmentMode::Projection && self.projection.len() != self.n_slots() * self.input_dim {
            return Err(Error::Config(format!(
                "projection matrix has {} entries, expected {}",
                self.projection.len(),
                self.n_slots() * self.input_dim
            )));
        }
        Ok(())
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.input_dim {
            return Err(Error::Kernel(format!(
                "vector has {} components, feature map expects {}",
                v.len(),
                self.input_dim
            )));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::Encoding(format!("component {i} is not finite ({})", v[i])));
        }
        Ok(())
    }

    /// Rotation angles for `v`, one per slot.
    pub fn angles(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_input(v)?;
        let slots = self.n_slots();
        let mut angles = vec![0.0; slots];
        match self.mode {
            AssignmentMode::RoundRobin => {
                let sizes = self.slot_sizes();
                for (i, x) in v.iter().enumerate() {
                    angles[self.slot_of(i)] += x;
                }
                for (a, &n) in angles.iter_mut().zip(&sizes) {
                    // empty slot keeps angle 0
                    if n > 0 {
                        *a = self.angle_scale * (*a / n as f64);
                    }
                }
            }
            AssignmentMode::Projection => {
                for (l, a) in angles.iter_mut().enumerate() {
                    let row = &self.projection[l * self.input_dim..(l + 1) * self.input_dim];
                    *a = self.angle_scale * row.iter().zip(v).map(|(w, x)| w * x).sum::<f64>();
                }
            }
        }
        Ok(angles)
    }

    /// Pulls angle gradients back to input components.
    pub fn input_grad(&self, d_angles: &[f64]) -> Vec<f64> {
        let mut dv = vec![0.0; self.input_dim];
        match self.mode {
            AssignmentMode::RoundRobin => {
                let sizes = self.slot_sizes();
                for (i, d) in dv.iter_mut().enumerate() {
                    let l = self.slot_of(i);
                    *d = d_angles[l] * self.angle_scale / sizes[l] as f64;
                }
            }
            AssignmentMode::Projection => {
                for (l, &da) in d_angles.iter().enumerate() {
                    let row = &self.projection[l * self.input_dim..(l + 1) * self.input_dim];
                    for (d, w) in dv.iter_mut().zip(row) {
                        *d += da * self.angle_scale * w;
                    }
                }
            }
        }
        dv
    }

    /// Accumulates `∂L/∂W` into `out` given angle gradients at input `v`.
    /// No-op for round-robin maps.
    pub fn accumulate_projection_grad(&self, v: &[f64], d_angles: &[f64], out: &mut [f64]) {
        if self.mode != AssignmentMode::Projection {
            return;
        }
        for (l, &da) in d_angles.iter().enumerate() {
            if da == 0.0 {
                continue;
            }
            let row = &mut out[l * self.input_dim..(l + 1) * self.input_dim];
            for (g, x) in row.iter_mut().zip(v) {
                *g += da * self.angle_scale * x;
            }
        }
    }

    pub fn circuit_from_angles(&self, angles: &[f64]) -> Result<Circuit> {
        encoding_circuit(self.n_qubits, angles)
    }
}

/// Builds `U` from explicit slot angles.
pub fn encoding_circuit(n_qubits: usize, angles: &[f64]) -> Result<Circuit> {
    if angles.len() != 2 * n_qubits {
        return Err(Error::Encoding(format!(
            "{} angles given for {} qubits",
            angles.len(),
            n_qubits
        )));
    }
    let mut gates = Vec::with_capacity(4 * n_qubits);
    for q in 0..n_qubits {
        gates.push(Gate::H { target: q });
    }
    for q in 0..n_qubits {
        gates.push(Gate::Rz {
            target: q,
            angle: angles[2 * q + 1],
        });
        gates.push(Gate::Ry {
            target: q,
            angle: angles[2 * q],
        });
    }
    for q in 0..n_qubits.saturating_sub(1) {
        gates.push(Gate::Cnot {
            control: q,
            target: q + 1,
        });
    }
    Circuit::with_gates(n_qubits, gates)
}

/// `U(v)` for the given feature map.
pub fn encode(v: &[f64], map: &FeatureMap) -> Result<Circuit> {
    let angles = map.angles(v)?;
    map.circuit_from_angles(&angles)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    use super::*;

    #[test]
    fn zero_vector_gives_zero_angles() {
        let map = FeatureMap::round_robin(4, 28).unwrap();
        let angles = map.angles(&[0.0; 28]).unwrap();
        assert!(angles.iter().all(|&a| a == 0.0));
        let circ = encode(&[0.0; 28], &map).unwrap();
        let h = circ.gates().iter().filter(|g| matches!(g, Gate::H { .. })).count();
        let cx = circ.gates().iter().filter(|g| matches!(g, Gate::Cnot { .. })).count();
        assert_eq!((h, cx), (4, 3));
        assert!(circ.gates().iter().filter_map(Gate::angle).all(|a| a == 0.0));
    }

    #[test]
    fn direct_substitution_single_qubit() {
        let map = FeatureMap::round_robin(1, 2).unwrap();
        let angles = map.angles(&[0.5, -0.25]).unwrap();
        assert!((angles[0] - FRAC_PI_2).abs() < 1e-15);
        assert!((angles[1] + FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn round_robin_slot_sizes() {
        let map = FeatureMap::round_robin(4, 28).unwrap();
        assert_eq!(map.slot_sizes(), vec![4, 4, 4, 4, 3, 3, 3, 3]);
    }

    #[test]
    fn empty_slot_has_zero_angle() {
        let map = FeatureMap::round_robin(2, 3).unwrap();
        let angles = map.angles(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(angles[3], 0.0);
        assert!((angles[0] - PI).abs() < 1e-15);
    }

    #[test]
    fn encoding_is_deterministic() {
        let map = FeatureMap::round_robin(4, 7).unwrap();
        let v = [0.1, -0.3, 0.7, 0.2, 0.9, -0.5, 0.05];
        assert_eq!(encode(&v, &map).unwrap(), encode(&v, &map).unwrap());
    }

    #[test]
    fn gate_layout() {
        let map = FeatureMap::round_robin(2, 4).unwrap();
        let c = encode(&[0.1, 0.2, 0.3, 0.4], &map).unwrap();
        let names: Vec<String> = c.gates().iter().map(|g| g.to_string()).collect();
        assert_eq!(names[0], "H q0");
        assert_eq!(names[1], "H q1");
        assert!(names[2].starts_with("RZ") && names[2].ends_with("q0"));
        assert!(names[3].starts_with("RY") && names[3].ends_with("q0"));
        assert!(names[4].starts_with("RZ") && names[4].ends_with("q1"));
        assert_eq!(names[6], "CNOT q0 -> q1");
        assert_eq!(c.len(), 7);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let map = FeatureMap::round_robin(1, 2).unwrap();
        assert!(matches!(map.angles(&[0.0, f64::NAN]), Err(Error::Encoding(_))));
        assert!(matches!(map.angles(&[0.0]), Err(Error::Kernel(_))));
    }

    #[test]
    fn projection_starts_equal_to_round_robin() {
        let rr = FeatureMap::round_robin(2, 7).unwrap();
        let pr = FeatureMap::new(2, 7, PI, AssignmentMode::Projection).unwrap();
        let v = [0.3, -0.1, 0.8, 0.4, 0.2, 0.6, -0.7];
        let a = rr.angles(&v).unwrap();
        let b = pr.angles(&v).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
        let d = [0.5, -1.0, 0.25, 2.0];
        let ga = rr.input_grad(&d);
        let gb = pr.input_grad(&d);
        for (x, y) in ga.iter().zip(&gb) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(pr.trainable_len(), 28);
        assert_eq!(rr.trainable_len(), 0);
    }
}
