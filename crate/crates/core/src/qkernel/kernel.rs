use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::feature_map::{encode, encoding_circuit, FeatureMap};
use crate::error::{Error, Result};
use crate::sim::{prob_all_zero, run_in_place, zero_state, Circuit, QuantumState};

/// Anchor vectors the kernel rows are computed against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub vectors: Vec<Vec<f64>>,
    pub trainable: bool,
}

impl ReferenceSet {
    pub fn new(vectors: Vec<Vec<f64>>, trainable: bool) -> Result<Self> {
        let refs = ReferenceSet { vectors, trainable };
        refs.validate()?;
        Ok(refs)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vec::len)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.vectors.is_empty() {
            return Err(Error::Config("reference set must contain at least one vector".into()));
        }
        let d = self.vectors[0].len();
        if let Some(j) = self.vectors.iter().position(|v| v.len() != d) {
            return Err(Error::Config(format!(
                "reference vector {j} has {} components, expected {d}",
                self.vectors[j].len()
            )));
        }
        Ok(())
    }
}

fn prepare(map: &FeatureMap, angles: &[f64]) -> Result<QuantumState> {
    let mut state = zero_state(map.n_qubits)?;
    run_in_place(&encoding_circuit(map.n_qubits, angles)?, &mut state)?;
    Ok(state)
}

/// `|⟨0| U†(b) ψ|²` where `ψ = U(a)|0⟩` has already been prepared.
fn overlap_with_prepared(map: &FeatureMap, prepared: &QuantumState, angles_b: &[f64]) -> Result<f64> {
    let mut state = prepared.clone();
    run_in_place(&encoding_circuit(map.n_qubits, angles_b)?.inverse(), &mut state)?;
    Ok(prob_all_zero(&state))
}

/// Kernel between two points already mapped to slot angles.
pub fn kernel_from_angles(map: &FeatureMap, angles_a: &[f64], angles_b: &[f64]) -> Result<f64> {
    let mut circ = encoding_circuit(map.n_qubits, angles_a)?;
    circ.append(&encoding_circuit(map.n_qubits, angles_b)?.inverse())?;
    let mut state = zero_state(map.n_qubits)?;
    run_in_place(&circ, &mut state)?;
    Ok(prob_all_zero(&state))
}

/// The circuit `U†(b) U(a)` whose all-zero probability is the kernel.
pub fn kernel_circuit(v_a: &[f64], v_b: &[f64], map: &FeatureMap) -> Result<Circuit> {
    let mut circ = encode(v_a, map)?;
    circ.append(&encode(v_b, map)?.inverse())?;
    Ok(circ)
}

/// Fidelity kernel `k(a, b) = |⟨0|U†(b) U(a)|0⟩|²`.
pub fn kernel(v_a: &[f64], v_b: &[f64], map: &FeatureMap) -> Result<f64> {
    let a = map.angles(v_a)?;
    let b = map.angles(v_b)?;
    kernel_from_angles(map, &a, &b)
}

/// `k(v, v_j)` for every reference vector, in reference order.
pub fn kernel_row(v: &[f64], refs: &ReferenceSet, map: &FeatureMap) -> Result<Vec<f64>> {
    refs.validate()?;
    let a = map.angles(v)?;
    let prepared = prepare(map, &a)?;
    refs.vectors
        .iter()
        .map(|r| overlap_with_prepared(map, &prepared, &map.angles(r)?))
        .collect()
}

/// Parameter-shift gradients of `k` with respect to each slot angle of both
/// arguments: `∂k/∂θ = (k(θ + π/2) − k(θ − π/2)) / 2`.
pub fn kernel_angle_grad(map: &FeatureMap, angles_a: &[f64], angles_b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let slots = map.n_slots();
    let mut ga = vec![0.0; slots];
    let mut gb = vec![0.0; slots];
    let mut shifted = angles_a.to_vec();
    for l in 0..slots {
        shifted[l] = angles_a[l] + FRAC_PI_2;
        let plus = kernel_from_angles(map, &shifted, angles_b)?;
        shifted[l] = angles_a[l] - FRAC_PI_2;
        let minus = kernel_from_angles(map, &shifted, angles_b)?;
        shifted[l] = angles_a[l];
        ga[l] = 0.5 * (plus - minus);
    }
    let mut shifted = angles_b.to_vec();
    for l in 0..slots {
        shifted[l] = angles_b[l] + FRAC_PI_2;
        let plus = kernel_from_angles(map, angles_a, &shifted)?;
        shifted[l] = angles_b[l] - FRAC_PI_2;
        let minus = kernel_from_angles(map, angles_a, &shifted)?;
        shifted[l] = angles_b[l];
        gb[l] = 0.5 * (plus - minus);
    }
    Ok((ga, gb))
}

/// Gradient of `k(v_a, v_b)` with respect to the input components of each
/// argument, via the parameter-shift rule and the linear angle map.
pub fn kernel_grad(v_a: &[f64], v_b: &[f64], map: &FeatureMap) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = map.angles(v_a)?;
    let b = map.angles(v_b)?;
    let (ga, gb) = kernel_angle_grad(map, &a, &b)?;
    Ok((map.input_grad(&ga), map.input_grad(&gb)))
}

/// Weighted accumulation of kernel-row gradients for one query vector.
///
/// Given `weights[j] = ∂L/∂k(v, v_j)`, returns `Σ_j weights[j] ∂k_j/∂angles(v)`
/// and, when `with_refs` is set, `weights[j] ∂k_j/∂angles(v_j)` per
/// reference. Rows with zero weight are skipped.
pub(crate) fn row_angle_grads(
    map: &FeatureMap,
    query_angles: &[f64],
    ref_angles: &[Vec<f64>],
    weights: &[f64],
    with_refs: bool,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let slots = map.n_slots();
    let mut d_query = vec![0.0; slots];
    let active: Vec<usize> = (0..ref_angles.len()).filter(|&j| weights[j] != 0.0).collect();
    if active.is_empty() {
        let d_refs = if with_refs {
            vec![vec![0.0; slots]; ref_angles.len()]
        } else {
            Vec::new()
        };
        return Ok((d_query, d_refs));
    }

    let mut shifted = query_angles.to_vec();
    for l in 0..slots {
        shifted[l] = query_angles[l] + FRAC_PI_2;
        let plus = prepare(map, &shifted)?;
        shifted[l] = query_angles[l] - FRAC_PI_2;
        let minus = prepare(map, &shifted)?;
        shifted[l] = query_angles[l];
        let mut acc = 0.0;
        for &j in &active {
            let kp = overlap_with_prepared(map, &plus, &ref_angles[j])?;
            let km = overlap_with_prepared(map, &minus, &ref_angles[j])?;
            acc += weights[j] * 0.5 * (kp - km);
        }
        d_query[l] = acc;
    }

    let mut d_refs = Vec::new();
    if with_refs {
        let prepared = prepare(map, query_angles)?;
        d_refs = vec![vec![0.0; slots]; ref_angles.len()];
        for &j in &active {
            let mut shifted = ref_angles[j].clone();
            for l in 0..slots {
                shifted[l] = ref_angles[j][l] + FRAC_PI_2;
                let kp = overlap_with_prepared(map, &prepared, &shifted)?;
                shifted[l] = ref_angles[j][l] - FRAC_PI_2;
                let km = overlap_with_prepared(map, &prepared, &shifted)?;
                shifted[l] = ref_angles[j][l];
                d_refs[j][l] = weights[j] * 0.5 * (kp - km);
            }
        }
    }
    Ok((d_query, d_refs))
}

/// Kernel row from pre-computed reference angles; used by the LSTM forward
/// pass so reference angles are computed once per sequence.
pub(crate) fn row_from_angles(map: &FeatureMap, query_angles: &[f64], ref_angles: &[Vec<f64>]) -> Result<Vec<f64>> {
    let prepared = prepare(map, query_angles)?;
    ref_angles
        .iter()
        .map(|b| overlap_with_prepared(map, &prepared, b))
        .collect()
}
