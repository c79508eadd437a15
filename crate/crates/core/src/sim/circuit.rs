use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use super::state::{check_register, QuantumState};
use crate::error::{Error, Result};

/// One gate from the feature-map gate set.
///
/// Rotations use the half-angle convention:
/// `Ry(θ) = [[cos θ/2, −sin θ/2], [sin θ/2, cos θ/2]]`,
/// `Rz(φ) = diag(e^{−iφ/2}, e^{iφ/2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H { target: usize },
    Ry { target: usize, angle: f64 },
    Rz { target: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn target(&self) -> usize {
        match *self {
            Gate::H { target } | Gate::Ry { target, .. } | Gate::Rz { target, .. } | Gate::Cnot { target, .. } => {
                target
            }
        }
    }

    pub fn control(&self) -> Option<usize> {
        match *self {
            Gate::Cnot { control, .. } => Some(control),
            _ => None,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Ry { angle, .. } | Gate::Rz { angle, .. } => Some(angle),
            _ => None,
        }
    }

    /// H and CNOT are involutions; rotations invert by negating the angle.
    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Ry { target, angle } => Gate::Ry { target, angle: -angle },
            Gate::Rz { target, angle } => Gate::Rz { target, angle: -angle },
            g => g,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let target = self.target();
        if target >= n_qubits {
            return Err(Error::InvalidGate(format!(
                "{self}: target {target} out of range for {n_qubits} qubits"
            )));
        }
        if let Some(control) = self.control() {
            if control >= n_qubits {
                return Err(Error::InvalidGate(format!(
                    "{self}: control {control} out of range for {n_qubits} qubits"
                )));
            }
            if control == target {
                return Err(Error::InvalidGate(format!("{self}: control and target coincide")));
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(Error::InvalidGate(format!("{self}: non-finite angle")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H { target } => write!(f, "H q{target}"),
            Gate::Ry { target, angle } => write!(f, "RY({angle:.6}) q{target}"),
            Gate::Rz { target, angle } => write!(f, "RZ({angle:.6}) q{target}"),
            Gate::Cnot { control, target } => write!(f, "CNOT q{control} -> q{target}"),
        }
    }
}

/// Ordered gate list over a fixed register.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self> {
        check_register(n_qubits)?;
        Ok(Circuit {
            n_qubits,
            gates: Vec::new(),
        })
    }

    pub fn with_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        check_register(n_qubits)?;
        for g in &gates {
            g.validate(n_qubits)?;
        }
        Ok(Circuit { n_qubits, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    /// Appends all gates of `other` after the gates of `self`.
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits != self.n_qubits {
            return Err(Error::InvalidCircuit(format!(
                "cannot append a {}-qubit circuit to a {}-qubit circuit",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend_from_slice(&other.gates);
        Ok(())
    }

    /// Structural inverse: gates reversed, each gate inverted.
    pub fn inverse(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }
}

fn bit_mask(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

/// Applies `gate` in place. Indices must already be validated.
pub(crate) fn apply_in_place(state: &mut QuantumState, gate: &Gate) {
    let n = state.n_qubits();
    let amps = state.amplitudes_mut();
    match *gate {
        Gate::H { target } => {
            let mask = bit_mask(n, target);
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let j = i | mask;
                    let (a0, a1) = (amps[i], amps[j]);
                    amps[i] = (a0 + a1) * FRAC_1_SQRT_2;
                    amps[j] = (a0 - a1) * FRAC_1_SQRT_2;
                }
            }
        }
        Gate::Ry { target, angle } => {
            let mask = bit_mask(n, target);
            let (s, c) = (angle / 2.0).sin_cos();
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let j = i | mask;
                    let (a0, a1) = (amps[i], amps[j]);
                    amps[i] = a0 * c - a1 * s;
                    amps[j] = a0 * s + a1 * c;
                }
            }
        }
        Gate::Rz { target, angle } => {
            let mask = bit_mask(n, target);
            let lo = Complex64::from_polar(1.0, -angle / 2.0);
            let hi = Complex64::from_polar(1.0, angle / 2.0);
            for (i, a) in amps.iter_mut().enumerate() {
                *a *= if i & mask == 0 { lo } else { hi };
            }
        }
        Gate::Cnot { control, target } => {
            let cmask = bit_mask(n, control);
            let tmask = bit_mask(n, target);
            for i in 0..amps.len() {
                if i & cmask != 0 && i & tmask == 0 {
                    amps.swap(i, i | tmask);
                }
            }
        }
    }
}

/// Returns the state after `gate`; the input is left untouched.
pub fn apply_gate(state: &QuantumState, gate: &Gate) -> Result<QuantumState> {
    gate.validate(state.n_qubits())?;
    let mut out = state.clone();
    apply_in_place(&mut out, gate);
    Ok(out)
}

/// Applies every gate of `circuit` to `initial` in order.
pub fn run_circuit(circuit: &Circuit, initial: &QuantumState) -> Result<QuantumState> {
    let mut out = initial.clone();
    run_in_place(circuit, &mut out)?;
    Ok(out)
}

pub(crate) fn run_in_place(circuit: &Circuit, state: &mut QuantumState) -> Result<()> {
    if circuit.n_qubits() != state.n_qubits() {
        return Err(Error::InvalidCircuit(format!(
            "{}-qubit circuit applied to a {}-qubit state",
            circuit.n_qubits(),
            state.n_qubits()
        )));
    }
    for g in circuit.gates() {
        apply_in_place(state, g);
    }
    Ok(())
}
