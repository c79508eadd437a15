use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest register the simulator will allocate.
pub const MAX_QUBITS: usize = 20;

/// Dense pure state over `n_qubits` qubits.
///
/// Qubit 0 is the most significant bit of the basis index, so for two qubits
/// the amplitudes are ordered |00⟩, |01⟩, |10⟩, |11⟩ with the left label
/// belonging to qubit 0.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

pub(crate) fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Config(format!(
            "qubit count must be in 1..={MAX_QUBITS}, got {n_qubits}"
        )));
    }
    Ok(())
}

/// The all-zeros basis state |0…0⟩.
pub fn zero_state(n_qubits: usize) -> Result<QuantumState> {
    check_register(n_qubits)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(QuantumState { n_qubits, amplitudes })
}

/// Probability of observing every qubit in |0⟩.
pub fn prob_all_zero(state: &QuantumState) -> f64 {
    state.amplitudes[0].norm_sqr()
}

impl QuantumState {
    /// Builds a state from explicit amplitudes. The vector is taken as given;
    /// callers wanting a physical state should pass a normalized one.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::Shape(format!(
                "{} amplitudes given for {} qubits (expected {})",
                amplitudes.len(),
                n_qubits,
                1usize << n_qubits
            )));
        }
        Ok(QuantumState { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// ⟨self|other⟩
    pub fn inner(&self, other: &QuantumState) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::Shape(format!(
                "inner product of {}- and {}-qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}
