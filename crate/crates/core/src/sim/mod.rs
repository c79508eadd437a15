//! Dense statevector simulation for the small registers used by the
//! feature map.
//!
//! Only four gates are supported (H, Ry, Rz, CNOT). All public operations are
//! pure: they take a state by reference and return a fresh one.

mod circuit;
mod state;

pub(crate) use circuit::run_in_place;
pub use circuit::{apply_gate, run_circuit, Circuit, Gate};
pub use state::{prob_all_zero, zero_state, QuantumState, MAX_QUBITS};

/// Human-readable listing of a circuit followed by the amplitudes it
/// produces from |0…0⟩.
pub fn dump(circuit: &Circuit) -> crate::Result<String> {
    use std::fmt::Write;

    let n = circuit.n_qubits();
    let mut out = String::new();
    let _ = writeln!(out, "circuit: {} qubits, {} gates", n, circuit.len());
    for (i, g) in circuit.gates().iter().enumerate() {
        let _ = writeln!(out, "{i:4}  {g}");
    }
    let state = run_circuit(circuit, &zero_state(n)?)?;
    let _ = writeln!(out, "amplitudes:");
    for (i, a) in state.amplitudes().iter().enumerate() {
        let _ = writeln!(
            out,
            "  |{:0width$b}>  {:+.12} {:+.12}i  p={:.12}",
            i,
            a.re,
            a.im,
            a.norm_sqr(),
            width = n
        );
    }
    let _ = writeln!(out, "p(all zero) = {:.15}", prob_all_zero(&state));
    Ok(out)
}
