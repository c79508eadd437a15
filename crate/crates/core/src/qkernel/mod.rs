//! Fidelity quantum kernel built on the statevector simulator.

mod feature_map;
mod kernel;

pub use feature_map::{encode, encoding_circuit, AssignmentMode, FeatureMap};
pub use kernel::{
    kernel, kernel_angle_grad, kernel_circuit, kernel_from_angles, kernel_grad, kernel_row, ReferenceSet,
};
pub(crate) use kernel::{row_angle_grads, row_from_angles};
