//! Statevector simulation of layered variational circuits.
//!
//! Qubit 0 is the most significant bit of a basis index, so `|10⟩` is index 2
//! on a two-qubit register and tensor products read left to right.

mod circuit;
mod gradient;
mod state;

pub use circuit::{
    run_circuit, AngleSource, Circuit, CircuitParams, CircuitSpec, EncodingWeights, Entanglement,
    PlanStep,
};
pub use gradient::{grad_adjoint, grad_parameter_shift, CircuitGrad};
pub use state::{apply_gate, expectation_z, init_state, Axis, GateOp, Mat2, StateVector, MAX_QUBITS};
