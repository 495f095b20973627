//! Hybrid quantum-classical soft actor-critic for a two-link robotic arm.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`) via
//! [`Real`]; concrete `f64` aliases are exported at the crate root because
//! that is what the training harness uses.

pub mod benchmark;
pub mod checkpoint;
pub mod env;
pub mod error;
pub mod hybrid;
pub mod nn;
pub mod quantum;
pub mod sac;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type StateVector = quantum::StateVector<f64>;
pub type StateVector32 = quantum::StateVector<f32>;
pub type CircuitParams = quantum::CircuitParams<f64>;
pub type Circuit = quantum::Circuit<f64>;
pub type DenseLayer = nn::DenseLayer<f64>;
pub type AdamState = nn::AdamState<f64>;
pub type ActorNetwork = hybrid::ActorNetwork<f64>;
pub type CriticNetwork = hybrid::CriticNetwork<f64>;
pub type ArmEnv = env::ArmEnv<f64>;
pub type ArmState = env::ArmState<f64>;
pub type EnvConfig = env::EnvConfig<f64>;
pub type ReplayBuffer = sac::ReplayBuffer<f64>;
pub type Transition = sac::Transition<f64>;
pub type SacAgent = sac::SacAgent<f64>;
pub type SacHyperparams = sac::SacHyperparams<f64>;
pub type Checkpoint = checkpoint::Checkpoint<f64>;
