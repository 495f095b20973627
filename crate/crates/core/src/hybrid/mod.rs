//! Actor and critic networks: classical MLPs or dense → circuit → dense hybrids.

mod arch;
mod network;
mod policy;

pub use arch::{ArchitectureConfig, DenseSpec, NetworkKind, Role, ACTION_DIM, OBS_DIM};
pub use network::{
    actor_forward, critic_forward, parameter_count, ActorCache, ActorNetwork, CriticCache,
    CriticNetwork, ParamGroup, Parametric, QuantumLayer, Trunk, TrunkCache,
};
pub use policy::{sample_action, squashed_sample, SquashedSample, LOG_STD_MAX, LOG_STD_MIN, SQUASH_EPS};
