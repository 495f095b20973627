//! Parameter counts of a configuration under the reporting convention used by the presets.

use vqsac::hybrid::{NetworkKind, Role};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Twin critics plus their two target copies.
pub const CRITIC_COPIES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamReport {
    /// Every learnable scalar of the actor, biases included.
    pub actor: usize,
    /// Every learnable scalar of one critic, biases included.
    pub critic_exact: usize,
    /// Dense critics count hidden weight matrices only; hybrid critics count everything.
    pub critic_reported: usize,
    /// `actor + 4 · critic_reported`.
    pub total_reported: usize,
}

pub fn param_report(cfg: &ExperimentConfig) -> Result<ParamReport> {
    let actor = cfg.actor.architecture(Role::Actor)?;
    let critic = cfg.critic.architecture(Role::Critic)?;
    let critic_reported = match critic.kind {
        NetworkKind::Classical => critic.hidden_weight_count(),
        NetworkKind::Hybrid => critic.n_params(),
    };
    Ok(ParamReport {
        actor: actor.n_params(),
        critic_exact: critic.n_params(),
        critic_reported,
        total_reported: actor.n_params() + CRITIC_COPIES * critic_reported,
    })
}
