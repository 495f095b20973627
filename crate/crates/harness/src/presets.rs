//! The seven shipped experiment configurations.

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

pub const PRESETS: [(&str, &str); 7] = [
    ("sac_classical", include_str!("../presets/sac_classical.cfg")),
    ("qsac_actor", include_str!("../presets/qsac_actor.cfg")),
    ("qsac_actor_critic_reduced", include_str!("../presets/qsac_actor_critic_reduced.cfg")),
    ("qsac_critic", include_str!("../presets/qsac_critic.cfg")),
    ("sac_3000", include_str!("../presets/sac_3000.cfg")),
    ("sac_270k", include_str!("../presets/sac_270k.cfg")),
    ("full_qsac", include_str!("../presets/full_qsac.cfg")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let text = preset_text(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        HarnessError::Context(format!("unknown preset `{name}`; known: {}", known.join(", ")))
    })?;
    ExperimentConfig::parse(text).map_err(|e| HarnessError::Context(format!("preset `{name}`: {e}")))
}
