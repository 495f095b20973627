//! Sectioned `key = value` text files and the experiment configuration built on them.
//!
//! ```text
//! # comment
//! [sac]
//! gamma = 0.99
//! ```
//!
//! Keys are unique within a section, sections are unique within a file, and
//! whitespace around keys and values is insignificant.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use vqsac::hybrid::{ArchitectureConfig, Role};
use vqsac::quantum::EncodingWeights;
use vqsac::env::EnvConfig;
use vqsac::sac::SacHyperparams;

use crate::error::{ConfigError, HarnessError};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

/// A parsed file, in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

fn is_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
}

impl Document {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut doc = Document::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            if let Some(inner) = s.strip_prefix('[') {
                let name = inner
                    .strip_suffix(']')
                    .map(str::trim)
                    .filter(|n| is_word(n))
                    .ok_or_else(|| ConfigError::Syntax { line, msg: format!("bad section header `{s}`") })?;
                if doc.section(name).is_some() {
                    return Err(ConfigError::Syntax { line, msg: format!("section `[{name}]` appears twice") });
                }
                doc.sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected `key = value`, found `{s}`") })?;
            if !is_word(key) {
                return Err(ConfigError::Syntax { line, msg: format!("bad key `{key}`") });
            }
            if value.is_empty() {
                return Err(ConfigError::Value { line, key: key.into(), msg: "empty value".into() });
            }
            let section = doc
                .sections
                .last_mut()
                .ok_or_else(|| ConfigError::Syntax { line, msg: format!("key `{key}` before any section") })?;
            if section.entries.iter().any(|e| e.key == key) {
                return Err(ConfigError::Value { line, key: key.into(), msg: "duplicate key".into() });
            }
            section.entries.push(Entry { key: key.into(), value: value.into(), line });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }

    /// Appends a section; values are written as given.
    pub fn push(&mut self, name: &str, entries: Vec<(&str, String)>) {
        self.sections.push(Section {
            name: name.into(),
            line: 0,
            entries: entries
                .into_iter()
                .map(|(k, v)| Entry { key: k.into(), value: v, line: 0 })
                .collect(),
        });
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.sections.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = writeln!(out, "[{}]", s.name);
            for e in &s.entries {
                let _ = writeln!(out, "{} = {}", e.key, e.value);
            }
        }
        out
    }
}

/// Typed reads from one section that track which keys were consumed.
pub struct Reader<'a> {
    section: &'a Section,
    used: Vec<bool>,
}

impl<'a> Reader<'a> {
    pub fn new(section: &'a Section) -> Self {
        Self { section, used: vec![false; section.entries.len()] }
    }

    fn entry(&mut self, key: &str) -> Option<&'a Entry> {
        let i = self.section.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some(&self.section.entries[i])
    }

    pub fn optional<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        let Some(e) = self.entry(key) else { return Ok(None) };
        e.value
            .parse::<T>()
            .map(Some)
            .map_err(|err| ConfigError::Value { line: e.line, key: key.into(), msg: format!("`{}`: {err}", e.value) })
    }

    pub fn required<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.optional(key)?.ok_or_else(|| ConfigError::Missing { section: self.section.name.clone(), key: key.into() })
    }

    pub fn or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    /// Value and its line, for checks done by the caller.
    pub fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        self.entry(key).map(|e| (e.value.as_str(), e.line))
    }

    /// Fails on the first key that no read asked for.
    pub fn finish(self) -> Result<(), ConfigError> {
        match self.used.iter().position(|u| !u) {
            Some(i) => {
                let e = &self.section.entries[i];
                Err(ConfigError::UnknownKey { line: e.line, section: self.section.name.clone(), key: e.key.clone() })
            }
            None => Ok(()),
        }
    }
}

pub const ACTOR_ACTIVATIONS: &str = "(linear,relu,linear)";
pub const CRITIC_ACTIVATIONS: &str = "(linear,relu,relu,linear)";

/// One network's layout as written in a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkSpec {
    pub neurons: String,
    pub activations: String,
    pub encoding: EncodingWeights,
    /// Parameter count quoted alongside the layout, if any.
    pub reference_params: Option<usize>,
}

impl NetworkSpec {
    pub fn architecture(&self, role: Role) -> Result<ArchitectureConfig, HarnessError> {
        Ok(ArchitectureConfig::parse(role, &self.neurons, self.encoding)?)
    }
}

fn encoding_name(e: EncodingWeights) -> &'static str {
    match e {
        EncodingWeights::Shared => "shared",
        EncodingWeights::PerLayer => "per_layer",
    }
}

fn parse_encoding(v: &str, line: usize) -> Result<EncodingWeights, ConfigError> {
    match v {
        "shared" => Ok(EncodingWeights::Shared),
        "per_layer" => Ok(EncodingWeights::PerLayer),
        _ => Err(ConfigError::Value { line, key: "encoding".into(), msg: format!("`{v}` is not `shared` or `per_layer`") }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub n_seeds: usize,
    pub base_seed: u64,
    /// Checkpoint every this many episodes; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub actor: NetworkSpec,
    pub critic: NetworkSpec,
    /// `max_episodes` here is the episode budget of each seed.
    pub sac: SacHyperparams<f64>,
    pub env: EnvConfig<f64>,
    /// Total parameter count quoted for the configuration, if any.
    pub reference_total_params: Option<usize>,
}

const SECTIONS: [&str; 6] = ["experiment", "actor", "critic", "sac", "env", "reference"];

fn read_network(doc: &Document, name: &str, activations: &str) -> Result<NetworkSpec, ConfigError> {
    let section = doc
        .section(name)
        .ok_or_else(|| ConfigError::Missing { section: name.into(), key: "neurons".into() })?;
    let mut r = Reader::new(section);
    let neurons: String = r.required("neurons")?;
    let act: String = r.required("activations")?;
    if act != activations {
        let line = section.entries.iter().find(|e| e.key == "activations").map_or(0, |e| e.line);
        return Err(ConfigError::Value {
            line,
            key: "activations".into(),
            msg: format!("only `{activations}` is supported, found `{act}`"),
        });
    }
    let encoding = match r.raw("encoding") {
        Some((v, line)) => parse_encoding(v, line)?,
        None => EncodingWeights::PerLayer,
    };
    let reference_params = r.optional("params")?;
    r.finish()?;
    Ok(NetworkSpec { neurons, activations: act, encoding, reference_params })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let doc = Document::parse(text)?;
        for s in &doc.sections {
            if !SECTIONS.contains(&s.name.as_str()) {
                return Err(ConfigError::UnknownSection { line: s.line, name: s.name.clone() }.into());
            }
        }
        let empty = Section { name: String::new(), line: 0, entries: Vec::new() };

        let exp = doc
            .section("experiment")
            .ok_or_else(|| ConfigError::Missing { section: "experiment".into(), key: "name".into() })?;
        let mut r = Reader::new(exp);
        let name: String = r.required("name")?;
        if !is_word(&name) {
            return Err(ConfigError::Value { line: exp.line, key: "name".into(), msg: format!("`{name}` must be a single word") }.into());
        }
        let defaults = SacHyperparams::<f64>::default();
        let n_seeds = r.or("seeds", 1)?;
        let base_seed = r.or("seed", 0)?;
        let max_episodes = r.or("max_episodes", defaults.max_episodes)?;
        let checkpoint_every = r.or("checkpoint_every", 0)?;
        r.finish()?;

        let actor = read_network(&doc, "actor", ACTOR_ACTIVATIONS)?;
        let critic = read_network(&doc, "critic", CRITIC_ACTIVATIONS)?;

        let mut r = Reader::new(doc.section("sac").unwrap_or(&empty));
        if let Some((v, line)) = r.raw("optimizer") {
            if !v.eq_ignore_ascii_case("adam") {
                return Err(ConfigError::Value { line, key: "optimizer".into(), msg: format!("only Adam is implemented, found `{v}`") }.into());
            }
        }
        let sac = SacHyperparams {
            gamma: r.or("gamma", defaults.gamma)?,
            entropy_alpha: r.or("alpha", defaults.entropy_alpha)?,
            lr: r.or("learning_rate", defaults.lr)?,
            rho: r.or("polyak", defaults.rho)?,
            batch_size: r.or("batch_size", defaults.batch_size)?,
            warmup_steps: r.or("warmup_steps", defaults.warmup_steps)?,
            max_episodes,
            memory_size: r.or("memory_size", defaults.memory_size)?,
            bootstrap_on_truncation: r.or("bootstrap_on_truncation", defaults.bootstrap_on_truncation)?,
        };
        r.finish()?;

        let d = EnvConfig::<f64>::default();
        let mut r = Reader::new(doc.section("env").unwrap_or(&empty));
        let env = EnvConfig {
            link_mass: r.or("link_mass", d.link_mass)?,
            link_length: r.or("link_length", d.link_length)?,
            link_width: r.or("link_width", d.link_width)?,
            max_steps: r.or("max_steps", d.max_steps)?,
            fps: r.or("fps", d.fps)?,
            distance_threshold: r.or("distance_threshold", d.distance_threshold)?,
            max_joint_velocity: r.or("max_joint_velocity", d.max_joint_velocity)?,
            max_torque: r.or("max_torque", d.max_torque)?,
            gravity: r.or("gravity", d.gravity)?,
            substeps: r.or("substeps", d.substeps)?,
        };
        r.finish()?;

        let mut r = Reader::new(doc.section("reference").unwrap_or(&empty));
        let reference_total_params = r.optional("total_params")?;
        r.finish()?;

        let cfg = Self {
            name,
            n_seeds,
            base_seed,
            checkpoint_every,
            actor,
            critic,
            sac,
            env,
            reference_total_params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text).map_err(|e| HarnessError::Context(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_text()).map_err(|e| HarnessError::io(path, e))
    }

    /// Checks everything a training run would otherwise reject later.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.n_seeds == 0 {
            return Err(HarnessError::Context("seeds must be at least 1".into()));
        }
        self.actor.architecture(Role::Actor)?;
        self.critic.architecture(Role::Critic)?;
        self.sac.validate()?;
        self.env.validate()?;
        Ok(())
    }

    pub fn to_document(&self) -> Document {
        let mut doc = Document::default();
        let exp = vec![
            ("name", self.name.clone()),
            ("seeds", self.n_seeds.to_string()),
            ("seed", self.base_seed.to_string()),
            ("max_episodes", self.sac.max_episodes.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
        ];
        doc.push("experiment", exp);
        for (name, net) in [("actor", &self.actor), ("critic", &self.critic)] {
            let mut e = vec![
                ("neurons", net.neurons.clone()),
                ("activations", net.activations.clone()),
                ("encoding", encoding_name(net.encoding).to_string()),
            ];
            if let Some(p) = net.reference_params {
                e.push(("params", p.to_string()));
            }
            doc.push(name, e);
        }
        let s = &self.sac;
        doc.push(
            "sac",
            vec![
                ("gamma", s.gamma.to_string()),
                ("alpha", s.entropy_alpha.to_string()),
                ("learning_rate", s.lr.to_string()),
                ("memory_size", s.memory_size.to_string()),
                ("optimizer", "Adam".into()),
                ("batch_size", s.batch_size.to_string()),
                ("polyak", s.rho.to_string()),
                ("warmup_steps", s.warmup_steps.to_string()),
                ("bootstrap_on_truncation", s.bootstrap_on_truncation.to_string()),
            ],
        );
        let v = &self.env;
        doc.push(
            "env",
            vec![
                ("link_mass", v.link_mass.to_string()),
                ("link_length", v.link_length.to_string()),
                ("link_width", v.link_width.to_string()),
                ("max_steps", v.max_steps.to_string()),
                ("fps", v.fps.to_string()),
                ("distance_threshold", v.distance_threshold.to_string()),
                ("max_joint_velocity", v.max_joint_velocity.to_string()),
                ("max_torque", v.max_torque.to_string()),
                ("gravity", v.gravity.to_string()),
                ("substeps", v.substeps.to_string()),
            ],
        );
        if let Some(t) = self.reference_total_params {
            doc.push("reference", vec![("total_params", t.to_string())]);
        }
        doc
    }

    pub fn to_text(&self) -> String {
        self.to_document().to_text()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[experiment]\nname = tiny\n[actor]\nneurons = (6,7)(8,(1,1))\nactivations = (linear,relu,linear)\n[critic]\nneurons = (8,16,1)\nactivations = (linear,relu,relu,linear)\n";

    #[test]
    fn defaults_fill_missing_sections() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.sac, SacHyperparams::default());
        assert_eq!(c.env, EnvConfig::default());
        assert_eq!(c.n_seeds, 1);
    }

    #[test]
    fn save_then_load_is_identity() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let text = c.to_text();
        let back = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn unknown_key_names_line_and_key() {
        let text = format!("{MINIMAL}[sac]\ngamma = 0.9\ngamam = 0.9\n");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("gamam") && err.contains("line 11"), "{err}");
    }

    #[test]
    fn malformed_lines_are_rejected() {
        let cases = [
            ("[experiment\nname = x\n", "line 1"),
            ("name = x\n", "line 1"),
            ("[experiment]\nname\n", "line 2"),
            ("[experiment]\nname = a\nname = b\n", "name"),
            ("[bogus]\n", "bogus"),
        ];
        for (text, needle) in cases {
            let err = ExperimentConfig::parse(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?} gave {err}");
        }
    }

    #[test]
    fn bad_values_name_their_key() {
        let text = MINIMAL.replace("name = tiny", "name = tiny\nseeds = many");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("seeds") && err.contains("many"), "{err}");
        let text = format!("{MINIMAL}[sac]\noptimizer = sgd\n");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("optimizer"));
        let text = MINIMAL.replace("(linear,relu,linear)", "(tanh,relu,linear)");
        assert!(ExperimentConfig::parse(&text).unwrap_err().to_string().contains("activations"));
    }

    #[test]
    fn invalid_architecture_is_a_config_error() {
        let text = MINIMAL.replace("(8,16,1)", "(8,16,2)");
        assert!(ExperimentConfig::parse(&text).is_err());
    }
}
