//! Multi-seed training runs, checkpoints, manifests and policy evaluation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use vqsac::hybrid::{actor_forward, ActorNetwork, Role};
use vqsac::quantum::EncodingWeights;
use vqsac::sac::train_run;
use vqsac::{Checkpoint, SacAgent};
use vqsac::env::{ArmEnv, EnvConfig};
use vqsac::sac::ReplayBuffer;

use crate::bench::BenchmarkStats;
use crate::config::{Document, ExperimentConfig, Reader};
use crate::convergence::{convergence_check, ConvergenceCriteria, ConvergenceReport};
use crate::error::{HarnessError, Result};
use crate::records::{read_episode_csv, write_episode_csv, EpisodeRecord};
use crate::stats::{aggregate_curves, CurvePoint, Summary};

pub const CURVE_WINDOW: usize = 20;
pub const MANIFEST_FILE: &str = "manifest.cfg";
pub const CONFIG_FILE: &str = "config.cfg";
pub const CURVE_FILE: &str = "curve.csv";

/// Command-line adjustments layered over a configuration.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seeds: Option<usize>,
    pub episodes: Option<usize>,
    /// Record real episode durations instead of zeros.
    pub wall_clock: bool,
    /// Enables the convergence report for each seed.
    pub benchmark: Option<BenchmarkStats>,
}

impl RunOptions {
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut c = cfg.clone();
        if let Some(n) = self.seeds {
            c.n_seeds = n;
        }
        if let Some(n) = self.episodes {
            c.sac.max_episodes = n;
        }
        c
    }
}

/// Independent agent and environment seeds derived from one run seed.
pub fn seed_streams(seed: u64) -> (u64, u64) {
    (seed, seed ^ 0x9e37_79b9_7f4a_7c15)
}

pub fn run_id(cfg: &ExperimentConfig, seed: u64) -> String {
    format!("{}-s{seed}", cfg.name)
}

pub fn build_agent(cfg: &ExperimentConfig, seed: u64) -> Result<SacAgent> {
    let actor = cfg.actor.architecture(Role::Actor)?;
    let critic = cfg.critic.architecture(Role::Critic)?;
    Ok(SacAgent::new(actor, critic, cfg.sac, cfg.env.max_torque, seed_streams(seed).0)?)
}

fn encoding_name(e: EncodingWeights) -> &'static str {
    match e {
        EncodingWeights::Shared => "shared",
        EncodingWeights::PerLayer => "per_layer",
    }
}

const ENV_KEYS: [&str; 10] = [
    "link_mass",
    "link_length",
    "link_width",
    "max_steps",
    "fps",
    "distance_threshold",
    "max_joint_velocity",
    "max_torque",
    "gravity",
    "substeps",
];

fn env_values(e: &EnvConfig<f64>) -> [String; 10] {
    [
        e.link_mass.to_string(),
        e.link_length.to_string(),
        e.link_width.to_string(),
        e.max_steps.to_string(),
        e.fps.to_string(),
        e.distance_threshold.to_string(),
        e.max_joint_velocity.to_string(),
        e.max_torque.to_string(),
        e.gravity.to_string(),
        e.substeps.to_string(),
    ]
}

/// Actor, twin critics and their targets, with enough metadata to rebuild the actor.
pub fn agent_checkpoint(cfg: &ExperimentConfig, agent: &SacAgent, seed: u64, episodes: usize) -> Result<Checkpoint> {
    let mut ck = Checkpoint::new();
    ck.set_meta("config", cfg.name.as_str())?;
    ck.set_meta("seed", seed.to_string())?;
    ck.set_meta("episodes", episodes.to_string())?;
    ck.set_meta("actor_neurons", cfg.actor.neurons.as_str())?;
    ck.set_meta("actor_encoding", encoding_name(cfg.actor.encoding))?;
    ck.set_meta("critic_neurons", cfg.critic.neurons.as_str())?;
    ck.set_meta("critic_encoding", encoding_name(cfg.critic.encoding))?;
    for (k, v) in ENV_KEYS.iter().zip(env_values(&cfg.env)) {
        ck.set_meta(&format!("env.{k}"), v)?;
    }
    ck.add_network("actor", agent.actor())?;
    for (i, c) in agent.critics().iter().enumerate() {
        ck.add_network(&format!("critic{i}"), c)?;
    }
    for (i, c) in agent.target_critics().iter().enumerate() {
        ck.add_network(&format!("target{i}"), c)?;
    }
    Ok(ck)
}

/// Outcome of one seed; errors are captured rather than propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub episodes_csv: String,
    pub checkpoint: Option<String>,
    pub error: Option<String>,
    pub convergence: Option<ConvergenceReport>,
}

fn episodes_file(seed: u64) -> String {
    format!("episodes_seed{seed}.csv")
}

fn checkpoint_file(seed: u64) -> String {
    format!("checkpoint_seed{seed}.txt")
}

/// Trains one seed, writing its episode CSV and checkpoints into `out_dir`.
pub fn train_seed(cfg: &ExperimentConfig, seed: u64, out_dir: &Path, opts: &RunOptions) -> SeedOutcome {
    let mut records = Vec::new();
    let ck_name = checkpoint_file(seed);
    let ck_path = out_dir.join(&ck_name);
    let mut wrote_checkpoint = false;
    let result = (|| -> Result<()> {
        let mut agent = build_agent(cfg, seed)?;
        let mut env = ArmEnv::new(cfg.env, seed_streams(seed).1)?;
        let mut buffer = ReplayBuffer::new(cfg.sac.memory_size)?;
        let id = run_id(cfg, seed);
        let mut clock = Instant::now();
        let episodes = cfg.sac.max_episodes;
        let mut on_episode = |s: &vqsac::sac::EpisodeSummary, agent: &SacAgent| -> vqsac::Result<()> {
            let wall_ms = if opts.wall_clock { clock.elapsed().as_millis() as u64 } else { 0 };
            clock = Instant::now();
            records.push(EpisodeRecord {
                run_id: id.clone(),
                seed,
                episode: s.episode,
                steps: s.steps,
                episode_return: s.episode_return,
                solved: s.solved,
                wall_ms,
            });
            let done = s.episode + 1;
            if (s.episode + 1).is_multiple_of(50) {
                log::info!("{id}: episode {done}/{episodes}, return {:.2}", s.episode_return);
            }
            if done == episodes || (cfg.checkpoint_every > 0 && done.is_multiple_of(cfg.checkpoint_every)) {
                let ck = agent_checkpoint(cfg, agent, seed, done).map_err(|e| vqsac::Error::Checkpoint(e.to_string()))?;
                ck.save(&ck_path)?;
                wrote_checkpoint = true;
            }
            Ok(())
        };
        train_run(&mut agent, &mut env, &mut buffer, episodes, &mut on_episode)?;
        Ok(())
    })();
    let csv_name = episodes_file(seed);
    let mut error = result.err().map(|e| e.to_string());
    if let Err(e) = write_episode_csv(&out_dir.join(&csv_name), &records) {
        error.get_or_insert(e.to_string());
    }
    if let Some(e) = &error {
        log::error!("{}: {e}", run_id(cfg, seed));
    }
    let convergence = opts
        .benchmark
        .map(|b| convergence_check(&records, &ConvergenceCriteria::standard(b.returns.mean, b.returns.std)));
    SeedOutcome {
        seed,
        records,
        episodes_csv: csv_name,
        checkpoint: wrote_checkpoint.then_some(ck_name),
        error,
        convergence,
    }
}

/// What a finished run wrote, as recorded in its manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub name: String,
    pub episodes: usize,
    pub window: usize,
    pub seeds: Vec<SeedEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedEntry {
    pub seed: u64,
    pub episodes_csv: String,
    pub checkpoint: Option<String>,
    pub episodes_completed: usize,
    pub error: Option<String>,
    pub convergence: Option<String>,
}

impl RunManifest {
    pub fn failed(&self) -> usize {
        self.seeds.iter().filter(|s| s.error.is_some()).count()
    }

    pub fn to_text(&self) -> String {
        let mut doc = Document::default();
        doc.push(
            "run",
            vec![
                ("name", self.name.clone()),
                ("config", CONFIG_FILE.into()),
                ("curve", CURVE_FILE.into()),
                ("episodes", self.episodes.to_string()),
                ("window", self.window.to_string()),
                ("failed_seeds", self.failed().to_string()),
            ],
        );
        for s in &self.seeds {
            let mut e = vec![
                ("status", if s.error.is_some() { "failed" } else { "ok" }.to_string()),
                ("episodes_csv", s.episodes_csv.clone()),
                ("episodes_completed", s.episodes_completed.to_string()),
            ];
            if let Some(c) = &s.checkpoint {
                e.push(("checkpoint", c.clone()));
            }
            if let Some(err) = &s.error {
                e.push(("error", one_line(err)));
            }
            if let Some(c) = &s.convergence {
                e.push(("convergence", c.clone()));
            }
            doc.push(&format!("seed.{}", s.seed), e);
        }
        doc.to_text()
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        let doc = Document::parse(text).map_err(|e| e.to_string())?;
        let run = doc.section("run").ok_or("missing `[run]`")?;
        let mut r = Reader::new(run);
        let s = |e: crate::error::ConfigError| e.to_string();
        let name: String = r.required("name").map_err(s)?;
        let episodes = r.required("episodes").map_err(s)?;
        let window = r.required("window").map_err(s)?;
        let _: String = r.required("config").map_err(s)?;
        let _: String = r.required("curve").map_err(s)?;
        let _: usize = r.required("failed_seeds").map_err(s)?;
        r.finish().map_err(s)?;
        let mut seeds = Vec::new();
        for sec in doc.sections.iter().filter(|x| x.name != "run") {
            let seed = sec
                .name
                .strip_prefix("seed.")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| format!("unexpected section `[{}]`", sec.name))?;
            let mut r = Reader::new(sec);
            let status: String = r.required("status").map_err(s)?;
            let entry = SeedEntry {
                seed,
                episodes_csv: r.required("episodes_csv").map_err(s)?,
                checkpoint: r.optional("checkpoint").map_err(s)?,
                episodes_completed: r.required("episodes_completed").map_err(s)?,
                error: r.optional("error").map_err(s)?,
                convergence: r.optional("convergence").map_err(s)?,
            };
            r.finish().map_err(s)?;
            if (status == "failed") != entry.error.is_some() {
                return Err(format!("seed {seed}: status `{status}` disagrees with its error field"));
            }
            seeds.push(entry);
        }
        Ok(Self { name, episodes, window, seeds })
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| HarnessError::io(&path, e))?;
        Self::parse(&text).map_err(|m| HarnessError::data(&path, m))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn describe(c: &ConvergenceReport) -> String {
    match (c.evaluable, c.episode_solved) {
        (false, _) => format!("not evaluable: {}", c.reasons.join("; ")),
        (true, Some(e)) => format!("solved after {e} episodes"),
        (true, None) => format!("not solved: {}", c.reasons.join("; ")),
    }
}

pub fn write_curve_csv(path: &Path, points: &[CurvePoint], n_seeds: usize) -> Result<()> {
    let mut s = String::from("episode,mean_return,std_return,n_seeds\n");
    for p in points {
        s.push_str(&format!("{},{},{},{n_seeds}\n", p.episode, p.mean_return, p.std_return));
    }
    std::fs::write(path, s).map_err(|e| HarnessError::io(path, e))
}

pub fn read_curve_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some("episode,mean_return,std_return,n_seeds") {
        return Err(HarnessError::data(path, "unexpected curve header"));
    }
    lines
        .enumerate()
        .map(|(i, l)| {
            let c: Vec<&str> = l.split(',').collect();
            let bad = || HarnessError::data(path, format!("row {}: malformed", i + 1));
            if c.len() != 4 {
                return Err(bad());
            }
            Ok(CurvePoint {
                episode: c[0].parse().map_err(|_| bad())?,
                mean_return: c[1].parse().map_err(|_| bad())?,
                std_return: c[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}

/// Trains every seed, then writes the aggregated curve and the manifest.
/// Seed failures are recorded in the manifest; check [`RunManifest::failed`].
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let cfg = opts.apply(cfg);
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    cfg.save(&out_dir.join(CONFIG_FILE))?;
    let seeds: Vec<u64> = (0..cfg.n_seeds as u64).map(|i| cfg.base_seed + i).collect();
    let outcomes: Vec<SeedOutcome> = seeds.par_iter().map(|&s| train_seed(&cfg, s, out_dir, opts)).collect();

    let finished: Vec<Vec<f64>> = outcomes
        .iter()
        .filter(|o| o.error.is_none())
        .map(|o| o.records.iter().map(|r| r.episode_return).collect())
        .collect();
    write_curve_csv(&out_dir.join(CURVE_FILE), &aggregate_curves(&finished, CURVE_WINDOW), finished.len())?;

    let manifest = RunManifest {
        name: cfg.name.clone(),
        episodes: cfg.sac.max_episodes,
        window: CURVE_WINDOW,
        seeds: outcomes
            .iter()
            .map(|o| SeedEntry {
                seed: o.seed,
                episodes_csv: o.episodes_csv.clone(),
                checkpoint: o.checkpoint.clone(),
                episodes_completed: o.records.len(),
                error: o.error.clone(),
                convergence: o.convergence.as_ref().map(describe),
            })
            .collect(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    std::fs::write(&path, manifest.to_text()).map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

/// Per-seed return series of a finished run, read back from its CSVs.
pub fn load_run_returns(dir: &Path) -> Result<(RunManifest, Vec<Vec<f64>>)> {
    let manifest = RunManifest::load(dir)?;
    let mut out = Vec::new();
    for s in manifest.seeds.iter().filter(|s| s.error.is_none()) {
        let recs = read_episode_csv(&dir.join(&s.episodes_csv))?;
        out.push(recs.iter().map(|r| r.episode_return).collect());
    }
    Ok((manifest, out))
}

pub fn checkpoint_path(dir: &Path, entry: &SeedEntry) -> Option<PathBuf> {
    entry.checkpoint.as_ref().map(|c| dir.join(c))
}

/// Rebuilds the actor and environment stored in a checkpoint.
pub fn actor_from_checkpoint(ck: &Checkpoint) -> Result<(ActorNetwork<f64>, EnvConfig<f64>)> {
    let encoding = match ck.require_meta("actor_encoding")? {
        "shared" => EncodingWeights::Shared,
        "per_layer" => EncodingWeights::PerLayer,
        other => return Err(HarnessError::Context(format!("checkpoint encoding `{other}` is unknown"))),
    };
    let arch = vqsac::hybrid::ArchitectureConfig::parse(Role::Actor, ck.require_meta("actor_neurons")?, encoding)?;
    let mut actor = ActorNetwork::zeros(arch)?;
    ck.load_network("actor", &mut actor)?;
    let mut doc = Document::default();
    let entries: Vec<(&str, String)> = ENV_KEYS
        .iter()
        .map(|k| Ok((*k, ck.require_meta(&format!("env.{k}"))?.to_string())))
        .collect::<Result<_>>()?;
    doc.push("env", entries);
    let mut r = Reader::new(&doc.sections[0]);
    let env = EnvConfig {
        link_mass: r.required("link_mass")?,
        link_length: r.required("link_length")?,
        link_width: r.required("link_width")?,
        max_steps: r.required("max_steps")?,
        fps: r.required("fps")?,
        distance_threshold: r.required("distance_threshold")?,
        max_joint_velocity: r.required("max_joint_velocity")?,
        max_torque: r.required("max_torque")?,
        gravity: r.required("gravity")?,
        substeps: r.required("substeps")?,
    };
    env.validate()?;
    Ok((actor, env))
}

/// Plays the checkpointed actor's mean action, squashed, for `episodes` episodes.
pub fn evaluate_checkpoint(path: &Path, episodes: usize, seed: u64) -> Result<Vec<EpisodeRecord>> {
    let ck = Checkpoint::load(path)?;
    let (actor, env_cfg) = actor_from_checkpoint(&ck)?;
    let mut env = ArmEnv::new(env_cfg, seed)?;
    let id = format!("eval-{}", ck.meta("config").unwrap_or("unknown"));
    let mut out = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut obs = env.reset();
        let mut ret = 0.0;
        loop {
            let (mean, _) = actor_forward(&actor, &obs)?;
            let a = [env_cfg.max_torque * mean[0].tanh(), env_cfg.max_torque * mean[1].tanh()];
            let r = env.step(a)?;
            ret += r.reward;
            obs = r.observation;
            if r.done {
                out.push(EpisodeRecord {
                    run_id: id.clone(),
                    seed,
                    episode,
                    steps: r.steps_used,
                    episode_return: ret,
                    solved: r.reached,
                    wall_ms: 0,
                });
                break;
            }
        }
    }
    Ok(out)
}

/// Summary of returns for a record slice.
pub fn return_summary(records: &[EpisodeRecord]) -> Option<Summary> {
    Summary::of(&records.iter().map(|r| r.episode_return).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        let text = "[experiment]\nname = tiny\nseeds = 2\nmax_episodes = 3\ncheckpoint_every = 2\n\
                    [actor]\nneurons = (6,4)(4,(1,1))\nactivations = (linear,relu,linear)\n\
                    [critic]\nneurons = (8,8,1)\nactivations = (linear,relu,relu,linear)\n\
                    [sac]\nwarmup_steps = 100\nbatch_size = 16\n[env]\nmax_steps = 60\n";
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn run_writes_manifest_csvs_and_checkpoints() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&tiny(), dir.path(), &RunOptions::default()).unwrap();
        assert_eq!(m.failed(), 0);
        assert_eq!(RunManifest::load(dir.path()).unwrap(), m);
        for s in &m.seeds {
            assert_eq!(read_episode_csv(&dir.path().join(&s.episodes_csv)).unwrap().len(), 3);
            let ck = Checkpoint::load(&checkpoint_path(dir.path(), s).unwrap()).unwrap();
            assert_eq!(ck.meta("episodes"), Some("3"));
        }
        let curve = read_curve_csv(&dir.path().join(CURVE_FILE)).unwrap();
        assert_eq!(curve.len(), 3);
        let reloaded = ExperimentConfig::load(&dir.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(reloaded, tiny());
    }

    #[test]
    fn curve_matches_recomputation_from_csvs() {
        let dir = tempfile::tempdir().unwrap();
        run_experiment(&tiny(), dir.path(), &RunOptions { episodes: Some(6), ..Default::default() }).unwrap();
        let (_, returns) = load_run_returns(dir.path()).unwrap();
        let curve = read_curve_csv(&dir.path().join(CURVE_FILE)).unwrap();
        for (e, p) in curve.iter().enumerate() {
            let ma: Vec<f64> = returns
                .iter()
                .map(|r| {
                    let lo = (e + 1).saturating_sub(CURVE_WINDOW);
                    r[lo..=e].iter().sum::<f64>() / (e + 1 - lo) as f64
                })
                .collect();
            let m = ma.iter().sum::<f64>() / ma.len() as f64;
            let sd = (ma.iter().map(|x| (x - m).powi(2)).sum::<f64>() / ma.len() as f64).sqrt();
            assert!((p.mean_return - m).abs() < 1e-12 && (p.std_return - sd).abs() < 1e-12);
        }
    }

    #[test]
    fn evaluation_replays_a_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let m = run_experiment(&tiny(), dir.path(), &RunOptions { seeds: Some(1), ..Default::default() }).unwrap();
        let path = checkpoint_path(dir.path(), &m.seeds[0]).unwrap();
        let a = evaluate_checkpoint(&path, 2, 5).unwrap();
        assert_eq!(a, evaluate_checkpoint(&path, 2, 5).unwrap());
        assert!(a.iter().all(|r| r.steps <= 60));
    }

    #[test]
    fn manifest_rejects_inconsistent_status() {
        let text = "[run]\nname = x\nconfig = config.cfg\ncurve = curve.csv\nepisodes = 1\nwindow = 20\nfailed_seeds = 0\n\
                    [seed.0]\nstatus = failed\nepisodes_csv = e.csv\nepisodes_completed = 1\n";
        assert!(RunManifest::parse(text).is_err());
    }
}
