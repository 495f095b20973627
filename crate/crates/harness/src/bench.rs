//! Deterministic-solver statistics, gain calibration files and the random-policy baseline.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqsac::benchmark::{calibrate_gains, default_gain_grid, run_episodes, Calibration, EpisodeOutcome, GainConstants};
use vqsac::env::{ArmEnv, EnvConfig};

use crate::config::{Document, Reader};
use crate::error::{HarnessError, Result};
use crate::stats::Summary;

pub const GAINS_FILE: &str = "gains.cfg";
pub const STATS_FILE: &str = "benchmark_stats.csv";
pub const EPISODES_FILE: &str = "benchmark_episodes.csv";

/// Episodes per gain pair and their seed during calibration.
pub const CALIBRATION_EPISODES: usize = 100;
pub const CALIBRATION_SEED: u64 = 1;

/// Calibrates on the default grid plus one refinement pass.
pub fn calibrate(env: EnvConfig<f64>) -> Result<Calibration<f64>> {
    Ok(calibrate_gains(env, &default_gain_grid(), CALIBRATION_EPISODES, CALIBRATION_SEED)?)
}

pub fn save_gains(path: &Path, cal: &Calibration<f64>) -> Result<()> {
    let mut doc = Document::default();
    let b = &cal.best;
    doc.push(
        "gains",
        vec![
            ("c1", b.gains.c1.to_string()),
            ("c2", b.gains.c2.to_string()),
            ("solve_rate", b.solve_rate.to_string()),
            ("mean_steps", b.mean_steps.to_string()),
            ("episodes", CALIBRATION_EPISODES.to_string()),
            ("seed", CALIBRATION_SEED.to_string()),
        ],
    );
    std::fs::write(path, doc.to_text()).map_err(|e| HarnessError::io(path, e))
}

pub fn load_gains(path: &Path) -> Result<GainConstants<f64>> {
    if !path.exists() {
        return Err(HarnessError::MissingCalibration(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let doc = Document::parse(&text).map_err(|e| HarnessError::data(path, e.to_string()))?;
    let section = doc.section("gains").ok_or_else(|| HarnessError::data(path, "missing `[gains]`"))?;
    let mut r = Reader::new(section);
    let wrap = |e: crate::error::ConfigError| HarnessError::data(path, e.to_string());
    let c1 = r.required("c1").map_err(wrap)?;
    let c2 = r.required("c2").map_err(wrap)?;
    Ok(GainConstants::new(c1, c2)?)
}

/// Step and return summaries over a batch of solver episodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkStats {
    pub steps: Summary,
    pub returns: Summary,
}

impl BenchmarkStats {
    pub fn of(outcomes: &[EpisodeOutcome<f64>]) -> Option<Self> {
        let steps: Vec<f64> = outcomes.iter().map(|o| o.steps as f64).collect();
        let returns: Vec<f64> = outcomes.iter().map(|o| o.episode_return).collect();
        Some(Self { steps: Summary::of(&steps)?, returns: Summary::of(&returns)? })
    }

    /// `statistic,steps,return`, one row per summary field.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("statistic,steps,return\n");
        for ((label, st), (_, r)) in self.steps.rows().iter().zip(self.returns.rows()) {
            s.push_str(&format!("{label},{st},{r}\n"));
        }
        s
    }

    pub fn parse_csv(text: &str) -> std::result::Result<Self, String> {
        let mut lines = text.lines();
        if lines.next() != Some("statistic,steps,return") {
            return Err("expected header `statistic,steps,return`".into());
        }
        let mut steps = Vec::new();
        let mut returns = Vec::new();
        for (i, line) in lines.enumerate() {
            let cols: Vec<&str> = line.split(',').collect();
            let [_, a, b] = cols[..] else {
                return Err(format!("row {}: expected three columns", i + 1));
            };
            let num = |v: &str| v.parse::<f64>().map_err(|_| format!("row {}: bad number `{v}`", i + 1));
            steps.push(num(a)?);
            returns.push(num(b)?);
        }
        let build = |v: &[f64]| -> std::result::Result<Summary, String> {
            let [count, mean, std, min, q25, q50, q75, max] = v[..] else {
                return Err("expected eight statistic rows".into());
            };
            Ok(Summary { count: count as usize, mean, std, min, q25, q50, q75, max })
        };
        Ok(Self { steps: build(&steps)?, returns: build(&returns)? })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse_csv(&text).map_err(|m| HarnessError::data(path, m))
    }
}

/// Runs the solver and insists on a perfect solve rate.
pub fn benchmark_stats(
    env: EnvConfig<f64>,
    gains: &GainConstants<f64>,
    episodes: usize,
    seed: u64,
) -> Result<(BenchmarkStats, Vec<EpisodeOutcome<f64>>)> {
    let outcomes = run_episodes(env, gains, episodes, seed)?;
    let unsolved = outcomes.iter().filter(|o| !o.solved).count();
    if unsolved > 0 {
        return Err(HarnessError::Context(format!(
            "solver left {unsolved} of {episodes} episodes unsolved with gains ({}, {})",
            gains.c1, gains.c2
        )));
    }
    let stats = BenchmarkStats::of(&outcomes).ok_or_else(|| HarnessError::Context("no benchmark episodes".into()))?;
    Ok((stats, outcomes))
}

pub fn write_outcomes_csv(path: &Path, outcomes: &[EpisodeOutcome<f64>]) -> Result<()> {
    let mut s = String::from("episode,target_x,target_y,steps,return,solved,residual\n");
    for (i, o) in outcomes.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            o.target[0], o.target[1], o.steps, o.episode_return, o.solved, o.residual
        ));
    }
    std::fs::write(path, s).map_err(|e| HarnessError::io(path, e))
}

/// Mean episode return of uniformly random torques.
pub fn random_baseline(env: EnvConfig<f64>, episodes: usize, seed: u64) -> Result<f64> {
    let mut arm = ArmEnv::new(env, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut total = 0.0;
    for _ in 0..episodes {
        arm.reset();
        loop {
            let a = [rng.gen_range(-1.0..=1.0) * env.max_torque, rng.gen_range(-1.0..=1.0) * env.max_torque];
            let r = arm.step(a)?;
            total += r.reward;
            if r.done {
                break;
            }
        }
    }
    Ok(total / episodes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_csv_round_trip() {
        let s = Summary::of(&[3.0, 1.0, 2.5]).unwrap();
        let b = BenchmarkStats { steps: s, returns: Summary::of(&[-1.0, -2.0, 5.0]).unwrap() };
        assert_eq!(BenchmarkStats::parse_csv(&b.to_csv()).unwrap(), b);
        assert!(BenchmarkStats::parse_csv("statistic,steps,return\ncount,1,1\n").is_err());
    }

    #[test]
    fn missing_gains_point_at_calibration() {
        let err = load_gains(Path::new("/nonexistent/gains.cfg")).unwrap_err();
        assert!(err.to_string().contains("calibrate"));
    }

    #[test]
    fn gains_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(GAINS_FILE);
        let cal = calibrate(EnvConfig::default()).unwrap();
        save_gains(&path, &cal).unwrap();
        assert_eq!(load_gains(&path).unwrap(), cal.best.gains);
    }
}
