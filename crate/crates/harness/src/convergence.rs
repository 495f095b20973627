//! The dual convergence test: a trailing window whose mean return sits in
//! `[μ − σ, μ]` of the benchmark and whose failures stay within budget.

use crate::records::EpisodeRecord;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCriteria {
    /// Benchmark mean return.
    pub mu: f64,
    /// Benchmark return standard deviation.
    pub sigma: f64,
    pub window: usize,
    /// Most unsolved episodes tolerated inside one window.
    pub max_failures: usize,
    /// Convergence must happen by this many episodes.
    pub max_episodes: usize,
}

impl ConvergenceCriteria {
    /// Window 1000, at most 1% failures, within 5000 episodes.
    pub fn standard(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma, window: 1000, max_failures: 10, max_episodes: 5000 }
    }

    pub fn return_band(&self) -> (f64, f64) {
        (self.mu - self.sigma, self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// False when there are fewer episodes than one window.
    pub evaluable: bool,
    pub solved: bool,
    /// Number of episodes completed when both criteria first held.
    pub episode_solved: Option<usize>,
    pub reasons: Vec<String>,
}

/// A pure function of the record order and the criteria. A failure is an
/// episode that ended without reaching the target.
pub fn convergence_check(records: &[EpisodeRecord], c: &ConvergenceCriteria) -> ConvergenceReport {
    let w = c.window;
    if w == 0 || records.len() < w {
        return ConvergenceReport {
            evaluable: false,
            solved: false,
            episode_solved: None,
            reasons: vec![format!("only {} episodes; a window needs {w}", records.len())],
        };
    }
    let (lo, hi) = c.return_band();
    let last_end = records.len().min(c.max_episodes);
    let mut sum: f64 = records[..w].iter().map(|r| r.episode_return).sum();
    let mut failures = records[..w].iter().filter(|r| !r.solved).count();
    let mut end = w;
    let mut last = (sum / w as f64, failures);
    while end <= last_end {
        let mean = sum / w as f64;
        last = (mean, failures);
        if (lo..=hi).contains(&mean) && failures <= c.max_failures {
            return ConvergenceReport { evaluable: true, solved: true, episode_solved: Some(end), reasons: Vec::new() };
        }
        if end == records.len() {
            break;
        }
        sum += records[end].episode_return - records[end - w].episode_return;
        failures += usize::from(!records[end].solved);
        failures -= usize::from(!records[end - w].solved);
        end += 1;
    }
    let mut reasons = Vec::new();
    if last_end < w {
        reasons.push(format!("no full window fits within {} episodes", c.max_episodes));
    } else {
        let (mean, fails) = last;
        if !(lo..=hi).contains(&mean) {
            reasons.push(format!("trailing mean return {mean:.3} outside [{lo:.3}, {hi:.3}]"));
        }
        if fails > c.max_failures {
            reasons.push(format!("{fails} failures in the trailing {w} episodes exceed {}", c.max_failures));
        }
        if reasons.is_empty() {
            reasons.push("criteria never held together in one window".into());
        }
    }
    ConvergenceReport { evaluable: true, solved: false, episode_solved: None, reasons }
}
