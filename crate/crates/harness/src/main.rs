use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use vqsac_harness::bench::{self, BenchmarkStats};
use vqsac_harness::config::ExperimentConfig;
use vqsac_harness::curves::export_curve_dirs;
use vqsac_harness::gradcheck::{check_circuits, check_hybrid};
use vqsac_harness::params::param_report;
use vqsac_harness::presets::{preset, PRESETS};
use vqsac_harness::run::{evaluate_checkpoint, return_summary, run_experiment, RunOptions};
use vqsac_harness::stats::Summary;

#[derive(Parser)]
#[command(name = "vqsac", version, about = "Hybrid quantum-classical soft actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every seed of a configuration.
    Train(TrainArgs),
    /// Run the calibrated deterministic solver and write its statistics.
    Benchmark {
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Gains file; defaults to `<out>/gains.cfg`.
        #[arg(long)]
        gains: Option<PathBuf>,
    },
    /// Grid-search the solver gains and write `<out>/gains.cfg`.
    Calibrate {
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare parameter-shift, adjoint and finite-difference gradients.
    Gradcheck {
        #[arg(long, default_value_t = 50)]
        cases: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Play a checkpointed actor deterministically.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Overlay the learning curves of finished runs.
    Curves {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// `benchmark_stats.csv` supplying the reference series.
        #[arg(long)]
        benchmark: PathBuf,
    },
    /// List the shipped presets with their parameter counts, or write them out.
    Presets {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct TrainArgs {
    /// Configuration file.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name instead of a file.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Record real per-episode durations in `wall_ms` (otherwise 0, keeping CSVs reproducible).
    #[arg(long)]
    wall_clock: bool,
    /// `benchmark_stats.csv` enabling per-seed convergence reports.
    #[arg(long)]
    benchmark: Option<PathBuf>,
}

fn print_summary(title: &str, steps: &Summary, returns: &Summary) {
    println!("{title:>8} {:>12} {:>12}", "steps", "return");
    for ((label, s), (_, r)) in steps.rows().iter().zip(returns.rows()) {
        println!("{label:>8} {s:>12.3} {r:>12.3}");
    }
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let cfg = match (&a.config, &a.preset) {
        (Some(path), _) => ExperimentConfig::load(path)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let benchmark = a.benchmark.as_deref().map(BenchmarkStats::load).transpose()?;
    let opts = RunOptions { seeds: a.seeds, episodes: a.episodes, wall_clock: a.wall_clock, benchmark };
    let manifest = run_experiment(&cfg, &a.out, &opts)?;
    for s in &manifest.seeds {
        match (&s.error, &s.convergence) {
            (Some(e), _) => println!("seed {}: failed after {} episodes: {e}", s.seed, s.episodes_completed),
            (None, Some(c)) => println!("seed {}: {} episodes, {c}", s.seed, s.episodes_completed),
            (None, None) => println!("seed {}: {} episodes", s.seed, s.episodes_completed),
        }
    }
    if manifest.failed() > 0 {
        bail!("{} of {} seeds failed; see {}", manifest.failed(), manifest.seeds.len(), a.out.display());
    }
    Ok(())
}

fn benchmark(episodes: usize, seed: u64, out: &Path, gains: Option<PathBuf>) -> anyhow::Result<()> {
    let gains_path = gains.unwrap_or_else(|| out.join(bench::GAINS_FILE));
    let gains = bench::load_gains(&gains_path)?;
    let env = vqsac::EnvConfig::default();
    let (stats, outcomes) = bench::benchmark_stats(env, &gains, episodes, seed)?;
    std::fs::create_dir_all(out).with_context(|| out.display().to_string())?;
    std::fs::write(out.join(bench::STATS_FILE), stats.to_csv())?;
    bench::write_outcomes_csv(&out.join(bench::EPISODES_FILE), &outcomes)?;
    let worst = outcomes.iter().map(|o| o.residual).fold(0.0, f64::max);
    print_summary("", &stats.steps, &stats.returns);
    println!("gains ({}, {}), solve rate 100%, worst kinematic residual {worst:.3e}", gains.c1, gains.c2);
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Train(a) => train(a),
        Command::Benchmark { episodes, seed, out, gains } => benchmark(episodes, seed, &out, gains),
        Command::Calibrate { out } => {
            let cal = bench::calibrate(vqsac::EnvConfig::default())?;
            std::fs::create_dir_all(&out).with_context(|| out.display().to_string())?;
            bench::save_gains(&out.join(bench::GAINS_FILE), &cal)?;
            let b = &cal.best;
            println!(
                "gains ({}, {}): solve rate {:.1}%, mean steps {:.2} over {} pairs",
                b.gains.c1,
                b.gains.c2,
                100.0 * b.solve_rate,
                b.mean_steps,
                cal.scores.len()
            );
            Ok(())
        }
        Command::Gradcheck { cases, seed } => {
            let c = check_circuits(cases, 6, 5, seed)?;
            let h = check_hybrid(20, seed)?;
            println!("circuits: {cases} cases");
            println!("  |shift - adjoint| max {:.3e}", c.shift_vs_adjoint);
            println!("  |adjoint - fd|    max {:.3e}", c.adjoint_vs_fd);
            println!("  |shift - fd|      max {:.3e}", c.shift_vs_fd);
            println!("hybrid critics: {} cases, max relative error {:.3e}", h.cases, h.max_rel_error);
            if c.shift_vs_adjoint > 1e-8 || c.adjoint_vs_fd > 1e-6 || c.shift_vs_fd > 1e-6 || h.max_rel_error > 1e-5 {
                bail!("gradient routes disagree");
            }
            Ok(())
        }
        Command::Eval { checkpoint, episodes, seed } => {
            let recs = evaluate_checkpoint(&checkpoint, episodes, seed)?;
            let steps = Summary::of(&recs.iter().map(|r| r.steps as f64).collect::<Vec<_>>());
            let (Some(steps), Some(returns)) = (steps, return_summary(&recs)) else {
                bail!("no episodes evaluated");
            };
            print_summary("", &steps, &returns);
            let solved = recs.iter().filter(|r| r.solved).count();
            println!("solved {solved}/{episodes}");
            Ok(())
        }
        Command::Curves { runs, out, benchmark } => {
            let stats = BenchmarkStats::load(&benchmark)?;
            let dirs: Vec<&Path> = runs.iter().map(PathBuf::as_path).collect();
            let x = export_curve_dirs(&dirs, &stats, &out)?;
            println!("wrote {} series over {} episodes to {}", x.series.len(), x.episodes, out.display());
            Ok(())
        }
        Command::Presets { out } => {
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
            }
            println!("{:<27} {:>6} {:>8} {:>8}  (quoted actor/critic/total)", "preset", "actor", "critic", "total");
            for (name, text) in PRESETS {
                let cfg = preset(name)?;
                let p = param_report(&cfg)?;
                let q = |v: Option<usize>| v.map_or("-".to_string(), |v| v.to_string());
                println!(
                    "{name:<27} {:>6} {:>8} {:>8}  ({}/{}/{})",
                    p.actor,
                    p.critic_reported,
                    p.total_reported,
                    q(cfg.actor.reference_params),
                    q(cfg.critic.reference_params),
                    q(cfg.reference_total_params)
                );
                if let Some(dir) = &out {
                    std::fs::write(dir.join(format!("{name}.cfg")), text)?;
                }
            }
            Ok(())
        }
    }
}
