//! Closed-form controller that drives the arm to one of the two exact
//! inverse-kinematics solutions with proportional torques.
//!
//! Angles here live in [0, 2π); [`to_unit_turn`] converts from the
//! environment's [−π, π) convention.

use crate::env::{forward_kinematics, ArmEnv, ArmState, EnvConfig};
use crate::error::{Error, Result};
use crate::scalar::{sign, Real};

/// A joint-angle pair that places the end effector on the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdealConfig<T> {
    pub theta_star: T,
    pub phi_star: T,
    /// Angular distance from θ* to the reference angle it was ranked against.
    pub delta: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainConstants<T> {
    pub c1: T,
    pub c2: T,
}

impl<T: Real> GainConstants<T> {
    pub fn new(c1: T, c2: T) -> Result<Self> {
        let g = Self { c1, c2 };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c1 > T::zero() && self.c2 > T::zero()) || !self.c1.is_finite() || !self.c2.is_finite() {
            return Err(Error::Configuration(format!(
                "gains must be positive and finite, got ({}, {})",
                self.c1, self.c2
            )));
        }
        Ok(())
    }
}

/// Maps any angle into [0, 2π).
pub fn to_unit_turn<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let w = a - two_pi * (a / two_pi).floor();
    if w >= two_pi {
        w - two_pi
    } else {
        w
    }
}

/// Polar angle of `v` from the downward vertical toward +x, in [0, 2π).
pub fn polar_from_down<T: Real>(v: [T; 2]) -> T {
    to_unit_turn(v[0].atan2(-v[1]))
}

/// Angular distance on the circle, in [0, π].
pub fn angular_distance<T: Real>(a: T, b: T) -> T {
    T::PI() - ((a - b).abs() - T::PI()).abs()
}

/// Both inverse-kinematics solutions, ranked against θ₀ = 0.
pub fn ideal_configurations<T: Real>(
    target: [T; 2],
    center: [T; 2],
    link_length: T,
) -> Result<(IdealConfig<T>, IdealConfig<T>)> {
    let dc = [target[0] - center[0], target[1] - center[1]];
    let d = (dc[0] * dc[0] + dc[1] * dc[1]).sqrt();
    let reach = link_length + link_length;
    if d > reach * (T::one() + T::lit(1e-12)) {
        return Err(Error::UnreachableTarget {
            distance: d.as_f64(),
            reach: reach.as_f64(),
        });
    }
    if d <= link_length * T::lit(1e-12) {
        return Err(Error::DegenerateTarget);
    }
    let alpha = (d / reach).min(T::one()).acos();
    let beta = polar_from_down(dc);
    let two_pi = T::TAU();
    let config = |theta: T| {
        let theta = to_unit_turn(theta);
        let (m, _) = forward_kinematics(theta, T::zero(), link_length);
        let mid = [center[0] + m[0], center[1] + m[1]];
        IdealConfig {
            theta_star: theta,
            phi_star: polar_from_down([target[0] - mid[0], target[1] - mid[1]]),
            delta: angular_distance(theta, T::zero()),
        }
    };
    Ok((config(beta - alpha + two_pi), config(beta + alpha - two_pi)))
}

/// Picks the configuration whose θ* is closest to `theta_0`; the first wins ties.
pub fn select_target_config<T: Real>(configs: (IdealConfig<T>, IdealConfig<T>), theta_0: T) -> IdealConfig<T> {
    let theta_0 = to_unit_turn(theta_0);
    let rank = |c: IdealConfig<T>| IdealConfig {
        delta: angular_distance(c.theta_star, theta_0),
        ..c
    };
    let (a, b) = (rank(configs.0), rank(configs.1));
    if b.delta < a.delta {
        b
    } else {
        a
    }
}

/// Torques for the current state. Link 1 always takes the short way round.
/// Link 2 moves with link 1 when φ* lies in the half-turn ahead of θ*
/// (direct proportional control), otherwise takes the short way round.
pub fn policy_action<T: Real>(
    state: &ArmState<T>,
    target: &IdealConfig<T>,
    gains: &GainConstants<T>,
    max_torque: T,
) -> [T; 2] {
    let pi = T::PI();
    let (ts, ps) = (target.theta_star, target.phi_star);
    let d_theta = ts - to_unit_turn(state.theta);
    let d_phi = ps - to_unit_turn(state.phi);
    let a_m = gains.c1 * sign(d_theta.abs() - pi) * d_theta;
    let co_moving = if ts < pi {
        ts < ps && ps < ts + pi
    } else {
        ts - pi < ps && ps < ts
    };
    let a_e = if co_moving {
        -gains.c2 * d_phi
    } else {
        gains.c2 * sign(d_phi.abs() - pi) * d_phi
    };
    let clamp = |v: T| v.max(-max_torque).min(max_torque);
    [clamp(a_m), clamp(a_e)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOutcome<T> {
    pub target: [T; 2],
    pub steps: usize,
    pub episode_return: T,
    pub solved: bool,
    /// Forward-kinematics miss of the selected ideal configuration.
    pub residual: T,
}

/// Plays one freshly reset episode with the solver.
pub fn run_episode<T: Real>(env: &mut ArmEnv<T>, gains: &GainConstants<T>) -> Result<EpisodeOutcome<T>> {
    env.reset();
    let cfg = *env.config();
    let state = *env.state();
    let target = state.target;
    let chosen = select_target_config(
        ideal_configurations(target, [T::zero(), T::zero()], cfg.link_length)?,
        state.theta,
    );
    let (_, e) = forward_kinematics(chosen.theta_star, chosen.phi_star, cfg.link_length);
    let residual = crate::env::distance(e, target);
    let mut ret = T::zero();
    loop {
        let a = policy_action(env.state(), &chosen, gains, cfg.max_torque);
        let r = env.step(a)?;
        ret += r.reward;
        if r.done {
            return Ok(EpisodeOutcome {
                target,
                steps: r.steps_used,
                episode_return: ret,
                solved: r.reached,
                residual,
            });
        }
    }
}

/// Runs `episodes` consecutive episodes on one seeded environment.
pub fn run_episodes<T: Real>(
    config: EnvConfig<T>,
    gains: &GainConstants<T>,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeOutcome<T>>> {
    let mut env = ArmEnv::new(config, seed)?;
    (0..episodes).map(|_| run_episode(&mut env, gains)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainScore<T> {
    pub gains: GainConstants<T>,
    pub solve_rate: f64,
    pub mean_steps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration<T> {
    pub best: GainScore<T>,
    /// Every evaluated pair in evaluation order.
    pub scores: Vec<GainScore<T>>,
}

/// {10⁻², …, 10²}² in decade steps.
pub fn default_gain_grid<T: Real>() -> Vec<GainConstants<T>> {
    let decades = [1e-2, 1e-1, 1.0, 1e1, 1e2];
    let mut grid = Vec::with_capacity(decades.len() * decades.len());
    for &c1 in &decades {
        for &c2 in &decades {
            grid.push(GainConstants { c1: T::lit(c1), c2: T::lit(c2) });
        }
    }
    grid
}

/// Half-decade neighbours of `centre` (including itself).
pub fn refine_grid<T: Real>(centre: &GainConstants<T>) -> Vec<GainConstants<T>> {
    let f = [10f64.powf(-0.5), 10f64.powf(-0.25), 1.0, 10f64.powf(0.25), 10f64.powf(0.5)];
    let mut grid = Vec::with_capacity(f.len() * f.len());
    for &a in &f {
        for &b in &f {
            grid.push(GainConstants {
                c1: centre.c1 * T::lit(a),
                c2: centre.c2 * T::lit(b),
            });
        }
    }
    grid
}

fn score<T: Real>(config: EnvConfig<T>, gains: GainConstants<T>, episodes: usize, seed: u64) -> Result<GainScore<T>> {
    let out = run_episodes(config, &gains, episodes, seed)?;
    let solved = out.iter().filter(|o| o.solved).count();
    let steps: usize = out.iter().map(|o| o.steps).sum();
    Ok(GainScore {
        gains,
        solve_rate: solved as f64 / episodes as f64,
        mean_steps: steps as f64 / episodes as f64,
    })
}

fn better<T>(a: &GainScore<T>, b: &GainScore<T>) -> bool {
    a.solve_rate > b.solve_rate || (a.solve_rate == b.solve_rate && a.mean_steps < b.mean_steps)
}

/// Grid search maximizing solve rate, then minimizing mean steps. Every pair
/// sees the same seeded target sequence. Pairs with a zero gain are skipped.
pub fn search_gains<T: Real>(
    config: EnvConfig<T>,
    grid: &[GainConstants<T>],
    episodes: usize,
    seed: u64,
) -> Result<Calibration<T>> {
    if episodes == 0 {
        return Err(Error::Configuration("calibration needs at least one episode per pair".into()));
    }
    let mut scores = Vec::with_capacity(grid.len());
    let mut best: Option<GainScore<T>> = None;
    for g in grid.iter().filter(|g| g.validate().is_ok()) {
        let s = score(config, *g, episodes, seed)?;
        if best.as_ref().is_none_or(|b| better(&s, b)) {
            best = Some(s.clone());
        }
        scores.push(s);
    }
    let best = best.ok_or_else(|| Error::Calibration("grid has no pair with positive gains".into()))?;
    Ok(Calibration { best, scores })
}

/// Coarse grid, one refinement around the winner, and a final requirement
/// that the chosen pair solves every calibration episode.
pub fn calibrate_gains<T: Real>(
    config: EnvConfig<T>,
    grid: &[GainConstants<T>],
    episodes: usize,
    seed: u64,
) -> Result<Calibration<T>> {
    let coarse = search_gains(config, grid, episodes, seed)?;
    let fine = search_gains(config, &refine_grid(&coarse.best.gains), episodes, seed)?;
    let best = if better(&fine.best, &coarse.best) { fine.best } else { coarse.best };
    let mut scores = coarse.scores;
    scores.extend(fine.scores);
    if best.solve_rate < 1.0 {
        return Err(Error::Calibration(format!(
            "best pair ({}, {}) solves only {:.1}% of episodes; enlarge the grid",
            best.gains.c1,
            best.gains.c2,
            100.0 * best.solve_rate
        )));
    }
    Ok(Calibration { best, scores })
}
