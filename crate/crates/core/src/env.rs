//! Two-link planar arm hanging from a fixed center at the origin.
//!
//! Angles are absolute, measured from the downward vertical and increasing
//! toward +x. Each link is a uniform rod. A positive torque drives its link
//! toward smaller angles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{ensure_finite, Real};

pub const OBS_DIM: usize = 6;
pub const REACH_REWARD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvConfig<T> {
    pub link_mass: T,
    pub link_length: T,
    /// Affects nothing in the dynamics; kept so configurations are complete.
    pub link_width: T,
    pub max_steps: usize,
    pub fps: T,
    pub distance_threshold: T,
    pub max_joint_velocity: T,
    pub max_torque: T,
    pub gravity: T,
    /// Integrator substeps per control step.
    pub substeps: usize,
}

impl<T: Real> Default for EnvConfig<T> {
    fn default() -> Self {
        Self {
            link_mass: T::lit(0.01),
            link_length: T::lit(0.5),
            link_width: T::lit(0.1),
            max_steps: 250,
            fps: T::lit(50.0),
            distance_threshold: T::lit(0.25),
            max_joint_velocity: T::lit(2.5),
            max_torque: T::lit(1000.0),
            gravity: T::lit(9.81),
            substeps: 10,
        }
    }
}

impl<T: Real> EnvConfig<T> {
    pub fn dt(&self) -> T {
        T::one() / self.fps
    }

    /// Maximum distance from the center to the end effector.
    pub fn reach(&self) -> T {
        self.link_length + self.link_length
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("link_mass", self.link_mass),
            ("link_length", self.link_length),
            ("link_width", self.link_width),
            ("fps", self.fps),
            ("distance_threshold", self.distance_threshold),
            ("max_joint_velocity", self.max_joint_velocity),
            ("max_torque", self.max_torque),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(Error::Configuration(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.max_steps == 0 || self.substeps == 0 {
            return Err(Error::Configuration("max_steps and substeps must be at least 1".into()));
        }
        if self.distance_threshold >= self.reach() + self.reach() {
            return Err(Error::Configuration("distance threshold leaves no valid target".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmState<T> {
    pub theta: T,
    pub phi: T,
    pub omega_theta: T,
    pub omega_phi: T,
    pub target: [T; 2],
    pub step_index: usize,
}

impl<T: Real> ArmState<T> {
    /// Hanging at rest.
    pub fn rest(target: [T; 2]) -> Self {
        Self {
            theta: T::zero(),
            phi: T::zero(),
            omega_theta: T::zero(),
            omega_phi: T::zero(),
            target,
            step_index: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    pub observation: [T; OBS_DIM],
    pub reward: T,
    pub distance: T,
    pub done: bool,
    /// The threshold was crossed on this step (as opposed to truncation).
    pub reached: bool,
    pub steps_used: usize,
}

/// Middle and end effector positions.
pub fn forward_kinematics<T: Real>(theta: T, phi: T, link_length: T) -> ([T; 2], [T; 2]) {
    let m = [link_length * theta.sin(), -link_length * theta.cos()];
    let e = [m[0] + link_length * phi.sin(), m[1] - link_length * phi.cos()];
    (m, e)
}

/// Maps any angle into [−π, π).
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::TAU();
    let w = a - two_pi * ((a + T::PI()) / two_pi).floor();
    if w >= T::PI() {
        w - two_pi
    } else {
        w
    }
}

pub fn distance<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn observe<T: Real>(state: &ArmState<T>, link_length: T) -> [T; OBS_DIM] {
    let (_, e) = forward_kinematics(state.theta, state.phi, link_length);
    [state.target[0], state.target[1], e[0], e[1], state.theta, state.phi]
}

/// Kinetic plus potential energy, zero potential at the center height.
pub fn mechanical_energy<T: Real>(cfg: &EnvConfig<T>, s: &ArmState<T>) -> T {
    let (m, l, g) = (cfg.link_mass, cfg.link_length, cfg.gravity);
    let ml2 = m * l * l;
    let half = T::lit(0.5);
    let m11 = T::lit(4.0 / 3.0) * ml2;
    let m22 = ml2 / T::lit(3.0);
    let m12 = half * ml2 * (s.theta - s.phi).cos();
    let (w1, w2) = (s.omega_theta, s.omega_phi);
    let kinetic = half * (m11 * w1 * w1 + m22 * w2 * w2) + m12 * w1 * w2;
    let potential = -m * g * l * (T::lit(1.5) * s.theta.cos() + half * s.phi.cos());
    kinetic + potential
}

/// Angular accelerations for generalized forces `q` (already sign-converted).
fn accelerations<T: Real>(cfg: &EnvConfig<T>, s: &ArmState<T>, q: [T; 2]) -> [T; 2] {
    let (m, l, g) = (cfg.link_mass, cfg.link_length, cfg.gravity);
    let ml2 = m * l * l;
    let c = T::lit(0.5) * ml2;
    let delta = s.theta - s.phi;
    let (sd, cd) = (delta.sin(), delta.cos());
    let m11 = T::lit(4.0 / 3.0) * ml2;
    let m22 = ml2 / T::lit(3.0);
    let m12 = c * cd;
    let r1 = q[0] - T::lit(1.5) * m * g * l * s.theta.sin() - c * sd * s.omega_phi * s.omega_phi;
    let r2 = q[1] - T::lit(0.5) * m * g * l * s.phi.sin() + c * sd * s.omega_theta * s.omega_theta;
    // det ≥ (4/9 − 1/4)·(mL²)² > 0 for every configuration.
    let det = m11 * m22 - m12 * m12;
    [(m22 * r1 - m12 * r2) / det, (m11 * r2 - m12 * r1) / det]
}

/// Advances one control step with semi-implicit Euler substeps and
/// per-substep velocity clamping. Torques are clamped first.
pub fn integrate<T: Real>(cfg: &EnvConfig<T>, state: &ArmState<T>, torque: [T; 2]) -> ArmState<T> {
    let clamp = |v: T, lim: T| v.max(-lim).min(lim);
    let q = [-clamp(torque[0], cfg.max_torque), -clamp(torque[1], cfg.max_torque)];
    let h = cfg.dt() / T::from_usize(cfg.substeps).expect("substep count fits the scalar type");
    let vmax = cfg.max_joint_velocity;
    let mut s = *state;
    for _ in 0..cfg.substeps {
        let a = accelerations(cfg, &s, q);
        s.omega_theta = clamp(s.omega_theta + a[0] * h, vmax);
        s.omega_phi = clamp(s.omega_phi + a[1] * h, vmax);
        s.theta += s.omega_theta * h;
        s.phi += s.omega_phi * h;
    }
    s.theta = wrap_angle(s.theta);
    s.phi = wrap_angle(s.phi);
    s
}

/// Seeded environment instance.
#[derive(Debug, Clone)]
pub struct ArmEnv<T> {
    config: EnvConfig<T>,
    state: ArmState<T>,
    rng: ChaCha8Rng,
    done: bool,
}

impl<T: Real> ArmEnv<T> {
    pub fn new(config: EnvConfig<T>, seed: u64) -> Result<Self> {
        config.validate()?;
        let target = [T::zero(), T::zero()];
        Ok(Self {
            config,
            state: ArmState::rest(target),
            rng: ChaCha8Rng::seed_from_u64(seed),
            // Stepping before the first reset is a protocol error.
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.config
    }

    pub fn state(&self) -> &ArmState<T> {
        &self.state
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    /// Area-uniform over the reachable disk, excluding the threshold disk
    /// around the hanging end effector.
    pub fn sample_target(&mut self) -> [T; 2] {
        let reach = self.config.reach().as_f64();
        let home = [0.0, -reach];
        let thr = self.config.distance_threshold.as_f64();
        loop {
            let angle = self.rng.gen::<f64>() * std::f64::consts::TAU;
            let r = reach * self.rng.gen::<f64>().sqrt();
            let t = [r * angle.sin(), -r * angle.cos()];
            if distance(t, home) > thr {
                return [T::lit(t[0]), T::lit(t[1])];
            }
        }
    }

    pub fn reset(&mut self) -> [T; OBS_DIM] {
        let target = self.sample_target();
        self.reset_with_target(target)
            .expect("sampled targets are always reachable")
    }

    pub fn reset_with_target(&mut self, target: [T; 2]) -> Result<[T; OBS_DIM]> {
        ensure_finite(&target, "target")?;
        let d = distance(target, [T::zero(), T::zero()]);
        if d > self.config.reach() {
            return Err(Error::UnreachableTarget {
                distance: d.as_f64(),
                reach: self.config.reach().as_f64(),
            });
        }
        self.state = ArmState::rest(target);
        self.done = false;
        Ok(self.observe())
    }

    pub fn observe(&self) -> [T; OBS_DIM] {
        observe(&self.state, self.config.link_length)
    }

    pub fn step(&mut self, action: [T; 2]) -> Result<StepResult<T>> {
        if self.done {
            return Err(Error::Protocol("step called on a finished episode; call reset".into()));
        }
        ensure_finite(&action, "torque")?;
        let mut next = integrate(&self.config, &self.state, action);
        next.step_index = self.state.step_index + 1;
        self.state = next;
        let (_, e) = forward_kinematics(next.theta, next.phi, self.config.link_length);
        let d = distance(e, next.target);
        let reached = d <= self.config.distance_threshold;
        let reward = if reached { T::lit(REACH_REWARD) } else { -d };
        self.done = reached || next.step_index >= self.config.max_steps;
        Ok(StepResult {
            observation: self.observe(),
            reward,
            distance: d,
            done: self.done,
            reached,
            steps_used: next.step_index,
        })
    }
}
