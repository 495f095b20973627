use crate::error::{Error, Result};
use crate::scalar::{ensure_finite, Real};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Added inside the log of the tanh Jacobian.
pub const SQUASH_EPS: f64 = 1e-6;

/// A reparameterized tanh-Gaussian draw and its partial derivatives with the
/// noise held fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample<T> {
    pub pre_tanh: Vec<T>,
    pub action: Vec<T>,
    pub log_prob: T,
    pub dlogp_dmean: Vec<T>,
    pub dlogp_dlog_std: Vec<T>,
    pub daction_dmean: Vec<T>,
    pub daction_dlog_std: Vec<T>,
}

/// `u = mean + exp(log_std)·noise`, `action = max_torque·tanh(u)`.
///
/// `log_prob` is the density of the unit-scale action `tanh(u)`: the
/// Gaussian log-density of `u` minus `Σ log(1 − tanh²u + SQUASH_EPS)`.
/// Leaving `max_torque` out keeps the entropy bonus independent of the
/// torque scale.
pub fn squashed_sample<T: Real>(mean: &[T], log_std: &[T], noise: &[T], max_torque: T) -> Result<SquashedSample<T>> {
    let n = mean.len();
    if log_std.len() != n {
        return Err(Error::dim("log_std", n, log_std.len()));
    }
    if noise.len() != n {
        return Err(Error::dim("noise", n, noise.len()));
    }
    let half_ln_2pi = T::lit(0.5 * (2.0 * std::f64::consts::PI).ln());
    let limit = T::one() - T::epsilon();
    let eps = T::lit(SQUASH_EPS);
    let two = T::lit(2.0);
    let mut s = SquashedSample {
        pre_tanh: Vec::with_capacity(n),
        action: Vec::with_capacity(n),
        log_prob: T::zero(),
        dlogp_dmean: Vec::with_capacity(n),
        dlogp_dlog_std: Vec::with_capacity(n),
        daction_dmean: Vec::with_capacity(n),
        daction_dlog_std: Vec::with_capacity(n),
    };
    for i in 0..n {
        let std = log_std[i].exp();
        let u = mean[i] + std * noise[i];
        let t = u.tanh().max(-limit).min(limit);
        let slope = T::one() - t * t;
        let jac = slope + eps;
        s.log_prob += -T::lit(0.5) * noise[i] * noise[i] - log_std[i] - half_ln_2pi - jac.ln();
        let dlogp_du = two * t * slope / jac;
        s.dlogp_dmean.push(dlogp_du);
        s.dlogp_dlog_std.push(-T::one() + dlogp_du * std * noise[i]);
        s.daction_dmean.push(max_torque * slope);
        s.daction_dlog_std.push(max_torque * slope * std * noise[i]);
        s.pre_tanh.push(u);
        s.action.push(max_torque * t);
    }
    ensure_finite(&s.action, "sampled action")?;
    ensure_finite(&[s.log_prob], "action log-probability")?;
    Ok(s)
}

/// Squashed action and its log-probability.
pub fn sample_action<T: Real>(mean: &[T], log_std: &[T], noise: &[T], max_torque: T) -> Result<(Vec<T>, T)> {
    let s = squashed_sample(mean, log_std, noise, max_torque)?;
    Ok((s.action, s.log_prob))
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: f64 = 1000.0;

    #[test]
    fn zero_noise_zero_mean() {
        let (a, _) = sample_action(&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], M).unwrap();
        assert_eq!(a, vec![0.0, 0.0]);
    }

    #[test]
    fn saturates_at_max_torque() {
        let (a, lp) = sample_action(&[1e6, 1e6], &[0.0, 0.0], &[0.5, -0.5], M).unwrap();
        for v in a {
            assert!(v < M && M - v < 1e-9);
        }
        assert!(lp.is_finite());
        let (a, _) = sample_action(&[-50.0, 50.0], &[2.0, 2.0], &[3.0, -3.0], M).unwrap();
        assert!(a.iter().all(|v| v.abs() < M));
    }

    #[test]
    fn near_deterministic_limit() {
        for m in [-1.3, 0.0, 0.4, 2.2] {
            let (a, _) = sample_action(&[m, -m], &[-20.0, -20.0], &[0.0, 0.0], M).unwrap();
            assert!((a[0] - M * m.tanh()).abs() < 1e-6);
            assert!((a[1] + M * m.tanh()).abs() < 1e-6);
        }
    }

    /// Probability mass of `u ~ N(mean, std)` over `[lo, hi]` by composite Simpson.
    fn gaussian_mass(mean: f64, std: f64, lo: f64, hi: f64) -> f64 {
        let n = 2000;
        let h = (hi - lo) / n as f64;
        let pdf = |u: f64| {
            let z = (u - mean) / std;
            (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
        };
        let mut s = pdf(lo) + pdf(hi);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(lo + k as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn log_prob_matches_change_of_variables_quadrature() {
        let mean = [0.3, -0.8];
        let log_std = [-0.5, 0.2];
        let noise = [0.7, -1.1];
        let (_, lp) = sample_action(&mean, &log_std, &noise, M).unwrap();
        // density of tanh(u) near the sample, per dimension: mass over a
        // small u-interval divided by the width of its image
        let mut oracle = 0.0;
        for i in 0..2 {
            let std = f64::exp(log_std[i]);
            let u = mean[i] + std * noise[i];
            let d = 1e-4;
            let mass = gaussian_mass(mean[i], std, u - d, u + d);
            let width = (u + d).tanh() - (u - d).tanh();
            // the regularized Jacobian shifts the exact density by ln(1 + ε/slope)
            let slope = 1.0 - u.tanh().powi(2);
            oracle += (mass / width).ln() - (1.0 + SQUASH_EPS / slope).ln();
        }
        assert!((lp - oracle).abs() < 1e-6, "{lp} vs {oracle}");
    }

    #[test]
    fn partials_match_finite_differences() {
        let mean = [0.3, -0.8];
        let log_std = [-0.5, 0.2];
        let noise = [0.7, -1.1];
        let s = squashed_sample(&mean, &log_std, &noise, M).unwrap();
        let h = 1e-6;
        for i in 0..2 {
            let mut mp = mean;
            mp[i] += h;
            let mut mm = mean;
            mm[i] -= h;
            let p = squashed_sample(&mp, &log_std, &noise, M).unwrap();
            let m = squashed_sample(&mm, &log_std, &noise, M).unwrap();
            assert!(((p.log_prob - m.log_prob) / (2.0 * h) - s.dlogp_dmean[i]).abs() < 1e-5);
            assert!(((p.action[i] - m.action[i]) / (2.0 * h) - s.daction_dmean[i]).abs() < 1e-3);
            let mut lp = log_std;
            lp[i] += h;
            let mut lm = log_std;
            lm[i] -= h;
            let p = squashed_sample(&mean, &lp, &noise, M).unwrap();
            let m = squashed_sample(&mean, &lm, &noise, M).unwrap();
            assert!(((p.log_prob - m.log_prob) / (2.0 * h) - s.dlogp_dlog_std[i]).abs() < 1e-5);
            assert!(((p.action[i] - m.action[i]) / (2.0 * h) - s.daction_dlog_std[i]).abs() < 1e-3);
        }
    }

    #[test]
    fn length_mismatch() {
        assert!(sample_action(&[0.0], &[0.0, 0.0], &[0.0], M).is_err());
    }
}
