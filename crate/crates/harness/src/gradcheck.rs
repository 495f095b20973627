//! Cross-checks of the two circuit-gradient routes and of hybrid backpropagation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vqsac::hybrid::{ArchitectureConfig, CriticNetwork, Parametric, Role};
use vqsac::quantum::{Circuit, CircuitParams, CircuitSpec, EncodingWeights};

use crate::error::Result;

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CircuitCheck {
    pub cases: usize,
    /// Largest |parameter-shift − adjoint| over all cases and parameters.
    pub shift_vs_adjoint: f64,
    /// Largest |adjoint − central difference|.
    pub adjoint_vs_fd: f64,
    /// Largest |parameter-shift − central difference|.
    pub shift_vs_fd: f64,
}

/// Random circuits of 1 to `max_qubits` qubits and 1 to `max_layers` layers,
/// with a random readout weighting.
pub fn check_circuits(cases: usize, max_qubits: usize, max_layers: usize, seed: u64) -> Result<CircuitCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = CircuitCheck { cases, ..Default::default() };
    for case in 0..cases {
        let n = rng.gen_range(1..=max_qubits);
        let layers = rng.gen_range(1..=max_layers);
        let enc = if case % 2 == 0 { EncodingWeights::PerLayer } else { EncodingWeights::Shared };
        let spec = CircuitSpec::new(n, layers)?.with_encoding_weights(enc);
        let circuit = Circuit::<f64>::new(spec.clone())?;
        let params = CircuitParams::random(&spec, &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let upstream: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let adjoint = circuit.adjoint(&params, &x, &upstream)?.params;
        let shift = circuit.parameter_shift(&params, &x, &upstream)?;
        let flat = params.flatten();
        let loss = |p: &[f64]| -> Result<f64> {
            let cp = CircuitParams::unflatten(&spec, p)?;
            Ok(circuit.run(&cp, &x)?.iter().zip(&upstream).map(|(a, b)| a * b).sum())
        };
        for i in 0..flat.len() {
            let mut p = flat.clone();
            p[i] += FD_STEP;
            let up = loss(&p)?;
            p[i] -= 2.0 * FD_STEP;
            let down = loss(&p)?;
            let fd = (up - down) / (2.0 * FD_STEP);
            out.shift_vs_adjoint = out.shift_vs_adjoint.max((shift[i] - adjoint[i]).abs());
            out.adjoint_vs_fd = out.adjoint_vs_fd.max((adjoint[i] - fd).abs());
            out.shift_vs_fd = out.shift_vs_fd.max((shift[i] - fd).abs());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HybridCheck {
    pub cases: usize,
    /// Largest `|analytic − fd| / max(1, |fd|)` over parameters and inputs.
    pub max_rel_error: f64,
}

/// Dense → circuit → dense critics on random inputs; the loss is `Q` itself.
pub fn check_hybrid(cases: usize, seed: u64) -> Result<HybridCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layouts = ["(8,VQA(2 layers),3,1)", "(8,5,VQA(3 layers),4,2,1)", "(8,VQA(1 layers),2,1)"];
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let arch = ArchitectureConfig::parse(Role::Critic, layouts[case % layouts.len()], EncodingWeights::PerLayer)?;
        let mut net = CriticNetwork::<f64>::new(arch, 1.0, &mut rng)?;
        let obs: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let act: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (_, cache) = net.forward(&obs, &act)?;
        let mut grads = vec![0.0; net.n_params()];
        let (d_obs, d_act) = net.backward(&cache, 1.0, &mut grads)?;
        let rel = |g: f64, fd: f64| (g - fd).abs() / fd.abs().max(1.0);
        let flat = net.params();
        for i in 0..flat.len() {
            let mut p = flat.clone();
            p[i] += FD_STEP;
            net.set_params(&p)?;
            let up = net.forward(&obs, &act)?.0;
            p[i] -= 2.0 * FD_STEP;
            net.set_params(&p)?;
            let down = net.forward(&obs, &act)?.0;
            worst = worst.max(rel(grads[i], (up - down) / (2.0 * FD_STEP)));
        }
        net.set_params(&flat)?;
        let mut input: Vec<f64> = obs.iter().chain(&act).copied().collect();
        let analytic: Vec<f64> = d_obs.iter().chain(&d_act).copied().collect();
        for i in 0..input.len() {
            let orig = input[i];
            input[i] = orig + FD_STEP;
            let up = net.forward(&input[..6], &input[6..])?.0;
            input[i] = orig - FD_STEP;
            let down = net.forward(&input[..6], &input[6..])?.0;
            input[i] = orig;
            worst = worst.max(rel(analytic[i], (up - down) / (2.0 * FD_STEP)));
        }
    }
    Ok(HybridCheck { cases, max_rel_error: worst })
}
