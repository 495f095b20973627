use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vqsac::quantum::{Circuit, CircuitParams, CircuitSpec, EncodingWeights};

fn setup(n: usize, layers: usize, shared: bool, seed: u64) -> (Circuit<f64>, CircuitParams<f64>) {
    let enc = if shared { EncodingWeights::Shared } else { EncodingWeights::PerLayer };
    let spec = CircuitSpec::new(n, layers).unwrap().with_encoding_weights(enc);
    let params = CircuitParams::random(&spec, &mut ChaCha8Rng::seed_from_u64(seed));
    (Circuit::new(spec).unwrap(), params)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_is_unitary(n in 1usize..=8, layers in 1usize..=6, shared: bool, seed: u64,
                            x in prop::collection::vec(-3.0f64..3.0, 8)) {
        let (c, p) = setup(n, layers, shared, seed);
        let psi = c.state(&p, &x[..n]).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        for z in c.run(&p, &x[..n]).unwrap() {
            prop_assert!(z.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn gradient_routes_agree(n in 1usize..=5, layers in 1usize..=4, shared: bool, seed: u64,
                             x in prop::collection::vec(-2.0f64..2.0, 5),
                             w in prop::collection::vec(-1.0f64..1.0, 5)) {
        let (c, p) = setup(n, layers, shared, seed);
        let adj = c.adjoint(&p, &x[..n], &w[..n]).unwrap();
        let shift = c.parameter_shift(&p, &x[..n], &w[..n]).unwrap();
        prop_assert_eq!(adj.params.len(), c.n_params());
        for (a, s) in adj.params.iter().zip(&shift) {
            prop_assert!((a - s).abs() < 1e-10);
        }
    }

    #[test]
    fn single_precision_tracks_double(n in 1usize..=6, layers in 1usize..=5, seed: u64,
                                      x in prop::collection::vec(-2.0f64..2.0, 6)) {
        let (c, p) = setup(n, layers, false, seed);
        let spec = c.spec().clone();
        let p32 = CircuitParams::<f32>::unflatten(&spec, &p.flatten().iter().map(|&v| v as f32).collect::<Vec<_>>()).unwrap();
        let c32 = Circuit::<f32>::new(spec).unwrap();
        let x32: Vec<f32> = x[..n].iter().map(|&v| v as f32).collect();
        let z64 = c.run(&p, &x[..n]).unwrap();
        let z32 = c32.run(&p32, &x32).unwrap();
        for (a, b) in z64.iter().zip(&z32) {
            prop_assert!((a - f64::from(*b)).abs() < 1e-4);
        }
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let (c, p) = setup(4, 3, false, 5);
    let x = [0.3, -0.7, 1.1, 0.2];
    let w = [0.5, -1.0, 0.25, 0.8];
    let g = c.adjoint(&p, &x, &w).unwrap().input;
    let f = |x: &[f64]| -> f64 { c.run(&p, x).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum() };
    for i in 0..4 {
        let (mut up, mut down) = (x, x);
        up[i] += 1e-6;
        down[i] -= 1e-6;
        assert!((g[i] - (f(&up) - f(&down)) / 2e-6).abs() < 1e-8);
    }
}
