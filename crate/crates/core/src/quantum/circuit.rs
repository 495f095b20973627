use rand::Rng;

use super::state::{mat_identity, mat_mul, Axis, GateOp, Mat2, StateVector, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// How encoding-layer scaling weights are allocated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodingWeights {
    /// A separate weight per qubit for every encoding occurrence.
    PerLayer,
    /// One weight per qubit reused by every re-upload.
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entanglement {
    /// CNOTs `i → (i+1) mod n` for every qubit, in index order.
    Ring,
}

/// Static layout of a layered circuit.
///
/// Gate order: encode, then `n_layers − 1` repetitions of
/// (RX·RY·RZ on every qubit, CNOT ring, re-encode), then a final rotation
/// layer (RY·RZ only when `last_layer_yz_only`) and CNOT ring, then Z readout
/// on every qubit. Encoding is `RX(w_q · x_q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitSpec {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub reupload: bool,
    pub last_layer_yz_only: bool,
    pub entanglement: Entanglement,
    pub encoding_weights: EncodingWeights,
}

/// Where a rotation angle comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSource {
    /// Flattened parameter index.
    Param(usize),
    /// `params[weight] * x[feature]`.
    Encoded { weight: usize, feature: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanStep {
    Rotate {
        qubit: usize,
        axis: Axis,
        angle: AngleSource,
    },
    Cnot {
        control: usize,
        target: usize,
    },
}

const FULL_AXES: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
const YZ_AXES: [Axis; 2] = [Axis::Y, Axis::Z];

impl CircuitSpec {
    /// Re-uploading ring circuit with a Y/Z-only last layer and per-layer encoding weights.
    pub fn new(n_qubits: usize, n_layers: usize) -> Result<Self> {
        let spec = Self {
            n_qubits,
            n_layers,
            reupload: true,
            last_layer_yz_only: true,
            entanglement: Entanglement::Ring,
            encoding_weights: EncodingWeights::PerLayer,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_encoding_weights(mut self, mode: EncodingWeights) -> Self {
        self.encoding_weights = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_qubits > MAX_QUBITS {
            return Err(Error::Configuration(format!(
                "circuit with {} qubits outside 1..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        if self.n_layers == 0 {
            return Err(Error::Configuration("circuit needs at least one layer".into()));
        }
        Ok(())
    }

    pub fn encoding_occurrences(&self) -> usize {
        if self.reupload {
            self.n_layers
        } else {
            1
        }
    }

    pub fn n_encoding_weights(&self) -> usize {
        match self.encoding_weights {
            EncodingWeights::PerLayer => self.encoding_occurrences() * self.n_qubits,
            EncodingWeights::Shared => self.n_qubits,
        }
    }

    fn layer_axes(&self, layer: usize) -> &'static [Axis] {
        if layer + 1 == self.n_layers && self.last_layer_yz_only {
            &YZ_AXES
        } else {
            &FULL_AXES
        }
    }

    pub fn n_rotation_params(&self) -> usize {
        (0..self.n_layers)
            .map(|l| self.layer_axes(l).len() * self.n_qubits)
            .sum()
    }

    pub fn n_params(&self) -> usize {
        self.n_encoding_weights() + self.n_rotation_params()
    }

    /// Ordered CNOT (control, target) pairs of one entangling layer.
    pub fn entangling_pairs(&self) -> Vec<(usize, usize)> {
        match self.entanglement {
            Entanglement::Ring if self.n_qubits < 2 => Vec::new(),
            Entanglement::Ring => (0..self.n_qubits)
                .map(|i| (i, (i + 1) % self.n_qubits))
                .collect(),
        }
    }

    /// Expanded gate plan; identical on every call for a fixed spec.
    pub fn plan(&self) -> Vec<PlanStep> {
        let n = self.n_qubits;
        let mut steps = Vec::new();
        let encode = |steps: &mut Vec<PlanStep>, occurrence: usize| {
            let base = match self.encoding_weights {
                EncodingWeights::PerLayer => occurrence * n,
                EncodingWeights::Shared => 0,
            };
            for q in 0..n {
                steps.push(PlanStep::Rotate {
                    qubit: q,
                    axis: Axis::X,
                    angle: AngleSource::Encoded {
                        weight: base + q,
                        feature: q,
                    },
                });
            }
        };
        let ring = self.entangling_pairs();
        let mut next_param = self.n_encoding_weights();
        encode(&mut steps, 0);
        for layer in 0..self.n_layers {
            for q in 0..n {
                for &axis in self.layer_axes(layer) {
                    steps.push(PlanStep::Rotate {
                        qubit: q,
                        axis,
                        angle: AngleSource::Param(next_param),
                    });
                    next_param += 1;
                }
            }
            for &(control, target) in &ring {
                steps.push(PlanStep::Cnot { control, target });
            }
            if self.reupload && layer + 1 < self.n_layers {
                encode(&mut steps, layer + 1);
            }
        }
        steps
    }
}

/// Learnable circuit angles.
///
/// Flattened order: encoding weights (occurrence-major, qubit-minor) followed
/// by rotation angles (layer, qubit, axis).
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams<T> {
    pub encode_weights: Vec<T>,
    pub rot_params: Vec<T>,
}

impl<T: Real> CircuitParams<T> {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self {
            encode_weights: vec![T::zero(); spec.n_encoding_weights()],
            rot_params: vec![T::zero(); spec.n_rotation_params()],
        }
    }

    /// Encoding weights start at 1 and rotation angles uniform in `[0, π)`.
    pub fn random<R: Rng + ?Sized>(spec: &CircuitSpec, rng: &mut R) -> Self {
        let pi = std::f64::consts::PI;
        Self {
            encode_weights: vec![T::one(); spec.n_encoding_weights()],
            rot_params: (0..spec.n_rotation_params())
                .map(|_| T::lit(rng.gen_range(0.0..pi)))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.encode_weights.len() + self.rot_params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flatten(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.encode_weights);
        v.extend_from_slice(&self.rot_params);
        v
    }

    pub fn unflatten(spec: &CircuitSpec, flat: &[T]) -> Result<Self> {
        if flat.len() != spec.n_params() {
            return Err(Error::dim("circuit parameters", spec.n_params(), flat.len()));
        }
        let (enc, rot) = flat.split_at(spec.n_encoding_weights());
        Ok(Self {
            encode_weights: enc.to_vec(),
            rot_params: rot.to_vec(),
        })
    }

    fn get(&self, flat_index: usize) -> T {
        let ne = self.encode_weights.len();
        if flat_index < ne {
            self.encode_weights[flat_index]
        } else {
            self.rot_params[flat_index - ne]
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Rotation {
    pub axis: Axis,
    pub source: AngleSource,
}

/// Rotations on one qubit with no entangling gate in between, in application order.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub qubit: usize,
    pub rotations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub(crate) enum Segment {
    Local(Vec<Block>),
    /// A run of CNOTs collapsed into one basis permutation.
    Entangle { perm: Vec<u32>, inverse: Vec<u32> },
}

/// A [`CircuitSpec`] compiled for repeated evaluation.
///
/// Single-qubit rotations between entangling layers are fused into one 2×2
/// unitary per qubit and each CNOT ring is applied as a single permutation.
#[derive(Debug, Clone)]
pub struct Circuit<T> {
    spec: CircuitSpec,
    pub(crate) rotations: Vec<Rotation>,
    pub(crate) segments: Vec<Segment>,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Real> Circuit<T> {
    pub fn new(spec: CircuitSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.n_qubits;
        let dim = 1usize << n;
        let mut rotations = Vec::new();
        let mut segments: Vec<Segment> = Vec::new();
        for step in spec.plan() {
            match step {
                PlanStep::Rotate { qubit, axis, angle } => {
                    let r = rotations.len();
                    rotations.push(Rotation {
                        axis,
                        source: angle,
                    });
                    if !matches!(segments.last(), Some(Segment::Local(_))) {
                        segments.push(Segment::Local(Vec::new()));
                    }
                    let Some(Segment::Local(blocks)) = segments.last_mut() else {
                        unreachable!()
                    };
                    match blocks.iter_mut().find(|b| b.qubit == qubit) {
                        Some(b) => b.rotations.push(r),
                        None => blocks.push(Block {
                            qubit,
                            rotations: vec![r],
                        }),
                    }
                }
                PlanStep::Cnot { control, target } => {
                    if !matches!(segments.last(), Some(Segment::Entangle { .. })) {
                        segments.push(Segment::Entangle {
                            perm: (0..dim as u32).collect(),
                            inverse: Vec::new(),
                        });
                    }
                    let Some(Segment::Entangle { perm, .. }) = segments.last_mut() else {
                        unreachable!()
                    };
                    let cm = 1u32 << (n - 1 - control);
                    let tm = 1u32 << (n - 1 - target);
                    for p in perm.iter_mut() {
                        if *p & cm != 0 {
                            *p ^= tm;
                        }
                    }
                }
            }
        }
        for seg in &mut segments {
            if let Segment::Entangle { perm, inverse } = seg {
                inverse.resize(perm.len(), 0);
                for (k, &p) in perm.iter().enumerate() {
                    inverse[p as usize] = k as u32;
                }
            }
        }
        Ok(Self {
            spec,
            rotations,
            segments,
            _scalar: std::marker::PhantomData,
        })
    }

    pub fn spec(&self) -> &CircuitSpec {
        &self.spec
    }

    pub fn n_qubits(&self) -> usize {
        self.spec.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.spec.n_params()
    }

    pub(crate) fn check_inputs(&self, params: &CircuitParams<T>, x: &[T]) -> Result<()> {
        if params.encode_weights.len() != self.spec.n_encoding_weights() {
            return Err(Error::dim(
                "encoding weights",
                self.spec.n_encoding_weights(),
                params.encode_weights.len(),
            ));
        }
        if params.rot_params.len() != self.spec.n_rotation_params() {
            return Err(Error::dim(
                "rotation parameters",
                self.spec.n_rotation_params(),
                params.rot_params.len(),
            ));
        }
        if x.len() != self.spec.n_qubits {
            return Err(Error::dim("circuit input", self.spec.n_qubits, x.len()));
        }
        Ok(())
    }

    /// Concrete angle of every rotation in plan order.
    pub(crate) fn angles(&self, params: &CircuitParams<T>, x: &[T]) -> Vec<T> {
        self.rotations
            .iter()
            .map(|r| match r.source {
                AngleSource::Param(i) => params.get(i),
                AngleSource::Encoded { weight, feature } => params.get(weight) * x[feature],
            })
            .collect()
    }

    /// Rotation matrix of every rotation in plan order.
    pub(crate) fn rotation_mats(&self, angles: &[T]) -> Vec<Mat2<T>> {
        self.rotations
            .iter()
            .zip(angles)
            .map(|(r, &a)| r.axis.rotation(a))
            .collect()
    }

    /// Fused unitary of every block, in execution order.
    pub(crate) fn block_unitaries(&self, mats: &[Mat2<T>]) -> Vec<Mat2<T>> {
        let mut out = Vec::new();
        for seg in &self.segments {
            if let Segment::Local(blocks) = seg {
                for b in blocks {
                    out.push(
                        b.rotations
                            .iter()
                            .fold(mat_identity(), |acc, &r| mat_mul(&mats[r], &acc)),
                    );
                }
            }
        }
        out
    }

    pub(crate) fn run_unitaries(&self, units: &[Mat2<T>]) -> StateVector<T> {
        let mut state = StateVector::new(self.spec.n_qubits).expect("validated spec");
        let mut scratch: Vec<T> = Vec::new();
        let mut next = units.iter();
        for seg in &self.segments {
            match seg {
                Segment::Local(blocks) => {
                    for b in blocks {
                        let u = next.next().expect("one unitary per block");
                        state.apply_single_unchecked(b.qubit, u);
                    }
                }
                Segment::Entangle { perm, .. } => state.permute(perm, &mut scratch),
            }
        }
        state
    }

    pub(crate) fn run_angles(&self, angles: &[T]) -> StateVector<T> {
        self.run_unitaries(&self.block_unitaries(&self.rotation_mats(angles)))
    }

    /// Final statevector before measurement.
    pub fn state(&self, params: &CircuitParams<T>, x: &[T]) -> Result<StateVector<T>> {
        self.check_inputs(params, x)?;
        Ok(self.run_angles(&self.angles(params, x)))
    }

    /// Per-qubit `⟨Z⟩`.
    pub fn run(&self, params: &CircuitParams<T>, x: &[T]) -> Result<Vec<T>> {
        Ok(self.state(params, x)?.expectations_z())
    }

    /// The expanded gate list for concrete parameters and input.
    pub fn gates(&self, params: &CircuitParams<T>, x: &[T]) -> Result<Vec<GateOp<T>>> {
        self.check_inputs(params, x)?;
        let angles = self.angles(params, x);
        let mut r = 0;
        Ok(self
            .spec
            .plan()
            .into_iter()
            .map(|step| match step {
                PlanStep::Rotate { qubit, axis, .. } => {
                    let g = GateOp::rotation(axis, qubit, angles[r]);
                    r += 1;
                    g
                }
                PlanStep::Cnot { control, target } => GateOp::Cnot { control, target },
            })
            .collect())
    }
}

/// Per-qubit `⟨Z⟩` of the circuit on input `x`.
pub fn run_circuit<T: Real>(spec: &CircuitSpec, params: &CircuitParams<T>, x: &[T]) -> Result<Vec<T>> {
    Circuit::new(spec.clone())?.run(params, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn parameter_counts() {
        let s = CircuitSpec::new(6, 4).unwrap();
        assert_eq!(s.n_encoding_weights(), 24);
        assert_eq!(s.n_rotation_params(), 3 * 18 + 12);
        let shared = s.clone().with_encoding_weights(EncodingWeights::Shared);
        assert_eq!(shared.n_params(), 6 + 66);
        let mut no_re = s.clone();
        no_re.reupload = false;
        assert_eq!(no_re.n_encoding_weights(), 6);
    }

    #[test]
    fn ring_pairs() {
        assert!(CircuitSpec::new(1, 2).unwrap().entangling_pairs().is_empty());
        assert_eq!(CircuitSpec::new(2, 1).unwrap().entangling_pairs(), vec![(0, 1), (1, 0)]);
        assert_eq!(
            CircuitSpec::new(3, 1).unwrap().entangling_pairs(),
            vec![(0, 1), (1, 2), (2, 0)]
        );
    }

    #[test]
    fn plan_is_deterministic_and_ordered() {
        let s = CircuitSpec::new(3, 3).unwrap();
        let p = s.plan();
        assert_eq!(p, s.plan());
        // first three steps are the encoding layer
        for (q, step) in p.iter().take(3).enumerate() {
            assert_eq!(
                *step,
                PlanStep::Rotate {
                    qubit: q,
                    axis: Axis::X,
                    angle: AngleSource::Encoded { weight: q, feature: q }
                }
            );
        }
        let n_rot = p.iter().filter(|s| matches!(s, PlanStep::Rotate { angle: AngleSource::Param(_), .. })).count();
        assert_eq!(n_rot, s.n_rotation_params());
        let n_cnot = p.iter().filter(|s| matches!(s, PlanStep::Cnot { .. })).count();
        assert_eq!(n_cnot, 3 * 3);
        // the plan ends with a CNOT ring
        assert!(matches!(p.last(), Some(PlanStep::Cnot { control: 2, target: 0 })));
    }

    #[test]
    fn flatten_unflatten_identity() {
        let spec = CircuitSpec::new(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CircuitParams::<f64>::random(&spec, &mut rng);
        let flat = p.flatten();
        assert_eq!(flat.len(), spec.n_params());
        assert_eq!(CircuitParams::unflatten(&spec, &flat).unwrap(), p);
        assert!(CircuitParams::<f64>::unflatten(&spec, &flat[1..]).is_err());
    }

    #[test]
    fn identity_circuit_reads_plus_one() {
        for n in 1..=5 {
            let spec = CircuitSpec::new(n, 3).unwrap();
            let out = run_circuit(&spec, &CircuitParams::<f64>::zeros(&spec), &vec![0.0; n]).unwrap();
            assert!(out.iter().all(|v| (v - 1.0).abs() < 1e-14), "{out:?}");
        }
    }

    #[test]
    fn single_effective_rx_reads_cosine() {
        // one layer, one qubit: RX(w x) then RY(0) RZ(0)
        let spec = CircuitSpec::new(1, 1).unwrap();
        let mut p = CircuitParams::<f64>::zeros(&spec);
        p.encode_weights[0] = 1.0;
        let out = run_circuit(&spec, &p, &[PI / 3.0]).unwrap();
        assert!((out[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn encoding_examples() {
        let spec = CircuitSpec::new(1, 1).unwrap();
        let mut p = CircuitParams::<f64>::zeros(&spec);
        p.encode_weights[0] = 1.0;
        assert!((run_circuit(&spec, &p, &[PI]).unwrap()[0] + 1.0).abs() < 1e-12);
        p.encode_weights[0] = 2.0;
        assert!((run_circuit(&spec, &p, &[PI / 6.0]).unwrap()[0] - 0.5).abs() < 1e-12);
        // zero input leaves |0> untouched whatever the weight
        p.encode_weights[0] = 7.3;
        assert!((run_circuit(&spec, &p, &[0.0]).unwrap()[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = CircuitSpec::new(2, 2).unwrap();
        let p = CircuitParams::<f64>::zeros(&spec);
        assert!(matches!(run_circuit(&spec, &p, &[0.0]), Err(Error::Dimension { .. })));
        let mut bad = p.clone();
        bad.rot_params.pop();
        assert!(matches!(run_circuit(&spec, &bad, &[0.0, 0.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn fused_execution_matches_gate_by_gate() {
        let spec = CircuitSpec::new(4, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = CircuitParams::<f64>::random(&spec, &mut rng);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = Circuit::new(spec).unwrap();
        let mut s = StateVector::new(4).unwrap();
        for g in c.gates(&p, &x).unwrap() {
            s.apply(&g).unwrap();
        }
        let fused = c.state(&p, &x).unwrap();
        for (a, b) in s.amplitudes().iter().zip(fused.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }
}
