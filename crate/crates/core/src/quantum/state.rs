use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 12;

pub type Mat2<T> = [[Complex<T>; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// `exp(-i θ/2 P)` for the Pauli matrix `P` of this axis.
    pub fn rotation<T: Real>(self, angle: T) -> Mat2<T> {
        let half = angle * T::lit(0.5);
        let (s, c) = half.sin_cos();
        let z = T::zero();
        match self {
            Axis::X => [
                [Complex::new(c, z), Complex::new(z, -s)],
                [Complex::new(z, -s), Complex::new(c, z)],
            ],
            Axis::Y => [
                [Complex::new(c, z), Complex::new(-s, z)],
                [Complex::new(s, z), Complex::new(c, z)],
            ],
            Axis::Z => [
                [Complex::new(c, -s), Complex::new(z, z)],
                [Complex::new(z, z), Complex::new(c, s)],
            ],
        }
    }

    /// `-i/2 · P · m`, the angle derivative of a rotation `m` about this axis
    /// when `m` already includes that rotation as its last factor.
    pub(crate) fn generator_times<T: Real>(self, m: &Mat2<T>) -> Mat2<T> {
        let h = T::lit(0.5);
        let mi = |c: Complex<T>| Complex::new(c.im * h, -c.re * h); // −i/2 · c
        match self {
            // P = [[0,1],[1,0]]
            Axis::X => [[mi(m[1][0]), mi(m[1][1])], [mi(m[0][0]), mi(m[0][1])]],
            // −i/2 · [[0,−i],[i,0]] = [[0, −1/2], [1/2, 0]]
            Axis::Y => [[-m[1][0] * h, -m[1][1] * h], [m[0][0] * h, m[0][1] * h]],
            Axis::Z => [[mi(m[0][0]), mi(m[0][1])], [-mi(m[1][0]), -mi(m[1][1])]],
        }
    }

    /// Derivative of [`Axis::rotation`] with respect to the angle.
    pub fn rotation_derivative<T: Real>(self, angle: T) -> Mat2<T> {
        // d/dθ exp(-iθP/2) = -i/2 · P · exp(-iθP/2)
        let r = self.rotation(angle);
        let p = self.pauli::<T>();
        let prod = mat_mul(&p, &r);
        let k = Complex::new(T::zero(), T::lit(-0.5));
        [[k * prod[0][0], k * prod[0][1]], [k * prod[1][0], k * prod[1][1]]]
    }

    pub(crate) fn pauli<T: Real>(self) -> Mat2<T> {
        let o = Complex::new(T::one(), T::zero());
        let z = Complex::new(T::zero(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        match self {
            Axis::X => [[z, o], [o, z]],
            Axis::Y => [[z, -i], [i, z]],
            Axis::Z => [[o, z], [z, -o]],
        }
    }
}

pub(crate) fn mat_mul<T: Real>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    let mut out = [[Complex::new(T::zero(), T::zero()); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub(crate) fn mat_identity<T: Real>() -> Mat2<T> {
    let o = Complex::new(T::one(), T::zero());
    let z = Complex::new(T::zero(), T::zero());
    [[o, z], [z, o]]
}

pub(crate) fn mat_adjoint<T: Real>(a: &Mat2<T>) -> Mat2<T> {
    [
        [a[0][0].conj(), a[1][0].conj()],
        [a[0][1].conj(), a[1][1].conj()],
    ]
}

/// A single gate of the supported set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateOp<T> {
    Rx { target: usize, angle: T },
    Ry { target: usize, angle: T },
    Rz { target: usize, angle: T },
    Cnot { control: usize, target: usize },
}

impl<T: Real> GateOp<T> {
    pub fn rotation(axis: Axis, target: usize, angle: T) -> Self {
        match axis {
            Axis::X => GateOp::Rx { target, angle },
            Axis::Y => GateOp::Ry { target, angle },
            Axis::Z => GateOp::Rz { target, angle },
        }
    }
}

/// Complex amplitudes of an `n`-qubit register.
///
/// Real and imaginary parts are stored in separate arrays so the gate
/// kernels vectorize.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    n_qubits: usize,
    re: Vec<T>,
    im: Vec<T>,
}

fn check_register(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::Configuration(format!(
            "register of {n_qubits} qubits outside 1..={MAX_QUBITS}"
        )));
    }
    Ok(())
}

/// Rows of a 2×2 complex matrix as `[re00, im00, re01, im01]`, `[re10, …]`.
#[inline]
pub(crate) fn split_rows<T: Real>(m: &Mat2<T>) -> [[T; 4]; 2] {
    [
        [m[0][0].re, m[0][0].im, m[0][1].re, m[0][1].im],
        [m[1][0].re, m[1][0].im, m[1][1].re, m[1][1].im],
    ]
}

/// Applies `m` to every amplitude pair differing in the bit `mask`.
pub(crate) fn apply_split<T: Real>(re: &mut [T], im: &mut [T], mask: usize, m: &[[T; 4]; 2]) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime.
        return unsafe { apply_split_avx2(re, im, mask, m) };
    }
    apply_split_portable(re, im, mask, m)
}

/// Same arithmetic as the portable kernel with wider vectors. No FMA is
/// enabled, so results are bitwise identical on either path.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn apply_split_avx2<T: Real>(re: &mut [T], im: &mut [T], mask: usize, m: &[[T; 4]; 2]) {
    apply_split_portable(re, im, mask, m)
}

#[inline(always)]
fn apply_split_portable<T: Real>(re: &mut [T], im: &mut [T], mask: usize, m: &[[T; 4]; 2]) {
    match mask {
        1 => apply_narrow::<T, 1, 16>(re, im, m),
        _ => apply_wide(re, im, mask, m),
    }
}

#[inline(always)]
fn rotate<T: Real>(m: &[[T; 4]; 2], x0r: T, x0i: T, x1r: T, x1i: T) -> [T; 4] {
    let [[ar, ai, br, bi], [cr, ci, dr, di]] = *m;
    [
        ar * x0r - ai * x0i + br * x1r - bi * x1i,
        ar * x0i + ai * x0r + br * x1i + bi * x1r,
        cr * x0r - ci * x0i + dr * x1r - di * x1i,
        cr * x0i + ci * x0r + dr * x1i + di * x1r,
    ]
}

#[inline(always)]
fn apply_wide<T: Real>(re: &mut [T], im: &mut [T], mask: usize, m: &[[T; 4]; 2]) {
    let width = mask << 1;
    for (rc, ic) in re.chunks_exact_mut(width).zip(im.chunks_exact_mut(width)) {
        let (r0, r1) = rc.split_at_mut(mask);
        let (i0, i1) = ic.split_at_mut(mask);
        // Equal lengths let the compiler drop bounds checks and vectorize.
        let (i0, r1, i1) = (&mut i0[..mask], &mut r1[..mask], &mut i1[..mask]);
        for k in 0..mask {
            [r0[k], i0[k], r1[k], i1[k]] = rotate(m, r0[k], i0[k], r1[k], i1[k]);
        }
    }
}

/// Small masks interleave the pair halves; gathering `W` amplitudes into
/// local arrays first gives the vectorizer contiguous lanes.
#[inline(always)]
fn apply_narrow<T: Real, const M: usize, const W: usize>(re: &mut [T], im: &mut [T], m: &[[T; 4]; 2]) {
    if re.len() < W {
        return apply_wide(re, im, M, m);
    }
    let half = W / 2;
    for (rc, ic) in re.chunks_exact_mut(W).zip(im.chunks_exact_mut(W)) {
        let mut g = [[T::zero(); 8]; 4];
        for p in 0..half {
            let k = (p / M) * 2 * M + p % M;
            g[0][p] = rc[k];
            g[1][p] = ic[k];
            g[2][p] = rc[k + M];
            g[3][p] = ic[k + M];
        }
        for p in 0..half {
            [g[0][p], g[1][p], g[2][p], g[3][p]] = rotate(m, g[0][p], g[1][p], g[2][p], g[3][p]);
        }
        for p in 0..half {
            let k = (p / M) * 2 * M + p % M;
            rc[k] = g[0][p];
            ic[k] = g[1][p];
            rc[k + M] = g[2][p];
            ic[k + M] = g[3][p];
        }
    }
}

impl<T: Real> StateVector<T> {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn new(n_qubits: usize) -> Result<Self> {
        Self::basis(n_qubits, 0)
    }

    /// Computational basis state with the given index (qubit 0 most significant).
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_register(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::Index {
                what: "basis state",
                index,
                size: dim,
            });
        }
        let mut re = vec![T::zero(); dim];
        re[index] = T::one();
        Ok(Self {
            n_qubits,
            re,
            im: vec![T::zero(); dim],
        })
    }

    /// Wraps raw amplitudes. The caller is responsible for normalization.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex<T>>) -> Result<Self> {
        check_register(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::dim("amplitudes", 1 << n_qubits, amps.len()));
        }
        Ok(Self {
            n_qubits,
            re: amps.iter().map(|a| a.re).collect(),
            im: amps.iter().map(|a| a.im).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.re.len()
    }

    pub fn amplitude(&self, index: usize) -> Option<Complex<T>> {
        Some(Complex::new(*self.re.get(index)?, self.im[index]))
    }

    /// Copy of all amplitudes.
    pub fn amplitudes(&self) -> Vec<Complex<T>> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| Complex::new(r, i)).collect()
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [T], &mut [T]) {
        (&mut self.re, &mut self.im)
    }

    pub fn norm_sqr(&self) -> T {
        self.re.iter().zip(&self.im).map(|(&r, &i)| r * r + i * i).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q < self.n_qubits {
            Ok(())
        } else {
            Err(Error::Index {
                what: "qubit",
                index: q,
                size: self.n_qubits,
            })
        }
    }

    #[inline]
    pub(crate) fn mask(&self, q: usize) -> usize {
        1 << (self.n_qubits - 1 - q)
    }

    pub fn apply(&mut self, gate: &GateOp<T>) -> Result<()> {
        match *gate {
            GateOp::Rx { target, angle } => self.apply_single(target, &Axis::X.rotation(angle)),
            GateOp::Ry { target, angle } => self.apply_single(target, &Axis::Y.rotation(angle)),
            GateOp::Rz { target, angle } => self.apply_single(target, &Axis::Z.rotation(angle)),
            GateOp::Cnot { control, target } => self.apply_cnot(control, target),
        }
    }

    /// Applies a 2×2 unitary to one qubit in place.
    pub fn apply_single(&mut self, q: usize, m: &Mat2<T>) -> Result<()> {
        self.check_qubit(q)?;
        self.apply_single_unchecked(q, m);
        Ok(())
    }

    pub(crate) fn apply_single_unchecked(&mut self, q: usize, m: &Mat2<T>) {
        let mask = self.mask(q);
        apply_split(&mut self.re, &mut self.im, mask, &split_rows(m));
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Configuration(format!(
                "CNOT control and target are both qubit {control}"
            )));
        }
        let cm = self.mask(control);
        let tm = self.mask(target);
        for i in 0..self.re.len() {
            if i & cm != 0 && i & tm == 0 {
                self.re.swap(i, i | tm);
                self.im.swap(i, i | tm);
            }
        }
        Ok(())
    }

    /// Moves amplitude `k` to position `perm[k]`.
    pub(crate) fn permute(&mut self, perm: &[u32], scratch: &mut Vec<T>) {
        for part in [&mut self.re, &mut self.im] {
            scratch.clear();
            scratch.resize(part.len(), T::zero());
            for (&v, &p) in part.iter().zip(perm) {
                scratch[p as usize] = v;
            }
            std::mem::swap(part, scratch);
        }
    }

    /// `⟨Z_q⟩ = p(bit q = 0) − p(bit q = 1)`.
    pub fn expectation_z(&self, q: usize) -> Result<T> {
        self.check_qubit(q)?;
        Ok(self.expectations_z()[q])
    }

    /// `⟨Z_q⟩` for every qubit in one pass.
    pub fn expectations_z(&self) -> Vec<T> {
        let n = self.n_qubits;
        let mut out = vec![T::zero(); n];
        for (i, (&r, &im)) in self.re.iter().zip(&self.im).enumerate() {
            let p = r * r + im * im;
            for (q, o) in out.iter_mut().enumerate() {
                if i & (1 << (n - 1 - q)) == 0 {
                    *o += p;
                } else {
                    *o -= p;
                }
            }
        }
        out
    }
}

/// `|0⟩^⊗n`.
pub fn init_state<T: Real>(n_qubits: usize) -> Result<StateVector<T>> {
    StateVector::new(n_qubits)
}

pub fn apply_gate<T: Real>(mut state: StateVector<T>, gate: &GateOp<T>) -> Result<StateVector<T>> {
    state.apply(gate)?;
    Ok(state)
}

pub fn expectation_z<T: Real>(state: &StateVector<T>, qubit: usize) -> Result<T> {
    state.expectation_z(qubit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_3, PI};

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn assert_amps(s: &StateVector<f64>, want: &[Complex<f64>]) {
        assert_eq!(s.amplitudes().len(), want.len());
        for (a, b) in s.amplitudes().iter().zip(want) {
            assert!((a - b).norm() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn init_state_is_all_zeros_ket() {
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        assert_amps(&init_state(1).unwrap(), &[one, zero]);
        assert_amps(&init_state(2).unwrap(), &[one, zero, zero, zero]);
        let s3 = init_state::<f64>(3).unwrap();
        assert_eq!(s3.amplitudes().len(), 8);
        assert_eq!(s3.amplitudes()[0], one);
        assert!(s3.amplitudes()[1..].iter().all(|a| *a == zero));
    }

    #[test]
    fn init_state_rejects_out_of_bounds() {
        assert!(matches!(init_state::<f64>(0), Err(Error::Configuration(_))));
        assert!(matches!(init_state::<f64>(13), Err(Error::Configuration(_))));
        assert!(init_state::<f64>(12).is_ok());
    }

    #[test]
    fn rx_zero_is_identity() {
        let mut s = init_state::<f64>(2).unwrap();
        s.apply(&GateOp::Ry { target: 0, angle: 0.7 }).unwrap();
        s.apply(&GateOp::Rx { target: 1, angle: 1.3 }).unwrap();
        let before = s.clone();
        let after = apply_gate(s, &GateOp::Rx { target: 0, angle: 0.0 }).unwrap();
        assert_amps(&after, &before.amplitudes());
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let s = StateVector::<f64>::basis(2, 0b10).unwrap();
        let s = apply_gate(s, &GateOp::Cnot { control: 0, target: 1 }).unwrap();
        assert_amps(&s, &[c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]);
        // control clear: nothing happens
        let s = StateVector::<f64>::basis(2, 0b01).unwrap();
        let s = apply_gate(s, &GateOp::Cnot { control: 0, target: 1 }).unwrap();
        assert_amps(&s, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]);
    }

    #[test]
    fn rx_half_pi_closed_form() {
        let s = apply_gate(
            init_state::<f64>(1).unwrap(),
            &GateOp::Rx { target: 0, angle: FRAC_PI_2 },
        )
        .unwrap();
        assert_amps(&s, &[c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2)]);
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let mut s = init_state::<f64>(2).unwrap();
        assert!(matches!(
            s.apply(&GateOp::Rx { target: 2, angle: 0.1 }),
            Err(Error::Index { .. })
        ));
        assert!(s.apply(&GateOp::Cnot { control: 0, target: 0 }).is_err());
        assert!(matches!(s.expectation_z(5), Err(Error::Index { .. })));
    }

    #[test]
    fn expectation_z_examples() {
        let s = init_state::<f64>(1).unwrap();
        assert_eq!(expectation_z(&s, 0).unwrap(), 1.0);
        let plus = StateVector::from_amplitudes(1, vec![c(FRAC_1_SQRT_2, 0.), c(FRAC_1_SQRT_2, 0.)])
            .unwrap();
        assert!(expectation_z(&plus, 0).unwrap().abs() < 1e-15);
        let s = apply_gate(s, &GateOp::Rx { target: 0, angle: FRAC_PI_3 }).unwrap();
        assert!((expectation_z(&s, 0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expectations_z_matches_per_qubit() {
        let mut s = init_state::<f64>(3).unwrap();
        s.apply(&GateOp::Ry { target: 0, angle: 0.4 }).unwrap();
        s.apply(&GateOp::Rx { target: 2, angle: 2.1 }).unwrap();
        s.apply(&GateOp::Cnot { control: 0, target: 1 }).unwrap();
        let all = s.expectations_z();
        for (q, e) in all.iter().enumerate() {
            assert!((e - s.expectation_z(q).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn rotation_derivative_matches_finite_difference() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            let th = 0.83;
            let h = 1e-6;
            let d = axis.rotation_derivative(th);
            let p = axis.rotation(th + h);
            let m = axis.rotation(th - h);
            for i in 0..2 {
                for j in 0..2 {
                    let fd = (p[i][j] - m[i][j]) / (2.0 * h);
                    assert!((fd - d[i][j]).norm() < 1e-8, "{axis:?}");
                }
            }
        }
    }

    #[test]
    fn works_in_single_precision() {
        let s = apply_gate(
            init_state::<f32>(1).unwrap(),
            &GateOp::Rx { target: 0, angle: std::f32::consts::FRAC_PI_3 },
        )
        .unwrap();
        assert!((s.expectation_z(0).unwrap() - 0.5).abs() < 1e-6);
        let s = apply_gate(init_state::<f32>(1).unwrap(), &GateOp::Ry { target: 0, angle: PI as f32 })
            .unwrap();
        assert!((s.expectation_z(0).unwrap() + 1.0).abs() < 1e-6);
    }
}
