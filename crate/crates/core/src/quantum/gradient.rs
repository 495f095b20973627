//! Two independent gradient routes for circuit readouts.
//!
//! Both take an `upstream` vector (∂L/∂⟨Z_q⟩) and return ∂L/∂params for the
//! scalar `L = Σ_q upstream_q ⟨Z_q⟩`.

use num_complex::Complex;

use super::circuit::{AngleSource, Circuit, CircuitParams, CircuitSpec, Segment};
use super::state::{mat_adjoint, mat_identity, mat_mul, apply_split, split_rows, Mat2, StateVector};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Gradients with respect to the flattened circuit parameters and the input features.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitGrad<T> {
    pub params: Vec<T>,
    pub input: Vec<T>,
}

impl<T: Real> Circuit<T> {
    fn check_upstream(&self, upstream: &[T]) -> Result<()> {
        if upstream.len() != self.n_qubits() {
            return Err(Error::dim("upstream gradient", self.n_qubits(), upstream.len()));
        }
        Ok(())
    }

    /// Scatters per-rotation angle gradients onto parameters and inputs.
    fn chain_angles(&self, params: &CircuitParams<T>, x: &[T], angle_grads: &[T]) -> CircuitGrad<T> {
        let flat = params.flatten();
        let mut dparams = vec![T::zero(); flat.len()];
        let mut dx = vec![T::zero(); x.len()];
        for (rot, &g) in self.rotations.iter().zip(angle_grads) {
            match rot.source {
                AngleSource::Param(i) => dparams[i] += g,
                AngleSource::Encoded { weight, feature } => {
                    dparams[weight] += g * x[feature];
                    dx[feature] += g * flat[weight];
                }
            }
        }
        CircuitGrad {
            params: dparams,
            input: dx,
        }
    }

    /// Readout and adjoint-method gradients in one forward and one reverse sweep.
    pub fn forward_backward(
        &self,
        params: &CircuitParams<T>,
        x: &[T],
        upstream: &[T],
    ) -> Result<(Vec<T>, CircuitGrad<T>)> {
        self.check_inputs(params, x)?;
        self.check_upstream(upstream)?;
        let mats = self.rotation_mats(&self.angles(params, x));
        let units = self.block_unitaries(&mats);
        let psi = self.run_unitaries(&units);
        let out = psi.expectations_z();
        let angle_grads = self.reverse_sweep(&mats, &units, psi, upstream)?;
        Ok((out, self.chain_angles(params, x, &angle_grads)))
    }

    /// Adjoint gradients reusing the final state of a previous forward pass
    /// with the same `params` and `x`.
    pub fn backward_from_state(
        &self,
        params: &CircuitParams<T>,
        x: &[T],
        final_state: &StateVector<T>,
        upstream: &[T],
    ) -> Result<CircuitGrad<T>> {
        self.check_inputs(params, x)?;
        self.check_upstream(upstream)?;
        if final_state.n_qubits() != self.n_qubits() {
            return Err(Error::dim("cached state", self.n_qubits(), final_state.n_qubits()));
        }
        let mats = self.rotation_mats(&self.angles(params, x));
        let units = self.block_unitaries(&mats);
        let angle_grads = self.reverse_sweep(&mats, &units, final_state.clone(), upstream)?;
        Ok(self.chain_angles(params, x, &angle_grads))
    }

    fn reverse_sweep(
        &self,
        mats: &[Mat2<T>],
        units: &[Mat2<T>],
        mut psi: StateVector<T>,
        upstream: &[T],
    ) -> Result<Vec<T>> {
        // λ = O ψ with O = Σ_q upstream_q Z_q (diagonal).
        let n = self.n_qubits();
        let mut lam = psi.clone();
        let (re, im) = lam.parts_mut();
        for (i, (r, m)) in re.iter_mut().zip(im.iter_mut()).enumerate() {
            let mut w = T::zero();
            for (q, &u) in upstream.iter().enumerate() {
                if i & (1 << (n - 1 - q)) == 0 {
                    w += u;
                } else {
                    w -= u;
                }
            }
            *r *= w;
            *m *= w;
        }

        let mut angle_grads = vec![T::zero(); mats.len()];
        let mut scratch = Vec::new();
        let mut prefix: Vec<Mat2<T>> = Vec::new();
        let mut unit = units.len();
        for seg in self.segments.iter().rev() {
            match seg {
                Segment::Entangle { inverse, .. } => {
                    psi.permute(inverse, &mut scratch);
                    lam.permute(inverse, &mut scratch);
                }
                Segment::Local(blocks) => {
                    for b in blocks.iter().rev() {
                        unit -= 1;
                        let r = unapply_and_cross(&mut lam, &mut psi, b.qubit, &mat_adjoint(&units[unit]));
                        // U = G_m…G_1 and dU/dθ_k = (G_m…G_{k+1}) · (−i/2)P_k · (G_k…G_1).
                        prefix.clear();
                        let mut acc = mat_identity();
                        for &ri in &b.rotations {
                            acc = mat_mul(&mats[ri], &acc);
                            prefix.push(acc);
                        }
                        let mut suffix = mat_identity();
                        for (k, &ri) in b.rotations.iter().enumerate().rev() {
                            let d = mat_mul(&suffix, &self.rotations[ri].axis.generator_times(&prefix[k]));
                            let mut tr = Complex::new(T::zero(), T::zero());
                            for a in 0..2 {
                                for c in 0..2 {
                                    tr += d[a][c] * r[a][c];
                                }
                            }
                            angle_grads[ri] += T::lit(2.0) * tr.re;
                            suffix = mat_mul(&suffix, &mats[ri]);
                        }
                    }
                }
            }
        }
        Ok(angle_grads)
    }

    pub fn adjoint(&self, params: &CircuitParams<T>, x: &[T], upstream: &[T]) -> Result<CircuitGrad<T>> {
        Ok(self.forward_backward(params, x, upstream)?.1)
    }

    /// Gradient from `(f(θ + π/2) − f(θ − π/2)) / 2` on every rotation angle.
    ///
    /// Encoding weights enter through the product angle `w·x`, so their
    /// gradient is the shifted-angle derivative times `x`.
    pub fn parameter_shift(&self, params: &CircuitParams<T>, x: &[T], upstream: &[T]) -> Result<Vec<T>> {
        self.check_inputs(params, x)?;
        self.check_upstream(upstream)?;
        let mut angles = self.angles(params, x);
        let shift = T::FRAC_PI_2();
        let half = T::lit(0.5);
        let weighted = |v: Vec<T>| -> T { v.iter().zip(upstream).map(|(a, b)| *a * *b).sum() };
        let mut angle_grads = vec![T::zero(); angles.len()];
        for r in 0..angles.len() {
            let orig = angles[r];
            angles[r] = orig + shift;
            let plus = weighted(self.run_angles(&angles).expectations_z());
            angles[r] = orig - shift;
            let minus = weighted(self.run_angles(&angles).expectations_z());
            angles[r] = orig;
            angle_grads[r] = (plus - minus) * half;
        }
        Ok(self.chain_angles(params, x, &angle_grads).params)
    }
}

/// Rewinds one block: `ψ ← U†ψ`, `λ ← U†λ`, returning the cross matrix
/// `R[a][b] = Σ_rest conj(λ[rest, a]) ψ[rest, b]` taken with `λ` after and `ψ`
/// before the block, so that `⟨λ| (I ⊗ A ⊗ I) |ψ⟩ = Σ_ab A[a][b] R[a][b]`.
fn unapply_and_cross<T: Real>(
    lam: &mut StateVector<T>,
    psi: &mut StateVector<T>,
    q: usize,
    u_dag: &Mat2<T>,
) -> [[Complex<T>; 2]; 2] {
    let mask = psi.mask(q);
    let m = split_rows(u_dag);
    let (pre, pim) = psi.parts_mut();
    apply_split(pre, pim, mask, &m);
    let (lre, lim) = lam.parts_mut();
    let acc = cross_split(lre, lim, pre, pim, mask);
    apply_split(lre, lim, mask, &m);
    [
        [Complex::new(acc[0], acc[1]), Complex::new(acc[2], acc[3])],
        [Complex::new(acc[4], acc[5]), Complex::new(acc[6], acc[7])],
    ]
}

const LANES: usize = 4;

/// `Σ conj(λ_a)·ψ_b` over amplitude pairs split on `mask`, flattened as
/// `[re00, im00, re01, im01, re10, im10, re11, im11]`.
///
/// Independent per-lane partial sums let the reduction vectorize.
fn cross_split<T: Real>(lre: &[T], lim: &[T], pre: &[T], pim: &[T], mask: usize) -> [T; 8] {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx2") {
        // SAFETY: the required CPU feature was detected at runtime.
        return unsafe { cross_split_avx2(lre, lim, pre, pim, mask) };
    }
    cross_split_portable(lre, lim, pre, pim, mask)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn cross_split_avx2<T: Real>(lre: &[T], lim: &[T], pre: &[T], pim: &[T], mask: usize) -> [T; 8] {
    cross_split_portable(lre, lim, pre, pim, mask)
}

#[inline(always)]
fn cross_split_portable<T: Real>(lre: &[T], lim: &[T], pre: &[T], pim: &[T], mask: usize) -> [T; 8] {
    let mut lanes = [[T::zero(); LANES]; 8];
    let mut out = [T::zero(); 8];
    let width = mask << 1;
    let full = mask - mask % LANES;
    for base in (0..lre.len()).step_by(width) {
        let lo = base..base + mask;
        let hi = base + mask..base + width;
        let (lr0, lr1, li0, li1) = (&lre[lo.clone()], &lre[hi.clone()], &lim[lo.clone()], &lim[hi.clone()]);
        let (pr0, pr1, pi0, pi1) = (&pre[lo.clone()], &pre[hi.clone()], &pim[lo], &pim[hi]);
        for j in (0..full).step_by(LANES) {
            let g = |s: &[T]| -> [T; LANES] { s[j..j + LANES].try_into().unwrap() };
            let (a0r, a0i, a1r, a1i) = (g(lr0), g(li0), g(lr1), g(li1));
            let (n0r, n0i, n1r, n1i) = (g(pr0), g(pi0), g(pr1), g(pi1));
            for l in 0..LANES {
                let t = cross_terms(a0r[l], a0i[l], a1r[l], a1i[l], n0r[l], n0i[l], n1r[l], n1i[l]);
                for (acc, v) in lanes.iter_mut().zip(t) {
                    acc[l] += v;
                }
            }
        }
        for k in full..mask {
            let t = cross_terms(lr0[k], li0[k], lr1[k], li1[k], pr0[k], pi0[k], pr1[k], pi1[k]);
            for (o, v) in out.iter_mut().zip(t) {
                *o += v;
            }
        }
    }
    for (o, lane) in out.iter_mut().zip(&lanes) {
        *o += lane.iter().copied().sum();
    }
    out
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn cross_terms<T: Real>(a0r: T, a0i: T, a1r: T, a1i: T, n0r: T, n0i: T, n1r: T, n1i: T) -> [T; 8] {
    [
        a0r * n0r + a0i * n0i,
        a0r * n0i - a0i * n0r,
        a0r * n1r + a0i * n1i,
        a0r * n1i - a0i * n1r,
        a1r * n0r + a1i * n0i,
        a1r * n0i - a1i * n0r,
        a1r * n1r + a1i * n1i,
        a1r * n1i - a1i * n1r,
    ]
}

/// Parameter-shift gradient over the flattened parameters.
pub fn grad_parameter_shift<T: Real>(
    spec: &CircuitSpec,
    params: &CircuitParams<T>,
    x: &[T],
    upstream: &[T],
) -> Result<Vec<T>> {
    Circuit::new(spec.clone())?.parameter_shift(params, x, upstream)
}

/// Adjoint-method gradients over the flattened parameters and the input features.
pub fn grad_adjoint<T: Real>(
    spec: &CircuitSpec,
    params: &CircuitParams<T>,
    x: &[T],
    upstream: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let g = Circuit::new(spec.clone())?.adjoint(params, x, upstream)?;
    Ok((g.params, g.input))
}
