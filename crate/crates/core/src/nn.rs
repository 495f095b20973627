//! Dense layers, their backward pass, and Adam.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{ensure_finite, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    #[inline]
    fn apply<T: Real>(self, v: T) -> T {
        match self {
            Activation::Linear => v,
            Activation::Relu => v.max(T::zero()),
        }
    }

    #[inline]
    fn derivative<T: Real>(self, pre: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Relu if pre > T::zero() => T::one(),
            Activation::Relu => T::zero(),
        }
    }
}

/// Affine map followed by an activation. `weights` is row-major `out_dim × in_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<T>,
    pub bias: Vec<T>,
    pub activation: Activation,
}

impl<T: Real> DenseLayer<T> {
    pub fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![T::zero(); in_dim * out_dim],
            bias: vec![T::zero(); out_dim],
            activation,
        }
    }

    /// Weights uniform in `±1/√in_dim`, zero bias.
    pub fn init<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut layer = Self::zeros(in_dim, out_dim, activation);
        for w in &mut layer.weights {
            *w = T::lit(rng.gen_range(-bound..bound));
        }
        layer
    }

    pub fn n_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    /// Pre-activation `W x + b`.
    pub fn affine(&self, x: &[T]) -> Vec<T> {
        self.weights
            .chunks_exact(self.in_dim)
            .zip(&self.bias)
            .map(|(row, &b)| row.iter().zip(x).fold(b, |acc, (w, xi)| acc + *w * *xi))
            .collect()
    }

    fn check(&self) -> Result<()> {
        if self.weights.len() != self.in_dim * self.out_dim {
            return Err(Error::dim("dense weights", self.in_dim * self.out_dim, self.weights.len()));
        }
        if self.bias.len() != self.out_dim {
            return Err(Error::dim("dense bias", self.out_dim, self.bias.len()));
        }
        Ok(())
    }
}

/// Inputs and pre-activations recorded by [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache<T> {
    pub inputs: Vec<Vec<T>>,
    pub pre_activations: Vec<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

pub fn forward<T: Real>(layers: &[DenseLayer<T>], x: &[T]) -> Result<(Vec<T>, ForwardCache<T>)> {
    let mut cache = ForwardCache {
        inputs: Vec::with_capacity(layers.len()),
        pre_activations: Vec::with_capacity(layers.len()),
    };
    let mut h = x.to_vec();
    for layer in layers {
        layer.check()?;
        if h.len() != layer.in_dim {
            return Err(Error::dim("dense input", layer.in_dim, h.len()));
        }
        let pre = layer.affine(&h);
        let out = pre.iter().map(|&v| layer.activation.apply(v)).collect();
        cache.inputs.push(std::mem::replace(&mut h, out));
        cache.pre_activations.push(pre);
    }
    Ok((h, cache))
}

fn check_cache<T: Real>(layers: &[DenseLayer<T>], cache: &ForwardCache<T>) -> Result<()> {
    let stale = || Error::Protocol("forward cache does not match the layer stack".into());
    if cache.inputs.len() != layers.len() || cache.pre_activations.len() != layers.len() {
        return Err(stale());
    }
    for (l, (i, p)) in layers.iter().zip(cache.inputs.iter().zip(&cache.pre_activations)) {
        if i.len() != l.in_dim || p.len() != l.out_dim {
            return Err(stale());
        }
    }
    Ok(())
}

/// Backpropagates `upstream` (∂L/∂output), adding parameter gradients into
/// `flat_grads` (layout of [`flatten`]) and returning ∂L/∂input.
pub fn backward_accumulate<T: Real>(
    layers: &[DenseLayer<T>],
    cache: &ForwardCache<T>,
    upstream: &[T],
    flat_grads: &mut [T],
) -> Result<Vec<T>> {
    check_cache(layers, cache)?;
    let total: usize = layers.iter().map(DenseLayer::n_params).sum();
    if flat_grads.len() != total {
        return Err(Error::dim("dense gradient buffer", total, flat_grads.len()));
    }
    // An empty stack is the identity map.
    let expected_out = layers.last().map_or(upstream.len(), |l| l.out_dim);
    if upstream.len() != expected_out {
        return Err(Error::dim("dense upstream", expected_out, upstream.len()));
    }
    let mut offset = total;
    let mut delta = upstream.to_vec();
    for (idx, layer) in layers.iter().enumerate().rev() {
        offset -= layer.n_params();
        let (gw, gb) = flat_grads[offset..offset + layer.n_params()].split_at_mut(layer.weights.len());
        let input = &cache.inputs[idx];
        for (o, d) in delta.iter_mut().enumerate() {
            *d *= layer.activation.derivative(cache.pre_activations[idx][o]);
        }
        let mut dx = vec![T::zero(); layer.in_dim];
        for (o, &d) in delta.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            gb[o] += d;
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            let grow = &mut gw[o * layer.in_dim..(o + 1) * layer.in_dim];
            for i in 0..layer.in_dim {
                grow[i] += d * input[i];
                dx[i] += d * row[i];
            }
        }
        delta = dx;
    }
    Ok(delta)
}

/// Parameter gradients per layer and ∂L/∂input.
pub fn backward<T: Real>(
    layers: &[DenseLayer<T>],
    cache: &ForwardCache<T>,
    upstream: &[T],
) -> Result<(Vec<LayerGrad<T>>, Vec<T>)> {
    let total: usize = layers.iter().map(DenseLayer::n_params).sum();
    let mut flat = vec![T::zero(); total];
    let dx = backward_accumulate(layers, cache, upstream, &mut flat)?;
    let mut grads = Vec::with_capacity(layers.len());
    let mut off = 0;
    for l in layers {
        let w = flat[off..off + l.weights.len()].to_vec();
        off += l.weights.len();
        let b = flat[off..off + l.bias.len()].to_vec();
        off += l.bias.len();
        grads.push(LayerGrad { weights: w, bias: b });
    }
    Ok((grads, dx))
}

/// Concatenates each layer's weights then bias.
pub fn flatten<T: Real>(layers: &[DenseLayer<T>]) -> Vec<T> {
    let mut v = Vec::with_capacity(layers.iter().map(DenseLayer::n_params).sum());
    for l in layers {
        v.extend_from_slice(&l.weights);
        v.extend_from_slice(&l.bias);
    }
    v
}

/// Inverse of [`flatten`]; returns the number of values consumed.
pub fn load_flat<T: Real>(layers: &mut [DenseLayer<T>], flat: &[T]) -> Result<usize> {
    let total: usize = layers.iter().map(DenseLayer::n_params).sum();
    if flat.len() < total {
        return Err(Error::dim("dense parameters", total, flat.len()));
    }
    let mut off = 0;
    for l in layers {
        let nw = l.weights.len();
        l.weights.copy_from_slice(&flat[off..off + nw]);
        off += nw;
        let nb = l.bias.len();
        l.bias.copy_from_slice(&flat[off..off + nb]);
        off += nb;
    }
    Ok(off)
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Adam moments for one flattened parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<T>,
    pub second_moment: Vec<T>,
    pub step_count: u64,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
}

impl<T: Real> AdamState<T> {
    pub fn new(n_params: usize) -> Self {
        Self {
            first_moment: vec![T::zero(); n_params],
            second_moment: vec![T::zero(); n_params],
            step_count: 0,
            beta1: T::lit(ADAM_BETA1),
            beta2: T::lit(ADAM_BETA2),
            eps: T::lit(ADAM_EPS),
        }
    }
}

/// One bias-corrected Adam descent step, in place.
pub fn adam_update<T: Real>(params: &mut [T], grads: &[T], state: &mut AdamState<T>, lr: T) -> Result<()> {
    if grads.len() != params.len() {
        return Err(Error::dim("adam gradients", params.len(), grads.len()));
    }
    if state.first_moment.len() != params.len() || state.second_moment.len() != params.len() {
        return Err(Error::dim("adam moments", params.len(), state.first_moment.len()));
    }
    ensure_finite(grads, "adam gradients")?;
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = T::one() - b1.powi(t);
    let c2 = T::one() - b2.powi(t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.first_moment.iter_mut())
        .zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (T::one() - b1) * g;
        *v = b2 * *v + (T::one() - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + state.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mlp(rng: &mut ChaCha8Rng, dims: &[usize]) -> Vec<DenseLayer<f64>> {
        dims.windows(2)
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 2 == dims.len() { Activation::Linear } else { Activation::Relu };
                let mut l = DenseLayer::init(w[0], w[1], act, rng);
                for b in &mut l.bias {
                    *b = rng.gen_range(-0.3..0.3);
                }
                l
            })
            .collect()
    }

    #[test]
    fn zero_linear_layer_outputs_zero() {
        let l = DenseLayer::<f64>::zeros(3, 2, Activation::Linear);
        let (y, _) = forward(&[l], &[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn relu_identity() {
        let mut l = DenseLayer::<f64>::zeros(2, 2, Activation::Relu);
        l.weights = vec![1.0, 0.0, 0.0, 1.0];
        let (y, _) = forward(&[l], &[-1.0, 2.0]).unwrap();
        assert_eq!(y, vec![0.0, 2.0]);
    }

    #[test]
    fn two_layer_matches_hand_affine_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let layers = mlp(&mut rng, &[3, 4, 2]);
        let x = [0.5, -1.5, 2.0];
        let (y, _) = forward(&layers, &x).unwrap();
        // independent evaluation with explicit index loops
        let mut h = [0.0; 4];
        for o in 0..4 {
            let mut s = layers[0].bias[o];
            for i in 0..3 {
                s += layers[0].weights[o * 3 + i] * x[i];
            }
            h[o] = if s > 0.0 { s } else { 0.0 };
        }
        for o in 0..2 {
            let mut s = layers[1].bias[o];
            for i in 0..4 {
                s += layers[1].weights[o * 4 + i] * h[i];
            }
            assert!((s - y[o]).abs() < 1e-14);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let l = DenseLayer::<f64>::zeros(3, 2, Activation::Linear);
        assert!(matches!(forward(std::slice::from_ref(&l), &[1.0]), Err(Error::Dimension { .. })));
        let (_, cache) = forward(std::slice::from_ref(&l), &[1.0, 2.0, 3.0]).unwrap();
        let other = DenseLayer::<f64>::zeros(4, 2, Activation::Linear);
        assert!(matches!(backward(&[other], &cache, &[1.0, 1.0]), Err(Error::Protocol(_))));
    }

    #[test]
    fn zero_upstream_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layers = mlp(&mut rng, &[3, 5, 2]);
        let (_, cache) = forward(&layers, &[0.1, 0.2, 0.3]).unwrap();
        let (g, dx) = backward(&layers, &cache, &[0.0, 0.0]).unwrap();
        assert!(g.iter().all(|lg| lg.weights.iter().chain(&lg.bias).all(|v| *v == 0.0)));
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_chain_rule() {
        let mut l = DenseLayer::<f64>::zeros(1, 1, Activation::Linear);
        l.weights[0] = 1.7;
        let (_, cache) = forward(&[l.clone()], &[0.6]).unwrap();
        let (g, dx) = backward(&[l], &cache, &[2.5]).unwrap();
        assert!((g[0].weights[0] - 2.5 * 0.6).abs() < 1e-15);
        assert!((g[0].bias[0] - 2.5).abs() < 1e-15);
        assert!((dx[0] - 2.5 * 1.7).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dims in [vec![6, 7, 8, 4], vec![8, 16, 16, 1], vec![8, 22, 21, 1]] {
            let mut layers = mlp(&mut rng, &dims);
            let x: Vec<f64> = (0..dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let up: Vec<f64> = (0..*dims.last().unwrap()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let loss = |ls: &[DenseLayer<f64>], x: &[f64]| -> f64 {
                forward(ls, x).unwrap().0.iter().zip(&up).map(|(a, b)| a * b).sum()
            };
            let (_, cache) = forward(&layers, &x).unwrap();
            let mut g = vec![0.0; flatten(&layers).len()];
            let dx = backward_accumulate(&layers, &cache, &up, &mut g).unwrap();
            let base = flatten(&layers);
            let h = 1e-6;
            for j in 0..base.len() {
                let mut p = base.clone();
                p[j] += h;
                load_flat(&mut layers, &p).unwrap();
                let lp = loss(&layers, &x);
                p[j] -= 2.0 * h;
                load_flat(&mut layers, &p).unwrap();
                let lm = loss(&layers, &x);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - g[j]).abs() <= 1e-6 * fd.abs().max(1.0), "{dims:?} param {j}: {fd} vs {}", g[j]);
            }
            load_flat(&mut layers, &base).unwrap();
            for i in 0..x.len() {
                let mut xp = x.clone();
                xp[i] += h;
                let lp = loss(&layers, &xp);
                xp[i] -= 2.0 * h;
                let lm = loss(&layers, &xp);
                let fd = (lp - lm) / (2.0 * h);
                assert!((fd - dx[i]).abs() <= 1e-6 * fd.abs().max(1.0));
            }
        }
    }

    #[test]
    fn adam_zero_grad_keeps_params() {
        let mut p = vec![0.3, -0.2];
        let mut s = AdamState::new(2);
        adam_update(&mut p, &[0.0, 0.0], &mut s, 3e-4).unwrap();
        assert_eq!(p, vec![0.3, -0.2]);
        assert_eq!(s.step_count, 1);
    }

    #[test]
    fn adam_first_step_is_signed_lr() {
        let lr: f64 = 3e-4;
        let mut p: Vec<f64> = vec![1.0, 1.0, 1.0];
        let mut s = AdamState::new(3);
        adam_update(&mut p, &[0.5, -2.0, 1e3], &mut s, lr).unwrap();
        assert!((p[0] - (1.0 - lr)).abs() < 1e-10);
        assert!((p[1] - (1.0 + lr)).abs() < 1e-10);
        assert!((p[2] - (1.0 - lr)).abs() < 1e-10);
        adam_update(&mut p, &[0.5, -2.0, 1e3], &mut s, lr).unwrap();
        assert_eq!(s.step_count, 2);
        assert!(s.first_moment.iter().chain(&s.second_moment).all(|v| v.is_finite()));
    }

    #[test]
    fn adam_rejects_nan() {
        let mut p = vec![0.0];
        let mut s = AdamState::new(1);
        assert!(matches!(adam_update(&mut p, &[f64::NAN], &mut s, 1e-3), Err(Error::Divergence(_))));
        assert_eq!(s.step_count, 0);
    }
}
