use rand::Rng;

use super::arch::{ArchitectureConfig, DenseSpec, Role};
use crate::error::{Error, Result};
use crate::nn::{self, Activation, DenseLayer, ForwardCache};
use crate::quantum::{Circuit, CircuitParams, StateVector};
use crate::scalar::{ensure_finite, Real};

/// A named block of parameters with its shape, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<T>,
}

/// Anything whose learnable scalars can be viewed as one flat vector.
pub trait Parametric<T: Real> {
    fn n_params(&self) -> usize;
    /// All parameters, in the order of [`Parametric::param_groups`].
    fn params(&self) -> Vec<T>;
    fn set_params(&mut self, flat: &[T]) -> Result<()>;
    fn param_groups(&self) -> Vec<ParamGroup<T>>;

    /// Loads groups produced by [`Parametric::param_groups`] on an identically shaped network.
    fn load_groups(&mut self, groups: &[ParamGroup<T>]) -> Result<()> {
        let mine = self.param_groups();
        if mine.len() != groups.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} parameter groups, found {}",
                mine.len(),
                groups.len()
            )));
        }
        let mut flat = Vec::with_capacity(self.n_params());
        for (want, got) in mine.iter().zip(groups) {
            if want.name != got.name || want.shape != got.shape || got.values.len() != want.values.len() {
                return Err(Error::Checkpoint(format!(
                    "group `{}` {:?} does not match expected `{}` {:?}",
                    got.name, got.shape, want.name, want.shape
                )));
            }
            flat.extend_from_slice(&got.values);
        }
        self.set_params(&flat)
    }
}

/// Exact number of learnable scalars.
pub fn parameter_count<T: Real, N: Parametric<T>>(net: &N) -> usize {
    net.n_params()
}

/// A circuit and its trainable angles.
#[derive(Debug, Clone)]
pub struct QuantumLayer<T> {
    pub circuit: Circuit<T>,
    pub params: CircuitParams<T>,
}

/// Dense layers, an optional circuit, then more dense layers.
#[derive(Debug, Clone)]
pub struct Trunk<T> {
    pub pre: Vec<DenseLayer<T>>,
    pub quantum: Option<QuantumLayer<T>>,
    pub post: Vec<DenseLayer<T>>,
}

#[derive(Debug, Clone)]
pub struct TrunkCache<T> {
    pre: ForwardCache<T>,
    circuit_input: Vec<T>,
    circuit_state: Option<StateVector<T>>,
    post: ForwardCache<T>,
}

fn build_dense<T: Real, R: Rng + ?Sized>(specs: &[DenseSpec], rng: Option<&mut R>) -> Vec<DenseLayer<T>> {
    match rng {
        Some(rng) => specs
            .iter()
            .map(|d| DenseLayer::init(d.in_dim, d.out_dim, d.activation, rng))
            .collect(),
        None => specs
            .iter()
            .map(|d| DenseLayer::zeros(d.in_dim, d.out_dim, d.activation))
            .collect(),
    }
}

fn dense_groups<T: Real>(prefix: &str, layers: &[DenseLayer<T>], out: &mut Vec<ParamGroup<T>>) {
    for (i, l) in layers.iter().enumerate() {
        out.push(ParamGroup {
            name: format!("{prefix}.{i}.weight"),
            shape: vec![l.out_dim, l.in_dim],
            values: l.weights.clone(),
        });
        out.push(ParamGroup {
            name: format!("{prefix}.{i}.bias"),
            shape: vec![l.out_dim],
            values: l.bias.clone(),
        });
    }
}

fn dense_count<T: Real>(layers: &[DenseLayer<T>]) -> usize {
    layers.iter().map(DenseLayer::n_params).sum()
}

impl<T: Real> Trunk<T> {
    fn build<R: Rng + ?Sized>(arch: &ArchitectureConfig, mut rng: Option<&mut R>) -> Result<Self> {
        arch.validate()?;
        let pre = build_dense(&arch.pre_layers, rng.as_deref_mut());
        let quantum = match &arch.vqc {
            Some(spec) => Some(QuantumLayer {
                circuit: Circuit::new(spec.clone())?,
                params: match rng.as_deref_mut() {
                    Some(r) => CircuitParams::random(spec, r),
                    None => CircuitParams::zeros(spec),
                },
            }),
            None => None,
        };
        let post = build_dense(&arch.post_layers, rng);
        Ok(Self { pre, quantum, post })
    }

    pub fn n_params(&self) -> usize {
        dense_count(&self.pre) + self.quantum.as_ref().map_or(0, |q| q.params.len()) + dense_count(&self.post)
    }

    fn params_into(&self, out: &mut Vec<T>) {
        out.extend(nn::flatten(&self.pre));
        if let Some(q) = &self.quantum {
            out.extend(q.params.flatten());
        }
        out.extend(nn::flatten(&self.post));
    }

    fn load(&mut self, flat: &[T]) -> Result<usize> {
        let mut off = nn::load_flat(&mut self.pre, flat)?;
        if let Some(q) = &mut self.quantum {
            let n = q.params.len();
            if flat.len() < off + n {
                return Err(Error::dim("circuit parameters", off + n, flat.len()));
            }
            q.params = CircuitParams::unflatten(q.circuit.spec(), &flat[off..off + n])?;
            off += n;
        }
        off += nn::load_flat(&mut self.post, &flat[off..])?;
        Ok(off)
    }

    fn groups_into(&self, out: &mut Vec<ParamGroup<T>>) {
        dense_groups("pre", &self.pre, out);
        if let Some(q) = &self.quantum {
            out.push(ParamGroup {
                name: "vqc.encode".into(),
                shape: vec![q.params.encode_weights.len()],
                values: q.params.encode_weights.clone(),
            });
            out.push(ParamGroup {
                name: "vqc.rot".into(),
                shape: vec![q.params.rot_params.len()],
                values: q.params.rot_params.clone(),
            });
        }
        dense_groups("post", &self.post, out);
    }

    pub fn forward(&self, x: &[T]) -> Result<(Vec<T>, TrunkCache<T>)> {
        let (h, pre) = nn::forward(&self.pre, x)?;
        let (h, circuit_input, circuit_state) = match &self.quantum {
            Some(q) => {
                let state = q.circuit.state(&q.params, &h)?;
                (state.expectations_z(), h, Some(state))
            }
            None => (h, Vec::new(), None),
        };
        let (out, post) = nn::forward(&self.post, &h)?;
        Ok((
            out,
            TrunkCache {
                pre,
                circuit_input,
                circuit_state,
                post,
            },
        ))
    }

    /// Accumulates into `grads` (layout of the flattened trunk) and returns ∂L/∂x.
    pub fn backward(&self, cache: &TrunkCache<T>, upstream: &[T], grads: &mut [T]) -> Result<Vec<T>> {
        let n_pre = dense_count(&self.pre);
        let n_q = self.quantum.as_ref().map_or(0, |q| q.params.len());
        let (g_pre, rest) = grads.split_at_mut(n_pre);
        let (g_q, g_post) = rest.split_at_mut(n_q);
        let mut d = nn::backward_accumulate(&self.post, &cache.post, upstream, g_post)?;
        if let Some(q) = &self.quantum {
            let state = cache
                .circuit_state
                .as_ref()
                .ok_or_else(|| Error::Protocol("trunk cache lacks the circuit state".into()))?;
            let g = q.circuit.backward_from_state(&q.params, &cache.circuit_input, state, &d)?;
            for (acc, v) in g_q.iter_mut().zip(&g.params) {
                *acc += *v;
            }
            d = g.input;
        }
        nn::backward_accumulate(&self.pre, &cache.pre, &d, g_pre)
    }
}

/// Gaussian policy: trunk followed by a mean head and a log-std head.
#[derive(Debug, Clone)]
pub struct ActorNetwork<T> {
    pub architecture: ArchitectureConfig,
    pub trunk: Trunk<T>,
    pub mean_head: DenseLayer<T>,
    pub log_std_head: DenseLayer<T>,
}

#[derive(Debug, Clone)]
pub struct ActorCache<T> {
    trunk: TrunkCache<T>,
    features: Vec<T>,
    raw_log_std: Vec<T>,
}

impl<T: Real> ActorNetwork<T> {
    fn build<R: Rng + ?Sized>(architecture: ArchitectureConfig, mut rng: Option<&mut R>) -> Result<Self> {
        if architecture.role != Role::Actor {
            return Err(Error::Configuration("critic layout used for an actor".into()));
        }
        let trunk = Trunk::build(&architecture, rng.as_deref_mut())?;
        let (f, a) = (architecture.trunk_dim(), architecture.action_dim);
        let (mean_head, log_std_head) = match rng {
            Some(r) => (
                DenseLayer::init(f, a, Activation::Linear, r),
                DenseLayer::init(f, a, Activation::Linear, r),
            ),
            None => (
                DenseLayer::zeros(f, a, Activation::Linear),
                DenseLayer::zeros(f, a, Activation::Linear),
            ),
        };
        Ok(Self {
            architecture,
            trunk,
            mean_head,
            log_std_head,
        })
    }

    pub fn new<R: Rng + ?Sized>(architecture: ArchitectureConfig, rng: &mut R) -> Result<Self> {
        Self::build(architecture, Some(rng))
    }

    /// Every parameter zero (circuit encoding weights included).
    pub fn zeros(architecture: ArchitectureConfig) -> Result<Self> {
        Self::build::<rand::rngs::ThreadRng>(architecture, None)
    }

    /// Mean and clamped log-std.
    pub fn forward(&self, obs: &[T]) -> Result<(Vec<T>, Vec<T>, ActorCache<T>)> {
        ensure_finite(obs, "actor observation")?;
        let (features, trunk) = self.trunk.forward(obs)?;
        let mean = self.mean_head.affine(&features);
        let raw_log_std = self.log_std_head.affine(&features);
        let (lo, hi) = (T::lit(super::LOG_STD_MIN), T::lit(super::LOG_STD_MAX));
        let log_std: Vec<T> = raw_log_std.iter().map(|v| v.max(lo).min(hi)).collect();
        ensure_finite(&mean, "actor mean")?;
        ensure_finite(&log_std, "actor log-std")?;
        Ok((
            mean,
            log_std,
            ActorCache {
                trunk,
                features,
                raw_log_std,
            },
        ))
    }

    /// Accumulates parameter gradients for upstream ∂L/∂mean and ∂L/∂log_std
    /// (taken after clamping) and returns ∂L/∂obs.
    pub fn backward(&self, cache: &ActorCache<T>, d_mean: &[T], d_log_std: &[T], grads: &mut [T]) -> Result<Vec<T>> {
        let a = self.architecture.action_dim;
        if d_mean.len() != a || d_log_std.len() != a {
            return Err(Error::dim("actor upstream", a, d_mean.len().min(d_log_std.len())));
        }
        if grads.len() != self.n_params() {
            return Err(Error::dim("actor gradient buffer", self.n_params(), grads.len()));
        }
        let (lo, hi) = (T::lit(super::LOG_STD_MIN), T::lit(super::LOG_STD_MAX));
        let d_raw: Vec<T> = d_log_std
            .iter()
            .zip(&cache.raw_log_std)
            .map(|(&g, &r)| if r < lo || r > hi { T::zero() } else { g })
            .collect();
        let nt = self.trunk.n_params();
        let nh = self.mean_head.n_params();
        let (g_trunk, g_heads) = grads.split_at_mut(nt);
        let (g_mean, g_ls) = g_heads.split_at_mut(nh);
        let head_cache = |pre: Vec<T>| ForwardCache {
            inputs: vec![cache.features.clone()],
            pre_activations: vec![pre],
        };
        let mut d_feat = nn::backward_accumulate(
            std::slice::from_ref(&self.mean_head),
            &head_cache(vec![T::zero(); a]),
            d_mean,
            g_mean,
        )?;
        let d_feat_ls = nn::backward_accumulate(
            std::slice::from_ref(&self.log_std_head),
            &head_cache(cache.raw_log_std.clone()),
            &d_raw,
            g_ls,
        )?;
        for (x, y) in d_feat.iter_mut().zip(d_feat_ls) {
            *x += y;
        }
        self.trunk.backward(&cache.trunk, &d_feat, g_trunk)
    }
}

impl<T: Real> Parametric<T> for ActorNetwork<T> {
    fn n_params(&self) -> usize {
        self.trunk.n_params() + self.mean_head.n_params() + self.log_std_head.n_params()
    }

    fn params(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.n_params());
        self.trunk.params_into(&mut v);
        v.extend(nn::flatten(std::slice::from_ref(&self.mean_head)));
        v.extend(nn::flatten(std::slice::from_ref(&self.log_std_head)));
        v
    }

    fn set_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::dim("actor parameters", self.n_params(), flat.len()));
        }
        let mut off = self.trunk.load(flat)?;
        off += nn::load_flat(std::slice::from_mut(&mut self.mean_head), &flat[off..])?;
        nn::load_flat(std::slice::from_mut(&mut self.log_std_head), &flat[off..])?;
        Ok(())
    }

    fn param_groups(&self) -> Vec<ParamGroup<T>> {
        let mut g = Vec::new();
        self.trunk.groups_into(&mut g);
        dense_groups("mean", std::slice::from_ref(&self.mean_head), &mut g);
        dense_groups("log_std", std::slice::from_ref(&self.log_std_head), &mut g);
        g
    }
}

/// State-action value network. Actions are divided by `action_scale`
/// before entering the trunk.
#[derive(Debug, Clone)]
pub struct CriticNetwork<T> {
    pub architecture: ArchitectureConfig,
    pub trunk: Trunk<T>,
    pub action_scale: T,
}

#[derive(Debug, Clone)]
pub struct CriticCache<T> {
    trunk: TrunkCache<T>,
}

impl<T: Real> CriticNetwork<T> {
    fn build<R: Rng + ?Sized>(architecture: ArchitectureConfig, action_scale: T, rng: Option<&mut R>) -> Result<Self> {
        if architecture.role != Role::Critic {
            return Err(Error::Configuration("actor layout used for a critic".into()));
        }
        if action_scale <= T::zero() {
            return Err(Error::Configuration("critic action scale must be positive".into()));
        }
        let trunk = Trunk::build(&architecture, rng)?;
        Ok(Self {
            architecture,
            trunk,
            action_scale,
        })
    }

    pub fn new<R: Rng + ?Sized>(architecture: ArchitectureConfig, action_scale: T, rng: &mut R) -> Result<Self> {
        Self::build(architecture, action_scale, Some(rng))
    }

    pub fn zeros(architecture: ArchitectureConfig, action_scale: T) -> Result<Self> {
        Self::build::<rand::rngs::ThreadRng>(architecture, action_scale, None)
    }

    fn input(&self, obs: &[T], action: &[T]) -> Result<Vec<T>> {
        let (o, a) = (self.architecture.obs_dim, self.architecture.action_dim);
        if obs.len() != o {
            return Err(Error::dim("critic observation", o, obs.len()));
        }
        if action.len() != a {
            return Err(Error::dim("critic action", a, action.len()));
        }
        let mut x = Vec::with_capacity(o + a);
        x.extend_from_slice(obs);
        x.extend(action.iter().map(|&v| v / self.action_scale));
        ensure_finite(&x, "critic input")?;
        Ok(x)
    }

    pub fn forward(&self, obs: &[T], action: &[T]) -> Result<(T, CriticCache<T>)> {
        let x = self.input(obs, action)?;
        let (out, trunk) = self.trunk.forward(&x)?;
        ensure_finite(&out, "critic value")?;
        Ok((out[0], CriticCache { trunk }))
    }

    /// Accumulates ∂L/∂params for upstream ∂L/∂Q and returns (∂L/∂obs, ∂L/∂action).
    pub fn backward(&self, cache: &CriticCache<T>, d_q: T, grads: &mut [T]) -> Result<(Vec<T>, Vec<T>)> {
        if grads.len() != self.n_params() {
            return Err(Error::dim("critic gradient buffer", self.n_params(), grads.len()));
        }
        let dx = self.trunk.backward(&cache.trunk, &[d_q], grads)?;
        let o = self.architecture.obs_dim;
        let d_obs = dx[..o].to_vec();
        let d_act = dx[o..].iter().map(|&v| v / self.action_scale).collect();
        Ok((d_obs, d_act))
    }
}

impl<T: Real> Parametric<T> for CriticNetwork<T> {
    fn n_params(&self) -> usize {
        self.trunk.n_params()
    }

    fn params(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(self.n_params());
        self.trunk.params_into(&mut v);
        v
    }

    fn set_params(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::dim("critic parameters", self.n_params(), flat.len()));
        }
        self.trunk.load(flat)?;
        Ok(())
    }

    fn param_groups(&self) -> Vec<ParamGroup<T>> {
        let mut g = Vec::new();
        self.trunk.groups_into(&mut g);
        g
    }
}

/// Policy mean and clamped log-std for one observation.
pub fn actor_forward<T: Real>(actor: &ActorNetwork<T>, obs: &[T]) -> Result<(Vec<T>, Vec<T>)> {
    let (m, s, _) = actor.forward(obs)?;
    Ok((m, s))
}

pub fn critic_forward<T: Real>(critic: &CriticNetwork<T>, obs: &[T], action: &[T]) -> Result<T> {
    Ok(critic.forward(obs, action)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::EncodingWeights;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arch(role: Role, s: &str, enc: EncodingWeights) -> ArchitectureConfig {
        ArchitectureConfig::parse(role, s, enc).unwrap()
    }

    const OBS: [f64; 6] = [0.3, -0.2, 0.55, -0.4, 0.1, 0.25];

    fn actor_loss(net: &ActorNetwork<f64>, cm: &[f64], cs: &[f64]) -> f64 {
        let (m, s, _) = net.forward(&OBS).unwrap();
        m.iter().zip(cm).map(|(a, b)| a * b).sum::<f64>() + s.iter().zip(cs).map(|(a, b)| a * b).sum::<f64>()
    }

    fn check_actor(src: &str, enc: EncodingWeights) {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = ActorNetwork::new(arch(Role::Actor, src, enc), &mut rng).unwrap();
        let (cm, cs) = ([0.7, -1.3], [0.4, 0.9]);
        let (_, _, cache) = net.forward(&OBS).unwrap();
        let mut g = vec![0.0; net.n_params()];
        net.backward(&cache, &cm, &cs, &mut g).unwrap();
        let p0 = net.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut n2 = net.clone();
            let mut p = p0.clone();
            p[i] += h;
            n2.set_params(&p).unwrap();
            let up = actor_loss(&n2, &cm, &cs);
            p[i] -= 2.0 * h;
            n2.set_params(&p).unwrap();
            let dn = actor_loss(&n2, &cm, &cs);
            let fd = (up - dn) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + fd.abs()), "{src} param {i}: fd {fd} vs {}", g[i]);
        }
    }

    fn check_critic(src: &str, enc: EncodingWeights) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = CriticNetwork::new(arch(Role::Critic, src, enc), 10.0, &mut rng).unwrap();
        let act = [3.0, -7.5];
        let (_, cache) = net.forward(&OBS, &act).unwrap();
        let mut g = vec![0.0; net.n_params()];
        let (d_obs, d_act) = net.backward(&cache, 1.0, &mut g).unwrap();
        let h = 1e-6;
        let q = |n: &CriticNetwork<f64>, o: &[f64], a: &[f64]| n.forward(o, a).unwrap().0;
        let p0 = net.params();
        for i in 0..p0.len() {
            let mut n2 = net.clone();
            let mut p = p0.clone();
            p[i] += h;
            n2.set_params(&p).unwrap();
            let up = q(&n2, &OBS, &act);
            p[i] -= 2.0 * h;
            n2.set_params(&p).unwrap();
            let fd = (up - q(&n2, &OBS, &act)) / (2.0 * h);
            assert!((fd - g[i]).abs() <= 1e-5 * (1.0 + fd.abs()), "{src} param {i}: fd {fd} vs {}", g[i]);
        }
        for i in 0..6 {
            let (mut a, mut b) = (OBS, OBS);
            a[i] += h;
            b[i] -= h;
            let fd = (q(&net, &a, &act) - q(&net, &b, &act)) / (2.0 * h);
            assert!((fd - d_obs[i]).abs() <= 1e-5 * (1.0 + fd.abs()));
        }
        for i in 0..2 {
            let (mut a, mut b) = (act, act);
            a[i] += h;
            b[i] -= h;
            let fd = (q(&net, &OBS, &a) - q(&net, &OBS, &b)) / (2.0 * h);
            assert!((fd - d_act[i]).abs() <= 1e-5 * (1.0 + fd.abs()));
        }
    }

    #[test]
    fn classical_actor_gradient_matches_finite_differences() {
        check_actor("(6,7)(8,(1,1))", EncodingWeights::PerLayer);
    }

    #[test]
    fn hybrid_actor_gradient_matches_finite_differences() {
        check_actor("(6,VQA(3 layers),(1,1))", EncodingWeights::Shared);
        check_actor("(6,VQA(2 layers),(1,1))", EncodingWeights::PerLayer);
    }

    #[test]
    fn classical_critic_gradient_matches_finite_differences() {
        check_critic("(8,16)(16,16)(16,1)", EncodingWeights::PerLayer);
    }

    #[test]
    fn hybrid_critic_gradient_matches_finite_differences() {
        check_critic("(8,VQA(3 layers),4,1)", EncodingWeights::PerLayer);
    }

    #[test]
    fn counts_agree_with_architecture() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for (role, s, enc) in [
            (Role::Actor, "(6,7)(8,(1,1))", EncodingWeights::PerLayer),
            (Role::Actor, "(6,VQA(4 layers),(1,1))", EncodingWeights::Shared),
            (Role::Critic, "(8,64)(64,64)(64,1)", EncodingWeights::PerLayer),
            (Role::Critic, "(8,VQA(20 layers),8,1)", EncodingWeights::PerLayer),
        ] {
            let a = arch(role, s, enc);
            let n = match role {
                Role::Actor => parameter_count(&ActorNetwork::<f64>::new(a.clone(), &mut rng).unwrap()),
                Role::Critic => parameter_count(&CriticNetwork::<f64>::new(a.clone(), 1.0, &mut rng).unwrap()),
            };
            assert_eq!(n, a.n_params(), "{s}");
        }
    }

    #[test]
    fn params_and_groups_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = arch(Role::Critic, "(8,VQA(2 layers),3,1)", EncodingWeights::PerLayer);
        let src = CriticNetwork::<f64>::new(a.clone(), 2.0, &mut rng).unwrap();
        let mut dst = CriticNetwork::<f64>::zeros(a, 2.0).unwrap();
        dst.load_groups(&src.param_groups()).unwrap();
        assert_eq!(dst.params(), src.params());
        let names: Vec<_> = src.param_groups().into_iter().map(|g| g.name).collect();
        assert_eq!(
            names,
            ["pre.0.weight", "pre.0.bias", "vqc.encode", "vqc.rot", "post.0.weight", "post.0.bias"]
        );
        let mut bad = src.param_groups();
        bad[2].values.pop();
        assert!(matches!(dst.load_groups(&bad), Err(Error::Checkpoint(_))));
        assert!(dst.set_params(&[0.0; 3]).is_err());
    }

    #[test]
    fn zero_networks_are_neutral() {
        let actor = ActorNetwork::<f64>::zeros(arch(Role::Actor, "(6,7)(8,(1,1))", EncodingWeights::PerLayer)).unwrap();
        let (m, s) = actor_forward(&actor, &OBS).unwrap();
        assert_eq!(m, vec![0.0; 2]);
        assert_eq!(s, vec![0.0; 2]);
        let critic = CriticNetwork::<f64>::zeros(arch(Role::Critic, "(8,VQA(2 layers),3,1)", EncodingWeights::PerLayer), 1.0).unwrap();
        assert_eq!(critic_forward(&critic, &OBS, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn clamped_log_std_blocks_gradient() {
        let a = arch(Role::Actor, "(6,7)(8,(1,1))", EncodingWeights::PerLayer);
        let mut net = ActorNetwork::<f64>::zeros(a).unwrap();
        net.log_std_head.bias = vec![5.0, -30.0];
        let (_, s, cache) = net.forward(&OBS).unwrap();
        assert_eq!(s, vec![LOG_MAX, LOG_MIN]);
        let mut g = vec![0.0; net.n_params()];
        net.backward(&cache, &[0.0, 0.0], &[1.0, 1.0], &mut g).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    const LOG_MAX: f64 = super::super::LOG_STD_MAX;
    const LOG_MIN: f64 = super::super::LOG_STD_MIN;

    #[test]
    fn rejects_bad_inputs() {
        let a = arch(Role::Critic, "(8,16)(16,1)", EncodingWeights::PerLayer);
        assert!(ActorNetwork::<f64>::zeros(a.clone()).is_err());
        assert!(CriticNetwork::<f64>::zeros(a.clone(), 0.0).is_err());
        let c = CriticNetwork::<f64>::zeros(a, 1.0).unwrap();
        assert!(c.forward(&OBS[..5], &[0.0, 0.0]).is_err());
        assert!(matches!(c.forward(&OBS, &[f64::NAN, 0.0]), Err(Error::Divergence(_))));
    }
}
