use vqsac::checkpoint::Checkpoint;
use vqsac::env::{ArmEnv, EnvConfig};
use vqsac::hybrid::{squashed_sample, ActorNetwork, ArchitectureConfig, Role};
use vqsac::quantum::EncodingWeights;
use vqsac::sac::{train_run, ReplayBuffer, SacAgent, SacHyperparams};

fn arch(role: Role, src: &str) -> ArchitectureConfig {
    ArchitectureConfig::parse(role, src, EncodingWeights::PerLayer).unwrap()
}

fn small_agent(seed: u64) -> SacAgent<f64> {
    let hyper = SacHyperparams { batch_size: 16, warmup_steps: 100, ..SacHyperparams::default() };
    SacAgent::new(arch(Role::Actor, "(6,7)(8,(1,1))"), arch(Role::Critic, "(8,16)(16,16)(16,1)"), hyper, 1000.0, seed).unwrap()
}

fn short_env(seed: u64) -> ArmEnv<f64> {
    ArmEnv::new(EnvConfig { max_steps: 40, ..EnvConfig::default() }, seed).unwrap()
}

fn returns(seed: u64) -> Vec<f64> {
    let mut agent = small_agent(seed);
    let mut env = short_env(seed + 1);
    let mut buffer = ReplayBuffer::new(10_000).unwrap();
    let log = train_run(&mut agent, &mut env, &mut buffer, 6, |_, _| Ok(())).unwrap();
    log.iter().map(|s| s.episode_return).collect()
}

#[test]
fn training_is_deterministic_per_seed() {
    let a = returns(3);
    assert_eq!(a, returns(3));
    assert_ne!(a, returns(4));
    assert!(a.iter().all(|r| r.is_finite()));
}

#[test]
fn checkpoint_restores_the_policy() {
    let agent = small_agent(8);
    let mut ck = Checkpoint::<f64>::new();
    ck.set_meta("note", "round trip").unwrap();
    ck.add_network("actor", agent.actor()).unwrap();
    let back = Checkpoint::<f64>::parse(&ck.to_text()).unwrap();
    assert_eq!(back.meta("note"), Some("round trip"));
    let mut actor = ActorNetwork::zeros(arch(Role::Actor, "(6,7)(8,(1,1))")).unwrap();
    back.load_network("actor", &mut actor).unwrap();
    let obs = [0.2, -0.4, 0.1, -0.9, 0.3, 0.0];
    assert_eq!(actor.forward(&obs).unwrap().0, agent.actor().forward(&obs).unwrap().0);
}

#[test]
fn squashed_log_prob_matches_change_of_variables() {
    let (mean, log_std, noise) = ([0.3, -1.2], [-0.5, 0.4], [0.7, -1.1]);
    let s = squashed_sample(&mean, &log_std, &noise, 1000.0).unwrap();
    let mut oracle = 0.0;
    for i in 0..2 {
        let sd: f64 = f64::exp(log_std[i]);
        let u = mean[i] + sd * noise[i];
        let gauss = -0.5 * ((u - mean[i]) / sd).powi(2) - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
        oracle += gauss - (1.0 - u.tanh().powi(2) + 1e-6).ln();
        assert!((s.action[i] - 1000.0 * u.tanh()).abs() < 1e-9);
    }
    assert!((s.log_prob - oracle).abs() < 1e-12);
}

#[test]
fn same_seed_gives_the_same_targets() {
    let (mut a, mut b) = (short_env(11), short_env(11));
    for _ in 0..20 {
        assert_eq!(a.reset(), b.reset());
    }
}
