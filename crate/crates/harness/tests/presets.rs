use vqsac_harness::params::param_report;
use vqsac_harness::presets::{preset, PRESETS};

/// name, actor layout, critic layout, quoted (actor, critic, total), computed (actor, critic, total).
type Row = (&'static str, &'static str, &'static str, [usize; 3], [usize; 3]);

const TABLE: [Row; 7] = [
    ("sac_classical", "(6,7)(8,(1,1))", "(8,64,64,1)", [149, 4608, 18581], [149, 4608, 18581]),
    ("qsac_actor", "(6,VQA(4 layers),(1,1))", "(8,64)(64,64)(64,1)", [100, 4608, 18532], [100, 4608, 18532]),
    ("qsac_actor_critic_reduced", "(6, VQA(4 layers), (1,1))", "(8,16)(16,16)(16,1)", [100, 384, 1636], [100, 384, 1636]),
    ("qsac_critic", "(6,7)(8,(1,1))", "(8,VQA(20 layers),8,1)", [149, 650, 2749], [149, 713, 3001]),
    ("sac_3000", "(6,7)(8,(1,1))", "(8,22)(22,21)(21,1)", [149, 719, 3025], [149, 638, 2701]),
    ("sac_270k", "(6,7)(8,(1,1))", "(8,256)(256,256)(256,1)", [149, 67840, 271509], [149, 67584, 270485]),
    ("full_qsac", "(6,VQA(5 layers),8,1)", "(8,VQA(20 layers),8,1)", [112, 650, 2712], [118, 713, 2970]),
];

/// Largest relative gap tolerated between a computed and a quoted count.
const MAX_REL_GAP: f64 = 0.15;

#[test]
fn presets_carry_the_reference_table() {
    assert_eq!(PRESETS.len(), TABLE.len());
    for (name, actor, critic, quoted, computed) in TABLE {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.name, name);
        assert_eq!(cfg.actor.neurons, actor, "{name}");
        assert_eq!(cfg.critic.neurons, critic, "{name}");
        assert_eq!(cfg.actor.reference_params, Some(quoted[0]), "{name}");
        assert_eq!(cfg.critic.reference_params, Some(quoted[1]), "{name}");
        assert_eq!(cfg.reference_total_params, Some(quoted[2]), "{name}");
        let p = param_report(&cfg).unwrap();
        let got = [p.actor, p.critic_reported, p.total_reported];
        assert_eq!(got, computed, "{name}");
        for (g, q) in got.iter().zip(quoted) {
            let gap = (*g as f64 - q as f64).abs() / q as f64;
            println!("{name:<27} computed {g:>7} quoted {q:>7} gap {:>5.1}%", 100.0 * gap);
            assert!(gap <= MAX_REL_GAP, "{name}: {g} vs {q}");
        }
    }
}

#[test]
fn presets_share_the_training_defaults() {
    for (name, _) in PRESETS {
        let cfg = preset(name).unwrap();
        assert_eq!(cfg.sac, vqsac::SacHyperparams::default(), "{name}");
        assert_eq!(cfg.env, vqsac::EnvConfig::default(), "{name}");
        assert_eq!((cfg.n_seeds, cfg.base_seed), (10, 0), "{name}");
    }
}
