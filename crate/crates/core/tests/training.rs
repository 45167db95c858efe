use cfmec::env::Env;
use cfmec::harness::{evaluate, load_policy, run_train, ExperimentConfig, Scheme};
use cfmec::marl::{train_centralized_ddpg, train_maddpg, EpisodeStats, Learner};

fn smoke_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk();
    cfg.channel.num_aps = 9;
    cfg.channel.num_users = 2;
    cfg.access.cluster_size = 4;
    cfg.train.episodes = 30;
    cfg.train.hidden_dims = vec![32, 32];
    cfg.train.batch_size = 32;
    cfg.seed = 5;
    cfg
}

/// One user, no offloading needed: a fast local CPU with tiny switched
/// capacitance makes deadline-meeting cheap and fully observable.
fn generous_config(seed: u64, dir: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::desk();
    cfg.output_dir = dir.to_path_buf();
    cfg.seed = seed;
    cfg.channel.num_aps = 4;
    cfg.channel.num_users = 1;
    cfg.access.cluster_size = 4;
    cfg.compute.f_max = 6e9;
    cfg.compute.switched_capacitance = 1e-32;
    cfg.compute.task_min = 4800.0;
    cfg.compute.task_max = 5200.0;
    cfg.episode.steps_per_episode = 50;
    cfg.train.episodes = 100;
    cfg.train.hidden_dims = vec![64, 64];
    cfg.train.batch_size = 64;
    cfg.train.reward_scale = 1e6;
    cfg.eval.episodes = 20;
    cfg
}

#[test]
fn smoke_run_fills_buffer_and_stays_finite() {
    for centralized in [false, true] {
        let cfg = smoke_config();
        let mut env = Env::new(cfg.env_config()).unwrap();
        let mut stats: Vec<EpisodeStats> = Vec::new();
        let learner: Learner = if centralized {
            train_centralized_ddpg(&mut env, cfg.train_config(), |_, s| {
                stats.push(s.clone());
                Ok(())
            })
        } else {
            train_maddpg(&mut env, cfg.train_config(), |_, s| {
                stats.push(s.clone());
                Ok(())
            })
        }
        .unwrap();
        assert_eq!(stats.len(), 30);
        for a in &learner.agents {
            assert_eq!(a.buffer.len(), 3000);
            assert!(a
                .actor
                .params()
                .iter()
                .chain(a.critic.params())
                .all(|x| x.is_finite()));
        }
        for s in &stats {
            assert!(s.total_reward.is_finite() && s.total_reward <= 0.0);
            assert!(s.mean_energy.is_finite());
            assert!(s.mean_critic_loss.is_finite());
        }
    }
}

#[test]
fn generous_scenario_is_learned_to_full_success() {
    for seed in [1, 2, 3] {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = generous_config(seed, tmp.path());
        let art = run_train(&cfg, Scheme::Maddpg, None).unwrap();
        let mut policy = load_policy(&art.final_checkpoint, &cfg, "maddpg").unwrap();
        let report = evaluate(&cfg, &mut policy, None).unwrap();
        assert!(report.success_rate >= 0.99, "seed {seed}: {report:?}");
    }
}

#[test]
fn reward_improves_over_training() {
    let mut cfg = smoke_config();
    cfg.train.episodes = 60;
    let mut env = Env::new(cfg.env_config()).unwrap();
    let mut rewards = Vec::new();
    train_maddpg(&mut env, cfg.train_config(), |_, s| {
        rewards.push(s.total_reward);
        Ok(())
    })
    .unwrap();
    let tenth = rewards.len() / 10;
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let first = mean(&rewards[..tenth]);
    let last = mean(&rewards[rewards.len() - tenth..]);
    assert!(last > first, "first {first:e} last {last:e}");
}

#[test]
fn seeded_training_is_repeatable_in_memory() {
    let run = || {
        let cfg = smoke_config();
        let mut env = Env::new(cfg.env_config()).unwrap();
        let mut out = Vec::new();
        let mut c = cfg.train_config();
        c.episodes = 5;
        train_maddpg(&mut env, c, |_, s| {
            out.push(s.clone());
            Ok(())
        })
        .unwrap();
        out
    };
    assert_eq!(run(), run());
}
