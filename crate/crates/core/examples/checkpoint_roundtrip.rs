//! Saves a learner, restores it and shows that evaluation is unchanged.

use cfmec::env::Env;
use cfmec::harness::{evaluate, ExperimentConfig};
use cfmec::marl::{train_maddpg, LearnerSnapshot, TrainedPolicy};
use cfmec::neural::checkpoint;

fn main() -> cfmec::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.train.episodes = 5;
    cfg.eval.episodes = 5;
    let mut env = Env::new(cfg.env_config())?;
    let learner = train_maddpg(&mut env, cfg.train_config(), |_, s| {
        println!("episode {}: reward {:.4e}", s.episode, s.total_reward);
        Ok(())
    })?;

    let path = std::env::temp_dir().join("cfmec_learner.json");
    checkpoint::save(&path, &learner.snapshot())?;
    let restored: LearnerSnapshot = checkpoint::load(&path)?;

    let before = evaluate(
        &cfg,
        &mut TrainedPolicy::from_learner("before", &learner),
        None,
    )?;
    let after = evaluate(
        &cfg,
        &mut TrainedPolicy::from_snapshot("after", &restored)?,
        None,
    )?;
    println!(
        "before: energy {:.6e} J, success {:.4}",
        before.mean_energy, before.success_rate
    );
    println!(
        "after:  energy {:.6e} J, success {:.4}",
        after.mean_energy, after.success_rate
    );
    println!(
        "identical: {}",
        before.mean_energy == after.mean_energy && before.success_rate == after.success_rate
    );
    Ok(())
}
