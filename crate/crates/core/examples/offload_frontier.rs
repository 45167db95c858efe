//! Energy, success and penalized cost of offload-only policies whose
//! power is a scaled fractional-power-control level. Shows where the
//! reward puts its optimum relative to the deadline.

use cfmec::env::{Action, Env, Observation};
use cfmec::harness::{evaluate, ExperimentConfig};
use cfmec::marl::Policy;

struct ScaledFpc(f64);

impl Policy for ScaledFpc {
    fn name(&self) -> &str {
        "scaled_fpc"
    }

    fn decide(&mut self, env: &Env, _obs: &[Observation]) -> cfmec::Result<Vec<Action>> {
        Ok(env
            .fpc_eta()?
            .into_iter()
            .map(|e| Action::new(0.0, (e * self.0).min(1.0)))
            .collect())
    }
}

fn main() -> cfmec::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.eval.episodes = 20;
    let tasks = (cfg.channel.num_users * cfg.episode.steps_per_episode) as f64;
    println!(
        "{:>8} {:>9} {:>12} {:>16}",
        "scale", "success", "energy (J)", "cost/task (J)"
    );
    for c in [1e-4, 1e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0] {
        let r = evaluate(&cfg, &mut ScaledFpc(c), None)?;
        println!(
            "{:>8} {:>9.4} {:>12.3e} {:>16.3e}",
            c,
            r.success_rate,
            r.mean_energy,
            -r.mean_episode_reward / tasks
        );
    }
    Ok(())
}
