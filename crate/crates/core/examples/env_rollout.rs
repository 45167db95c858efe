//! Steps the environment with the two heuristic policies and writes a
//! per-step trace of the local-first run as JSON lines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfmec::env::{Env, TraceRecord};
use cfmec::harness::{ExperimentConfig, JsonLines};
use cfmec::marl::{evaluate_policy, LocalFirst, OffloadFirst, Policy};

fn main() -> cfmec::Result<()> {
    let cfg = ExperimentConfig::desk();
    let mut env = Env::new(cfg.env_config())?;

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut obs = env.reset(&mut rng)?;
    println!("first observations: {obs:?}");
    for _ in 0..3 {
        let actions = OffloadFirst.decide(&env, &obs)?;
        let res = env.step(&actions, &mut rng)?;
        println!(
            "step {}: reward {:.3e}, met {}/{}",
            env.step_index(),
            res.outcome.reward,
            res.outcome.deadlines_met(),
            res.outcome.users.len()
        );
        obs = res.observations;
    }

    let path = std::env::temp_dir().join("cfmec_trace.jsonl");
    let mut sink = JsonLines::create(&path)?;
    let mut write = |r: &TraceRecord| sink.append(r);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let local = evaluate_policy(&mut env, &mut LocalFirst, 5, &mut rng, Some(&mut write))?;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let offload = evaluate_policy(&mut env, &mut OffloadFirst, 5, &mut rng, None)?;
    for r in [local, offload] {
        println!(
            "{:<18} success {:.4}  energy {:.3e} J  p90 delay {:.3e} s",
            r.policy, r.success_rate, r.mean_energy, r.delay_p90
        );
    }
    println!("trace written to {}", path.display());
    Ok(())
}
