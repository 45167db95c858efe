//! Short MADDPG training run on the desk scenario followed by a greedy
//! evaluation against the two heuristics.
//!
//! cargo run --release --example train_maddpg -- [episodes] [scheme]

use cfmec::harness::{evaluate, load_policy, report, run_train, ExperimentConfig, Scheme};
use cfmec::marl::{LocalFirst, OffloadFirst};

fn main() -> cfmec::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args
        .next()
        .map_or(Ok(50), |a| a.parse())
        .expect("episode count");
    let scheme = Scheme::parse(&args.next().unwrap_or_else(|| "maddpg".into()))?;

    let mut cfg = ExperimentConfig::desk();
    cfg.train.episodes = episodes;
    cfg.eval.episodes = 20;
    cfg.output_dir = std::env::temp_dir().join(format!("cfmec_{}", scheme.name()));

    let art = run_train(&cfg, scheme, None)?;
    report::write_training_curves(&art.dir, &art.records)?;
    for r in art.records.iter().step_by((episodes / 10).max(1)) {
        println!(
            "episode {:>5}: reward {:>11.4e}  success {:.3}  energy {:.3e} J  sigma {:.3}",
            r.episode, r.total_reward, r.success_rate, r.mean_energy, r.sigma
        );
    }

    let mut trained = load_policy(&art.final_checkpoint, &cfg, scheme.name())?;
    for r in [
        evaluate(&cfg, &mut trained, None)?,
        evaluate(&cfg, &mut LocalFirst, None)?,
        evaluate(&cfg, &mut OffloadFirst, None)?,
    ] {
        println!(
            "{:<18} success {:.4}  energy {:.3e} J",
            r.policy, r.success_rate, r.mean_energy
        );
    }
    println!("artifacts in {}", art.dir.display());
    Ok(())
}
