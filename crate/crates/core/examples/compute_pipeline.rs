//! Splits a few tasks between the local CPU and the edge server and prints
//! delays, energy and the shared reward of one step.

use cfmec::compute::{evaluate_step, ComputeConfig};
use cfmec::env::joint_reward;

fn main() -> cfmec::Result<()> {
    let cfg = ComputeConfig::default();
    let bits = [2500.0, 5000.0, 7500.0, 6000.0];
    let alpha = [1.0, 0.5, 0.0, 0.8];
    let eta = [0.2, 0.5, 1.0, 0.1];
    let power: Vec<f64> = eta.iter().map(|e| e * 0.1).collect();
    let rates = [8e6, 1.2e7, 2e7, 3e6];

    let users = evaluate_step(&bits, &alpha, &eta, &power, &rates, &cfg)?;
    println!(
        "{:>6} {:>6} {:>9} {:>9} {:>10} {:>10} {:>10} {:>10} {:>5}",
        "bits", "alpha", "local", "offload", "t_local", "t_tr", "t_comp", "energy", "met"
    );
    for u in &users {
        println!(
            "{:>6} {:>6} {:>9.1} {:>9.1} {:>10.3e} {:>10.3e} {:>10.3e} {:>10.3e} {:>5}",
            u.task.bits,
            u.alpha,
            u.task.local_bits,
            u.task.offload_bits,
            u.t_local,
            u.t_tr,
            u.t_comp,
            u.energy,
            u.deadline_met
        );
    }
    println!(
        "edge shares (GHz): {:?}",
        users.iter().map(|u| u.f_edge / 1e9).collect::<Vec<_>>()
    );
    println!("reward: {:.4e}", joint_reward(&users));
    Ok(())
}
