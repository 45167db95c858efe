//! Per-user energy and success of the local-first heuristic as the
//! serving cluster grows, then the offload-first heuristic as users are
//! added.

use cfmec::harness::{report, run_sweep, ExperimentConfig, Scheme, SweepAxis};

fn main() -> cfmec::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    cfg.output_dir = std::env::temp_dir().join("cfmec_sweep");

    cfg.sweep = SweepAxis::ClusterFraction(vec![0.1, 0.2, 0.5, 1.0]);
    let rows = run_sweep(&cfg, Scheme::LocalFirstFpc)?;
    print!("{}", report::sweep_summary(&rows));

    cfg.sweep = SweepAxis::NumUsers(vec![2, 4, 6, 8]);
    let rows = run_sweep(&cfg, Scheme::OffloadFirstFpc)?;
    print!("{}", report::sweep_summary(&rows));
    Ok(())
}
