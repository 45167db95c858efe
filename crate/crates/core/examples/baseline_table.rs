//! Compares all schemes on the same evaluation episodes. Learned schemes
//! get a brief training run first; pass an episode count to change it.

use std::collections::BTreeMap;

use cfmec::harness::{baseline_table, report, run_train, ExperimentConfig, Scheme};

fn main() -> cfmec::Result<()> {
    let episodes = std::env::args()
        .nth(1)
        .map_or(Ok(10), |a| a.parse())
        .expect("episode count");
    let mut cfg = ExperimentConfig::desk();
    cfg.train.episodes = episodes;
    cfg.eval.episodes = 20;
    let root = std::env::temp_dir().join("cfmec_baseline");

    let mut checkpoints = BTreeMap::new();
    for scheme in Scheme::ALL.into_iter().filter(|s| s.is_learned()) {
        let mut c = cfg.clone();
        c.output_dir = root.join(scheme.name());
        let art = run_train(&c, scheme, None)?;
        checkpoints.insert(scheme, art.final_checkpoint);
    }

    let rows = baseline_table(&cfg, &checkpoints)?;
    report::write_baseline(&root, &rows)?;
    print!("{}", report::baseline_summary(&rows));
    println!("csv in {}", root.display());
    Ok(())
}
