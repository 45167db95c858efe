use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::metrics::MetricsRecord;
use super::run::{BaselineRow, SweepRow};
use crate::error::{Error, Result};
use crate::marl::EvalReport;

/// Writes `rows` with a header line, creating the parent directory.
pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("csv output for {}: {other:?}", path.display())),
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "n/a".into(), |v| format!("{v:.4e}"))
}

pub fn baseline_summary(rows: &[BaselineRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>14} {:>10} {:>12}",
        "scheme", "energy_J", "success", "delay_s"
    );
    for r in rows {
        let success = r
            .success_rate
            .map_or_else(|| "n/a".into(), |v| format!("{v:.4}"));
        let _ = writeln!(
            s,
            "{:<20} {:>14} {:>10} {:>12}",
            r.scheme,
            opt(r.mean_energy),
            success,
            opt(r.mean_delay)
        );
    }
    s
}

pub fn sweep_summary(rows: &[SweepRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<18} {:>8} {:>6} {:>8} {:>14} {:>10} {:>14}",
        "axis", "value", "K", "cluster", "energy_J", "success", "reward/user"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<18} {:>8} {:>6} {:>8} {:>14.4e} {:>10.4} {:>14.4e}",
            r.axis,
            r.value,
            r.num_users,
            r.cluster_size,
            r.mean_energy,
            r.success_rate,
            r.reward_per_user
        );
    }
    s
}

pub fn eval_summary(r: &EvalReport) -> String {
    format!(
        "policy {}\nepisodes {}  tasks {}\nsuccess rate {:.4}\nenergy per user per step {:.4e} J\n\
         delay mean {:.4e} s  p50 {:.4e}  p90 {:.4e}  p99 {:.4e}\nunfinished tasks {}\nmean episode reward {:.4e}\n",
        r.policy,
        r.episodes,
        r.tasks,
        r.success_rate,
        r.mean_energy,
        r.mean_delay,
        r.delay_p50,
        r.delay_p90,
        r.delay_p99,
        r.unfinished,
        r.mean_episode_reward
    )
}

#[derive(Serialize)]
struct CurvePoint {
    episode: usize,
    value: f64,
}

#[derive(Serialize)]
struct EnergyBar<'a> {
    scheme: &'a str,
    mean_energy: f64,
}

/// Plot-ready series: `reward_curve.csv`, `success_curve.csv`.
pub fn write_training_curves(dir: &Path, records: &[MetricsRecord]) -> Result<()> {
    let series = |f: fn(&MetricsRecord) -> f64| -> Vec<CurvePoint> {
        records
            .iter()
            .map(|r| CurvePoint {
                episode: r.episode,
                value: f(r),
            })
            .collect()
    };
    write_csv(&dir.join("reward_curve.csv"), &series(|r| r.total_reward))?;
    write_csv(&dir.join("success_curve.csv"), &series(|r| r.success_rate))
}

/// `baseline.csv`, `energy_bars.csv` and `baseline.txt`.
pub fn write_baseline(dir: &Path, rows: &[BaselineRow]) -> Result<()> {
    write_csv(&dir.join("baseline.csv"), rows)?;
    let bars: Vec<EnergyBar> = rows
        .iter()
        .filter_map(|r| {
            r.mean_energy.map(|e| EnergyBar {
                scheme: &r.scheme,
                mean_energy: e,
            })
        })
        .collect();
    write_csv(&dir.join("energy_bars.csv"), &bars)?;
    std::fs::write(dir.join("baseline.txt"), baseline_summary(rows)).map_err(|e| Error::io(dir, e))
}

/// `sweep.csv` and `sweep.txt`.
pub fn write_sweep(dir: &Path, rows: &[SweepRow]) -> Result<()> {
    write_csv(&dir.join("sweep.csv"), rows)?;
    std::fs::write(dir.join("sweep.txt"), sweep_summary(rows)).map_err(|e| Error::io(dir, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_csv_schema() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![
            BaselineRow {
                scheme: "maddpg".into(),
                available: false,
                mean_energy: None,
                success_rate: None,
                mean_delay: None,
            },
            BaselineRow {
                scheme: "local_first_fpc".into(),
                available: true,
                mean_energy: Some(1e-3),
                success_rate: Some(0.95),
                mean_delay: Some(1e-3),
            },
        ];
        write_baseline(dir.path(), &rows).unwrap();
        let text = std::fs::read_to_string(dir.path().join("baseline.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "scheme,available,mean_energy,success_rate,mean_delay"
        );
        assert_eq!(lines.next().unwrap(), "maddpg,false,,,");
        let bars = std::fs::read_to_string(dir.path().join("energy_bars.csv")).unwrap();
        assert_eq!(bars.lines().count(), 2);
        assert!(baseline_summary(&rows).contains("n/a"));
    }
}
