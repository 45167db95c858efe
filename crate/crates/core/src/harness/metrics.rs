use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marl::EpisodeStats;

/// One training episode. Wall-clock time is kept out of this record so that
/// identical seeds give byte-identical streams; see [`TimingRecord`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsRecord {
    pub episode: usize,
    pub total_reward: f64,
    pub success_rate: f64,
    /// Joules per user per step.
    pub mean_energy: f64,
    /// Seconds, over tasks that finished; absent when none did.
    pub mean_delay: Option<f64>,
    pub unfinished: usize,
    pub sigma: f64,
    pub critic_loss: f64,
    pub mean_q: f64,
}

impl From<&EpisodeStats> for MetricsRecord {
    fn from(s: &EpisodeStats) -> Self {
        Self {
            episode: s.episode,
            total_reward: s.total_reward,
            success_rate: s.success_rate,
            mean_energy: s.mean_energy,
            mean_delay: s.mean_delay.is_finite().then_some(s.mean_delay),
            unfinished: s.unfinished,
            sigma: s.sigma,
            critic_loss: s.mean_critic_loss,
            mean_q: s.mean_q,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub episode: usize,
    pub wall_clock_s: f64,
}

/// Append-only JSON-lines file; every line is flushed as it is written.
#[derive(Debug)]
pub struct JsonLines {
    path: PathBuf,
    file: File,
}

impl JsonLines {
    pub fn create(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<()> {
        let mut line = serde_json::to_string(record)?;
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| Error::io(&self.path, e))
    }
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    BufReader::new(file)
        .lines()
        .map(|line| {
            let line = line.map_err(|e| Error::io(path, e))?;
            Ok(serde_json::from_str(&line)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        let mut w = JsonLines::create(&path).unwrap();
        let rec = |e| MetricsRecord {
            episode: e,
            total_reward: -0.1 * e as f64,
            success_rate: 0.5,
            mean_energy: 1e-6,
            mean_delay: if e == 0 { None } else { Some(1e-4) },
            unfinished: 0,
            sigma: 0.2,
            critic_loss: 0.0,
            mean_q: -1.0,
        };
        for e in 0..3 {
            w.append(&rec(e)).unwrap();
        }
        let back: Vec<MetricsRecord> = read_jsonl(&path).unwrap();
        assert_eq!(back, (0..3).map(rec).collect::<Vec<_>>());
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("\"mean_delay\":null"));
    }
}
