//! Per-episode training records and their CSV form.

use std::path::Path;

use crate::error::{HarnessError, Result};

pub const EPISODE_COLUMNS: [&str; 7] = ["run_id", "seed", "episode", "steps", "return", "solved", "wall_ms"];

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub run_id: String,
    pub seed: u64,
    /// Zero-based.
    pub episode: usize,
    pub steps: usize,
    pub episode_return: f64,
    pub solved: bool,
    /// Zero unless wall-clock timing was requested, so files stay reproducible.
    pub wall_ms: u64,
}

pub fn write_episode_csv(path: &Path, records: &[EpisodeRecord]) -> Result<()> {
    let csv_err = |e: csv::Error| HarnessError::data(path, e.to_string());
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(EPISODE_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.run_id.clone(),
            r.seed.to_string(),
            r.episode.to_string(),
            r.steps.to_string(),
            r.episode_return.to_string(),
            r.solved.to_string(),
            r.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_episode_csv(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::data(path, e.to_string()))?;
    let header = rd.headers().map_err(|e| HarnessError::data(path, e.to_string()))?;
    if header.iter().ne(EPISODE_COLUMNS) {
        return Err(HarnessError::data(path, format!("expected columns {}", EPISODE_COLUMNS.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| HarnessError::data(path, e.to_string()))?;
        let bad = |col: &str| HarnessError::data(path, format!("row {}: bad `{col}` value", i + 1));
        let field = |k: usize| row.get(k).unwrap_or_default();
        out.push(EpisodeRecord {
            run_id: field(0).to_string(),
            seed: field(1).parse().map_err(|_| bad("seed"))?,
            episode: field(2).parse().map_err(|_| bad("episode"))?,
            steps: field(3).parse().map_err(|_| bad("steps"))?,
            episode_return: field(4).parse().map_err(|_| bad("return"))?,
            solved: field(5).parse().map_err(|_| bad("solved"))?,
            wall_ms: field(6).parse().map_err(|_| bad("wall_ms"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        let recs = vec![
            EpisodeRecord { run_id: "a-s0".into(), seed: 0, episode: 0, steps: 250, episode_return: -123.456789012345, solved: false, wall_ms: 0 },
            EpisodeRecord { run_id: "a-s0".into(), seed: 0, episode: 1, steps: 12, episode_return: 0.1 + 0.2, solved: true, wall_ms: 7 },
        ];
        write_episode_csv(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run_id,seed,episode,steps,return,solved,wall_ms\n"));
        assert_eq!(read_episode_csv(&path).unwrap(), recs);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_episode_csv(&path).is_err());
    }
}
