//! Long-format learning-curve export for overlay plots.

use std::path::Path;

use crate::bench::BenchmarkStats;
use crate::error::{HarnessError, Result};
use crate::run::{read_curve_csv, RunManifest, CURVE_FILE};
use crate::stats::CurvePoint;

pub const BENCHMARK_SERIES: &str = "benchmark";

#[derive(Debug, Clone, PartialEq)]
pub struct CurveExport {
    /// `config_name,episode,mean_return,std_return`.
    pub csv: String,
    pub series: Vec<String>,
    pub episodes: usize,
    pub warnings: Vec<String>,
}

/// Overlays the runs' aggregated curves plus the benchmark mean (with its
/// std) as a flat reference series. Runs of unequal length are cut to the
/// shortest, with a warning.
pub fn export_curves(runs: &[(String, Vec<CurvePoint>)], benchmark: &BenchmarkStats) -> Result<CurveExport> {
    if runs.is_empty() {
        return Err(HarnessError::Context("no runs to export".into()));
    }
    let common = runs.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    let mut warnings = Vec::new();
    if runs.iter().any(|(_, c)| c.len() != common) {
        let lens: Vec<String> = runs.iter().map(|(n, c)| format!("{n}={}", c.len())).collect();
        let w = format!("episode ranges differ ({}); truncating to {common}", lens.join(", "));
        log::warn!("{w}");
        warnings.push(w);
    }
    let mut csv = String::from("config_name,episode,mean_return,std_return\n");
    let mut series = Vec::new();
    for (name, curve) in runs {
        for p in &curve[..common] {
            csv.push_str(&format!("{name},{},{},{}\n", p.episode, p.mean_return, p.std_return));
        }
        series.push(name.clone());
    }
    for e in 0..common {
        csv.push_str(&format!("{BENCHMARK_SERIES},{e},{},{}\n", benchmark.returns.mean, benchmark.returns.std));
    }
    series.push(BENCHMARK_SERIES.into());
    Ok(CurveExport { csv, series, episodes: common, warnings })
}

/// Reads each run directory's manifest and curve, then writes the overlay.
pub fn export_curve_dirs(dirs: &[&Path], benchmark: &BenchmarkStats, out: &Path) -> Result<CurveExport> {
    let runs = dirs
        .iter()
        .map(|d| Ok((RunManifest::load(d)?.name, read_curve_csv(&d.join(CURVE_FILE))?)))
        .collect::<Result<Vec<_>>>()?;
    let export = export_curves(&runs, benchmark)?;
    std::fs::write(out, &export.csv).map_err(|e| HarnessError::io(out, e))?;
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::Summary;

    fn bench() -> BenchmarkStats {
        let s = Summary::of(&[-10.0, -20.0]).unwrap();
        BenchmarkStats { steps: s, returns: s }
    }

    fn curve(n: usize) -> Vec<CurvePoint> {
        (0..n).map(|e| CurvePoint { episode: e, mean_return: -(e as f64), std_return: 1.0 }).collect()
    }

    #[test]
    fn single_run_gives_two_series() {
        let x = export_curves(&[("full_qsac".into(), curve(3))], &bench()).unwrap();
        assert_eq!(x.series, vec!["full_qsac", "benchmark"]);
        assert_eq!(x.csv.lines().count(), 1 + 3 + 3);
        assert!(x.csv.contains("benchmark,2,-15,"));
        assert!(x.warnings.is_empty());
    }

    #[test]
    fn unequal_ranges_truncate_with_a_warning() {
        let x = export_curves(&[("a".into(), curve(5)), ("b".into(), curve(2))], &bench()).unwrap();
        assert_eq!(x.episodes, 2);
        assert_eq!(x.warnings.len(), 1);
        assert_eq!(x.csv.lines().count(), 1 + 3 * 2);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(export_curves(&[], &bench()).is_err());
    }
}
