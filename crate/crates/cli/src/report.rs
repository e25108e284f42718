//! Writes experiment summaries as JSON plus flat CSV tables for plotting.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::experiment::{ExperimentSummary, MeanStd};

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub summary: PathBuf,
    pub trials: PathBuf,
    pub plot: PathBuf,
    pub histogram: PathBuf,
}

impl ReportFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            summary: dir.join("summary.json"),
            trials: dir.join("trials.csv"),
            plot: dir.join("plot.csv"),
            histogram: dir.join("mse_hist.csv"),
        }
    }
}

#[derive(Debug, Serialize)]
struct TrialRow<'a> {
    label: &'a str,
    max_conditions: usize,
    repeat: usize,
    trial: usize,
    seed: u64,
    energy: f64,
    feasible: bool,
    n_selected: usize,
    n_reduced: usize,
    selected: String,
    reduced: String,
    n_s1: usize,
    splittable: bool,
    mse: Option<f64>,
    swmse: Option<f64>,
    cmse: f64,
    optimal_hit: Option<bool>,
}

#[derive(Debug, Serialize)]
struct PlotRow<'a> {
    label: &'a str,
    max_conditions: usize,
    n_samples: usize,
    n_conditions: usize,
    metric: &'a str,
    mean: f64,
    std: f64,
}

#[derive(Debug, Serialize)]
struct HistRow<'a> {
    label: &'a str,
    max_conditions: usize,
    repeat: usize,
    bin_lo: f64,
    bin_hi: f64,
    count: usize,
    cmse: f64,
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|b| b.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn csv_writer(path: &Path) -> anyhow::Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

/// Equal-width bins spanning the trial MSEs and cMSE.
pub fn histogram(values: &[f64], cmse: f64, bins: usize) -> Vec<(f64, f64, usize)> {
    let lo = values.iter().copied().fold(cmse, f64::min);
    let hi = values.iter().copied().fold(cmse, f64::max);
    if hi <= lo {
        return vec![(lo, hi, values.len())];
    }
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + k as f64 * width, lo + (k + 1) as f64 * width, c))
        .collect()
}

pub fn plot_metrics(s: &ExperimentSummary) -> Vec<(&'static str, MeanStd)> {
    let mut rows = Vec::new();
    if let Some(h) = s.stats.optimal_hits {
        rows.push(("optimal_hits", h));
    }
    rows.extend([
        ("n_gs", s.stats.n_gs),
        ("n_eq", s.stats.n_eq),
        ("n_su", s.stats.n_su),
        ("n_feasible", s.stats.n_feasible),
        ("conditions_before", s.stats.conditions_before),
        ("conditions_after", s.stats.conditions_after),
    ]);
    rows
}

pub fn export_report(summaries: &[ExperimentSummary], dir: &Path) -> anyhow::Result<ReportFiles> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = ReportFiles::in_dir(dir);

    let f = File::create(&files.summary)
        .with_context(|| format!("creating {}", files.summary.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), summaries)?;

    let mut trials = csv_writer(&files.trials)?;
    let mut plot = csv_writer(&files.plot)?;
    let mut hist = csv_writer(&files.histogram)?;
    for s in summaries {
        for r in &s.repeats {
            for t in &r.trials {
                trials.serialize(TrialRow {
                    label: &s.label,
                    max_conditions: s.max_conditions,
                    repeat: r.repeat,
                    trial: t.trial,
                    seed: t.seed,
                    energy: t.energy,
                    feasible: t.feasible,
                    n_selected: t.selected.len(),
                    n_reduced: t.reduced.len(),
                    selected: join(&t.selected),
                    reduced: join(&t.reduced),
                    n_s1: t.n_s1,
                    splittable: t.splittable,
                    mse: t.mse,
                    swmse: t.swmse,
                    cmse: r.cmse,
                    optimal_hit: t.optimal_hit,
                })?;
            }
            let mses: Vec<f64> = r.trials.iter().filter_map(|t| t.mse).collect();
            for (bin_lo, bin_hi, count) in histogram(&mses, r.cmse, HISTOGRAM_BINS) {
                hist.serialize(HistRow {
                    label: &s.label,
                    max_conditions: s.max_conditions,
                    repeat: r.repeat,
                    bin_lo,
                    bin_hi,
                    count,
                    cmse: r.cmse,
                })?;
            }
        }
        for (metric, v) in plot_metrics(s) {
            plot.serialize(PlotRow {
                label: &s.label,
                max_conditions: s.max_conditions,
                n_samples: s.n_samples,
                n_conditions: s.n_conditions,
                metric,
                mean: v.mean,
                std: v.std,
            })?;
        }
    }
    trials.flush()?;
    plot.flush()?;
    hist.flush()?;
    Ok(files)
}

pub fn read_summaries(path: &Path) -> anyhow::Result<Vec<ExperimentSummary>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_covers_all_values() {
        let v = [0.1, 0.2, 0.2, 0.9, 1.0];
        let h = histogram(&v, 0.15, 4);
        assert_eq!(h.len(), 4);
        assert_eq!(h.iter().map(|b| b.2).sum::<usize>(), 5);
        assert_eq!(h[0].0, 0.1);
        assert!((h[3].1 - 1.0).abs() < 1e-12);
        assert_eq!(h[3].2, 2);
    }

    #[test]
    fn degenerate_histogram_is_one_bin() {
        assert_eq!(histogram(&[0.5, 0.5], 0.5, 10), vec![(0.5, 0.5, 2)]);
        assert_eq!(histogram(&[], 0.5, 10), vec![(0.5, 0.5, 0)]);
    }
}
