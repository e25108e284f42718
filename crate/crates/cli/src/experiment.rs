//! Multi-trial experiments over repeated datasets.

use anyhow::Context;
use qubo_tree::{
    binarize_raw, build_split_qubo, cmse_oracle, extract_split, generate_planted_interaction,
    generate_synthetic, load_real, metrics, remove_redundant, run_split_trials, BinaryDataset,
    Schema, SplitQuboOptions, SplittingVector, SyntheticSpec,
};
use serde::{Deserialize, Serialize};

use crate::config::{DatasetSource, ExperimentConfig, Mode, DEFAULT_SPLIT_RATIO};

/// Relative tolerance for comparing a trial's MSE with cMSE.
pub const MSE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; zero for fewer than two values.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                std: 0.0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub energy: f64,
    pub feasible: bool,
    pub c1_violations: usize,
    pub c2_violations: usize,
    pub c3_satisfied: bool,
    pub add_satisfied: bool,
    /// Selected conditions before and after redundancy removal.
    pub selected: Vec<usize>,
    pub reduced: Vec<usize>,
    pub n_s1: usize,
    pub splittable: bool,
    /// `None` when no condition was selected.
    pub mse: Option<f64>,
    pub swmse: Option<f64>,
    pub optimal_hit: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub data_seed: u64,
    pub n_samples: usize,
    pub n_conditions: usize,
    pub n_vars: usize,
    pub cmse: f64,
    pub cmse_condition: usize,
    /// Synthetic data only.
    pub optimal_hits: Option<usize>,
    pub n_gs: usize,
    pub n_eq: usize,
    pub n_su: usize,
    pub n_feasible: usize,
    pub trials: Vec<TrialRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub optimal_hits: Option<MeanStd>,
    pub n_gs: MeanStd,
    pub n_eq: MeanStd,
    pub n_su: MeanStd,
    pub n_feasible: MeanStd,
    /// Mean selected-condition count over all trials with a selection.
    pub conditions_before: MeanStd,
    pub conditions_after: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub label: String,
    pub mode: Mode,
    pub max_conditions: usize,
    pub min_split_ratio: Option<f64>,
    pub n_samples: usize,
    pub n_conditions: usize,
    pub n_trials: usize,
    pub sweeps: usize,
    pub repeats: Vec<RepeatRecord>,
    pub stats: SummaryStats,
}

/// Annealing seeds of repeat `r` start at `base_seed + (r + 1) * 2^32`.
pub fn trial_base_seed(base_seed: u64, repeat: usize) -> u64 {
    base_seed.wrapping_add((repeat as u64 + 1) << 32)
}

/// Produces the dataset of each repeat.
pub enum DataPlan {
    Synthetic {
        n_samples: usize,
        n_conditions: usize,
        k: usize,
    },
    Pool {
        pool: BinaryDataset,
        n_samples: usize,
    },
}

impl DataPlan {
    pub fn new(source: &DatasetSource, base_seed: u64) -> anyhow::Result<Self> {
        Ok(match source {
            DatasetSource::Synthetic {
                n_samples,
                n_conditions,
                k,
            } => {
                SyntheticSpec::new(*n_samples, *n_conditions, *k, base_seed)?;
                DataPlan::Synthetic {
                    n_samples: *n_samples,
                    n_conditions: *n_conditions,
                    k: *k,
                }
            }
            DatasetSource::Csv {
                path,
                schema,
                n_samples,
                q_fractions,
                max_categories,
            } => {
                let schema = Schema::from_path(schema)?;
                let pool = load_real(path, &schema, q_fractions, *max_categories)
                    .with_context(|| format!("loading {}", path.display()))?;
                DataPlan::Pool {
                    pool,
                    n_samples: *n_samples,
                }
            }
            DatasetSource::Planted {
                pool_size,
                n_features,
                effect,
                noise_sd,
                n_samples,
                q_fractions,
            } => {
                let raw = generate_planted_interaction(
                    *pool_size,
                    *n_features,
                    *effect,
                    *noise_sd,
                    base_seed,
                )?;
                DataPlan::Pool {
                    pool: binarize_raw(
                        &raw,
                        q_fractions,
                        qubo_tree::binarize::DEFAULT_MAX_CATEGORIES,
                    )?,
                    n_samples: *n_samples,
                }
            }
        })
    }

    /// Dataset and planted optimum for one repeat.
    pub fn draw(&self, seed: u64) -> anyhow::Result<(BinaryDataset, Option<SplittingVector>)> {
        match self {
            DataPlan::Synthetic {
                n_samples,
                n_conditions,
                k,
            } => {
                let spec = SyntheticSpec::new(*n_samples, *n_conditions, *k, seed)?;
                Ok((generate_synthetic(&spec)?, Some(spec.optimal_vector())))
            }
            DataPlan::Pool { pool, n_samples } => Ok((pool.subsample(*n_samples, seed)?, None)),
        }
    }
}

/// Anneals one dataset and scores every trial against the single-condition
/// optimum.
pub fn run_repeat(
    data: &BinaryDataset,
    optimum: Option<&SplittingVector>,
    opts: &SplitQuboOptions,
    cfg: &ExperimentConfig,
    repeat: usize,
    data_seed: u64,
) -> anyhow::Result<RepeatRecord> {
    let qubo = build_split_qubo(data, opts)?;
    let schedule = cfg.schedule.resolve(&qubo.problem)?;
    let results = run_split_trials(
        &qubo,
        data,
        &schedule,
        cfg.n_trials,
        trial_base_seed(cfg.base_seed, repeat),
    )?;
    let (cmse, cmse_vec) = cmse_oracle(data)?;
    let tol = MSE_TOLERANCE * cmse.abs().max(1.0);

    let mut trials = Vec::with_capacity(results.len());
    for (k, r) in results.into_iter().enumerate() {
        let feas = r.feasibility.expect("split trials carry feasibility");
        let bits = SplittingVector(qubo.layout.splitting_bits(&r.assignment));
        let (reduced, n_s1, splittable, mse, swmse) = if bits.count() == 0 {
            (vec![], data.n_samples(), false, None, None)
        } else {
            let split = extract_split(&bits, data)?;
            let m = metrics(&split, data);
            let reduced = remove_redundant(&bits, data)?;
            (
                reduced.selected(),
                split.n_s1(),
                m.splittable,
                Some(m.mse),
                Some(m.swmse),
            )
        };
        let optimal_hit = optimum.map(|opt| bits.count() > 0 && reduced == opt.selected());
        trials.push(TrialRecord {
            trial: k,
            seed: r.seed,
            energy: r.energy,
            feasible: feas.is_feasible(),
            c1_violations: feas.c1_violations,
            c2_violations: feas.c2_violations,
            c3_satisfied: feas.c3_satisfied,
            add_satisfied: feas.add_satisfied,
            selected: bits.selected(),
            reduced,
            n_s1,
            splittable,
            mse,
            swmse,
            optimal_hit,
        });
    }

    let counts = |f: &dyn Fn(&TrialRecord) -> bool| trials.iter().filter(|t| f(t)).count();
    let n_gs = counts(&|t| t.splittable);
    let n_eq = counts(&|t| t.splittable && t.mse.is_some_and(|m| m <= cmse + tol));
    let n_su = counts(&|t| t.splittable && t.mse.is_some_and(|m| m < cmse - tol));
    let n_feasible = counts(&|t| t.feasible);
    let optimal_hits = optimum.map(|_| counts(&|t| t.optimal_hit == Some(true)));

    Ok(RepeatRecord {
        repeat,
        data_seed,
        n_samples: data.n_samples(),
        n_conditions: data.n_conditions(),
        n_vars: qubo.layout.n_vars,
        cmse,
        cmse_condition: cmse_vec.selected()[0],
        optimal_hits,
        n_gs,
        n_eq,
        n_su,
        n_feasible,
        trials,
    })
}

fn stats(repeats: &[RepeatRecord]) -> SummaryStats {
    let per = |f: &dyn Fn(&RepeatRecord) -> usize| {
        MeanStd::of(&repeats.iter().map(|r| f(r) as f64).collect::<Vec<_>>())
    };
    let selected: Vec<&TrialRecord> = repeats
        .iter()
        .flat_map(|r| &r.trials)
        .filter(|t| !t.selected.is_empty())
        .collect();
    let sizes = |f: &dyn Fn(&TrialRecord) -> usize| {
        MeanStd::of(&selected.iter().map(|t| f(t) as f64).collect::<Vec<_>>())
    };
    SummaryStats {
        optimal_hits: repeats
            .iter()
            .all(|r| r.optimal_hits.is_some())
            .then(|| per(&|r| r.optimal_hits.unwrap_or(0))),
        n_gs: per(&|r| r.n_gs),
        n_eq: per(&|r| r.n_eq),
        n_su: per(&|r| r.n_su),
        n_feasible: per(&|r| r.n_feasible),
        conditions_before: sizes(&|t| t.selected.len()),
        conditions_after: sizes(&|t| t.reduced.len()),
    }
}

/// All repeats for one `M` and one `a`.
pub fn run_arm(
    cfg: &ExperimentConfig,
    plan: &DataPlan,
    label: &str,
    max_conditions: usize,
    min_split_ratio: Option<f64>,
) -> anyhow::Result<ExperimentSummary> {
    let mut opts =
        SplitQuboOptions::new(max_conditions, min_split_ratio).with_transform(cfg.target_transform);
    opts.weights = cfg.weights;
    let mut repeats = Vec::with_capacity(cfg.repeats());
    for r in 0..cfg.repeats() {
        let seed = cfg.base_seed.wrapping_add(r as u64);
        let (data, optimum) = plan.draw(seed)?;
        repeats.push(run_repeat(&data, optimum.as_ref(), &opts, cfg, r, seed)?);
    }
    Ok(ExperimentSummary {
        label: label.to_string(),
        mode: cfg.mode,
        max_conditions,
        min_split_ratio,
        n_samples: repeats[0].n_samples,
        n_conditions: repeats[0].n_conditions,
        n_trials: cfg.n_trials,
        sweeps: cfg.schedule.sweeps,
        stats: stats(&repeats),
        repeats,
    })
}

/// One summary per `M`; ablations produce a `without` and a `with` summary
/// per `M`.
pub fn run_experiment(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ExperimentSummary>> {
    cfg.validate()?;
    let plan = DataPlan::new(&cfg.dataset, cfg.base_seed)?;
    let mut out = Vec::new();
    for &m in &cfg.max_conditions {
        match cfg.mode {
            Mode::Synthetic | Mode::Real => {
                let label = match cfg.min_split_ratio {
                    Some(a) => format!("M={m} a={a}"),
                    None => format!("M={m}"),
                };
                out.push(run_arm(cfg, &plan, &label, m, cfg.min_split_ratio)?);
            }
            Mode::Ablation => {
                let a = cfg.min_split_ratio.unwrap_or(DEFAULT_SPLIT_RATIO);
                out.push(run_arm(cfg, &plan, "without", m, None)?);
                out.push(run_arm(cfg, &plan, "with", m, Some(a))?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_uses_sample_deviation() {
        let m = MeanStd::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m.mean, 2.5);
        assert!((m.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(MeanStd::of(&[7.0]).std, 0.0);
        assert_eq!(MeanStd::of(&[]).mean, 0.0);
    }

    #[test]
    fn seeds_do_not_collide_across_repeats() {
        assert_ne!(trial_base_seed(0, 0) + 999, trial_base_seed(0, 1));
        assert_eq!(trial_base_seed(5, 0), 5 + (1 << 32));
    }

    fn small(mode: Mode) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::synthetic(12, 4, 1, 1);
        cfg.mode = mode;
        cfg.n_trials = 20;
        cfg.n_repeats = Some(2);
        cfg.schedule.sweeps = 300;
        cfg
    }

    #[test]
    fn synthetic_run_counts_are_ordered() {
        let out = run_experiment(&small(Mode::Synthetic)).unwrap();
        assert_eq!(out.len(), 1);
        let s = &out[0];
        assert_eq!(s.repeats.len(), 2);
        for r in &s.repeats {
            assert_eq!(r.trials.len(), 20);
            assert!(r.n_gs >= r.n_eq && r.n_eq >= r.n_su);
            assert!(r.optimal_hits.unwrap() <= 20);
        }
        assert!(s.stats.optimal_hits.is_some());
    }

    #[test]
    fn ablation_emits_both_arms() {
        let out = run_experiment(&small(Mode::Ablation)).unwrap();
        let labels: Vec<_> = out.iter().map(|s| s.label.as_str()).collect();
        assert_eq!(labels, ["without", "with"]);
        assert_eq!(out[0].min_split_ratio, None);
        assert_eq!(out[1].min_split_ratio, Some(DEFAULT_SPLIT_RATIO));
    }

    #[test]
    fn runs_are_reproducible() {
        let a = run_experiment(&small(Mode::Synthetic)).unwrap();
        let b = run_experiment(&small(Mode::Synthetic)).unwrap();
        assert_eq!(a, b);
    }
}
