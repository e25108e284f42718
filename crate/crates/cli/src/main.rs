use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use qubo_tree::tree::{ratio_envelope, BRUTE_FORCE_LIMIT};
use qubo_tree::{
    binarize_raw, brute_force_best, build_split_qubo, cmse_oracle, generate_synthetic,
    run_split_trials, run_trials, PenaltyWeights, QuboProblem, Schema, SplitQuboOptions,
    SplitReport, SplittingVector, SyntheticSpec, TargetTransform, TrialResult,
};
use qubo_tree_cli::config::{DatasetSource, ExperimentConfig, Mode, ScheduleConfig};
use qubo_tree_cli::io::{read_dataset, write_dataset};
use qubo_tree_cli::report::plot_metrics;
use qubo_tree_cli::{export_report, run_experiment};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "qubo-tree",
    version,
    about = "Regression-tree split search by QUBO annealing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn a tabular CSV into basic conditions and a 0/1 matrix.
    Binarize(BinarizeArgs),
    /// Write a planted synthetic dataset.
    GenSynthetic(GenArgs),
    /// Build the split-search QUBO for a binary dataset.
    BuildQubo(BuildArgs),
    /// Anneal a QUBO file or a dataset's split-search problem.
    Anneal(AnnealCmd),
    /// Exhaustive reference splits for a binary dataset.
    Oracle(OracleArgs),
    /// Range of SWMSE/MSE over the split ratios allowed by `a`.
    Ratio(RatioArgs),
    /// Run a multi-trial experiment and export its report.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct BinarizeArgs {
    #[arg(long)]
    csv: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// Use the Q-quantiles k/Q, k = 1..Q-1, instead of --q-fractions.
    #[arg(long)]
    quantiles: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0.33,0.66")]
    q_fractions: Vec<f64>,
    #[arg(long, default_value_t = qubo_tree::binarize::DEFAULT_MAX_CATEGORIES)]
    max_categories: usize,
    /// Output prefix; writes <out>.csv and <out>.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 20)]
    n_samples: usize,
    #[arg(long, default_value_t = 10)]
    n_conditions: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transform {
    Raw,
    Center,
    Standardize,
}

impl From<Transform> for TargetTransform {
    fn from(t: Transform) -> Self {
        match t {
            Transform::Raw => TargetTransform::Raw,
            Transform::Center => TargetTransform::Center,
            Transform::Standardize => TargetTransform::Standardize,
        }
    }
}

#[derive(Args, Clone)]
struct SplitArgs {
    /// Most conditions in the logical product.
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Minimum split ratio; omit to leave the constraint out.
    #[arg(long)]
    a: Option<f64>,
    #[arg(long, requires_all = ["w_c1", "w_c2"])]
    w_q: Option<f64>,
    #[arg(long, requires = "w_q")]
    w_c1: Option<f64>,
    #[arg(long, requires = "w_q")]
    w_c2: Option<f64>,
    #[arg(long, value_enum, default_value = "standardize")]
    transform: Transform,
}

impl SplitArgs {
    fn options(&self) -> Result<SplitQuboOptions> {
        let mut opts = SplitQuboOptions::new(self.m, self.a).with_transform(self.transform.into());
        if let (Some(q), Some(c1), Some(c2)) = (self.w_q, self.w_c1, self.w_c2) {
            opts = opts.with_weights(PenaltyWeights::new(q, c1, c2)?);
        }
        Ok(opts)
    }
}

#[derive(Args, Clone)]
struct ScheduleArgs {
    #[arg(long, default_value_t = qubo_tree::anneal::DEFAULT_SWEEPS)]
    sweeps: usize,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ScheduleArgs {
    fn config(&self) -> ScheduleConfig {
        ScheduleConfig {
            sweeps: self.sweeps,
            t_start: self.t_start,
            t_end: self.t_end,
        }
    }
}

#[derive(Args)]
struct BuildArgs {
    /// Dataset prefix written by `binarize` or `gen-synthetic`.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    split: SplitArgs,
    /// QUBO text output.
    #[arg(long)]
    out: PathBuf,
    /// Variable layout JSON; defaults to <out>.layout.json.
    #[arg(long)]
    layout: Option<PathBuf>,
}

#[derive(Args)]
struct AnnealCmd {
    /// Plain QUBO text file. Mutually exclusive with --data.
    #[arg(long, conflicts_with = "data")]
    qubo: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[command(flatten)]
    split: SplitArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Write every trial as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    a: f64,
}

#[derive(Args)]
struct RatioArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.1,0.2,0.3,0.4")]
    a: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    gamma_lo: f64,
    #[arg(long, default_value_t = 10.0)]
    gamma_hi: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum ModeArg {
    Synthetic,
    Real,
    Ablation,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    mode: ModeArg,
    /// TOML config; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    n_conditions: Option<usize>,
    #[arg(long, requires = "schema")]
    csv: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long, conflicts_with = "no_split_constraint")]
    a: Option<f64>,
    #[arg(long)]
    no_split_constraint: bool,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    t_start: Option<f64>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Report directory.
    #[arg(long, default_value = "report")]
    out: PathBuf,
}

impl ExperimentArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mode = match self.mode {
            ModeArg::Synthetic => Mode::Synthetic,
            ModeArg::Real => Mode::Real,
            ModeArg::Ablation => Mode::Ablation,
        };
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None if mode == Mode::Synthetic => ExperimentConfig::synthetic(20, 10, 1, 1),
            None => ExperimentConfig::real(
                DatasetSource::Planted {
                    pool_size: 2000,
                    n_features: 5,
                    effect: 1.0,
                    noise_sd: 0.3,
                    n_samples: 20,
                    q_fractions: qubo_tree::data::DEFAULT_Q_FRACTIONS.to_vec(),
                },
                3,
            ),
        };
        if self.config.is_some() && cfg.mode != mode {
            bail!(
                "config declares mode {:?}, command asked for a different one",
                cfg.mode
            );
        }
        cfg.mode = mode;
        if let (Some(csv), Some(schema)) = (&self.csv, &self.schema) {
            cfg.dataset = DatasetSource::Csv {
                path: csv.clone(),
                schema: schema.clone(),
                n_samples: self.n_samples.unwrap_or(cfg.dataset.n_samples()),
                q_fractions: qubo_tree::data::DEFAULT_Q_FRACTIONS.to_vec(),
                max_categories: qubo_tree::binarize::DEFAULT_MAX_CATEGORIES,
            };
        }
        match &mut cfg.dataset {
            DatasetSource::Synthetic {
                n_samples,
                n_conditions,
                k,
            } => {
                *n_samples = self.n_samples.unwrap_or(*n_samples);
                *n_conditions = self.n_conditions.unwrap_or(*n_conditions);
                *k = self.k.unwrap_or(*k);
            }
            DatasetSource::Csv { n_samples, .. } | DatasetSource::Planted { n_samples, .. } => {
                *n_samples = self.n_samples.unwrap_or(*n_samples);
            }
        }
        if let Some(m) = &self.m {
            cfg.max_conditions = m.clone();
        }
        if self.no_split_constraint {
            cfg.min_split_ratio = None;
        } else if self.a.is_some() {
            cfg.min_split_ratio = self.a;
        }
        cfg.n_trials = self.trials.unwrap_or(cfg.n_trials);
        cfg.n_repeats = self.repeats.or(cfg.n_repeats);
        cfg.base_seed = self.seed.unwrap_or(cfg.base_seed);
        cfg.schedule.sweeps = self.sweeps.unwrap_or(cfg.schedule.sweeps);
        cfg.schedule.t_start = self.t_start.or(cfg.schedule.t_start);
        cfg.schedule.t_end = self.t_end.or(cfg.schedule.t_end);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_json<T: Serialize>(path: &PathBuf, value: &T) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), value)?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn binarize(args: BinarizeArgs) -> Result<()> {
    let schema = Schema::from_path(&args.schema)?;
    let f = File::open(&args.csv).with_context(|| format!("opening {}", args.csv.display()))?;
    let raw = qubo_tree::data::read_raw_csv(BufReader::new(f), &schema)?;
    let data = match args.quantiles {
        Some(q) => {
            let conds = qubo_tree::derive_conditions(&raw, q, args.max_categories)?;
            qubo_tree::apply_conditions(&raw, &conds)?
        }
        None => binarize_raw(&raw, &args.q_fractions, args.max_categories)?,
    };
    write_dataset(&args.out, &data, None)?;
    println!(
        "{} samples, {} conditions -> {}.{{csv,json}}",
        data.n_samples(),
        data.n_conditions(),
        args.out.display()
    );
    Ok(())
}

fn gen_synthetic(args: GenArgs) -> Result<()> {
    let spec = SyntheticSpec::new(args.n_samples, args.n_conditions, args.k, args.seed)?;
    let data = generate_synthetic(&spec)?;
    write_dataset(&args.out, &data, Some(args.seed))?;
    let mean = data.targets().iter().sum::<f64>() / data.n_samples() as f64;
    println!(
        "{} samples, {} conditions, mean target {mean:.4} -> {}.{{csv,json}}",
        data.n_samples(),
        data.n_conditions(),
        args.out.display()
    );
    Ok(())
}

fn build(args: BuildArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let qubo = build_split_qubo(&data, &args.split.options()?)?;
    let f = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    qubo.problem.write_text(BufWriter::new(f))?;
    let layout = args
        .layout
        .unwrap_or_else(|| args.out.with_extension("layout.json"));
    write_json(&layout, &qubo.layout)?;
    println!("{}", qubo.describe());
    Ok(())
}

#[derive(Serialize)]
struct AnnealOutput<'a> {
    best: &'a TrialResult,
    split: Option<SplitReport>,
    trials: &'a [TrialResult],
}

fn best_of(trials: &[TrialResult], feasible_only: bool) -> Option<&TrialResult> {
    trials
        .iter()
        .filter(|t| !feasible_only || t.feasibility.is_some_and(|f| f.is_feasible()))
        .min_by(|a, b| a.energy.total_cmp(&b.energy))
}

fn anneal_cmd(args: AnnealCmd) -> Result<()> {
    let sched_cfg = args.schedule.config();
    let (trials, split) = match (&args.qubo, &args.data) {
        (Some(path), None) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let problem = QuboProblem::read_text(BufReader::new(f))?;
            let schedule = sched_cfg.resolve(&problem)?;
            (
                run_trials(
                    &problem,
                    &schedule,
                    args.schedule.trials,
                    args.schedule.seed,
                )?,
                None,
            )
        }
        (None, Some(prefix)) => {
            let data = read_dataset(prefix)?;
            let qubo = build_split_qubo(&data, &args.split.options()?)?;
            let schedule = sched_cfg.resolve(&qubo.problem)?;
            let trials = run_split_trials(
                &qubo,
                &data,
                &schedule,
                args.schedule.trials,
                args.schedule.seed,
            )?;
            let report = match best_of(&trials, true) {
                Some(t) => {
                    let bits = SplittingVector(qubo.layout.splitting_bits(&t.assignment));
                    Some(SplitReport::new(&bits, &data)?)
                }
                None => None,
            };
            (trials, Some(report))
        }
        _ => bail!("give exactly one of --qubo or --data"),
    };
    let best = best_of(&trials, false).context("no trials run")?;
    let n_feasible = trials
        .iter()
        .filter(|t| t.feasibility.is_some_and(|f| f.is_feasible()))
        .count();
    eprintln!(
        "{} trials, best energy {:.6}{}",
        trials.len(),
        best.energy,
        if split.is_some() {
            format!(", {n_feasible} feasible")
        } else {
            String::new()
        }
    );
    match &split {
        Some(Some(r)) => print_json(r)?,
        Some(None) => eprintln!("no feasible trial"),
        None => print_json(best)?,
    }
    if let Some(out) = &args.out {
        write_json(
            out,
            &AnnealOutput {
                best,
                split: split.flatten(),
                trials: &trials,
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct OracleOutput {
    cmse: f64,
    cmse_split: SplitReport,
    brute_force: Option<BruteOutput>,
}

#[derive(Serialize)]
struct BruteOutput {
    swmse: f64,
    split: SplitReport,
}

fn oracle(args: OracleArgs) -> Result<()> {
    let data = read_dataset(&args.data)?;
    let (cmse, v) = cmse_oracle(&data)?;
    let brute_force = if data.n_conditions() <= BRUTE_FORCE_LIMIT {
        match brute_force_best(&data, args.m, args.a) {
            Ok((swmse, v)) => Some(BruteOutput {
                swmse,
                split: SplitReport::new(&v, &data)?,
            }),
            Err(qubo_tree::Error::NoFeasibleSplit) => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        eprintln!(
            "{} conditions exceed the exhaustive limit of {BRUTE_FORCE_LIMIT}",
            data.n_conditions()
        );
        None
    };
    print_json(&OracleOutput {
        cmse,
        cmse_split: SplitReport::new(&v, &data)?,
        brute_force,
    })
}

fn ratio(args: RatioArgs) -> Result<()> {
    println!("a,min_ratio,max_ratio");
    for a in args.a {
        let (lo, hi) = ratio_envelope(a, args.gamma_lo, args.gamma_hi, args.steps)?;
        println!("{a},{lo},{hi}");
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let summaries = run_experiment(&cfg)?;
    let files = export_report(&summaries, &args.out)?;
    for s in &summaries {
        let stats = plot_metrics(s)
            .into_iter()
            .map(|(name, v)| format!("{name}={:.2}±{:.2}", v.mean, v.std))
            .collect::<Vec<_>>()
            .join(" ");
        println!("{:<12} M={:<3} {stats}", s.label, s.max_conditions);
    }
    eprintln!(
        "report written to {}",
        files.summary.parent().unwrap_or(&args.out).display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Binarize(a) => binarize(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::BuildQubo(a) => build(a),
        Command::Anneal(a) => anneal_cmd(a),
        Command::Oracle(a) => oracle(a),
        Command::Ratio(a) => ratio(a),
        Command::Experiment(a) => experiment(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
            || c.downcast_ref::<serde_json::Error>()
                .is_some_and(|j| j.io_error_kind() == Some(std::io::ErrorKind::BrokenPipe))
    })
}
