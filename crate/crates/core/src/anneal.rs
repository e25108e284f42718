//! Metropolis simulated annealing over a [`QuboProblem`].
//!
//! The sampler keeps a local field `f_i = linear_i + sum_j Q_ij x_j` for every
//! variable, so the energy change of flipping `i` is `+-f_i` and an accepted
//! flip costs one pass over the sparse row of `i`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::binarize::BinaryDataset;
use crate::error::{Error, Result};
use crate::qubo::{feasibility, FeasibilityReport, QuboProblem, SplitQubo};

pub const DEFAULT_SWEEPS: usize = 10_000;

/// Fields and running energy are recomputed from scratch this often so
/// floating-point drift stays bounded over long schedules.
const RESYNC_EVERY: usize = 256;

/// Moves with `dE / T` above this are rejected without drawing; their
/// acceptance probability is below the resolution of a uniform `f64`.
const MAX_EXPONENT: f64 = 36.0;

/// Geometric temperature decay from `t_start` to `t_end` over `sweeps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub t_start: f64,
    pub t_end: f64,
    pub sweeps: usize,
}

impl Schedule {
    pub fn new(t_start: f64, t_end: f64, sweeps: usize) -> Result<Self> {
        let s = Self {
            t_start,
            t_end,
            sweeps,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::BadSchedule(format!(
                "t_end={} must be > 0",
                self.t_end
            )));
        }
        if !(self.t_start >= self.t_end && self.t_start.is_finite()) {
            return Err(Error::BadSchedule(format!(
                "t_start={} must be >= t_end={}",
                self.t_start, self.t_end
            )));
        }
        if self.sweeps == 0 {
            return Err(Error::BadSchedule("sweeps must be >= 1".into()));
        }
        Ok(())
    }

    /// `t_start = max(1, max |linear|)`, `t_end = t_start / 1000`, 10 000 sweeps.
    pub fn default_for(problem: &QuboProblem) -> Self {
        let t_start = problem.max_abs_linear().max(1.0);
        Self {
            t_start,
            t_end: 1e-3 * t_start,
            sweeps: DEFAULT_SWEEPS,
        }
    }

    pub fn with_sweeps(mut self, sweeps: usize) -> Self {
        self.sweeps = sweeps;
        self
    }

    /// Temperature used for sweep `k` (0-based).
    pub fn temperature(&self, k: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.t_start;
        }
        let frac = k as f64 / (self.sweeps - 1) as f64;
        self.t_start * (self.t_end / self.t_start).powf(frac)
    }
}

/// Symmetric CSR view of the quadratic terms.
#[derive(Debug, Clone)]
pub struct SparseQubo {
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    linear: Vec<f64>,
    offset: f64,
}

impl SparseQubo {
    pub fn new(problem: &QuboProblem) -> Self {
        let n = problem.n_vars();
        let mut degree = vec![0usize; n];
        for &(i, j) in problem.quadratic().keys() {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + degree[i];
        }
        let mut cursor = offsets[..n].to_vec();
        let nnz = offsets[n];
        let mut neighbors = vec![0usize; nnz];
        let mut weights = vec![0.0; nnz];
        for (&(i, j), &q) in problem.quadratic() {
            neighbors[cursor[i]] = j;
            weights[cursor[i]] = q;
            cursor[i] += 1;
            neighbors[cursor[j]] = i;
            weights[cursor[j]] = q;
            cursor[j] += 1;
        }
        Self {
            offsets,
            neighbors,
            weights,
            linear: problem.linear().to_vec(),
            offset: problem.offset(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    #[inline]
    fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.neighbors[r.clone()], &self.weights[r])
    }

    fn fields_and_energy(&self, x: &[u8]) -> (Vec<f64>, f64) {
        let mut fields = self.linear.clone();
        let mut energy = self.offset;
        for i in 0..self.n_vars() {
            if x[i] == 0 {
                continue;
            }
            energy += self.linear[i];
            let (nb, w) = self.row(i);
            for (&j, &q) in nb.iter().zip(w) {
                fields[j] += q;
                // each pair seen twice, once from each end
                if x[j] != 0 && j > i {
                    energy += q;
                }
            }
        }
        (fields, energy)
    }
}

/// Single-chain Metropolis sampler with best-so-far tracking.
#[derive(Debug, Clone)]
pub struct Sampler<'a> {
    problem: &'a SparseQubo,
    state: Vec<u8>,
    fields: Vec<f64>,
    energy: f64,
    best_state: Vec<u8>,
    best_energy: f64,
    order: Vec<usize>,
    sweeps_done: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(problem: &'a SparseQubo, state: Vec<u8>) -> Result<Self> {
        if state.len() != problem.n_vars() {
            return Err(Error::LengthMismatch {
                expected: problem.n_vars(),
                got: state.len(),
            });
        }
        let (fields, energy) = problem.fields_and_energy(&state);
        Ok(Self {
            problem,
            best_state: state.clone(),
            best_energy: energy,
            state,
            fields,
            energy,
            order: (0..problem.n_vars()).collect(),
            sweeps_done: 0,
        })
    }

    pub fn random<R: Rng>(problem: &'a SparseQubo, rng: &mut R) -> Self {
        let state = (0..problem.n_vars())
            .map(|_| rng.gen::<bool>() as u8)
            .collect();
        Self::new(problem, state).expect("length matches by construction")
    }

    pub fn state(&self) -> &[u8] {
        &self.state
    }

    /// Running energy, maintained incrementally.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn best_state(&self) -> &[u8] {
        &self.best_state
    }

    pub fn best_energy(&self) -> f64 {
        self.best_energy
    }

    /// Energy change of flipping variable `i`.
    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        if self.state[i] == 0 {
            self.fields[i]
        } else {
            -self.fields[i]
        }
    }

    #[inline]
    fn flip(&mut self, i: usize, delta: f64) {
        let d = if self.state[i] == 0 { 1.0 } else { -1.0 };
        self.state[i] ^= 1;
        self.energy += delta;
        let (nb, w) = self.problem.row(i);
        for (&j, &q) in nb.iter().zip(w) {
            self.fields[j] += d * q;
        }
        if self.energy < self.best_energy {
            self.best_energy = self.energy;
            self.best_state.copy_from_slice(&self.state);
        }
    }

    /// One Metropolis proposal per variable, in freshly shuffled order.
    pub fn sweep<R: Rng>(&mut self, temperature: f64, rng: &mut R) {
        debug_assert!(temperature > 0.0);
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(rng);
        for &i in &order {
            let de = self.delta(i);
            let accept = de <= 0.0 || {
                let x = de / temperature;
                x < MAX_EXPONENT && rng.gen::<f64>() < (-x).exp()
            };
            if accept {
                self.flip(i, de);
            }
        }
        self.order = order;
        self.sweeps_done += 1;
        if self.sweeps_done.is_multiple_of(RESYNC_EVERY) {
            self.resync();
        }
    }

    /// Recompute fields and energy exactly from the current state.
    pub fn resync(&mut self) {
        let (fields, energy) = self.problem.fields_and_energy(&self.state);
        self.fields = fields;
        self.energy = energy;
    }
}

/// Outcome of one annealing run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub assignment: Vec<u8>,
    /// Exact energy of `assignment`.
    pub energy: f64,
    pub seed: u64,
    /// Filled in for split-search problems.
    pub feasibility: Option<FeasibilityReport>,
}

/// One annealing run from a seeded uniform random state. Returns the
/// lowest-energy state visited.
pub fn anneal(problem: &QuboProblem, schedule: &Schedule, seed: u64) -> Result<TrialResult> {
    schedule.validate()?;
    Ok(anneal_sparse(
        problem,
        &SparseQubo::new(problem),
        schedule,
        seed,
    ))
}

fn anneal_sparse(
    problem: &QuboProblem,
    sparse: &SparseQubo,
    schedule: &Schedule,
    seed: u64,
) -> TrialResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sampler = Sampler::random(sparse, &mut rng);
    for k in 0..schedule.sweeps {
        sampler.sweep(schedule.temperature(k), &mut rng);
    }
    let assignment = sampler.best_state.clone();
    TrialResult {
        energy: problem.energy(&assignment),
        assignment,
        seed,
        feasibility: None,
    }
}

/// `n_trials` independent runs with seeds `base_seed + k`, executed in
/// parallel and returned in trial order.
pub fn run_trials(
    problem: &QuboProblem,
    schedule: &Schedule,
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    schedule.validate()?;
    let sparse = SparseQubo::new(problem);
    Ok((0..n_trials as u64)
        .into_par_iter()
        .map(|k| anneal_sparse(problem, &sparse, schedule, base_seed.wrapping_add(k)))
        .collect())
}

/// Single-threaded [`run_trials`]; produces identical results.
pub fn run_trials_sequential(
    problem: &QuboProblem,
    schedule: &Schedule,
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    schedule.validate()?;
    let sparse = SparseQubo::new(problem);
    Ok((0..n_trials as u64)
        .map(|k| anneal_sparse(problem, &sparse, schedule, base_seed.wrapping_add(k)))
        .collect())
}

/// [`run_trials`] on a split-search problem, attaching the constraint audit
/// of every result.
pub fn run_split_trials(
    qubo: &SplitQubo,
    data: &BinaryDataset,
    schedule: &Schedule,
    n_trials: usize,
    base_seed: u64,
) -> Result<Vec<TrialResult>> {
    let mut trials = run_trials(&qubo.problem, schedule, n_trials, base_seed)?;
    for t in &mut trials {
        t.feasibility = Some(feasibility(&qubo.layout, data, &t.assignment));
    }
    Ok(trials)
}
