//! Splits induced by a splitting vector, their error metrics, and the
//! exhaustive reference searches used to judge annealer output.

use serde::{Deserialize, Serialize};

use crate::binarize::BinaryDataset;
use crate::error::{Error, Result};
use crate::qubo::split_ratio_bounds;

/// Largest condition count [`brute_force_best`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Which basic conditions take part in the logical product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SplittingVector(pub Vec<bool>);

impl SplittingVector {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_indices(n: usize, selected: &[usize]) -> Self {
        let mut v = vec![false; n];
        for &i in selected {
            v[i] = true;
        }
        Self(v)
    }

    pub fn from_mask(n: usize, mask: u64) -> Self {
        Self((0..n).map(|b| (mask >> b) & 1 == 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

/// Whether `sample` satisfies every selected condition.
#[inline]
fn satisfies_all(data: &BinaryDataset, bits: &[bool], sample: usize) -> bool {
    data.row(sample)
        .iter()
        .zip(bits)
        .all(|(&v, &on)| !on || v != 0)
}

/// Two-group partition with group-mean predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub vector: SplittingVector,
    pub s1: Vec<usize>,
    pub s0: Vec<usize>,
    /// `None` when the group is empty.
    pub pred1: Option<f64>,
    pub pred0: Option<f64>,
    pub global_mean: f64,
}

impl Split {
    pub fn n_s1(&self) -> usize {
        self.s1.len()
    }

    pub fn n_s0(&self) -> usize {
        self.s0.len()
    }

    pub fn splittable(&self) -> bool {
        !self.s1.is_empty() && !self.s0.is_empty()
    }

    /// Membership mask over all samples.
    pub fn membership(&self) -> Vec<bool> {
        let mut m = vec![false; self.s1.len() + self.s0.len()];
        for &s in &self.s1 {
            m[s] = true;
        }
        m
    }

    /// Prediction for a row of basic-condition indicators. Falls back to the
    /// global mean if the row lands in an empty group.
    pub fn predict_row(&self, row: &[u8]) -> f64 {
        let in_s1 = row
            .iter()
            .zip(&self.vector.0)
            .all(|(&v, &on)| !on || v != 0);
        let p = if in_s1 { self.pred1 } else { self.pred0 };
        p.unwrap_or(self.global_mean)
    }
}

fn mean(targets: &[f64], idx: &[usize]) -> Option<f64> {
    (!idx.is_empty()).then(|| idx.iter().map(|&s| targets[s]).sum::<f64>() / idx.len() as f64)
}

/// `S_1` is every sample meeting all selected conditions, `S_0` the rest.
pub fn extract_split(bits: &SplittingVector, data: &BinaryDataset) -> Result<Split> {
    if bits.len() != data.n_conditions() {
        return Err(Error::LengthMismatch {
            expected: data.n_conditions(),
            got: bits.len(),
        });
    }
    if bits.count() == 0 {
        return Err(Error::EmptySplittingVector);
    }
    let (s1, s0): (Vec<usize>, Vec<usize>) =
        (0..data.n_samples()).partition(|&s| satisfies_all(data, &bits.0, s));
    let t = data.targets();
    Ok(Split {
        vector: bits.clone(),
        pred1: mean(t, &s1),
        pred0: mean(t, &s0),
        global_mean: t.iter().sum::<f64>() / t.len() as f64,
        s1,
        s0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    /// `sum_b Var(S_b) N_b / N_S`.
    pub mse: f64,
    /// `sum_b Var(S_b) (N_b / N_S)^2`.
    pub swmse: f64,
    pub splittable: bool,
}

/// Population variance of the targets indexed by `idx`.
fn group_variance(targets: &[f64], idx: &[usize]) -> f64 {
    match mean(targets, idx) {
        None => 0.0,
        Some(m) => idx.iter().map(|&s| (targets[s] - m).powi(2)).sum::<f64>() / idx.len() as f64,
    }
}

pub fn metrics(split: &Split, data: &BinaryDataset) -> SplitMetrics {
    let t = data.targets();
    let n = t.len() as f64;
    let mut mse = 0.0;
    let mut swmse = 0.0;
    for group in [&split.s1, &split.s0] {
        let w = group.len() as f64 / n;
        let v = group_variance(t, group);
        mse += v * w;
        swmse += v * w * w;
    }
    SplitMetrics {
        mse,
        swmse,
        splittable: split.splittable(),
    }
}

/// Best MSE over single-condition splits. Ties go to the lowest index.
pub fn cmse_oracle(data: &BinaryDataset) -> Result<(f64, SplittingVector)> {
    let n_b = data.n_conditions();
    if n_b == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut best: Option<(f64, usize)> = None;
    for b in 0..n_b {
        let v = SplittingVector::from_indices(n_b, &[b]);
        let m = metrics(&extract_split(&v, data)?, data);
        if best.is_none_or(|(bm, _)| m.mse < bm) {
            best = Some((m.mse, b));
        }
    }
    let (mse, b) = best.expect("n_b >= 1");
    Ok((mse, SplittingVector::from_indices(n_b, &[b])))
}

/// Exhaustive minimum of the normalized SWMSE over splitting vectors with
/// `1..=max_conditions` conditions. With `min_split_ratio > 0` only vectors
/// with `ceil(aN) <= |S_1| <= floor((1-a)N)` compete. Ties go to the smallest
/// bitmask.
pub fn brute_force_best(
    data: &BinaryDataset,
    max_conditions: usize,
    min_split_ratio: f64,
) -> Result<(f64, SplittingVector)> {
    let n_b = data.n_conditions();
    if n_b > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManyConditions {
            n_b,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n_b == 0 {
        return Err(Error::EmptyDataset);
    }
    if !(0.0..0.5).contains(&min_split_ratio) {
        return Err(Error::BadSplitRatio(min_split_ratio));
    }
    let n_s = data.n_samples();
    let bounds = (min_split_ratio > 0.0).then(|| split_ratio_bounds(min_split_ratio, n_s));
    let t = data.targets();
    // bit b of fails[s] set when sample s does not meet condition b
    let fails: Vec<u32> = (0..n_s)
        .map(|s| {
            data.row(s)
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 0)
                .fold(0u32, |m, (b, _)| m | (1 << b))
        })
        .collect();
    let total1: f64 = t.iter().sum();
    let total2: f64 = t.iter().map(|x| x * x).sum();
    let nf = n_s as f64;

    let mut best: Option<(f64, u32)> = None;
    for mask in 1u32..(1u32 << n_b) {
        if mask.count_ones() as usize > max_conditions {
            continue;
        }
        let (mut n1, mut s1, mut q1) = (0usize, 0.0, 0.0);
        for (s, &f) in fails.iter().enumerate() {
            if f & mask == 0 {
                n1 += 1;
                s1 += t[s];
                q1 += t[s] * t[s];
            }
        }
        if let Some((lo, hi)) = bounds {
            if (n1 as i64) < lo || (n1 as i64) > hi {
                continue;
            }
        }
        // N_b Var_b (N_b/N)^2 summed, via N_b * sum t^2 - (sum t)^2
        let n0 = n_s - n1;
        let g1 = n1 as f64 * q1 - s1 * s1;
        let g0 = n0 as f64 * (total2 - q1) - (total1 - s1).powi(2);
        let swmse = (g1 + g0) / (nf * nf);
        if best.is_none_or(|(b, _)| swmse < b) {
            best = Some((swmse, mask));
        }
    }
    let (_, mask) = best.ok_or(Error::NoFeasibleSplit)?;
    let v = SplittingVector::from_mask(n_b, mask as u64);
    let m = metrics(&extract_split(&v, data)?, data);
    Ok((m.swmse, v))
}

/// Drops selected conditions whose removal leaves `S_1` unchanged, scanning
/// in ascending index order until nothing more can go. The result is a
/// fixpoint, not necessarily the smallest equivalent product. At least one
/// condition is always kept.
pub fn remove_redundant(bits: &SplittingVector, data: &BinaryDataset) -> Result<SplittingVector> {
    let target = extract_split(bits, data)?.membership();
    let mut current = bits.clone();
    let membership = |v: &SplittingVector| -> Vec<bool> {
        (0..data.n_samples())
            .map(|s| satisfies_all(data, &v.0, s))
            .collect()
    };
    loop {
        let mut changed = false;
        for b in current.selected() {
            if current.count() == 1 {
                break;
            }
            current.0[b] = false;
            if membership(&current) == target {
                changed = true;
            } else {
                current.0[b] = true;
            }
        }
        if !changed {
            return Ok(current);
        }
    }
}

/// Human-readable summary of a split, for JSON output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    pub selected: Vec<usize>,
    pub conditions: Vec<String>,
    /// After [`remove_redundant`].
    pub reduced_selected: Vec<usize>,
    pub reduced_conditions: Vec<String>,
    pub n_s1: usize,
    pub n_s0: usize,
    pub pred1: Option<f64>,
    pub pred0: Option<f64>,
    pub mse: f64,
    pub swmse: f64,
    pub splittable: bool,
}

impl SplitReport {
    pub fn new(bits: &SplittingVector, data: &BinaryDataset) -> Result<Self> {
        let split = extract_split(bits, data)?;
        let m = metrics(&split, data);
        let reduced = remove_redundant(bits, data)?;
        let describe = |v: &[usize]| v.iter().map(|&b| data.describe(b)).collect();
        Ok(Self {
            selected: bits.selected(),
            conditions: describe(&bits.selected()),
            reduced_selected: reduced.selected(),
            reduced_conditions: describe(&reduced.selected()),
            n_s1: split.n_s1(),
            n_s0: split.n_s0(),
            pred1: split.pred1,
            pred0: split.pred0,
            mse: m.mse,
            swmse: m.swmse,
            splittable: m.splittable,
        })
    }
}

/// SWMSE / MSE for a split with `S_1` fraction `rho` and group-variance ratio
/// `gamma^2 = Var(S_0) / Var(S_1)`.
pub fn swmse_mse_ratio(rho: f64, gamma: f64) -> Result<f64> {
    let g2 = gamma * gamma;
    let denom = rho + g2 * (1.0 - rho);
    if !(0.0..=1.0).contains(&rho) || gamma < 0.0 || denom.is_nan() || denom <= 0.0 {
        return Err(Error::RatioUndefined { rho, gamma });
    }
    Ok((rho * rho + g2 * (1.0 - rho).powi(2)) / denom)
}

/// `[min, max]` of [`swmse_mse_ratio`] over grid points with `rho` in
/// `[a, 1-a]` and `gamma` strictly inside `(gamma_lo, gamma_hi)`. The `rho`
/// grid is `i / steps` on `[0, 1]` for every `a`, so larger `a` sees a subset
/// of the same points.
pub fn ratio_envelope(a: f64, gamma_lo: f64, gamma_hi: f64, steps: usize) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..=steps {
        let rho = i as f64 / steps as f64;
        if rho < a - 1e-12 || rho > 1.0 - a + 1e-12 {
            continue;
        }
        for k in 1..steps {
            let gamma = gamma_lo + (gamma_hi - gamma_lo) * k as f64 / steps as f64;
            let r = swmse_mse_ratio(rho, gamma)?;
            lo = lo.min(r);
            hi = hi.max(r);
        }
    }
    Ok((lo, hi))
}
