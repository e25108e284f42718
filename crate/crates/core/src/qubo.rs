//! QUBO construction and evaluation.
//!
//! The split-search Hamiltonian lives over three kinds of binaries:
//!
//! * `theta_B[b]`: condition `b` takes part in the logical product,
//! * `theta_X[s][c]`: sample `s` fails exactly `c` of the selected conditions
//!   (one-hot over `c = 0..=M`; `theta_X[s][0]` is membership in `S_1`),
//! * slack one-hots encoding `1 <= sum(theta_B) <= M` and the optional
//!   split-ratio bound on `|S_1|`.
//!
//! The loss is the square-weighted MSE written as a quadratic form in
//! `theta_X[.][0]`:
//!
//! ```text
//! (sum y t^2)(sum y) - (sum y t)^2 + (sum (1-y) t^2)(sum (1-y)) - (sum (1-y) t)^2
//! ```
//!
//! which equals `N_S^2` times the group-variance form
//! `sum_b Var(S_b) (N_b / N_S)^2` whenever the constraints hold.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::binarize::BinaryDataset;
use crate::error::{Error, Result};

/// `offset + sum_i linear[i] x_i + sum_{i<j} quadratic[(i,j)] x_i x_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboProblem {
    n_vars: usize,
    quadratic: BTreeMap<(usize, usize), f64>,
    linear: Vec<f64>,
    offset: f64,
}

impl QuboProblem {
    pub fn zero(n_vars: usize) -> Self {
        Self {
            n_vars,
            quadratic: BTreeMap::new(),
            linear: vec![0.0; n_vars],
            offset: 0.0,
        }
    }

    pub fn new(
        n_vars: usize,
        quadratic: BTreeMap<(usize, usize), f64>,
        linear: Vec<f64>,
        offset: f64,
    ) -> Result<Self> {
        if linear.len() != n_vars {
            return Err(Error::LengthMismatch {
                expected: n_vars,
                got: linear.len(),
            });
        }
        for (&(i, j), v) in &quadratic {
            if i >= j || j >= n_vars {
                return Err(Error::MalformedCoupling { i, j, n: n_vars });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteCoefficient(format!("({i}, {j})")));
            }
        }
        if let Some(i) = linear.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCoefficient(i.to_string()));
        }
        if !offset.is_finite() {
            return Err(Error::NonFiniteCoefficient("offset".into()));
        }
        Ok(Self {
            n_vars,
            quadratic,
            linear,
            offset,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn n_terms(&self) -> usize {
        self.linear.iter().filter(|&&v| v != 0.0).count() + self.quadratic.len()
    }

    pub fn max_abs_linear(&self) -> f64 {
        self.linear.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Energy of a 0/1 assignment.
    pub fn evaluate(&self, x: &[u8]) -> Result<f64> {
        if x.len() != self.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: x.len(),
            });
        }
        Ok(self.energy(x))
    }

    /// Unchecked variant of [`evaluate`](Self::evaluate).
    pub fn energy(&self, x: &[u8]) -> f64 {
        let mut e = self.offset;
        for (i, &c) in self.linear.iter().enumerate() {
            if x[i] != 0 {
                e += c;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            if x[i] != 0 && x[j] != 0 {
                e += c;
            }
        }
        e
    }

    /// Coefficient-wise sum of two problems over the same variables.
    pub fn sum(&self, other: &QuboProblem) -> Result<QuboProblem> {
        if self.n_vars != other.n_vars {
            return Err(Error::LengthMismatch {
                expected: self.n_vars,
                got: other.n_vars,
            });
        }
        let mut out = self.clone();
        for (k, v) in &other.quadratic {
            *out.quadratic.entry(*k).or_insert(0.0) += v;
        }
        for (a, b) in out.linear.iter_mut().zip(&other.linear) {
            *a += b;
        }
        out.offset += other.offset;
        Ok(out)
    }

    /// Text export: `p qubo <n_vars> <n_terms>`, `c offset <value>`, then one
    /// `i j coeff` line per term with `i == j` for linear terms. Coefficients
    /// use the shortest representation that parses back to the same `f64`.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "p qubo {} {}", self.n_vars, self.n_terms())?;
        writeln!(w, "c offset {}", self.offset)?;
        for (i, &c) in self.linear.iter().enumerate() {
            if c != 0.0 {
                writeln!(w, "{i} {i} {c}")?;
            }
        }
        for (&(i, j), &c) in &self.quadratic {
            writeln!(w, "{i} {j} {c}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let err = |line: usize, reason: &str| Error::QuboParse {
            line,
            reason: reason.to_string(),
        };
        let mut header: Option<(usize, usize)> = None;
        let mut offset = 0.0;
        let mut linear = Vec::new();
        let mut quadratic = BTreeMap::new();
        let mut terms = 0usize;
        for (ln, line) in r.lines().enumerate() {
            let ln = ln + 1;
            let line = line.map_err(|e| err(ln, &e.to_string()))?;
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                ["c", "offset", v] => {
                    offset = v.parse().map_err(|_| err(ln, "bad offset"))?;
                }
                ["c", ..] => {}
                ["p", "qubo", n, m] => {
                    let n: usize = n.parse().map_err(|_| err(ln, "bad n_vars"))?;
                    let m: usize = m.parse().map_err(|_| err(ln, "bad n_terms"))?;
                    linear = vec![0.0; n];
                    header = Some((n, m));
                }
                [i, j, c] => {
                    let (n, _) = header.ok_or_else(|| err(ln, "term before header"))?;
                    let i: usize = i.parse().map_err(|_| err(ln, "bad index"))?;
                    let j: usize = j.parse().map_err(|_| err(ln, "bad index"))?;
                    let c: f64 = c.parse().map_err(|_| err(ln, "bad coefficient"))?;
                    if i >= n || j >= n {
                        return Err(err(ln, "index out of range"));
                    }
                    if i == j {
                        linear[i] += c;
                    } else {
                        *quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
                    }
                    terms += 1;
                }
                _ => return Err(err(ln, "unrecognised line")),
            }
        }
        let (n, m) = header.ok_or_else(|| err(0, "missing header"))?;
        if m != terms {
            return Err(err(0, &format!("header declares {m} terms, found {terms}")));
        }
        Self::new(n, quadratic, linear, offset)
    }
}

/// Affine expression `constant + sum coeff * x_var` over QUBO variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn sum_of(vars: impl IntoIterator<Item = usize>) -> Self {
        Self {
            terms: vars.into_iter().map(|v| (v, 1.0)).collect(),
            constant: 0.0,
        }
    }

    pub fn term(mut self, var: usize, coeff: f64) -> Self {
        self.terms.push((var, coeff));
        self
    }

    pub fn plus(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn push(&mut self, var: usize, coeff: f64) {
        self.terms.push((var, coeff));
    }

    pub fn eval(&self, x: &[u8]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .filter(|(v, _)| x[*v] != 0)
                .map(|(_, c)| c)
                .sum::<f64>()
    }

    /// Repeated variables merged, zero coefficients dropped.
    fn merged(&self) -> Vec<(usize, f64)> {
        let mut m: BTreeMap<usize, f64> = BTreeMap::new();
        for &(v, c) in &self.terms {
            *m.entry(v).or_insert(0.0) += c;
        }
        m.into_iter().filter(|(_, c)| *c != 0.0).collect()
    }
}

/// Accumulates polynomial terms, reducing `x^2 = x` on the fly.
#[derive(Debug, Clone, Default)]
pub struct QuboBuilder {
    n_vars: usize,
    quadratic: HashMap<(usize, usize), f64>,
    linear: Vec<f64>,
    offset: f64,
}

impl QuboBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_vars(n: usize) -> Self {
        let mut b = Self::new();
        b.add_vars(n);
        b
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn add_vars(&mut self, n: usize) -> Range<usize> {
        let start = self.n_vars;
        self.n_vars += n;
        self.linear.resize(self.n_vars, 0.0);
        start..self.n_vars
    }

    pub fn add_offset(&mut self, c: f64) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, i: usize, c: f64) {
        self.linear[i] += c;
    }

    pub fn add_quadratic(&mut self, i: usize, j: usize, c: f64) {
        if i == j {
            self.linear[i] += c;
        } else {
            *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += c;
        }
    }

    /// Adds `scale * lhs * rhs`.
    pub fn add_product(&mut self, lhs: &LinearExpr, rhs: &LinearExpr, scale: f64) {
        let a = lhs.merged();
        let b = rhs.merged();
        for &(i, ci) in &a {
            for &(j, cj) in &b {
                self.add_quadratic(i, j, scale * ci * cj);
            }
            self.add_linear(i, scale * ci * rhs.constant);
        }
        for &(j, cj) in &b {
            self.add_linear(j, scale * cj * lhs.constant);
        }
        self.add_offset(scale * lhs.constant * rhs.constant);
    }

    /// Adds `scale * expr^2`.
    pub fn add_square(&mut self, expr: &LinearExpr, scale: f64) {
        self.add_product(expr, expr, scale);
    }

    pub fn build(self) -> Result<QuboProblem> {
        let quadratic = self
            .quadratic
            .into_iter()
            .filter(|(_, v)| *v != 0.0)
            .collect();
        QuboProblem::new(self.n_vars, quadratic, self.linear, self.offset)
    }
}

/// Converts `H = -sum_{i<j} J_ij s_i s_j - sum_i h_i s_i` over spins to QUBO
/// form through `s = 2 theta - 1`, keeping the constant so energies agree
/// exactly.
pub fn ising_to_qubo(
    couplings: &BTreeMap<(usize, usize), f64>,
    fields: &[f64],
) -> Result<QuboProblem> {
    let n = fields.len();
    let mut quadratic = BTreeMap::new();
    let mut linear = vec![0.0; n];
    let mut offset = 0.0;
    for (&(i, j), &jij) in couplings {
        if i >= j || j >= n {
            return Err(Error::MalformedCoupling { i, j, n });
        }
        // -J (2a-1)(2b-1) = -4J ab + 2J a + 2J b - J
        *quadratic.entry((i, j)).or_insert(0.0) += -4.0 * jij;
        linear[i] += 2.0 * jij;
        linear[j] += 2.0 * jij;
        offset -= jij;
    }
    for (i, &h) in fields.iter().enumerate() {
        linear[i] -= 2.0 * h;
        offset += h;
    }
    quadratic.retain(|_, v: &mut f64| *v != 0.0);
    QuboProblem::new(n, quadratic, linear, offset)
}

/// Slack one-hot block for an integer range `lo..=hi`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlackBlock {
    /// Index of the slack variable standing for value `lo`.
    pub start: usize,
    pub lo: i64,
    pub hi: i64,
}

impl SlackBlock {
    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, value: i64) -> Option<usize> {
        (self.lo..=self.hi)
            .contains(&value)
            .then(|| self.start + (value - self.lo) as usize)
    }

    pub fn indices(&self) -> Range<usize> {
        self.start..self.start + self.len()
    }

    /// Values of the set slacks, in index order.
    pub fn selected(&self, x: &[u8]) -> Vec<i64> {
        self.indices()
            .filter(|&i| x[i] != 0)
            .map(|i| self.lo + (i - self.start) as i64)
            .collect()
    }
}

/// Encodes `alpha <= lhs <= beta` as
/// `weight * [(lhs - sum_j j s_j)^2 + (sum_j s_j - 1)^2]` with one fresh
/// slack per integer `j` in `alpha..=beta`. Zero exactly when the inequality
/// holds and the single set slack carries the value of `lhs`; at least
/// `weight` otherwise when `lhs` has integer coefficients.
///
/// The one-hot term is kept for `alpha == beta` too: without it the lone
/// slack may sit at zero and `lhs = 0` would score zero for any `alpha`.
pub fn encode_inequality(
    builder: &mut QuboBuilder,
    lhs: &LinearExpr,
    alpha: i64,
    beta: i64,
    weight: f64,
) -> Result<SlackBlock> {
    if beta < alpha {
        return Err(Error::ReversedBounds { alpha, beta });
    }
    let slack = builder.add_vars((beta - alpha + 1) as usize);
    let block = SlackBlock {
        start: slack.start,
        lo: alpha,
        hi: beta,
    };
    let mut residual = lhs.clone();
    for (k, v) in slack.clone().enumerate() {
        residual.push(v, -((alpha + k as i64) as f64));
    }
    builder.add_square(&residual, weight);
    let one_hot = LinearExpr::sum_of(slack).plus(-1.0);
    builder.add_square(&one_hot, weight);
    Ok(block)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    pub w_q: f64,
    pub w_c1: f64,
    pub w_c2: f64,
}

impl PenaltyWeights {
    pub fn new(w_q: f64, w_c1: f64, w_c2: f64) -> Result<Self> {
        let w = Self { w_q, w_c1, w_c2 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if [self.w_q, self.w_c1, self.w_c2]
            .iter()
            .all(|w| w.is_finite() && *w > 0.0)
        {
            Ok(())
        } else {
            Err(Error::BadWeights)
        }
    }

    /// `w_q = 1`, `w_c1 = w_c2 = 2 N_S max(1, max t^2)` on the targets fed to
    /// the QUBO.
    pub fn default_for(targets: &[f64]) -> Self {
        let t2 = targets.iter().fold(1.0f64, |m, t| m.max(t * t));
        let w = 2.0 * targets.len() as f64 * t2;
        Self {
            w_q: 1.0,
            w_c1: w,
            w_c2: w,
        }
    }
}

/// Affine rescaling applied to targets before they enter the loss term.
/// Neither shifting nor positive scaling changes which split is optimal.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetTransform {
    Raw,
    Center,
    #[default]
    Standardize,
}

impl TargetTransform {
    /// Returns `(shift, scale)` with `t' = (t - shift) / scale`.
    pub fn parameters(self, targets: &[f64]) -> (f64, f64) {
        let n = targets.len() as f64;
        let mean = targets.iter().sum::<f64>() / n;
        match self {
            TargetTransform::Raw => (0.0, 1.0),
            TargetTransform::Center => (mean, 1.0),
            TargetTransform::Standardize => {
                let var = targets.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 0.0 { sd } else { 1.0 })
            }
        }
    }

    pub fn apply(self, targets: &[f64]) -> Vec<f64> {
        let (shift, scale) = self.parameters(targets);
        targets.iter().map(|t| (t - shift) / scale).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitQuboOptions {
    /// `M`: most conditions allowed in the logical product.
    pub max_conditions: usize,
    /// `a`: minimum fraction of samples on each side. `None` leaves the
    /// split-ratio constraint out of the Hamiltonian altogether.
    pub min_split_ratio: Option<f64>,
    /// Defaults from [`PenaltyWeights::default_for`] when absent.
    pub weights: Option<PenaltyWeights>,
    pub target_transform: TargetTransform,
}

impl SplitQuboOptions {
    pub fn new(max_conditions: usize, min_split_ratio: Option<f64>) -> Self {
        Self {
            max_conditions,
            min_split_ratio,
            weights: None,
            target_transform: TargetTransform::default(),
        }
    }

    pub fn with_weights(mut self, w: PenaltyWeights) -> Self {
        self.weights = Some(w);
        self
    }

    pub fn with_transform(mut self, t: TargetTransform) -> Self {
        self.target_transform = t;
        self
    }
}

/// Index map from variable roles to flat QUBO indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableLayout {
    pub n_samples: usize,
    pub n_conditions: usize,
    pub max_conditions: usize,
    pub theta_b: Range<usize>,
    /// `theta_x(s, c) = theta_x.start + s * (M + 1) + c`.
    pub theta_x: Range<usize>,
    /// Values `1..=M`.
    pub slack_c3: SlackBlock,
    pub slack_add: Option<SlackBlock>,
    pub min_split_ratio: Option<f64>,
    pub n_vars: usize,
}

impl VariableLayout {
    #[inline]
    pub fn theta_b(&self, b: usize) -> usize {
        self.theta_b.start + b
    }

    #[inline]
    pub fn theta_x(&self, s: usize, c: usize) -> usize {
        self.theta_x.start + s * (self.max_conditions + 1) + c
    }

    /// Inclusive `|S_1|` bounds enforced by the split-ratio constraint.
    pub fn split_bounds(&self) -> Option<(usize, usize)> {
        self.slack_add
            .as_ref()
            .map(|b| (b.lo as usize, b.hi as usize))
    }

    /// The splitting vector part of an assignment.
    pub fn splitting_bits(&self, x: &[u8]) -> Vec<bool> {
        x[self.theta_b.clone()].iter().map(|&v| v != 0).collect()
    }

    /// The assignment that encodes `bits` consistently: `theta_X` carries
    /// each sample's failed-condition count, and the slacks carry the
    /// condition count and `|S_1|` when those fall inside their ranges.
    pub fn encode(&self, data: &BinaryDataset, bits: &[bool]) -> Vec<u8> {
        let mut x = vec![0u8; self.n_vars];
        for (b, &on) in bits.iter().enumerate() {
            x[self.theta_b(b)] = on as u8;
        }
        let mut n_s1 = 0i64;
        for s in 0..self.n_samples {
            let row = data.row(s);
            let fails = bits
                .iter()
                .zip(row)
                .filter(|(&on, &v)| on && v == 0)
                .count();
            if fails <= self.max_conditions {
                x[self.theta_x(s, fails)] = 1;
            }
            if fails == 0 {
                n_s1 += 1;
            }
        }
        let count = bits.iter().filter(|&&b| b).count() as i64;
        if let Some(i) = self.slack_c3.index_of(count) {
            x[i] = 1;
        }
        if let Some(i) = self.slack_add.as_ref().and_then(|b| b.index_of(n_s1)) {
            x[i] = 1;
        }
        x
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// Direct constraint audit of an assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    /// Samples whose `theta_X` count disagrees with the selected conditions.
    pub c1_violations: usize,
    /// Samples whose `theta_X` row is not one-hot.
    pub c2_violations: usize,
    /// `1 <= sum(theta_B) <= M`.
    pub c3_satisfied: bool,
    /// Split-ratio bound on `sum(theta_X[.][0])`; vacuously true when the
    /// constraint is disabled.
    pub add_satisfied: bool,
    pub condition_count: usize,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.c1_violations == 0
            && self.c2_violations == 0
            && self.c3_satisfied
            && self.add_satisfied
    }
}

/// Checks the constraints on the assignment itself, not through penalty
/// energies. Slack variables are not inspected.
pub fn feasibility(layout: &VariableLayout, data: &BinaryDataset, x: &[u8]) -> FeasibilityReport {
    let m = layout.max_conditions;
    let bits = layout.splitting_bits(x);
    let condition_count = bits.iter().filter(|&&b| b).count();
    let mut c1 = 0;
    let mut c2 = 0;
    let mut n_s1 = 0usize;
    for s in 0..layout.n_samples {
        let row = data.row(s);
        let fails = bits
            .iter()
            .zip(row)
            .filter(|(&on, &v)| on && v == 0)
            .count();
        let mut encoded = 0usize;
        let mut ones = 0usize;
        for c in 0..=m {
            if x[layout.theta_x(s, c)] != 0 {
                encoded += c;
                ones += 1;
            }
        }
        if fails != encoded {
            c1 += 1;
        }
        if ones != 1 {
            c2 += 1;
        }
        if x[layout.theta_x(s, 0)] != 0 {
            n_s1 += 1;
        }
    }
    let add_satisfied = layout
        .split_bounds()
        .is_none_or(|(lo, hi)| (lo..=hi).contains(&n_s1));
    FeasibilityReport {
        c1_violations: c1,
        c2_violations: c2,
        c3_satisfied: (1..=m).contains(&condition_count),
        add_satisfied,
        condition_count,
    }
}

/// The split-search problem with its layout and per-term components.
#[derive(Debug, Clone)]
pub struct SplitQubo {
    pub problem: QuboProblem,
    pub layout: VariableLayout,
    pub weights: PenaltyWeights,
    /// Targets after [`TargetTransform`], as used in the loss.
    pub targets: Vec<f64>,
    pub components: SplitQuboComponents,
}

/// Each Hamiltonian term as its own problem over the full layout; they sum
/// to [`SplitQubo::problem`].
#[derive(Debug, Clone)]
pub struct SplitQuboComponents {
    /// `(w_q / N_S) * SWMSE` quadratic form.
    pub loss: QuboProblem,
    pub c1: QuboProblem,
    pub c2: QuboProblem,
    pub c3: QuboProblem,
    pub add: Option<QuboProblem>,
}

impl SplitQuboComponents {
    pub fn penalty_energy(&self, x: &[u8]) -> f64 {
        self.c1.energy(x)
            + self.c2.energy(x)
            + self.c3.energy(x)
            + self.add.as_ref().map_or(0.0, |p| p.energy(x))
    }
}

/// Integer bounds `ceil(a N)..=floor((1-a) N)`, guarding against `a * N`
/// landing a rounding error away from an integer.
pub fn split_ratio_bounds(a: f64, n_samples: usize) -> (i64, i64) {
    let n = n_samples as f64;
    let lo = (a * n - 1e-9).ceil().max(0.0) as i64;
    let hi = ((1.0 - a) * n + 1e-9).floor() as i64;
    (lo, hi)
}

/// Builds the full Hamiltonian
/// `(w_q/N) SWMSE + (w_c1/N) C1 + (w_c2/N) C2 + C3 + C_add`.
pub fn build_split_qubo(data: &BinaryDataset, opts: &SplitQuboOptions) -> Result<SplitQubo> {
    let n_s = data.n_samples();
    let n_b = data.n_conditions();
    let m = opts.max_conditions;
    if n_s < 2 {
        return Err(Error::TooFewSamples { min: 2, got: n_s });
    }
    if m < 1 || m > n_b {
        return Err(Error::BadConditionLimit { m, n_b });
    }
    if let Some(a) = opts.min_split_ratio {
        if !(0.0..0.5).contains(&a) {
            return Err(Error::BadSplitRatio(a));
        }
    }
    let targets = opts.target_transform.apply(data.targets());
    let weights = opts
        .weights
        .unwrap_or_else(|| PenaltyWeights::default_for(&targets));
    weights.validate()?;

    // Layout first so every component shares the same indices.
    let mut base = QuboBuilder::new();
    let theta_b = base.add_vars(n_b);
    let theta_x = base.add_vars(n_s * (m + 1));
    let mut layout = VariableLayout {
        n_samples: n_s,
        n_conditions: n_b,
        max_conditions: m,
        theta_b,
        theta_x,
        slack_c3: SlackBlock {
            start: 0,
            lo: 1,
            hi: m as i64,
        },
        slack_add: None,
        min_split_ratio: opts.min_split_ratio,
        n_vars: 0,
    };

    let mut c3 = base.clone();
    let count = LinearExpr::sum_of(layout.theta_b.clone());
    layout.slack_c3 = encode_inequality(&mut c3, &count, 1, m as i64, 1.0)?;

    let s1_size = LinearExpr::sum_of((0..n_s).map(|s| layout.theta_x(s, 0)));
    let mut add = None;
    let mut total_vars = c3.n_vars();
    if let Some(a) = opts.min_split_ratio {
        let (lo, hi) = split_ratio_bounds(a, n_s);
        let mut b = QuboBuilder::with_vars(c3.n_vars());
        layout.slack_add = Some(encode_inequality(&mut b, &s1_size, lo, hi, 1.0)?);
        total_vars = b.n_vars();
        add = Some(b);
    }
    layout.n_vars = total_vars;
    let fresh = || QuboBuilder::with_vars(total_vars);

    let ns = n_s as f64;
    let mut loss = fresh();
    {
        let y = |s: usize| layout.theta_x(s, 0);
        let t2_total: f64 = targets.iter().map(|t| t * t).sum();
        let t1_total: f64 = targets.iter().sum();
        let mut m2 = LinearExpr::new();
        let mut m1 = LinearExpr::new();
        for (s, &t) in targets.iter().enumerate() {
            m2.push(y(s), t * t);
            m1.push(y(s), t);
        }
        let scale = weights.w_q / ns;
        // S_1 moments
        loss.add_product(&m2, &s1_size, scale);
        loss.add_square(&m1, -scale);
        // S_0 moments: complements of the S_1 ones
        let neg = |e: &LinearExpr, total: f64| LinearExpr {
            terms: e.terms.iter().map(|&(v, c)| (v, -c)).collect(),
            constant: total,
        };
        let m2_0 = neg(&m2, t2_total);
        let n_0 = neg(&s1_size, ns);
        let m1_0 = neg(&m1, t1_total);
        loss.add_product(&m2_0, &n_0, scale);
        loss.add_square(&m1_0, -scale);
    }

    let mut c1 = fresh();
    let mut c2 = fresh();
    for s in 0..n_s {
        let row = data.row(s);
        let mut residual = LinearExpr::new();
        for (b, &v) in row.iter().enumerate() {
            if v == 0 {
                residual.push(layout.theta_b(b), 1.0);
            }
        }
        for c in 1..=m {
            residual.push(layout.theta_x(s, c), -(c as f64));
        }
        c1.add_square(&residual, weights.w_c1 / ns);

        let one_hot = LinearExpr::sum_of((0..=m).map(|c| layout.theta_x(s, c))).plus(-1.0);
        c2.add_square(&one_hot, weights.w_c2 / ns);
    }

    c3.add_vars(total_vars - c3.n_vars());

    let components = SplitQuboComponents {
        loss: loss.build()?,
        c1: c1.build()?,
        c2: c2.build()?,
        c3: c3.build()?,
        add: add.map(QuboBuilder::build).transpose()?,
    };
    let mut problem = components.loss.sum(&components.c1)?;
    problem = problem.sum(&components.c2)?;
    problem = problem.sum(&components.c3)?;
    if let Some(a) = &components.add {
        problem = problem.sum(a)?;
    }
    problem.quadratic.retain(|_, v| *v != 0.0);

    Ok(SplitQubo {
        problem,
        layout,
        weights,
        targets,
        components,
    })
}

impl SplitQubo {
    /// One-line summary of the variable counts.
    pub fn describe(&self) -> String {
        let l = &self.layout;
        let mut s = String::new();
        let _ = write!(
            s,
            "n_vars={} theta_B={} theta_X={} slack_c3={} slack_add={} terms={}",
            l.n_vars,
            l.theta_b.len(),
            l.theta_x.len(),
            l.slack_c3.len(),
            l.slack_add.as_ref().map_or(0, SlackBlock::len),
            self.problem.n_terms()
        );
        s
    }
}
