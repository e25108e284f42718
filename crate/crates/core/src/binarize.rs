//! Raw tabular features to basic conditions and the binary indicator matrix.
//!
//! Continuous columns produce a `>` / `<=` pair at every quantile cut, so a
//! logical product of two of them can express a value band. Categorical
//! columns produce one `!=` condition per label, so a logical product can
//! express a union of the remaining labels.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default drop limit for categorical columns: more unique labels than this
/// and the column produces no conditions.
pub const DEFAULT_MAX_CATEGORIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Categorical,
}

/// One raw feature column. `None` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub enum RawColumn {
    Continuous {
        name: String,
        values: Vec<Option<f64>>,
    },
    Categorical {
        name: String,
        values: Vec<Option<String>>,
    },
}

impl RawColumn {
    pub fn name(&self) -> &str {
        match self {
            RawColumn::Continuous { name, .. } | RawColumn::Categorical { name, .. } => name,
        }
    }

    pub fn kind(&self) -> ColumnKind {
        match self {
            RawColumn::Continuous { .. } => ColumnKind::Continuous,
            RawColumn::Categorical { .. } => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            RawColumn::Continuous { values, .. } => values.len(),
            RawColumn::Categorical { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Raw features plus a fully observed real target.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    columns: Vec<RawColumn>,
    targets: Vec<f64>,
}

impl RawDataset {
    pub fn new(columns: Vec<RawColumn>, targets: Vec<f64>) -> Result<Self> {
        if targets.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if targets.len() < 2 {
            return Err(Error::TooFewSamples {
                min: 2,
                got: targets.len(),
            });
        }
        if let Some(bad) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::BadColumn {
                column: "<target>".into(),
                reason: format!("non-finite target at row {bad}"),
            });
        }
        for col in &columns {
            if col.len() != targets.len() {
                return Err(Error::BadColumn {
                    column: col.name().to_string(),
                    reason: format!("has {} rows, targets have {}", col.len(), targets.len()),
                });
            }
        }
        Ok(Self { columns, targets })
    }

    pub fn columns(&self) -> &[RawColumn] {
        &self.columns
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name().to_string()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    GreaterThan(f64),
    LessThanOrEqual(f64),
    NotEqual(String),
}

/// A single-feature predicate; one column of the binary matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasicCondition {
    pub feature_index: usize,
    pub kind: ConditionKind,
}

impl BasicCondition {
    pub fn greater_than(feature_index: usize, threshold: f64) -> Self {
        Self {
            feature_index,
            kind: ConditionKind::GreaterThan(threshold),
        }
    }

    pub fn less_than_or_equal(feature_index: usize, threshold: f64) -> Self {
        Self {
            feature_index,
            kind: ConditionKind::LessThanOrEqual(threshold),
        }
    }

    pub fn not_equal(feature_index: usize, category: impl Into<String>) -> Self {
        Self {
            feature_index,
            kind: ConditionKind::NotEqual(category.into()),
        }
    }

    /// Missing values never satisfy a condition.
    pub fn eval_continuous(&self, value: Option<f64>) -> bool {
        match (&self.kind, value) {
            (ConditionKind::GreaterThan(c), Some(v)) => v > *c,
            (ConditionKind::LessThanOrEqual(c), Some(v)) => v <= *c,
            _ => false,
        }
    }

    pub fn eval_categorical(&self, value: Option<&str>) -> bool {
        match (&self.kind, value) {
            (ConditionKind::NotEqual(c), Some(v)) => v != c,
            _ => false,
        }
    }

    /// Human-readable predicate, e.g. `LotArea > 9500` or `Street != "Pave"`.
    pub fn describe(&self, feature_name: &str) -> String {
        match &self.kind {
            ConditionKind::GreaterThan(c) => format!("{feature_name} > {c}"),
            ConditionKind::LessThanOrEqual(c) => format!("{feature_name} <= {c}"),
            ConditionKind::NotEqual(c) => format!("{feature_name} != {c:?}"),
        }
    }

    fn check_against(&self, raw: &RawDataset) -> Result<()> {
        let col = raw
            .columns
            .get(self.feature_index)
            .ok_or(Error::MissingColumn {
                index: self.feature_index,
                count: raw.n_features(),
            })?;
        let ok = matches!(
            (&self.kind, col.kind()),
            (ConditionKind::GreaterThan(_), ColumnKind::Continuous)
                | (ConditionKind::LessThanOrEqual(_), ColumnKind::Continuous)
                | (ConditionKind::NotEqual(_), ColumnKind::Categorical)
        );
        if ok {
            Ok(())
        } else {
            Err(Error::ConditionKindMismatch {
                column: col.name().to_string(),
            })
        }
    }
}

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be non-empty and ascending.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Conditions at the `Q`-quantile cuts `1/Q, ..., (Q-1)/Q`.
pub fn derive_conditions(
    raw: &RawDataset,
    q: usize,
    max_categories: usize,
) -> Result<Vec<BasicCondition>> {
    let max = raw.n_samples().saturating_sub(1);
    if q < 2 || q > max {
        return Err(Error::QuantileOutOfRange { q, max });
    }
    let fractions: Vec<f64> = (1..q).map(|k| k as f64 / q as f64).collect();
    derive_conditions_at(raw, &fractions, max_categories)
}

/// Conditions at explicit quantile fractions. Every continuous column yields
/// a `>` and a `<=` condition per distinct threshold; categorical columns with
/// at most `max_categories` labels yield one `!=` condition per label and are
/// dropped otherwise.
pub fn derive_conditions_at(
    raw: &RawDataset,
    fractions: &[f64],
    max_categories: usize,
) -> Result<Vec<BasicCondition>> {
    if raw.n_samples() == 0 || raw.n_features() == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&p) = fractions.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        return Err(Error::BadQuantileFraction(p));
    }
    let mut fractions = fractions.to_vec();
    fractions.sort_by(f64::total_cmp);

    let mut out = Vec::new();
    for (index, col) in raw.columns.iter().enumerate() {
        match col {
            RawColumn::Continuous { values, .. } => {
                let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
                if sorted.is_empty() {
                    continue;
                }
                sorted.sort_by(f64::total_cmp);
                let mut thresholds: Vec<f64> =
                    fractions.iter().map(|&p| quantile(&sorted, p)).collect();
                thresholds.dedup();
                for c in thresholds {
                    out.push(BasicCondition::greater_than(index, c));
                    out.push(BasicCondition::less_than_or_equal(index, c));
                }
            }
            RawColumn::Categorical { values, .. } => {
                let labels: BTreeSet<&str> = values.iter().flatten().map(String::as_str).collect();
                if labels.len() > max_categories {
                    continue;
                }
                out.extend(
                    labels
                        .into_iter()
                        .map(|l| BasicCondition::not_equal(index, l)),
                );
            }
        }
    }
    Ok(out)
}

/// Evaluate every condition on every sample.
pub fn apply_conditions(raw: &RawDataset, conditions: &[BasicCondition]) -> Result<BinaryDataset> {
    for c in conditions {
        c.check_against(raw)?;
    }
    let n_s = raw.n_samples();
    let n_b = conditions.len();
    let mut matrix = vec![0u8; n_s * n_b];
    for (b, cond) in conditions.iter().enumerate() {
        match &raw.columns[cond.feature_index] {
            RawColumn::Continuous { values, .. } => {
                for (s, v) in values.iter().enumerate() {
                    matrix[s * n_b + b] = cond.eval_continuous(*v) as u8;
                }
            }
            RawColumn::Categorical { values, .. } => {
                for (s, v) in values.iter().enumerate() {
                    matrix[s * n_b + b] = cond.eval_categorical(v.as_deref()) as u8;
                }
            }
        }
    }
    Ok(BinaryDataset {
        n_samples: n_s,
        matrix,
        conditions: conditions.to_vec(),
        feature_names: raw.feature_names(),
        targets: raw.targets.clone(),
    })
}

/// `N_S x N_B` matrix of condition indicators plus the target vector.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryDataset {
    n_samples: usize,
    /// Row-major, one byte per entry.
    matrix: Vec<u8>,
    conditions: Vec<BasicCondition>,
    feature_names: Vec<String>,
    targets: Vec<f64>,
}

impl BinaryDataset {
    /// Build from explicit rows. Every row must have one entry per condition.
    pub fn from_rows(
        rows: Vec<Vec<bool>>,
        conditions: Vec<BasicCondition>,
        feature_names: Vec<String>,
        targets: Vec<f64>,
    ) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::LengthMismatch {
                expected: targets.len(),
                got: rows.len(),
            });
        }
        if rows.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n_b = conditions.len();
        if let Some(c) = conditions
            .iter()
            .find(|c| c.feature_index >= feature_names.len())
        {
            return Err(Error::MissingColumn {
                index: c.feature_index,
                count: feature_names.len(),
            });
        }
        let mut matrix = Vec::with_capacity(rows.len() * n_b);
        for row in &rows {
            if row.len() != n_b {
                return Err(Error::LengthMismatch {
                    expected: n_b,
                    got: row.len(),
                });
            }
            matrix.extend(row.iter().map(|&x| x as u8));
        }
        Ok(Self {
            n_samples: rows.len(),
            matrix,
            conditions,
            feature_names,
            targets,
        })
    }

    /// Convenience for tests and toy problems: one anonymous feature per
    /// column, each column treated as `f{b} > 0.5`.
    pub fn from_bits(rows: Vec<Vec<bool>>, targets: Vec<f64>) -> Result<Self> {
        let n_b = rows.first().map_or(0, Vec::len);
        let conditions = (0..n_b)
            .map(|b| BasicCondition::greater_than(b, 0.5))
            .collect();
        let names = (0..n_b).map(|b| format!("f{b}")).collect();
        Self::from_rows(rows, conditions, names, targets)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_conditions(&self) -> usize {
        self.conditions.len()
    }

    #[inline]
    pub fn get(&self, sample: usize, condition: usize) -> bool {
        self.matrix[sample * self.conditions.len() + condition] != 0
    }

    pub fn row(&self, sample: usize) -> &[u8] {
        let n_b = self.conditions.len();
        &self.matrix[sample * n_b..(sample + 1) * n_b]
    }

    pub fn column(&self, condition: usize) -> impl Iterator<Item = bool> + '_ {
        (0..self.n_samples).map(move |s| self.get(s, condition))
    }

    pub fn conditions(&self) -> &[BasicCondition] {
        &self.conditions
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn describe(&self, condition: usize) -> String {
        let c = &self.conditions[condition];
        c.describe(&self.feature_names[c.feature_index])
    }

    /// Seeded subsample of `n` distinct rows, kept in original order.
    pub fn subsample(&self, n: usize, seed: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::TooFewSamples { min: 2, got: n });
        }
        if n > self.n_samples {
            return Err(Error::TooFewSamples {
                min: n,
                got: self.n_samples,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = index::sample(&mut rng, self.n_samples, n).into_vec();
        rows.sort_unstable();
        Ok(self.select_rows(&rows))
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let n_b = self.conditions.len();
        let mut matrix = Vec::with_capacity(rows.len() * n_b);
        for &r in rows {
            matrix.extend_from_slice(self.row(r));
        }
        Self {
            n_samples: rows.len(),
            matrix,
            conditions: self.conditions.clone(),
            feature_names: self.feature_names.clone(),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
        }
    }

    pub fn metadata(&self, seed: Option<u64>) -> DatasetMetadata {
        DatasetMetadata {
            n_samples: self.n_samples,
            n_conditions: self.n_conditions(),
            seed,
            feature_names: self.feature_names.clone(),
            conditions: self
                .conditions
                .iter()
                .enumerate()
                .map(|(b, c)| ConditionRecord {
                    index: b,
                    description: self.describe(b),
                    condition: c.clone(),
                })
                .collect(),
        }
    }

    /// CSV with one `c{b}` column per condition (0/1) followed by `target`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (0..self.n_conditions()).map(|b| format!("c{b}")).collect();
        header.push("target".into());
        w.write_record(&header)?;
        for s in 0..self.n_samples {
            let mut rec: Vec<String> = self.row(s).iter().map(|x| x.to_string()).collect();
            rec.push(self.targets[s].to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<csv writer>".into(),
            source: e,
        })?;
        Ok(())
    }

    /// Inverse of [`write_csv`](Self::write_csv) plus [`metadata`](Self::metadata).
    pub fn read_csv<R: Read>(reader: R, metadata: &DatasetMetadata) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let n_b = metadata.n_conditions;
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            if rec.len() != n_b + 1 {
                return Err(Error::LengthMismatch {
                    expected: n_b + 1,
                    got: rec.len(),
                });
            }
            let mut row = Vec::with_capacity(n_b);
            for field in rec.iter().take(n_b) {
                row.push(match field.trim() {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::BadColumn {
                            column: "<binary>".into(),
                            reason: format!("expected 0/1, found {other:?}"),
                        })
                    }
                });
            }
            let t: f64 = rec[n_b].trim().parse().map_err(|_| Error::BadColumn {
                column: "target".into(),
                reason: format!("not a number: {:?}", &rec[n_b]),
            })?;
            rows.push(row);
            targets.push(t);
        }
        Self::from_rows(
            rows,
            metadata
                .conditions
                .iter()
                .map(|c| c.condition.clone())
                .collect(),
            metadata.feature_names.clone(),
            targets,
        )
    }
}

/// JSON sidecar for an exported [`BinaryDataset`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMetadata {
    pub n_samples: usize,
    pub n_conditions: usize,
    pub seed: Option<u64>,
    pub feature_names: Vec<String>,
    pub conditions: Vec<ConditionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub index: usize,
    pub description: String,
    pub condition: BasicCondition,
}

impl fmt::Display for BasicCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe(&format!("x{}", self.feature_index)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn continuous(name: &str, v: &[f64]) -> RawColumn {
        RawColumn::Continuous {
            name: name.into(),
            values: v.iter().map(|&x| Some(x)).collect(),
        }
    }

    fn categorical(name: &str, v: &[&str]) -> RawColumn {
        RawColumn::Categorical {
            name: name.into(),
            values: v.iter().map(|s| Some(s.to_string())).collect(),
        }
    }

    #[test]
    fn two_continuous_columns_give_eight_conditions_at_q3() {
        let raw = RawDataset::new(
            vec![
                continuous("a", &[0.1, 0.5, 0.9, 1.3, 2.0, 3.3]),
                continuous("b", &[5.0, 4.0, 3.0, 2.0, 1.0, 0.0]),
            ],
            vec![0.0; 6],
        )
        .unwrap();
        let conds = derive_conditions(&raw, 3, DEFAULT_MAX_CATEGORIES).unwrap();
        assert_eq!(conds.len(), 2 * 2 * (3 - 1));
    }

    #[test]
    fn categorical_labels_within_limit() {
        let raw = RawDataset::new(
            vec![categorical("c", &["1", "2", "3", "4", "1"])],
            vec![0.0; 5],
        )
        .unwrap();
        let conds = derive_conditions(&raw, 2, 4).unwrap();
        assert_eq!(conds.len(), 4);
        assert!(conds
            .iter()
            .all(|c| matches!(c.kind, ConditionKind::NotEqual(_))));
    }

    #[test]
    fn categorical_over_limit_is_dropped() {
        let raw = RawDataset::new(
            vec![categorical("c", &["1", "2", "3", "4", "5"])],
            vec![0.0; 5],
        )
        .unwrap();
        assert!(derive_conditions(&raw, 2, 3).unwrap().is_empty());
    }

    #[test]
    fn quantile_range_is_checked() {
        let raw = RawDataset::new(vec![continuous("a", &[1.0, 2.0, 3.0])], vec![0.0; 3]).unwrap();
        assert!(matches!(
            derive_conditions(&raw, 1, 3),
            Err(Error::QuantileOutOfRange { .. })
        ));
        assert!(matches!(
            derive_conditions(&raw, 3, 3),
            Err(Error::QuantileOutOfRange { .. })
        ));
        assert!(derive_conditions(&raw, 2, 3).is_ok());
    }

    #[test]
    fn empty_and_short_datasets_are_rejected() {
        assert!(matches!(
            RawDataset::new(vec![], vec![]),
            Err(Error::EmptyDataset)
        ));
        assert!(matches!(
            RawDataset::new(vec![], vec![1.0]),
            Err(Error::TooFewSamples { .. })
        ));
        let no_features = RawDataset::new(vec![], vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            derive_conditions(&no_features, 2, 3),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn quantile_interpolates_linearly() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert!((quantile(&v, 1.0 / 3.0) - 2.0).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn duplicate_thresholds_collapse() {
        let raw = RawDataset::new(
            vec![continuous("a", &[1.0, 1.0, 1.0, 1.0, 2.0])],
            vec![0.0; 5],
        )
        .unwrap();
        let conds = derive_conditions(&raw, 4, 3).unwrap();
        // cuts at 1/4, 2/4, 3/4 all land on 1.0
        assert_eq!(conds.len(), 2);
    }

    #[test]
    fn predicates_on_single_values() {
        assert!(BasicCondition::greater_than(0, 0.5).eval_continuous(Some(0.7)));
        assert!(!BasicCondition::not_equal(0, "1").eval_categorical(Some("1")));
        assert!(!BasicCondition::greater_than(0, 0.5).eval_continuous(None));
        assert!(!BasicCondition::less_than_or_equal(0, 0.5).eval_continuous(None));
        assert!(!BasicCondition::not_equal(0, "1").eval_categorical(None));
    }

    #[test]
    fn not_equal_product_expresses_a_label_union() {
        let raw =
            RawDataset::new(vec![categorical("c", &["1", "2", "3", "4"])], vec![0.0; 4]).unwrap();
        let conds = vec![
            BasicCondition::not_equal(0, "1"),
            BasicCondition::not_equal(0, "2"),
        ];
        let bin = apply_conditions(&raw, &conds).unwrap();
        let product: Vec<bool> = (0..4).map(|s| bin.get(s, 0) && bin.get(s, 1)).collect();
        assert_eq!(product, vec![false, false, true, true]);
    }

    #[test]
    fn mismatched_conditions_are_rejected() {
        let raw = RawDataset::new(vec![continuous("a", &[1.0, 2.0])], vec![0.0; 2]).unwrap();
        assert!(matches!(
            apply_conditions(&raw, &[BasicCondition::greater_than(3, 0.0)]),
            Err(Error::MissingColumn { .. })
        ));
        assert!(matches!(
            apply_conditions(&raw, &[BasicCondition::not_equal(0, "x")]),
            Err(Error::ConditionKindMismatch { .. })
        ));
    }

    #[test]
    fn missing_values_fail_every_condition() {
        let raw = RawDataset::new(
            vec![
                RawColumn::Continuous {
                    name: "a".into(),
                    values: vec![Some(1.0), None, Some(3.0)],
                },
                RawColumn::Categorical {
                    name: "c".into(),
                    values: vec![None, Some("x".into()), Some("y".into())],
                },
            ],
            vec![0.0; 3],
        )
        .unwrap();
        let conds = derive_conditions(&raw, 2, 3).unwrap();
        let bin = apply_conditions(&raw, &conds).unwrap();
        for (b, c) in conds.iter().enumerate() {
            if c.feature_index == 0 {
                assert!(!bin.get(1, b));
            } else {
                assert!(!bin.get(0, b));
            }
        }
    }

    #[test]
    fn csv_export_reads_back() {
        let raw = RawDataset::new(
            vec![
                continuous("a", &[0.1, 0.5, 0.9, 1.3]),
                categorical("c", &["x", "y", "x", "z"]),
            ],
            vec![1.0, 2.5, -3.0, 4.0],
        )
        .unwrap();
        let conds = derive_conditions(&raw, 2, 3).unwrap();
        let bin = apply_conditions(&raw, &conds).unwrap();
        let mut buf = Vec::new();
        bin.write_csv(&mut buf).unwrap();
        let meta: DatasetMetadata =
            serde_json::from_str(&serde_json::to_string(&bin.metadata(Some(9))).unwrap()).unwrap();
        let back = BinaryDataset::read_csv(buf.as_slice(), &meta).unwrap();
        assert_eq!(back, bin);
    }

    #[test]
    fn subsample_is_seeded() {
        let rows: Vec<Vec<bool>> = (0..50).map(|s| vec![s % 2 == 0, s % 3 == 0]).collect();
        let targets: Vec<f64> = (0..50).map(|s| s as f64).collect();
        let bin = BinaryDataset::from_bits(rows, targets).unwrap();
        let a = bin.subsample(20, 11).unwrap();
        let b = bin.subsample(20, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_samples(), 20);
        let t = a.targets();
        assert!(
            t.windows(2).all(|w| w[0] < w[1]),
            "rows keep original order"
        );
        assert_ne!(a, bin.subsample(20, 12).unwrap());
    }
}
