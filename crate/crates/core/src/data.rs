//! Dataset sources: the planted logical-product generator, a noisy raw
//! stand-in for tabular data, and CSV ingestion.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::Read;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::binarize::{
    apply_conditions, derive_conditions_at, BasicCondition, BinaryDataset, RawColumn, RawDataset,
};
use crate::error::{Error, Result};
use crate::tree::SplittingVector;

/// Quantile fractions used for tabular data by default.
pub const DEFAULT_Q_FRACTIONS: [f64; 2] = [0.33, 0.66];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_conditions: usize,
    /// Number of leading columns whose logical product is the target.
    pub k: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_samples: usize, n_conditions: usize, k: usize, seed: u64) -> Result<Self> {
        let s = Self {
            n_samples,
            n_conditions,
            k,
            seed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return Err(Error::BadSyntheticSpec(format!(
                "need at least 2 samples, got {}",
                self.n_samples
            )));
        }
        if self.k < 1 || self.k > self.n_conditions {
            return Err(Error::BadSyntheticSpec(format!(
                "K={} must satisfy 1 <= K <= N_B={}",
                self.k, self.n_conditions
            )));
        }
        Ok(())
    }

    /// Column threshold: the first `K` columns are 1 with probability
    /// `0.5^(1/K)` so their product is 1 with probability one half.
    pub fn threshold(&self, column: usize) -> f64 {
        if column < self.k {
            1.0 - 0.5f64.powf(1.0 / self.k as f64)
        } else {
            0.5
        }
    }

    /// The planted splitting vector: the first `K` conditions.
    pub fn optimal_vector(&self) -> SplittingVector {
        SplittingVector((0..self.n_conditions).map(|b| b < self.k).collect())
    }
}

/// Each entry is `u > th` for a fresh uniform `u`; the target is the product
/// of the first `K` entries. Sample `s` draws from stream `s` of a ChaCha8
/// generator keyed by the seed, so rows can be generated independently.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<BinaryDataset> {
    spec.validate()?;
    let n_b = spec.n_conditions;
    let thresholds: Vec<f64> = (0..n_b).map(|b| spec.threshold(b)).collect();
    let mut rows = Vec::with_capacity(spec.n_samples);
    let mut targets = Vec::with_capacity(spec.n_samples);
    for s in 0..spec.n_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(s as u64);
        let row: Vec<bool> = thresholds.iter().map(|&th| rng.gen::<f64>() > th).collect();
        targets.push(if row[..spec.k].iter().all(|&x| x) {
            1.0
        } else {
            0.0
        });
        rows.push(row);
    }
    let conditions = thresholds
        .iter()
        .enumerate()
        .map(|(b, &th)| BasicCondition::greater_than(b, th))
        .collect();
    let names = (0..n_b).map(|b| format!("u{b}")).collect();
    BinaryDataset::from_rows(rows, conditions, names, targets)
}

/// Continuous uniform features where the target jumps by `effect` inside
/// `x0 > 1/3 AND x1 > 1/3`, plus Gaussian noise. No single threshold on one
/// feature reproduces the region.
pub fn generate_planted_interaction(
    n_samples: usize,
    n_features: usize,
    effect: f64,
    noise_sd: f64,
    seed: u64,
) -> Result<RawDataset> {
    if n_features < 2 {
        return Err(Error::BadSyntheticSpec(
            "planted interaction needs at least 2 features".into(),
        ));
    }
    let noise =
        Normal::new(0.0, noise_sd).map_err(|e| Error::BadSyntheticSpec(format!("noise: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cols = vec![Vec::with_capacity(n_samples); n_features];
    let mut targets = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..n_features).map(|_| rng.gen::<f64>()).collect();
        let inside = x[0] > 1.0 / 3.0 && x[1] > 1.0 / 3.0;
        targets.push(if inside { effect } else { 0.0 } + noise.sample(&mut rng));
        for (c, v) in cols.iter_mut().zip(x) {
            c.push(Some(v));
        }
    }
    let columns = cols
        .into_iter()
        .enumerate()
        .map(|(i, values)| RawColumn::Continuous {
            name: format!("x{i}"),
            values,
        })
        .collect();
    RawDataset::new(columns, targets)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnRole {
    Continuous,
    Categorical,
    Ignore,
}

/// Sidecar describing how to read a CSV file.
///
/// ```toml
/// target = "SalePrice"
/// missing = ["", "NA"]
///
/// [columns]
/// Id = "ignore"
/// Street = "categorical"
/// ```
///
/// Columns not listed take `default_role` (continuous unless set).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub target: String,
    #[serde(default = "default_missing")]
    pub missing: Vec<String>,
    #[serde(default = "default_role")]
    pub default_role: ColumnRole,
    #[serde(default)]
    pub columns: BTreeMap<String, ColumnRole>,
}

fn default_missing() -> Vec<String> {
    vec![String::new(), "NA".into()]
}

fn default_role() -> ColumnRole {
    ColumnRole::Continuous
}

impl Schema {
    pub fn new(target: impl Into<String>) -> Self {
        Self {
            target: target.into(),
            missing: default_missing(),
            default_role: default_role(),
            columns: BTreeMap::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn role(&self, column: &str) -> ColumnRole {
        self.columns
            .get(column)
            .copied()
            .unwrap_or(self.default_role)
    }
}

/// Parses a headed CSV into a [`RawDataset`] according to `schema`.
pub fn read_raw_csv<R: Read>(reader: R, schema: &Schema) -> Result<RawDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    for name in schema.columns.keys() {
        if !headers.contains(name) {
            return Err(Error::Schema(format!("column {name:?} not in CSV header")));
        }
    }
    let target_idx = headers
        .iter()
        .position(|h| *h == schema.target)
        .ok_or_else(|| {
            Error::Schema(format!(
                "target column {:?} not in CSV header",
                schema.target
            ))
        })?;
    let missing: HashSet<&str> = schema.missing.iter().map(String::as_str).collect();

    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for rec in rdr.records() {
        let rec = rec?;
        for (i, f) in rec.iter().enumerate() {
            cells[i].push(f.to_string());
        }
    }
    let mut targets = Vec::with_capacity(cells[target_idx].len());
    for (row, v) in cells[target_idx].iter().enumerate() {
        if missing.contains(v.as_str()) {
            return Err(Error::BadColumn {
                column: schema.target.clone(),
                reason: format!("missing target at data row {}", row + 1),
            });
        }
        targets.push(v.parse::<f64>().map_err(|_| Error::BadColumn {
            column: schema.target.clone(),
            reason: format!("not a number at data row {}: {v:?}", row + 1),
        })?);
    }

    let mut columns = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        if i == target_idx {
            continue;
        }
        let col = std::mem::take(&mut cells[i]);
        match schema.role(name) {
            ColumnRole::Ignore => {}
            ColumnRole::Categorical => columns.push(RawColumn::Categorical {
                name: name.clone(),
                values: col
                    .into_iter()
                    .map(|v| (!missing.contains(v.as_str())).then_some(v))
                    .collect(),
            }),
            ColumnRole::Continuous => {
                let mut values = Vec::with_capacity(col.len());
                for (row, v) in col.iter().enumerate() {
                    if missing.contains(v.as_str()) {
                        values.push(None);
                        continue;
                    }
                    let x: f64 = v.parse().map_err(|_| Error::BadColumn {
                        column: name.clone(),
                        reason: format!(
                            "not a number at data row {}: {v:?} (mark the column categorical?)",
                            row + 1
                        ),
                    })?;
                    values.push(Some(x));
                }
                columns.push(RawColumn::Continuous {
                    name: name.clone(),
                    values,
                });
            }
        }
    }
    RawDataset::new(columns, targets)
}

/// Reads a CSV file and binarizes it at the given quantile fractions,
/// dropping categorical columns with more than `max_categories` labels.
pub fn load_real(
    csv_path: &Path,
    schema: &Schema,
    q_fractions: &[f64],
    max_categories: usize,
) -> Result<BinaryDataset> {
    let file = File::open(csv_path).map_err(|source| Error::Io {
        path: csv_path.to_path_buf(),
        source,
    })?;
    let raw = read_raw_csv(file, schema)?;
    binarize_raw(&raw, q_fractions, max_categories)
}

pub fn binarize_raw(
    raw: &RawDataset,
    q_fractions: &[f64],
    max_categories: usize,
) -> Result<BinaryDataset> {
    let conditions = derive_conditions_at(raw, q_fractions, max_categories)?;
    apply_conditions(raw, &conditions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binarize::DEFAULT_MAX_CATEGORIES;
    use crate::tree::{extract_split, metrics};

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec::new(20, 10, 0, 1).is_err());
        assert!(SyntheticSpec::new(20, 10, 11, 1).is_err());
        assert!(SyntheticSpec::new(1, 10, 1, 1).is_err());
        assert!(SyntheticSpec::new(2, 1, 1, 1).is_ok());
    }

    #[test]
    fn k1_first_column_is_the_target() {
        let spec = SyntheticSpec::new(200, 10, 1, 7).unwrap();
        assert_eq!(spec.threshold(0), 0.5);
        let d = generate_synthetic(&spec).unwrap();
        for s in 0..d.n_samples() {
            assert_eq!(d.get(s, 0) as u8 as f64, d.targets()[s]);
        }
        assert_eq!(spec.optimal_vector().selected(), vec![0]);
    }

    #[test]
    fn target_is_product_of_first_k_columns() {
        for k in 1..=4 {
            let spec = SyntheticSpec::new(300, 8, k, 100 + k as u64).unwrap();
            let d = generate_synthetic(&spec).unwrap();
            for s in 0..d.n_samples() {
                let prod = (0..k).all(|b| d.get(s, b));
                assert_eq!(d.targets()[s], prod as u8 as f64);
            }
        }
    }

    #[test]
    fn k2_marginal_matches_sqrt_half() {
        let spec = SyntheticSpec::new(100_000, 3, 2, 11).unwrap();
        let d = generate_synthetic(&spec).unwrap();
        for b in 0..2 {
            let p = d.column(b).filter(|&x| x).count() as f64 / 1e5;
            assert!((p - 0.5f64.sqrt()).abs() < 0.01, "column {b}: {p}");
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::new(50, 12, 3, 99).unwrap();
        assert_eq!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&spec).unwrap()
        );
        let other = SyntheticSpec { seed: 100, ..spec };
        assert_ne!(
            generate_synthetic(&spec).unwrap(),
            generate_synthetic(&other).unwrap()
        );
    }

    #[test]
    fn planted_vector_has_zero_mse() {
        let spec = SyntheticSpec::new(40, 10, 2, 5).unwrap();
        let d = generate_synthetic(&spec).unwrap();
        let split = extract_split(&spec.optimal_vector(), &d).unwrap();
        assert_eq!(metrics(&split, &d).mse, 0.0);
        assert!(split.s1.iter().all(|&s| d.targets()[s] == 1.0));
        assert!(split.s0.iter().all(|&s| d.targets()[s] == 0.0));
    }

    const CSV: &str = "Id,Area,Street,Zone,Price\n\
        1,100,Pave,A,10\n\
        2,NA,Grvl,B,12\n\
        3,300,Pave,C,15\n\
        4,400,Pave,D,20\n\
        5,500,Grvl,A,22\n";

    fn schema() -> Schema {
        Schema::from_toml(
            r#"
            target = "Price"
            [columns]
            Id = "ignore"
            Street = "categorical"
            Zone = "categorical"
            "#,
        )
        .unwrap()
    }

    #[test]
    fn csv_ingestion_respects_schema() {
        let raw = read_raw_csv(CSV.as_bytes(), &schema()).unwrap();
        assert_eq!(raw.feature_names(), vec!["Area", "Street", "Zone"]);
        assert_eq!(raw.targets(), &[10.0, 12.0, 15.0, 20.0, 22.0]);
        match &raw.columns()[0] {
            RawColumn::Continuous { values, .. } => assert_eq!(values[1], None),
            _ => panic!("Area should be continuous"),
        }
        // Zone has 4 labels and is dropped; Street keeps 2; Area gives 2 x 2
        let bin = binarize_raw(&raw, &DEFAULT_Q_FRACTIONS, DEFAULT_MAX_CATEGORIES).unwrap();
        assert_eq!(bin.n_conditions(), 4 + 2);
    }

    #[test]
    fn csv_errors() {
        let bad_target = Schema::new("Nope");
        assert!(matches!(
            read_raw_csv(CSV.as_bytes(), &bad_target),
            Err(Error::Schema(_))
        ));
        // Street is text, so leaving it continuous fails
        let mut s = schema();
        s.columns.remove("Street");
        assert!(matches!(
            read_raw_csv(CSV.as_bytes(), &s),
            Err(Error::BadColumn { .. })
        ));
        let missing_target = "a,t\n1,\n2,3\n";
        assert!(read_raw_csv(missing_target.as_bytes(), &Schema::new("t")).is_err());
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_real(
                &dir.path().join("absent.csv"),
                &schema(),
                &DEFAULT_Q_FRACTIONS,
                3
            ),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn all_continuous_gives_four_columns_per_feature() {
        let raw = generate_planted_interaction(200, 5, 1.0, 0.1, 3).unwrap();
        let bin = binarize_raw(&raw, &DEFAULT_Q_FRACTIONS, DEFAULT_MAX_CATEGORIES).unwrap();
        assert_eq!(bin.n_conditions(), 4 * 5);
    }

    #[test]
    fn load_real_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, CSV).unwrap();
        let bin = load_real(&path, &schema(), &DEFAULT_Q_FRACTIONS, 3).unwrap();
        assert_eq!(bin.n_samples(), 5);
        assert!(
            bin.describe(0).starts_with("Area > 29"),
            "{}",
            bin.describe(0)
        );
    }
}
