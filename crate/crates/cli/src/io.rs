//! Binary datasets on disk: `<prefix>.csv` holds the 0/1 matrix and targets,
//! `<prefix>.json` the condition metadata.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::Context;
use qubo_tree::{BinaryDataset, DatasetMetadata};

pub fn dataset_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    (prefix.with_extension("csv"), prefix.with_extension("json"))
}

pub fn write_dataset(prefix: &Path, data: &BinaryDataset, seed: Option<u64>) -> anyhow::Result<()> {
    let (csv_path, json_path) = dataset_paths(prefix);
    let f = File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?;
    data.write_csv(BufWriter::new(f))?;
    let f =
        File::create(&json_path).with_context(|| format!("creating {}", json_path.display()))?;
    serde_json::to_writer_pretty(BufWriter::new(f), &data.metadata(seed))?;
    Ok(())
}

pub fn read_dataset(prefix: &Path) -> anyhow::Result<BinaryDataset> {
    let (csv_path, json_path) = dataset_paths(prefix);
    let f = File::open(&json_path).with_context(|| format!("opening {}", json_path.display()))?;
    let meta: DatasetMetadata = serde_json::from_reader(BufReader::new(f))
        .with_context(|| format!("parsing {}", json_path.display()))?;
    let f = File::open(&csv_path).with_context(|| format!("opening {}", csv_path.display()))?;
    BinaryDataset::read_csv(BufReader::new(f), &meta)
        .with_context(|| format!("reading {}", csv_path.display()))
}
