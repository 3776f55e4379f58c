#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use scarcegan::kdd::{load_kdd, KddCategory, KddData};
use serde::Deserialize;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn train() -> KddData {
    load_kdd(fixture("kdd_train.txt"), false).unwrap()
}

pub fn test() -> KddData {
    load_kdd(fixture("kdd_test.txt"), false).unwrap()
}

#[derive(Debug, Deserialize)]
pub struct Counts {
    pub train_rows: usize,
    pub train_rows_dedup: usize,
    pub test_rows: usize,
    pub numeric_columns: usize,
    pub vocab_sizes: [usize; 3],
    pub encoded_width: usize,
    pub train: BTreeMap<String, usize>,
    pub train_dedup: BTreeMap<String, usize>,
    pub test: BTreeMap<String, usize>,
}

pub fn counts() -> Counts {
    toml::from_str(&std::fs::read_to_string(fixture("kdd_counts.toml")).unwrap()).unwrap()
}

pub fn by_name(c: &BTreeMap<KddCategory, usize>) -> BTreeMap<String, usize> {
    c.iter().map(|(k, v)| (k.name().to_string(), *v)).collect()
}
