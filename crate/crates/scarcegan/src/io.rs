//! CSV and binary files: loss histories, synthetic datasets, encoded
//! matrices, counter series, feature tables and checkpoints.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use scarcegan_core::checkpoint::{decode_train_state, encode_train_state};
use scarcegan_core::longitudinal::{feature_names, featurize_sample, FeatureSeries, FitConfig};
use scarcegan_core::synthetic::SyntheticData;
use scarcegan_core::trainer::{LossHistory, TrainState};
use scarcegan_core::Matrix;
use serde::Deserialize;

use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = create(path)?;
    f.write_all(bytes).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// One row per (step, term): `step,phase,term,value`.
pub fn write_history_csv(path: &Path, history: &LossHistory) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["step", "phase", "term", "value"])?;
    for e in &history.entries {
        w.write_record([
            e.step.to_string(),
            e.phase.name().to_string(),
            e.term.to_string(),
            format!("{:e}", e.value),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Header `x0..x{d-1}` followed by optional extra string columns.
pub fn write_matrix_csv(path: &Path, x: &Matrix, header: &[String], extra: &[(&str, Vec<String>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut head: Vec<String> = if header.len() == x.cols() {
        header.to_vec()
    } else {
        (0..x.cols()).map(|j| format!("x{j}")).collect()
    };
    head.extend(extra.iter().map(|(n, _)| n.to_string()));
    w.write_record(&head)?;
    for (i, row) in x.row_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        rec.extend(extra.iter().map(|(_, col)| col[i].clone()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_synthetic_csv(path: &Path, data: &SyntheticData) -> Result<()> {
    let code = |v: &[scarcegan_core::model::ClassLabel]| v.iter().map(|l| l.code().to_string()).collect();
    write_matrix_csv(path, &data.x, &[], &[("truth", code(&data.truth)), ("observed", code(&data.observed))])
}

#[derive(Debug, Deserialize)]
struct SeriesRow {
    sample_id: String,
    counter_name: String,
    day_index: i64,
    value: f64,
}

/// Series grouped by sample, then counter, with days sorted.
pub type SeriesTable = BTreeMap<String, Vec<FeatureSeries>>;

/// Reads `sample_id,counter_name,day_index,value` rows.
pub fn read_series_csv(path: &Path) -> Result<SeriesTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut grouped: BTreeMap<String, BTreeMap<String, Vec<(i64, f64)>>> = BTreeMap::new();
    for row in csv::Reader::from_reader(file).deserialize() {
        let r: SeriesRow = row?;
        grouped
            .entry(r.sample_id)
            .or_default()
            .entry(r.counter_name)
            .or_default()
            .push((r.day_index, r.value));
    }
    let mut out = SeriesTable::new();
    for (sample, counters) in grouped {
        let mut series = Vec::with_capacity(counters.len());
        for (counter, mut points) in counters {
            points.sort_by_key(|p| p.0);
            let days: Vec<i64> = points.iter().map(|p| p.0).collect();
            let values: Vec<f64> = points.iter().map(|p| p.1).collect();
            series.push(FeatureSeries::new(counter, &days, &values)?);
        }
        out.insert(sample, series);
    }
    Ok(out)
}

/// Feature rows for every sample over the union of counters seen.
pub fn featurize_table(table: &SeriesTable, cfg: &FitConfig) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let mut counters: Vec<String> = table
        .values()
        .flat_map(|s| s.iter().map(|f| f.counter().to_string()))
        .collect();
    counters.sort();
    counters.dedup();
    let mut rows = Vec::with_capacity(table.len());
    for (sample, series) in table {
        let row = featurize_sample(series, &counters, cfg)
            .map_err(|e| Error::Config(format!("sample {sample}: {e}")))?;
        rows.push((sample.clone(), row));
    }
    Ok((feature_names(&counters), rows))
}

pub fn write_features_csv(path: &Path, names: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut head = vec!["sample_id".to_string()];
    head.extend(names.iter().cloned());
    w.write_record(&head)?;
    for (id, row) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| format!("{v:e}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn save_checkpoint(path: &Path, state: &TrainState) -> Result<()> {
    write_bytes(path, &encode_train_state(state))
}

pub fn load_checkpoint(path: &Path) -> Result<TrainState> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_train_state(&bytes)?)
}
