//! CSV files with header rows and JSON metadata sidecars.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::aggregate::AggregateCurve;
use crate::nac::NacRunResult;
use crate::td::TdRunResult;

pub const TD_TRIAL_COLUMNS: [&str; 5] = ["trial", "t", "mse_avg", "mse_last", "clip_count_cum"];
pub const NAC_TRIAL_COLUMNS: [&str; 6] = ["k", "value_exact", "gap", "critic_mse", "c_conc", "clip_fraction"];
pub const AGGREGATE_COLUMNS: [&str; 5] = ["t", "mean", "median", "q10", "q90"];

/// Sidecar written next to every CSV as `<file>.meta.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub file: String,
    pub spec_hash: String,
    pub seed: u64,
    pub columns: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub extra: serde_json::Value,
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

pub fn write_metadata(csv: &Path, spec_hash: &str, seed: u64, columns: &[&str], extra: serde_json::Value) -> Result<()> {
    let meta = Metadata {
        file: csv
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        spec_hash: spec_hash.to_string(),
        seed,
        columns: columns.iter().map(|c| c.to_string()).collect(),
        extra,
    };
    std::fs::write(sidecar_path(csv), serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

fn fmt(v: f64) -> String {
    // Display for f64 is the shortest round-trip form, hence byte-stable.
    format!("{v}")
}

pub fn write_td_trial(path: &Path, trial: usize, result: &TdRunResult, spec_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TD_TRIAL_COLUMNS)?;
    for p in &result.error_curve {
        w.write_record([
            trial.to_string(),
            p.t.to_string(),
            fmt(p.mse_avg),
            fmt(p.mse_last),
            p.clip_count.to_string(),
        ])?;
    }
    w.flush()?;
    let extra = serde_json::json!({
        "trial": trial,
        "clip_count": result.clip_count,
        "divergence": result.divergence,
    });
    write_metadata(path, spec_hash, result.seed, &TD_TRIAL_COLUMNS, extra)
}

/// Rows of a per-trial TD CSV: `(t, mse_avg, mse_last, clip_count_cum)`.
pub type TdTrialRows = Vec<(usize, f64, f64, usize)>;

pub fn read_td_trial(path: &Path) -> Result<(usize, TdTrialRows)> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &TD_TRIAL_COLUMNS, path)?;
    let mut trial = 0;
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        trial = parse(&rec[0], path)?;
        rows.push((parse(&rec[1], path)?, parse(&rec[2], path)?, parse(&rec[3], path)?, parse(&rec[4], path)?));
    }
    Ok((trial, rows))
}

pub fn write_nac_trial(path: &Path, result: &NacRunResult, spec_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(NAC_TRIAL_COLUMNS)?;
    for r in &result.records {
        w.write_record([
            r.k.to_string(),
            fmt(r.value_exact),
            fmt(r.gap),
            fmt(r.critic_mse),
            fmt(r.c_conc),
            fmt(r.clip_fraction),
        ])?;
    }
    w.flush()?;
    let extra = serde_json::json!({
        "v_star": result.v_star,
        "best_iterate_gap": result.best_iterate_gap,
    });
    write_metadata(path, spec_hash, result.seed, &NAC_TRIAL_COLUMNS, extra)
}

/// `(k, gap)` pairs of a per-trial NAC CSV.
pub fn read_nac_gaps(path: &Path) -> Result<Vec<(usize, f64)>> {
    let mut r = csv::Reader::from_path(path)?;
    check_header(r.headers()?, &NAC_TRIAL_COLUMNS, path)?;
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((parse(&rec[0], path)?, parse(&rec[2], path)?))
        })
        .collect()
}

pub fn write_weights(path: &Path, result: &NacRunResult, spec_hash: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let dim = result.final_weights.len();
    let mut header = vec!["k".to_string()];
    header.extend((0..dim).map(|i| format!("w{i}")));
    w.write_record(&header)?;
    for (k, weights) in &result.weight_snapshots {
        let mut row = vec![k.to_string()];
        row.extend(weights.iter().map(|v| fmt(*v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    let cols: Vec<&str> = header.iter().map(String::as_str).collect();
    write_metadata(path, spec_hash, result.seed, &cols, serde_json::Value::Null)
}

pub fn write_aggregate(path: &Path, curve: &AggregateCurve, spec_hash: &str, seed: u64) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(AGGREGATE_COLUMNS)?;
    for p in &curve.points {
        w.write_record([p.t.to_string(), fmt(p.mean), fmt(p.median), fmt(p.q10), fmt(p.q90)])?;
    }
    w.flush()?;
    let extra = serde_json::json!({
        "algorithm": curve.algorithm,
        "metric": curve.metric,
        "n_trials": curve.n_trials,
    });
    write_metadata(path, spec_hash, seed, &AGGREGATE_COLUMNS, extra)
}

fn check_header(h: &csv::StringRecord, want: &[&str], path: &Path) -> Result<()> {
    if h.iter().ne(want.iter().copied()) {
        return Err(Error::ShapeMismatch {
            expected: format!("header {want:?}"),
            found: format!("{:?} in {}", h.iter().collect::<Vec<_>>(), path.display()),
        });
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, path: &Path) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Empty(format!("unparseable value `{s}` in {}", path.display())))
}
