//! Report files. Accuracies are written as percentages with two decimals.
//!
//! * `per_task.csv`  seed,task,seen_acc,unseen_acc,harmonic (unseen/harmonic
//!   empty after the last task)
//! * `summary.json`  {msa, mua, mh, per_seed: [{seed, msa, mua, mh}]}
//! * `curves.csv`    task,seen_acc,unseen_acc,harmonic averaged over seeds
//! * `config.toml`   echo of the experiment configuration
//! * `run_info.json` wall-clock seconds, parameter counts, loss curves
//!
//! Everything except `run_info.json` is a pure function of the inputs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{RunRecord, SweepRow};
use crate::{Error, Result};

/// `v` in `[0, 1]` as a percentage rounded to two decimals.
pub fn percent(v: f64) -> f64 {
    format!("{:.2}", 100.0 * v)
        .parse()
        .expect("formatted float parses")
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| format!("{:.2}", 100.0 * v)).unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub msa: f64,
    pub mua: f64,
    pub mh: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub msa: f64,
    pub mua: f64,
    pub mh: f64,
    pub per_seed: Vec<SeedSummary>,
}

#[derive(Serialize)]
struct RunInfo<'a> {
    seed: u64,
    wall_seconds: f64,
    module_params: &'a [usize],
    classifier_params: usize,
    epoch_losses: Vec<&'a [f64]>,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        file: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_file(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn emit_report(record: &RunRecord, dir: &Path) -> Result<Vec<PathBuf>> {
    if record.runs.is_empty() {
        return Err(Error::invalid("run record has no seeds"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    let per_task = dir.join("per_task.csv");
    let rows = record
        .runs
        .iter()
        .flat_map(|run| {
            run.report.per_task.iter().map(move |m| {
                vec![
                    run.seed.to_string(),
                    m.t.to_string(),
                    cell(Some(m.seen_acc)),
                    cell(m.unseen_acc),
                    cell(m.harmonic),
                ]
            })
        })
        .collect();
    write_csv(
        &per_task,
        &["seed", "task", "seen_acc", "unseen_acc", "harmonic"],
        rows,
    )?;
    written.push(per_task);

    let summary = SummaryFile {
        msa: percent(mean(record.runs.iter().map(|r| r.report.msa)).unwrap()),
        mua: percent(mean(record.runs.iter().map(|r| r.report.mua)).unwrap()),
        mh: percent(mean(record.runs.iter().map(|r| r.report.mh)).unwrap()),
        per_seed: record
            .runs
            .iter()
            .map(|r| SeedSummary {
                seed: r.seed,
                msa: percent(r.report.msa),
                mua: percent(r.report.mua),
                mh: percent(r.report.mh),
            })
            .collect(),
    };
    written.push(write_file(
        dir.join("summary.json"),
        &serde_json::to_vec_pretty(&summary)?,
    )?);

    let curves = dir.join("curves.csv");
    let tasks = record.runs[0].report.per_task.len();
    let rows = (0..tasks)
        .map(|i| {
            let at = || record.runs.iter().map(move |r| r.report.per_task[i]);
            vec![
                (i + 1).to_string(),
                cell(mean(at().map(|m| m.seen_acc))),
                cell(mean(at().filter_map(|m| m.unseen_acc))),
                cell(mean(at().filter_map(|m| m.harmonic))),
            ]
        })
        .collect();
    write_csv(
        &curves,
        &["task", "seen_acc", "unseen_acc", "harmonic"],
        rows,
    )?;
    written.push(curves);

    written.push(write_file(
        dir.join("config.toml"),
        record.config.to_toml_string()?.as_bytes(),
    )?);

    let info: Vec<RunInfo> = record
        .runs
        .iter()
        .map(|r| RunInfo {
            seed: r.seed,
            wall_seconds: r.wall_seconds,
            module_params: &r.module_params,
            classifier_params: r.classifier_params,
            epoch_losses: r
                .training
                .iter()
                .map(|t| t.epoch_losses.as_slice())
                .collect(),
        })
        .collect();
    written.push(write_file(
        dir.join("run_info.json"),
        &serde_json::to_vec_pretty(&info)?,
    )?);
    Ok(written)
}

/// Writes `sweep.csv` with columns n_replay,msa,mua,mh.
pub fn emit_sweep(rows: &[SweepRow], dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("sweep.csv");
    let body = rows
        .iter()
        .map(|r| {
            vec![
                r.n_replay.to_string(),
                cell(Some(r.msa)),
                cell(Some(r.mua)),
                cell(Some(r.mh)),
            ]
        })
        .collect();
    write_csv(&path, &["n_replay", "msa", "mua", "mh"], body)?;
    Ok(path)
}
