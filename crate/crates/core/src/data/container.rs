//! Dataset container directory.
//!
//! ```text
//! meta.json           {name, num_train, num_test, feature_dim, num_classes, attr_dim}
//! features_train.f32  num_train × feature_dim   row-major little-endian binary32
//! features_test.f32   num_test × feature_dim
//! attributes.f32      num_classes × attr_dim
//! labels_train.u32    num_train                 little-endian u32
//! labels_test.u32     num_test
//! tasks.json          optional {"tasks": [[class, ...], ...]}
//! ```
//!
//! Upstream ZSL feature archives have to be converted to this layout
//! externally.

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{FeatureDataset, TaskSpec};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    pub name: String,
    pub num_train: usize,
    pub num_test: usize,
    pub feature_dim: usize,
    pub num_classes: usize,
    pub attr_dim: usize,
}

#[derive(Serialize, Deserialize)]
struct TasksFile {
    tasks: Vec<Vec<usize>>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn check_len(path: &Path, bytes: &[u8], expected: usize) -> Result<()> {
    if bytes.len() != expected {
        return Err(Error::Format {
            file: path.to_path_buf(),
            message: format!("{} bytes, expected {expected} from meta.json", bytes.len()),
        });
    }
    Ok(())
}

fn read_f32_matrix(path: PathBuf, rows: usize, cols: usize) -> Result<Array2<f32>> {
    let bytes = read(&path)?;
    check_len(&path, &bytes, rows * cols * 4)?;
    let mut values = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite {
                file: path,
                offset: (i * 4) as u64,
                value: v,
            });
        }
        values.push(v);
    }
    Array2::from_shape_vec((rows, cols), values).map_err(|e| Error::shape(e.to_string()))
}

fn read_labels(path: PathBuf, count: usize, num_classes: usize) -> Result<Vec<usize>> {
    let bytes = read(&path)?;
    check_len(&path, &bytes, count * 4)?;
    bytes
        .chunks_exact(4)
        .enumerate()
        .map(|(i, chunk)| {
            let label = u32::from_le_bytes(chunk.try_into().unwrap());
            if label as usize >= num_classes {
                Err(Error::LabelOutOfRange {
                    file: path.clone(),
                    offset: (i * 4) as u64,
                    label: label as u64,
                    num_classes,
                })
            } else {
                Ok(label as usize)
            }
        })
        .collect()
}

pub fn load_dataset(dir: &Path) -> Result<FeatureDataset> {
    let meta_path = dir.join("meta.json");
    let meta: Meta = serde_json::from_slice(&read(&meta_path)?).map_err(|e| Error::Format {
        file: meta_path.clone(),
        message: e.to_string(),
    })?;
    let ds = FeatureDataset::new(
        meta.name.clone(),
        read_f32_matrix(
            dir.join("features_train.f32"),
            meta.num_train,
            meta.feature_dim,
        )?,
        read_labels(
            dir.join("labels_train.u32"),
            meta.num_train,
            meta.num_classes,
        )?,
        read_f32_matrix(
            dir.join("features_test.f32"),
            meta.num_test,
            meta.feature_dim,
        )?,
        read_labels(dir.join("labels_test.u32"), meta.num_test, meta.num_classes)?,
        read_f32_matrix(dir.join("attributes.f32"), meta.num_classes, meta.attr_dim)?,
    )?;
    ds.check_contract()?;
    Ok(ds)
}

/// Reads `tasks.json` when present.
pub fn load_task_override(dir: &Path, num_classes: usize) -> Result<Option<TaskSpec>> {
    let path = dir.join("tasks.json");
    if !path.exists() {
        return Ok(None);
    }
    let file: TasksFile = serde_json::from_slice(&read(&path)?).map_err(|e| Error::Format {
        file: path.clone(),
        message: e.to_string(),
    })?;
    TaskSpec::new(file.tasks, num_classes)
        .map(Some)
        .map_err(|e| Error::Format {
            file: path,
            message: e.to_string(),
        })
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<()> {
    fs::write(&path, bytes).map_err(|e| Error::io(path, e))
}

fn f32_bytes(m: &Array2<f32>) -> Vec<u8> {
    m.iter().flat_map(|v| v.to_le_bytes()).collect()
}

fn label_bytes(labels: &[usize]) -> Vec<u8> {
    labels
        .iter()
        .flat_map(|&l| (l as u32).to_le_bytes())
        .collect()
}

pub fn write_dataset(ds: &FeatureDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        name: ds.name().to_string(),
        num_train: ds.num_train(),
        num_test: ds.num_test(),
        feature_dim: ds.feature_dim(),
        num_classes: ds.num_classes(),
        attr_dim: ds.attr_dim(),
    };
    write(dir.join("meta.json"), &serde_json::to_vec_pretty(&meta)?)?;
    write(
        dir.join("features_train.f32"),
        &f32_bytes(ds.features_train()),
    )?;
    write(
        dir.join("features_test.f32"),
        &f32_bytes(ds.features_test()),
    )?;
    write(dir.join("attributes.f32"), &f32_bytes(ds.attributes()))?;
    write(
        dir.join("labels_train.u32"),
        &label_bytes(ds.labels_train()),
    )?;
    write(dir.join("labels_test.u32"), &label_bytes(ds.labels_test()))
}

pub fn write_task_spec(spec: &TaskSpec, dir: &Path) -> Result<()> {
    let file = TasksFile {
        tasks: spec.tasks().to_vec(),
    };
    write(dir.join("tasks.json"), &serde_json::to_vec(&file)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{make_synthetic_dataset, SyntheticSpec};

    fn sample() -> FeatureDataset {
        make_synthetic_dataset(&SyntheticSpec::with_random_map(4, 3, 5, 6, 0.2, 1)).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ds = sample();
        write_dataset(&ds, dir.path()).unwrap();
        assert_eq!(load_dataset(dir.path()).unwrap(), ds);
        assert!(load_task_override(dir.path(), 4).unwrap().is_none());
    }

    #[test]
    fn missing_file_names_it() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&sample(), dir.path()).unwrap();
        fs::remove_file(dir.path().join("labels_test.u32")).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(err.to_string().contains("labels_test.u32"), "{err}");
    }

    #[test]
    fn label_equal_to_class_count_is_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&sample(), dir.path()).unwrap();
        let path = dir.path().join("labels_train.u32");
        let mut bytes = fs::read(&path).unwrap();
        bytes[8..12].copy_from_slice(&4u32.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        match load_dataset(dir.path()).unwrap_err() {
            Error::LabelOutOfRange {
                offset,
                label,
                num_classes,
                ..
            } => {
                assert_eq!((offset, label, num_classes), (8, 4, 4));
            }
            other => panic!("unexpected {other}"),
        }
        let msg = load_dataset(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("out of range") && msg.contains("labels_train.u32"));
    }

    #[test]
    fn nan_payload_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&sample(), dir.path()).unwrap();
        let path = dir.path().join("features_test.f32");
        let mut bytes = fs::read(&path).unwrap();
        bytes[12..16].copy_from_slice(&f32::NAN.to_le_bytes());
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_dataset(dir.path()).unwrap_err(),
            Error::NonFinite { offset: 12, .. }
        ));
    }

    #[test]
    fn byte_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&sample(), dir.path()).unwrap();
        let path = dir.path().join("attributes.f32");
        let mut bytes = fs::read(&path).unwrap();
        bytes.pop();
        fs::write(&path, bytes).unwrap();
        let err = load_dataset(dir.path()).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
        assert!(err.to_string().contains("attributes.f32"));
    }

    #[test]
    fn task_override_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&sample(), dir.path()).unwrap();
        let spec = TaskSpec::new(vec![vec![3, 0], vec![1, 2]], 4).unwrap();
        write_task_spec(&spec, dir.path()).unwrap();
        assert_eq!(load_task_override(dir.path(), 4).unwrap(), Some(spec));
        fs::write(
            dir.path().join("tasks.json"),
            r#"{"tasks": [[0, 1], [1, 2, 3]]}"#,
        )
        .unwrap();
        assert!(load_task_override(dir.path(), 4).is_err());
    }
}
