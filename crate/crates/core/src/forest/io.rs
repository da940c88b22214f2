//! JSON model files.
//!
//! The file is a single JSON object
//! `{format_version, m, config, trees[], oob_rmse, train_fingerprint}`.
//! Floats are written in shortest round-trip form and parsed back exactly, so
//! a reloaded model predicts bit-identically.

use std::fs;
use std::path::Path;

use serde_json::Value;

use super::RandomForestModel;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u64 = 1;

impl RandomForestModel {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let found = value
            .get("format_version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::CorruptModel("missing format_version".into()))?;
        if found != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found,
                expected: FORMAT_VERSION,
            });
        }
        let model: RandomForestModel =
            serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(model: &RandomForestModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RandomForestModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RandomForestModel::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::super::{train_forest, DenseDataset, ForestConfig};
    use super::*;

    fn model() -> RandomForestModel {
        let x: Vec<f64> = (0..90).map(|i| ((i * 31) % 17) as f64 * 0.37).collect();
        let y: Vec<f64> = (0..30).map(|i| x[3 * i] - x[3 * i + 2] * 0.1 + 1.0 / 3.0).collect();
        let d = DenseDataset::new(3, x, y).unwrap();
        train_forest(&d, &ForestConfig { n_trees: 7, min_leaf: 2, seed: 11, ..Default::default() }).unwrap()
    }

    #[test]
    fn round_trip() {
        let m = model();
        let back = RandomForestModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let text = model().to_json().unwrap();
        let err = RandomForestModel::from_json(&text[..text.len() / 2]).unwrap_err();
        assert!(matches!(err, Error::CorruptModel(_)));
    }

    #[test]
    fn unknown_version_names_both() {
        let text = model().to_json().unwrap().replacen("\"format_version\":1", "\"format_version\":7", 1);
        let err = RandomForestModel::from_json(&text).unwrap_err();
        assert!(matches!(err, Error::FormatVersion { found: 7, expected: 1 }));
        let msg = err.to_string();
        assert!(msg.contains('7') && msg.contains('1'));
    }

    #[test]
    fn structurally_broken_tree_is_rejected() {
        let text = model().to_json().unwrap().replacen("\"feature\":", "\"feature\":99", 1);
        assert!(matches!(RandomForestModel::from_json(&text), Err(Error::CorruptModel(_))));
    }
}
