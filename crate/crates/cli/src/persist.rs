//! Versioned JSON model files.

use std::fs;
use std::path::Path;

use iotids_core::{FittedModel, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::report::{write_file, ARTIFACT_VERSION, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub artifact_version: String,
    pub name: String,
    /// Feature columns, in the order the model expects them.
    pub feature_names: Vec<String>,
    pub label_column: String,
    pub spec: ModelSpec,
    pub model: FittedModel,
}

impl ModelFile {
    pub fn new(name: &str, feature_names: &[String], label_column: &str, spec: ModelSpec, model: FittedModel) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            artifact_version: ARTIFACT_VERSION.to_string(),
            name: name.to_string(),
            feature_names: feature_names.to_vec(),
            label_column: label_column.to_string(),
            spec,
            model,
        }
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        let json = serde_json::to_string(self).expect("models always serialize");
        write_file(path.to_path_buf(), &json)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        de.disable_recursion_limit();
        let file = ModelFile::deserialize(&mut de).map_err(CliError::config)?;
        de.end().map_err(CliError::config)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::config(format!(
                "model schema_version {} is not supported (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        Ok(file)
    }
}
