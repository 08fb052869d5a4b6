//! Optional TOML run manifest. Every key is optional; explicit flags win.
//!
//! ```toml
//! n = 3
//! sigma = 4.0
//! lambda = "inf"          # or a number
//! sigma_grid = "0.1:1:10" # or [0.1, 0.2]
//! seed = 7
//!
//! [classifier]
//! sync_spread = 1e-6
//! ```

use std::path::Path;

use rendezvous_core::dynamics::Lambda;
use rendezvous_core::simulate::{ClassifierConfig, InitialKind, InitialPolicy};
use serde::Deserialize;

use crate::args::Format;
use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum NumberOrText {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    List(Vec<NumberOrText>),
    Text(String),
}

impl GridValue {
    /// Back to the command-line grid syntax.
    pub fn to_spec(&self) -> String {
        match self {
            GridValue::Text(s) => s.clone(),
            GridValue::List(items) => items
                .iter()
                .map(|x| match x {
                    NumberOrText::Number(v) => format!("{v:e}"),
                    NumberOrText::Text(s) => s.clone(),
                })
                .collect::<Vec<_>>()
                .join(","),
        }
    }
}

/// `initial` holds a kind for single runs and a policy for sweeps.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub sigma: Option<f64>,
    pub lambda: Option<NumberOrText>,
    pub seed: Option<u64>,
    pub initial: Option<String>,
    pub horizon: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub samples: Option<usize>,
    pub original: Option<bool>,
    pub format: Option<Format>,
    pub output: Option<String>,
    pub restarts: Option<usize>,
    pub sigma_grid: Option<GridValue>,
    pub lambda_grid: Option<GridValue>,
    pub tol: Option<f64>,
    pub jobs: Option<usize>,
    pub from: Option<f64>,
    pub epsilon: Option<f64>,
    pub classifier: Option<ClassifierConfig>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| {
            let msg = e.message().replace('\n', " ");
            CliError::Validation(format!("malformed config {}: {msg}", path.display()))
        })
    }

    pub fn lambda(&self) -> Result<Option<Lambda>, CliError> {
        match &self.lambda {
            None => Ok(None),
            Some(NumberOrText::Number(v)) => Ok(Some(Lambda::Finite(*v))),
            Some(NumberOrText::Text(s)) => Ok(Some(s.parse()?)),
        }
    }

    pub fn initial_kind(&self) -> Result<Option<InitialKind>, CliError> {
        self.initial.as_deref().map(str::parse).transpose().map_err(CliError::from)
    }

    pub fn initial_policy(&self) -> Result<Option<InitialPolicy>, CliError> {
        self.initial.as_deref().map(str::parse).transpose().map_err(CliError::from)
    }
}
