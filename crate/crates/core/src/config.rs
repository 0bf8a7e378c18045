//! The system description file: a JSON document with the sections
//! `application`, `platform`, `generators` and `deployment`, plus
//! `instance_bound` and an optional `name`.
//!
//! ```json
//! {
//!   "name": "chain",
//!   "application": { "job_types": [ { "name": "J",
//!     "tasks": [ { "id": "T1", "work": [1, 2] }, { "id": "T2", "work": [3, 4] } ],
//!     "edges": [ { "from": "T1", "to": "T2" } ] } ] },
//!   "platform": { "processors": [ { "id": "PE0", "frequencies": [1],
//!     "power": [ { "frequency": 1, "static_watts": 1, "dynamic_watts": 3 } ] } ] },
//!   "generators": [ { "job_type": "J", "count": 1, "type": "periodic", "period": 100 } ],
//!   "deployment": { "policy": "fifo_local", "mapping": { "T1": "PE0", "T2": "PE0" },
//!     "queue_capacity": 1 },
//!   "instance_bound": 1
//! }
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::model::{validate_model, SystemModel, Violation};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid model: {}", .0.first().map(ToString::to_string).unwrap_or_default())]
    Semantic(Vec<Violation>),
}

/// Reads, parses and validates a system description.
pub fn parse_system(path: impl AsRef<Path>) -> Result<SystemModel, ConfigError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

pub fn parse_str(text: &str) -> Result<SystemModel, ConfigError> {
    let m = parse_unchecked(text)?;
    let violations = validate_model(&m);
    if violations.is_empty() {
        Ok(m)
    } else {
        Err(ConfigError::Semantic(violations))
    }
}

/// Parses without semantic validation.
pub fn parse_unchecked(text: &str) -> Result<SystemModel, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let m: SystemModel = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => Schema { path, message: strip_position(&inner) },
            _ => Syntax { line: inner.line(), column: inner.column(), message: strip_position(&inner) },
        }
    })?;
    de.end().map_err(|e| Syntax { line: e.line(), column: e.column(), message: strip_position(&e) })?;
    Ok(m)
}

use ConfigError::{Schema, Syntax};

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

/// Pretty JSON that [`parse_str`] reads back to an identical model.
pub fn to_json(m: &SystemModel) -> String {
    serde_json::to_string_pretty(m).expect("models always serialize")
}

/// SHA-256 of the compact JSON form, in hex.
pub fn model_hash(m: &SystemModel) -> String {
    let bytes = serde_json::to_vec(m).expect("models always serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}
