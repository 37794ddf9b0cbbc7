//! IO companion for the placement solvers: instance and placement file
//! formats (facts and JSON), scripted scenario events, run records with CSV
//! output, and the corpus/simulation runners behind the `edgeplace` CLI.

pub mod clock;
pub mod events;
pub mod facts;
pub mod json;
pub mod records;
pub mod runner;

use edgeplace_core::{ModelError, Placement, ProblemInstance};

/// Instance/placement file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    /// `image/3`, `node/3`, `link/4`, `maxReplicas/1` facts; the canonical
    /// format for golden files.
    #[default]
    Facts,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Facts => "facts",
            Format::Json => "json",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "facts" => Ok(Format::Facts),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format '{other}' (expected facts|json)")),
        }
    }
}

/// Errors from reading instance or placement files.
#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Facts(#[from] facts::ParseError),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn parse_instance(text: &str, format: Format) -> Result<ProblemInstance, FormatError> {
    match format {
        Format::Facts => Ok(facts::parse_instance(text)?),
        Format::Json => json::parse_instance(text),
    }
}

pub fn serialize_instance(instance: &ProblemInstance, format: Format) -> String {
    match format {
        Format::Facts => facts::serialize_instance(instance),
        Format::Json => json::serialize_instance(instance),
    }
}

pub fn parse_placement(text: &str, format: Format) -> Result<Placement, FormatError> {
    match format {
        Format::Facts => Ok(facts::parse_placement(text)?),
        Format::Json => json::parse_placement(text),
    }
}

pub fn serialize_placement(placement: &Placement, format: Format) -> String {
    match format {
        Format::Facts => facts::serialize_placement(placement),
        Format::Json => json::serialize_placement(placement),
    }
}
