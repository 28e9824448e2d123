use std::fmt;
use std::fs;
use std::path::Path;

use charges_core::{Error, TOOL_VERSION};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

#[derive(Debug)]
pub enum CliError {
    /// Bad parameters or inputs rejected before computing.
    Validation(String),
    /// A computation failed or a check did not pass.
    Numerical(String),
    /// Reading or writing a file failed.
    File(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) | CliError::File(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) | CliError::File(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::DimensionMismatch { .. }
            | Error::InvalidCube(_)
            | Error::InvalidPattern { .. }
            | Error::OutOfDomain(_)
            | Error::OffGrid(_)
            | Error::OverlappingFigure(_)
            | Error::EmptyFigure
            | Error::DepthExceedsResolution { .. }
            | Error::InvalidDepth(_)
            | Error::YoungConditionViolated { .. }
            | Error::InvalidExponent { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidGauge { .. } => CliError::Validation(msg),
            Error::AdditivityViolation { .. }
            | Error::AlmostAdditivityViolation { .. }
            | Error::DepthExceeded(_)
            | Error::BudgetExceeded(_)
            | Error::NonFiniteSample(_)
            | Error::FactorizationFailure { .. }
            | Error::EmptyEnsemble
            | Error::DegenerateFit(_) => CliError::Numerical(msg),
            Error::MalformedField(_) | Error::Format(_) | Error::Io(_) | Error::Json(_) => {
                CliError::File(msg)
            }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::File(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::File(e.to_string())
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

/// Overlays the flags given on the command line onto the config file.
///
/// The file is either a flat object of parameters or an object with one
/// section per command; keys use the long flag names.
pub fn resolve<A: Serialize + DeserializeOwned>(
    command: &str,
    flags: &A,
    config: Option<&Path>,
) -> Result<A, CliError> {
    let mut merged = Map::new();
    if let Some(path) = config {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::File(format!("{}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::File(format!("{}: {e}", path.display())))?;
        let Value::Object(obj) = v else {
            return Err(invalid("config file must hold a JSON object"));
        };
        let section = match obj.get(command) {
            Some(Value::Object(s)) => s.clone(),
            _ => obj,
        };
        merged.extend(section.into_iter().filter(|(_, v)| !v.is_null()));
    }
    if let Value::Object(f) = serde_json::to_value(flags)? {
        merged.extend(f.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| invalid(format!("config: {e}")))
}

/// Parameters as set, without the unset ones.
pub fn echo(config: &impl Serialize) -> Result<Value, CliError> {
    Ok(match serde_json::to_value(config)? {
        Value::Object(m) => Value::Object(m.into_iter().filter(|(_, v)| !v.is_null()).collect()),
        v => v,
    })
}

/// `{tool_version, command, config, result}`
pub fn artifact(command: &str, config: &impl Serialize, result: Value) -> Result<Value, CliError> {
    Ok(json!({
        "tool_version": TOOL_VERSION,
        "command": command,
        "config": echo(config)?,
        "result": result,
    }))
}

/// Writes pretty JSON to `path`, or to stdout without one.
pub fn emit_json(path: Option<&Path>, v: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v)?;
    match path {
        Some(p) => fs::write(p, text + "\n").map_err(|e| CliError::File(format!("{}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

/// Writes a CSV with a header row.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| CliError::File(format!("{}: {e}", path.display())))
}

pub fn is_false(b: &bool) -> bool {
    !*b
}
