use std::fmt;
use std::fs;

use serde_json::{Map, Value};

use crate::{Common, Format};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Lib(chaincausal::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => f.write_str(msg),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl From<chaincausal::Error> for CliError {
    fn from(e: chaincausal::Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use chaincausal::Error::*;
        match self {
            CliError::Usage(_) => 2,
            CliError::Lib(e) => match e {
                NotChainGraph => 1,
                NotAcyclic | NotDigraph | UnknownVertex(_) | InvalidGraph(_) | BadQuery(_) | SizeMismatch(_)
                | Parse { .. } | Io(_) => 2,
                SupportViolation(_)
                | NotPositiveDefinite(_)
                | SingularBlock { .. }
                | CapExceeded { .. }
                | NotDecomposable
                | ConvergenceFailure { .. }
                | SearchFailure(_)
                | BudgetExceeded { .. } => 3,
            },
        }
    }
}

/// Outcome of one command: the JSON body, its text rendering and the exit
/// status it implies.
pub struct Report {
    pub command: &'static str,
    pub body: Map<String, Value>,
    pub text: String,
    /// `false` for negative verdicts, which exit with 1.
    pub verdict: bool,
    /// Separate artifact written to `--out` (`decide` only).
    pub artifact: Option<String>,
    /// Non-zero exit forced by the command, overriding `verdict`.
    pub exit_override: Option<u8>,
}

impl Report {
    pub fn new(command: &'static str, body: Map<String, Value>, text: String, verdict: bool) -> Self {
        Self {
            command,
            body,
            text,
            verdict,
            artifact: None,
            exit_override: None,
        }
    }

    pub fn json(&self) -> String {
        let mut obj = Map::new();
        obj.insert("schema_version".into(), SCHEMA_VERSION.into());
        obj.insert("command".into(), self.command.into());
        obj.extend(self.body.clone());
        let mut s = serde_json::to_string_pretty(&Value::Object(obj)).expect("report serializes");
        s.push('\n');
        s
    }

    fn rendered(&self, format: Format) -> String {
        match format {
            Format::Json => self.json(),
            Format::Text => self.text.clone(),
        }
    }

    pub fn emit(&self, c: &Common) -> Result<u8, CliError> {
        let write = |path: &std::path::Path, content: &str| {
            fs::write(path, content).map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
        };
        match (&self.artifact, &c.out) {
            (Some(artifact), Some(path)) => {
                write(path, artifact)?;
                print!("{}", self.rendered(c.format));
            }
            (Some(artifact), None) => {
                print!("{}", self.rendered(c.format));
                if c.format == Format::Text {
                    print!("\n{artifact}");
                }
            }
            (None, Some(path)) => write(path, &self.rendered(c.format))?,
            (None, None) => print!("{}", self.rendered(c.format)),
        }
        Ok(self.exit_override.unwrap_or(if self.verdict { 0 } else { 1 }))
    }
}

/// Serializes any library value into a JSON value.
pub fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("library types serialize")
}
