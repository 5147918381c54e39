use std::fmt;
use std::path::PathBuf;

use freediv::Error;
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub version: &'static str,
    pub inputs: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub outputs: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ns: Option<u128>,
}

impl Report {
    pub fn new(command: &'static str, inputs: Value) -> Self {
        Report { command, version: freediv::VERSION, inputs, outputs: None, error: None, wall_time_ns: None }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug)]
pub enum CliError {
    Io(PathBuf, std::io::Error),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io(path, e) => write!(f, "{}: {e}", path.display()),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(..) | CliError::Lib(Error::Parse(_)) => 2,
            CliError::Lib(Error::BudgetExhausted { .. }) => 4,
            CliError::Lib(_) => 3,
        }
    }

    pub fn to_value(&self) -> Value {
        let kind = match self {
            CliError::Io(..) => "Io".to_string(),
            CliError::Lib(e) => {
                let debug = format!("{e:?}");
                debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default().to_string()
            }
        };
        let mut v = json!({ "kind": kind, "message": self.to_string() });
        if let CliError::Lib(Error::BudgetExhausted { near_misses, .. }) = self {
            v["near_misses"] = json!(near_misses);
        }
        v
    }
}
