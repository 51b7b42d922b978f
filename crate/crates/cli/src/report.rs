use std::path::Path;

use balayage_core::ExtReal;
use serde::Serialize;

use crate::CliError;

/// One asserted residual. Passes iff `value ≤ tolerance`.
#[derive(Debug, Clone, Serialize)]
pub struct Residual {
    pub name: String,
    pub value: ExtReal,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub kind: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub residuals: Vec<Residual>,
    pub verdict: &'static str,
    pub details: serde_json::Value,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

/// Residual table and free-form details collected by a scenario.
#[derive(Debug, Default)]
pub struct Outcome {
    pub residuals: Vec<Residual>,
    pub details: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
}

impl Outcome {
    pub fn check(&mut self, name: &str, value: f64, tolerance: f64) {
        let value = if value.is_nan() { f64::INFINITY } else { value };
        self.residuals.push(Residual {
            name: name.to_string(),
            value: ExtReal::from(value),
            tolerance,
            pass: value <= tolerance,
        });
    }

    pub fn detail<T: Serialize>(&mut self, key: &str, value: T) -> Result<(), CliError> {
        let v = serde_json::to_value(value).map_err(|e| CliError::Config(e.to_string()))?;
        self.details.insert(key.to_string(), v);
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.residuals.iter().all(|r| r.pass)
    }
}

pub fn write_csv(path: &Path, residuals: &[Residual]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let io = |e: csv::Error| CliError::Io(e.to_string());
    w.write_record(["name", "value", "tolerance", "pass"]).map_err(io)?;
    for r in residuals {
        w.write_record([
            r.name.clone(),
            r.value.to_string(),
            r.tolerance.to_string(),
            r.pass.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Io(e.to_string()))
}
