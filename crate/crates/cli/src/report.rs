//! Report headers and artifact writing.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use relosc::classify::WindowPolicy;
use relosc::pruefer::Tolerances;

use crate::CliError;

/// Everything a reader needs to reproduce a run.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub snap_rtol: f64,
    pub margin: f64,
    pub policy: WindowPolicy,
}

impl Header {
    pub fn csv_preamble(&self) -> String {
        let p = &self.policy;
        let mut out = String::new();
        let _ = writeln!(out, "# {} {} {}", self.tool, self.version, self.command);
        let _ = writeln!(out, "# config_sha256={} seed={}", self.config_sha256, self.seed);
        let _ = writeln!(
            out,
            "# rtol={:e} atol={:e} snap_rtol={:e} margin={}",
            self.tolerances.rtol, self.tolerances.atol, self.snap_rtol, self.margin
        );
        let _ = writeln!(out, "# policy x0={} ratio={} k={} k_stable={} k_grow={}", p.x0, p.ratio, p.k, p.k_stable, p.k_grow);
        out
    }
}

/// Overall outcome, mapped onto the exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Only undecided verdicts came out.
    Inconclusive,
    /// Some check failed (self-test).
    Failed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Inconclusive => 2,
            Status::Failed => 1,
        }
    }
}

pub struct Report {
    pub status: Status,
    /// One line for the terminal.
    pub summary: String,
    pub body: Value,
    pub csv: Option<String>,
}

/// Writes `<command>.json` (and `<command>.csv`) into `dir`.
pub fn write(dir: &Path, header: &Header, report: &Report) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let doc = json!({ "header": header, "status": report.status, "result": report.body });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    let json_path = dir.join(format!("{}.json", header.command));
    std::fs::write(&json_path, text).map_err(|e| CliError::Io(format!("{}: {e}", json_path.display())))?;
    if let Some(csv) = &report.csv {
        let csv_path = dir.join(format!("{}.csv", header.command));
        let body = header.csv_preamble() + csv;
        std::fs::write(&csv_path, body).map_err(|e| CliError::Io(format!("{}: {e}", csv_path.display())))?;
    }
    Ok(())
}
