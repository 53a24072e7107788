//! Scenario-driven front end for the bubblelab numerics.
//!
//! Exit codes: 0 pass, 1 check failure, 2 invalid input, 3 numerical failure.

use std::path::Path;
use std::time::Instant;

pub mod commands;
pub mod number;
pub mod scenario;

pub use scenario::{Overrides, Scenario};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INVALID,
            message: msg.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<bubblelab::Error> for CliError {
    fn from(e: bubblelab::Error) -> Self {
        use bubblelab::Error::*;
        let code = match e {
            InvalidInput(_) | Precondition(_) | MassOutOfRange(_) | AtAtom => EXIT_INVALID,
            _ => EXIT_NUMERICAL,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Density,
    Verify,
    Bubble,
    Riesz,
}

/// Run `cmd` on the scenario at `path`, write the reports and return the
/// process exit code with the JSON text printed to stdout.
pub fn run(cmd: Command, path: &Path, ov: &Overrides, timing: bool) -> Result<(i32, String), CliError> {
    let s = Scenario::load(path)?;
    let start = Instant::now();
    let mut out = match cmd {
        Command::Density => commands::density(&s, ov)?,
        Command::Verify => commands::verify(&s, ov)?,
        Command::Bubble => commands::bubble(&s, ov)?,
        Command::Riesz => commands::riesz(&s, ov)?,
    };
    if timing {
        out.json["runtime_seconds"] = serde_json::json!(start.elapsed().as_secs_f64());
    }
    let text = serde_json::to_string_pretty(&out.json).expect("json values serialise") + "\n";
    let dir = Path::new(&s.out_dir(ov)).to_path_buf();
    let io = |e: std::io::Error| CliError {
        code: EXIT_INVALID,
        message: format!("cannot write to {}: {e}", dir.display()),
    };
    std::fs::create_dir_all(&dir).map_err(io)?;
    std::fs::write(dir.join(format!("{}.json", out.stem)), &text).map_err(io)?;
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body).map_err(io)?;
    }
    Ok((if out.pass { EXIT_PASS } else { EXIT_CHECK_FAILED }, text))
}
