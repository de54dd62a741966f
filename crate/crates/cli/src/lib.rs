//! Library surface of the command-line front end, split out so integration
//! tests can drive the runners directly.

pub mod config;
pub mod output;
pub mod run;

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

use run::CommandOutput;

/// Delivers a command's outputs: the trace goes to `out` when given (summary
/// to stdout), otherwise the trace itself goes to stdout and the summary to
/// stderr so the streams stay separable.
pub fn deliver(out: Option<&Path>, output: &CommandOutput) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, output.trace.as_bytes())
                .with_context(|| format!("writing trace to {}", path.display()))?;
            std::io::stdout().write_all(output.summary.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(output.trace.as_bytes())?;
            std::io::stderr().write_all(output.summary.as_bytes())?;
        }
    }
    Ok(())
}
