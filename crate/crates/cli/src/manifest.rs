use std::io::Write;
use std::path::Path;

use crate::error::CliError;

/// Run manifest: the resolved inputs, configuration, and timings of one
/// command, written as `manifest.txt` in the output directory. Everything
/// needed to reproduce the run is recorded here; timings are informational.
pub struct Manifest {
    lines: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            lines: vec![
                "mallows-content manifest v1".to_string(),
                format!("version {}", env!("CARGO_PKG_VERSION")),
                format!("command {command}"),
            ],
        }
    }

    pub fn field(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push(format!("{key} {value}"));
        self
    }

    pub fn write(&self, out_dir: &Path) -> Result<(), CliError> {
        let path = out_dir.join("manifest.txt");
        let mut file = std::fs::File::create(&path)
            .map_err(|e| CliError::io(&path.display().to_string(), e))?;
        for line in &self.lines {
            writeln!(file, "{line}").map_err(|e| CliError::io("manifest", e))?;
        }
        Ok(())
    }
}
