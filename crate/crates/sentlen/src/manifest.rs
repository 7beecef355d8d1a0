//! Run manifests: every setting a command's output depends on, written as
//! `key = value` lines next to the output. Apart from the timestamp, equal
//! manifests mean byte-identical outputs for identical inputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sentlen_core::evidence::SampleSize;

/// Where the tolerance came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ToleranceSource {
    /// Measured on the input by splitting it in two halves.
    Measured(f64),
    /// Given on the command line.
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub cutoff: Option<u32>,
    pub seed: Option<u64>,
    pub tolerance: Option<ToleranceSource>,
    pub n_grid: Vec<SampleSize>,
    /// Command-specific settings, in insertion order.
    pub settings: Vec<(String, String)>,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.settings.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# sentlen run manifest\n");
        let _ = writeln!(out, "command = {}", self.command);
        for p in &self.inputs {
            let _ = writeln!(out, "input = {}", p.display());
        }
        if let Some(c) = self.cutoff {
            let _ = writeln!(out, "cutoff = {c}");
        }
        if let Some(s) = self.seed {
            let _ = writeln!(out, "seed = {s}");
        }
        match self.tolerance {
            Some(ToleranceSource::Measured(d)) => {
                let _ = writeln!(out, "tolerance_source = measured\ntolerance = {d:.16e}");
            }
            Some(ToleranceSource::Explicit(d)) => {
                let _ = writeln!(out, "tolerance_source = explicit\ntolerance = {d:.16e}");
            }
            None => {}
        }
        if !self.n_grid.is_empty() {
            let grid: Vec<String> = self.n_grid.iter().map(ToString::to_string).collect();
            let _ = writeln!(out, "n_grid = {}", grid.join(","));
        }
        for (k, v) in &self.settings {
            let _ = writeln!(out, "{k} = {v}");
        }
        let _ = writeln!(out, "timestamp = {}", self.timestamp);
        out
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::write(dir.join("manifest.txt"), self.render())
    }
}
