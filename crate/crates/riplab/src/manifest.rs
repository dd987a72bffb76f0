use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::error::{HarnessError, Result};

/// Sidecar written next to every output file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub version: &'static str,
    pub experiment: &'static str,
    pub master_seed: u64,
    pub config_echo: String,
    pub rows: usize,
    pub started_unix: u64,
    pub wall_clock_seconds: f64,
    pub failures: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, rows: usize, started_unix: u64, wall_clock_seconds: f64, failures: Vec<String>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            experiment: cfg.experiment.name(),
            master_seed: cfg.seed,
            config_echo: cfg.echo(),
            rows,
            started_unix,
            wall_clock_seconds,
            failures,
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "riplab_version={}", self.version);
        let _ = writeln!(s, "experiment={}", self.experiment);
        let _ = writeln!(s, "master_seed={}", self.master_seed);
        let _ = writeln!(s, "rows={}", self.rows);
        let _ = writeln!(s, "started_unix={}", self.started_unix);
        let _ = writeln!(s, "wall_clock_seconds={:.3}", self.wall_clock_seconds);
        let _ = writeln!(s, "failures={}", self.failures.len());
        for f in &self.failures {
            let _ = writeln!(s, "failure={f}");
        }
        for line in self.config_echo.lines() {
            let _ = writeln!(s, "config.{line}");
        }
        s
    }

    pub fn write_for(&self, out: &Path) -> Result<PathBuf> {
        let path = manifest_path(out);
        fs::write(&path, self.render()).map_err(|e| HarnessError::io(&path, e))?;
        Ok(path)
    }
}

/// `<out>.manifest`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}
