//! Scenario runner behind the `nematikin` binary.
//!
//! A scenario is a JSON file holding an optional `mode`, a `seed`, an output directory
//! and a mode-specific `params` block. Every mode writes its artifacts to the output
//! directory and finishes with a JSON report.

pub mod config;
mod modes;

pub use config::{Mode, ScenarioConfig};

use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] nematikin::Error),
}

impl RunError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        RunError::Config { path: path.into(), message: message.into() }
    }

    /// Process exit status: 2 for configuration problems, 3 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config { .. } | RunError::Core(nematikin::Error::InvalidParameter { .. }) => 2,
            _ => 3,
        }
    }
}

/// Result of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// False when an invariant check of the mode failed.
    pub passed: bool,
    pub summary: String,
    pub artifacts: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Command-line overrides applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Fully resolved run context handed to the modes.
pub(crate) struct Context {
    pub config: ScenarioConfig,
    pub seed: Option<u64>,
    pub out: PathBuf,
    artifacts: Vec<PathBuf>,
}

impl Context {
    pub fn seed(&self) -> Result<u64, RunError> {
        self.seed
            .ok_or_else(|| RunError::config("seed", "this mode is stochastic; give `seed` or --seed"))
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>, RunError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        }
        let file = File::create(&path).map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.artifacts.push(path);
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), RunError> {
        let path = self.out.join(name);
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(nematikin::Error::from)?;
        writeln!(w)
            .and_then(|_| w.flush())
            .map_err(|source| RunError::Io { path, source })
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> nematikin::Result<()>,
    ) -> Result<(), RunError> {
        let path = self.out.join(name);
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush().map_err(|source| RunError::Io { path, source })
    }

    fn finish(self, passed: bool, summary: String) -> Outcome {
        Outcome { passed, summary, artifacts: self.artifacts }
    }
}

pub fn read_config(path: &Path) -> Result<ScenarioConfig, RunError> {
    let text = std::fs::read_to_string(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::from_json(&text)
}

/// Runs `mode` with the given scenario. Configuration is validated completely before
/// any work starts.
pub fn run(mode: Mode, config: ScenarioConfig, overrides: Overrides) -> Result<Outcome, RunError> {
    if let Some(m) = config.mode {
        if m != mode {
            return Err(RunError::config(
                "mode",
                format!("file declares `{}` but `{}` was requested", m.name(), mode.name()),
            ));
        }
    }
    let seed = overrides.seed.or(config.seed);
    let out = overrides
        .out
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("nematikin-out"));
    let mut ctx = Context { config, seed, out, artifacts: Vec::new() };
    if mode.needs_seed() {
        ctx.seed()?;
    }
    let (passed, summary) = match mode {
        Mode::SampleMoments => modes::sample_moments(&mut ctx)?,
        Mode::Collide => modes::collide(&mut ctx)?,
        Mode::Dsmc => modes::dsmc(&mut ctx)?,
        Mode::RelaxDirector => modes::relax_director(&mut ctx)?,
        Mode::Solve => modes::solve(&mut ctx)?,
        Mode::VerifyIdentities => modes::verify_identities(&mut ctx)?,
    };
    Ok(ctx.finish(passed, summary))
}
