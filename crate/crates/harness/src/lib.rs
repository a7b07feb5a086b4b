//! Configuration, output and mode drivers behind the `mixkin` binary.

pub mod config;
pub mod limit_study;
pub mod output;
pub mod runs;
pub mod validation;

use std::path::PathBuf;

use anyhow::Result;

use config::{Mode, RunConfig};
use output::RunOutput;

/// Result of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    /// Number of failed validation checks (zero for simulation modes).
    pub failed_checks: usize,
}

/// Runs the configured mode and writes its artifacts and manifest.
pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    if matches!(cfg.mode(), Mode::ValidateExchange | Mode::ValidateCollision | Mode::Validate) {
        validation::check_config(cfg)?;
    }
    let mut out = RunOutput::create(cfg)?;
    let mut failed_checks = 0;
    match cfg.mode() {
        Mode::KineticHomogeneous | Mode::Kinetic1d => runs::kinetic_mode(cfg, &mut out)?,
        Mode::TwophaseRdt | Mode::TwophaseBn => runs::twophase_mode(cfg, &mut out)?,
        Mode::EulerMix => runs::euler_mode(cfg, &mut out)?,
        Mode::LimitStudy => {
            limit_study::limit_mode(cfg, &mut out)?;
        }
        Mode::ValidateExchange | Mode::ValidateCollision | Mode::Validate => {
            failed_checks = validation::validation_mode(cfg, &mut out)?;
        }
    }
    let dir = out.dir().to_path_buf();
    out.finish()?;
    Ok(Outcome { dir, failed_checks })
}
