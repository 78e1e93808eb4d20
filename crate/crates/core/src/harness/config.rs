//! JSON experiment configuration.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::codec::check_dims;
use crate::optimizer::{default_lambda_grid, ObjectiveKind};
use crate::{Error, Result};

/// Default QP ladder for BD computations.
pub const DEFAULT_QPS: [u8; 4] = [15, 25, 35, 45];
/// Finer ladder for plotting rate/energy curves.
pub const FULL_QPS: [u8; 7] = [15, 20, 25, 30, 35, 40, 45];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    /// Raw 4:2:0 8-bit file.
    pub path: PathBuf,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub fps: f64,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Vec<CorpusEntry>,
    pub qps: Vec<u8>,
    pub objectives: Vec<ObjectiveKind>,
    /// Specific-energy profile; `None` selects the built-in synthetic one.
    pub profile: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub lambda_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: Vec::new(),
            qps: DEFAULT_QPS.to_vec(),
            objectives: ObjectiveKind::ALL.to_vec(),
            profile: None,
            output_dir: PathBuf::from("results"),
            lambda_grid: default_lambda_grid(),
        }
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Reads and validates a config. Relative paths are taken relative to
    /// the directory holding the file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for e in &mut cfg.corpus {
            e.path = resolve(base, &e.path);
        }
        cfg.profile = cfg.profile.map(|p| resolve(base, &p));
        cfg.output_dir = resolve(base, &cfg.output_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        let mut labels = HashSet::new();
        for e in &self.corpus {
            if !labels.insert(e.label.as_str()) {
                return Err(Error::Config(format!("duplicate label {:?}", e.label)));
            }
            if e.label.is_empty() || e.label.contains(['/', '\\', ',']) {
                return Err(Error::Config(format!("label {:?} is not usable as a file name", e.label)));
            }
            if !e.path.is_file() {
                return Err(Error::Config(format!("{}: corpus file not found", e.path.display())));
            }
            check_dims(e.width, e.height)?;
            if e.frames == 0 {
                return Err(Error::Config(format!("{}: frame count must be positive", e.label)));
            }
            if !(e.fps.is_finite() && e.fps > 0.0) {
                return Err(Error::Config(format!("{}: frame rate must be positive", e.label)));
            }
        }
        if self.qps.is_empty() {
            return Err(Error::Config("empty QP ladder".into()));
        }
        if let Some(&qp) = self.qps.iter().find(|&&q| q > crate::codec::quant::QP_MAX) {
            return Err(Error::QpOutOfRange(i64::from(qp)));
        }
        if self.qps.iter().collect::<HashSet<_>>().len() != self.qps.len() {
            return Err(Error::Config("duplicate QP in ladder".into()));
        }
        if self.objectives.is_empty() {
            return Err(Error::Config("no objectives".into()));
        }
        if let Some(p) = &self.profile {
            if !p.is_file() {
                return Err(Error::Config(format!("{}: profile not found", p.display())));
            }
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::Config("lambda grid values must be positive".into()));
        }
        Ok(())
    }
}
