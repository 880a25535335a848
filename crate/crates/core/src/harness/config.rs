use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::phantom::PhantomId;
use crate::error::{Error, Result};
use crate::grid::GridShape;
use crate::solver::SolverConfig;
use crate::tomo::GpsSceneParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    Denoise2d,
    Radon2d,
    Gps3d,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Denoise2d => "denoise2d",
            Problem::Radon2d => "radon2d",
            Problem::Gps3d => "gps3d",
        }
    }

    pub fn default_shape(self) -> Vec<usize> {
        match self {
            Problem::Denoise2d | Problem::Radon2d => vec![64, 64],
            Problem::Gps3d => vec![16, 16, 8],
        }
    }
}

/// One experiment, as read from a JSON config file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    /// Grid shape; the problem's default when absent.
    pub shape: Option<Vec<usize>>,
    pub phantom: PhantomId,
    pub noise_fractions: Vec<f64>,
    pub seeds: Vec<u64>,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
    /// Projection angles for `radon2d`.
    pub num_angles: usize,
    /// Scene layout for `gps3d`.
    pub gps: GpsSceneParams,
    /// Total ray counts swept by the GPS experiment, drawn from `gps`.
    pub ray_counts: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: Problem::Radon2d,
            shape: None,
            phantom: PhantomId::Blocks,
            noise_fractions: vec![0.01, 0.03, 0.05],
            seeds: vec![1],
            solver: SolverConfig::default(),
            output_dir: PathBuf::from("out"),
            num_angles: 45,
            gps: GpsSceneParams::default(),
            ray_counts: vec![1, 5, 30],
        }
    }
}

impl ExperimentConfig {
    pub fn for_problem(problem: Problem) -> Self {
        let mut cfg = Self {
            problem,
            ..Self::default()
        };
        if problem == Problem::Gps3d {
            cfg.noise_fractions = vec![0.01];
        }
        cfg
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn grid_shape(&self) -> Result<GridShape> {
        let dims = self.shape.clone().unwrap_or_else(|| self.problem.default_shape());
        GridShape::new(dims).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_fractions.is_empty() {
            return Err(Error::Config("noise_fractions must not be empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        if let Some(f) = self.noise_fractions.iter().find(|f| !(**f >= 0.0 && f.is_finite())) {
            return Err(Error::Config(format!("noise fraction {f} must be >= 0")));
        }
        let shape = self.grid_shape()?;
        let want = if self.problem == Problem::Gps3d { 3 } else { 2 };
        if shape.ndim() != want {
            return Err(Error::Config(format!(
                "{} needs a {want}-axis shape, got {:?}",
                self.problem.name(),
                shape.dims
            )));
        }
        if self.problem == Problem::Radon2d && self.num_angles == 0 {
            return Err(Error::Config("num_angles must be at least 1".into()));
        }
        if self.problem == Problem::Gps3d && self.ray_counts.is_empty() {
            return Err(Error::Config("ray_counts must not be empty".into()));
        }
        self.solver.validate()
    }

    /// Creates `output_dir` and checks it accepts files.
    pub fn prepare_output_dir(&self) -> Result<&Path> {
        let dir = self.output_dir.as_path();
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("output_dir {}: {e}", dir.display())))?;
        let probe = dir.join(".tvpd-write-probe");
        std::fs::write(&probe, b"")
            .and_then(|_| std::fs::remove_file(&probe))
            .map_err(|e| Error::Config(format!("output_dir {} is not writable: {e}", dir.display())))?;
        Ok(dir)
    }
}
