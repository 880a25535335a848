use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape};
use crate::solver::IterRecord;

pub const METRICS_HEADER: &str = "iter,residual_image_space,rel_error_preimage,objective,alpha_i,mu_i,nu_i,wall_ms";

/// One CSV line of a run's iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub iter: usize,
    pub residual_image_space: f64,
    pub rel_error_preimage: Option<f64>,
    pub objective: f64,
    pub alpha_i: f64,
    pub mu_i: f64,
    pub nu_i: f64,
    pub wall_ms: u64,
}

impl From<&IterRecord> for MetricsRow {
    fn from(r: &IterRecord) -> Self {
        Self {
            iter: r.iter,
            residual_image_space: r.residual,
            rel_error_preimage: r.rel_error,
            objective: r.objective,
            alpha_i: r.alpha,
            mu_i: r.mu,
            nu_i: r.nu,
            wall_ms: r.wall_ms,
        }
    }
}

impl MetricsRow {
    pub fn csv_fields(&self) -> String {
        let rel = self.rel_error_preimage.map(|e| e.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iter, self.residual_image_space, rel, self.objective, self.alpha_i, self.mu_i, self.nu_i, self.wall_ms
        )
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_metrics(path: &Path, history: &[IterRecord]) -> Result<()> {
    let mut text = String::with_capacity(64 * (history.len() + 1));
    text.push_str(METRICS_HEADER);
    text.push('\n');
    for r in history {
        text.push_str(&MetricsRow::from(r).csv_fields());
        text.push('\n');
    }
    write_text(path, &text)
}

/// Dumps a field as `x,y,z,value` rows; axis 0 is `x`, missing axes are 0.
pub fn write_volume(path: &Path, u: &GridField) -> Result<()> {
    let shape = u.shape();
    let mut text = String::from("x,y,z,value\n");
    for (flat, v) in u.values().iter().enumerate() {
        let idx = shape.unravel(flat);
        let get = |a: usize| idx.get(a).copied().unwrap_or(0);
        writeln!(text, "{},{},{},{v}", get(0), get(1), get(2)).unwrap();
    }
    write_text(path, &text)
}

pub fn read_volume(path: &Path, shape: &GridShape) -> Result<GridField> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let strides = shape.strides();
    let mut values = vec![f64::NAN; shape.len()];
    for (k, line) in text.lines().skip(1).filter(|l| !l.is_empty()).enumerate() {
        let parts: Vec<&str> = line.split(',').collect();
        let bad = || Error::Parse(format!("{} line {}", path.display(), k + 2));
        if parts.len() != 4 {
            return Err(bad());
        }
        let mut flat = 0;
        for a in 0..3 {
            let i: usize = parts[a].parse().map_err(|_| bad())?;
            if a < shape.ndim() {
                flat += i * strides[a];
            }
        }
        *values.get_mut(flat).ok_or_else(bad)? = parts[3].parse().map_err(|_| bad())?;
    }
    GridField::new(shape.clone(), values)
}
