use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::noise::{MeasurementMeta, MeasurementSet};
use crate::error::{Error, Result};

fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Writes `index,value` CSV plus a JSON sidecar (same stem, `.json`).
pub fn write_measurements(m: &MeasurementSet, csv_path: impl AsRef<Path>) -> Result<()> {
    let csv_path = csv_path.as_ref();
    let mut text = String::from("index,value\n");
    for (i, v) in m.values.iter().enumerate() {
        writeln!(text, "{i},{v}").unwrap();
    }
    std::fs::write(csv_path, text).map_err(|e| Error::io(csv_path, e))?;
    let side = sidecar_path(csv_path);
    let json = serde_json::to_string_pretty(&m.meta()).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(&side, json).map_err(|e| Error::io(side, e))
}

pub fn read_measurements(csv_path: impl AsRef<Path>) -> Result<MeasurementSet> {
    let csv_path = csv_path.as_ref();
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("index,value") {
        return Err(Error::Parse(format!("{}: expected header index,value", csv_path.display())));
    }
    let mut values = Vec::new();
    for (k, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let (idx, val) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("line {}: {line:?}", k + 2)))?;
        let idx: usize = idx.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad index", k + 2)))?;
        if idx != k {
            return Err(Error::Parse(format!("line {}: index {idx} out of order", k + 2)));
        }
        values.push(val.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad value", k + 2)))?);
    }
    let side = sidecar_path(csv_path);
    let meta_text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let meta: MeasurementMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Parse(e.to_string()))?;
    MeasurementSet::new(values, meta.delta, meta.geometry_tag, meta.seed)
}
