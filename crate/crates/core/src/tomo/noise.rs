use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{distance, norm};

/// Measured data `v^δ` with the known noise level `δ = ‖v^δ − v^†‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub values: Vec<f64>,
    pub delta: f64,
    pub geometry_tag: String,
    pub seed: u64,
}

/// Sidecar metadata written next to a measurement CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMeta {
    pub delta: f64,
    pub seed: u64,
    pub geometry_tag: String,
}

impl MeasurementSet {
    pub fn clean(values: Vec<f64>, geometry_tag: impl Into<String>) -> Result<Self> {
        Self::new(values, 0.0, geometry_tag, 0)
    }

    pub fn new(values: Vec<f64>, delta: f64, geometry_tag: impl Into<String>, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::Parameter(format!("delta must be finite and >= 0, got {delta}")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("measurement has non-finite values".into()));
        }
        Ok(Self {
            values,
            delta,
            geometry_tag: geometry_tag.into(),
            seed,
        })
    }

    pub fn with_tag(mut self, tag: impl Into<String>) -> Self {
        self.geometry_tag = tag.into();
        self
    }

    pub fn meta(&self) -> MeasurementMeta {
        MeasurementMeta {
            delta: self.delta,
            seed: self.seed,
            geometry_tag: self.geometry_tag.clone(),
        }
    }
}

/// Adds seeded Gaussian noise rescaled so that
/// `‖v^δ − v^†‖ = noise_fraction · ‖v^†‖` holds exactly.
pub fn add_noise(v_clean: &[f64], noise_fraction: f64, seed: u64) -> Result<MeasurementSet> {
    if !(noise_fraction >= 0.0 && noise_fraction.is_finite()) {
        return Err(Error::Parameter(format!("noise fraction must be >= 0, got {noise_fraction}")));
    }
    let target = noise_fraction * norm(v_clean);
    if target == 0.0 {
        return MeasurementSet::new(v_clean.to_vec(), 0.0, "unspecified", seed);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<f64> = (0..v_clean.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
    let scale = target / norm(&xi);
    let values: Vec<f64> = v_clean.iter().zip(&xi).map(|(v, e)| v + scale * e).collect();
    let delta = distance(&values, v_clean);
    MeasurementSet::new(values, delta, "unspecified", seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_fraction_is_clean() {
        let v = vec![1.0, -2.0, 3.0];
        let m = add_noise(&v, 0.0, 3).unwrap();
        assert_eq!(m.values, v);
        assert_eq!(m.delta, 0.0);
    }

    #[test]
    fn exact_relative_noise_level() {
        let v: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin() + 1.0).collect();
        let m = add_noise(&v, 0.05, 11).unwrap();
        let rel = distance(&m.values, &v) / norm(&v);
        assert!((rel - 0.05).abs() <= 1e-12);
        assert!((m.delta / norm(&v) - 0.05).abs() <= 1e-12);
    }

    #[test]
    fn same_seed_same_bits() {
        let v = vec![0.5; 20];
        let a = add_noise(&v, 0.03, 42).unwrap();
        let b = add_noise(&v, 0.03, 42).unwrap();
        assert_eq!(a, b);
        let c = add_noise(&v, 0.03, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn negative_fraction_rejected() {
        assert!(add_noise(&[1.0], -0.1, 0).is_err());
    }
}
