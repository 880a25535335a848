use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridShape};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomId {
    Disc,
    Blocks,
    SheppLike,
}

impl std::str::FromStr for PhantomId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "disc" => Ok(PhantomId::Disc),
            "blocks" => Ok(PhantomId::Blocks),
            "shepp_like" => Ok(PhantomId::SheppLike),
            other => Err(Error::Parameter(format!("unknown phantom {other:?}"))),
        }
    }
}

/// An axis-aligned ellipsoid (ellipse in 2-D) in unit-cube coordinates.
struct Ellipsoid {
    center: [f64; 3],
    radii: [f64; 3],
    value: f64,
}

impl Ellipsoid {
    fn contains(&self, p: &[f64]) -> bool {
        p.iter()
            .enumerate()
            .map(|(a, x)| ((x - self.center[a]) / self.radii[a]).powi(2))
            .sum::<f64>()
            <= 1.0
    }
}

/// Axis-aligned box in unit-cube coordinates.
struct Block {
    lo: [f64; 3],
    hi: [f64; 3],
    value: f64,
}

impl Block {
    fn contains(&self, p: &[f64]) -> bool {
        p.iter().enumerate().all(|(a, &x)| x >= self.lo[a] && x < self.hi[a])
    }
}

/// Deterministic piecewise-constant phantom with values in `[0, 1]`.
///
/// Geometry is defined on the unit cube, sampled at voxel centres, so
/// the same id gives comparable pictures at any resolution.
pub fn make_phantom(id: PhantomId, shape: &GridShape) -> Result<GridField> {
    if !(2..=3).contains(&shape.ndim()) {
        return Err(Error::UnsupportedDimension(shape.ndim()));
    }
    let value_at = |p: &[f64]| -> f64 {
        match id {
            PhantomId::Disc => {
                let e = Ellipsoid {
                    center: [0.5; 3],
                    radii: [0.3; 3],
                    value: 1.0,
                };
                if e.contains(p) {
                    e.value
                } else {
                    0.0
                }
            }
            PhantomId::Blocks => {
                let blocks = [
                    Block {
                        lo: [0.15, 0.2, 0.0],
                        hi: [0.55, 0.7, 0.5],
                        value: 0.6,
                    },
                    Block {
                        lo: [0.6, 0.45, 0.25],
                        hi: [0.85, 0.85, 0.75],
                        value: 1.0,
                    },
                ];
                blocks.iter().rev().find(|b| b.contains(p)).map_or(0.2, |b| b.value)
            }
            PhantomId::SheppLike => {
                // later entries paint over earlier ones
                let parts = [
                    Ellipsoid {
                        center: [0.5, 0.5, 0.5],
                        radii: [0.44, 0.34, 0.44],
                        value: 0.8,
                    },
                    Ellipsoid {
                        center: [0.5, 0.5, 0.5],
                        radii: [0.38, 0.28, 0.38],
                        value: 0.3,
                    },
                    Ellipsoid {
                        center: [0.38, 0.4, 0.5],
                        radii: [0.12, 0.07, 0.12],
                        value: 0.0,
                    },
                    Ellipsoid {
                        center: [0.38, 0.62, 0.5],
                        radii: [0.14, 0.08, 0.14],
                        value: 0.0,
                    },
                    Ellipsoid {
                        center: [0.62, 0.5, 0.45],
                        radii: [0.08, 0.08, 0.08],
                        value: 1.0,
                    },
                ];
                parts.iter().rev().find(|e| e.contains(p)).map_or(0.0, |e| e.value)
            }
        }
    };
    let values = (0..shape.len())
        .map(|flat| {
            let idx = shape.unravel(flat);
            let p: Vec<f64> = idx
                .iter()
                .zip(&shape.dims)
                .map(|(&i, &n)| (i as f64 + 0.5) / n as f64)
                .collect();
            value_at(&p)
        })
        .collect();
    GridField::new(shape.clone(), values)
}
