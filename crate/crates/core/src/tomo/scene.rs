use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RayGeometry3D;
use crate::error::{Error, Result};
use crate::grid::GridShape;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GpsSceneParams {
    pub num_satellites: usize,
    pub num_stations: usize,
    pub rays_per_station: usize,
    pub seed: u64,
    /// Lowest satellite elevation in degrees.
    pub min_elevation_deg: f64,
    pub max_elevation_deg: f64,
    /// Satellite orbit radius in multiples of the grid diagonal.
    pub orbit_scale: f64,
}

impl Default for GpsSceneParams {
    fn default() -> Self {
        Self {
            num_satellites: 8,
            num_stations: 6,
            rays_per_station: 5,
            seed: 7,
            min_elevation_deg: 50.0,
            max_elevation_deg: 85.0,
            orbit_scale: 20.0,
        }
    }
}

/// Seeded ground-station / satellite layout.
///
/// Stations sit on the grid floor (`z = 0`) away from the side walls;
/// satellites sit on a hemisphere over the floor centre. Each station
/// receives exactly `rays_per_station` rays from distinct satellites.
pub fn make_gps_scene(grid: &GridShape, params: &GpsSceneParams) -> Result<RayGeometry3D> {
    if grid.ndim() != 3 {
        return Err(Error::UnsupportedDimension(grid.ndim()));
    }
    let p = params;
    if p.num_satellites == 0 || p.num_stations == 0 || p.rays_per_station == 0 {
        return Err(Error::Parameter("scene counts must be at least 1".into()));
    }
    if p.rays_per_station > p.num_satellites {
        return Err(Error::Parameter(format!(
            "rays_per_station ({}) exceeds num_satellites ({})",
            p.rays_per_station, p.num_satellites
        )));
    }
    if !(0.0 < p.min_elevation_deg && p.min_elevation_deg <= p.max_elevation_deg && p.max_elevation_deg <= 90.0) {
        return Err(Error::Parameter("elevations must satisfy 0 < min <= max <= 90".into()));
    }
    let ext: Vec<f64> = grid.dims.iter().zip(&grid.spacing).map(|(&n, &h)| n as f64 * h).collect();
    let diag = ext.iter().map(|e| e * e).sum::<f64>().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);

    let receivers: Vec<[f64; 3]> = (0..p.num_stations)
        .map(|_| {
            let x = rng.random_range(0.15..0.85) * ext[0];
            let y = rng.random_range(0.15..0.85) * ext[1];
            [x, y, 0.0]
        })
        .collect();

    let radius = p.orbit_scale * diag;
    let (lo, hi) = (p.min_elevation_deg.to_radians(), p.max_elevation_deg.to_radians());
    let transmitters: Vec<[f64; 3]> = (0..p.num_satellites)
        .map(|_| {
            let az = rng.random_range(0.0..2.0 * PI);
            let el = if hi > lo { rng.random_range(lo..hi) } else { lo };
            [
                0.5 * ext[0] + radius * el.cos() * az.cos(),
                0.5 * ext[1] + radius * el.cos() * az.sin(),
                radius * el.sin(),
            ]
        })
        .collect();

    let mut rays = Vec::with_capacity(p.num_stations * p.rays_per_station);
    for station in 0..p.num_stations {
        let mut sats = sample(&mut rng, p.num_satellites, p.rays_per_station).into_vec();
        sats.sort_unstable();
        rays.extend(sats.into_iter().map(|s| (s, station)));
    }
    RayGeometry3D::new(transmitters, receivers, rays)
}

/// First `count` rays of `scene`, taken one per station in turn.
pub fn select_rays(scene: &RayGeometry3D, count: usize) -> Result<RayGeometry3D> {
    if count == 0 || count > scene.rays.len() {
        return Err(Error::Parameter(format!(
            "ray count must lie in 1..={}, got {count}",
            scene.rays.len()
        )));
    }
    let mut per_station: Vec<Vec<(usize, usize)>> = vec![Vec::new(); scene.receivers.len()];
    for &r in &scene.rays {
        per_station[r.1].push(r);
    }
    let depth = per_station.iter().map(Vec::len).max().unwrap_or(0);
    let order = (0..depth).flat_map(|k| per_station.iter().filter_map(move |rs| rs.get(k).copied()));
    let rays = order.take(count).collect();
    RayGeometry3D::new(scene.transmitters.clone(), scene.receivers.clone(), rays)
}
