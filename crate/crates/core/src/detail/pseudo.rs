//! Synthetic "scanned" target clouds: structure samples displaced by smooth
//! procedural bumps along the normal plus a small jitter.

use crate::math::{rng_from_seed, Pt3, Vec3};
use crate::primitive::{sample_surface, PrimitiveError};
use crate::program::Structure;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BumpParams {
    /// Peak normal displacement as a fraction of the object's diagonal.
    pub amplitude: f64,
    /// Bump wavelength as a fraction of the diagonal.
    pub wavelength: f64,
    /// Isotropic jitter as a fraction of the amplitude.
    pub jitter: f64,
}

impl Default for BumpParams {
    fn default() -> Self {
        BumpParams { amplitude: 0.004, wavelength: 0.15, jitter: 0.1 }
    }
}

/// World-space diagonal of the structure's bounding box.
pub fn diagonal(structure: &Structure) -> f64 {
    let mut ext = Vec3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = 1.0;
        let hi = structure.instances.iter().map(|i| i.world_support(&e)).fold(f64::MIN, f64::max);
        let lo = structure.instances.iter().map(|i| -i.world_support(&-e)).fold(f64::MAX, f64::min);
        ext[a] = hi - lo;
    }
    ext.norm()
}

pub fn pseudo_real_cloud(structure: &Structure, n: usize, seed: u64, params: BumpParams) -> Result<Vec<Pt3>, PrimitiveError> {
    let samples = sample_surface(&structure.instances, n, &|i, p| structure.is_visible(i, p), seed)?;
    let scale = diagonal(structure);
    let amp = params.amplitude * scale;
    let mut rng = rng_from_seed(seed ^ 0x5DEE_CE66);
    let waves: Vec<(Vec3, f64)> = (0..3)
        .map(|_| {
            let d = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let k = TAU / (params.wavelength * scale);
            (d.normalize() * k, rng.random::<f64>() * TAU)
        })
        .collect();
    Ok(samples
        .iter()
        .map(|s| {
            let p = s.position.coords;
            let h = waves.iter().map(|(k, phase)| (k.dot(&p) + phase).sin()).sum::<f64>() / 3.0;
            let jitter = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                * (2.0 * params.jitter * amp);
            s.position + s.normal * (amp * h) + jitter
        })
        .collect())
}
