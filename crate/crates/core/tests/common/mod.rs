#![allow(dead_code)]

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use secom_core::splat::{CameraPose, Gaussian3D, SplatModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gaussian(rng: &mut ChaCha8Rng, spread: f64) -> Gaussian3D {
    let q = [
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
        rng.random_range(-1.0..1.0),
    ];
    Gaussian3D::new(
        Vector3::new(
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
            rng.random_range(-spread..spread),
        ),
        Vector3::new(rng.random_range(0.05..0.3), rng.random_range(0.05..0.3), rng.random_range(0.05..0.3)),
        q,
        rng.random_range(0.1..0.95),
        [rng.random(), rng.random(), rng.random()],
    )
    .unwrap()
}

pub fn random_scene(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> SplatModel {
    SplatModel::new((0..n).map(|_| random_gaussian(rng, spread)).collect())
}

pub fn orbit_camera(angle: f64, distance: f64, focal: f64, size: usize) -> CameraPose {
    let eye = Vector3::new(distance * angle.sin(), 0.3 * distance, -distance * angle.cos());
    CameraPose::look_at(eye, Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0), focal, size, size).unwrap()
}
