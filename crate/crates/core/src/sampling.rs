//! Seeded random sampling used by every verification sweep.

use nalgebra::{DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vector(rng: &mut SampleRng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn unit_vector(rng: &mut SampleRng, n: usize) -> DVector<f64> {
    loop {
        let v = normal_vector(rng, n);
        let r = v.norm();
        if r > 1e-6 {
            return v / r;
        }
    }
}

pub fn unit3(rng: &mut SampleRng) -> Vector3<f64> {
    let v = unit_vector(rng, 3);
    Vector3::new(v[0], v[1], v[2])
}

/// Uniform sample from the closed ball of the given radius.
pub fn ball(rng: &mut SampleRng, n: usize, radius: f64) -> DVector<f64> {
    let dir = unit_vector(rng, n);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir * r
}

pub fn uniform(rng: &mut SampleRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}
