//! Seeded synthetic point clouds.
//!
//! Every generator uses ChaCha8 seeded with `seed_from_u64(seed)` and gives
//! point `j` its own stream (`set_stream(j)`), so a cloud is a pure function
//! of its parameters and seed regardless of thread count or platform.
//!
//! The swiss roll is a planar spiral `r(θ) = θ / 2π` for `θ ∈ [π/2, 3π]`,
//! sampled uniformly in `θ`.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{invalid, Result};

pub const SWISS_ROLL_THETA: (f64, f64) = (PI / 2.0, 3.0 * PI);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        let noise = Self { sigma, seed };
        noise.validate()?;
        Ok(noise)
    }

    pub fn noiseless(seed: u64) -> Self {
        Self { sigma: 0.0, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma >= 0.0 && self.sigma.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("sigma must be finite and >= 0, got {}", self.sigma)))
        }
    }
}

/// The generator for point `index`.
pub fn point_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn generate<F>(m: usize, dim: usize, noise: NoiseSpec, point: F) -> Result<PointCloud>
where
    F: Fn(usize, &mut ChaCha8Rng) -> Vec<f64> + Sync,
{
    if m == 0 {
        return Err(invalid("point count must be at least 1"));
    }
    noise.validate()?;
    let data: Vec<f64> = (0..m)
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = point_rng(noise.seed, j);
            let mut p = point(j, &mut rng);
            if noise.sigma > 0.0 {
                for v in &mut p {
                    *v += noise.sigma * gaussian(&mut rng);
                }
            }
            p
        })
        .collect();
    PointCloud::from_flat(dim, data)
}

fn check_radius(radius: f64) -> Result<()> {
    if radius > 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("radius must be positive, got {radius}")))
    }
}

/// Stratified angles `2π(j + u_j)/m` on a circle, plus isotropic noise.
pub fn sample_circle(m: usize, radius: f64, noise: NoiseSpec) -> Result<PointCloud> {
    check_radius(radius)?;
    generate(m, 2, noise, |j, rng| {
        let u: f64 = rng.random();
        let angle = 2.0 * PI * (j as f64 + u) / m as f64;
        vec![radius * angle.cos(), radius * angle.sin()]
    })
}

/// Uniform directions on the 2-sphere in R³, plus isotropic noise.
pub fn sample_sphere(m: usize, radius: f64, noise: NoiseSpec) -> Result<PointCloud> {
    check_radius(radius)?;
    generate(m, 3, noise, |_, rng| loop {
        let g = [gaussian(rng), gaussian(rng), gaussian(rng)];
        let n = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if n > 1e-12 {
            break g.iter().map(|v| radius * v / n).collect();
        }
    })
}

pub fn swiss_roll_point(theta: f64) -> [f64; 2] {
    let r = theta / (2.0 * PI);
    [r * theta.cos(), r * theta.sin()]
}

pub fn sample_swiss_roll_2d(m: usize, noise: NoiseSpec) -> Result<PointCloud> {
    let (lo, hi) = SWISS_ROLL_THETA;
    generate(m, 2, noise, |_, rng| {
        let theta = rng.random_range(lo..=hi);
        swiss_roll_point(theta).to_vec()
    })
}

/// Equal-weight mixture of `N((±a, 0), diag(1/2, 1/4))`; `noise.sigma` adds
/// further isotropic noise on top.
pub fn sample_bimodal(m: usize, a: f64, noise: NoiseSpec) -> Result<PointCloud> {
    if !(a >= 0.0) || !a.is_finite() {
        return Err(invalid(format!("a must be finite and >= 0, got {a}")));
    }
    generate(m, 2, noise, |_, rng| {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        vec![sign * a + 0.5f64.sqrt() * gaussian(rng), 0.5 * gaussian(rng)]
    })
}

/// A closed curve in R^`dim` lying in the span of the first four axes:
/// `(cos t, sin t, cos 2t / 2, sin 2t / 2, 0, …)`. Noise is added in all
/// ambient coordinates.
pub fn sample_embedded_curve(m: usize, dim: usize, noise: NoiseSpec) -> Result<PointCloud> {
    if dim < 4 {
        return Err(invalid(format!("embedded curve needs dimension >= 4, got {dim}")));
    }
    generate(m, dim, noise, |j, rng| {
        let u: f64 = rng.random();
        let t = 2.0 * PI * (j as f64 + u) / m as f64;
        let mut p = vec![0.0; dim];
        p[0] = t.cos();
        p[1] = t.sin();
        p[2] = 0.5 * (2.0 * t).cos();
        p[3] = 0.5 * (2.0 * t).sin();
        p
    })
}

/// Adds isotropic Gaussian noise to every coordinate; point `j` draws from
/// stream `j` of `noise.seed`.
pub fn add_noise(cloud: &PointCloud, noise: NoiseSpec) -> Result<PointCloud> {
    noise.validate()?;
    let dim = cloud.dim();
    let data: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .flat_map_iter(|j| {
            let mut rng = point_rng(noise.seed, j);
            cloud.row(j).iter().map(move |v| v + noise.sigma * gaussian(&mut rng)).collect::<Vec<_>>()
        })
        .collect();
    PointCloud::from_flat(dim, data)
}
