//! Seeded synthetic datasets.
//!
//! Documents are drawn around `clusters` random unit-sphere centers so that
//! nearest neighbors are meaningful: doc `i` belongs to cluster
//! `i % clusters` and equals `normalize(center + noise)`, where the noise is
//! isotropic Gaussian with per-component deviation `sigma / sqrt(dims)` (its
//! expected length is `sigma`).

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Name of the random stream behind every seeded operation. Changing the
/// algorithm or its use must bump this.
pub const GENERATOR: &str = "chacha8-v1";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent stream for one sub-task.
pub fn sub_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = rng(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterSpec {
    pub dims: usize,
    pub docs: usize,
    pub clusters: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl ClusterSpec {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.dims == 0 {
            problems.push("dims must be >= 1");
        }
        if self.docs == 0 {
            problems.push("docs must be >= 1");
        }
        if self.clusters == 0 {
            problems.push("clusters must be >= 1");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            problems.push("sigma must be > 0");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Usage(problems.join("; ")))
        }
    }
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn gaussian(rng: &mut ChaCha8Rng, dims: usize, scale: f64) -> Vec<f64> {
    (0..dims).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Unit vectors at 32-bit precision, ready for [`crate::vectors::write_tvec`].
pub fn clustered(spec: &ClusterSpec) -> Result<Vec<Vec<f32>>> {
    spec.validate()?;
    let mut rng = rng(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.clusters)
        .map(|_| loop {
            let c = gaussian(&mut rng, spec.dims, 1.0);
            if c.iter().any(|&x| x != 0.0) {
                break unit(c);
            }
        })
        .collect();
    let noise_scale = spec.sigma / (spec.dims as f64).sqrt();
    let rows = (0..spec.docs)
        .map(|i| {
            let center = &centers[i % spec.clusters];
            let noise = gaussian(&mut rng, spec.dims, noise_scale);
            let v: Vec<f64> = center.iter().zip(&noise).map(|(c, n)| c + n).collect();
            unit(v).into_iter().map(|x| x as f32).collect()
        })
        .collect();
    Ok(rows)
}

/// `count` distinct positions out of `0..len`, in sampling order.
pub fn sample_positions(len: usize, count: usize, seed: u64, stream: u64) -> Result<Vec<usize>> {
    if count > len {
        return Err(Error::Usage(format!("cannot sample {count} queries from {len} documents")));
    }
    Ok(index::sample(&mut sub_rng(seed, stream), len, count).into_vec())
}
