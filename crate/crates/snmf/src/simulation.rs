//! Synthetic two-Gaussian dataset generator.
//!
//! Latent coefficients come from two diagonal Gaussians (means (1,1,1,1,1)
//! and (3,3,1,1,1)), clamped at zero; the basis is Uniform(0,1); noise is
//! Gaussian with each column matching the empirical mean and variance of the
//! corresponding column of U·V, scaled by η and clamped again after adding.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};
use crate::factorization::FactorPair;
use crate::numerics::{
    project_nonneg, sample_gaussian, sample_uniform, DenseMatrix, NonNegMatrix, RngSeed,
};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_per_class: usize,
    pub latent_dim: usize,
    pub ambient_dim: usize,
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub cov_diag: Vec<f64>,
    pub noise_level: f64,
    pub seed: RngSeed,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_per_class: 250,
            latent_dim: 5,
            ambient_dim: 10,
            mu1: vec![1.0; 5],
            mu2: vec![3.0, 3.0, 1.0, 1.0, 1.0],
            cov_diag: vec![1.0; 5],
            noise_level: 0.0,
            seed: RngSeed(0),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mu1.len() != self.latent_dim
            || self.mu2.len() != self.latent_dim
            || self.cov_diag.len() != self.latent_dim
        {
            return Err(SnmfError::InvalidConfig(
                "mean/covariance vectors must have latent_dim entries".into(),
            ));
        }
        if self.noise_level < 0.0 {
            return Err(SnmfError::InvalidConfig(format!(
                "noise level must be ≥ 0, got {}",
                self.noise_level
            )));
        }
        if self.n_per_class == 0 || self.latent_dim == 0 || self.ambient_dim == 0 {
            return Err(SnmfError::InvalidConfig("dimensions must be positive".into()));
        }
        if self.latent_dim > (2 * self.n_per_class).min(self.ambient_dim) {
            return Err(SnmfError::InvalidConfig(
                "latent_dim exceeds data dimensions".into(),
            ));
        }
        Ok(())
    }
}

/// Generate (X, y, true factors). Class-1 rows come first with label 0,
/// class-2 rows follow with label 1. Deterministic per seed.
pub fn gen_simulation(cfg: &SimConfig) -> Result<(NonNegMatrix, Vec<u8>, FactorPair)> {
    cfg.validate()?;
    let mut rng_u1 = cfg.seed.stream(0);
    let mut rng_u2 = cfg.seed.stream(1);
    let mut rng_v = cfg.seed.stream(2);
    let mut rng_e = cfg.seed.stream(3);

    let u1 = sample_gaussian(&cfg.mu1, &cfg.cov_diag, cfg.n_per_class, &mut rng_u1)?;
    let u2 = sample_gaussian(&cfg.mu2, &cfg.cov_diag, cfg.n_per_class, &mut rng_u2)?;
    let n = 2 * cfg.n_per_class;
    let stacked = DenseMatrix::from_fn(n, cfg.latent_dim, |i, j| {
        if i < cfg.n_per_class {
            u1.get(i, j)
        } else {
            u2.get(i - cfg.n_per_class, j)
        }
    });
    let u = project_nonneg(&stacked);
    // Uniform(0,1) is already nonnegative; the clamp mirrors the generating
    // protocol and is a no-op.
    let v = project_nonneg(&sample_uniform(cfg.latent_dim, cfg.ambient_dim, &mut rng_v));

    let product = u.as_dense().matmul(v.as_dense());
    let mut x = product.clone();
    if cfg.noise_level > 0.0 {
        let (means, vars) = column_stats(&product);
        let noise = sample_gaussian(&means, &vars, n, &mut rng_e)?;
        for i in 0..n {
            for j in 0..cfg.ambient_dim {
                x.set(i, j, product.get(i, j) + cfg.noise_level * noise.get(i, j));
            }
        }
    }
    let x = project_nonneg(&x);
    let mut y = vec![0u8; cfg.n_per_class];
    y.extend(vec![1u8; cfg.n_per_class]);
    let truth = FactorPair::new(u, v)?;
    Ok((x, y, truth))
}

/// Per-column empirical mean and (population) variance.
fn column_stats(m: &DenseMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = m.rows() as f64;
    let mut means = vec![0.0; m.cols()];
    let mut vars = vec![0.0; m.cols()];
    for i in 0..m.rows() {
        for (j, mean) in means.iter_mut().enumerate() {
            *mean += m.get(i, j);
        }
    }
    for mean in &mut means {
        *mean /= n;
    }
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let d = m.get(i, j) - means[j];
            vars[j] += d * d;
        }
    }
    for var in &mut vars {
        *var /= n;
    }
    (means, vars)
}
