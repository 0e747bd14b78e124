//! Target densities: isotropic Gaussian mixtures with analytic score.
//!
//! A [`GaussianMixture`] exposes the log-density, its gradient (the score),
//! and exact ancestral sampling for diagnostics ground truth. All densities
//! are evaluated in log space with max-subtracted log-sum-exp, so distant
//! queries stay finite instead of underflowing to `-inf`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::engine::ParticleSet;
use crate::error::{ensure_finite, ensure_same_dim, Error, Result};

const LN_TWO_PI: f64 = 1.8378770664093453; // ln(2*pi)

/// One isotropic component: weight, mean, and the scale `sigma` of the
/// covariance `sigma^2 I`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub sigma: f64,
}

impl MixtureComponent {
    pub fn new(weight: f64, mean: Vec<f64>, sigma: f64) -> Self {
        Self {
            weight,
            mean,
            sigma,
        }
    }
}

/// A normalized mixture of isotropic Gaussians.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixture {
    components: Vec<MixtureComponent>,
    log_weights: Vec<f64>,
    dim: usize,
}

impl GaussianMixture {
    /// Build a mixture, validating and normalizing the weights so they sum
    /// to 1.
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter {
                name: "components",
                reason: "mixture needs at least one component".to_string(),
            });
        }
        let dim = components[0].mean.len();
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "mean",
                reason: "component means must have dimension >= 1".to_string(),
            });
        }
        let mut total_weight = 0.0;
        for (i, c) in components.iter().enumerate() {
            if !c.weight.is_finite() || c.weight <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "weight",
                    reason: format!("component {i} weight must be positive, got {}", c.weight),
                });
            }
            if !c.sigma.is_finite() || c.sigma <= 0.0 {
                return Err(Error::InvalidParameter {
                    name: "sigma",
                    reason: format!("component {i} sigma must be positive, got {}", c.sigma),
                });
            }
            ensure_same_dim(dim, c.mean.len())?;
            ensure_finite(&c.mean, "component mean")?;
            total_weight += c.weight;
        }
        let components: Vec<MixtureComponent> = components
            .into_iter()
            .map(|mut c| {
                c.weight /= total_weight;
                c
            })
            .collect();
        let log_weights = components.iter().map(|c| c.weight.ln()).collect();
        Ok(Self {
            components,
            log_weights,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Per-component log densities `ln(w_i N(x; mu_i, sigma_i^2 I))`.
    fn component_log_densities(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| {
                let d = self.dim as f64;
                let sq: f64 = x
                    .iter()
                    .zip(&c.mean)
                    .map(|(xi, mi)| (xi - mi) * (xi - mi))
                    .sum();
                lw - 0.5 * d * LN_TWO_PI - d * c.sigma.ln() - sq / (2.0 * c.sigma * c.sigma)
            })
            .collect()
    }

    fn validate_point(&self, x: &[f64]) -> Result<()> {
        ensure_same_dim(self.dim, x.len())?;
        ensure_finite(x, "query point")
    }

    /// `ln p(x)` via log-sum-exp over the component log densities.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.validate_point(x)?;
        Ok(log_sum_exp(&self.component_log_densities(x)))
    }

    /// Score `grad ln p(x) = sum_i r_i(x) (mu_i - x) / sigma_i^2`, with the
    /// responsibilities `r_i` normalized in log space.
    pub fn score(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate_point(x)?;
        let log_comps = self.component_log_densities(x);
        let lse = log_sum_exp(&log_comps);
        let mut score = vec![0.0; self.dim];
        for (c, lc) in self.components.iter().zip(&log_comps) {
            let resp = (lc - lse).exp();
            let inv_var = 1.0 / (c.sigma * c.sigma);
            for (s, (mi, xi)) in score.iter_mut().zip(c.mean.iter().zip(x)) {
                *s += resp * (mi - xi) * inv_var;
            }
        }
        Ok(score)
    }

    /// Exact ancestral sampling: a categorical draw over the weights, then a
    /// Gaussian draw from the chosen component. Deterministic given `seed`.
    pub fn sample_exact(&self, count: usize, seed: u64) -> Result<ParticleSet> {
        if count == 0 {
            return Err(Error::InvalidParameter {
                name: "count",
                reason: "sample count must be at least 1".to_string(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut positions = Array2::zeros((count, self.dim));
        for mut row in positions.rows_mut() {
            let c = &self.components[self.categorical_draw(&mut rng)];
            for (v, m) in row.iter_mut().zip(&c.mean) {
                let z: f64 = StandardNormal.sample(&mut rng);
                *v = m + c.sigma * z;
            }
        }
        ParticleSet::new(positions)
    }

    fn categorical_draw(&self, rng: &mut impl Rng) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }

    /// Five well-separated 1-D modes: means {-4, -2, 0, 2, 4}, sigma 0.3,
    /// equal weights.
    pub fn univariate5() -> Self {
        let comps = [-4.0, -2.0, 0.0, 2.0, 4.0]
            .iter()
            .map(|&m| MixtureComponent::new(1.0, vec![m], 0.3))
            .collect();
        Self::new(comps).expect("valid built-in target")
    }

    /// Sixteen equal-weight components on a 4x4 grid centered at the origin
    /// with the given spacing between adjacent means, sigma 0.5.
    pub fn grid16(spacing: f64) -> Result<Self> {
        if !spacing.is_finite() || spacing <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "spacing",
                reason: format!("grid spacing must be positive, got {spacing}"),
            });
        }
        let offsets = [-1.5, -0.5, 0.5, 1.5];
        let mut comps = Vec::with_capacity(16);
        for &gy in &offsets {
            for &gx in &offsets {
                comps.push(MixtureComponent::new(
                    1.0,
                    vec![gx * spacing, gy * spacing],
                    0.5,
                ));
            }
        }
        Self::new(comps)
    }

    /// Default grid spacing for [`GaussianMixture::grid16`].
    pub const GRID16_DEFAULT_SPACING: f64 = 3.0;

    /// A 2-D mixture with distinctly unequal weights, so weight recovery is
    /// a meaningful check: weights (0.35, 0.25, 0.2, 0.15, 0.05), sigma 0.5.
    pub fn irregular() -> Self {
        let spec: [(f64, [f64; 2]); 5] = [
            (0.35, [-3.0, -3.0]),
            (0.25, [3.0, 3.0]),
            (0.20, [-3.0, 3.0]),
            (0.15, [3.0, -3.0]),
            (0.05, [0.0, 0.0]),
        ];
        let comps = spec
            .iter()
            .map(|(w, m)| MixtureComponent::new(*w, m.to_vec(), 0.5))
            .collect();
        Self::new(comps).expect("valid built-in target")
    }

    /// Five equal-weight unit-scale components in `dim` dimensions with
    /// means drawn from `N(0, 4 I)`, which concentrates them on the shell at
    /// distance about `2 sqrt(dim)` from the origin.
    pub fn high_dim(dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "dimension must be at least 1".to_string(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let comps = (0..5)
            .map(|_| {
                let mean = (0..dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        2.0 * z
                    })
                    .collect();
                MixtureComponent::new(1.0, mean, 1.0)
            })
            .collect();
        Self::new(comps)
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
