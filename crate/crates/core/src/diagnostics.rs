//! Quantitative evaluation of particle sets against their targets:
//! MMD estimation, mode assignment, coverage counts, and distance
//! histograms.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::engine::ParticleSet;
use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec, RbfKernel};
use crate::targets::GaussianMixture;

/// Default radius multiplier for mode coverage: a mode counts as covered if
/// some particle lies within `2 sigma` of its mean.
pub const DEFAULT_COVERAGE_RADIUS: f64 = 2.0;

/// Default bin count for distance histograms.
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// Unbiased squared-MMD U-statistic between sample sets `x` and `y`:
///
/// ```text
/// (1/(n(n-1))) sum_{i!=j} k(x_i, x_j) + (1/(m(m-1))) sum_{i!=j} k(y_i, y_j)
///   - (2/(nm)) sum_{i,j} k(x_i, y_j)
/// ```
///
/// The estimator is unbiased and may be negative.
pub fn mmd2_unbiased(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    kernel: &RbfKernel,
) -> Result<f64> {
    let (n, d) = x.dim();
    let (m, dy) = y.dim();
    if n < 2 || m < 2 {
        return Err(Error::TooFewSamples {
            what: "mmd2_unbiased",
            min: 2,
            got: n.min(m),
        });
    }
    if d != dy {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: dy,
        });
    }
    let xs = x.to_slice().expect("standard layout");
    let ys = y.to_slice().expect("standard layout");

    // Row partials are computed in parallel and combined in index order, so
    // the result does not depend on thread scheduling.
    let xx: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xs[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..n {
                if j != i {
                    acc += kernel.eval_sq_dist(kernels::squared_distance(
                        xi,
                        &xs[j * d..(j + 1) * d],
                    ));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let yy: f64 = (0..m)
        .into_par_iter()
        .map(|i| {
            let yi = &ys[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..m {
                if j != i {
                    acc += kernel.eval_sq_dist(kernels::squared_distance(
                        yi,
                        &ys[j * d..(j + 1) * d],
                    ));
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    let xy: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = &xs[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..m {
                acc += kernel.eval_sq_dist(kernels::squared_distance(
                    xi,
                    &ys[j * d..(j + 1) * d],
                ));
            }
            acc
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();

    Ok(xx / (n * (n - 1)) as f64 + yy / (m * (m - 1)) as f64 - 2.0 * xy / (n * m) as f64)
}

/// [`mmd2_unbiased`] with the kernel bandwidth resolved against the pooled
/// set `x ∪ y`, so median-heuristic MMD stays comparable as the particle
/// spread changes.
pub fn mmd2_with_spec(
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
    spec: &KernelSpec,
) -> Result<f64> {
    if x.ncols() != y.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x.ncols(),
            got: y.ncols(),
        });
    }
    let mut pooled = ndarray::Array2::zeros((x.nrows() + y.nrows(), x.ncols()));
    pooled.slice_mut(ndarray::s![..x.nrows(), ..]).assign(&x);
    pooled.slice_mut(ndarray::s![x.nrows().., ..]).assign(&y);
    let kernel = spec.resolve(pooled.view())?;
    mmd2_unbiased(x, y, &kernel)
}

/// Label each particle with the index of the nearest component mean
/// (Euclidean distance, ties broken toward the lowest index).
pub fn assign_modes(particles: &ParticleSet, mixture: &GaussianMixture) -> Result<Vec<usize>> {
    if particles.dim() != mixture.dim() {
        return Err(Error::DimensionMismatch {
            expected: mixture.dim(),
            got: particles.dim(),
        });
    }
    let labels = (0..particles.len())
        .map(|i| {
            let x = particles.row(i);
            let mut best = 0;
            let mut best_sq = f64::INFINITY;
            for (k, c) in mixture.components().iter().enumerate() {
                let sq = kernels::squared_distance(x, &c.mean);
                if sq < best_sq {
                    best_sq = sq;
                    best = k;
                }
            }
            best
        })
        .collect();
    Ok(labels)
}

/// Mode-coverage summary: how many components hold at least one particle
/// within `radius_multiplier * sigma_k` of their mean, and the fraction of
/// particles assigned to each mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageStats {
    pub modes_covered: usize,
    pub mode_fractions: Vec<f64>,
}

pub fn coverage_stats(
    particles: &ParticleSet,
    mixture: &GaussianMixture,
    radius_multiplier: f64,
) -> Result<CoverageStats> {
    if !radius_multiplier.is_finite() || radius_multiplier <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "radius_multiplier",
            reason: format!("must be positive, got {radius_multiplier}"),
        });
    }
    let labels = assign_modes(particles, mixture)?;
    let k = mixture.num_components();
    let mut counts = vec![0usize; k];
    for label in &labels {
        counts[*label] += 1;
    }
    let n = particles.len() as f64;
    let mode_fractions: Vec<f64> = counts.iter().map(|c| *c as f64 / n).collect();

    let modes_covered = mixture
        .components()
        .iter()
        .filter(|c| {
            let r = radius_multiplier * c.sigma;
            let r_sq = r * r;
            (0..particles.len())
                .any(|i| kernels::squared_distance(particles.row(i), &c.mean) <= r_sq)
        })
        .count();

    Ok(CoverageStats {
        modes_covered,
        mode_fractions,
    })
}

/// Per-mode histograms of particle-to-mean distances over shared bin edges.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceHistograms {
    /// `bins + 1` edges, shared by every mode for comparability.
    pub bin_edges: Vec<f64>,
    /// `counts[k][b]` is the number of particles whose distance to mean `k`
    /// falls in bin `b`. Every row sums to the particle count.
    pub counts: Vec<Vec<u64>>,
}

/// Histogram the Euclidean distances from every particle to every component
/// mean. Bins are uniform from zero to the largest observed distance; the
/// last bin is closed so all mass is captured.
pub fn distance_histogram(
    particles: &ParticleSet,
    mixture: &GaussianMixture,
    bins: usize,
) -> Result<DistanceHistograms> {
    if bins == 0 {
        return Err(Error::InvalidParameter {
            name: "bins",
            reason: "bin count must be at least 1".to_string(),
        });
    }
    if particles.dim() != mixture.dim() {
        return Err(Error::DimensionMismatch {
            expected: mixture.dim(),
            got: particles.dim(),
        });
    }
    let k = mixture.num_components();
    let n = particles.len();
    let mut dists = vec![0.0; k * n];
    for (mode, c) in mixture.components().iter().enumerate() {
        for i in 0..n {
            dists[mode * n + i] = kernels::squared_distance(particles.row(i), &c.mean).sqrt();
        }
    }
    let max = dists.iter().copied().fold(0.0, f64::max);
    // A degenerate all-zero distance set still gets a usable axis.
    let hi = if max > 0.0 { max } else { 1.0 };
    let bin_edges: Vec<f64> = (0..=bins).map(|b| hi * b as f64 / bins as f64).collect();
    let mut counts = vec![vec![0u64; bins]; k];
    for mode in 0..k {
        for i in 0..n {
            let d = dists[mode * n + i];
            let idx = ((d / hi) * bins as f64) as usize;
            counts[mode][idx.min(bins - 1)] += 1;
        }
    }
    Ok(DistanceHistograms { bin_edges, counts })
}

/// One evaluated checkpoint of a run: the annealing factor plus whichever
/// diagnostics were enabled.
#[derive(Debug, Clone)]
pub struct DiagnosticsRecord {
    pub iteration: usize,
    pub gamma: f64,
    pub mmd2: Option<f64>,
    pub modes_covered: usize,
    pub mode_fractions: Vec<f64>,
    pub distance_histogram: Option<DistanceHistograms>,
}
