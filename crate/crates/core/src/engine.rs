//! The SVGD / annealed-SVGD particle evolution.
//!
//! Each step moves every particle along
//!
//! ```text
//! phi(x_i) = (1/n) sum_j [ gamma k(x_j, x_i) score(x_j) + grad_{x_j} k(x_j, x_i) ]
//! ```
//!
//! where the first term is the driving force pulling particles toward high
//! density and the second is the repulsive force keeping them apart. With
//! `gamma = 1` this is the standard SVGD update; an annealing schedule
//! scales the driving force over the run.
//!
//! Updates are synchronous: every row of the direction matrix is computed
//! from the pre-step positions. The row loop is data-parallel, and each
//! row accumulates its sum over source particles in fixed index order, so
//! results are bit-identical regardless of thread count.

use ndarray::{Array2, ArrayView2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{self, BandwidthPolicy, KernelSpec, RbfKernel};
use crate::schedules::AnnealingSchedule;
use crate::targets::GaussianMixture;

/// An `n x d` set of particle positions plus the iteration counter of the
/// run that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Array2<f64>,
    iteration: usize,
}

impl ParticleSet {
    /// Wrap a position matrix, validating that it is non-empty and finite.
    pub fn new(positions: Array2<f64>) -> Result<Self> {
        Self::with_iteration(positions, 0)
    }

    pub fn with_iteration(positions: Array2<f64>, iteration: usize) -> Result<Self> {
        let (n, d) = positions.dim();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: format!("particle matrix must be non-empty, got {n}x{d}"),
            });
        }
        if !positions.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "particle positions".to_string(),
            });
        }
        Ok(Self {
            positions,
            iteration,
        })
    }

    pub fn positions(&self) -> &Array2<f64> {
        &self.positions
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Number of particles.
    pub fn len(&self) -> usize {
        self.positions.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.positions.ncols()
    }

    /// Particle `i` as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }
}

/// Initial particle distribution `N(mean, scale^2 I)`. A zero scale puts
/// every particle exactly at `mean`.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialDistribution {
    pub mean: Vec<f64>,
    pub scale: f64,
}

/// Everything needed to execute one particle-evolution run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub target: GaussianMixture,
    pub kernel: KernelSpec,
    pub schedule: AnnealingSchedule,
    pub step_size: f64,
    pub total_steps: usize,
    pub particle_count: usize,
    pub init: InitialDistribution,
    pub seed: u64,
    pub checkpoint_every: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "step_size",
                reason: format!("must be a positive real, got {}", self.step_size),
            });
        }
        if self.particle_count == 0 {
            return Err(Error::InvalidParameter {
                name: "particle_count",
                reason: "must be at least 1".to_string(),
            });
        }
        if self.schedule.total_steps() != self.total_steps {
            return Err(Error::InvalidParameter {
                name: "schedule",
                reason: format!(
                    "schedule covers {} steps but the run has {}",
                    self.schedule.total_steps(),
                    self.total_steps
                ),
            });
        }
        if self.init.mean.len() != self.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                got: self.init.mean.len(),
            });
        }
        if !self.init.scale.is_finite() || self.init.scale < 0.0 {
            return Err(Error::InvalidParameter {
                name: "init.scale",
                reason: format!("must be a nonnegative real, got {}", self.init.scale),
            });
        }
        if !self.init.mean.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite {
                context: "init.mean".to_string(),
            });
        }
        if self.checkpoint_every == 0 {
            return Err(Error::InvalidParameter {
                name: "checkpoint_every",
                reason: "must be at least 1".to_string(),
            });
        }
        if self.total_steps > 0 && self.checkpoint_every > self.total_steps {
            return Err(Error::InvalidParameter {
                name: "checkpoint_every",
                reason: format!(
                    "{} exceeds total_steps {}",
                    self.checkpoint_every, self.total_steps
                ),
            });
        }
        Ok(())
    }
}

/// Driving and repulsive contributions to the update direction, exposed
/// separately for diagnostics. The driving force here is unscaled; the
/// annealed direction is `gamma * driving + repulsive`.
#[derive(Debug, Clone)]
pub struct Forces {
    pub driving: Array2<f64>,
    pub repulsive: Array2<f64>,
}

impl Forces {
    /// Combine into the update direction for a given annealing factor.
    pub fn direction(&self, gamma: f64) -> Array2<f64> {
        let mut dir = self.repulsive.clone();
        dir.scaled_add(gamma, &self.driving);
        dir
    }
}

/// A particle snapshot passed to run observers.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    /// Number of completed steps when the snapshot was taken.
    pub iteration: usize,
    /// Annealing factor of the step that produced this state.
    pub gamma: f64,
    pub particles: ParticleSet,
}

/// Draw the initial particle set `N(init.mean, init.scale^2 I)`,
/// deterministically from the config seed.
pub fn init_particles(config: &RunConfig) -> Result<ParticleSet> {
    config.validate()?;
    let d = config.target.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut positions = Array2::zeros((config.particle_count, d));
    for mut row in positions.rows_mut() {
        for (v, m) in row.iter_mut().zip(&config.init.mean) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *v = m + config.init.scale * z;
        }
    }
    ParticleSet::new(positions)
}

/// Scores of the target at every particle, with the failing particle index
/// reported if any score is non-finite.
fn particle_scores(particles: &ParticleSet, target: &GaussianMixture) -> Result<Array2<f64>> {
    let (n, d) = particles.positions.dim();
    let rows: Vec<Result<Vec<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| target.score(particles.row(i)))
        .collect();
    let mut scores = Array2::zeros((n, d));
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        if !row.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFiniteScore {
                index: i,
                iteration: particles.iteration,
            });
        }
        scores.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
    }
    Ok(scores)
}

/// Pairwise squared distances between particle rows, row-parallel.
fn squared_distance_matrix(positions: &ArrayView2<'_, f64>) -> Vec<f64> {
    let (n, d) = positions.dim();
    let flat = positions.to_slice().expect("standard layout");
    let mut sq = vec![0.0; n * n];
    sq.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let xi = &flat[i * d..(i + 1) * d];
        for (j, out) in row.iter_mut().enumerate() {
            let xj = &flat[j * d..(j + 1) * d];
            *out = kernels::squared_distance(xi, xj);
        }
    });
    sq
}

fn forces_from_parts(
    positions: &ArrayView2<'_, f64>,
    scores: &Array2<f64>,
    sq_dists: &[f64],
    kernel: &RbfKernel,
) -> Forces {
    let (n, d) = positions.dim();
    let flat = positions.to_slice().expect("standard layout");
    let score_flat = scores.as_slice().expect("standard layout");
    let inv_n = 1.0 / n as f64;
    let two_over_h = 2.0 / kernel.bandwidth();

    let mut driving = vec![0.0; n * d];
    let mut repulsive = vec![0.0; n * d];
    driving
        .par_chunks_mut(d)
        .zip(repulsive.par_chunks_mut(d))
        .enumerate()
        .for_each(|(i, (drive_row, repel_row))| {
            let xi = &flat[i * d..(i + 1) * d];
            for j in 0..n {
                let k = kernel.eval_sq_dist(sq_dists[i * n + j]);
                let repel_coeff = two_over_h * k;
                let xj = &flat[j * d..(j + 1) * d];
                let sj = &score_flat[j * d..(j + 1) * d];
                for dim in 0..d {
                    drive_row[dim] += k * sj[dim];
                    repel_row[dim] += repel_coeff * (xi[dim] - xj[dim]);
                }
            }
            for dim in 0..d {
                drive_row[dim] *= inv_n;
                repel_row[dim] *= inv_n;
            }
        });

    Forces {
        driving: Array2::from_shape_vec((n, d), driving).expect("shape"),
        repulsive: Array2::from_shape_vec((n, d), repulsive).expect("shape"),
    }
}

/// Driving and repulsive force matrices for the current particle state and
/// a resolved kernel.
pub fn update_forces(
    particles: &ParticleSet,
    target: &GaussianMixture,
    kernel: &RbfKernel,
) -> Result<Forces> {
    if particles.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: particles.dim(),
        });
    }
    let scores = particle_scores(particles, target)?;
    let view = particles.positions.view();
    let sq = squared_distance_matrix(&view);
    Ok(forces_from_parts(&view, &scores, &sq, kernel))
}

/// The annealed update direction: row `i` holds
/// `(1/n) sum_j [gamma k(x_j, x_i) score(x_j) + grad_{x_j} k(x_j, x_i)]`.
pub fn update_direction(
    particles: &ParticleSet,
    target: &GaussianMixture,
    kernel: &RbfKernel,
    gamma: f64,
) -> Result<Array2<f64>> {
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: format!("must lie in [0, 1], got {gamma}"),
        });
    }
    Ok(update_forces(particles, target, kernel)?.direction(gamma))
}

/// Resolve the kernel bandwidth for the current particle state, sharing the
/// already-computed squared distances for the median heuristic.
fn resolve_bandwidth(spec: &KernelSpec, sq_dists: &[f64], n: usize) -> Result<RbfKernel> {
    let h = match spec.bandwidth_policy {
        BandwidthPolicy::Fixed(h) => h.max(spec.bandwidth_floor),
        BandwidthPolicy::MedianHeuristic => {
            if n < 2 {
                spec.bandwidth_floor
            } else {
                let mut upper: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
                for i in 0..n {
                    upper.extend_from_slice(&sq_dists[i * n + i + 1..(i + 1) * n]);
                }
                kernels::bandwidth_from_sq_dists(&mut upper, n, spec.bandwidth_floor)
            }
        }
    };
    RbfKernel::new(h)
}

/// Advance the particle set by one synchronous step. `t` must equal the
/// particle set's iteration counter; the annealing factor is
/// `schedule.gamma(t)`. A median-heuristic kernel is re-resolved from the
/// pre-step positions.
pub fn step(
    particles: &ParticleSet,
    target: &GaussianMixture,
    kernel: &KernelSpec,
    schedule: &AnnealingSchedule,
    step_size: f64,
    t: usize,
) -> Result<ParticleSet> {
    if t != particles.iteration {
        return Err(Error::IterationMismatch {
            t,
            iteration: particles.iteration,
        });
    }
    if particles.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: particles.dim(),
        });
    }
    let gamma = schedule.gamma(t)?;
    let scores = particle_scores(particles, target)?;
    let view = particles.positions.view();
    let sq = squared_distance_matrix(&view);
    let kernel = resolve_bandwidth(kernel, &sq, particles.len())?;
    let forces = forces_from_parts(&view, &scores, &sq, &kernel);

    let mut next = particles.positions.clone();
    next.scaled_add(step_size * gamma, &forces.driving);
    next.scaled_add(step_size, &forces.repulsive);
    ParticleSet::with_iteration(next, t + 1)
        .map_err(|_| Error::NonFiniteState { iteration: t })
}

/// Run the full evolution, calling `observer` at every checkpoint and
/// returning the final state plus the collected checkpoints.
///
/// Checkpoints are taken after every `checkpoint_every` completed steps and
/// always after the final step. For long runs where storing snapshots is
/// too expensive, use [`run_with_observer`].
pub fn run<F: FnMut(&Checkpoint)>(
    config: &RunConfig,
    mut observer: F,
) -> Result<(ParticleSet, Vec<Checkpoint>)> {
    let mut checkpoints = Vec::new();
    let finals = run_with_observer(config, |cp| {
        observer(cp);
        checkpoints.push(cp.clone());
    })?;
    Ok((finals, checkpoints))
}

/// Run the full evolution, streaming checkpoints to `observer` without
/// retaining them.
pub fn run_with_observer<F: FnMut(&Checkpoint)>(
    config: &RunConfig,
    mut observer: F,
) -> Result<ParticleSet> {
    config.validate()?;
    let mut particles = init_particles(config)?;
    for t in 0..config.total_steps {
        let gamma = config.schedule.gamma(t)?;
        particles = step(
            &particles,
            &config.target,
            &config.kernel,
            &config.schedule,
            config.step_size,
            t,
        )?;
        let completed = t + 1;
        if completed % config.checkpoint_every == 0 || completed == config.total_steps {
            let cp = Checkpoint {
                iteration: completed,
                gamma,
                particles: particles.clone(),
            };
            observer(&cp);
        }
    }
    Ok(particles)
}
