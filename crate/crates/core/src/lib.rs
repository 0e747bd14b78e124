//! Particle-based variational inference with Stein variational gradient
//! descent (SVGD) and its annealed variant (A-SVGD).
//!
//! A set of `n` particles is evolved toward a target density by combining a
//! kernel-weighted average of the target's score (the driving force) with a
//! kernel-gradient term that keeps particles apart (the repulsive force).
//! Annealing scales the driving force by a schedule `gamma(t) in [0, 1]`,
//! which trades early exploration against late exploitation and markedly
//! improves mode coverage on multi-modal targets.
//!
//! The crate is organized around the run lifecycle:
//!
//! - [`kernels`]: the RBF kernel, its gradient, and median-heuristic
//!   bandwidth selection.
//! - [`schedules`]: annealing schedules (constant, linear, hyperbolic
//!   tangent, cyclical) with a guaranteed terminal `gamma = 1` window.
//! - [`targets`]: Gaussian-mixture targets with analytic log-density,
//!   score, and exact sampling.
//! - [`engine`]: the synchronous particle update and deterministic,
//!   seedable run loop.
//! - [`diagnostics`]: unbiased MMD, mode assignment and coverage, and
//!   distance histograms.
//!
//! # Example
//!
//! ```
//! use asvgd::engine::{run, InitialDistribution, RunConfig};
//! use asvgd::kernels::KernelSpec;
//! use asvgd::schedules::{AnnealingSchedule, ScheduleFamily};
//! use asvgd::targets::GaussianMixture;
//!
//! let steps = 200;
//! let config = RunConfig {
//!     target: GaussianMixture::univariate5(),
//!     kernel: KernelSpec::median_heuristic(),
//!     schedule: AnnealingSchedule::new(ScheduleFamily::Hyperbolic { p: 5.0 }, steps).unwrap(),
//!     step_size: 0.1,
//!     total_steps: steps,
//!     particle_count: 50,
//!     init: InitialDistribution { mean: vec![-6.0], scale: 0.5 },
//!     seed: 0,
//!     checkpoint_every: 50,
//! };
//! let (particles, checkpoints) = run(&config, |_| {}).unwrap();
//! assert_eq!(particles.iteration(), steps);
//! assert_eq!(checkpoints.len(), 4);
//! ```

pub mod diagnostics;
pub mod engine;
mod error;
pub mod kernels;
pub mod schedules;
pub mod targets;

pub use error::{Error, Result};
