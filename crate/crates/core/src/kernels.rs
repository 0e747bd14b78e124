//! Positive-definite kernels, their gradients, and bandwidth selection.
//!
//! The same RBF kernel drives both the particle update (attraction weights
//! and repulsion gradients) and the MMD estimator in [`crate::diagnostics`].
//! The parameterization is `k(x, y) = exp(-||x - y||^2 / h)`, matching the
//! reference SVGD convention, so the gradient with respect to the first
//! argument is `-(2/h) (x - y) k(x, y)`.

use ndarray::ArrayView2;
use rayon::prelude::*;

use crate::error::{ensure_finite, ensure_same_dim, Error, Result};

/// Default lower clamp for resolved bandwidths.
pub const DEFAULT_BANDWIDTH_FLOOR: f64 = 1e-8;

/// Kernel family. Only the squared-exponential (RBF) kernel is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    Rbf,
}

/// How the bandwidth is chosen when a kernel is resolved against a set of
/// points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthPolicy {
    /// Use this bandwidth as-is.
    Fixed(f64),
    /// `h = med^2 / ln n` with `med` the median pairwise distance.
    MedianHeuristic,
}

/// A kernel family plus bandwidth policy. Resolving against a point set
/// yields an [`RbfKernel`] with a concrete bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub bandwidth_policy: BandwidthPolicy,
    /// Resolved bandwidths never go below this.
    pub bandwidth_floor: f64,
}

impl KernelSpec {
    /// RBF kernel with a fixed bandwidth `h > 0`.
    pub fn fixed(h: f64) -> Result<Self> {
        if !h.is_finite() || h <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "bandwidth",
                reason: format!("fixed bandwidth must be a positive finite real, got {h}"),
            });
        }
        Ok(Self {
            family: KernelFamily::Rbf,
            bandwidth_policy: BandwidthPolicy::Fixed(h),
            bandwidth_floor: DEFAULT_BANDWIDTH_FLOOR,
        })
    }

    /// RBF kernel with the median-heuristic bandwidth policy.
    pub fn median_heuristic() -> Self {
        Self {
            family: KernelFamily::Rbf,
            bandwidth_policy: BandwidthPolicy::MedianHeuristic,
            bandwidth_floor: DEFAULT_BANDWIDTH_FLOOR,
        }
    }

    /// Evaluate the bandwidth policy against `points` (one row per point).
    ///
    /// With fewer than two points the median heuristic has no pairwise
    /// distances to work with and resolves to `bandwidth_floor`.
    pub fn resolve(&self, points: ArrayView2<'_, f64>) -> Result<RbfKernel> {
        let h = match self.bandwidth_policy {
            BandwidthPolicy::Fixed(h) => h.max(self.bandwidth_floor),
            BandwidthPolicy::MedianHeuristic => {
                if points.nrows() < 2 {
                    self.bandwidth_floor
                } else {
                    median_heuristic(points, self.bandwidth_floor)?
                }
            }
        };
        RbfKernel::new(h)
    }
}

/// RBF kernel with a resolved, concrete bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RbfKernel {
    bandwidth: f64,
}

impl RbfKernel {
    pub fn new(bandwidth: f64) -> Result<Self> {
        if !bandwidth.is_finite() || bandwidth <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "bandwidth",
                reason: format!("resolved bandwidth must be positive and finite, got {bandwidth}"),
            });
        }
        Ok(Self { bandwidth })
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// `k(x, y) = exp(-||x - y||^2 / h)`, in `(0, 1]` and symmetric.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.validate_pair(x, y)?;
        Ok(self.eval_sq_dist(squared_distance(x, y)))
    }

    /// Kernel value from a precomputed squared distance.
    pub fn eval_sq_dist(&self, sq_dist: f64) -> f64 {
        (-sq_dist / self.bandwidth).exp()
    }

    /// Gradient with respect to the first argument:
    /// `grad_x k(x, y) = -(2/h) (x - y) k(x, y)`.
    pub fn grad_first(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.validate_pair(x, y)?;
        let k = self.eval_sq_dist(squared_distance(x, y));
        let coeff = -2.0 / self.bandwidth * k;
        Ok(x.iter().zip(y).map(|(xi, yi)| coeff * (xi - yi)).collect())
    }

    fn validate_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        ensure_same_dim(x.len(), y.len())?;
        ensure_finite(x, "kernel input x")?;
        ensure_finite(y, "kernel input y")
    }
}

pub(crate) fn squared_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let diff = xi - yi;
        acc += diff * diff;
    }
    acc
}

/// Median-heuristic bandwidth: `h = med^2 / ln n`, where `med` is the median
/// of the `n (n - 1) / 2` pairwise Euclidean distances. Degenerate point sets
/// (zero median) and sub-floor results clamp to `floor`.
///
/// For even-length distance lists the lower-middle element is used, so the
/// result is deterministic and permutation-invariant.
pub fn median_heuristic(points: ArrayView2<'_, f64>, floor: f64) -> Result<f64> {
    let n = points.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples {
            what: "median heuristic",
            min: 2,
            got: n,
        });
    }
    let rows: Vec<&[f64]> = points
        .rows()
        .into_iter()
        .map(|r| r.to_slice().expect("contiguous row"))
        .collect();
    // The median of distances is recovered from squared distances: sqrt is
    // monotone, so order statistics agree and med^2 is the selected value.
    let mut sq_dists: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let xi = rows[i];
            rows[i + 1..]
                .iter()
                .map(move |xj| squared_distance(xi, xj))
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(bandwidth_from_sq_dists(&mut sq_dists, n, floor))
}

/// Shared selection step: median (lower-middle) of squared distances,
/// divided by `ln n`, clamped below by `floor`.
pub(crate) fn bandwidth_from_sq_dists(sq_dists: &mut [f64], n: usize, floor: f64) -> f64 {
    debug_assert!(n >= 2);
    debug_assert_eq!(sq_dists.len(), n * (n - 1) / 2);
    sq_dists.sort_unstable_by(f64::total_cmp);
    let med_sq = sq_dists[(sq_dists.len() - 1) / 2];
    let h = med_sq / (n as f64).ln();
    if h.is_finite() {
        h.max(floor)
    } else {
        floor
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::arr2;
    use proptest::prelude::*;

    #[test]
    fn kernel_is_one_at_zero_distance() {
        let k = RbfKernel::new(0.37).unwrap();
        let x = [1.5, -2.0, 0.25];
        assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
    }

    #[test]
    fn kernel_matches_hand_evaluated_values() {
        // exp(-||x - y||^2 / h) for unit squared distance over unit bandwidth.
        let k = RbfKernel::new(1.0).unwrap();
        assert_relative_eq!(
            k.eval(&[0.0], &[1.0]).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
        assert_relative_eq!(k.eval(&[0.0], &[1.0]).unwrap(), 0.367879, epsilon = 1e-6);
        // ||x - y||^2 = 25 with h = 25 gives exp(-1) again.
        let k = RbfKernel::new(25.0).unwrap();
        assert_relative_eq!(
            k.eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap(),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn kernel_rejects_bad_inputs() {
        let k = RbfKernel::new(1.0).unwrap();
        assert!(matches!(
            k.eval(&[0.0, 1.0], &[0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            k.eval(&[f64::NAN], &[0.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            k.grad_first(&[f64::INFINITY], &[0.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(RbfKernel::new(0.0).is_err());
        assert!(RbfKernel::new(-1.0).is_err());
        assert!(KernelSpec::fixed(f64::NAN).is_err());
    }

    #[test]
    fn gradient_is_zero_at_coincident_points() {
        let k = RbfKernel::new(2.0).unwrap();
        let g = k.grad_first(&[0.3, -0.7], &[0.3, -0.7]).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn gradient_matches_hand_evaluated_value() {
        // grad_x k([1], [-1]; h=1) = -(2/1)(1 - (-1)) exp(-4) = -4 exp(-4).
        let k = RbfKernel::new(1.0).unwrap();
        let g = k.grad_first(&[1.0], &[-1.0]).unwrap();
        assert_relative_eq!(g[0], -4.0 * (-4.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(g[0], -0.073263, epsilon = 1e-6);
    }

    #[test]
    fn gradient_is_antisymmetric_in_arguments() {
        let k = RbfKernel::new(0.8).unwrap();
        let x = [0.4, -1.2, 2.0];
        let y = [-0.3, 0.9, 1.1];
        let gx = k.grad_first(&x, &y).unwrap();
        let gy = k.grad_first(&y, &x).unwrap();
        for (a, b) in gx.iter().zip(&gy) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let dims = [1usize, 2, 10];
        let mut rng_state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            // xorshift for cheap reproducible pseudo-random coordinates
            rng_state ^= rng_state << 13;
            rng_state ^= rng_state >> 7;
            rng_state ^= rng_state << 17;
            (rng_state >> 11) as f64 / (1u64 << 53) as f64 * 10.0 - 5.0
        };
        for &d in &dims {
            let h = 2.0 * d as f64;
            let k = RbfKernel::new(h).unwrap();
            for _ in 0..50 {
                let x: Vec<f64> = (0..d).map(|_| next()).collect();
                let y: Vec<f64> = (0..d).map(|_| next()).collect();
                let grad = k.grad_first(&x, &y).unwrap();
                let step = 1e-5;
                let mut fd = vec![0.0; d];
                for dim in 0..d {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[dim] += step;
                    xm[dim] -= step;
                    fd[dim] =
                        (k.eval(&xp, &y).unwrap() - k.eval(&xm, &y).unwrap()) / (2.0 * step);
                }
                let err: f64 = grad
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let scale: f64 = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!(
                    err <= 1e-6 * scale.max(1e-9),
                    "finite difference mismatch: err={err} scale={scale} d={d}"
                );
            }
        }
    }

    #[test]
    fn median_heuristic_matches_hand_evaluated_value() {
        // Particles {0, 1, 2}: pairwise distances {1, 1, 2}, median 1,
        // h = 1 / ln 3.
        let pts = arr2(&[[0.0], [1.0], [2.0]]);
        let h = median_heuristic(pts.view(), DEFAULT_BANDWIDTH_FLOOR).unwrap();
        assert_relative_eq!(h, 1.0 / 3.0f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(h, 0.910239, epsilon = 1e-6);
    }

    #[test]
    fn median_heuristic_degenerate_cases() {
        let identical = arr2(&[[2.0, 2.0], [2.0, 2.0], [2.0, 2.0]]);
        let h = median_heuristic(identical.view(), DEFAULT_BANDWIDTH_FLOOR).unwrap();
        assert_eq!(h, DEFAULT_BANDWIDTH_FLOOR);

        let single = arr2(&[[1.0]]);
        assert!(matches!(
            median_heuristic(single.view(), DEFAULT_BANDWIDTH_FLOOR),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn median_heuristic_scales_quadratically() {
        let pts = arr2(&[[0.0], [0.5], [1.25], [3.0]]);
        let scaled = pts.mapv(|v| 4.0 * v);
        let h1 = median_heuristic(pts.view(), 0.0).unwrap();
        let h2 = median_heuristic(scaled.view(), 0.0).unwrap();
        assert_relative_eq!(h2, 16.0 * h1, epsilon = 1e-15);
    }

    #[test]
    fn resolve_applies_floor_and_guards_small_sets() {
        let spec = KernelSpec::median_heuristic();
        let single = arr2(&[[1.0, 2.0]]);
        let k = spec.resolve(single.view()).unwrap();
        assert_eq!(k.bandwidth(), DEFAULT_BANDWIDTH_FLOOR);

        let spread = arr2(&[[0.0], [1.0], [2.0]]);
        let k = spec.resolve(spread.view()).unwrap();
        assert_relative_eq!(k.bandwidth(), 1.0 / 3.0f64.ln(), epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn kernel_symmetric_and_bounded(
            x in proptest::collection::vec(-50.0f64..50.0, 1..6),
            shift in proptest::collection::vec(-50.0f64..50.0, 1..6),
            h in 0.01f64..100.0,
        ) {
            let d = x.len().min(shift.len());
            let x = &x[..d];
            let y: Vec<f64> = x.iter().zip(&shift[..d]).map(|(a, b)| a + b).collect();
            let k = RbfKernel::new(h).unwrap();
            let kxy = k.eval(x, &y).unwrap();
            let kyx = k.eval(&y, x).unwrap();
            prop_assert_eq!(kxy, kyx);
            prop_assert!(kxy >= 0.0 && kxy <= 1.0);
            let coincident = x == y.as_slice();
            prop_assert_eq!(kxy == 1.0, coincident);
        }

        #[test]
        fn median_heuristic_permutation_invariant(
            mut pts in proptest::collection::vec(
                proptest::collection::vec(-10.0f64..10.0, 2), 2..12),
            swap_a in 0usize..12,
            swap_b in 0usize..12,
        ) {
            let flat: Vec<f64> = pts.iter().flatten().copied().collect();
            let n = pts.len();
            let original = ndarray::Array2::from_shape_vec((n, 2), flat).unwrap();
            let h1 = median_heuristic(original.view(), 1e-8).unwrap();
            pts.swap(swap_a % n, swap_b % n);
            pts.reverse();
            let flat: Vec<f64> = pts.iter().flatten().copied().collect();
            let permuted = ndarray::Array2::from_shape_vec((n, 2), flat).unwrap();
            let h2 = median_heuristic(permuted.view(), 1e-8).unwrap();
            prop_assert_eq!(h1, h2);
        }
    }
}
