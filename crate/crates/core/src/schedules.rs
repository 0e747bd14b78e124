//! Annealing schedules producing the driving-force factor `gamma(t)`.
//!
//! A schedule maps step indices `0..total_steps` into `[0, 1]`. Low values
//! put the particle system in an exploratory phase dominated by kernel
//! repulsion; `gamma = 1` recovers the plain SVGD update. Every family is
//! clamped to exactly 1 over the final window of the run so the last
//! iterations always act on the true target density.

use crate::error::{Error, Result};

/// Fraction of the run forced to `gamma = 1` at the end (see
/// [`AnnealingSchedule::final_clamp_fraction`]).
pub const DEFAULT_FINAL_CLAMP_FRACTION: f64 = 0.05;

/// Default transition exponent for [`ScheduleFamily::Hyperbolic`];
/// `tanh(1.3^5) > 0.999`, so the curve nearly reaches 1 on its own.
pub const DEFAULT_HYPERBOLIC_P: f64 = 5.0;

/// Default transition exponent for [`ScheduleFamily::Cyclical`].
pub const DEFAULT_CYCLICAL_P: f64 = 2.0;

/// Default cycle count for [`ScheduleFamily::Cyclical`].
pub const DEFAULT_CYCLES: usize = 5;

/// The shape of the annealing curve.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleFamily {
    /// `gamma(t) = value` before the final clamp window. `Constant(1.0)`
    /// makes the annealed update identical to standard SVGD.
    Constant { value: f64 },
    /// Straight ramp `t / (T - 1)` from 0 to 1.
    Linear,
    /// `gamma(t) = tanh((1.3 t / T)^p)`: a long exploratory phase with a
    /// sharpening transition for larger `p`.
    Hyperbolic { p: f64 },
    /// `gamma(t) = (mod(t, ceil(T/C)) / ceil(T/C))^p`: `C` cycles of
    /// exploration followed by convergence.
    Cyclical { cycles: usize, p: f64 },
}

/// A schedule family bound to a run length, with the terminal clamp window.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealingSchedule {
    family: ScheduleFamily,
    total_steps: usize,
    final_clamp_fraction: f64,
}

impl AnnealingSchedule {
    /// Build a schedule with the default final clamp window (last 5% of
    /// steps at `gamma = 1`).
    pub fn new(family: ScheduleFamily, total_steps: usize) -> Result<Self> {
        Self::with_clamp_fraction(family, total_steps, DEFAULT_FINAL_CLAMP_FRACTION)
    }

    /// Build a schedule with an explicit clamp fraction in `[0, 1)`. The
    /// final step is clamped to 1 regardless, so every family satisfies
    /// `gamma(T - 1) = 1`.
    pub fn with_clamp_fraction(
        family: ScheduleFamily,
        total_steps: usize,
        final_clamp_fraction: f64,
    ) -> Result<Self> {
        match &family {
            ScheduleFamily::Constant { value } => {
                if !value.is_finite() || !(0.0..=1.0).contains(value) {
                    return Err(Error::InvalidParameter {
                        name: "constant gamma",
                        reason: format!("must lie in [0, 1], got {value}"),
                    });
                }
            }
            ScheduleFamily::Linear => {}
            ScheduleFamily::Hyperbolic { p } => {
                if !p.is_finite() || *p <= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "hyperbolic p",
                        reason: format!("must be a positive real, got {p}"),
                    });
                }
            }
            ScheduleFamily::Cyclical { cycles, p } => {
                if *cycles == 0 {
                    return Err(Error::InvalidParameter {
                        name: "cycles",
                        reason: "must be a positive integer".to_string(),
                    });
                }
                if !p.is_finite() || *p <= 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "cyclical p",
                        reason: format!("must be a positive real, got {p}"),
                    });
                }
            }
        }
        if !final_clamp_fraction.is_finite() || !(0.0..1.0).contains(&final_clamp_fraction) {
            return Err(Error::InvalidParameter {
                name: "final_clamp_fraction",
                reason: format!("must lie in [0, 1), got {final_clamp_fraction}"),
            });
        }
        Ok(Self {
            family,
            total_steps,
            final_clamp_fraction,
        })
    }

    /// Standard (unannealed) SVGD: `gamma = 1` at every step.
    pub fn standard(total_steps: usize) -> Self {
        Self::new(ScheduleFamily::Constant { value: 1.0 }, total_steps)
            .expect("constant 1.0 is always valid")
    }

    pub fn family(&self) -> &ScheduleFamily {
        &self.family
    }

    pub fn total_steps(&self) -> usize {
        self.total_steps
    }

    pub fn final_clamp_fraction(&self) -> f64 {
        self.final_clamp_fraction
    }

    /// First step index of the terminal `gamma = 1` window.
    pub fn clamp_start(&self) -> usize {
        if self.total_steps == 0 {
            return 0;
        }
        let raw = ((1.0 - self.final_clamp_fraction) * self.total_steps as f64).ceil() as usize;
        raw.min(self.total_steps - 1)
    }

    /// The annealing factor at step `t in [0, total_steps)`.
    pub fn gamma(&self, t: usize) -> Result<f64> {
        if t >= self.total_steps {
            return Err(Error::StepOutOfRange {
                t,
                total_steps: self.total_steps,
            });
        }
        if t >= self.clamp_start() {
            return Ok(1.0);
        }
        Ok(self.curve(t))
    }

    /// The raw family curve without the terminal clamp, defined for
    /// `t <= total_steps`. Useful for plotting and for inspecting the
    /// asymptote a family would reach on its own.
    pub fn curve(&self, t: usize) -> f64 {
        let total = self.total_steps as f64;
        match &self.family {
            ScheduleFamily::Constant { value } => *value,
            ScheduleFamily::Linear => {
                if self.total_steps <= 1 {
                    1.0
                } else {
                    t as f64 / (self.total_steps - 1) as f64
                }
            }
            ScheduleFamily::Hyperbolic { p } => (1.3 * t as f64 / total).powf(*p).tanh(),
            ScheduleFamily::Cyclical { cycles, p } => {
                let cycle_len = self.total_steps.div_ceil(*cycles);
                ((t % cycle_len) as f64 / cycle_len as f64).powf(*p)
            }
        }
    }
}
