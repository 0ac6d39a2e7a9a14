//! Two-sided distance estimates. Optimized path lengths are upper bounds
//! and certified projections are lower bounds, so every distance that has
//! no closed form is carried as an interval, never a point value.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceEstimate {
    pub lower: f64,
    pub upper: f64,
    /// False when the path optimizer hit its iteration cap; the bounds are
    /// still valid.
    pub converged: bool,
}

impl DistanceEstimate {
    pub fn exact(value: f64) -> Self {
        DistanceEstimate { lower: value, upper: value, converged: true }
    }

    pub fn new(lower: f64, upper: f64, converged: bool) -> Self {
        debug_assert!(lower.is_finite() && upper.is_finite());
        let upper = upper.max(lower);
        DistanceEstimate { lower, upper, converged }
    }

    /// Best point estimate: the optimized upper bound (exact when the two
    /// sides agree).
    pub fn estimate(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn overlaps(&self, other: &DistanceEstimate) -> bool {
        self.lower <= other.upper && other.lower <= self.upper
    }
}
