//! Observation domains, linear networks and point patterns.

mod network;
mod pattern;

pub use network::{EquidistantCounter, LinearNetwork, NetworkPoint, VERTEX_TOLERANCE};
pub use pattern::{pattern_from_table, table_builder, Event, Mark, MarkValues, PatternBuilder, PointPattern};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Axis-aligned rectangular spatial window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialWindow {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl SpatialWindow {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
            return Err(invalid("window bounds must be finite"));
        }
        if !(x0 < x1 && y0 < y1) {
            return Err(invalid(format!(
                "window requires x0 < x1 and y0 < y1, got [{x0}, {x1}] x [{y0}, {y1}]"
            )));
        }
        Ok(Self { x0, x1, y0, y1 })
    }

    pub fn unit() -> Self {
        Self { x0: 0.0, x1: 1.0, y0: 0.0, y1: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

/// Closed time interval `[t0, t1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeInterval {
    pub t0: f64,
    pub t1: f64,
}

impl TimeInterval {
    pub fn new(t0: f64, t1: f64) -> Result<Self> {
        if !(t0.is_finite() && t1.is_finite()) {
            return Err(invalid("interval bounds must be finite"));
        }
        if !(t0 < t1) {
            return Err(invalid(format!("interval requires t0 < t1, got [{t0}, {t1}]")));
        }
        Ok(Self { t0, t1 })
    }

    pub fn unit() -> Self {
        Self { t0: 0.0, t1: 1.0 }
    }

    pub fn length(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.t0 && t <= self.t1
    }
}

/// Number of the two time points `t - lag`, `t + lag` that fall inside the
/// interval. This is the temporal counterpart of the network multiplicity.
pub fn temporal_multiplicity(interval: &TimeInterval, t: f64, lag: f64) -> u8 {
    u8::from(t - lag >= interval.t0) + u8::from(t + lag <= interval.t1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_multiplicity_cases() {
        let iv = TimeInterval::unit();
        assert_eq!(temporal_multiplicity(&iv, 0.5, 0.2), 2);
        assert_eq!(temporal_multiplicity(&iv, 0.1, 0.2), 1);
        assert_eq!(temporal_multiplicity(&iv, 0.5, 0.8), 0);
    }

    #[test]
    fn window_rejects_inverted_bounds() {
        assert!(SpatialWindow::new(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(TimeInterval::new(2.0, 2.0).is_err());
        assert_eq!(SpatialWindow::new(0.0, 2.0, 0.0, 3.0).unwrap().area(), 6.0);
    }
}
