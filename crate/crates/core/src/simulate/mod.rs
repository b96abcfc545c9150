//! Seeded simulation of Poisson and ETAS patterns.

mod etas;
mod poisson;

use std::sync::Arc;

pub use etas::{omori_cdf, radius_cdf, sample_omori_lag, sample_radius, sim_etas, EtasOutput, EtasParams};
pub use poisson::{sim_poisson, IntensitySpec, Simulation};

use crate::error::Result;
use crate::geometry::{Event, LinearNetwork, NetworkPoint, PointPattern, SpatialWindow, TimeInterval};

/// Where events are simulated.
#[derive(Debug, Clone)]
pub enum SimDomain {
    Planar { window: SpatialWindow, interval: TimeInterval },
    Network { network: Arc<LinearNetwork>, interval: TimeInterval },
}

impl SimDomain {
    pub fn interval(&self) -> &TimeInterval {
        match self {
            Self::Planar { interval, .. } | Self::Network { interval, .. } => interval,
        }
    }

    pub fn spatial_measure(&self) -> f64 {
        match self {
            Self::Planar { window, .. } => window.area(),
            Self::Network { network, .. } => network.total_length(),
        }
    }

    pub fn volume(&self) -> f64 {
        self.spatial_measure() * self.interval().length()
    }

    pub(crate) fn empty_pattern(&self) -> Result<PointPattern> {
        self.pattern(Vec::new(), Vec::new())
    }

    pub(crate) fn pattern(&self, events: Vec<Event>, coords: Vec<NetworkPoint>) -> Result<PointPattern> {
        match self {
            Self::Planar { window, interval } => PointPattern::new(events, *window, *interval),
            Self::Network { network, interval } => {
                let times = events.iter().map(|e| e.t).collect();
                PointPattern::on_network(network.clone(), coords, times, *interval)
            }
        }
    }
}
