//! Whole-layer quantization of allocated session rates.

use serde::{Deserialize, Serialize};

use crate::allocation::{mbps, Allocation, SessionId};
use crate::error::{Error, Result};

// Slack when dividing rates into layers, so exact fits are not lost to rounding.
const FIT_EPS: f64 = 1e-9;

/// Base layer plus uniformly sized enhancement layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    base_bps: f64,
    enhancement_bps: f64,
    max_layers: Option<u32>,
}

impl LayerProfile {
    pub fn new(base_bps: f64, enhancement_bps: f64, max_layers: Option<u32>) -> Result<Self> {
        if !(base_bps.is_finite() && base_bps > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "base layer rate must be positive, got {base_bps}"
            )));
        }
        if !(enhancement_bps.is_finite() && enhancement_bps > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "enhancement layer rate must be positive, got {enhancement_bps}"
            )));
        }
        Ok(LayerProfile {
            base_bps,
            enhancement_bps,
            max_layers,
        })
    }

    pub fn from_mbps(base: f64, enhancement: f64) -> Result<Self> {
        Self::new(mbps(base), mbps(enhancement), None)
    }

    pub fn with_max_layers(mut self, max_layers: u32) -> Self {
        self.max_layers = Some(max_layers);
        self
    }

    pub fn base_bps(&self) -> f64 {
        self.base_bps
    }

    pub fn enhancement_bps(&self) -> f64 {
        self.enhancement_bps
    }

    pub fn max_layers(&self) -> Option<u32> {
        self.max_layers
    }

    /// Rejects a base layer above the minimum session rate.
    pub fn check_against_floor(&self, min_session_bps: f64) -> Result<()> {
        if self.base_bps > min_session_bps {
            return Err(Error::InvalidProfile(format!(
                "base layer {} bit/s exceeds the minimum session rate {} bit/s",
                self.base_bps, min_session_bps
            )));
        }
        Ok(())
    }
}

impl Default for LayerProfile {
    /// 0.6 Mbps base, 0.25 Mbps per enhancement layer, no cap.
    fn default() -> Self {
        LayerProfile {
            base_bps: mbps(0.6),
            enhancement_bps: mbps(0.25),
            max_layers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredPlan {
    pub session_id: SessionId,
    pub enhancement_count: u32,
    pub granted_bps: f64,
    pub residual_bps: f64,
}

/// Quantizes one rate; returns `(enhancement layers, granted rate)`.
fn fit_layers(rate_bps: f64, profile: &LayerProfile) -> (u32, f64) {
    let spare = (rate_bps - profile.base_bps).max(0.0);
    let mut n = ((spare / profile.enhancement_bps) + FIT_EPS).floor();
    if let Some(cap) = profile.max_layers {
        n = n.min(f64::from(cap));
    }
    let n = n as u32;
    (n, profile.base_bps + f64::from(n) * profile.enhancement_bps)
}

/// One plan per session, in the allocation's rank order.
pub fn quantize_allocation(
    allocation: &Allocation,
    profile: &LayerProfile,
) -> Result<Vec<LayeredPlan>> {
    allocation
        .sessions
        .iter()
        .map(|s| {
            if profile.base_bps > s.rate_bps {
                return Err(Error::ProfileInfeasible {
                    session: s.id.clone(),
                    base_bps: profile.base_bps,
                    rate_bps: s.rate_bps,
                });
            }
            let (enhancement_count, granted_bps) = fit_layers(s.rate_bps, profile);
            Ok(LayeredPlan {
                session_id: s.id.clone(),
                enhancement_count,
                granted_bps,
                residual_bps: (s.rate_bps - granted_bps).max(0.0),
            })
        })
        .collect()
}

pub fn plan_total_rate(plans: &[LayeredPlan]) -> f64 {
    plans.iter().map(|p| p.granted_bps).sum()
}
