//! Scenario parameters. Time-valued fields carry their unit in the name.

use thiserror::Error;

use crate::crypto::{self, Suite};
use crate::obu::{election, Election, ObuParams};
use crate::rsu::RsuParams;
use crate::time::Duration;

use super::node::{protocol, Protocol};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid `{field}`: {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: &'static str, reason: impl Into<String>) -> Self {
        Self {
            field,
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioConfig {
    pub area_width_m: f64,
    pub area_height_m: f64,
    pub grid_spacing_m: f64,
    pub vehicle_count: usize,
    pub speed_min_kmh: f64,
    pub speed_max_kmh: f64,
    pub coverage_radius_m: f64,
    pub bandwidth_mbps: f64,
    pub beacon_period_ms: f64,
    pub duration_s: f64,
    /// Metrics ignore everything generated before this point.
    pub warmup_s: f64,
    pub seed: u64,
    pub protocol: Protocol,
    pub p: usize,
    pub delta_t_ms: f64,
    pub theta_ms: f64,
    pub neighbor_timeout_ms: f64,
    pub election: Election,
    pub verify_cost_ms: f64,
    pub sign_cost_ms: f64,
    pub rx_buffer_capacity: usize,
    pub delta_max_ms: f64,
    pub cert_lifetime_s: f64,
    /// RSU zones along each side of the area.
    pub rsu_zones_per_side: usize,
    /// Share of beacons tampered with after signing.
    pub forged_fraction: f64,
    pub crypto: Suite,
    pub mobility_step_ms: f64,
    pub revoke_count: usize,
    pub revoke_at_s: f64,
}

/// 43 verifications per 300 ms.
pub const DEFAULT_VERIFY_COST_MS: f64 = 300.0 / 43.0;

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            area_width_m: 3000.0,
            area_height_m: 3000.0,
            grid_spacing_m: 750.0,
            vehicle_count: 100,
            speed_min_kmh: 30.0,
            speed_max_kmh: 75.0,
            coverage_radius_m: 300.0,
            bandwidth_mbps: 6.0,
            beacon_period_ms: 300.0,
            duration_s: 100.0,
            warmup_s: 2.0,
            seed: 1,
            protocol: protocol("cooperative"),
            p: 5,
            delta_t_ms: 30.0,
            theta_ms: 1000.0,
            neighbor_timeout_ms: 1000.0,
            election: election("p-nearest"),
            verify_cost_ms: DEFAULT_VERIFY_COST_MS,
            sign_cost_ms: DEFAULT_VERIFY_COST_MS,
            rx_buffer_capacity: 100,
            delta_max_ms: 1000.0,
            cert_lifetime_s: 600.0,
            rsu_zones_per_side: 2,
            forged_fraction: 0.0,
            crypto: crypto::suite("toy"),
            mobility_step_ms: 100.0,
            revoke_count: 0,
            revoke_at_s: 50.0,
        }
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be a positive number, got {v}")))
    }
}

fn non_negative(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(field, format!("must be zero or more, got {v}")))
    }
}

/// Whether `whole` is an integer multiple of `part`, to float precision.
fn divides(part: f64, whole: f64) -> bool {
    let k = (whole / part).round();
    k >= 1.0 && (k * part - whole).abs() <= 1e-9 * whole
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("area_width_m", self.area_width_m)?;
        positive("area_height_m", self.area_height_m)?;
        positive("grid_spacing_m", self.grid_spacing_m)?;
        if !divides(self.grid_spacing_m, self.area_width_m) {
            return Err(ConfigError::new("area_width_m", "must be a multiple of grid_spacing_m"));
        }
        if !divides(self.grid_spacing_m, self.area_height_m) {
            return Err(ConfigError::new("area_height_m", "must be a multiple of grid_spacing_m"));
        }
        if self.vehicle_count < 2 {
            return Err(ConfigError::new("vehicle_count", "need at least 2 vehicles"));
        }
        positive("speed_min_kmh", self.speed_min_kmh)?;
        positive("speed_max_kmh", self.speed_max_kmh)?;
        if self.speed_max_kmh < self.speed_min_kmh {
            return Err(ConfigError::new("speed_max_kmh", "must not be below speed_min_kmh"));
        }
        positive("coverage_radius_m", self.coverage_radius_m)?;
        positive("bandwidth_mbps", self.bandwidth_mbps)?;
        positive("beacon_period_ms", self.beacon_period_ms)?;
        positive("duration_s", self.duration_s)?;
        non_negative("warmup_s", self.warmup_s)?;
        if self.warmup_s >= self.duration_s {
            return Err(ConfigError::new("warmup_s", "must be shorter than duration_s"));
        }
        if self.p < 1 {
            return Err(ConfigError::new("p", "must be at least 1"));
        }
        positive("delta_t_ms", self.delta_t_ms)?;
        positive("theta_ms", self.theta_ms)?;
        positive("neighbor_timeout_ms", self.neighbor_timeout_ms)?;
        positive("verify_cost_ms", self.verify_cost_ms)?;
        positive("sign_cost_ms", self.sign_cost_ms)?;
        if self.rx_buffer_capacity < 1 {
            return Err(ConfigError::new("rx_buffer_capacity", "must be at least 1"));
        }
        non_negative("delta_max_ms", self.delta_max_ms)?;
        positive("cert_lifetime_s", self.cert_lifetime_s)?;
        if self.cert_lifetime_s < 1.0 {
            return Err(ConfigError::new("cert_lifetime_s", "must be at least one second"));
        }
        if self.rsu_zones_per_side < 1 {
            return Err(ConfigError::new("rsu_zones_per_side", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.forged_fraction) {
            return Err(ConfigError::new("forged_fraction", "must lie in [0, 1]"));
        }
        positive("mobility_step_ms", self.mobility_step_ms)?;
        if self.revoke_count > self.vehicle_count {
            return Err(ConfigError::new("revoke_count", "exceeds vehicle_count"));
        }
        non_negative("revoke_at_s", self.revoke_at_s)?;
        Ok(())
    }

    pub fn obu_params(&self) -> ObuParams {
        ObuParams {
            p: self.p,
            delta_t: Duration::from_millis_f64(self.delta_t_ms),
            theta: Duration::from_millis_f64(self.theta_ms),
            beacon_period: Duration::from_millis_f64(self.beacon_period_ms),
            neighbor_timeout: Duration::from_millis_f64(self.neighbor_timeout_ms),
            election: self.election,
        }
    }

    pub fn rsu_params(&self) -> RsuParams {
        RsuParams {
            delta_max: Duration::from_millis_f64(self.delta_max_ms),
            cert_lifetime: Duration::from_secs_f64(self.cert_lifetime_s),
        }
    }

    pub fn duration(&self) -> Duration {
        Duration::from_secs_f64(self.duration_s)
    }

    pub fn warmup(&self) -> Duration {
        Duration::from_secs_f64(self.warmup_s)
    }

    pub fn verify_cost(&self) -> Duration {
        Duration::from_millis_f64(self.verify_cost_ms)
    }

    pub fn sign_cost(&self) -> Duration {
        Duration::from_millis_f64(self.sign_cost_ms)
    }

    pub fn mobility_step(&self) -> Duration {
        Duration::from_millis_f64(self.mobility_step_ms)
    }

    pub fn bandwidth_bps(&self) -> f64 {
        self.bandwidth_mbps * 1e6
    }
}
