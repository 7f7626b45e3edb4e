//! Shared domain types: vehicle state, controller gains and platoon setup.

use serde::{Deserialize, Serialize};

use crate::error::{positive, PlatoonError, Result};
use crate::sim::LeadProfile;

/// Longitudinal state of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VehicleState {
    /// Position (m).
    pub x: f64,
    /// Velocity (m/s).
    pub v: f64,
    /// Acceleration (m/s²).
    pub a: f64,
}

impl VehicleState {
    pub fn new(x: f64, v: f64, a: f64) -> Self {
        Self { x, v, a }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.v.is_finite() && self.a.is_finite()
    }
}

/// CTHP controller gains and time headway.
///
/// The control input of follower `i` is
/// `u_i = k_a·w·a_{i-1} − k_v (v_i − v_{i-1}) − k_p δ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GainSet {
    /// Predecessor-acceleration feedforward gain (dimensionless).
    pub ka: f64,
    /// Relative-velocity gain (1/s).
    pub kv: f64,
    /// Spacing-error gain (1/s²).
    pub kp: f64,
    /// Time headway (s).
    pub hw: f64,
}

impl GainSet {
    pub fn new(ka: f64, kv: f64, kp: f64, hw: f64) -> Result<Self> {
        let gains = Self { ka, kv, kp, hw };
        gains.validate()?;
        Ok(gains)
    }

    pub fn validate(&self) -> Result<()> {
        positive("k_a", self.ka)?;
        positive("k_v", self.kv)?;
        positive("k_p", self.kp)?;
        positive("h_w", self.hw)?;
        Ok(())
    }

    /// `γ = k_v + h_w·k_p`, the damping coefficient of the error dynamics.
    pub fn gamma(&self) -> f64 {
        self.kv + self.hw * self.kp
    }
}

/// Platoon geometry, actuator lag and integration settings. Missing fields
/// deserialize to the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlatoonConfig {
    /// Number of followers `N` (the lead vehicle is index 0).
    pub followers: usize,
    /// Actual actuator lag τ (s).
    pub tau: f64,
    /// Upper bound τ0 on the lag (s).
    pub tau0: f64,
    /// Standstill spacing `d` (m).
    pub standstill: f64,
    /// Common initial cruise speed (m/s).
    pub cruise_speed: f64,
    pub lead: LeadProfile,
    /// Fixed integration step (s).
    pub dt: f64,
    /// Simulated horizon (s).
    pub horizon: f64,
}

impl Default for PlatoonConfig {
    fn default() -> Self {
        Self {
            followers: 12,
            tau: 0.5,
            tau0: 0.5,
            standstill: 5.0,
            cruise_speed: 20.0,
            lead: LeadProfile::default(),
            dt: 0.01,
            horizon: 150.0,
        }
    }
}

impl PlatoonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.followers == 0 {
            return Err(PlatoonError::InvalidParameter {
                name: "followers",
                value: 0.0,
                reason: "platoon needs at least one follower",
            });
        }
        positive("tau", self.tau)?;
        positive("tau0", self.tau0)?;
        positive("standstill", self.standstill)?;
        positive("dt", self.dt)?;
        positive("horizon", self.horizon)?;
        if self.tau > self.tau0 {
            return Err(PlatoonError::InvalidParameter {
                name: "tau",
                value: self.tau,
                reason: "actual lag must not exceed tau0",
            });
        }
        if !(self.cruise_speed.is_finite() && self.cruise_speed >= 0.0) {
            return Err(PlatoonError::InvalidParameter {
                name: "cruise_speed",
                value: self.cruise_speed,
                reason: "must be finite and non-negative",
            });
        }
        // the step has to resolve the actuator lag
        if self.dt >= self.tau / 10.0 {
            return Err(PlatoonError::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "integration step must be below tau/10",
            });
        }
        self.lead.validate()
    }

    /// Number of integration steps covering the horizon.
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }

    /// Equilibrium spacing `d + h_w·v` between consecutive vehicles.
    pub fn equilibrium_gap(&self, hw: f64) -> f64 {
        self.standstill + hw * self.cruise_speed
    }

    /// CTHP equilibrium: common speed, zero acceleration, lead at the origin.
    pub fn equilibrium_states(&self, hw: f64) -> Vec<VehicleState> {
        let gap = self.equilibrium_gap(hw);
        (0..=self.followers)
            .map(|i| VehicleState::new(-(i as f64) * gap, self.cruise_speed, 0.0))
            .collect()
    }
}
