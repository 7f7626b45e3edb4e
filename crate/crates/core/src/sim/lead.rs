use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{PlatoonError, Result};

/// Acceleration disturbance applied to the lead vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LeadProfile {
    /// `amplitude·sin(frequency·(t − start))` for `start < t < end`, zero
    /// otherwise.
    Sine {
        amplitude: f64,
        frequency: f64,
        start: f64,
        end: f64,
    },
    /// `value` for `start < t < end`.
    Constant { value: f64, start: f64, end: f64 },
    /// Linear interpolation between knots; zero outside the table.
    Table { times: Vec<f64>, values: Vec<f64> },
}

impl Default for LeadProfile {
    /// Two full periods of a 0.5 m/s², 0.1 rad/s sinusoid starting at 10 s.
    fn default() -> Self {
        LeadProfile::Sine {
            amplitude: 0.5,
            frequency: 0.1,
            start: 10.0,
            end: 10.0 + 20.0 * PI,
        }
    }
}

impl LeadProfile {
    pub fn idle() -> Self {
        LeadProfile::Constant {
            value: 0.0,
            start: 0.0,
            end: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, value, reason| {
            Err(PlatoonError::InvalidParameter {
                name,
                value,
                reason,
            })
        };
        match self {
            LeadProfile::Sine {
                amplitude,
                frequency,
                start,
                end,
            } => {
                if !amplitude.is_finite() {
                    return bad("amplitude", *amplitude, "must be finite");
                }
                if !frequency.is_finite() {
                    return bad("frequency", *frequency, "must be finite");
                }
                if !(end > start) {
                    return bad("end", *end, "must come after start");
                }
            }
            LeadProfile::Constant { value, start, end } => {
                if !value.is_finite() {
                    return bad("value", *value, "must be finite");
                }
                if !(end > start) {
                    return bad("end", *end, "must come after start");
                }
            }
            LeadProfile::Table { times, values } => {
                if times.len() != values.len() || times.len() < 2 {
                    return Err(PlatoonError::Structural(
                        "lead table needs at least two (time, value) pairs of equal length".into(),
                    ));
                }
                if times.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(PlatoonError::Structural(
                        "lead table times must be strictly increasing".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(PlatoonError::Structural(
                        "lead table values must be finite".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// `a_0(t)`.
    pub fn acceleration(&self, t: f64) -> f64 {
        match self {
            LeadProfile::Sine {
                amplitude,
                frequency,
                start,
                end,
            } => {
                if t > *start && t < *end {
                    amplitude * (frequency * (t - start)).sin()
                } else {
                    0.0
                }
            }
            LeadProfile::Constant { value, start, end } => {
                if t > *start && t < *end {
                    *value
                } else {
                    0.0
                }
            }
            LeadProfile::Table { times, values } => {
                let last = times.len() - 1;
                if t < times[0] || t > times[last] {
                    return 0.0;
                }
                let k = times.partition_point(|&s| s <= t).clamp(1, last);
                let (t0, t1) = (times[k - 1], times[k]);
                let (v0, v1) = (values[k - 1], values[k]);
                v0 + (v1 - v0) * (t - t0) / (t1 - t0)
            }
        }
    }

    /// Instants where `a_0` or its derivative is discontinuous. The
    /// integrator lands on these exactly to keep fourth-order accuracy.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            LeadProfile::Sine { start, end, .. } | LeadProfile::Constant { start, end, .. } => {
                vec![*start, *end]
            }
            LeadProfile::Table { times, .. } => times.clone(),
        }
    }
}
