//! Sampled platoon trajectories and the quantities derived from them.

use crate::error::{PlatoonError, Result};
use crate::platoon::VehicleState;
use crate::tolerances::RATIO_FLOOR;

/// Time-indexed states of the lead (index 0) and `N` followers together with
/// the headway-dependent spacing errors `δ_i = x_i − x_{i−1} + d + h_w v_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// `[vehicle][sample]`
    states: Vec<Vec<VehicleState>>,
    /// `[follower − 1][sample]`
    deltas: Vec<Vec<f64>>,
    standstill: f64,
    hw: f64,
    /// Seed of the stochastic run that produced this trajectory.
    pub noise_seed: Option<u64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn new(
        times: Vec<f64>,
        states: Vec<Vec<VehicleState>>,
        standstill: f64,
        hw: f64,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(PlatoonError::Structural("no vehicles".into()));
        }
        for (i, series) in states.iter().enumerate() {
            if series.len() != times.len() {
                return Err(PlatoonError::Structural(format!(
                    "vehicle {i} has {} samples, time grid has {}",
                    series.len(),
                    times.len()
                )));
            }
        }
        let deltas = if states.len() >= 2 {
            delta_series(&states, standstill, hw)
        } else {
            Vec::new()
        };
        Ok(Self {
            times,
            states,
            deltas,
            standstill,
            hw,
            noise_seed: None,
            warnings: Vec::new(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of followers `N`.
    pub fn followers(&self) -> usize {
        self.states.len() - 1
    }

    pub fn vehicle(&self, i: usize) -> &[VehicleState] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<VehicleState>] {
        &self.states
    }

    /// `δ_i` for follower `i ≥ 1`.
    pub fn delta(&self, i: usize) -> &[f64] {
        &self.deltas[i - 1]
    }

    /// All follower spacing errors, `deltas()[i − 1] = δ_i`.
    pub fn deltas(&self) -> &[Vec<f64>] {
        &self.deltas
    }

    pub fn standstill(&self) -> f64 {
        self.standstill
    }

    pub fn hw(&self) -> f64 {
        self.hw
    }

    /// Largest absolute state component over the whole run.
    pub fn max_abs_diff(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .flat_map(|(a, b)| a.iter().zip(b))
            .map(|(p, q)| {
                (p.x - q.x)
                    .abs()
                    .max((p.v - q.v).abs())
                    .max((p.a - q.a).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn delta_series(states: &[Vec<VehicleState>], d: f64, hw: f64) -> Vec<Vec<f64>> {
    states
        .windows(2)
        .map(|pair| {
            pair[0]
                .iter()
                .zip(&pair[1])
                .map(|(prev, cur)| cur.x - prev.x + d + hw * cur.v)
                .collect()
        })
        .collect()
}

/// Recomputes `δ_i` from raw states for an arbitrary headway.
pub fn spacing_errors(traj: &Trajectory, hw: f64) -> Result<Vec<Vec<f64>>> {
    if traj.states.len() < 2 {
        return Err(PlatoonError::Structural(
            "spacing errors need at least two vehicles".into(),
        ));
    }
    Ok(delta_series(&traj.states, traj.standstill, hw))
}

/// `L(t) = x_0(t) − x_N(t)`.
pub fn platoon_length(traj: &Trajectory) -> Result<Vec<f64>> {
    if traj.is_empty() {
        return Err(PlatoonError::Structural("empty trajectory".into()));
    }
    let lead = &traj.states[0];
    let tail = traj.states.last().expect("at least one vehicle");
    Ok(lead.iter().zip(tail).map(|(l, t)| l.x - t.x).collect())
}

/// `max_t |s(t)|` over the sampled grid.
pub fn sup_norm(series: &[f64]) -> f64 {
    series.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Peak-error ratio between consecutive followers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplification {
    /// Downstream follower index `i` (the pair is `(i − 1, i)`).
    pub follower: usize,
    pub upstream_peak: f64,
    pub peak: f64,
    /// `None` when the upstream error is identically zero.
    pub ratio: Option<f64>,
}

/// `‖δ_i‖∞ / ‖δ_{i−1}‖∞` for `i = 2..=N`; `deltas[k]` is `δ_{k+1}`.
pub fn amplification_ratios(deltas: &[Vec<f64>]) -> Vec<Amplification> {
    let peaks: Vec<f64> = deltas.iter().map(|d| sup_norm(d)).collect();
    peaks
        .windows(2)
        .enumerate()
        .map(|(k, pair)| Amplification {
            follower: k + 2,
            upstream_peak: pair[0],
            peak: pair[1],
            ratio: (pair[0] > RATIO_FLOOR).then(|| pair[1] / pair[0]),
        })
        .collect()
}

/// Largest defined ratio, if any.
pub fn max_ratio(ratios: &[Amplification]) -> Option<f64> {
    ratios.iter().filter_map(|r| r.ratio).reduce(f64::max)
}

/// Every defined ratio stays at or below `1 + tol`.
pub fn is_string_stable(ratios: &[Amplification], tol: f64) -> bool {
    ratios
        .iter()
        .filter_map(|r| r.ratio)
        .all(|r| r <= 1.0 + tol)
}
