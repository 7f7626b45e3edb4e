//! Time-domain simulation of the predecessor-follower platoon.
//!
//! Each vehicle carries `(x, v, a)`. The lead vehicle's acceleration is the
//! prescribed disturbance `a_0(t)`; follower `i` obeys
//!
//! ```text
//! τ ȧ_i + a_i = k_a w_i a_{i−1} − k_v (v_i − v_{i−1}) − k_p δ_i
//! ```
//!
//! where `w_i` is the link noise factor: a fresh draw per step in stochastic
//! mode (held over the step), `w̄` in averaged mode and `1` without noise.
//! Integration is fixed-step RK4 starting from CTHP equilibrium. The
//! integrator carries deviations from the cruising equilibrium so that
//! absolute positions, which grow with `v0·t`, add no accumulated rounding.

mod averaged;
mod integrate;
mod lead;
mod montecarlo;

pub use averaged::{build_averaged_system, ClosedLoopSystem};
pub use integrate::Rk4;
pub use lead::LeadProfile;
pub use montecarlo::{monte_carlo_mean, MonteCarloMean};

use serde::{Deserialize, Serialize};

use crate::error::{PlatoonError, Result};
use crate::noise::{expected_noise_factor, link_rng, ChannelSpec};
use crate::platoon::{GainSet, PlatoonConfig, VehicleState};
use crate::synthesis::internal_stability;
use crate::tolerances::BLOWUP_LIMIT;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    Stochastic,
    Averaged,
    Noiseless,
}

impl std::str::FromStr for SimMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "stochastic" => Ok(SimMode::Stochastic),
            "averaged" => Ok(SimMode::Averaged),
            "noiseless" => Ok(SimMode::Noiseless),
            other => Err(format!(
                "unknown mode `{other}` (expected stochastic, averaged or noiseless)"
            )),
        }
    }
}

impl std::fmt::Display for SimMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SimMode::Stochastic => "stochastic",
            SimMode::Averaged => "averaged",
            SimMode::Noiseless => "noiseless",
        })
    }
}

/// Right-hand side of the vehicle chain in deviation coordinates.
#[derive(Debug, Clone, Copy)]
struct Chain<'a> {
    followers: usize,
    tau: f64,
    gains: GainSet,
    lead: &'a LeadProfile,
}

impl Chain<'_> {
    /// `w[i − 1]` is the factor on link `i`.
    fn derivative(&self, t: f64, x: &[f64], w: &[f64], dx: &mut [f64]) {
        let GainSet { ka, kv, kp, hw } = self.gains;
        let u = self.lead.acceleration(t);
        dx[0] = x[1];
        dx[1] = u;
        dx[2] = 0.0;
        for i in 1..=self.followers {
            let b = 3 * i;
            let p = b - 3;
            let a_prev = if i == 1 { u } else { x[p + 2] };
            // the equilibrium gap cancels d + h_w·v0 exactly
            let delta = x[b] - x[p] + hw * x[b + 1];
            dx[b] = x[b + 1];
            dx[b + 1] = x[b + 2];
            dx[b + 2] =
                (-x[b + 2] + ka * w[i - 1] * a_prev - kv * (x[b + 1] - x[p + 1]) - kp * delta)
                    / self.tau;
        }
    }
}

/// Cruising equilibrium `x_i = −i·gap + v0·t`, `v_i = v0`, `a_i = 0`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Equilibrium {
    gap: f64,
    speed: f64,
}

impl Equilibrium {
    pub(crate) fn new(config: &PlatoonConfig, hw: f64) -> Self {
        Self {
            gap: config.equilibrium_gap(hw),
            speed: config.cruise_speed,
        }
    }

    fn absolute(&self, t: f64, vehicle: usize, dev: &[f64]) -> VehicleState {
        VehicleState::new(
            dev[0] - vehicle as f64 * self.gap + self.speed * t,
            dev[1] + self.speed,
            dev[2],
        )
    }
}

/// Lead-input breakpoints strictly inside the horizon, ascending.
pub(crate) fn breakpoints(config: &PlatoonConfig) -> Vec<f64> {
    let mut b: Vec<f64> = config
        .lead
        .breakpoints()
        .into_iter()
        .filter(|&t| t > 0.0 && t < config.horizon)
        .collect();
    b.sort_by(f64::total_cmp);
    b
}

/// Collects integrator output (deviations) into absolute per-vehicle series.
pub(crate) struct Recorder {
    equilibrium: Equilibrium,
    times: Vec<f64>,
    states: Vec<Vec<VehicleState>>,
}

impl Recorder {
    pub(crate) fn new(equilibrium: Equilibrium, vehicles: usize, samples: usize) -> Self {
        Self {
            equilibrium,
            times: Vec::with_capacity(samples),
            states: (0..vehicles).map(|_| Vec::with_capacity(samples)).collect(),
        }
    }

    pub(crate) fn push(&mut self, t: f64, dev: &[f64]) -> Result<()> {
        for (i, series) in self.states.iter_mut().enumerate() {
            let s = self.equilibrium.absolute(t, i, &dev[3 * i..3 * i + 3]);
            if let Some(bad) = [s.x, s.v, s.a]
                .into_iter()
                .find(|v| !(v.abs() <= BLOWUP_LIMIT))
            {
                return Err(PlatoonError::Diverged {
                    t,
                    vehicle: i,
                    magnitude: bad.abs(),
                });
            }
            series.push(s);
        }
        self.times.push(t);
        Ok(())
    }

    pub(crate) fn finish(self, config: &PlatoonConfig, hw: f64) -> Result<Trajectory> {
        Trajectory::new(self.times, self.states, config.standstill, hw)
    }
}

fn run_chain(
    config: &PlatoonConfig,
    gains: &GainSet,
    mut link_factors: impl FnMut(&mut [f64]),
) -> Result<Trajectory> {
    let n = config.followers;
    let chain = Chain {
        followers: n,
        tau: config.tau,
        gains: *gains,
        lead: &config.lead,
    };
    let steps = config.steps();
    let breaks = breakpoints(config);
    let mut x = vec![0.0; 3 * (n + 1)];
    x[2] = config.lead.acceleration(0.0);
    let mut w = vec![1.0; n];
    let mut rk = Rk4::new(x.len());
    let mut rec = Recorder::new(Equilibrium::new(config, gains.hw), n + 1, steps + 1);
    rec.push(0.0, &x)?;
    for k in 0..steps {
        let t = k as f64 * config.dt;
        let t_next = (k + 1) as f64 * config.dt;
        link_factors(&mut w);
        let mut f = |s: f64, y: &[f64], dy: &mut [f64]| chain.derivative(s, y, &w, dy);
        rk.step_split(&mut f, t, t_next - t, &mut x, &breaks);
        x[2] = config.lead.acceleration(t_next);
        rec.push(t_next, &x)?;
    }
    rec.finish(config, gains.hw)
}

/// Simulates the platoon from CTHP equilibrium.
///
/// The seed only matters in stochastic mode, where link `i` draws from its own
/// stream derived from `(seed, i)`.
pub fn simulate(
    config: &PlatoonConfig,
    gains: &GainSet,
    channel: &ChannelSpec,
    mode: SimMode,
    seed: u64,
) -> Result<Trajectory> {
    config.validate()?;
    gains.validate()?;
    if mode != SimMode::Noiseless {
        channel.validate()?;
    }
    let mut warnings = Vec::new();
    if !internal_stability(config.tau, gains.gamma(), gains.kp)? {
        warnings.push(format!(
            "gamma = {} does not exceed tau*k_p = {}; follower dynamics are not internally stable",
            gains.gamma(),
            config.tau * gains.kp
        ));
    }

    let mut traj = match mode {
        SimMode::Noiseless => run_chain(config, gains, |_| {})?,
        SimMode::Averaged => {
            let wbar = expected_noise_factor(channel);
            run_chain(config, gains, |w| w.fill(wbar))?
        }
        SimMode::Stochastic => {
            let sampler = channel.sampler();
            let mut rngs: Vec<_> = (1..=config.followers).map(|i| link_rng(seed, i)).collect();
            let mut traj = run_chain(config, gains, |w| {
                for (wi, rng) in w.iter_mut().zip(rngs.iter_mut()) {
                    *wi = sampler.sample(rng).value();
                }
            })?;
            traj.noise_seed = Some(seed);
            traj
        }
    };
    traj.warnings = warnings;
    Ok(traj)
}

/// Replayed noise on one V2V link of a stochastic run.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    /// Step start times; the draw at `times[k]` is held until `times[k + 1]`.
    pub times: Vec<f64>,
    /// `w(t)`.
    pub factor: Vec<f64>,
    /// True predecessor acceleration `a_{i−1}(t)`.
    pub actual: Vec<f64>,
    /// `w(t)·a_{i−1}(t)` as received by follower `i`.
    pub communicated: Vec<f64>,
    /// `(w(t) − 1)·a_{i−1}(t)`.
    pub noise: Vec<f64>,
}

/// Regenerates the noise factors of link `link` (follower `link` receiving
/// from `link − 1`) and pairs them with the predecessor acceleration.
pub fn communicated_signal_trace(
    traj: &Trajectory,
    channel: &ChannelSpec,
    link: usize,
    seed: u64,
) -> Result<SignalTrace> {
    if link == 0 || link > traj.followers() {
        return Err(PlatoonError::LinkOutOfRange {
            index: link,
            followers: traj.followers(),
        });
    }
    if traj.noise_seed != Some(seed) {
        return Err(PlatoonError::Channel(format!(
            "trajectory was not produced by a stochastic run with seed {seed}"
        )));
    }
    channel.validate()?;
    let sampler = channel.sampler();
    let mut rng = link_rng(seed, link);
    let steps = traj.len().saturating_sub(1);
    let pred = traj.vehicle(link - 1);

    let mut out = SignalTrace {
        times: traj.times()[..steps].to_vec(),
        factor: Vec::with_capacity(steps),
        actual: Vec::with_capacity(steps),
        communicated: Vec::with_capacity(steps),
        noise: Vec::with_capacity(steps),
    };
    for state in &pred[..steps] {
        let w = sampler.sample(&mut rng).value();
        out.factor.push(w);
        out.actual.push(state.a);
        out.communicated.push(w * state.a);
        out.noise.push((w - 1.0) * state.a);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(lead: LeadProfile) -> PlatoonConfig {
        PlatoonConfig {
            followers: 3,
            horizon: 30.0,
            lead,
            ..PlatoonConfig::default()
        }
    }

    fn gains() -> GainSet {
        GainSet::new(0.5, 0.63, 0.009, 0.95).unwrap()
    }

    #[test]
    fn idle_lead_stays_at_equilibrium() {
        let cfg = short(LeadProfile::idle());
        for mode in [SimMode::Stochastic, SimMode::Averaged, SimMode::Noiseless] {
            let traj = simulate(&cfg, &gains(), &ChannelSpec::reference(), mode, 1).unwrap();
            let worst = traj
                .deltas()
                .iter()
                .flatten()
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(worst <= 1e-9, "{mode}: {worst}");
        }
    }

    #[test]
    fn stochastic_is_reproducible() {
        let cfg = short(LeadProfile::default());
        let ch = ChannelSpec::reference();
        let a = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 11).unwrap();
        let b = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 11).unwrap();
        let c = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 12).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs_diff(&c) > 0.0);
    }

    #[test]
    fn bad_step_is_rejected() {
        let mut cfg = short(LeadProfile::default());
        cfg.dt = 0.06;
        let err = simulate(
            &cfg,
            &gains(),
            &ChannelSpec::reference(),
            SimMode::Averaged,
            0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // γ < τ k_p: internally unstable, grows without bound
        let cfg = PlatoonConfig {
            followers: 2,
            horizon: 2000.0,
            lead: LeadProfile::Constant {
                value: 1.0,
                start: 1.0,
                end: 2.0,
            },
            dt: 0.02,
            ..PlatoonConfig::default()
        };
        let g = GainSet::new(0.5, 0.01, 2.0, 0.01).unwrap();
        let res = simulate(&cfg, &g, &ChannelSpec::noiseless(), SimMode::Noiseless, 0);
        assert!(matches!(res, Err(PlatoonError::Diverged { .. })), "{res:?}");
    }

    #[test]
    fn unstable_gains_warn_but_run() {
        let cfg = short(LeadProfile::idle());
        let g = GainSet::new(0.5, 0.001, 0.5, 0.001).unwrap();
        let traj = simulate(&cfg, &g, &ChannelSpec::noiseless(), SimMode::Noiseless, 0).unwrap();
        assert_eq!(traj.warnings.len(), 1);
    }

    #[test]
    fn trace_zero_acceleration() {
        let cfg = short(LeadProfile::idle());
        let ch = ChannelSpec::reference();
        let traj = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 3).unwrap();
        let tr = communicated_signal_trace(&traj, &ch, 2, 3).unwrap();
        let m = tr.communicated.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        // equilibrium holds up to rounding in the positions
        assert!(m < 1e-12, "max communicated {m}");
        assert!(tr.noise.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn trace_band_for_unit_acceleration() {
        let cfg = short(LeadProfile::Constant {
            value: 1.0,
            start: 0.0,
            end: 100.0,
        });
        let ch = ChannelSpec::reference();
        let traj = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 5).unwrap();
        let tr = communicated_signal_trace(&traj, &ch, 1, 5).unwrap();
        // a_0 is 1 from the first step onward
        for (&c, &a) in tr.communicated.iter().zip(&tr.actual).skip(1) {
            assert_eq!(a, 1.0);
            assert!((0.8..=1.2).contains(&c));
        }
        let again = communicated_signal_trace(&traj, &ch, 1, 5).unwrap();
        assert_eq!(tr, again);
    }

    #[test]
    fn trace_errors() {
        let cfg = short(LeadProfile::idle());
        let ch = ChannelSpec::reference();
        let traj = simulate(&cfg, &gains(), &ch, SimMode::Stochastic, 3).unwrap();
        assert!(matches!(
            communicated_signal_trace(&traj, &ch, 4, 3),
            Err(PlatoonError::LinkOutOfRange { .. })
        ));
        assert!(communicated_signal_trace(&traj, &ch, 0, 3).is_err());
        assert!(communicated_signal_trace(&traj, &ch, 1, 4).is_err());
        let avg = simulate(&cfg, &gains(), &ch, SimMode::Averaged, 3).unwrap();
        assert!(communicated_signal_trace(&avg, &ch, 1, 3).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("averaged".parse::<SimMode>().unwrap(), SimMode::Averaged);
        assert!("bogus".parse::<SimMode>().is_err());
    }
}
