use rayon::prelude::*;

use super::{simulate, SimMode};
use crate::error::{PlatoonError, Result};
use crate::noise::{run_seed, ChannelSpec};
use crate::platoon::{GainSet, PlatoonConfig, VehicleState};
use crate::trajectory::Trajectory;

/// Runs per work item. The reduction merges work items in index order, so the
/// result is bitwise reproducible regardless of thread count.
const CHUNK: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloMean {
    pub runs: usize,
    /// Pointwise mean of the states; its `δ` is recomputed from those means.
    pub mean: Trajectory,
    /// Pointwise mean of `δ_i` taken directly over the runs, `[follower − 1][sample]`.
    pub delta_mean: Vec<Vec<f64>>,
    /// `2·s/√M` per follower and sample; `None` for a single run.
    pub delta_half_width: Option<Vec<Vec<f64>>>,
}

impl MonteCarloMean {
    /// Fraction of (follower, sample) pairs where the mean `δ` lies within
    /// the confidence half-width of `reference`.
    pub fn coverage(&self, reference: &Trajectory) -> Option<f64> {
        let hw = self.delta_half_width.as_ref()?;
        let mut inside = 0usize;
        let mut total = 0usize;
        for (i, (mean, band)) in self.delta_mean.iter().zip(hw).enumerate() {
            for ((m, h), r) in mean.iter().zip(band).zip(reference.delta(i + 1)) {
                total += 1;
                if (m - r).abs() <= *h {
                    inside += 1;
                }
            }
        }
        Some(inside as f64 / total as f64)
    }

    /// Root-mean-square gap between the mean `δ` and `reference` over all
    /// followers and samples.
    pub fn rms_error(&self, reference: &Trajectory) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (i, mean) in self.delta_mean.iter().enumerate() {
            for (m, r) in mean.iter().zip(reference.delta(i + 1)) {
                sum += (m - r) * (m - r);
                count += 1;
            }
        }
        (sum / count as f64).sqrt()
    }
}

#[derive(Debug, Clone)]
struct Accumulator {
    count: usize,
    times: Vec<f64>,
    samples: usize,
    /// `[vehicle][sample][component]`, flattened
    state_mean: Vec<f64>,
    /// `[follower][sample]`, flattened
    delta_mean: Vec<f64>,
    delta_m2: Vec<f64>,
}

impl Accumulator {
    fn from_run(traj: &Trajectory) -> Self {
        let samples = traj.len();
        let state_mean = traj
            .states()
            .iter()
            .flat_map(|s| s.iter().flat_map(|v| [v.x, v.v, v.a]))
            .collect();
        let delta_mean: Vec<f64> = traj.deltas().iter().flatten().copied().collect();
        Self {
            count: 1,
            times: traj.times().to_vec(),
            samples,
            state_mean,
            delta_m2: vec![0.0; delta_mean.len()],
            delta_mean,
        }
    }

    // Welford update
    fn add(&mut self, traj: &Trajectory) {
        self.count += 1;
        let k = self.count as f64;
        for (m, v) in self.state_mean.iter_mut().zip(
            traj.states()
                .iter()
                .flat_map(|s| s.iter().flat_map(|v| [v.x, v.v, v.a])),
        ) {
            *m += (v - *m) / k;
        }
        for ((m, m2), v) in self
            .delta_mean
            .iter_mut()
            .zip(self.delta_m2.iter_mut())
            .zip(traj.deltas().iter().flatten())
        {
            let d = v - *m;
            *m += d / k;
            *m2 += d * (v - *m);
        }
    }

    // Chan et al. pairwise combination
    fn merge(mut self, other: Accumulator) -> Self {
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        for (m, o) in self.state_mean.iter_mut().zip(&other.state_mean) {
            *m += (o - *m) * nb / n;
        }
        for (((m, m2), o), o2) in self
            .delta_mean
            .iter_mut()
            .zip(self.delta_m2.iter_mut())
            .zip(&other.delta_mean)
            .zip(&other.delta_m2)
        {
            let d = o - *m;
            *m += d * nb / n;
            *m2 += o2 + d * d * na * nb / n;
        }
        self.count += other.count;
        self
    }
}

/// Pointwise mean over `runs` independent stochastic simulations. Run `r`
/// uses the seed `run_seed(master_seed, r)`.
pub fn monte_carlo_mean(
    config: &PlatoonConfig,
    gains: &GainSet,
    channel: &ChannelSpec,
    runs: usize,
    master_seed: u64,
) -> Result<MonteCarloMean> {
    if runs == 0 {
        return Err(PlatoonError::InvalidParameter {
            name: "runs",
            value: 0.0,
            reason: "need at least one run",
        });
    }
    let chunks = runs.div_ceil(CHUNK);
    let partial: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc: Option<Accumulator> = None;
            for r in c * CHUNK..((c + 1) * CHUNK).min(runs) {
                let traj = simulate(
                    config,
                    gains,
                    channel,
                    SimMode::Stochastic,
                    run_seed(master_seed, r as u64),
                )?;
                match acc.as_mut() {
                    None => acc = Some(Accumulator::from_run(&traj)),
                    Some(a) => a.add(&traj),
                }
            }
            Ok(acc.expect("chunk holds at least one run"))
        })
        .collect::<Result<_>>()?;
    let acc = partial
        .into_iter()
        .reduce(Accumulator::merge)
        .expect("at least one chunk");

    let vehicles = config.followers + 1;
    let t = acc.samples;
    let states: Vec<Vec<VehicleState>> = (0..vehicles)
        .map(|i| {
            (0..t)
                .map(|k| {
                    let o = (i * t + k) * 3;
                    VehicleState::new(
                        acc.state_mean[o],
                        acc.state_mean[o + 1],
                        acc.state_mean[o + 2],
                    )
                })
                .collect()
        })
        .collect();
    let mean = Trajectory::new(acc.times.clone(), states, config.standstill, gains.hw)?;
    let delta_mean: Vec<Vec<f64>> = acc.delta_mean.chunks(t).map(<[f64]>::to_vec).collect();
    let delta_half_width = (acc.count > 1).then(|| {
        let m = acc.count as f64;
        acc.delta_m2
            .chunks(t)
            .map(|c| {
                c.iter()
                    .map(|m2| 2.0 * (m2 / (m - 1.0)).sqrt() / m.sqrt())
                    .collect()
            })
            .collect()
    });
    Ok(MonteCarloMean {
        runs: acc.count,
        mean,
        delta_mean,
        delta_half_width,
    })
}
