use nalgebra::{DMatrix, DVector, Matrix3};

use super::{breakpoints, Equilibrium, Recorder, Rk4};
use crate::error::{positive, Result};
use crate::platoon::{GainSet, PlatoonConfig};
use crate::trajectory::Trajectory;

/// Averaged platoon in matrix form, `Ẋ = Ā X + c` with the lead-acceleration
/// slot of `X` carrying the input `U(t)`.
///
/// State ordering is `[x_0, v_0, a_0, x_1, v_1, a_1, …]`. Follower `i`'s rows
/// only reference blocks `i` and `i − 1`, so `Ā` is block lower bidiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopSystem {
    pub a_bar: DMatrix<f64>,
    /// Selects the state slot that holds `U(t)` (the lead acceleration).
    pub b: DVector<f64>,
    /// Constant `−k_p d / τ` terms from the standstill spacing.
    pub offset: DVector<f64>,
    followers: usize,
}

pub fn build_averaged_system(
    config: &PlatoonConfig,
    gains: &GainSet,
    wbar: f64,
) -> Result<ClosedLoopSystem> {
    config.validate()?;
    gains.validate()?;
    positive("wbar", wbar)?;
    let n = config.followers;
    let dim = 3 * (n + 1);
    let tau = config.tau;
    let GainSet { ka, kv, kp, hw } = *gains;
    let ka_eff = ka * wbar;

    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DVector::zeros(dim);
    let mut offset = DVector::zeros(dim);
    a[(0, 1)] = 1.0;
    a[(1, 2)] = 1.0;
    b[2] = 1.0;
    for i in 1..=n {
        let r = 3 * i;
        let p = r - 3;
        a[(r, r + 1)] = 1.0;
        a[(r + 1, r + 2)] = 1.0;
        a[(r + 2, r)] = -kp / tau;
        a[(r + 2, r + 1)] = -(kv + kp * hw) / tau;
        a[(r + 2, r + 2)] = -1.0 / tau;
        a[(r + 2, p)] = kp / tau;
        a[(r + 2, p + 1)] = kv / tau;
        a[(r + 2, p + 2)] = ka_eff / tau;
        offset[r + 2] = -kp * config.standstill / tau;
    }
    Ok(ClosedLoopSystem {
        a_bar: a,
        b,
        offset,
        followers: n,
    })
}

impl ClosedLoopSystem {
    pub fn dim(&self) -> usize {
        self.a_bar.nrows()
    }

    /// Diagonal 3×3 block of follower `i ≥ 1`; its characteristic polynomial
    /// is `D(s)/τ`.
    pub fn follower_block(&self, i: usize) -> Matrix3<f64> {
        let r = 3 * i;
        self.a_bar.fixed_view::<3, 3>(r, r).into_owned()
    }

    fn input_slot(&self) -> usize {
        self.b.iter().position(|&v| v != 0.0).unwrap_or(2)
    }

    /// `Ẋ` with the input slot pinned to `u`.
    pub fn derivative(&self, x: &[f64], u: f64, dx: &mut [f64]) {
        self.apply(x, u, true, dx);
    }

    fn apply(&self, x: &[f64], u: f64, with_offset: bool, dx: &mut [f64]) {
        let slot = self.input_slot();
        let mut y = DVector::from_column_slice(x);
        y[slot] = u;
        let mut out = &self.a_bar * &y;
        if with_offset {
            out += &self.offset;
        }
        dx.copy_from_slice(out.as_slice());
        dx[slot] = 0.0;
    }

    /// Integrates the matrix form with the same RK4 scheme as the vehicle
    /// chain. The cruising equilibrium solves `Ẋ = Ā X + c`, so deviations
    /// from it obey `Ẋ = Ā X` and are what gets integrated.
    pub fn simulate(&self, config: &PlatoonConfig, hw: f64) -> Result<Trajectory> {
        config.validate()?;
        let steps = config.steps();
        let breaks = breakpoints(config);
        let mut x = vec![0.0; self.dim()];
        x[self.input_slot()] = config.lead.acceleration(0.0);
        let mut rk = Rk4::new(x.len());
        let mut rec = Recorder::new(Equilibrium::new(config, hw), self.followers + 1, steps + 1);
        rec.push(0.0, &x)?;
        let mut f = |s: f64, y: &[f64], dy: &mut [f64]| {
            self.apply(y, config.lead.acceleration(s), false, dy)
        };
        for k in 0..steps {
            let t = k as f64 * config.dt;
            let t_next = (k + 1) as f64 * config.dt;
            rk.step_split(&mut f, t, t_next - t, &mut x, &breaks);
            x[self.input_slot()] = config.lead.acceleration(t_next);
            rec.push(t_next, &x)?;
        }
        rec.finish(config, hw)
    }
}
