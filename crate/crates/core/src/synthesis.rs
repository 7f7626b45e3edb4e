//! Closed-form robust design of the CTHP controller.
//!
//! For a channel with SNR factor `ρ` the averaged feedforward gain `k̃_a` can
//! sit anywhere in `[(1 − 1/ρ) k_a, (1 + 1/ρ) k_a]`. Worst-casing the
//! sufficient string-stability conditions over that interval gives
//!
//! * an admissible range `k_a < 1/(1 + 1/ρ)`,
//! * a headway bound `h_w > h_lb(k_a) = 2τ0 (1 − m k_a) / (1 − n k_a²)`
//!   with `m = 1 − 1/ρ`, `n = (1 + 1/ρ)²`,
//! * a window `γ_min ≤ γ ≤ γ_max` on `γ = k_v + h_w k_p`, which in the
//!   `(k_p, k_v)` plane is the intersection of two half-planes `S1 ∩ S2`.
//!
//! `h_lb` is unimodal on the admissible range; its minimiser is the smaller
//! root of `f(k) = −m n k² + 2 n k − m`.

use serde::{Deserialize, Serialize};

use crate::error::{positive, PlatoonError, Result};
use crate::noise::Snr;
use crate::platoon::GainSet;

/// Upper end of the admissible feedforward range, `1/(1 + 1/ρ)`.
pub fn ka_upper_bound(snr: Snr) -> f64 {
    1.0 / (1.0 + snr.inverse())
}

fn check_ka(ka: f64, snr: Snr) -> Result<()> {
    positive("k_a", ka)?;
    let max = ka_upper_bound(snr);
    if ka >= max {
        return Err(PlatoonError::KaOutOfRange { ka, max });
    }
    Ok(())
}

fn coefficients(snr: Snr) -> (f64, f64) {
    let inv = snr.inverse();
    (1.0 - inv, (1.0 + inv) * (1.0 + inv))
}

/// Robust headway bound `h_lb(k_a)`; valid headways satisfy `h_w > h_lb`.
pub fn headway_lower_bound(ka: f64, snr: Snr, tau0: f64) -> Result<f64> {
    check_ka(ka, snr)?;
    positive("tau0", tau0)?;
    if snr == Snr::Noiseless {
        // (1 − k)/(1 − k²) cancels badly as k → 1
        return Ok(2.0 * tau0 / (1.0 + ka));
    }
    let (m, n) = coefficients(snr);
    Ok(2.0 * tau0 * (1.0 - m * ka) / (1.0 - n * ka * ka))
}

/// Minimising feedforward gain and the matching smallest headway bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimalDesign {
    pub ka: f64,
    pub hw_lb: f64,
    /// False without noise: the infimum `τ0` is only approached as `k_a → 1`,
    /// which is itself outside the open admissible range.
    pub attained: bool,
}

pub fn optimal_ka_headway(snr: Snr, tau0: f64) -> Result<OptimalDesign> {
    positive("tau0", tau0)?;
    match snr {
        Snr::Noiseless => Ok(OptimalDesign {
            ka: 1.0,
            hw_lb: tau0,
            attained: false,
        }),
        Snr::Factor(rho) => {
            let inv = 1.0 / rho;
            let inv_sqrt = inv.sqrt();
            let ka = (1.0 - inv_sqrt) / (1.0 + inv_sqrt) / (1.0 + inv);
            let hw_lb = tau0 * (1.0 + inv_sqrt).powi(2) / (1.0 + inv);
            Ok(OptimalDesign {
                ka,
                hw_lb,
                attained: true,
            })
        }
    }
}

/// Roots `r1 ≤ r2` of `f(k) = −m n k² + 2 n k − m`, the numerator of
/// `d h_lb / d k_a`. Only `r1` falls in the admissible range.
pub fn minimizer_roots(snr: Snr) -> (f64, f64) {
    let (m, n) = coefficients(snr);
    let disc = (n * (n - m * m)).sqrt();
    ((n - disc) / (m * n), (n + disc) / (m * n))
}

/// Sign-determining numerator of `d h_lb / d k_a`.
pub fn headway_slope_numerator(ka: f64, snr: Snr) -> f64 {
    let (m, n) = coefficients(snr);
    -m * n * ka * ka + 2.0 * n * ka - m
}

/// Admissible window on `γ` after worst-casing over `k̃_a ∈ I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaWindow {
    /// `√(2 k_p (1 − (1 − 1/ρ) k_a) + k_v²)`
    pub lower: f64,
    /// `(1 − (1 + 1/ρ)² k_a²) / (2 τ0)`
    pub upper: f64,
    /// `k_v + h_w k_p` of the gains under test.
    pub gamma: f64,
}

impl GammaWindow {
    /// No `γ` can satisfy both bounds (headway too small for these gains).
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn passes(&self) -> bool {
        self.lower <= self.gamma && self.gamma <= self.upper
    }
}

pub fn gamma_bounds(snr: Snr, tau0: f64, gains: &GainSet) -> Result<GammaWindow> {
    gains.validate()?;
    check_ka(gains.ka, snr)?;
    positive("tau0", tau0)?;
    let (m, n) = coefficients(snr);
    let lower = (2.0 * gains.kp * (1.0 - m * gains.ka) + gains.kv * gains.kv).sqrt();
    let upper = (1.0 - n * gains.ka * gains.ka) / (2.0 * tau0);
    Ok(GammaWindow {
        lower,
        upper,
        gamma: gains.gamma(),
    })
}

/// Intercepts of the two half-planes bounding the feasible `(k_p, k_v)` set.
///
/// `S1 = {k_v/a1 + k_p/b1 ≤ 1}`, `S2 = {k_v/a2 + k_p/b2 ≥ 1}`, both
/// restricted to the open positive quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub a1: f64,
    pub b1: f64,
    pub a2: f64,
    pub b2: f64,
}

impl RegionParams {
    pub fn in_s1(&self, kp: f64, kv: f64) -> bool {
        kp > 0.0 && kv > 0.0 && kv / self.a1 + kp / self.b1 <= 1.0
    }

    pub fn in_s2(&self, kp: f64, kv: f64) -> bool {
        kp > 0.0 && kv > 0.0 && kv / self.a2 + kp / self.b2 >= 1.0
    }

    pub fn contains(&self, kp: f64, kv: f64) -> bool {
        self.in_s1(kp, kv) && self.in_s2(kp, kv)
    }

    /// `S1 ∩ S2` has interior points iff `a1 > a2`. At `a1 = a2` the two
    /// lines only meet on the `k_v` axis, which the open quadrant excludes.
    pub fn is_nonempty(&self) -> bool {
        self.a1 > self.a2
    }

    /// `a1/a2`, equal to `h_w / h_lb(k_a)`.
    pub fn ratio(&self) -> f64 {
        self.a1 / self.a2
    }

    /// Vertices (counter-clockwise, `(k_p, k_v)`) of `S1 ∩ S2` clipped to a
    /// box. Empty when the clipped set has no area.
    pub fn polygon(&self, bounds: &GridBox) -> Vec<(f64, f64)> {
        let kp_lo = bounds.kp.0.max(0.0);
        let kv_lo = bounds.kv.0.max(0.0);
        let mut poly = vec![
            (kp_lo, kv_lo),
            (bounds.kp.1, kv_lo),
            (bounds.kp.1, bounds.kv.1),
            (kp_lo, bounds.kv.1),
        ];
        // S1 as  1 − k_v/a1 − k_p/b1 ≥ 0,  S2 as  k_v/a2 + k_p/b2 − 1 ≥ 0
        let (a1, b1, a2, b2) = (self.a1, self.b1, self.a2, self.b2);
        poly = clip(&poly, |(kp, kv)| 1.0 - kv / a1 - kp / b1);
        poly = clip(&poly, |(kp, kv)| kv / a2 + kp / b2 - 1.0);
        if polygon_area(&poly).abs() <= f64::EPSILON * bounds.area().max(1e-300) {
            Vec::new()
        } else {
            poly
        }
    }

    /// Centroid of `S1 ∩ S2`; a strictly interior gain pair when the region
    /// is nonempty.
    pub fn interior_point(&self) -> Option<(f64, f64)> {
        if !self.is_nonempty() {
            return None;
        }
        let poly = self.polygon(&GridBox {
            kp: (0.0, self.b1),
            kv: (0.0, self.a1),
        });
        polygon_centroid(&poly)
    }
}

/// Sutherland–Hodgman clip of a convex polygon against `g(p) ≥ 0`, where `g`
/// is affine.
fn clip(poly: &[(f64, f64)], g: impl Fn((f64, f64)) -> f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    for (idx, &p) in poly.iter().enumerate() {
        let q = poly[(idx + 1) % poly.len()];
        let (gp, gq) = (g(p), g(q));
        if gp >= 0.0 {
            out.push(p);
        }
        if (gp >= 0.0) != (gq >= 0.0) {
            let t = gp / (gp - gq);
            out.push((p.0 + t * (q.0 - p.0), p.1 + t * (q.1 - p.1)));
        }
    }
    out
}

fn polygon_area(poly: &[(f64, f64)]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut twice = 0.0;
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice / 2.0
}

fn polygon_centroid(poly: &[(f64, f64)]) -> Option<(f64, f64)> {
    let area = polygon_area(poly);
    if area.abs() == 0.0 {
        return None;
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..poly.len() {
        let (x0, y0) = poly[i];
        let (x1, y1) = poly[(i + 1) % poly.len()];
        let cross = x0 * y1 - x1 * y0;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
    }
    Some((cx / (6.0 * area), cy / (6.0 * area)))
}

/// Rectangular `(k_p, k_v)` window for grid export and polygon clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridBox {
    pub kp: (f64, f64),
    pub kv: (f64, f64),
}

impl GridBox {
    fn area(&self) -> f64 {
        (self.kp.1 - self.kp.0) * (self.kv.1 - self.kv.0)
    }
}

/// One grid point of the region export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionSample {
    pub kp: f64,
    pub kv: f64,
    pub in_s1: bool,
    pub in_s2: bool,
}

impl RegionSample {
    pub fn in_s(&self) -> bool {
        self.in_s1 && self.in_s2
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    })
}

impl RegionParams {
    /// Membership flags over an `n_kp × n_kv` grid (row-major in `k_p`).
    pub fn grid(&self, bounds: &GridBox, n_kp: usize, n_kv: usize) -> Vec<RegionSample> {
        let mut out = Vec::with_capacity(n_kp * n_kv);
        for kp in linspace(bounds.kp.0, bounds.kp.1, n_kp) {
            for kv in linspace(bounds.kv.0, bounds.kv.1, n_kv) {
                out.push(RegionSample {
                    kp,
                    kv,
                    in_s1: self.in_s1(kp, kv),
                    in_s2: self.in_s2(kp, kv),
                });
            }
        }
        out
    }
}

pub fn feasible_region(ka: f64, snr: Snr, tau0: f64, hw: f64) -> Result<RegionParams> {
    check_ka(ka, snr)?;
    positive("tau0", tau0)?;
    positive("h_w", hw)?;
    let (m, n) = coefficients(snr);
    let a1 = (1.0 - n * ka * ka) / (2.0 * tau0);
    let a2 = (1.0 - m * ka) / hw;
    Ok(RegionParams {
        a1,
        b1: a1 / hw,
        a2,
        b2: 2.0 * a2 / hw,
    })
}

/// Routh–Hurwitz on `τ s³ + s² + γ s + k_p`: with all coefficients positive
/// the cubic is Hurwitz iff `γ > τ k_p`.
pub fn internal_stability(tau: f64, gamma: f64, kp: f64) -> Result<bool> {
    positive("tau", tau)?;
    positive("gamma", gamma)?;
    positive("k_p", kp)?;
    Ok(gamma > tau * kp)
}

/// Position of a headway relative to the strict bound `h_w > h_lb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadwayStatus {
    Above,
    /// Equal to the bound up to rounding; not certified.
    Marginal,
    Below,
}

pub fn classify_headway(hw: f64, hw_lb: f64) -> HeadwayStatus {
    let slack = hw - hw_lb;
    if slack.abs() <= 1e-12 * hw_lb.abs().max(1.0) {
        HeadwayStatus::Marginal
    } else if slack > 0.0 {
        HeadwayStatus::Above
    } else {
        HeadwayStatus::Below
    }
}

/// Everything the synthesis step can say for a given SNR and lag bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisResult {
    pub rho: f64,
    pub tau0: f64,
    pub ka_max: f64,
    /// Present when a feedforward gain was supplied.
    pub ka: Option<f64>,
    pub hw_lb: Option<f64>,
    pub optimal: OptimalDesign,
    /// Present when both `k_a` and `h_w` were supplied.
    pub hw: Option<f64>,
    pub region: Option<RegionParams>,
}

pub fn synthesize(
    snr: Snr,
    tau0: f64,
    ka: Option<f64>,
    hw: Option<f64>,
) -> Result<SynthesisResult> {
    positive("tau0", tau0)?;
    let hw_lb = ka
        .map(|ka| headway_lower_bound(ka, snr, tau0))
        .transpose()?;
    let region = match (ka, hw) {
        (Some(ka), Some(hw)) => Some(feasible_region(ka, snr, tau0, hw)?),
        _ => None,
    };
    Ok(SynthesisResult {
        rho: snr.factor(),
        tau0,
        ka_max: ka_upper_bound(snr),
        ka,
        hw_lb,
        optimal: optimal_ka_headway(snr, tau0)?,
        hw,
        region,
    })
}
