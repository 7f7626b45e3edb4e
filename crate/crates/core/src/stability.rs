//! Spacing-error propagation `H̃(s; τ) = Ñ(s)/D(s)` and robust string-stability
//! verdicts.
//!
//! ```text
//! Ñ(s) = k̃_a s² + k_v s + k_p
//! D(s) = τ s³ + s² + γ s + k_p,   γ = k_v + h_w k_p
//! ```
//!
//! `|D(jω)|² − |Ñ(jω)|² = ω² q(ω²)` with
//! `q = τ² ω⁴ + (1 − k̃_a² − 2τγ) ω² + (γ² − 2k_p − k_v² + 2k̃_a k_p)`, so the
//! norm stays at or below one whenever `q ≥ 0`. Requiring both non-constant
//! coefficients of `q` to be non-negative, worst-cased over `τ ≤ τ0` and over
//! the interval of `k̃_a`, gives the analytic certificate in
//! [`quartic_conditions`]; the sampled sup-norm is an independent cross-check.

use serde::{Deserialize, Serialize};

use crate::error::{positive, PlatoonError, Result};
use crate::noise::{effective_gain, ka_interval, ChannelSpec};
use crate::platoon::GainSet;
use crate::synthesis::{
    classify_headway, headway_lower_bound, internal_stability, ka_upper_bound, HeadwayStatus,
};
use crate::tolerances::{
    HINF_TOLERANCE, OMEGA_GRID_POINTS, OMEGA_MAX, OMEGA_MIN, REFINE_REL_WIDTH, TAU_SAMPLES,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorPropagationTF {
    pub ka_eff: f64,
    pub kv: f64,
    pub kp: f64,
    pub tau: f64,
    pub gamma: f64,
}

pub fn build_tf(gains: &GainSet, ka_eff: f64, tau: f64) -> Result<ErrorPropagationTF> {
    gains.validate()?;
    positive("k_a_eff", ka_eff)?;
    positive("tau", tau)?;
    Ok(ErrorPropagationTF {
        ka_eff,
        kv: gains.kv,
        kp: gains.kp,
        tau,
        gamma: gains.gamma(),
    })
}

impl ErrorPropagationTF {
    /// `[k̃_a, k_v, k_p]`, highest power first.
    pub fn numerator(&self) -> [f64; 3] {
        [self.ka_eff, self.kv, self.kp]
    }

    /// `[τ, 1, γ, k_p]`, highest power first.
    pub fn denominator(&self) -> [f64; 4] {
        [self.tau, 1.0, self.gamma, self.kp]
    }

    /// `N(0) / D(0)`.
    pub fn dc_gain(&self) -> f64 {
        self.numerator()[2] / self.denominator()[3]
    }

    fn squared_parts(&self, omega: f64) -> (f64, f64) {
        let w2 = omega * omega;
        let n_re = self.kp - self.ka_eff * w2;
        let n_im = self.kv * omega;
        let d_re = self.kp - w2;
        let d_im = omega * (self.gamma - self.tau * w2);
        (n_re * n_re + n_im * n_im, d_re * d_re + d_im * d_im)
    }

    /// `|H̃(jω)|`.
    pub fn magnitude(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(PlatoonError::InvalidParameter {
                name: "omega",
                value: omega,
                reason: "frequency must be non-negative",
            });
        }
        let (num, den) = self.squared_parts(omega);
        if den == 0.0 || !den.is_finite() {
            return Err(PlatoonError::AnalysisFailure(format!(
                "D(jω) vanishes at ω = {omega}"
            )));
        }
        Ok((num / den).sqrt())
    }

    /// Coefficients `(τ², 1 − k̃_a² − 2τγ, γ² − 2k_p − k_v² + 2k̃_a k_p)` of
    /// `q(ω²)`.
    pub fn quartic_coefficients(&self) -> (f64, f64, f64) {
        (
            self.tau * self.tau,
            1.0 - self.ka_eff * self.ka_eff - 2.0 * self.tau * self.gamma,
            self.gamma * self.gamma - 2.0 * self.kp - self.kv * self.kv
                + 2.0 * self.ka_eff * self.kp,
        )
    }

    pub fn is_internally_stable(&self) -> bool {
        self.gamma > self.tau * self.kp
    }
}

/// Sweep settings for [`hinf_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Relative bracket width at which refinement stops.
    pub rel_width: f64,
    /// How many decade extensions are tried when the max sits on an edge.
    pub max_extensions: usize,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        Self {
            min: OMEGA_MIN,
            max: OMEGA_MAX,
            points: OMEGA_GRID_POINTS,
            rel_width: REFINE_REL_WIDTH,
            max_extensions: 6,
        }
    }
}

pub fn log_grid(min: f64, max: f64, points: usize) -> Vec<f64> {
    let (lo, hi) = (min.ln(), max.ln());
    (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HinfNorm {
    pub value: f64,
    /// Frequency of the maximum; `0` when the DC gain is the supremum.
    pub omega: f64,
    /// Set when the grid max sat on an edge and the range had to grow.
    pub edge_extended: bool,
}

/// Supremum of `|H̃(jω)|` over `ω ≥ 0`: log grid, then golden-section
/// refinement around the best grid point.
pub fn hinf_norm(tf: &ErrorPropagationTF, grid: &OmegaGrid) -> Result<HinfNorm> {
    if grid.points < 3 || !(grid.min > 0.0 && grid.max > grid.min) {
        return Err(PlatoonError::AnalysisFailure(
            "degenerate frequency grid".into(),
        ));
    }
    let dc = tf.magnitude(0.0)?;
    let (mut lo, mut hi) = (grid.min, grid.max);
    let mut extended = false;
    for attempt in 0..=grid.max_extensions {
        let omegas = log_grid(lo, hi, grid.points);
        let mags = omegas
            .iter()
            .map(|&w| tf.magnitude(w))
            .collect::<Result<Vec<_>>>()?;
        let (idx, &best) = mags
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty grid");

        let at_top = idx == omegas.len() - 1;
        let at_bottom = idx == 0 && best > dc;
        if (at_top || at_bottom) && attempt < grid.max_extensions {
            extended = true;
            if at_top {
                hi *= 10.0;
            } else {
                lo /= 10.0;
            }
            continue;
        }
        if best <= dc {
            return Ok(HinfNorm {
                value: dc,
                omega: 0.0,
                edge_extended: extended,
            });
        }
        let left = omegas[idx.saturating_sub(1)];
        let right = omegas[(idx + 1).min(omegas.len() - 1)];
        let (w_ref, m_ref) = golden_max(tf, left, right, grid.rel_width)?;
        let (value, omega) = if m_ref >= best {
            (m_ref, w_ref)
        } else {
            (best, omegas[idx])
        };
        return Ok(HinfNorm {
            value,
            omega,
            edge_extended: extended,
        });
    }
    unreachable!("loop returns on its final attempt")
}

fn golden_max(tf: &ErrorPropagationTF, left: f64, right: f64, rel: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut a, mut b) = (left.ln(), right.ln());
    let f = |x: f64| tf.magnitude(x.exp());
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    // bracket width in ln ω approximates relative width in ω
    while b - a > rel {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let x = 0.5 * (a + b);
    Ok((x.exp(), f(x)?))
}

/// `(ω, |H̃(jω)|)` over a log grid, for plotting.
pub fn frequency_response(tf: &ErrorPropagationTF, omegas: &[f64]) -> Result<Vec<(f64, f64)>> {
    omegas.iter().map(|&w| Ok((w, tf.magnitude(w)?))).collect()
}

/// Margins of the two sufficient conditions, worst-cased over `τ ≤ τ0` and
/// `k̃_a ∈ [lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuarticConditions {
    /// `(1 − k̃_max²)/(2τ0) − γ`; non-negative ⇔ `1 − k̃_a² − 2τγ ≥ 0` everywhere.
    pub a_margin: f64,
    /// `γ² − 2k_p(1 − k̃_min) − k_v²`.
    pub b_margin: f64,
}

impl QuarticConditions {
    pub fn passes(&self) -> bool {
        self.a_margin >= 0.0 && self.b_margin >= 0.0
    }
}

pub fn quartic_conditions(interval: (f64, f64), tau0: f64, gains: &GainSet) -> QuarticConditions {
    let (lo, hi) = interval;
    let gamma = gains.gamma();
    QuarticConditions {
        a_margin: (1.0 - hi * hi) / (2.0 * tau0) - gamma,
        b_margin: gamma * gamma - 2.0 * gains.kp * (1.0 - lo) - gains.kv * gains.kv,
    }
}

/// Which value of `k̃_a` a sampled norm was computed at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainPoint {
    /// `(1 − 1/ρ) k_a`
    Lower,
    /// `k_a w̄`
    Mean,
    /// `(1 + 1/ρ) k_a`
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledNorm {
    pub tau: f64,
    pub point: GainPoint,
    pub ka_eff: f64,
    /// `+∞` when `D(jω)` hit zero during the sweep.
    pub hinf: f64,
    pub omega: f64,
    pub edge_extended: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Analytic conditions hold: `‖H̃‖∞ ≤ 1` for every `τ ∈ (0, τ0]` and `k̃_a ∈ I`.
    Certified,
    /// Sufficient conditions fail but no sampled norm exceeds one.
    Uncertified,
    /// Internally unstable or some sampled norm exceeds one.
    Unstable,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Certified => "certified",
            Classification::Uncertified => "uncertified",
            Classification::Unstable => "unstable",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub internally_stable: bool,
    /// `k_a < 1/(1 + 1/ρ)`, i.e. every `k̃_a ∈ I` stays below one.
    pub ka_admissible: bool,
    pub hw_lb: Option<f64>,
    pub headway: Option<HeadwayStatus>,
    pub analytic: QuarticConditions,
    pub samples: Vec<SampledNorm>,
    pub worst: SampledNorm,
    pub classification: Classification,
}

/// `TAU_SAMPLES` log-spaced lags in `(τ0/10, τ0]`, largest first.
pub fn tau_samples(tau0: f64) -> Vec<f64> {
    (0..TAU_SAMPLES)
        .map(|k| tau0 * 10f64.powf(-(k as f64) / TAU_SAMPLES as f64))
        .collect()
}

pub fn robust_verdict(spec: &ChannelSpec, tau0: f64, gains: &GainSet) -> Result<StabilityVerdict> {
    spec.validate()?;
    gains.validate()?;
    positive("tau0", tau0)?;

    let internally_stable = internal_stability(tau0, gains.gamma(), gains.kp)?;
    let ka_admissible = gains.ka < ka_upper_bound(spec.snr);
    let hw_lb = headway_lower_bound(gains.ka, spec.snr, tau0).ok();
    let headway = hw_lb.map(|lb| classify_headway(gains.hw, lb));
    let interval = ka_interval(gains.ka, spec.snr);
    let analytic = quartic_conditions(interval, tau0, gains);
    let eff = effective_gain(gains.ka, spec)?;

    let points = [
        (GainPoint::Lower, eff.lower),
        (GainPoint::Mean, eff.nominal),
        (GainPoint::Upper, eff.upper),
    ];
    let grid = OmegaGrid::default();
    let mut samples = Vec::with_capacity(TAU_SAMPLES * points.len());
    for tau in tau_samples(tau0) {
        for &(point, ka_eff) in &points {
            let tf = build_tf(gains, ka_eff, tau)?;
            let (hinf, omega, edge_extended) = match hinf_norm(&tf, &grid) {
                Ok(n) => (n.value, n.omega, n.edge_extended),
                Err(PlatoonError::AnalysisFailure(_)) => (f64::INFINITY, f64::NAN, false),
                Err(e) => return Err(e),
            };
            samples.push(SampledNorm {
                tau,
                point,
                ka_eff,
                hinf,
                omega,
                edge_extended,
            });
        }
    }
    let worst = *samples
        .iter()
        .max_by(|a, b| a.hinf.total_cmp(&b.hinf))
        .expect("at least one sample");

    let classification = if !internally_stable || worst.hinf > 1.0 + HINF_TOLERANCE {
        Classification::Unstable
    } else if analytic.passes() && ka_admissible {
        Classification::Certified
    } else {
        Classification::Uncertified
    };

    Ok(StabilityVerdict {
        internally_stable,
        ka_admissible,
        hw_lb,
        headway,
        analytic,
        samples,
        worst,
        classification,
    })
}

/// Noiseless convenience: `k̃_a = k_a`.
pub fn nominal_tf(gains: &GainSet, tau: f64) -> Result<ErrorPropagationTF> {
    build_tf(gains, gains.ka, tau)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(hw: f64) -> GainSet {
        GainSet::new(0.5, 0.63, 0.009, hw).unwrap()
    }

    #[test]
    fn coefficients_assembled() {
        let tf = build_tf(&reference(0.95), 0.6, 0.5).unwrap();
        assert_eq!(tf.numerator(), [0.6, 0.63, 0.009]);
        let d = tf.denominator();
        assert_eq!(d[0], 0.5);
        assert_eq!(d[1], 1.0);
        assert!((d[2] - 0.63855).abs() < 1e-15);
        assert_eq!(d[3], 0.009);
        assert_eq!(tf.dc_gain(), 1.0);
        assert!(build_tf(&reference(0.95), 0.0, 0.5).is_err());
        assert!(build_tf(&reference(0.95), 0.5, -0.1).is_err());
    }

    #[test]
    fn magnitude_limits() {
        let tf = build_tf(&reference(0.95), 0.52, 0.5).unwrap();
        assert_eq!(tf.magnitude(0.0).unwrap(), 1.0);
        let w = 1e5;
        let m = tf.magnitude(w).unwrap();
        assert!((m * 0.5 * w / 0.52 - 1.0).abs() < 1e-3);
        assert!(tf.magnitude(-1.0).is_err());
    }

    #[test]
    fn zero_denominator_is_reported() {
        // γ = τ k_p puts a pole pair on the imaginary axis at ω² = k_p/τ
        let tf = ErrorPropagationTF {
            ka_eff: 0.5,
            kv: 0.5,
            kp: 1.0,
            tau: 1.0,
            gamma: 1.0,
        };
        assert!(matches!(
            tf.magnitude(1.0),
            Err(PlatoonError::AnalysisFailure(_))
        ));
    }

    #[test]
    fn quartic_identity_matches_magnitude() {
        let tf = build_tf(&reference(0.65), 0.524, 0.5).unwrap();
        let (c4, c2, c0) = tf.quartic_coefficients();
        for &w in &[0.01, 0.05, 0.1, 0.7, 3.0] {
            let (n, d) = tf.squared_parts(w);
            let w2 = w * w;
            let q = w2 * (c4 * w2 * w2 + c2 * w2 + c0);
            assert!(((d - n) - q).abs() < 1e-13 * d.max(1.0), "ω = {w}");
        }
    }

    #[test]
    fn dc_dominant_norm_is_one_at_zero() {
        let g = GainSet::new(0.05, 0.05, 0.001, 20.0).unwrap();
        let tf = build_tf(&g, 0.05, 0.5).unwrap();
        let n = hinf_norm(&tf, &OmegaGrid::default()).unwrap();
        assert_eq!(n.value, 1.0);
        assert_eq!(n.omega, 0.0);
    }

    #[test]
    fn reference_norms() {
        let stable = build_tf(&reference(0.95), 0.524_086_843_872_070_3, 0.5).unwrap();
        let n = hinf_norm(&stable, &OmegaGrid::default()).unwrap();
        assert!(n.value <= 1.0 + 1e-6);

        // frozen from an independent dense-grid + bounded-scalar search
        let unstable = build_tf(&reference(0.65), 0.524_086_843_872_070_3, 0.5).unwrap();
        let n = hinf_norm(&unstable, &OmegaGrid::default()).unwrap();
        assert!((n.value - 1.001_163_717_769).abs() < 1e-9, "{}", n.value);
        assert!((n.omega - 0.037_939).abs() < 1e-4);
        let lower = build_tf(&reference(0.65), 0.4, 0.5).unwrap();
        let n = hinf_norm(&lower, &OmegaGrid::default()).unwrap();
        assert!((n.value - 1.003_499_916_730).abs() < 1e-9, "{}", n.value);
    }

    #[test]
    fn edge_maximum_triggers_extension() {
        // the h_w = 0.65 peak near 0.038 rad/s lies above this grid
        let tf = build_tf(&reference(0.65), 0.524_086_843_872_070_3, 0.5).unwrap();
        let grid = OmegaGrid {
            min: 1e-3,
            max: 1e-2,
            points: 50,
            ..OmegaGrid::default()
        };
        let n = hinf_norm(&tf, &grid).unwrap();
        assert!(n.edge_extended);
        assert!((n.value - 1.001_163_717_769).abs() < 1e-9);
    }

    #[test]
    fn refinement_converges() {
        let tf = build_tf(&reference(0.65), 0.45, 0.5).unwrap();
        let coarse = hinf_norm(&tf, &OmegaGrid::default()).unwrap();
        let fine = hinf_norm(
            &tf,
            &OmegaGrid {
                rel_width: REFINE_REL_WIDTH / 2.0,
                ..OmegaGrid::default()
            },
        )
        .unwrap();
        assert!((coarse.value - fine.value).abs() < REFINE_REL_WIDTH);
    }

    #[test]
    fn quartic_reference_margins() {
        let q = quartic_conditions((0.4, 0.6), 0.5, &reference(0.95));
        assert!((q.a_margin - 0.00145).abs() < 1e-12);
        assert!((q.b_margin - 4.61025e-5).abs() < 1e-12);
        assert!(q.passes());
    }

    #[test]
    fn quartic_a_fails_above_gamma_max() {
        // γ a hair above (1 − 0.36)/(2·0.5) = 0.64
        let g = GainSet::new(0.5, 0.64 - 0.95 * 0.009 + 1e-6, 0.009, 0.95).unwrap();
        let q = quartic_conditions((0.4, 0.6), 0.5, &g);
        assert!(q.a_margin < 0.0 && !q.passes());
    }

    #[test]
    fn quartic_b_equality_in_small_kp_limit() {
        let kp = 1e-300;
        let g = GainSet::new(0.5, 0.6, kp, 0.95).unwrap();
        let q = quartic_conditions((0.4, 0.6), 0.5, &g);
        assert!(q.b_margin.abs() < 1e-15);
    }

    #[test]
    fn verdicts_for_reference_cases() {
        let spec = ChannelSpec::reference();
        let v = robust_verdict(&spec, 0.5, &reference(0.95)).unwrap();
        assert_eq!(v.classification, Classification::Certified);
        assert_eq!(v.samples.len(), 30);
        assert_eq!(v.headway, Some(HeadwayStatus::Above));

        let v = robust_verdict(&spec, 0.5, &reference(0.65)).unwrap();
        assert_eq!(v.classification, Classification::Unstable);
        assert_eq!(v.headway, Some(HeadwayStatus::Below));
        assert!(v.worst.hinf > 1.0);

        let opt = crate::synthesis::optimal_ka_headway(spec.snr, 0.5).unwrap();
        let g = GainSet::new(opt.ka, 0.85, 0.003, 0.88).unwrap();
        let v = robust_verdict(&spec, 0.5, &g).unwrap();
        assert_eq!(v.classification, Classification::Certified);
    }

    #[test]
    fn inadmissible_ka_is_never_certified() {
        let spec = ChannelSpec::reference();
        let g = GainSet::new(0.9, 0.1, 0.001, 3.0).unwrap();
        let v = robust_verdict(&spec, 0.5, &g).unwrap();
        assert!(!v.ka_admissible);
        assert_ne!(v.classification, Classification::Certified);
        assert!(v.hw_lb.is_none());
    }

    #[test]
    fn tau_sampling_range() {
        let taus = tau_samples(0.5);
        assert_eq!(taus.len(), 10);
        assert_eq!(taus[0], 0.5);
        assert!(taus.iter().all(|&t| t > 0.05 && t <= 0.5));
    }
}
