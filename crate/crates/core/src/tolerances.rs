//! Numeric thresholds used by verdicts and checks.
//!
//! Everything that decides a pass/fail outcome reads its threshold from here.

/// Allowance on `‖δ_i‖∞ / ‖δ_{i-1}‖∞` before a time-domain run is called
/// string unstable. Covers integration error only.
pub const RATIO_TOLERANCE: f64 = 1e-6;

/// Absolute allowance on a sampled `‖H̃‖∞` before it counts as exceeding 1.
///
/// The reference design sits about 1.5e-3 inside the analytic boundary, so
/// this must stay several orders of magnitude below that.
pub const HINF_TOLERANCE: f64 = 1e-6;

/// Below this peak an upstream spacing error is treated as identically zero
/// and the amplification ratio is undefined.
pub const RATIO_FLOOR: f64 = 1e-12;

/// Any state component beyond this magnitude aborts a simulation.
pub const BLOWUP_LIMIT: f64 = 1e9;

/// Relative bracket width at which golden-section refinement stops.
pub const REFINE_REL_WIDTH: f64 = 1e-10;

/// Log-spaced frequency grid used before refinement.
pub const OMEGA_GRID_POINTS: usize = 2000;
pub const OMEGA_MIN: f64 = 1e-3;
pub const OMEGA_MAX: f64 = 1e3;

/// Number of lag values sampled in `(τ0/10, τ0]` by the robust verdict.
pub const TAU_SAMPLES: usize = 10;
