//! Headway selection, gain synthesis and string-stability analysis for
//! predecessor-follower CACC platoons whose V2V acceleration link carries
//! multiplicative noise.
//!
//! * [`noise`]: the `n`-bit noise factor, its expectation and SNR conversions.
//! * [`synthesis`]: admissible `k_a`, the robust headway bound, its minimiser
//!   and the feasible `(k_p, k_v)` region.
//! * [`stability`]: the spacing-error transfer function, sampled `H∞` norms
//!   and robust verdicts.
//! * [`sim`]: RK4 simulation in stochastic, averaged and noiseless modes,
//!   plus a Monte-Carlo harness.
//! * [`trajectory`]: spacing errors, platoon length and amplification ratios.

pub mod error;
pub mod export;
pub mod noise;
pub mod platoon;
pub mod sim;
pub mod stability;
pub mod synthesis;
pub mod tolerances;
pub mod trajectory;

pub use error::{PlatoonError, Result};
pub use noise::{ChannelSpec, Snr};
pub use platoon::{GainSet, PlatoonConfig, VehicleState};
pub use sim::{simulate, LeadProfile, SimMode};
pub use stability::{robust_verdict, Classification, StabilityVerdict};
pub use trajectory::Trajectory;
