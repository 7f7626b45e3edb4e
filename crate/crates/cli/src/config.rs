//! TOML run configuration.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use platoon_core::noise::{ChannelSpec, Snr, REFERENCE_BIT_PROBS};
use platoon_core::platoon::{GainSet, PlatoonConfig};
use platoon_core::synthesis::{
    feasible_region, headway_lower_bound, ka_upper_bound, optimal_ka_headway,
};
use platoon_core::SimMode;
use serde::{Deserialize, Serialize};

/// Headway used when none is given: this factor above the robust bound.
pub const DEFAULT_HEADWAY_MARGIN: f64 = 1.01;
/// Feedforward gain used without noise, where the optimum is not attained.
pub const NOISELESS_DEFAULT_KA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub platoon: PlatoonConfig,
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub gains: GainsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub mode: SimMode,
    pub seed: u64,
    pub runs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            mode: SimMode::Averaged,
            seed: 0,
            runs: 500,
            out_dir: None,
        }
    }
}

/// Either `rho` or `snr_db`; `rho = inf` selects the noiseless channel.
/// Without `bit_probs` the 16-bit reference list is used.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
    /// Optional bit count, checked against the length of `bit_probs`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bit_probs: Option<Vec<f64>>,
}

impl ChannelSection {
    pub fn snr(&self) -> Result<Snr> {
        Ok(match (self.rho, self.snr_db) {
            (Some(_), Some(_)) => bail!("give either channel.rho or channel.snr_db, not both"),
            (Some(rho), None) => Snr::from_factor(rho)?,
            (None, Some(db)) => Snr::from_db(db)?,
            (None, None) => Snr::Factor(5.0),
        })
    }

    pub fn spec(&self) -> Result<ChannelSpec> {
        let snr = self.snr()?;
        if snr == Snr::Noiseless {
            return Ok(ChannelSpec::noiseless());
        }
        let probs = self
            .bit_probs
            .clone()
            .unwrap_or_else(|| REFERENCE_BIT_PROBS.to_vec());
        if let Some(n) = self.bits {
            if n != probs.len() {
                bail!(
                    "channel.bits = {n} but {} bit expectations were given",
                    probs.len()
                );
            }
        }
        Ok(ChannelSpec::new(snr, probs)?)
    }
}

/// Any subset of the gains; the rest is synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GainsSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ka: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kv: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hw: Option<f64>,
}

/// Final gains plus a note for every value that was filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedGains {
    pub gains: GainSet,
    pub notes: Vec<String>,
}

impl GainsSection {
    /// Feedforward gain and headway: a missing `k_a` becomes the optimum (or
    /// 0.5 without noise), a missing `h_w` sits 1% above the robust bound.
    pub fn resolve_ka_hw(
        &self,
        snr: Snr,
        tau0: f64,
        notes: &mut Vec<String>,
    ) -> Result<(f64, f64)> {
        let ka = match self.ka {
            Some(ka) => ka,
            None => {
                let opt = optimal_ka_headway(snr, tau0)?;
                let ka = if opt.attained {
                    opt.ka
                } else {
                    NOISELESS_DEFAULT_KA
                };
                notes.push(format!("k_a = {ka} (synthesized)"));
                ka
            }
        };
        let hw = match self.hw {
            Some(hw) => hw,
            None => {
                if ka >= ka_upper_bound(snr) {
                    bail!("cannot synthesize h_w: k_a = {ka} is outside the admissible range");
                }
                let hw = DEFAULT_HEADWAY_MARGIN * headway_lower_bound(ka, snr, tau0)?;
                notes.push(format!("h_w = {hw} (1% above the robust bound)"));
                hw
            }
        };
        Ok((ka, hw))
    }

    /// As [`Self::resolve_ka_hw`]; a missing `(k_p, k_v)` pair becomes the
    /// centroid of the feasible region.
    pub fn resolve(&self, snr: Snr, tau0: f64) -> Result<ResolvedGains> {
        let mut notes = Vec::new();
        let (ka, hw) = self.resolve_ka_hw(snr, tau0, &mut notes)?;
        let (kp, kv) = match (self.kp, self.kv) {
            (Some(kp), Some(kv)) => (kp, kv),
            (None, None) => {
                let region =
                    feasible_region(ka, snr, tau0, hw).context("cannot synthesize k_p, k_v")?;
                let (kp, kv) = region.interior_point().with_context(|| {
                    format!("feasible region is empty at h_w = {hw}; give --kp and --kv explicitly")
                })?;
                notes.push(format!("(k_p, k_v) = ({kp}, {kv}) (region centroid)"));
                (kp, kv)
            }
            _ => bail!("give both k_p and k_v, or neither"),
        };
        Ok(ResolvedGains {
            gains: GainSet::new(ka, kv, kp, hw)?,
            notes,
        })
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()?).with_context(|| format!("writing {}", path.display()))
    }

    /// Re-checks every invariant that the individual types enforce.
    pub fn validate(&self) -> Result<()> {
        self.platoon.validate()?;
        self.channel.spec()?;
        if self.run.seed > i64::MAX as u64 {
            bail!("run.seed must fit in a signed 64-bit integer");
        }
        let g = self.gains;
        for (name, v) in [("ka", g.ka), ("kv", g.kv), ("kp", g.kp), ("hw", g.hw)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    bail!("gains.{name} must be positive, got {v}");
                }
            }
        }
        Ok(())
    }

    pub fn snr(&self) -> Result<Snr> {
        self.channel.snr()
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        self.channel.spec()
    }

    pub fn resolve_gains(&self) -> Result<ResolvedGains> {
        self.gains.resolve(self.snr()?, self.platoon.tau0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_reference_setup() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.channel_spec().unwrap(), ChannelSpec::reference());
    }

    #[test]
    fn infinite_rho_is_noiseless() {
        let cfg = RunConfig::from_toml("[channel]\nrho = inf\n").unwrap();
        assert_eq!(cfg.snr().unwrap(), Snr::Noiseless);
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn bit_count_mismatch_rejected() {
        let err = RunConfig::from_toml("[channel]\nbits = 3\nbit_probs = [0.5, 0.5]\n");
        assert!(err.is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("[platoon]\nfolowers = 3\n").is_err());
    }

    #[test]
    fn tau_above_bound_rejected() {
        assert!(RunConfig::from_toml("[platoon]\ntau = 0.6\ntau0 = 0.5\n").is_err());
    }

    #[test]
    fn partial_gains_resolve() {
        let g = GainsSection::default()
            .resolve(Snr::Factor(5.0), 0.5)
            .unwrap();
        assert!((g.gains.ka - 0.318_305_009_375_087_6).abs() < 1e-15);
        assert!((g.gains.hw - 1.01 * 0.872_677_996_249_965).abs() < 1e-12);
        let region = feasible_region(g.gains.ka, Snr::Factor(5.0), 0.5, g.gains.hw).unwrap();
        assert!(region.contains(g.gains.kp, g.gains.kv));
        assert_eq!(g.notes.len(), 3);

        let half = GainsSection {
            kp: Some(0.01),
            ..GainsSection::default()
        };
        assert!(half.resolve(Snr::Factor(5.0), 0.5).is_err());
    }

    #[test]
    fn empty_region_needs_explicit_gains() {
        let g = GainsSection {
            ka: Some(0.5),
            hw: Some(0.65),
            ..GainsSection::default()
        };
        assert!(g.resolve(Snr::Factor(5.0), 0.5).is_err());
    }
}
