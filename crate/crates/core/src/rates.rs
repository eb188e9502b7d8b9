//! Generation rates of multi-photon strings.

use serde::{Deserialize, Serialize};

use crate::emitter::EmitterParams;
use crate::error::{Error, Result};
use crate::event_mc::DetectionParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateScenario {
    /// per-photon success probability η
    pub system_efficiency: f64,
    pub sequence_duration_s: f64,
    /// largest string length in the rates table
    pub n_max: usize,
    /// ZPL emission enhancement factor (1 = none)
    pub purcell_factor: f64,
    pub active_switch: bool,
    /// replaces `sequence_duration_s` when set (> 0)
    pub single_shot_readout_s: f64,
}

impl Default for RateScenario {
    fn default() -> Self {
        Self {
            system_efficiency: 0.4,
            sequence_duration_s: 10e-6,
            n_max: 10,
            purcell_factor: 1.0,
            active_switch: false,
            single_shot_readout_s: 0.0,
        }
    }
}

impl RateScenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, reason: &str| Err(Error::InvalidParameter { name: name.into(), reason: reason.into() });
        if !(self.system_efficiency > 0.0 && self.system_efficiency <= 1.0) {
            return bad("system_efficiency", "must be in (0, 1]");
        }
        if !(self.sequence_duration_s > 0.0) {
            return bad("sequence_duration_s", "must be positive");
        }
        if self.n_max == 0 {
            return bad("n_max", "must be >= 1");
        }
        if !(self.purcell_factor > 0.0) {
            return bad("purcell_factor", "must be positive");
        }
        if !(self.single_shot_readout_s >= 0.0) {
            return bad("single_shot_readout_s", "must be >= 0");
        }
        Ok(())
    }

    pub fn duration_s(&self) -> f64 {
        if self.single_shot_readout_s > 0.0 {
            self.single_shot_readout_s
        } else {
            self.sequence_duration_s
        }
    }

    /// `η` after applying the switch factor to the base efficiency, capped at 1.
    /// The Purcell factor enters through [`effective_efficiency`] only.
    pub fn efficiency(&self) -> f64 {
        (self.system_efficiency * if self.active_switch { 2.0 } else { 1.0 }).min(1.0)
    }

    /// `(n, rate)` rows for n = 1..=n_max.
    pub fn table(&self) -> Vec<(usize, f64)> {
        (1..=self.n_max).map(|n| (n, chain_rate(self.efficiency(), self.duration_s(), n))).collect()
    }
}

/// `ηⁿ / T`.
pub fn chain_rate(efficiency: f64, duration_s: f64, n: usize) -> f64 {
    efficiency.powi(n as i32) / duration_s
}

/// ZPL branching ratio of a transition with Debye-Waller factor `dw` whose ZPL
/// emission is enhanced by `factor`: `F·DW / (1 + (F − 1)·DW)`.
pub fn purcell_branching(dw: f64, factor: f64) -> f64 {
    factor * dw / (1.0 + (factor - 1.0) * dw)
}

/// Per-photon efficiency: per-excitation ZPL detection, scaled by the
/// enhanced ZPL branching ratio, then by 2 for the active switch; capped at 1.
pub fn effective_efficiency(emitter: &EmitterParams, detection: &DetectionParams, purcell_factor: f64, active_switch: bool) -> f64 {
    let per_zpl_photon = detection.zpl_efficiency / emitter.zpl_fraction;
    let branching = purcell_branching(emitter.zpl_fraction, purcell_factor);
    let switch = if active_switch { 2.0 } else { 1.0 };
    (per_zpl_photon * branching * switch).min(1.0)
}
