//! Sectioned run configuration (TOML syntax).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::AnalysisConfig;
use crate::emitter::EmitterParams;
use crate::error::{Error, Result};
use crate::event_mc::DetectionParams;
use crate::optics::InterferometerConfig;
use crate::protocol::ProtocolConfig;
use crate::rates::RateScenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputPaths {
    pub records: String,
    pub report: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self { records: "records.csv".into(), report: "report.txt".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub emitter: EmitterParams,
    pub interferometer: InterferometerConfig,
    pub protocol: ProtocolConfig,
    pub detection: DetectionParams,
    pub analysis: AnalysisConfig,
    pub rates: RateScenario,
    pub output: OutputPaths,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Per-section invariant checks, in file order.
    pub fn check_sections(&self) -> Vec<(&'static str, Result<()>)> {
        vec![
            ("emitter", self.emitter.validate()),
            ("interferometer", self.interferometer.validate()),
            ("protocol", crate::protocol::build_sequence(&self.protocol, &self.interferometer).map(|_| ())),
            ("detection", self.detection.validate()),
            ("analysis", self.analysis.validate()),
            ("rates", self.rates.validate()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (section, r) in self.check_sections() {
            r.map_err(|e| Error::Config(format!("[{section}] {e}")))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emitter::CrossExcitation;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
        assert_eq!(RunConfig::parse("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trip_is_idempotent() {
        let mut cfg = RunConfig { seed: 42, ..Default::default() };
        cfg.emitter.p_cross = CrossExcitation::Value(0.01);
        cfg.detection.background_rate_hz = 120.5;
        let text = cfg.to_toml();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.to_toml(), text);
        let default_text = RunConfig::default().to_toml();
        assert!(default_text.contains("p_cross = \"auto\""));
        assert_eq!(RunConfig::parse(&default_text).unwrap(), RunConfig::default());
    }

    #[test]
    fn unknown_key_is_named_with_line() {
        let err = RunConfig::parse("seed = 1\n[interferometer]\ndelay_ns = 262.0\nsplit_ration = 0.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("split_ration"), "{msg}");
        assert!(msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn invariant_violation_names_section() {
        let cfg = RunConfig::parse("[interferometer]\nsplit_ratio = 1.5\n").unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("[interferometer]") && err.contains("split_ratio"), "{err}");
    }
}
