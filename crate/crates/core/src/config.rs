//! Analysis configuration.
//!
//! Config files are TOML with dotted keys, e.g.
//!
//! ```toml
//! recession_rule = "negative"
//! hp.lambda = 1600.0
//! modes = ["backward"]
//! ```
//!
//! Every key has a default.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{Effects, ExpectationMode};
use crate::error::{Error, Result};
use crate::estimators::WhiteFlavor;
use crate::hp::{ravn_uhlig_lambda, NairuSource};
use crate::transform::RecessionRule;
use crate::unit_root::DEFAULT_MAX_LAG;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::Config(format!("unknown output format `{other}`"))),
        }
    }
}

/// Log-shift constants; unset entries use `max(0, -min) + 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogShiftConfig {
    pub cpi: Option<f64>,
    pub unemployment: Option<f64>,
    /// Use one constant, the larger of the two, for both variables.
    pub uniform: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HpConfig {
    /// Explicit smoothing parameter; overrides the frequency rule.
    pub lambda: Option<f64>,
    pub exponent: f64,
    pub periods_per_year: u32,
    pub nairu_source: NairuSource,
}

impl Default for HpConfig {
    fn default() -> Self {
        Self {
            lambda: None,
            exponent: 2.0,
            periods_per_year: 4,
            nairu_source: NairuSource::Unemployment,
        }
    }
}

impl HpConfig {
    pub fn resolved_lambda(&self) -> Result<f64> {
        match self.lambda {
            Some(l) => Ok(l),
            None => ravn_uhlig_lambda(self.periods_per_year, self.exponent),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Not echoed into reports, so the same data gives the same report
    /// wherever it lives.
    #[serde(skip_serializing)]
    pub input: Option<PathBuf>,
    pub recession_rule: RecessionRule,
    pub log_shift: LogShiftConfig,
    pub hp: HpConfig,
    pub modes: Vec<ExpectationMode>,
    /// Estimators shown in the estimates section. All three are always
    /// fitted because the specification tests need them.
    pub effects: Vec<Effects>,
    /// Add period intercepts to the fixed-effects model.
    pub period_effects: bool,
    pub level: f64,
    pub format: OutputFormat,
    pub max_lag: usize,
    pub unit_root: bool,
    pub white: WhiteFlavor,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            input: None,
            recession_rule: RecessionRule::Nonpositive,
            log_shift: LogShiftConfig::default(),
            hp: HpConfig::default(),
            modes: vec![ExpectationMode::Backward, ExpectationMode::Forward],
            effects: vec![Effects::Pooled, Effects::Fixed, Effects::Random],
            period_effects: false,
            level: 0.05,
            format: OutputFormat::Text,
            max_lag: DEFAULT_MAX_LAG,
            unit_root: true,
            white: WhiteFlavor::Hc0,
            seed: 42,
        }
    }
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.modes.is_empty() {
            return bad("at least one expectation mode is required".into());
        }
        if self.effects.is_empty() {
            return bad("at least one effects kind is required".into());
        }
        if self.effects.contains(&Effects::TwoWay) {
            return bad("use `period_effects = true` instead of `twoway` in `effects`".into());
        }
        if has_duplicates(&self.modes) || has_duplicates(&self.effects) {
            return bad("`modes` and `effects` must not repeat entries".into());
        }
        if !(self.level > 0.0 && self.level < 0.5) {
            return bad(format!("level must lie in (0, 0.5), got {}", self.level));
        }
        if let Some(l) = self.hp.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return bad(format!("hp.lambda must be positive, got {l}"));
            }
        }
        self.hp
            .resolved_lambda()
            .map_err(|e| Error::Config(e.to_string()))?;
        for (name, c) in [
            ("cpi", self.log_shift.cpi),
            ("unemployment", self.log_shift.unemployment),
        ] {
            if let Some(c) = c {
                if !c.is_finite() {
                    return bad(format!("log_shift.{name} must be finite"));
                }
            }
        }
        Ok(())
    }
}

fn has_duplicates<T: PartialEq>(items: &[T]) -> bool {
    items
        .iter()
        .enumerate()
        .any(|(i, a)| items[..i].contains(a))
}
