//! Defaults shared by every subcommand. `realq config` prints them; a JSON
//! file passed with `--config` may override any subset.

use std::path::Path;

use realq::moment::{PptMode, RelaxationLevel};
use realq::sdp::Tolerances;
use realq::search::{ScanConfig, SurveyConfig};
use realq::witness::OptimizerConfig;
use serde::{Deserialize, Serialize};

/// Environment variable read for the default worker count.
pub const THREADS_ENV: &str = "REALQ_THREADS";

/// Survey size used by `--full-scale`.
pub const FULL_SCALE_POINTS: usize = 40_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub level: RelaxationLevel,
    pub ppt: PptMode,
    pub use_symmetry: bool,
    pub optimizer: OptimizerConfig,
    pub tolerances: Tolerances,
    pub scan: ScanConfig,
    pub survey: SurveyConfig,
    /// Survey size when `--points` is not given.
    pub survey_points: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            level: RelaxationLevel::default(),
            ppt: PptMode::Summed,
            use_symmetry: true,
            optimizer: OptimizerConfig::default(),
            tolerances: Tolerances::default(),
            scan: ScanConfig::default(),
            survey: SurveyConfig::default(),
            survey_points: 400,
        }
    }
}

impl Config {
    pub fn load(path: Option<&Path>) -> Result<Self, String> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }
}
