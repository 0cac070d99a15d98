use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::corpus::CorpusConfig;
use crate::hypergraph::GedOptions;

/// Every tunable of the pipeline. Missing JSON keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub time_threshold_minutes: u64,
    pub bot_window_minutes: u64,
    pub bot_max_in_window: usize,
    pub loop_min_run: usize,
    pub ged_exact_size_limit: usize,
    pub ged_time_budget_ms: u64,
    pub hmm_alpha: f64,
    /// Similarity matrices stop at this percentile of session length.
    pub matrix_cap_percentile: f64,
    /// Fraction of sessions whose GED series is computed.
    pub ged_sample: f64,
    pub seed: u64,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            time_threshold_minutes: 60,
            bot_window_minutes: 30,
            bot_max_in_window: 30,
            loop_min_run: 4,
            ged_exact_size_limit: 8,
            ged_time_budget_ms: 2000,
            hmm_alpha: 1.0,
            matrix_cap_percentile: 95.0,
            ged_sample: 1.0,
            seed: 0,
            input: None,
            output: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let cfg: PipelineConfig = serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = [
            ("timeThresholdMinutes", self.time_threshold_minutes as f64),
            ("botWindowMinutes", self.bot_window_minutes as f64),
            ("botMaxInWindow", self.bot_max_in_window as f64),
            ("loopMinRun", self.loop_min_run as f64),
            ("gedExactSizeLimit", self.ged_exact_size_limit as f64),
            ("gedTimeBudgetMs", self.ged_time_budget_ms as f64),
            ("matrixCapPercentile", self.matrix_cap_percentile),
            ("gedSample", self.ged_sample),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PipelineError::Config(format!("{name} must be positive")));
            }
        }
        if self.matrix_cap_percentile > 100.0 {
            return Err(PipelineError::Config("matrixCapPercentile must be at most 100".into()));
        }
        if self.ged_sample > 1.0 {
            return Err(PipelineError::Config("gedSample must be at most 1".into()));
        }
        if !(self.hmm_alpha >= 0.0 && self.hmm_alpha.is_finite()) {
            return Err(PipelineError::Config("hmmAlpha must be nonnegative".into()));
        }
        if self.ged_exact_size_limit > 64 {
            return Err(PipelineError::Config("gedExactSizeLimit must be at most 64".into()));
        }
        Ok(())
    }

    pub fn corpus(&self) -> CorpusConfig {
        CorpusConfig {
            time_threshold_minutes: self.time_threshold_minutes,
            bot_window_minutes: self.bot_window_minutes,
            bot_max_in_window: self.bot_max_in_window,
            loop_min_run: self.loop_min_run,
        }
    }

    pub fn ged(&self) -> GedOptions {
        GedOptions {
            exact_size_limit: self.ged_exact_size_limit,
            time_budget: Duration::from_millis(self.ged_time_budget_ms),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_partial_json() {
        let d = PipelineConfig::default();
        assert_eq!(d.corpus(), CorpusConfig::default());
        assert_eq!(d.ged().exact_size_limit, 8);
        assert_eq!(d.ged().time_budget, Duration::from_millis(2000));
        let c = PipelineConfig::from_json(r#"{"timeThresholdMinutes": 30}"#).unwrap();
        assert_eq!(c.time_threshold_minutes, 30);
        assert_eq!(c.hmm_alpha, 1.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_json(r#"{"loopMinRun": 0}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"gedSample": 1.5}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"hmmAlpha": -1}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"timeThreshold": 5}"#).is_err());
    }
}
