//! Deterministic simulator of a quality-controlled annotation pipeline:
//! worker pool, entrance exam, task assignment at fixed overlap, golden-set
//! and spam monitoring, reassignment on technical failure, and compensation
//! accounting.

mod sim;
mod worker;

pub use sim::{
    golden_monitor, simulate_project, spam_monitor, BlockReason, Ledger, LedgerEntry, SimEvent,
    SimOutput, SimStats, WorkerState, WorkerStatus,
};
pub use worker::{
    build_pool, run_exam, sample_worker_response, PoolConfig, SpeedProfile, WorkerModel,
    WorkerResponse,
};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which reading of the "two or more tasks in less than ten seconds" rule
/// applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpamRule {
    /// Two-or-more lifetime submissions, each faster than the limit.
    LifetimeCount,
    /// Two-or-more submissions completing inside one ten-second window.
    TimeWindow,
}

/// Quality-control and compensation parameters of an annotation project.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProjectConfig {
    /// Accepted annotations required per item.
    pub overlap: usize,
    /// Number of entrance-exam recordings.
    pub exam_size: usize,
    /// Admission bar: mean exam WER at or below this passes.
    pub exam_threshold: f64,
    /// Golden-history length the blocking rule looks at.
    pub golden_window: usize,
    /// Mean golden WER at or above this blocks, once the window is full.
    pub golden_threshold: f64,
    /// Fast submissions needed before the spam rule fires.
    pub spam_min_count: usize,
    /// A submission faster than this many seconds counts as fast.
    pub spam_duration_s: f64,
    /// Compensation per accepted task, in integer money units.
    pub pay_per_task: u64,
    /// Compensation per exam attempt, pass or fail.
    pub pay_exam: u64,
    /// Fraction of items treated as golden-set questions.
    pub golden_fraction: f64,
    pub spam_rule: SpamRule,
}

impl Default for ProjectConfig {
    fn default() -> Self {
        ProjectConfig {
            overlap: 7,
            exam_size: 10,
            exam_threshold: 0.40,
            golden_window: 5,
            golden_threshold: 0.35,
            spam_min_count: 2,
            spam_duration_s: 10.0,
            pay_per_task: 1,
            pay_exam: 10,
            golden_fraction: 1.0,
            spam_rule: SpamRule::LifetimeCount,
        }
    }
}

impl ProjectConfig {
    pub fn validate(&self) -> Result<()> {
        if self.overlap == 0 {
            return Err(Error::contract("overlap must be at least 1"));
        }
        if self.exam_size == 0 {
            return Err(Error::contract("exam_size must be at least 1"));
        }
        if self.golden_window == 0 {
            return Err(Error::contract("golden_window must be at least 1"));
        }
        if self.spam_min_count == 0 {
            return Err(Error::contract("spam_min_count must be at least 1"));
        }
        if self.spam_duration_s <= 0.0 {
            return Err(Error::contract("spam_duration_s must be positive"));
        }
        if self.exam_threshold < 0.0 || self.golden_threshold < 0.0 {
            return Err(Error::contract("thresholds must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.golden_fraction) {
            return Err(Error::contract("golden_fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Apply `key: value` overrides on top of the defaults.
    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut config = ProjectConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "overlap" => config.overlap = parse_field(key, value)?,
                "exam_size" => config.exam_size = parse_field(key, value)?,
                "exam_threshold" => config.exam_threshold = parse_field(key, value)?,
                "golden_window" => config.golden_window = parse_field(key, value)?,
                "golden_threshold" => config.golden_threshold = parse_field(key, value)?,
                "spam_min_count" => config.spam_min_count = parse_field(key, value)?,
                "spam_duration_s" => config.spam_duration_s = parse_field(key, value)?,
                "pay_per_task" => config.pay_per_task = parse_field(key, value)?,
                "pay_exam" => config.pay_exam = parse_field(key, value)?,
                "golden_fraction" => config.golden_fraction = parse_field(key, value)?,
                "spam_rule" => {
                    config.spam_rule = match value.as_str() {
                        "lifetime_count" => SpamRule::LifetimeCount,
                        "time_window" => SpamRule::TimeWindow,
                        other => {
                            return Err(Error::contract(format!(
                                "spam_rule: expected lifetime_count or time_window, got `{other}`"
                            )))
                        }
                    }
                }
                other => {
                    return Err(Error::contract(format!(
                        "unknown project config key `{other}`"
                    )))
                }
            }
        }
        config.validate()?;
        Ok(config)
    }
}

impl PoolConfig {
    /// Apply `key: value` overrides on top of the defaults.
    pub fn from_kv(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut config = PoolConfig::default();
        for (key, value) in map {
            match key.as_str() {
                "n_workers" => config.n_workers = parse_field(key, value)?,
                "spammer_fraction" => config.spammer_fraction = parse_field(key, value)?,
                "good_fraction" => config.good_fraction = parse_field(key, value)?,
                "mediocre_fraction" => config.mediocre_fraction = parse_field(key, value)?,
                "good_noise_lo" => config.good_noise.0 = parse_field(key, value)?,
                "good_noise_hi" => config.good_noise.1 = parse_field(key, value)?,
                "mediocre_noise_lo" => config.mediocre_noise.0 = parse_field(key, value)?,
                "mediocre_noise_hi" => config.mediocre_noise.1 = parse_field(key, value)?,
                "poor_noise_lo" => config.poor_noise.0 = parse_field(key, value)?,
                "poor_noise_hi" => config.poor_noise.1 = parse_field(key, value)?,
                "p_fail" => config.p_fail = parse_field(key, value)?,
                "task_speed_lo" => config.task_speed.0 = parse_field(key, value)?,
                "task_speed_hi" => config.task_speed.1 = parse_field(key, value)?,
                "spam_speed_lo" => config.spam_speed.0 = parse_field(key, value)?,
                "spam_speed_hi" => config.spam_speed.1 = parse_field(key, value)?,
                other => {
                    return Err(Error::contract(format!(
                        "unknown pool config key `{other}`"
                    )))
                }
            }
        }
        config.validate()?;
        Ok(config)
    }
}

fn parse_field<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::contract(format!("config key {key}: cannot parse `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid() {
        ProjectConfig::default().validate().unwrap();
        PoolConfig::default().validate().unwrap();
    }

    #[test]
    fn kv_overrides() {
        let mut map = BTreeMap::new();
        map.insert("overlap".to_string(), "3".to_string());
        map.insert("spam_rule".to_string(), "time_window".to_string());
        let config = ProjectConfig::from_kv(&map).unwrap();
        assert_eq!(config.overlap, 3);
        assert_eq!(config.spam_rule, SpamRule::TimeWindow);
        assert_eq!(config.exam_size, 10);
    }

    #[test]
    fn kv_rejects_unknown_keys() {
        let mut map = BTreeMap::new();
        map.insert("overlp".to_string(), "3".to_string());
        assert!(ProjectConfig::from_kv(&map).is_err());
    }
}
