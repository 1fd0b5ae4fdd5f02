//! `key = value` overrides for simulator, tree and Q-network defaults.

use std::path::Path;

use sparseflow::{DqnHyper, Feature, SimConfig, TreeParams};

use crate::CliError;

/// Every tunable the config file may set, starting from library defaults.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub sim: SimConfig,
    pub tree: TreeParams,
    pub dqn: DqnHyper,
}

pub const KEYS: &[&str] = &[
    "num_pes",
    "mem_block_rows",
    "resident_blocks",
    "miss_penalty_cycles",
    "max_depth",
    "min_samples_leaf",
    "feature_subset",
    "class_weights",
    "epsilon_start",
    "epsilon_decay",
    "epsilon_min",
    "replay_capacity",
    "batch_size",
    "learning_rate",
    "reward_weight",
    "episodes",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Blank lines and `#` comments are skipped; unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            cfg.set(k.trim(), v.trim())
                .map_err(|msg| CliError::Usage(format!("config line {}: {msg}", n + 1)))?;
        }
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value for {key}: `{v}`"))
        }
        match key {
            "num_pes" => self.sim.num_pes = num(key, value)?,
            "mem_block_rows" => self.sim.mem_block_rows = num(key, value)?,
            "resident_blocks" => self.sim.resident_blocks = num(key, value)?,
            "miss_penalty_cycles" => self.sim.miss_penalty_cycles = num(key, value)?,
            "max_depth" => self.tree.max_depth = num(key, value)?,
            "min_samples_leaf" => self.tree.min_samples_leaf = num(key, value)?,
            "feature_subset" => {
                self.tree.feature_subset = value
                    .split(',')
                    .map(|s| s.trim().parse::<Feature>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?;
            }
            "class_weights" => {
                self.tree.class_weights = if value == "balanced" {
                    None
                } else {
                    let w: Vec<f64> = value.split(',').map(|s| num(key, s.trim())).collect::<Result<_, _>>()?;
                    Some(
                        w.try_into()
                            .map_err(|_| "class_weights needs three values or `balanced`".to_string())?,
                    )
                };
            }
            "epsilon_start" => self.dqn.epsilon_start = num(key, value)?,
            "epsilon_decay" => self.dqn.epsilon_decay = num(key, value)?,
            "epsilon_min" => self.dqn.epsilon_min = num(key, value)?,
            "replay_capacity" => self.dqn.replay_capacity = num(key, value)?,
            "batch_size" => self.dqn.batch_size = num(key, value)?,
            "learning_rate" => self.dqn.learning_rate = num(key, value)?,
            "reward_weight" => self.dqn.reward_weight = num(key, value)?,
            "episodes" => self.dqn.episodes = num(key, value)?,
            _ => return Err(format!("unknown key `{key}` (known: {})", KEYS.join(", "))),
        }
        Ok(())
    }
}
