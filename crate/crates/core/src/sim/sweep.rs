//! One oracle-mode run per value of a swept parameter.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::scenario::{validate, ScenarioConfig};

use super::predict::Predictor;
use super::run::{run, Baseline, Summary};
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Users,
    Uavs,
    Cache,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Users => "users",
            SweepParam::Uavs => "uavs",
            SweepParam::Cache => "cache",
        }
    }

    pub fn apply(self, cfg: &ScenarioConfig, value: usize) -> ScenarioConfig {
        let mut c = cfg.clone();
        match self {
            SweepParam::Users => c.num_users = value,
            SweepParam::Uavs => c.num_uavs = value,
            SweepParam::Cache => c.cache_size = value,
        }
        c
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "users" => Ok(SweepParam::Users),
            "uavs" => Ok(SweepParam::Uavs),
            "cache" => Ok(SweepParam::Cache),
            _ => Err(format!("unknown sweep parameter '{s}' (expected users, uavs or cache)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: usize,
    pub summary: Summary,
}

/// Parses a comma-separated list of nonnegative integers.
pub fn parse_values(text: &str) -> Result<Vec<usize>, String> {
    let values: Vec<usize> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<usize>().map_err(|e| format!("bad sweep value '{s}': {e}")))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("no sweep values given".into());
    }
    Ok(values)
}

/// Runs every value with the same seed. Values run in parallel; rows come
/// back in input order.
pub fn sweep(
    cfg: &ScenarioConfig,
    param: SweepParam,
    values: &[usize],
    baseline: Option<Baseline>,
) -> Result<Vec<SweepRow>, SimError> {
    if values.is_empty() {
        return Err(SimError::Sweep("no sweep values given".into()));
    }
    let configs: Vec<ScenarioConfig> = values.iter().map(|&v| param.apply(cfg, v)).collect();
    for (v, c) in values.iter().zip(&configs) {
        let bad = validate(c);
        if let Some(first) = bad.first() {
            return Err(SimError::Sweep(format!("{param}={v}: {}: {}", first.path, first.message)));
        }
    }
    configs
        .par_iter()
        .zip(values.par_iter())
        .map(|(c, &value)| Ok(SweepRow { param, value, summary: run(c, Predictor::Oracle, baseline)?.summary }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_parse() {
        assert_eq!(parse_values("3, 5,7"), Ok(vec![3, 5, 7]));
        assert!(parse_values("").is_err());
        assert!(parse_values("3,x").is_err());
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cfg = ScenarioConfig::desk();
        assert!(matches!(sweep(&cfg, SweepParam::Cache, &[1, 30], None), Err(SimError::Sweep(_))));
        assert!(matches!(sweep(&cfg, SweepParam::Uavs, &[], None), Err(SimError::Sweep(_))));
    }

    #[test]
    fn rows_follow_input_order() {
        let mut cfg = ScenarioConfig::desk();
        cfg.slots_per_cache_period = 4;
        cfg.intervals_per_slot = 10;
        let rows = sweep(&cfg, SweepParam::Cache, &[5, 1, 3], None).unwrap();
        assert_eq!(rows.iter().map(|r| r.value).collect::<Vec<_>>(), vec![5, 1, 3]);
        assert!(rows.iter().all(|r| r.summary.cache_size == r.value));
    }
}
